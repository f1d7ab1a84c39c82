#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tihdp/config.hpp"
#include "tihdp/eval.hpp"
#include "tihdp/render.hpp"
#include "tihdp/trainer.hpp"
#include "tihdp/verify.hpp"

namespace {

using namespace tihdp;

void apply_scenario_overrides(ScenarioConfig& sc, int robots, int light, int medium, int heavy) {
    if (robots >= 0) sc.robots = robots;
    if (light >= 0) sc.light = light;
    if (medium >= 0) sc.medium = medium;
    if (heavy >= 0) sc.heavy = heavy;
}

void emit_report(const EvalReport& report, const std::string& out_path) {
    std::string body = report.to_json().dump(2);
    if (out_path.empty()) {
        std::cout << body << "\n";
    } else {
        std::ofstream os(out_path, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot write " + out_path);
        os << body << "\n";
        std::cout << "report: " << out_path << "\n";
    }
    if (!report.applicable) {
        std::cout << "not applicable: " << report.reason << " (COR=- TOCR=-)\n";
        return;
    }
    char line[160];
    std::snprintf(line, sizeof(line),
                  "%s N=%d %dL/%dM/%dH episodes=%d COR=%.4f TOCR=%.4f mean_hi_return=%.4f",
                  report.policy.c_str(), report.scenario.robots, report.scenario.light,
                  report.scenario.medium, report.scenario.heavy, report.episodes, report.cor,
                  report.tocr, report.mean_hi_return);
    std::cout << line << "\n";
}

int cmd_train(const std::string& config_path, std::uint64_t seed, const std::string& out_dir,
              const std::string& resume) {
    TrainConfig cfg = load_config_file(config_path);
    TrainOptions opts;
    opts.seed = seed;
    opts.out_dir = out_dir;
    opts.resume_path = resume;
    TrainSummary summary = train_run(cfg, resolved_config(cfg), opts, &std::cout);
    std::cout << "trained " << summary.env_steps << " env steps over " << summary.updates
              << " updates\n"
              << "checkpoint: " << summary.final_checkpoint << "\n"
              << "metrics: " << summary.metrics_path << "\n";
    return 0;
}

int cmd_eval(const std::string& policy, const std::string& checkpoint_path,
             const std::string& config_path, int robots, int light, int medium, int heavy,
             const EvalOptions& opts, const std::string& out_path) {
    EvalReport report;
    if (policy == "checkpoint") {
        if (checkpoint_path.empty())
            throw std::runtime_error("--policy checkpoint requires --checkpoint");
        Checkpoint ck = load_checkpoint(checkpoint_path);
        TrainConfig cfg = parse_config(ck.config);
        ScenarioConfig scenario = cfg.run.scenario;
        apply_scenario_overrides(scenario, robots, light, medium, heavy);
        report = evaluate_checkpoint(ck, scenario, opts);
    } else if (policy == "scripted" || policy == "random") {
        if (config_path.empty())
            throw std::runtime_error("--policy " + policy + " requires --config");
        TrainConfig cfg = load_config_file(config_path);
        apply_scenario_overrides(cfg.run.scenario, robots, light, medium, heavy);
        cfg.run.scenario.validate();
        report = policy == "scripted" ? evaluate_scripted(cfg.run, opts)
                                      : evaluate_random(cfg.run, cfg.layout, opts);
    } else {
        throw std::runtime_error("unknown --policy: " + policy);
    }
    emit_report(report, out_path);
    return 0;
}

int cmd_replay(const std::string& log_path, const std::string& out_dir, int window) {
    Trajectory traj = read_trajectory(log_path);
    RenderResult result = replay_render(traj, out_dir, window);
    if (!result.warning.empty()) std::cerr << "warning: " << result.warning << "\n";
    for (const auto& f : result.files) std::cout << f << "\n";
    return 0;
}

int cmd_describe(const std::string& config_path, const std::string& checkpoint_path) {
    NetLayout layout;
    double k_phi = 0.0;
    if (!checkpoint_path.empty()) {
        Checkpoint ck = load_checkpoint(checkpoint_path);
        layout = ck.params.layout;
        k_phi = parse_config(ck.config).run.k_phi;
    } else {
        TrainConfig cfg = load_config_file(config_path);
        layout = cfg.layout;
        k_phi = cfg.run.k_phi;
    }
    ParamSet params = make_params(layout);
    std::cout << "variant: " << variant_name(layout.variant) << "\n"
              << "layout: " << layout.tag() << "\n"
              << "observations: " << layout.obs.layout_tag() << "\n"
              << "hi actor: " << layout.hi_input_dim() << " -> " << layout.hi_head_dim()
              << (layout.hi_categorical() ? " (categorical)" : " (bernoulli bits)") << "\n"
              << "lo actor: " << layout.lo_input_dim() << " -> 3+3\n"
              << "hi critic input: " << layout.hi_critic_dim() << "\n"
              << "lo critic input: " << layout.lo_critic_dim() << "\n"
              << "k_phi: " << k_phi << "\n"
              << "parameters: " << params.scalar_count() << "\n";
    return 0;
}

int cmd_oracle_check(std::uint64_t seed) {
    std::vector<OracleResult> results;
    results.push_back(run_priority_oracle(10000, seed));
    results.push_back(run_gae_oracle(100, seed));
    for (auto& r : run_gradient_checks(seed)) results.push_back(r);
    bool all = true;
    for (const auto& r : results) {
        all = all && r.pass;
        char line[256];
        std::snprintf(line, sizeof(line), "%s %-28s worst %.3e (limit %.0e) %s",
                      r.pass ? "PASS" : "FAIL", r.name.c_str(), r.worst, r.limit,
                      r.detail.c_str());
        std::cout << line << "\n";
    }
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tihdp: multi-robot cooperative transport simulator and trainer"};
    app.require_subcommand(1);

    auto* train = app.add_subcommand("train", "train a policy variant from a config file");
    std::string train_config, train_out, train_resume;
    std::uint64_t train_seed = 0;
    train->add_option("--config", train_config, "run configuration file")->required();
    train->add_option("--out", train_out, "output directory")->required();
    train->add_option("--seed", train_seed, "master seed");
    train->add_option("--resume", train_resume, "checkpoint to continue from");

    auto* eval = app.add_subcommand("eval", "evaluate a policy over seeded episodes");
    std::string eval_policy = "checkpoint", eval_ckpt, eval_config, eval_out, eval_traj_dir;
    int eval_robots = -1, eval_light = -1, eval_medium = -1, eval_heavy = -1;
    EvalOptions eval_opts;
    eval->add_option("--policy", eval_policy, "checkpoint | scripted | random");
    eval->add_option("--checkpoint", eval_ckpt, "trained checkpoint file");
    eval->add_option("--config", eval_config, "config file (scripted/random policies)");
    eval->add_option("--robots", eval_robots, "override robot count");
    eval->add_option("--light", eval_light, "override light object count");
    eval->add_option("--medium", eval_medium, "override medium object count");
    eval->add_option("--heavy", eval_heavy, "override heavy object count");
    eval->add_option("--episodes", eval_opts.episodes, "episode count");
    eval->add_option("--seed-base", eval_opts.seed_base, "first episode seed");
    eval->add_option("--traj-dir", eval_traj_dir, "directory for trajectory logs");
    eval->add_option("--traj-episodes", eval_opts.traj_episodes, "log the first k episodes");
    eval->add_flag("--sample", eval_opts.sample_actions, "sample actions instead of greedy");
    eval->add_option("--out", eval_out, "write the report here instead of stdout");

    auto* replay = app.add_subcommand("replay", "render a trajectory log as SVG figures");
    std::string replay_log, replay_out;
    int replay_window = 100;
    replay->add_option("--log", replay_log, "trajectory log file")->required();
    replay->add_option("--out", replay_out, "output directory")->required();
    replay->add_option("--window", replay_window, "steps per trajectory figure");

    auto* describe = app.add_subcommand("describe-layout", "print network dimensions");
    std::string desc_config, desc_ckpt;
    describe->add_option("--config", desc_config, "config file");
    describe->add_option("--checkpoint", desc_ckpt, "checkpoint file");

    auto* oracle = app.add_subcommand("oracle-check", "run the equation/GAE/gradient oracles");
    std::uint64_t oracle_seed = 0;
    oracle->add_option("--seed", oracle_seed, "randomization seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) return cmd_train(train_config, train_seed, train_out, train_resume);
        if (*eval) {
            eval_opts.traj_dir = eval_traj_dir;
            return cmd_eval(eval_policy, eval_ckpt, eval_config, eval_robots, eval_light,
                            eval_medium, eval_heavy, eval_opts, eval_out);
        }
        if (*replay) return cmd_replay(replay_log, replay_out, replay_window);
        if (*describe) {
            if (desc_config.empty() == desc_ckpt.empty()) {
                std::cerr << "describe-layout needs exactly one of --config, --checkpoint\n";
                return 2;
            }
            return cmd_describe(desc_config, desc_ckpt);
        }
        if (*oracle) return cmd_oracle_check(oracle_seed);
    } catch (const tihdp::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
