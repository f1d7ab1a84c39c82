#include "tihdp/eval.hpp"

#include <cstdio>
#include <filesystem>

#include "tihdp/config.hpp"
#include "tihdp/scripted.hpp"
#include "tihdp/trajlog.hpp"

namespace tihdp {

nlohmann::ordered_json EvalReport::to_json() const {
    nlohmann::ordered_json j;
    j["applicable"] = applicable;
    if (!applicable) {
        j["reason"] = reason;
        j["policy"] = policy;
        j["cor"] = "-";
        j["tocr"] = "-";
        return j;
    }
    j["policy"] = policy;
    j["scenario"] = {{"robots", scenario.robots},
                     {"light", scenario.light},
                     {"medium", scenario.medium},
                     {"heavy", scenario.heavy}};
    j["episodes"] = episodes;
    j["cor"] = cor;
    j["tocr"] = tocr;
    j["mean_hi_return"] = mean_hi_return;
    nlohmann::ordered_json rows_j = nlohmann::ordered_json::array();
    for (const auto& r : rows)
        rows_j.push_back({{"seed", r.seed},
                          {"transportable", r.transportable},
                          {"delivered", r.delivered},
                          {"fraction", r.fraction},
                          {"all_delivered", r.all_delivered},
                          {"hi_return", r.hi_return}});
    j["rows"] = rows_j;
    if (!traj_paths.empty()) j["trajectories"] = traj_paths;
    return j;
}

namespace {

EnvRuntime make_eval_env(const RunSpec& spec, const NetLayout& layout, std::uint64_t seed) {
    EnvRuntime env;
    env.world = world_reset(spec.scenario, seed);
    env.action_rng = Rng(Rng::derive(seed, 0, 0, kStreamActions));
    int n = spec.scenario.robots;
    if (variant_uses_priorities(layout.variant)) {
        env.priorities.assign(
            n, PriorityVector::uniform(static_cast<int>(env.world.objects.size()), spec.k_phi, 0));
        for (int i = 0; i < n; ++i) env.priorities[i].owner = i;
    }
    env.hi_state.assign(n, LstmState::zeros(layout.lstm_hidden));
    env.episode_lo_return.assign(n, 0.0);
    return env;
}

// Scripted decisions wrapped into the same step record the engine produces,
// so trajectory logging and metrics share one path.
EnvStepRecord scripted_step(EnvRuntime& env, const RunSpec& spec) {
    const ScenarioConfig& sc = spec.scenario;
    int n = sc.robots;
    EnvStepRecord rec;
    rec.global_state.clear();
    rec.robots.resize(n);
    std::vector<ScriptedDecision> decisions = scripted_policy_all(env.world, sc);
    std::vector<Command> commands(n);
    for (int i = 0; i < n; ++i) {
        rec.robots[i].target = decisions[i].target;
        rec.robots[i].move_index = decisions[i].command.move + 1;
        rec.robots[i].turn_index = decisions[i].command.turn + 1;
        rec.robots[i].lo_valid = decisions[i].target >= 0;
        commands[i] = decisions[i].command;
    }
    rec.stats = world_step(env.world, sc, commands);
    rec.team_reward = team_reward(env.world, sc);
    env.episode_hi_return += rec.team_reward;
    for (int i = 0; i < n; ++i) {
        if (rec.robots[i].lo_valid) {
            rec.robots[i].lo_reward = robot_low_reward(env.world, sc, i, rec.robots[i].target);
            env.episode_lo_return[i] += rec.robots[i].lo_reward;
        }
    }
    rec.episode_end = env.world.step_index >= sc.episode_length;
    return rec;
}

struct EpisodeRunner {
    const RunSpec& spec;
    const NetLayout& layout;
    const ParamSet* params;  // null: scripted
    bool greedy = true;
};

EvalReport run_episodes(const EpisodeRunner& runner, const std::string& policy_label,
                        const std::string& layout_tag, const EvalOptions& opts) {
    EvalReport report;
    report.policy = policy_label;
    report.scenario = runner.spec.scenario;
    report.episodes = opts.episodes;

    if (!opts.traj_dir.empty() && opts.traj_episodes > 0)
        std::filesystem::create_directories(opts.traj_dir);

    double frac_sum = 0.0, ret_sum = 0.0;
    int all_count = 0;
    for (int k = 0; k < opts.episodes; ++k) {
        std::uint64_t seed = opts.seed_base + static_cast<std::uint64_t>(k);
        EnvRuntime env = make_eval_env(runner.spec, runner.layout, seed);

        TrajectoryWriter writer;
        bool log_this = !opts.traj_dir.empty() && k < opts.traj_episodes;
        if (log_this) {
            char name[64];
            std::snprintf(name, sizeof(name), "episode_%05d.jsonl", k);
            std::string path = opts.traj_dir + "/" + name;
            writer.open(path, layout_tag, policy_label, seed, runner.spec.scenario, env.world);
            report.traj_paths.push_back(path);
        }

        for (int t = 0; t < runner.spec.scenario.episode_length; ++t) {
            EnvStepRecord rec = runner.params
                                    ? engine_step(env, runner.spec, *runner.params, runner.greedy)
                                    : scripted_step(env, runner.spec);
            if (log_this) writer.write_step(rec, env.world);
        }
        if (log_this) writer.close();

        EpisodeRow row;
        row.seed = seed;
        for (const auto& o : env.world.objects) {
            if (o.weight_class == WeightClass::Heavy) continue;
            ++row.transportable;
            if (o.completed) ++row.delivered;
        }
        row.fraction = row.transportable > 0
                           ? static_cast<double>(row.delivered) / row.transportable
                           : 1.0;
        row.all_delivered = row.delivered == row.transportable;
        row.hi_return = env.episode_hi_return;
        frac_sum += row.fraction;
        ret_sum += row.hi_return;
        if (row.all_delivered) ++all_count;
        report.rows.push_back(row);
    }
    if (opts.episodes > 0) {
        report.cor = frac_sum / opts.episodes;
        report.tocr = static_cast<double>(all_count) / opts.episodes;
        report.mean_hi_return = ret_sum / opts.episodes;
    }
    return report;
}

}  // namespace

EvalReport evaluate_checkpoint(const Checkpoint& ck, const ScenarioConfig& scenario,
                               const EvalOptions& opts) {
    TrainConfig train_cfg = parse_config(ck.config);
    RunSpec spec = train_cfg.run;
    spec.scenario.robots = scenario.robots;
    spec.scenario.light = scenario.light;
    spec.scenario.medium = scenario.medium;
    spec.scenario.heavy = scenario.heavy;
    spec.scenario.validate();

    CompatResult compat = layout_compatible(ck.params.layout, spec.scenario, spec.obs);
    if (!compat.ok) {
        EvalReport report;
        report.applicable = false;
        report.reason = compat.reason;
        report.policy = variant_name(ck.params.layout.variant);
        report.scenario = spec.scenario;
        return report;
    }

    EpisodeRunner runner{spec, ck.params.layout, &ck.params, !opts.sample_actions};
    return run_episodes(runner, variant_name(ck.params.layout.variant), ck.params.layout.tag(),
                        opts);
}

EvalReport evaluate_scripted(const RunSpec& spec, const EvalOptions& opts) {
    NetLayout dummy;
    dummy.variant = Variant::TihdpWithCom;
    dummy.obs = spec.obs;
    dummy.robots = spec.scenario.robots;
    dummy.objects = spec.scenario.objects();
    EpisodeRunner runner{spec, dummy, nullptr, true};
    return run_episodes(runner, "scripted", "scripted", opts);
}

EvalReport evaluate_random(const RunSpec& spec, NetLayout layout, const EvalOptions& opts) {
    layout.robots = spec.scenario.robots;
    layout.objects = spec.scenario.objects();
    ParamSet params = init_params(layout, 0);
    EpisodeRunner runner{spec, params.layout, &params, false};
    return run_episodes(runner, std::string("random:") + variant_name(layout.variant),
                        params.layout.tag(), opts);
}

}  // namespace tihdp
