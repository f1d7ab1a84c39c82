#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tihdp/checkpoint.hpp"
#include "tihdp/engine.hpp"
#include "tihdp/trainer.hpp"
#include "tihdp/verify.hpp"

using namespace tihdp;

namespace {

TrainConfig small_cfg(Variant variant, int robots, int light, int medium, int heavy) {
    TrainConfig cfg;
    cfg.run.scenario.robots = robots;
    cfg.run.scenario.light = light;
    cfg.run.scenario.medium = medium;
    cfg.run.scenario.heavy = heavy;
    cfg.run.obs.nearby_robots = robots > 1 ? 1 : 0;
    cfg.run.obs.nearby_objects = std::min(2, cfg.run.scenario.objects());
    cfg.layout.variant = variant;
    cfg.layout.obs = cfg.run.obs;
    cfg.layout.robots = robots;
    cfg.layout.objects = cfg.run.scenario.objects();
    cfg.layout.hidden = {16, 8};
    cfg.layout.lstm_hidden = 8;
    cfg.ppo.parallel_envs = 1;
    cfg.ppo.total_env_steps = 0;
    return cfg;
}

std::vector<EnvRuntime> fresh_envs(const TrainConfig& cfg, std::uint64_t seed) {
    std::vector<EnvRuntime> envs;
    for (int e = 0; e < cfg.ppo.parallel_envs; ++e)
        envs.push_back(make_env_runtime(cfg.run, cfg.layout, seed, e, 0));
    return envs;
}

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool params_identical(const ParamSet& a, const ParamSet& b) {
    bool same = true;
    a.visit([&](const std::string& name, const Tensor& t) {
        b.visit([&](const std::string& n2, const Tensor& t2) {
            if (n2 == name && t.v != t2.v) same = false;
        });
    });
    return same;
}

}  // namespace

TEST_CASE("gae matches hand-evaluated recursions") {
    double adv[2], ret[2];

    {
        double r[] = {1.0}, v[] = {0.0};
        std::uint8_t d[] = {1};
        compute_gae(r, v, d, 1, 0.99, 0.95, 7.0, adv, ret);
        CHECK(adv[0] == doctest::Approx(1.0));
        CHECK(ret[0] == doctest::Approx(1.0));
    }

    {
        double r[] = {1.0, 1.0}, v[] = {0.5, 0.5};
        std::uint8_t d[] = {0, 1};
        compute_gae(r, v, d, 2, 0.99, 0.95, 0.0, adv, ret);
        CHECK(adv[1] == doctest::Approx(0.5));
        CHECK(adv[0] == doctest::Approx(1.46525));
        CHECK(ret[0] == doctest::Approx(1.96525));
        CHECK(ret[1] == doctest::Approx(1.0));
    }

    {
        // A non-terminal tail discounts the bootstrap value.
        double r[] = {0.0}, v[] = {0.0};
        std::uint8_t d[] = {0};
        compute_gae(r, v, d, 1, 0.99, 0.95, 2.0, adv, ret);
        CHECK(adv[0] == doctest::Approx(1.98));
    }

    {
        // Lambda 0 reduces each advantage to its one-step delta.
        double r[] = {0.3, -0.2}, v[] = {0.1, 0.4};
        std::uint8_t d[] = {0, 0};
        compute_gae(r, v, d, 2, 0.9, 0.0, 1.5, adv, ret);
        CHECK(adv[1] == doctest::Approx(-0.2 + 0.9 * 1.5 - 0.4));
        CHECK(adv[0] == doctest::Approx(0.3 + 0.9 * 0.4 - 0.1));
    }
}

TEST_CASE("gae agrees with the quadratic reference on random sequences") {
    for (const OracleResult& res : {run_gae_oracle(100, 0), run_gae_oracle(100, 17)}) {
        INFO(res.detail);
        CHECK(res.pass);
        CHECK(res.worst <= 1e-10);
    }
}

TEST_CASE("clipped surrogate takes the right branch") {
    Surrogate a = clipped_surrogate(1.5, 1.0, 0.2);
    CHECK(a.value == doctest::Approx(1.2));
    CHECK(a.dlogp_coef == 0.0);

    Surrogate b = clipped_surrogate(0.5, -1.0, 0.2);
    CHECK(b.value == doctest::Approx(-0.8));
    CHECK(b.dlogp_coef == 0.0);

    Surrogate c = clipped_surrogate(1.1, 2.0, 0.2);
    CHECK(c.value == doctest::Approx(2.2));
    CHECK(c.dlogp_coef == doctest::Approx(2.2));

    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
        double ratio = std::exp(rng.normal());
        double adv = rng.normal();
        Surrogate s = clipped_surrogate(ratio, adv, 0.2);
        double clipped = std::min(std::max(ratio, 0.8), 1.2) * adv;
        CHECK(s.value <= std::max(ratio * adv, clipped) + 1e-12);
        CHECK(s.value == doctest::Approx(std::min(ratio * adv, clipped)));
    }
}

TEST_CASE("a 400-step rollout for 3 robots holds 1200 transitions") {
    TrainConfig cfg = small_cfg(Variant::TihdpWithCom, 3, 2, 1, 0);
    std::vector<EnvRuntime> envs = fresh_envs(cfg, 5);
    RolloutBuffer buf;
    collect_rollouts(envs, cfg, init_params(cfg.layout, 5), 5, 400, buf);

    CHECK(buf.steps == 400);
    CHECK(buf.envs == 1);
    CHECK(buf.robots == 3);
    CHECK(buf.hi_logp.size() == 1200);
    CHECK(buf.lo_logp.size() == 1200);
    CHECK(buf.hi_act.size() == 1200 * static_cast<std::size_t>(buf.hi_act_width));
    CHECK(buf.lo_act.size() == 2400);
    CHECK(buf.hi_rew.size() == 400);
    CHECK(buf.done.size() == 400);

    // The episode boundary lands exactly on the horizon.
    for (int t = 0; t < 399; ++t) CHECK(buf.done[buf.env_step_index(t, 0)] == 0);
    CHECK(buf.done[buf.env_step_index(399, 0)] == 1);
    CHECK(buf.episode_hi_returns.size() == 1);
    CHECK(envs[0].episode_index == 1);

    // Chunks tile each robot's 400 steps without gaps.
    std::vector<int> covered(3, 0);
    for (const auto& ch : buf.chunks) {
        CHECK(ch.len <= cfg.ppo.bptt_chunk);
        covered[static_cast<std::size_t>(ch.robot)] += ch.len;
    }
    for (int r = 0; r < 3; ++r) CHECK(covered[static_cast<std::size_t>(r)] == 400);
}

TEST_CASE("collection is deterministic for a fixed seed") {
    TrainConfig cfg = small_cfg(Variant::TihdpWithCom, 2, 1, 1, 0);
    cfg.ppo.parallel_envs = 2;
    ParamSet params = init_params(cfg.layout, 3);

    RolloutBuffer a, b;
    std::vector<EnvRuntime> ea = fresh_envs(cfg, 11);
    std::vector<EnvRuntime> eb = fresh_envs(cfg, 11);
    collect_rollouts(ea, cfg, params, 11, 60, a);
    collect_rollouts(eb, cfg, params, 11, 60, b);

    CHECK(a.hi_obs == b.hi_obs);
    CHECK(a.hi_act == b.hi_act);
    CHECK(a.hi_logp == b.hi_logp);
    CHECK(a.lo_act == b.lo_act);
    CHECK(a.lo_rew == b.lo_rew);
    CHECK(a.hi_rew == b.hi_rew);
    CHECK(a.gstate == b.gstate);
    CHECK(a.done == b.done);

    RolloutBuffer c;
    std::vector<EnvRuntime> ec = fresh_envs(cfg, 12);
    collect_rollouts(ec, cfg, params, 12, 60, c);
    CHECK(a.hi_obs != c.hi_obs);
}

TEST_CASE("without-com runs force the request and response bits to zero") {
    TrainConfig cfg = small_cfg(Variant::TihdpWithoutCom, 2, 1, 1, 0);
    std::vector<EnvRuntime> envs = fresh_envs(cfg, 7);
    ParamSet params = init_params(cfg.layout, 7);
    RolloutBuffer buf;
    collect_rollouts(envs, cfg, params, 7, 40, buf);

    int k = cfg.run.obs.nearby_objects;
    REQUIRE(buf.hi_act_width == k + 2);
    for (std::size_t row = 0; row < buf.hi_logp.size(); ++row) {
        CHECK(buf.hi_act[row * static_cast<std::size_t>(buf.hi_act_width) + k] == 0);
        CHECK(buf.hi_act[row * static_cast<std::size_t>(buf.hi_act_width) + k + 1] == 0);
    }

    EnvRuntime env = make_env_runtime(cfg.run, cfg.layout, 9, 0, 0);
    for (int t = 0; t < 10; ++t) {
        EnvStepRecord rec = engine_step(env, cfg.run, params, false);
        for (const RobotStepRecord& r : rec.robots) {
            CHECK(r.alpha == 0);
            CHECK(r.beta == 0);
        }
    }
}

TEST_CASE("completed objects leave no team reward on later steps") {
    TrainConfig cfg = small_cfg(Variant::TihdpWithCom, 2, 2, 0, 0);
    EnvRuntime env = make_env_runtime(cfg.run, cfg.layout, 21, 0, 0);
    ParamSet params = init_params(cfg.layout, 21);
    for (auto& obj : env.world.objects) {
        obj.position = obj.goal;
        obj.completed = true;
    }
    for (int t = 0; t < 5; ++t) {
        EnvStepRecord rec = engine_step(env, cfg.run, params, false);
        CHECK(rec.team_reward == 0.0);
        for (const RobotStepRecord& r : rec.robots) CHECK(r.target == -1);
    }
}

TEST_CASE("a zero learning rate leaves parameters bit-identical") {
    TrainConfig cfg = small_cfg(Variant::TihdpWithCom, 2, 1, 1, 0);
    cfg.ppo.learning_rate = 0.0;
    cfg.ppo.minibatches = 2;
    std::vector<EnvRuntime> envs = fresh_envs(cfg, 4);
    ParamSet params = init_params(cfg.layout, 4);
    ParamSet before = params;
    AdamState adam = make_adam_state(params);
    RolloutBuffer buf;
    collect_rollouts(envs, cfg, params, 4, 40, buf);

    Rng order(1);
    TrainReport rep = ppo_update(params, adam, buf, cfg.ppo, order);
    CHECK(!rep.aborted);
    CHECK(rep.hi_samples > 0);
    CHECK(rep.lo_samples > 0);
    CHECK(params_identical(params, before));
}

TEST_CASE("non-finite losses roll the update back") {
    TrainConfig cfg = small_cfg(Variant::TihdpWithCom, 2, 1, 1, 0);
    cfg.ppo.minibatches = 2;
    std::vector<EnvRuntime> envs = fresh_envs(cfg, 6);
    ParamSet params = init_params(cfg.layout, 6);
    RolloutBuffer buf;
    collect_rollouts(envs, cfg, params, 6, 40, buf);

    params.hi_actor.head.b(0, 0) = std::nan("");
    ParamSet poisoned = params;
    AdamState adam = make_adam_state(params);

    Rng order(1);
    TrainReport rep = ppo_update(params, adam, buf, cfg.ppo, order);
    CHECK(rep.aborted);
    CHECK(!rep.abort_reason.empty());
    CHECK(adam.step_hi == 0);
    bool restored = true;
    params.visit([&](const std::string& name, const Tensor& t) {
        poisoned.visit([&](const std::string& n2, const Tensor& t2) {
            if (n2 != name) return;
            for (std::size_t i = 0; i < t.v.size(); ++i) {
                bool eq = t.v[i] == t2.v[i] || (std::isnan(t.v[i]) && std::isnan(t2.v[i]));
                if (!eq) restored = false;
            }
        });
    });
    CHECK(restored);
}

TEST_CASE("an update moves parameters and reports sample counts") {
    TrainConfig cfg = small_cfg(Variant::TihdpWithCom, 2, 1, 1, 0);
    cfg.ppo.minibatches = 2;
    cfg.ppo.epochs = 2;
    std::vector<EnvRuntime> envs = fresh_envs(cfg, 8);
    ParamSet params = init_params(cfg.layout, 8);
    ParamSet before = params;
    AdamState adam = make_adam_state(params);
    RolloutBuffer buf;
    collect_rollouts(envs, cfg, params, 8, 64, buf);

    Rng order(3);
    TrainReport rep = ppo_update(params, adam, buf, cfg.ppo, order);
    CHECK(!rep.aborted);
    CHECK(rep.hi_samples == 2 * 64 * 2);
    CHECK(!params_identical(params, before));
    CHECK(adam.step_hi == 4);
    CHECK(adam.step_lo == 4);

    bool f32_clean = true;
    params.visit([&](const std::string&, const Tensor& t) {
        for (double x : t.v)
            if (x != f32_exact(x)) f32_clean = false;
    });
    CHECK(f32_clean);
}

TEST_CASE("resuming from a checkpoint reproduces the uninterrupted run") {
    TrainConfig cfg = small_cfg(Variant::TihdpWithCom, 1, 1, 0, 0);
    cfg.run.obs.nearby_robots = 0;
    cfg.run.obs.nearby_objects = 1;
    cfg.layout.obs = cfg.run.obs;
    cfg.run.scenario.episode_length = 40;
    cfg.ppo.parallel_envs = 2;
    cfg.ppo.minibatches = 2;
    cfg.ppo.checkpoint_interval = 1;
    cfg.ppo.total_env_steps = 240;  // 3 updates of 40 steps x 2 envs

    namespace fs = std::filesystem;
    fs::path base = fs::temp_directory_path() / "tihdp_resume_test";
    fs::remove_all(base);
    nlohmann::ordered_json rc = {{"note", "resume-test"}};

    TrainOptions full;
    full.seed = 42;
    full.out_dir = (base / "full").string();
    TrainSummary s_full = train_run(cfg, rc, full, nullptr);
    CHECK(s_full.env_steps == 240);
    CHECK(s_full.updates == 3);

    TrainConfig cfg1 = cfg;
    cfg1.ppo.total_env_steps = 80;  // stop after the first update
    TrainOptions part;
    part.seed = 42;
    part.out_dir = (base / "part").string();
    TrainSummary s_part = train_run(cfg1, rc, part, nullptr);
    CHECK(s_part.updates == 1);

    TrainOptions rest;
    rest.seed = 42;
    rest.out_dir = (base / "rest").string();
    rest.resume_path = s_part.final_checkpoint;
    TrainSummary s_rest = train_run(cfg, rc, rest, nullptr);
    CHECK(s_rest.updates == 3);

    CHECK(file_bytes(s_full.final_checkpoint) == file_bytes(s_rest.final_checkpoint));
    fs::remove_all(base);
}
