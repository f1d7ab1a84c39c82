#include "tihdp/engine.hpp"

#include <sstream>
#include <stdexcept>

namespace tihdp {

EnvRuntime make_env_runtime(const RunSpec& spec, const NetLayout& layout, std::uint64_t master_seed,
                            int env_id, std::int64_t episode_index) {
    EnvRuntime env;
    std::uint64_t eid = static_cast<std::uint64_t>(env_id);
    std::uint64_t ep = static_cast<std::uint64_t>(episode_index);
    env.world = world_reset(spec.scenario, Rng::derive(master_seed, eid, ep, kStreamWorld));
    env.action_rng = Rng(Rng::derive(master_seed, eid, ep, kStreamActions));
    env.episode_index = episode_index;
    int n = spec.scenario.robots;
    if (variant_uses_priorities(layout.variant)) {
        env.priorities.assign(
            n, PriorityVector::uniform(static_cast<int>(env.world.objects.size()), spec.k_phi, 0));
        for (int i = 0; i < n; ++i) env.priorities[i].owner = i;
    }
    env.hi_state.assign(n, LstmState::zeros(layout.lstm_hidden));
    env.episode_lo_return.assign(n, 0.0);
    env.episode_hi_return = 0.0;
    return env;
}

namespace {

// Baseline target selection from a categorical action.
int baseline_target(Variant variant, int action, const WorldState& world,
                    const NearestEntities& near) {
    if (variant == Variant::TwoLayeredGlobal) {
        if (action < 0 || action >= static_cast<int>(world.objects.size())) return -1;
        return world.objects[action].completed ? -1 : action;
    }
    // local baseline: action indexes the K nearest-object slots
    if (action < 0 || action >= static_cast<int>(near.object_ids.size())) return -1;
    return near.object_ids[action];  // -1 padding handled by caller
}

}  // namespace

EnvStepRecord engine_step(EnvRuntime& env, const RunSpec& spec, const ParamSet& params, bool greedy) {
    const NetLayout& layout = params.layout;
    const ScenarioConfig& sc = spec.scenario;
    int n = sc.robots;
    int m = static_cast<int>(env.world.objects.size());
    int k = spec.obs.nearby_objects;
    bool hierarchical = variant_uses_priorities(layout.variant);

    EnvStepRecord rec;
    rec.global_state = build_global_state(env.world);
    rec.robots.resize(n);

    // hi decisions for every robot, in robot order
    std::vector<NearestEntities> near(n);
    std::vector<RobotSignals> signals(n);
    for (int i = 0; i < n; ++i) {
        RobotStepRecord& r = rec.robots[i];
        if (layout.variant == Variant::TwoLayeredGlobal) {
            r.hi_obs = build_baseline_obs(env.world, i, BaselineVariant::Global, spec.obs);
            near[i] = nearest_entities(env.world, i, spec.obs.nearby_robots, k);
        } else {
            r.hi_obs = build_high_obs(env.world, i, spec.obs, &near[i]);
        }
        HiStepResult out = hi_actor_step(params, r.hi_obs, env.hi_state[i]);

        if (hierarchical) {
            std::vector<int> bits = greedy ? bernoulli_mode(out.logits)
                                           : bernoulli_sample(out.logits, env.action_rng);
            if (layout.variant == Variant::TihdpWithoutCom) {
                bits[k] = 0;
                bits[k + 1] = 0;
            }
            r.hi_action = bits;
            int count = layout.variant == Variant::TihdpWithoutCom ? k : k + 2;
            r.hi_logprob = bernoulli_logprob(out.logits, bits, count);
            r.alpha = bits[k];
            r.beta = bits[k + 1];
            signals[i].alpha = r.alpha;
            signals[i].beta = r.beta;
            // requests refer to the target under the current (pre-update) priorities
            std::optional<int> cur = select_target(env.priorities[i]);
            signals[i].target = cur.value_or(-1);
        } else {
            int a = greedy ? categorical_mode(out.logits) : categorical_sample(out.logits, env.action_rng);
            r.hi_action = {a};
            r.hi_logprob = categorical_logprob(out.logits, a);
            r.target = baseline_target(layout.variant, a, env.world, near[i]);
        }
    }

    if (hierarchical) {
        CommResult comm;
        if (layout.variant == Variant::TihdpWithCom) {
            comm = comm_round(signals, m);
        } else {
            comm.request_sums.assign(m, 0.0);
            comm.sigma.assign(n, 0);
        }
        std::vector<bool> completed(m);
        for (int l = 0; l < m; ++l) completed[l] = env.world.objects[l].completed;
        for (int i = 0; i < n; ++i) {
            RobotStepRecord& r = rec.robots[i];
            std::vector<int> c_local(k);
            for (int s = 0; s < k; ++s) c_local[s] = r.hi_action[s] ? 1 : -1;
            std::vector<double> c_bar = map_local_ops(c_local, near[i].object_ids, m);
            env.priorities[i] =
                update_priorities(env.priorities[i], c_bar, comm.sigma[i], comm.request_sums, completed);
            r.priorities = env.priorities[i].phi;
            r.target = select_target(env.priorities[i]).value_or(-1);
        }
    }

    // lo decisions
    std::vector<Command> commands(n);
    for (int i = 0; i < n; ++i) {
        RobotStepRecord& r = rec.robots[i];
        if (r.target >= 0 && !env.world.objects[r.target].completed) {
            r.lo_obs = build_low_obs(env.world, i, r.target);
            LoStepResult out = lo_actor_step(params, r.lo_obs);
            r.move_index = greedy ? categorical_mode(out.move_logits)
                                  : categorical_sample(out.move_logits, env.action_rng);
            r.turn_index = greedy ? categorical_mode(out.turn_logits)
                                  : categorical_sample(out.turn_logits, env.action_rng);
            r.lo_logprob = categorical_logprob(out.move_logits, r.move_index) +
                           categorical_logprob(out.turn_logits, r.turn_index);
            r.lo_valid = true;
            commands[i] = Command{r.move_index - 1, r.turn_index - 1};
        } else {
            r.target = -1;
            r.lo_valid = false;
            commands[i] = Command{0, 0};
        }
    }

    rec.stats = world_step(env.world, sc, commands);
    rec.team_reward = team_reward(env.world, sc);
    env.episode_hi_return += rec.team_reward;
    for (int i = 0; i < n; ++i) {
        RobotStepRecord& r = rec.robots[i];
        if (r.lo_valid) {
            r.lo_reward = robot_low_reward(env.world, sc, i, r.target);
            env.episode_lo_return[i] += r.lo_reward;
        }
    }
    rec.episode_end = env.world.step_index >= sc.episode_length;
    return rec;
}

CompatResult layout_compatible(const NetLayout& layout, const ScenarioConfig& scenario,
                               const ObsConfig& obs) {
    CompatResult r;
    std::ostringstream why;
    if (obs.nearby_robots != layout.obs.nearby_robots || obs.nearby_objects != layout.obs.nearby_objects) {
        why << "observation slots (J=" << obs.nearby_robots << ", K=" << obs.nearby_objects
            << ") differ from checkpoint layout (J=" << layout.obs.nearby_robots
            << ", K=" << layout.obs.nearby_objects << ")";
        r.reason = why.str();
        return r;
    }
    if (layout.variant == Variant::TwoLayeredGlobal) {
        int m = static_cast<int>(scenario.objects());
        if (scenario.robots != layout.robots || m != layout.objects) {
            why << "global baseline is fixed to N=" << layout.robots << ", M=" << layout.objects
                << "; scenario has N=" << scenario.robots << ", M=" << m;
            r.reason = why.str();
            return r;
        }
    }
    r.ok = true;
    return r;
}

}  // namespace tihdp
