#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "tihdp/nets.hpp"
#include "tihdp/priority.hpp"
#include "tihdp/world.hpp"

namespace tihdp {

// Everything one policy variant needs to run episodes.
struct RunSpec {
    ScenarioConfig scenario;
    ObsConfig obs;
    double k_phi = 0.1;
};

// Per-environment mutable state across one episode.
struct EnvRuntime {
    WorldState world;
    std::vector<PriorityVector> priorities;  // per robot (hierarchy variants)
    std::vector<LstmState> hi_state;         // per robot
    Rng action_rng;
    std::int64_t episode_index = 0;
    double episode_hi_return = 0.0;
    std::vector<double> episode_lo_return;  // per robot
};

// Seed streams, combined with (master, env, episode) through Rng::derive.
inline constexpr std::uint64_t kStreamWorld = 1;
inline constexpr std::uint64_t kStreamActions = 2;

// Starts episode `episode_index` for env `env_id` from scratch.
EnvRuntime make_env_runtime(const RunSpec& spec, const NetLayout& layout, std::uint64_t master_seed,
                            int env_id, std::int64_t episode_index);

// Record of one control step for one robot, enough for both the rollout
// buffer and the trajectory log.
struct RobotStepRecord {
    std::vector<double> hi_obs;
    std::vector<int> hi_action;  // K+2 bits, or one categorical index for baselines
    double hi_logprob = 0.0;
    int alpha = 0;
    int beta = 0;
    std::vector<double> priorities;  // post-update φ (empty for baselines)
    int target = -1;                 // -1 when no transportable task
    bool lo_valid = false;
    std::vector<double> lo_obs;  // empty when lo_valid is false
    int move_index = 1;          // categorical 0..2, command value = index - 1
    int turn_index = 1;
    double lo_logprob = 0.0;
    double lo_reward = 0.0;
};

struct EnvStepRecord {
    std::vector<double> global_state;  // built before the step (critic input)
    std::vector<RobotStepRecord> robots;
    double team_reward = 0.0;
    StepStats stats;
    bool episode_end = false;
};

// Runs one control step: hi decisions, communication, priority updates,
// target selection, lo decisions, physics. greedy=false samples from
// env.action_rng; greedy=true takes distribution modes.
EnvStepRecord engine_step(EnvRuntime& env, const RunSpec& spec, const ParamSet& params, bool greedy);

// Scenario compatibility for a checkpoint layout. Local-observation variants
// run at any scale; the global baseline is pinned to its training (N, M).
struct CompatResult {
    bool ok = false;
    std::string reason;
};
CompatResult layout_compatible(const NetLayout& layout, const ScenarioConfig& scenario,
                               const ObsConfig& obs);

}  // namespace tihdp
