#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tihdp/checkpoint.hpp"
#include "tihdp/engine.hpp"

namespace tihdp {

struct EvalOptions {
    int episodes = 128;
    std::uint64_t seed_base = 0;
    std::string traj_dir;   // empty: no trajectory logs
    int traj_episodes = 0;  // log the first k episodes
    bool sample_actions = false;
};

struct EpisodeRow {
    std::uint64_t seed = 0;
    int transportable = 0;
    int delivered = 0;
    double fraction = 0.0;
    bool all_delivered = false;
    double hi_return = 0.0;
};

struct EvalReport {
    bool applicable = true;
    std::string reason;
    std::string policy;
    ScenarioConfig scenario;
    int episodes = 0;
    double cor = 0.0;   // mean per-episode delivered fraction of transportable objects
    double tocr = 0.0;  // fraction of episodes delivering every transportable object
    double mean_hi_return = 0.0;
    std::vector<EpisodeRow> rows;
    std::vector<std::string> traj_paths;

    nlohmann::ordered_json to_json() const;
};

// Greedy-action evaluation of a checkpoint on the given scenario. The run
// spec (physics, k_phi, observation slots) comes from the checkpoint's
// resolved config; scenario counts come from the caller. Incompatible
// layout/scenario pairs return applicable=false instead of running.
EvalReport evaluate_checkpoint(const Checkpoint& ck, const ScenarioConfig& scenario,
                               const EvalOptions& opts);

// Rule-based baseline on the same episode seeds.
EvalReport evaluate_scripted(const RunSpec& spec, const EvalOptions& opts);

// Freshly initialized (untrained) policy with sampled actions.
EvalReport evaluate_random(const RunSpec& spec, NetLayout layout, const EvalOptions& opts);

}  // namespace tihdp
