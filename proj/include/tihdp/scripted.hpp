#pragma once

#include <vector>

#include "tihdp/world.hpp"

namespace tihdp {

struct ScriptedDecision {
    int target = -1;  // -1: no transportable task, hold position
    Command command;
};

// Deterministic rule-based controller used as an environment-solvability
// oracle: greedy nearest-object allocation (Medium objects claim the two
// nearest free robots), then a push controller that circles to the far side
// of the target relative to its goal and drives through it.
std::vector<ScriptedDecision> scripted_policy_all(const WorldState& state,
                                                  const ScenarioConfig& config);

// Single-robot view of the same joint computation; pure function of state.
ScriptedDecision scripted_policy(const WorldState& state, const ScenarioConfig& config, int robot);

}  // namespace tihdp
