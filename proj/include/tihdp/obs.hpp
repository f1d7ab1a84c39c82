#pragma once

#include <string>
#include <vector>

#include "tihdp/world.hpp"

namespace tihdp {

struct ObsConfig {
    int nearby_robots = 2;   // J slots
    int nearby_objects = 2;  // K slots

    int high_dim() const { return 5 + 8 * nearby_robots + 7 * nearby_objects; }
    static constexpr int low_dim() { return 24; }
    std::string layout_tag() const;
};

inline int global_state_dim(int robots, int objects) { return 7 * robots + 10 * objects; }
inline int baseline_global_dim(int robots, int objects) { return 7 * robots + 7 * objects; }

enum class BaselineVariant { Global, Local };

// Nearest neighbors of robot i: other robots by distance (all of them, ties
// to the lower id), and uncompleted objects likewise. Callers truncate or pad
// to their slot counts.
struct NearestEntities {
    std::vector<int> robot_ids;   // J entries, -1 padding
    std::vector<int> object_ids;  // K entries, -1 padding
};
NearestEntities nearest_entities(const WorldState& state, int robot, int J, int K);

// Task-allocation observation: own block + J robot slots + K object slots,
// all relative quantities in the observing robot's ego frame.
std::vector<double> build_high_obs(const WorldState& state, int robot,
                                   const ObsConfig& config,
                                   NearestEntities* neighbors_out = nullptr);

// Robot-control observation: own block, nearest robot, target object, nearest
// non-target uncompleted object.
std::vector<double> build_low_obs(const WorldState& state, int robot, int target);

// Critic input, world frame, id-ordered, with weight-class one-hots.
std::vector<double> build_global_state(const WorldState& state);

// Flat observations for the two-layered comparison policies.
std::vector<double> build_baseline_obs(const WorldState& state, int robot,
                                       BaselineVariant variant,
                                       const ObsConfig& config,
                                       NearestEntities* neighbors_out = nullptr);

}  // namespace tihdp
