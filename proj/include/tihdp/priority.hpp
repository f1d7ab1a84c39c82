#pragma once

#include <optional>
#include <vector>

namespace tihdp {

// Per-robot task priority over all M objects. Entries are non-negative and
// sum to 1, except when every object is completed (then all-zero).
struct PriorityVector {
    std::vector<double> phi;
    double k_phi = 0.1;
    int owner = 0;

    static PriorityVector uniform(int objects, double k_phi, int owner);
};

// One robot's contribution to a communication round.
struct RobotSignals {
    int alpha = 0;   // request intent
    int beta = 0;    // response intent
    int target = -1; // current top-priority object, -1 when no task remains
};

// Result of the synchronous global exchange at one control step.
struct CommResult {
    std::vector<double> request_sums;  // per object: sum of request one-hots
    std::vector<int> sigma;            // per robot: response signal
};

// One-hot request row: the robot's target if its request intent is up.
std::vector<double> request_signal(int alpha, int target, int objects);

// Response signal; identity on {0, 1}.
int response_signal(int beta);

// Scatter the K local priority operations to global object indices.
// neighbor_ids entries < 0 are padding and contribute nothing. Duplicate ids
// indicate an observation-builder bug and are rejected.
std::vector<double> map_local_ops(const std::vector<int>& c_local,
                                  const std::vector<int>& neighbor_ids,
                                  int objects);

// Leaky priority update with completed-object zeroing, negative clamp, and
// simplex normalization. All-zero output when everything is completed.
PriorityVector update_priorities(const PriorityVector& pv,
                                 const std::vector<double>& c_bar,
                                 int sigma_i,
                                 const std::vector<double>& request_sums,
                                 const std::vector<bool>& completed);

// Argmax of the priority vector; ties break to the lowest object index.
// nullopt when the vector is all-zero (no remaining task).
std::optional<int> select_target(const PriorityVector& pv);

// Gathers every robot's request row and response signal for one step.
CommResult comm_round(const std::vector<RobotSignals>& signals, int objects);

}  // namespace tihdp
