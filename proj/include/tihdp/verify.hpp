#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tihdp/priority.hpp"

namespace tihdp {

// Independent straight-line transcription of the priority update, kept apart
// from the production code path so the two can be cross-checked.
std::vector<double> priority_update_reference(const std::vector<double>& phi, double k_phi,
                                              const std::vector<double>& c_bar, int sigma_i,
                                              const std::vector<double>& request_sums,
                                              const std::vector<bool>& completed);

// Definition-based O(T^2) double-sum advantage estimate.
void gae_reference(const double* rewards, const double* values, const std::uint8_t* dones,
                   int steps, double gamma, double lambda, double bootstrap, double* advantages,
                   double* returns);

struct OracleResult {
    std::string name;
    bool pass = false;
    double worst = 0.0;  // largest error observed
    double limit = 0.0;  // tolerance it was held to
    std::string detail;
};

// Randomized update calls against the straight-line reference, plus the
// non-negativity / normalization / completed-zeroing invariants per call.
OracleResult run_priority_oracle(int calls, std::uint64_t seed);

// Random (reward, value, done) sequences, T <= 32, recursion vs double sum.
OracleResult run_gae_oracle(int sequences, std::uint64_t seed);

// Central finite differences (h = 1e-5) against the analytic backward pass
// for both actors, both critics, and the critic input gradient, on five
// small randomized layouts. One result per layout.
std::vector<OracleResult> run_gradient_checks(std::uint64_t seed);

}  // namespace tihdp
