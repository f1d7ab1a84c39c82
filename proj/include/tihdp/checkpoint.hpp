#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tihdp/nets.hpp"

namespace tihdp {

// Trainer continuation state. Updates always end on episode boundaries, so
// resuming needs no mid-episode environment state: fresh episodes are
// reconstructed from the master seed and the per-env episode counters.
struct TrainerState {
    bool present = false;
    std::int64_t adam_step_hi = 0;
    std::int64_t adam_step_lo = 0;
    std::array<std::uint64_t, 4> trainer_rng{};
    std::uint64_t master_seed = 0;
    std::int64_t env_steps = 0;
    std::int64_t update_index = 0;
    std::vector<std::int64_t> episodes_done;  // per parallel env
};

struct Checkpoint {
    ParamSet params;
    // Adam moments ride along only when trainer state is present.
    ParamSet adam_m;
    ParamSet adam_v;
    TrainerState trainer;
    nlohmann::ordered_json config;  // fully resolved run configuration
};

// Binary layout: magic, u32 version, u64 manifest length, manifest JSON,
// then each tensor as little-endian f32 in ParamSet::visit order (params,
// then Adam m and v when trainer state is present).
void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

nlohmann::ordered_json layout_to_json(const NetLayout& layout);
NetLayout layout_from_json(const nlohmann::json& j);

}  // namespace tihdp
