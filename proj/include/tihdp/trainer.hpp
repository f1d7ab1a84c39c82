#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tihdp/checkpoint.hpp"
#include "tihdp/engine.hpp"
#include "tihdp/nets.hpp"

namespace tihdp {

struct PpoConfig {
    double gamma = 0.99;
    double gae_lambda = 0.95;
    double clip = 0.2;
    double learning_rate = 3e-4;
    double entropy_coef = 0.01;
    double value_coef = 0.5;
    int epochs = 4;
    int minibatches = 8;
    double max_grad_norm = 0.5;
    int bptt_chunk = 32;
    int parallel_envs = 64;
    std::int64_t total_env_steps = 0;
    int checkpoint_interval = 10;  // updates between checkpoint files

    void validate() const;
};

struct TrainConfig {
    RunSpec run;
    NetLayout layout;  // layout.robots/objects must match the scenario
    PpoConfig ppo;

    void validate() const;
};

// δ_t = r_t + γ·V_{t+1}·(1−done_t) − V_t with V_T = bootstrap;
// A_t = δ_t + γλ(1−done_t)·A_{t+1}; returns = A + V.
void compute_gae(const double* rewards, const double* values, const std::uint8_t* dones, int steps,
                 double gamma, double lambda, double bootstrap, double* advantages, double* returns);

// min(ρ·A, clip(ρ, 1−ε, 1+ε)·A) plus the coefficient its gradient puts on
// d(logp): ρ·A on the unclipped branch, 0 where the clip is active.
struct Surrogate {
    double value = 0.0;
    double dlogp_coef = 0.0;
};
Surrogate clipped_surrogate(double ratio, double adv, double clip);

// Fixed-horizon storage, step-aligned across robots. Index orders:
// per env-step (t, e) and per robot-step (t, e, r).
struct RolloutBuffer {
    int steps = 0, envs = 0, robots = 0, objects = 0;
    int hi_obs_dim = 0, hi_act_width = 0, lo_obs_dim = 0, gstate_dim = 0;
    bool hi_categorical = false;

    // robot-step arrays
    std::vector<double> hi_obs;
    std::vector<int> hi_act;
    std::vector<double> hi_logp;
    std::vector<double> lo_obs;
    std::vector<int> lo_act;  // move, turn indices
    std::vector<double> lo_logp;
    std::vector<std::uint8_t> lo_valid;
    std::vector<int> target;
    std::vector<double> lo_rew;
    std::vector<double> lo_val;

    // env-step arrays
    std::vector<double> gstate;
    std::vector<double> hi_rew;
    std::vector<double> hi_val;
    std::vector<std::uint8_t> done;

    // recurrent chunk bookkeeping: contiguous steps of one (env, robot)
    // within one episode, with the recurrent state snapshotted at the start
    struct Chunk {
        int env = 0, robot = 0, t0 = 0, len = 0;
        LstmState s0;
    };
    std::vector<Chunk> chunks;

    // episodes finished during collection
    std::vector<double> episode_hi_returns;
    std::vector<double> episode_lo_returns;  // mean across robots per episode

    std::size_t env_step_index(int t, int e) const { return static_cast<std::size_t>(t) * envs + e; }
    std::size_t robot_step_index(int t, int e, int r) const {
        return (static_cast<std::size_t>(t) * envs + e) * robots + r;
    }
    std::int64_t total_env_steps() const { return static_cast<std::int64_t>(steps) * envs; }

    void allocate(int steps_, int envs_, const TrainConfig& cfg);
};

// Steps every env `steps` times, recording transitions and critic values.
// Environments that finish an episode are reset in place (advancing their
// episode index); recurrent state resets with them.
void collect_rollouts(std::vector<EnvRuntime>& envs, const TrainConfig& cfg, const ParamSet& params,
                      std::uint64_t master_seed, int steps, RolloutBuffer& out);

struct TrainReport {
    double hi_policy_loss = 0, hi_value_loss = 0, hi_entropy = 0, hi_grad_norm = 0;
    double lo_policy_loss = 0, lo_value_loss = 0, lo_entropy = 0, lo_grad_norm = 0;
    std::int64_t hi_samples = 0, lo_samples = 0;
    bool aborted = false;
    std::string abort_reason;
};

// Clipped-surrogate PPO over the buffer; one Adam step per minibatch per
// epoch, hi and lo parameter groups updated independently. On a non-finite
// loss or gradient the whole update rolls back and `aborted` is set.
TrainReport ppo_update(ParamSet& params, AdamState& adam, const RolloutBuffer& buf,
                       const PpoConfig& cfg, Rng& order_rng);

struct TrainOptions {
    std::uint64_t seed = 0;
    std::string out_dir;
    std::string resume_path;  // empty = fresh start
    // Optional early-stop probe, called after each update with the mean
    // episode hi-return; returning true ends training.
    std::function<bool(std::int64_t env_steps, double mean_hi_return)> stop_probe;
};

struct TrainSummary {
    std::int64_t env_steps = 0;
    std::int64_t updates = 0;
    std::string final_checkpoint;
    std::string metrics_path;
};

TrainSummary train_run(const TrainConfig& cfg, const nlohmann::ordered_json& resolved_config,
                       const TrainOptions& opts, std::ostream* console);

}  // namespace tihdp
