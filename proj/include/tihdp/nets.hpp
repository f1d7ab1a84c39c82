#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tihdp/obs.hpp"
#include "tihdp/rng.hpp"
#include "tihdp/tensor.hpp"

namespace tihdp {

// ---------------------------------------------------------------------------
// policy variants
// ---------------------------------------------------------------------------

enum class Variant {
    TihdpWithCom,
    TihdpWithoutCom,
    TwoLayeredGlobal,
    TwoLayeredLocal,
};

const char* variant_name(Variant v);
Variant parse_variant(const std::string& name);

inline bool variant_uses_priorities(Variant v) {
    return v == Variant::TihdpWithCom || v == Variant::TihdpWithoutCom;
}

// ---------------------------------------------------------------------------
// layout: every dimension the nets depend on
// ---------------------------------------------------------------------------

struct NetLayout {
    Variant variant = Variant::TihdpWithCom;
    ObsConfig obs;
    int robots = 3;   // team size the critics (and the global baseline) are built for
    int objects = 4;  // object count ditto
    std::vector<int> hidden = {256, 128, 64};
    int lstm_hidden = 64;

    int hi_input_dim() const;
    // Bernoulli-head width (K+2) for the hierarchy, categorical way count for baselines.
    int hi_head_dim() const;
    bool hi_categorical() const { return !variant_uses_priorities(variant); }
    int lo_input_dim() const { return obs.low_dim(); }
    int hi_critic_dim() const { return global_state_dim(robots, objects); }
    int lo_critic_dim() const { return global_state_dim(robots, objects) + robots + objects; }

    std::string tag() const;
    void validate() const;
};

// ---------------------------------------------------------------------------
// layers
// ---------------------------------------------------------------------------

struct Affine {
    Tensor W;  // out x in
    Tensor b;  // out x 1
    int in_dim() const { return W.cols; }
    int out_dim() const { return W.rows; }
};

struct Mlp {
    std::vector<Affine> layers;  // tanh after each layer
    int in_dim() const { return layers.front().in_dim(); }
    int out_dim() const { return layers.back().out_dim(); }
};

struct MlpTrace {
    std::vector<double> input;
    std::vector<std::vector<double>> act;  // post-tanh output per layer
};

// out may alias nothing; trace optional (null for inference).
void mlp_forward(const Mlp& m, const double* x, MlpTrace* trace, std::vector<double>& out);
// dout is d(last activation); accumulates into grads, optionally emits dx.
void mlp_backward(const Mlp& m, const MlpTrace& trace, const double* dout, Mlp& grads, double* dx);

// Single LSTM cell, gate rows ordered input, forget, cell, output.
struct LstmCell {
    Tensor Wx;  // 4H x in
    Tensor Wh;  // 4H x H
    Tensor b;   // 4H x 1
    int in_dim() const { return Wx.cols; }
    int hidden_dim() const { return Wh.cols; }
};

struct LstmState {
    std::vector<double> h, c;
    static LstmState zeros(int hidden);
};

struct LstmTrace {
    std::vector<double> x, h_prev, c_prev;
    std::vector<double> gi, gf, gg, go;  // post-nonlinearity gate values
    std::vector<double> c, tanh_c;
};

void lstm_forward(const LstmCell& cell, const double* x, const LstmState& prev, LstmState& next,
                  LstmTrace* trace);
// dh/dc are gradients w.r.t. this step's outputs; emits gradients w.r.t. the
// previous state so a chunk can be walked backwards.
void lstm_backward(const LstmCell& cell, const LstmTrace& trace, const double* dh, const double* dc,
                   LstmCell& grads, double* dx, double* dh_prev, double* dc_prev);

// ---------------------------------------------------------------------------
// parameter bundles
// ---------------------------------------------------------------------------

struct HiActor {
    Mlp trunk;
    LstmCell cell;
    Affine head;
};

struct LoActor {
    Mlp trunk;
    Affine move_head;
    Affine turn_head;
};

struct Critic {
    Mlp trunk;
    Affine head;  // 1 x H
};

struct ParamSet {
    NetLayout layout;
    std::uint64_t init_seed = 0;
    HiActor hi_actor;
    LoActor lo_actor;
    Critic hi_critic;
    Critic lo_critic;

    // Visits every tensor in a fixed order with a stable name; the checkpoint
    // format and the optimizer both rely on this order.
    void visit(const std::function<void(const std::string&, Tensor&)>& fn);
    void visit(const std::function<void(const std::string&, const Tensor&)>& fn) const;
    std::size_t scalar_count() const;
    void zero_all();
    void round_to_f32();
};

// Allocates all tensors at the right shapes, zero-filled.
ParamSet make_params(const NetLayout& layout);
ParamSet init_params(const NetLayout& layout, std::uint64_t seed);
ParamSet zeros_like(const ParamSet& p);

// Fills W with a (scaled) orthogonal matrix via modified Gram-Schmidt on
// standard-normal draws.
void orthogonal_init(Tensor& W, Rng& rng, double gain);

// ---------------------------------------------------------------------------
// distributions over logits
// ---------------------------------------------------------------------------

double sigmoid(double x);

// Vector of independent Bernoullis, one logit each.
double bernoulli_logprob(const std::vector<double>& logits, const std::vector<int>& bits, int count);
double bernoulli_entropy(const std::vector<double>& logits, int count);
// dlogits += scale * d(logprob)/d(logits), restricted to the first `count` heads.
void bernoulli_logprob_grad(const std::vector<double>& logits, const std::vector<int>& bits, int count,
                            double scale, double* dlogits);
void bernoulli_entropy_grad(const std::vector<double>& logits, int count, double scale, double* dlogits);
std::vector<int> bernoulli_sample(const std::vector<double>& logits, Rng& rng);
std::vector<int> bernoulli_mode(const std::vector<double>& logits);

double categorical_logprob(const std::vector<double>& logits, int index);
double categorical_entropy(const std::vector<double>& logits);
void categorical_logprob_grad(const std::vector<double>& logits, int index, double scale, double* dlogits);
void categorical_entropy_grad(const std::vector<double>& logits, double scale, double* dlogits);
int categorical_sample(const std::vector<double>& logits, Rng& rng);
int categorical_mode(const std::vector<double>& logits);

// ---------------------------------------------------------------------------
// forward / backward plumbing used by both the trainer and gradient checks
// ---------------------------------------------------------------------------

struct HiStepResult {
    std::vector<double> logits;
};

// Inference-only step; advances state in place.
HiStepResult hi_actor_step(const ParamSet& p, const std::vector<double>& obs, LstmState& state);

// Traced forward over a chunk of consecutive steps from a snapshotted state.
struct HiSeqTrace {
    LstmState s0;
    std::vector<MlpTrace> trunk;
    std::vector<LstmTrace> cell;
    std::vector<std::vector<double>> logits;
    int steps() const { return static_cast<int>(logits.size()); }
};

void hi_actor_sequence_forward(const ParamSet& p, const std::vector<std::vector<double>>& obs_seq,
                               const LstmState& s0, HiSeqTrace& trace);
// dlogits[t] sized like the head; accumulates into grads (BPTT across the chunk).
void hi_actor_sequence_backward(const ParamSet& p, const HiSeqTrace& trace,
                                const std::vector<std::vector<double>>& dlogits, ParamSet& grads);

struct LoStepResult {
    std::vector<double> move_logits;
    std::vector<double> turn_logits;
};

LoStepResult lo_actor_step(const ParamSet& p, const std::vector<double>& obs);

struct LoTrace {
    MlpTrace trunk;
    std::vector<double> move_logits, turn_logits;
};

void lo_actor_forward_traced(const ParamSet& p, const std::vector<double>& obs, LoTrace& trace);
void lo_actor_backward(const ParamSet& p, const LoTrace& trace, const double* dmove, const double* dturn,
                       ParamSet& grads);

double critic_value(const Critic& c, const std::vector<double>& input);

struct CriticTrace {
    MlpTrace trunk;
    double value = 0.0;
};

double critic_forward_traced(const Critic& c, const std::vector<double>& input, CriticTrace& trace);
void critic_backward(const Critic& c, const CriticTrace& trace, double dvalue, Critic& grads);

// ---------------------------------------------------------------------------
// optimizer
// ---------------------------------------------------------------------------

struct AdamConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    ParamSet m;  // first moments, tensor-for-tensor mirror of the params
    ParamSet v;  // second moments
    std::int64_t step_hi = 0;
    std::int64_t step_lo = 0;
};

AdamState make_adam_state(const ParamSet& params);

// True for tensors belonging to the task-allocation actor or its critic.
bool is_hi_tensor(const std::string& name);

// Global L2 norm over the group's gradients; scales them down in place if the
// norm exceeds max_norm. Returns the pre-clip norm.
double clip_grad_norm(ParamSet& grads, bool hi_group, double max_norm);

// One Adam step over the selected group; params stay f32-exact.
void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state, bool hi_group,
               const AdamConfig& cfg);

}  // namespace tihdp
