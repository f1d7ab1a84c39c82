#include "tihdp/nets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace tihdp {

// ---------------------------------------------------------------------------
// variants / layout
// ---------------------------------------------------------------------------

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::TihdpWithCom: return "tihdp-with-com";
        case Variant::TihdpWithoutCom: return "tihdp-without-com";
        case Variant::TwoLayeredGlobal: return "two-layered-global";
        case Variant::TwoLayeredLocal: return "two-layered-local";
    }
    throw std::logic_error("bad variant");
}

Variant parse_variant(const std::string& name) {
    if (name == "tihdp-with-com") return Variant::TihdpWithCom;
    if (name == "tihdp-without-com") return Variant::TihdpWithoutCom;
    if (name == "two-layered-global") return Variant::TwoLayeredGlobal;
    if (name == "two-layered-local") return Variant::TwoLayeredLocal;
    throw std::invalid_argument("unknown variant: " + name);
}

int NetLayout::hi_input_dim() const {
    if (variant == Variant::TwoLayeredGlobal) return baseline_global_dim(robots, objects);
    return obs.high_dim();
}

int NetLayout::hi_head_dim() const {
    switch (variant) {
        case Variant::TihdpWithCom:
        case Variant::TihdpWithoutCom: return obs.nearby_objects + 2;
        case Variant::TwoLayeredGlobal: return objects;
        case Variant::TwoLayeredLocal: return obs.nearby_objects;
    }
    throw std::logic_error("bad variant");
}

std::string NetLayout::tag() const {
    std::ostringstream s;
    s << "nets-v1:" << variant_name(variant) << ":N" << robots << ":M" << objects << ":J"
      << obs.nearby_robots << ":K" << obs.nearby_objects << ":hidden";
    for (std::size_t i = 0; i < hidden.size(); ++i) s << (i ? "-" : "=") << hidden[i];
    s << ":lstm" << lstm_hidden << ":hi" << hi_input_dim() << "->" << hi_head_dim() << ":lo"
      << lo_input_dim();
    return s.str();
}

void NetLayout::validate() const {
    if (robots < 1) throw std::invalid_argument("layout: robots must be >= 1");
    if (objects < 1) throw std::invalid_argument("layout: objects must be >= 1");
    if (hidden.empty()) throw std::invalid_argument("layout: hidden sizes must be non-empty");
    for (int h : hidden)
        if (h < 1) throw std::invalid_argument("layout: hidden sizes must be positive");
    if (lstm_hidden < 1) throw std::invalid_argument("layout: lstm_hidden must be >= 1");
    if (obs.nearby_robots < 0 || obs.nearby_objects < 1)
        throw std::invalid_argument("layout: bad observation slot counts");
}

// ---------------------------------------------------------------------------
// mlp
// ---------------------------------------------------------------------------

void mlp_forward(const Mlp& m, const double* x, MlpTrace* trace, std::vector<double>& out) {
    if (trace) {
        trace->input.assign(x, x + m.in_dim());
        trace->act.resize(m.layers.size());
    }
    std::vector<double> cur(x, x + m.in_dim());
    std::vector<double> next;
    for (std::size_t li = 0; li < m.layers.size(); ++li) {
        const Affine& a = m.layers[li];
        next.resize(a.out_dim());
        gemv(a.W, cur.data(), a.b.v.data(), next.data());
        for (double& y : next) y = std::tanh(y);
        if (trace) trace->act[li] = next;
        cur.swap(next);
    }
    out = cur;
}

void mlp_backward(const Mlp& m, const MlpTrace& trace, const double* dout, Mlp& grads, double* dx) {
    int nl = static_cast<int>(m.layers.size());
    std::vector<double> dcur(dout, dout + m.out_dim());
    std::vector<double> dprev;
    for (int li = nl - 1; li >= 0; --li) {
        const Affine& a = m.layers[li];
        const std::vector<double>& y = trace.act[li];
        // through tanh
        for (int r = 0; r < a.out_dim(); ++r) dcur[r] *= 1.0 - y[r] * y[r];
        const double* in = li == 0 ? trace.input.data() : trace.act[li - 1].data();
        outer_acc(grads.layers[li].W, dcur.data(), in);
        for (int r = 0; r < a.out_dim(); ++r) grads.layers[li].b.v[r] += dcur[r];
        if (li == 0) {
            if (dx) {
                std::fill(dx, dx + a.in_dim(), 0.0);
                gemv_transpose_acc(a.W, dcur.data(), dx);
            }
        } else {
            dprev.assign(a.in_dim(), 0.0);
            gemv_transpose_acc(a.W, dcur.data(), dprev.data());
            dcur.swap(dprev);
        }
    }
}

// ---------------------------------------------------------------------------
// lstm
// ---------------------------------------------------------------------------

LstmState LstmState::zeros(int hidden) {
    LstmState s;
    s.h.assign(hidden, 0.0);
    s.c.assign(hidden, 0.0);
    return s;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void lstm_forward(const LstmCell& cell, const double* x, const LstmState& prev, LstmState& next,
                  LstmTrace* trace) {
    int H = cell.hidden_dim();
    std::vector<double> pre(4 * H);
    gemv(cell.Wx, x, cell.b.v.data(), pre.data());
    std::vector<double> hh(4 * H);
    gemv(cell.Wh, prev.h.data(), nullptr, hh.data());
    for (int r = 0; r < 4 * H; ++r) pre[r] += hh[r];

    next.h.resize(H);
    next.c.resize(H);
    std::vector<double> gi(H), gf(H), gg(H), go(H), tc(H);
    for (int k = 0; k < H; ++k) {
        gi[k] = sigmoid(pre[k]);
        gf[k] = sigmoid(pre[H + k]);
        gg[k] = std::tanh(pre[2 * H + k]);
        go[k] = sigmoid(pre[3 * H + k]);
        double c = gf[k] * prev.c[k] + gi[k] * gg[k];
        tc[k] = std::tanh(c);
        next.c[k] = c;
        next.h[k] = go[k] * tc[k];
    }
    if (trace) {
        trace->x.assign(x, x + cell.in_dim());
        trace->h_prev = prev.h;
        trace->c_prev = prev.c;
        trace->gi = std::move(gi);
        trace->gf = std::move(gf);
        trace->gg = std::move(gg);
        trace->go = std::move(go);
        trace->c = next.c;
        trace->tanh_c = std::move(tc);
    }
}

void lstm_backward(const LstmCell& cell, const LstmTrace& trace, const double* dh, const double* dc,
                   LstmCell& grads, double* dx, double* dh_prev, double* dc_prev) {
    int H = cell.hidden_dim();
    std::vector<double> dpre(4 * H);
    for (int k = 0; k < H; ++k) {
        double dck = (dc ? dc[k] : 0.0) + dh[k] * trace.go[k] * (1.0 - trace.tanh_c[k] * trace.tanh_c[k]);
        double dgo = dh[k] * trace.tanh_c[k];
        double dgi = dck * trace.gg[k];
        double dgg = dck * trace.gi[k];
        double dgf = dck * trace.c_prev[k];
        if (dc_prev) dc_prev[k] = dck * trace.gf[k];
        dpre[k] = dgi * trace.gi[k] * (1.0 - trace.gi[k]);
        dpre[H + k] = dgf * trace.gf[k] * (1.0 - trace.gf[k]);
        dpre[2 * H + k] = dgg * (1.0 - trace.gg[k] * trace.gg[k]);
        dpre[3 * H + k] = dgo * trace.go[k] * (1.0 - trace.go[k]);
    }
    outer_acc(grads.Wx, dpre.data(), trace.x.data());
    outer_acc(grads.Wh, dpre.data(), trace.h_prev.data());
    for (int r = 0; r < 4 * H; ++r) grads.b.v[r] += dpre[r];
    if (dx) {
        std::fill(dx, dx + cell.in_dim(), 0.0);
        gemv_transpose_acc(cell.Wx, dpre.data(), dx);
    }
    if (dh_prev) {
        std::fill(dh_prev, dh_prev + H, 0.0);
        gemv_transpose_acc(cell.Wh, dpre.data(), dh_prev);
    }
}

// ---------------------------------------------------------------------------
// init
// ---------------------------------------------------------------------------

void orthogonal_init(Tensor& W, Rng& rng, double gain) {
    int n = W.rows, m = W.cols;
    bool tall = n >= m;
    int R = tall ? n : m;  // draw matrix is R x C with R >= C
    int C = tall ? m : n;
    std::vector<double> a(static_cast<std::size_t>(R) * C);
    for (double& x : a) x = rng.normal();
    // modified Gram-Schmidt over columns
    for (int j = 0; j < C; ++j) {
        for (int i = 0; i < j; ++i) {
            double dot = 0.0;
            for (int r = 0; r < R; ++r) dot += a[static_cast<std::size_t>(r) * C + i] * a[static_cast<std::size_t>(r) * C + j];
            for (int r = 0; r < R; ++r) a[static_cast<std::size_t>(r) * C + j] -= dot * a[static_cast<std::size_t>(r) * C + i];
        }
        double norm = 0.0;
        for (int r = 0; r < R; ++r) {
            double x = a[static_cast<std::size_t>(r) * C + j];
            norm += x * x;
        }
        norm = std::sqrt(norm);
        if (norm < 1e-12) norm = 1.0;  // measure-zero; keep going deterministically
        for (int r = 0; r < R; ++r) a[static_cast<std::size_t>(r) * C + j] /= norm;
    }
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < m; ++c) {
            double q = tall ? a[static_cast<std::size_t>(r) * C + c] : a[static_cast<std::size_t>(c) * C + r];
            W(r, c) = f32_exact(gain * q);
        }
}

namespace {

Affine make_affine(int out, int in) {
    Affine a;
    a.W = Tensor(out, in);
    a.b = Tensor(out, 1);
    return a;
}

Mlp make_mlp(int in, const std::vector<int>& hidden) {
    Mlp m;
    int cur = in;
    for (int h : hidden) {
        m.layers.push_back(make_affine(h, cur));
        cur = h;
    }
    return m;
}

LstmCell make_lstm(int in, int hidden) {
    LstmCell c;
    c.Wx = Tensor(4 * hidden, in);
    c.Wh = Tensor(4 * hidden, hidden);
    c.b = Tensor(4 * hidden, 1);
    return c;
}

constexpr double kHiddenGain = 1.4142135623730951;  // sqrt(2)
constexpr double kHeadGain = 0.01;

void init_mlp(Mlp& m, Rng& rng) {
    for (Affine& a : m.layers) {
        orthogonal_init(a.W, rng, kHiddenGain);
        a.b.zero();
    }
}

void init_head(Affine& a, Rng& rng) {
    orthogonal_init(a.W, rng, kHeadGain);
    a.b.zero();
}

void init_lstm(LstmCell& c, Rng& rng) {
    orthogonal_init(c.Wx, rng, kHiddenGain);
    orthogonal_init(c.Wh, rng, kHiddenGain);
    c.b.zero();
}

void init_critic(Critic& c, Rng& rng) {
    init_mlp(c.trunk, rng);
    // value heads keep unit scale
    orthogonal_init(c.head.W, rng, 1.0);
    c.head.b.zero();
}

}  // namespace

ParamSet zeros_like(const ParamSet& p) {
    ParamSet z = p;
    z.visit([](const std::string&, Tensor& t) { t.zero(); });
    return z;
}

ParamSet make_params(const NetLayout& layout) {
    layout.validate();
    ParamSet p;
    p.layout = layout;

    p.hi_actor.trunk = make_mlp(layout.hi_input_dim(), layout.hidden);
    p.hi_actor.cell = make_lstm(p.hi_actor.trunk.out_dim(), layout.lstm_hidden);
    p.hi_actor.head = make_affine(layout.hi_head_dim(), layout.lstm_hidden);

    p.lo_actor.trunk = make_mlp(layout.lo_input_dim(), layout.hidden);
    p.lo_actor.move_head = make_affine(3, p.lo_actor.trunk.out_dim());
    p.lo_actor.turn_head = make_affine(3, p.lo_actor.trunk.out_dim());

    p.hi_critic.trunk = make_mlp(layout.hi_critic_dim(), layout.hidden);
    p.hi_critic.head = make_affine(1, p.hi_critic.trunk.out_dim());
    p.lo_critic.trunk = make_mlp(layout.lo_critic_dim(), layout.hidden);
    p.lo_critic.head = make_affine(1, p.lo_critic.trunk.out_dim());
    return p;
}

ParamSet init_params(const NetLayout& layout, std::uint64_t seed) {
    ParamSet p = make_params(layout);
    p.init_seed = seed;

    Rng rng(Rng::derive(seed, 0x696e6974, 0, 0));  // one stream, sub-nets drawn in fixed order
    init_mlp(p.hi_actor.trunk, rng);
    init_lstm(p.hi_actor.cell, rng);
    init_head(p.hi_actor.head, rng);
    init_mlp(p.lo_actor.trunk, rng);
    init_head(p.lo_actor.move_head, rng);
    init_head(p.lo_actor.turn_head, rng);
    init_critic(p.hi_critic, rng);
    init_critic(p.lo_critic, rng);
    return p;
}

namespace {

template <typename P, typename Fn>
void visit_impl(P& p, Fn&& fn) {
    auto mlp = [&](const std::string& base, auto& m) {
        for (std::size_t i = 0; i < m.layers.size(); ++i) {
            fn(base + "/l" + std::to_string(i) + "/W", m.layers[i].W);
            fn(base + "/l" + std::to_string(i) + "/b", m.layers[i].b);
        }
    };
    mlp("hi_actor/trunk", p.hi_actor.trunk);
    fn("hi_actor/lstm/Wx", p.hi_actor.cell.Wx);
    fn("hi_actor/lstm/Wh", p.hi_actor.cell.Wh);
    fn("hi_actor/lstm/b", p.hi_actor.cell.b);
    fn("hi_actor/head/W", p.hi_actor.head.W);
    fn("hi_actor/head/b", p.hi_actor.head.b);
    mlp("lo_actor/trunk", p.lo_actor.trunk);
    fn("lo_actor/move_head/W", p.lo_actor.move_head.W);
    fn("lo_actor/move_head/b", p.lo_actor.move_head.b);
    fn("lo_actor/turn_head/W", p.lo_actor.turn_head.W);
    fn("lo_actor/turn_head/b", p.lo_actor.turn_head.b);
    mlp("hi_critic/trunk", p.hi_critic.trunk);
    fn("hi_critic/head/W", p.hi_critic.head.W);
    fn("hi_critic/head/b", p.hi_critic.head.b);
    mlp("lo_critic/trunk", p.lo_critic.trunk);
    fn("lo_critic/head/W", p.lo_critic.head.W);
    fn("lo_critic/head/b", p.lo_critic.head.b);
}

}  // namespace

void ParamSet::visit(const std::function<void(const std::string&, Tensor&)>& fn) {
    visit_impl(*this, fn);
}

void ParamSet::visit(const std::function<void(const std::string&, const Tensor&)>& fn) const {
    visit_impl(*this, fn);
}

std::size_t ParamSet::scalar_count() const {
    std::size_t n = 0;
    visit([&](const std::string&, const Tensor& t) { n += static_cast<std::size_t>(t.size()); });
    return n;
}

void ParamSet::zero_all() {
    visit([](const std::string&, Tensor& t) { t.zero(); });
}

void ParamSet::round_to_f32() {
    visit([](const std::string&, Tensor& t) {
        for (double& x : t.v) x = f32_exact(x);
    });
}

// ---------------------------------------------------------------------------
// distributions
// ---------------------------------------------------------------------------

namespace {

// log(sigmoid(x)) computed stably
double log_sigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

}  // namespace

double bernoulli_logprob(const std::vector<double>& logits, const std::vector<int>& bits, int count) {
    double lp = 0.0;
    for (int k = 0; k < count; ++k) lp += bits[k] ? log_sigmoid(logits[k]) : log_sigmoid(-logits[k]);
    return lp;
}

double bernoulli_entropy(const std::vector<double>& logits, int count) {
    double h = 0.0;
    for (int k = 0; k < count; ++k) {
        double p = sigmoid(logits[k]);
        // H = -p log p - (1-p) log(1-p), in logit form to stay stable
        h += -p * log_sigmoid(logits[k]) - (1.0 - p) * log_sigmoid(-logits[k]);
    }
    return h;
}

void bernoulli_logprob_grad(const std::vector<double>& logits, const std::vector<int>& bits, int count,
                            double scale, double* dlogits) {
    for (int k = 0; k < count; ++k) dlogits[k] += scale * (static_cast<double>(bits[k]) - sigmoid(logits[k]));
}

void bernoulli_entropy_grad(const std::vector<double>& logits, int count, double scale, double* dlogits) {
    for (int k = 0; k < count; ++k) {
        double p = sigmoid(logits[k]);
        // dH/dlogit = -logit * p * (1-p)
        dlogits[k] += scale * (-logits[k] * p * (1.0 - p));
    }
}

std::vector<int> bernoulli_sample(const std::vector<double>& logits, Rng& rng) {
    std::vector<int> bits(logits.size());
    for (std::size_t k = 0; k < logits.size(); ++k) bits[k] = rng.uniform() < sigmoid(logits[k]) ? 1 : 0;
    return bits;
}

std::vector<int> bernoulli_mode(const std::vector<double>& logits) {
    std::vector<int> bits(logits.size());
    for (std::size_t k = 0; k < logits.size(); ++k) bits[k] = logits[k] >= 0.0 ? 1 : 0;
    return bits;
}

namespace {

void log_softmax(const std::vector<double>& logits, std::vector<double>& out) {
    double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    out.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) sum += std::exp(logits[i] - mx);
    double lz = mx + std::log(sum);
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lz;
}

}  // namespace

double categorical_logprob(const std::vector<double>& logits, int index) {
    std::vector<double> lp;
    log_softmax(logits, lp);
    return lp[index];
}

double categorical_entropy(const std::vector<double>& logits) {
    std::vector<double> lp;
    log_softmax(logits, lp);
    double h = 0.0;
    for (double l : lp) h -= std::exp(l) * l;
    return h;
}

void categorical_logprob_grad(const std::vector<double>& logits, int index, double scale, double* dlogits) {
    std::vector<double> lp;
    log_softmax(logits, lp);
    for (std::size_t i = 0; i < logits.size(); ++i)
        dlogits[i] += scale * ((static_cast<int>(i) == index ? 1.0 : 0.0) - std::exp(lp[i]));
}

void categorical_entropy_grad(const std::vector<double>& logits, double scale, double* dlogits) {
    std::vector<double> lp;
    log_softmax(logits, lp);
    double h = 0.0;
    for (double l : lp) h -= std::exp(l) * l;
    // dH/dlogit_i = -p_i (log p_i + H)
    for (std::size_t i = 0; i < logits.size(); ++i)
        dlogits[i] += scale * (-std::exp(lp[i]) * (lp[i] + h));
}

int categorical_sample(const std::vector<double>& logits, Rng& rng) {
    std::vector<double> lp;
    log_softmax(logits, lp);
    double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < lp.size(); ++i) {
        acc += std::exp(lp[i]);
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(lp.size()) - 1;
}

int categorical_mode(const std::vector<double>& logits) {
    return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

// ---------------------------------------------------------------------------
// actor / critic plumbing
// ---------------------------------------------------------------------------

namespace {

void check_dim(const char* what, std::size_t got, int want) {
    if (static_cast<int>(got) != want) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%s: expected dim %d, got %zu", what, want, got);
        throw std::invalid_argument(buf);
    }
}

}  // namespace

HiStepResult hi_actor_step(const ParamSet& p, const std::vector<double>& obs, LstmState& state) {
    check_dim("hi actor input", obs.size(), p.layout.hi_input_dim());
    std::vector<double> feat;
    mlp_forward(p.hi_actor.trunk, obs.data(), nullptr, feat);
    LstmState next;
    lstm_forward(p.hi_actor.cell, feat.data(), state, next, nullptr);
    state = std::move(next);
    HiStepResult r;
    r.logits.resize(p.hi_actor.head.out_dim());
    gemv(p.hi_actor.head.W, state.h.data(), p.hi_actor.head.b.v.data(), r.logits.data());
    return r;
}

void hi_actor_sequence_forward(const ParamSet& p, const std::vector<std::vector<double>>& obs_seq,
                               const LstmState& s0, HiSeqTrace& trace) {
    int T = static_cast<int>(obs_seq.size());
    trace.s0 = s0;
    trace.trunk.assign(T, {});
    trace.cell.assign(T, {});
    trace.logits.assign(T, {});
    LstmState state = s0;
    for (int t = 0; t < T; ++t) {
        check_dim("hi actor input", obs_seq[t].size(), p.layout.hi_input_dim());
        std::vector<double> feat;
        mlp_forward(p.hi_actor.trunk, obs_seq[t].data(), &trace.trunk[t], feat);
        LstmState next;
        lstm_forward(p.hi_actor.cell, feat.data(), state, next, &trace.cell[t]);
        state = std::move(next);
        trace.logits[t].resize(p.hi_actor.head.out_dim());
        gemv(p.hi_actor.head.W, state.h.data(), p.hi_actor.head.b.v.data(), trace.logits[t].data());
    }
}

void hi_actor_sequence_backward(const ParamSet& p, const HiSeqTrace& trace,
                                const std::vector<std::vector<double>>& dlogits, ParamSet& grads) {
    int T = trace.steps();
    int H = p.layout.lstm_hidden;
    std::vector<double> dh(H, 0.0), dc(H, 0.0), dh_prev(H), dc_prev(H);
    std::vector<double> dfeat(p.hi_actor.trunk.out_dim());
    std::vector<double> h(H);
    for (int t = T - 1; t >= 0; --t) {
        // head input: h_t = o_t * tanh(c_t), reconstructed from the cell trace
        for (int k = 0; k < H; ++k) h[k] = trace.cell[t].go[k] * trace.cell[t].tanh_c[k];
        outer_acc(grads.hi_actor.head.W, dlogits[t].data(), h.data());
        for (int r = 0; r < p.hi_actor.head.out_dim(); ++r) grads.hi_actor.head.b.v[r] += dlogits[t][r];
        gemv_transpose_acc(p.hi_actor.head.W, dlogits[t].data(), dh.data());
        lstm_backward(p.hi_actor.cell, trace.cell[t], dh.data(), dc.data(), grads.hi_actor.cell,
                      dfeat.data(), dh_prev.data(), dc_prev.data());
        mlp_backward(p.hi_actor.trunk, trace.trunk[t], dfeat.data(), grads.hi_actor.trunk, nullptr);
        dh = dh_prev;
        dc = dc_prev;
        std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
        std::fill(dc_prev.begin(), dc_prev.end(), 0.0);
    }
}

LoStepResult lo_actor_step(const ParamSet& p, const std::vector<double>& obs) {
    check_dim("lo actor input", obs.size(), p.layout.lo_input_dim());
    std::vector<double> feat;
    mlp_forward(p.lo_actor.trunk, obs.data(), nullptr, feat);
    LoStepResult r;
    r.move_logits.resize(3);
    r.turn_logits.resize(3);
    gemv(p.lo_actor.move_head.W, feat.data(), p.lo_actor.move_head.b.v.data(), r.move_logits.data());
    gemv(p.lo_actor.turn_head.W, feat.data(), p.lo_actor.turn_head.b.v.data(), r.turn_logits.data());
    return r;
}

void lo_actor_forward_traced(const ParamSet& p, const std::vector<double>& obs, LoTrace& trace) {
    check_dim("lo actor input", obs.size(), p.layout.lo_input_dim());
    std::vector<double> feat;
    mlp_forward(p.lo_actor.trunk, obs.data(), &trace.trunk, feat);
    trace.move_logits.resize(3);
    trace.turn_logits.resize(3);
    gemv(p.lo_actor.move_head.W, feat.data(), p.lo_actor.move_head.b.v.data(), trace.move_logits.data());
    gemv(p.lo_actor.turn_head.W, feat.data(), p.lo_actor.turn_head.b.v.data(), trace.turn_logits.data());
}

void lo_actor_backward(const ParamSet& p, const LoTrace& trace, const double* dmove, const double* dturn,
                       ParamSet& grads) {
    const std::vector<double>& feat = trace.trunk.act.back();
    std::vector<double> dfeat(p.lo_actor.trunk.out_dim(), 0.0);
    outer_acc(grads.lo_actor.move_head.W, dmove, feat.data());
    for (int r = 0; r < 3; ++r) grads.lo_actor.move_head.b.v[r] += dmove[r];
    gemv_transpose_acc(p.lo_actor.move_head.W, dmove, dfeat.data());
    outer_acc(grads.lo_actor.turn_head.W, dturn, feat.data());
    for (int r = 0; r < 3; ++r) grads.lo_actor.turn_head.b.v[r] += dturn[r];
    gemv_transpose_acc(p.lo_actor.turn_head.W, dturn, dfeat.data());
    mlp_backward(p.lo_actor.trunk, trace.trunk, dfeat.data(), grads.lo_actor.trunk, nullptr);
}

double critic_value(const Critic& c, const std::vector<double>& input) {
    check_dim("critic input", input.size(), c.trunk.in_dim());
    std::vector<double> feat;
    mlp_forward(c.trunk, input.data(), nullptr, feat);
    double v = c.head.b.v[0];
    for (int i = 0; i < c.head.in_dim(); ++i) v += c.head.W.v[i] * feat[i];
    return v;
}

double critic_forward_traced(const Critic& c, const std::vector<double>& input, CriticTrace& trace) {
    check_dim("critic input", input.size(), c.trunk.in_dim());
    std::vector<double> feat;
    mlp_forward(c.trunk, input.data(), &trace.trunk, feat);
    double v = c.head.b.v[0];
    for (int i = 0; i < c.head.in_dim(); ++i) v += c.head.W.v[i] * feat[i];
    trace.value = v;
    return v;
}

void critic_backward(const Critic& c, const CriticTrace& trace, double dvalue, Critic& grads) {
    const std::vector<double>& feat = trace.trunk.act.back();
    std::vector<double> dfeat(c.head.in_dim());
    for (int i = 0; i < c.head.in_dim(); ++i) {
        grads.head.W.v[i] += dvalue * feat[i];
        dfeat[i] = dvalue * c.head.W.v[i];
    }
    grads.head.b.v[0] += dvalue;
    mlp_backward(c.trunk, trace.trunk, dfeat.data(), grads.trunk, nullptr);
}

// ---------------------------------------------------------------------------
// optimizer
// ---------------------------------------------------------------------------

AdamState make_adam_state(const ParamSet& params) {
    AdamState s;
    s.m = zeros_like(params);
    s.v = zeros_like(params);
    return s;
}

bool is_hi_tensor(const std::string& name) {
    return name.rfind("hi_", 0) == 0;
}

double clip_grad_norm(ParamSet& grads, bool hi_group, double max_norm) {
    double sq = 0.0;
    grads.visit([&](const std::string& name, Tensor& t) {
        if (is_hi_tensor(name) != hi_group) return;
        for (double x : t.v) sq += x * x;
    });
    double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        double scale = max_norm / norm;
        grads.visit([&](const std::string& name, Tensor& t) {
            if (is_hi_tensor(name) != hi_group) return;
            for (double& x : t.v) x *= scale;
        });
    }
    return norm;
}

void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state, bool hi_group,
               const AdamConfig& cfg) {
    std::int64_t& t = hi_group ? state.step_hi : state.step_lo;
    ++t;
    double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));

    // walk the three sets in lockstep; visit order is fixed
    std::vector<Tensor*> pt, mt, vt;
    std::vector<const Tensor*> gt;
    std::vector<std::string> names;
    params.visit([&](const std::string& n, Tensor& x) {
        names.push_back(n);
        pt.push_back(&x);
    });
    grads.visit([&](const std::string&, const Tensor& x) { gt.push_back(&x); });
    state.m.visit([&](const std::string&, Tensor& x) { mt.push_back(&x); });
    state.v.visit([&](const std::string&, Tensor& x) { vt.push_back(&x); });

    for (std::size_t i = 0; i < pt.size(); ++i) {
        if (is_hi_tensor(names[i]) != hi_group) continue;
        Tensor& p = *pt[i];
        const Tensor& g = *gt[i];
        Tensor& m = *mt[i];
        Tensor& v = *vt[i];
        for (std::size_t k = 0; k < p.v.size(); ++k) {
            m.v[k] = f32_exact(cfg.beta1 * m.v[k] + (1.0 - cfg.beta1) * g.v[k]);
            v.v[k] = f32_exact(cfg.beta2 * v.v[k] + (1.0 - cfg.beta2) * g.v[k] * g.v[k]);
            double mhat = m.v[k] / bc1;
            double vhat = v.v[k] / bc2;
            p.v[k] = f32_exact(p.v[k] - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
        }
    }
}

}  // namespace tihdp
