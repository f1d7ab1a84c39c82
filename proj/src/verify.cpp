#include "tihdp/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "tihdp/nets.hpp"
#include "tihdp/rng.hpp"
#include "tihdp/trainer.hpp"

namespace tihdp {

std::vector<double> priority_update_reference(const std::vector<double>& phi, double k_phi,
                                              const std::vector<double>& c_bar, int sigma_i,
                                              const std::vector<double>& request_sums,
                                              const std::vector<bool>& completed) {
    std::size_t m = phi.size();
    std::vector<double> raw(m, 0.0);
    double total = 0.0;
    for (std::size_t l = 0; l < m; ++l) {
        if (completed[l]) continue;
        double v = (1.0 - k_phi) * phi[l] + k_phi * (c_bar[l] + sigma_i * request_sums[l]);
        raw[l] = std::max(v, 0.0);
        total += raw[l];
    }
    if (total <= 0.0) return std::vector<double>(m, 0.0);
    for (auto& v : raw) v /= total;
    return raw;
}

void gae_reference(const double* rewards, const double* values, const std::uint8_t* dones,
                   int steps, double gamma, double lambda, double bootstrap, double* advantages,
                   double* returns) {
    for (int t = 0; t < steps; ++t) {
        double acc = 0.0;
        double weight = 1.0;
        for (int k = t; k < steps; ++k) {
            double next_v = k + 1 < steps ? values[k + 1] : bootstrap;
            double cont = dones[k] ? 0.0 : 1.0;
            double delta = rewards[k] + gamma * next_v * cont - values[k];
            acc += weight * delta;
            if (cont == 0.0) break;
            weight *= gamma * lambda;
        }
        advantages[t] = acc;
        returns[t] = acc + values[t];
    }
}

OracleResult run_priority_oracle(int calls, std::uint64_t seed) {
    Rng rng(Rng::derive(seed, 0x7072696f, 0, 0));
    OracleResult res;
    res.name = "priority-update";
    res.limit = 1e-12;
    for (int call = 0; call < calls; ++call) {
        int m = 1 + static_cast<int>(rng.uniform_int(8));
        PriorityVector pv;
        pv.k_phi = 0.01 + 0.99 * rng.uniform();
        pv.owner = 0;
        pv.phi.resize(m);
        double total = 0.0;
        for (auto& v : pv.phi) {
            v = rng.uniform();
            total += v;
        }
        // Mix of normalized vectors and raw junk; the update must cope with both.
        if (rng.uniform() < 0.8 && total > 0.0)
            for (auto& v : pv.phi) v /= total;

        std::vector<double> c_bar(m), sums(m);
        std::vector<bool> completed(m);
        for (int l = 0; l < m; ++l) {
            double r = rng.uniform();
            c_bar[l] = r < 0.4 ? -1.0 : (r < 0.8 ? 1.0 : 0.0);
            sums[l] = static_cast<double>(rng.uniform_int(4));
            completed[l] = rng.uniform() < 0.3;
        }
        int sigma = rng.uniform() < 0.5 ? 1 : 0;

        PriorityVector got = update_priorities(pv, c_bar, sigma, sums, completed);
        std::vector<double> want =
            priority_update_reference(pv.phi, pv.k_phi, c_bar, sigma, sums, completed);

        double sum_got = 0.0;
        for (int l = 0; l < m; ++l) {
            double err = std::abs(got.phi[l] - want[l]);
            res.worst = std::max(res.worst, err);
            if (got.phi[l] < 0.0) {
                res.detail = "negative entry";
                return res;
            }
            if (completed[l] && got.phi[l] != 0.0) {
                res.detail = "completed entry not zeroed";
                return res;
            }
            sum_got += got.phi[l];
        }
        if (sum_got != 0.0 && std::abs(sum_got - 1.0) > 1e-12) {
            res.detail = "normalization off by " + std::to_string(sum_got - 1.0);
            return res;
        }
    }
    res.pass = res.worst <= res.limit;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%d calls, worst %.3e", calls, res.worst);
    res.detail = buf;
    return res;
}

OracleResult run_gae_oracle(int sequences, std::uint64_t seed) {
    Rng rng(Rng::derive(seed, 0x67616500, 0, 0));
    OracleResult res;
    res.name = "gae-recursion";
    res.limit = 1e-10;
    for (int s = 0; s < sequences; ++s) {
        int steps = 1 + static_cast<int>(rng.uniform_int(32));
        std::vector<double> rewards(steps), values(steps);
        std::vector<std::uint8_t> dones(steps);
        for (int t = 0; t < steps; ++t) {
            rewards[t] = rng.normal();
            values[t] = rng.normal();
            dones[t] = rng.uniform() < 0.15 ? 1 : 0;
        }
        double gamma = rng.uniform();
        double lambda = rng.uniform();
        double bootstrap = rng.normal();

        std::vector<double> adv(steps), ret(steps), adv_ref(steps), ret_ref(steps);
        compute_gae(rewards.data(), values.data(), dones.data(), steps, gamma, lambda, bootstrap,
                    adv.data(), ret.data());
        gae_reference(rewards.data(), values.data(), dones.data(), steps, gamma, lambda, bootstrap,
                      adv_ref.data(), ret_ref.data());
        for (int t = 0; t < steps; ++t) {
            res.worst = std::max(res.worst, std::abs(adv[t] - adv_ref[t]));
            res.worst = std::max(res.worst, std::abs(ret[t] - ret_ref[t]));
        }
    }
    res.pass = res.worst <= res.limit;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%d sequences, worst %.3e", sequences, res.worst);
    res.detail = buf;
    return res;
}

namespace {

// Largest relative mismatch between analytic and finite-difference gradients
// over every tensor whose name starts with `prefix`.
double fd_check(ParamSet& params, const ParamSet& grads, const std::string& prefix,
                const std::function<double()>& loss) {
    const double h = 1e-5;
    double worst = 0.0;
    std::vector<Tensor*> targets;
    std::vector<const Tensor*> analytic;
    params.visit([&](const std::string& name, Tensor& t) {
        if (name.rfind(prefix, 0) == 0) targets.push_back(&t);
    });
    grads.visit([&](const std::string& name, const Tensor& t) {
        if (name.rfind(prefix, 0) == 0) analytic.push_back(&t);
    });
    for (std::size_t ti = 0; ti < targets.size(); ++ti) {
        Tensor& t = *targets[ti];
        const Tensor& g = *analytic[ti];
        for (std::size_t k = 0; k < t.v.size(); ++k) {
            double saved = t.v[k];
            t.v[k] = saved + h;
            double up = loss();
            t.v[k] = saved - h;
            double down = loss();
            t.v[k] = saved;
            double fd = (up - down) / (2.0 * h);
            double denom = std::max({std::abs(fd), std::abs(g.v[k]), 1e-6});
            worst = std::max(worst, std::abs(fd - g.v[k]) / denom);
        }
    }
    return worst;
}

NetLayout small_layout(int which) {
    NetLayout layout;
    switch (which) {
        case 0:
            layout.variant = Variant::TihdpWithCom;
            layout.obs = ObsConfig{1, 2};
            layout.robots = 2;
            layout.objects = 2;
            layout.hidden = {8, 6};
            layout.lstm_hidden = 5;
            break;
        case 1:
            layout.variant = Variant::TihdpWithoutCom;
            layout.obs = ObsConfig{2, 1};
            layout.robots = 3;
            layout.objects = 3;
            layout.hidden = {10};
            layout.lstm_hidden = 4;
            break;
        case 2:
            layout.variant = Variant::TwoLayeredGlobal;
            layout.obs = ObsConfig{1, 1};
            layout.robots = 2;
            layout.objects = 3;
            layout.hidden = {7, 5};
            layout.lstm_hidden = 4;
            break;
        case 3:
            layout.variant = Variant::TwoLayeredLocal;
            layout.obs = ObsConfig{1, 2};
            layout.robots = 2;
            layout.objects = 4;
            layout.hidden = {6};
            layout.lstm_hidden = 6;
            break;
        default:
            layout.variant = Variant::TihdpWithCom;
            layout.obs = ObsConfig{2, 3};
            layout.robots = 3;
            layout.objects = 4;
            layout.hidden = {9, 7};
            layout.lstm_hidden = 8;
            break;
    }
    return layout;
}

std::vector<double> random_vec(Rng& rng, int n, double scale) {
    std::vector<double> v(n);
    for (auto& x : v) x = scale * rng.normal();
    return v;
}

}  // namespace

std::vector<OracleResult> run_gradient_checks(std::uint64_t seed) {
    std::vector<OracleResult> out;
    for (int which = 0; which < 5; ++which) {
        NetLayout layout = small_layout(which);
        ParamSet params = init_params(layout, Rng::derive(seed, 0x67726164, which, 0));
        Rng rng(Rng::derive(seed, 0x67726164, which, 1));

        OracleResult res;
        res.name = std::string("grad-") + variant_name(layout.variant) + "-" +
                   std::to_string(which);
        res.limit = 1e-4;
        double worst = 0.0;
        std::string worst_part = "none";
        auto track = [&](const char* part, double err) {
            if (err > worst) {
                worst = err;
                worst_part = part;
            }
        };

        {  // hi actor: log-probability + entropy of a fixed action sequence
            const int T = 5;
            std::vector<std::vector<double>> obs_seq;
            for (int t = 0; t < T; ++t)
                obs_seq.push_back(random_vec(rng, layout.hi_input_dim(), 0.7));
            int bern = layout.variant == Variant::TihdpWithoutCom ? layout.obs.nearby_objects
                                                                  : layout.hi_head_dim();
            HiSeqTrace probe;
            hi_actor_sequence_forward(params, obs_seq, LstmState::zeros(layout.lstm_hidden),
                                      probe);
            std::vector<std::vector<int>> bit_actions;
            std::vector<int> cat_actions;
            for (int t = 0; t < T; ++t) {
                if (layout.hi_categorical())
                    cat_actions.push_back(categorical_sample(probe.logits[t], rng));
                else
                    bit_actions.push_back(bernoulli_sample(probe.logits[t], rng));
            }
            auto loss = [&]() {
                HiSeqTrace trace;
                hi_actor_sequence_forward(params, obs_seq, LstmState::zeros(layout.lstm_hidden),
                                          trace);
                double total = 0.0;
                for (int t = 0; t < T; ++t) {
                    if (layout.hi_categorical())
                        total += categorical_logprob(trace.logits[t], cat_actions[t]) +
                                 0.3 * categorical_entropy(trace.logits[t]);
                    else
                        total += bernoulli_logprob(trace.logits[t], bit_actions[t], bern) +
                                 0.3 * bernoulli_entropy(trace.logits[t], bern);
                }
                return total;
            };
            ParamSet grads = zeros_like(params);
            HiSeqTrace trace;
            hi_actor_sequence_forward(params, obs_seq, LstmState::zeros(layout.lstm_hidden),
                                      trace);
            std::vector<std::vector<double>> dlogits(
                T, std::vector<double>(layout.hi_head_dim(), 0.0));
            for (int t = 0; t < T; ++t) {
                if (layout.hi_categorical()) {
                    categorical_logprob_grad(trace.logits[t], cat_actions[t], 1.0,
                                             dlogits[t].data());
                    categorical_entropy_grad(trace.logits[t], 0.3, dlogits[t].data());
                } else {
                    bernoulli_logprob_grad(trace.logits[t], bit_actions[t], bern, 1.0,
                                           dlogits[t].data());
                    bernoulli_entropy_grad(trace.logits[t], bern, 0.3, dlogits[t].data());
                }
            }
            hi_actor_sequence_backward(params, trace, dlogits, grads);
            track("hi_actor", fd_check(params, grads, "hi_actor/", loss));
        }

        {  // lo actor
            const int S = 3;
            std::vector<std::vector<double>> obs;
            std::vector<int> moves, turns;
            for (int s = 0; s < S; ++s) {
                obs.push_back(random_vec(rng, layout.lo_input_dim(), 0.7));
                LoStepResult r = lo_actor_step(params, obs.back());
                moves.push_back(categorical_sample(r.move_logits, rng));
                turns.push_back(categorical_sample(r.turn_logits, rng));
            }
            auto loss = [&]() {
                double total = 0.0;
                for (int s = 0; s < S; ++s) {
                    LoStepResult r = lo_actor_step(params, obs[s]);
                    total += categorical_logprob(r.move_logits, moves[s]) +
                             categorical_logprob(r.turn_logits, turns[s]) +
                             0.3 * (categorical_entropy(r.move_logits) +
                                    categorical_entropy(r.turn_logits));
                }
                return total;
            };
            ParamSet grads = zeros_like(params);
            for (int s = 0; s < S; ++s) {
                LoTrace trace;
                lo_actor_forward_traced(params, obs[s], trace);
                std::vector<double> dmove(3, 0.0), dturn(3, 0.0);
                categorical_logprob_grad(trace.move_logits, moves[s], 1.0, dmove.data());
                categorical_entropy_grad(trace.move_logits, 0.3, dmove.data());
                categorical_logprob_grad(trace.turn_logits, turns[s], 1.0, dturn.data());
                categorical_entropy_grad(trace.turn_logits, 0.3, dturn.data());
                lo_actor_backward(params, trace, dmove.data(), dturn.data(), grads);
            }
            track("lo_actor", fd_check(params, grads, "lo_actor/", loss));
        }

        auto critic_case = [&](const char* part, const std::string& prefix, Critic& critic,
                               int dim) {
            const int S = 3;
            std::vector<std::vector<double>> inputs;
            std::vector<double> targets;
            for (int s = 0; s < S; ++s) {
                inputs.push_back(random_vec(rng, dim, 0.7));
                targets.push_back(rng.normal());
            }
            auto loss = [&]() {
                double total = 0.0;
                for (int s = 0; s < S; ++s) {
                    double err = critic_value(critic, inputs[s]) - targets[s];
                    total += err * err;
                }
                return total;
            };
            ParamSet grads = zeros_like(params);
            Critic* gc = prefix == "hi_critic/" ? &grads.hi_critic : &grads.lo_critic;
            for (int s = 0; s < S; ++s) {
                CriticTrace trace;
                double v = critic_forward_traced(critic, inputs[s], trace);
                critic_backward(critic, trace, 2.0 * (v - targets[s]), *gc);
            }
            track(part, fd_check(params, grads, prefix, loss));
        };
        critic_case("hi_critic", "hi_critic/", params.hi_critic, layout.hi_critic_dim());
        critic_case("lo_critic", "lo_critic/", params.lo_critic, layout.lo_critic_dim());

        {  // value gradient w.r.t. the observation itself
            std::vector<double> input = random_vec(rng, layout.hi_critic_dim(), 0.7);
            CriticTrace trace;
            critic_forward_traced(params.hi_critic, input, trace);
            const Affine& head = params.hi_critic.head;
            std::vector<double> dlast(head.in_dim());
            for (int j = 0; j < head.in_dim(); ++j) dlast[j] = head.W(0, j);
            Mlp trunk_grads;
            for (const Affine& a : params.hi_critic.trunk.layers)
                trunk_grads.layers.push_back(
                    Affine{Tensor(a.W.rows, a.W.cols), Tensor(a.b.rows, 1)});
            std::vector<double> dx(input.size(), 0.0);
            mlp_backward(params.hi_critic.trunk, trace.trunk, dlast.data(), trunk_grads,
                         dx.data());
            const double h = 1e-5;
            double err = 0.0;
            for (std::size_t k = 0; k < input.size(); ++k) {
                double saved = input[k];
                input[k] = saved + h;
                double up = critic_value(params.hi_critic, input);
                input[k] = saved - h;
                double down = critic_value(params.hi_critic, input);
                input[k] = saved;
                double fd = (up - down) / (2.0 * h);
                double denom = std::max({std::abs(fd), std::abs(dx[k]), 1e-6});
                err = std::max(err, std::abs(fd - dx[k]) / denom);
            }
            track("input-grad", err);
        }

        res.worst = worst;
        res.pass = worst <= res.limit;
        res.detail = "worst " + worst_part;
        out.push_back(res);
    }
    return out;
}

}  // namespace tihdp
