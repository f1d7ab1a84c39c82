#include "tihdp/trainer.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <stdexcept>

namespace tihdp {

void PpoConfig::validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("ppo: gamma must be in (0, 1]");
    if (!(gae_lambda > 0.0 && gae_lambda <= 1.0))
        throw std::invalid_argument("ppo: gae_lambda must be in (0, 1]");
    if (!(clip > 0.0)) throw std::invalid_argument("ppo: clip must be > 0");
    if (learning_rate < 0.0) throw std::invalid_argument("ppo: learning_rate must be >= 0");
    if (entropy_coef < 0.0) throw std::invalid_argument("ppo: entropy_coef must be >= 0");
    if (value_coef < 0.0) throw std::invalid_argument("ppo: value_coef must be >= 0");
    if (epochs < 1) throw std::invalid_argument("ppo: epochs must be >= 1");
    if (minibatches < 1) throw std::invalid_argument("ppo: minibatches must be >= 1");
    if (!(max_grad_norm > 0.0)) throw std::invalid_argument("ppo: max_grad_norm must be > 0");
    if (bptt_chunk < 1) throw std::invalid_argument("ppo: bptt_chunk must be >= 1");
    if (parallel_envs < 1) throw std::invalid_argument("ppo: parallel_envs must be >= 1");
    if (total_env_steps < 0) throw std::invalid_argument("ppo: total_env_steps must be >= 0");
    if (checkpoint_interval < 1) throw std::invalid_argument("ppo: checkpoint_interval must be >= 1");
}

void TrainConfig::validate() const {
    run.scenario.validate();
    layout.validate();
    ppo.validate();
    if (layout.robots != run.scenario.robots)
        throw std::invalid_argument("trainer: layout robots must match scenario robots");
    if (layout.objects != static_cast<int>(run.scenario.objects()))
        throw std::invalid_argument("trainer: layout objects must match scenario object count");
    if (layout.obs.nearby_robots != run.obs.nearby_robots ||
        layout.obs.nearby_objects != run.obs.nearby_objects)
        throw std::invalid_argument("trainer: layout observation slots must match run observation slots");
    if (!(run.k_phi > 0.0 && run.k_phi <= 1.0))
        throw std::invalid_argument("trainer: k_phi must be in (0, 1]");
}

void compute_gae(const double* rewards, const double* values, const std::uint8_t* dones, int steps,
                 double gamma, double lambda, double bootstrap, double* advantages, double* returns) {
    double next_adv = 0.0;
    double next_value = bootstrap;
    for (int t = steps - 1; t >= 0; --t) {
        double live = dones[t] ? 0.0 : 1.0;
        double delta = rewards[t] + gamma * next_value * live - values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        advantages[t] = next_adv;
        returns[t] = next_adv + values[t];
        next_value = values[t];
    }
}

Surrogate clipped_surrogate(double ratio, double adv, double clip) {
    double s1 = ratio * adv;
    double s2 = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * adv;
    Surrogate out;
    out.value = std::min(s1, s2);
    // NaN flows through to the non-finite abort path instead of tripping here.
    assert(std::isnan(out.value) || out.value <= std::max(s1, s2) + 1e-9);
    out.dlogp_coef = s1 <= s2 ? s1 : 0.0;
    return out;
}

void RolloutBuffer::allocate(int steps_, int envs_, const TrainConfig& cfg) {
    steps = steps_;
    envs = envs_;
    robots = cfg.run.scenario.robots;
    objects = static_cast<int>(cfg.run.scenario.objects());
    hi_obs_dim = cfg.layout.hi_input_dim();
    hi_categorical = cfg.layout.hi_categorical();
    hi_act_width = hi_categorical ? 1 : cfg.layout.hi_head_dim();
    lo_obs_dim = cfg.layout.lo_input_dim();
    gstate_dim = global_state_dim(robots, objects);

    std::size_t nr = static_cast<std::size_t>(steps) * envs * robots;
    std::size_t ne = static_cast<std::size_t>(steps) * envs;
    hi_obs.assign(nr * hi_obs_dim, 0.0);
    hi_act.assign(nr * hi_act_width, 0);
    hi_logp.assign(nr, 0.0);
    lo_obs.assign(nr * lo_obs_dim, 0.0);
    lo_act.assign(nr * 2, 1);
    lo_logp.assign(nr, 0.0);
    lo_valid.assign(nr, 0);
    target.assign(nr, -1);
    lo_rew.assign(nr, 0.0);
    lo_val.assign(nr, 0.0);
    gstate.assign(ne * gstate_dim, 0.0);
    hi_rew.assign(ne, 0.0);
    hi_val.assign(ne, 0.0);
    done.assign(ne, 0);
    chunks.clear();
    episode_hi_returns.clear();
    episode_lo_returns.clear();
}

namespace {

std::vector<double> lo_critic_input(const double* gstate_row, int gdim, int robots, int objects,
                                    int robot, int target) {
    std::vector<double> in(static_cast<std::size_t>(gdim) + robots + objects, 0.0);
    std::copy(gstate_row, gstate_row + gdim, in.begin());
    in[gdim + robot] = 1.0;
    if (target >= 0 && target < objects) in[gdim + robots + target] = 1.0;
    return in;
}

}  // namespace

void collect_rollouts(std::vector<EnvRuntime>& envs, const TrainConfig& cfg, const ParamSet& params,
                      std::uint64_t master_seed, int steps, RolloutBuffer& out) {
    int E = static_cast<int>(envs.size());
    int R = cfg.run.scenario.robots;
    out.allocate(steps, E, cfg);

    std::vector<std::vector<int>> open_chunk(E, std::vector<int>(R, -1));
    for (int t = 0; t < steps; ++t) {
        for (int e = 0; e < E; ++e) {
            EnvRuntime& env = envs[e];
            for (int r = 0; r < R; ++r) {
                int& oc = open_chunk[e][r];
                if (oc < 0 || out.chunks[oc].len >= cfg.ppo.bptt_chunk || env.world.step_index == 0) {
                    RolloutBuffer::Chunk ch;
                    ch.env = e;
                    ch.robot = r;
                    ch.t0 = t;
                    ch.len = 0;
                    ch.s0 = env.hi_state[r];
                    out.chunks.push_back(std::move(ch));
                    oc = static_cast<int>(out.chunks.size()) - 1;
                }
            }

            EnvStepRecord rec = engine_step(env, cfg.run, params, false);

            std::size_t te = out.env_step_index(t, e);
            std::copy(rec.global_state.begin(), rec.global_state.end(),
                      out.gstate.begin() + te * out.gstate_dim);
            out.hi_rew[te] = rec.team_reward;
            out.hi_val[te] = critic_value(params.hi_critic, rec.global_state);
            out.done[te] = rec.episode_end ? 1 : 0;

            for (int r = 0; r < R; ++r) {
                const RobotStepRecord& rr = rec.robots[r];
                std::size_t ter = out.robot_step_index(t, e, r);
                std::copy(rr.hi_obs.begin(), rr.hi_obs.end(), out.hi_obs.begin() + ter * out.hi_obs_dim);
                for (int a = 0; a < out.hi_act_width; ++a) out.hi_act[ter * out.hi_act_width + a] = rr.hi_action[a];
                out.hi_logp[ter] = rr.hi_logprob;
                out.target[ter] = rr.target;
                out.lo_valid[ter] = rr.lo_valid ? 1 : 0;
                if (rr.lo_valid) {
                    std::copy(rr.lo_obs.begin(), rr.lo_obs.end(), out.lo_obs.begin() + ter * out.lo_obs_dim);
                    out.lo_act[ter * 2] = rr.move_index;
                    out.lo_act[ter * 2 + 1] = rr.turn_index;
                    out.lo_logp[ter] = rr.lo_logprob;
                    out.lo_rew[ter] = rr.lo_reward;
                    std::vector<double> cin = lo_critic_input(&out.gstate[te * out.gstate_dim],
                                                              out.gstate_dim, R, out.objects, r, rr.target);
                    out.lo_val[ter] = critic_value(params.lo_critic, cin);
                }
                out.chunks[open_chunk[e][r]].len += 1;
            }

            if (rec.episode_end) {
                out.episode_hi_returns.push_back(env.episode_hi_return);
                double lo_mean = 0.0;
                for (double x : env.episode_lo_return) lo_mean += x;
                out.episode_lo_returns.push_back(lo_mean / R);
                std::int64_t next_episode = env.episode_index + 1;
                env = make_env_runtime(cfg.run, cfg.layout, master_seed, e, next_episode);
                for (int r = 0; r < R; ++r) open_chunk[e][r] = -1;
            }
        }
    }
}

namespace {

struct Normalizer {
    double mean = 0.0, std = 1.0;
};

Normalizer normalize_in_place(std::vector<double>& values, const std::vector<std::size_t>& which) {
    Normalizer n;
    if (which.empty()) return n;
    double sum = 0.0;
    for (std::size_t i : which) sum += values[i];
    n.mean = sum / static_cast<double>(which.size());
    double sq = 0.0;
    for (std::size_t i : which) {
        double d = values[i] - n.mean;
        sq += d * d;
    }
    n.std = std::sqrt(sq / static_cast<double>(which.size()));
    double denom = n.std + 1e-8;
    for (std::size_t i : which) values[i] = (values[i] - n.mean) / denom;
    return n;
}

bool all_finite(const ParamSet& g, bool hi_group) {
    bool ok = true;
    g.visit([&](const std::string& name, const Tensor& t) {
        if (is_hi_tensor(name) != hi_group) return;
        for (double x : t.v)
            if (!std::isfinite(x)) ok = false;
    });
    return ok;
}

}  // namespace

TrainReport ppo_update(ParamSet& params, AdamState& adam, const RolloutBuffer& buf,
                       const PpoConfig& cfg, Rng& order_rng) {
    TrainReport report;
    const int T = buf.steps, E = buf.envs, R = buf.robots;
    const NetLayout& layout = params.layout;
    const int head = layout.hi_head_dim();
    const int bern_count =
        layout.variant == Variant::TihdpWithoutCom ? layout.obs.nearby_objects : head;

    // ---- advantages ----
    std::vector<double> hi_adv(static_cast<std::size_t>(T) * E), hi_ret(hi_adv.size());
    {
        std::vector<double> r(T), v(T), a(T), g(T);
        std::vector<std::uint8_t> d(T);
        for (int e = 0; e < E; ++e) {
            for (int t = 0; t < T; ++t) {
                std::size_t te = buf.env_step_index(t, e);
                r[t] = buf.hi_rew[te];
                v[t] = buf.hi_val[te];
                d[t] = buf.done[te];
            }
            compute_gae(r.data(), v.data(), d.data(), T, cfg.gamma, cfg.gae_lambda, 0.0, a.data(),
                        g.data());
            for (int t = 0; t < T; ++t) {
                std::size_t te = buf.env_step_index(t, e);
                hi_adv[te] = a[t];
                hi_ret[te] = g[t];
            }
        }
        std::vector<std::size_t> all(hi_adv.size());
        std::iota(all.begin(), all.end(), 0);
        normalize_in_place(hi_adv, all);
    }

    std::vector<double> lo_adv(static_cast<std::size_t>(T) * E * R, 0.0), lo_ret(lo_adv.size(), 0.0);
    std::vector<std::size_t> lo_samples_idx;
    {
        std::vector<double> r, v, a, g;
        std::vector<std::uint8_t> d;
        for (int e = 0; e < E; ++e)
            for (int rb = 0; rb < R; ++rb) {
                int t = 0;
                while (t < T) {
                    if (!buf.lo_valid[buf.robot_step_index(t, e, rb)]) {
                        ++t;
                        continue;
                    }
                    int b = t;
                    while (b + 1 < T && buf.lo_valid[buf.robot_step_index(b + 1, e, rb)]) ++b;
                    int len = b - t + 1;
                    r.resize(len);
                    v.resize(len);
                    d.resize(len);
                    a.resize(len);
                    g.resize(len);
                    for (int s = 0; s < len; ++s) {
                        std::size_t ter = buf.robot_step_index(t + s, e, rb);
                        r[s] = buf.lo_rew[ter];
                        v[s] = buf.lo_val[ter];
                        d[s] = buf.done[buf.env_step_index(t + s, e)];
                    }
                    // a gap after the run means the task stream ended for this
                    // robot; treat it as terminal for the lo policy
                    d[len - 1] = 1;
                    compute_gae(r.data(), v.data(), d.data(), len, cfg.gamma, cfg.gae_lambda, 0.0,
                                a.data(), g.data());
                    for (int s = 0; s < len; ++s) {
                        std::size_t ter = buf.robot_step_index(t + s, e, rb);
                        lo_adv[ter] = a[s];
                        lo_ret[ter] = g[s];
                        lo_samples_idx.push_back(ter);
                    }
                    t = b + 1;
                }
            }
        normalize_in_place(lo_adv, lo_samples_idx);
    }

    // ---- snapshot for rollback ----
    ParamSet params0 = params;
    AdamState adam0 = adam;
    AdamConfig acfg;
    acfg.lr = cfg.learning_rate;

    std::vector<int> chunk_order(buf.chunks.size());
    std::iota(chunk_order.begin(), chunk_order.end(), 0);
    std::vector<std::size_t> te_order(static_cast<std::size_t>(T) * E);
    std::iota(te_order.begin(), te_order.end(), 0);
    std::vector<std::size_t> lo_order = lo_samples_idx;

    ParamSet grads = zeros_like(params);
    double hi_pol_sum = 0, hi_val_sum = 0, hi_ent_sum = 0, hi_norm_sum = 0;
    double lo_pol_sum = 0, lo_val_sum = 0, lo_ent_sum = 0, lo_norm_sum = 0;
    int hi_mb_done = 0, lo_mb_done = 0;

    auto abort_update = [&](const std::string& reason) {
        params = params0;
        adam = adam0;
        report.aborted = true;
        report.abort_reason = reason;
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        order_rng.shuffle(chunk_order);
        order_rng.shuffle(te_order);
        order_rng.shuffle(lo_order);

        for (int mb = 0; mb < cfg.minibatches; ++mb) {
            // ---------------- hi group ----------------
            std::size_t c0 = chunk_order.size() * mb / cfg.minibatches;
            std::size_t c1 = chunk_order.size() * (mb + 1) / cfg.minibatches;
            std::size_t v0 = te_order.size() * mb / cfg.minibatches;
            std::size_t v1 = te_order.size() * (mb + 1) / cfg.minibatches;

            std::int64_t n_steps = 0;
            for (std::size_t ci = c0; ci < c1; ++ci) n_steps += buf.chunks[chunk_order[ci]].len;
            if (n_steps > 0 && v1 > v0) {
                grads.zero_all();
                double pol = 0, ent = 0, vloss = 0;
                double pscale = 1.0 / static_cast<double>(n_steps);

                HiSeqTrace trace;
                std::vector<std::vector<double>> obs_seq, dlogits;
                for (std::size_t ci = c0; ci < c1; ++ci) {
                    const RolloutBuffer::Chunk& ch = buf.chunks[chunk_order[ci]];
                    obs_seq.assign(ch.len, std::vector<double>(buf.hi_obs_dim));
                    for (int s = 0; s < ch.len; ++s) {
                        std::size_t ter = buf.robot_step_index(ch.t0 + s, ch.env, ch.robot);
                        const double* src = &buf.hi_obs[ter * buf.hi_obs_dim];
                        std::copy(src, src + buf.hi_obs_dim, obs_seq[s].begin());
                    }
                    hi_actor_sequence_forward(params, obs_seq, ch.s0, trace);
                    dlogits.assign(ch.len, std::vector<double>(head, 0.0));
                    for (int s = 0; s < ch.len; ++s) {
                        std::size_t ter = buf.robot_step_index(ch.t0 + s, ch.env, ch.robot);
                        std::size_t te = buf.env_step_index(ch.t0 + s, ch.env);
                        double adv = hi_adv[te];
                        double new_logp, entropy;
                        if (buf.hi_categorical) {
                            int act = buf.hi_act[ter];
                            new_logp = categorical_logprob(trace.logits[s], act);
                            entropy = categorical_entropy(trace.logits[s]);
                        } else {
                            std::vector<int> bits(head);
                            for (int k = 0; k < head; ++k) bits[k] = buf.hi_act[ter * head + k];
                            new_logp = bernoulli_logprob(trace.logits[s], bits, bern_count);
                            entropy = bernoulli_entropy(trace.logits[s], bern_count);
                        }
                        double ratio = std::exp(new_logp - buf.hi_logp[ter]);
                        Surrogate sg = clipped_surrogate(ratio, adv, cfg.clip);
                        pol += -sg.value;
                        ent += entropy;
                        double coef = sg.dlogp_coef;
                        if (buf.hi_categorical) {
                            categorical_logprob_grad(trace.logits[s], buf.hi_act[ter], -coef * pscale,
                                                     dlogits[s].data());
                            categorical_entropy_grad(trace.logits[s], -cfg.entropy_coef * pscale,
                                                     dlogits[s].data());
                        } else {
                            std::vector<int> bits(head);
                            for (int k = 0; k < head; ++k) bits[k] = buf.hi_act[ter * head + k];
                            bernoulli_logprob_grad(trace.logits[s], bits, bern_count, -coef * pscale,
                                                   dlogits[s].data());
                            bernoulli_entropy_grad(trace.logits[s], bern_count,
                                                   -cfg.entropy_coef * pscale, dlogits[s].data());
                        }
                    }
                    hi_actor_sequence_backward(params, trace, dlogits, grads);
                }

                double vscale = 1.0 / static_cast<double>(v1 - v0);
                CriticTrace ct;
                std::vector<double> gin(buf.gstate_dim);
                for (std::size_t vi = v0; vi < v1; ++vi) {
                    std::size_t te = te_order[vi];
                    std::copy(&buf.gstate[te * buf.gstate_dim],
                              &buf.gstate[te * buf.gstate_dim] + buf.gstate_dim, gin.begin());
                    double v = critic_forward_traced(params.hi_critic, gin, ct);
                    double err = v - hi_ret[te];
                    vloss += cfg.value_coef * err * err;
                    critic_backward(params.hi_critic, ct, cfg.value_coef * 2.0 * err * vscale,
                                    grads.hi_critic);
                }

                double pol_mean = pol / static_cast<double>(n_steps);
                double ent_mean = ent / static_cast<double>(n_steps);
                double v_mean = vloss / static_cast<double>(v1 - v0);
                if (!std::isfinite(pol_mean) || !std::isfinite(v_mean) || !std::isfinite(ent_mean) ||
                    !all_finite(grads, true)) {
                    abort_update("non-finite hi loss or gradient");
                    return report;
                }
                double norm = clip_grad_norm(grads, true, cfg.max_grad_norm);
                adam_step(params, grads, adam, true, acfg);
                hi_pol_sum += pol_mean;
                hi_ent_sum += ent_mean;
                hi_val_sum += v_mean;
                hi_norm_sum += norm;
                ++hi_mb_done;
                report.hi_samples += n_steps;
            }

            // ---------------- lo group ----------------
            std::size_t l0 = lo_order.size() * mb / cfg.minibatches;
            std::size_t l1 = lo_order.size() * (mb + 1) / cfg.minibatches;
            if (l1 > l0) {
                grads.zero_all();
                double pol = 0, ent = 0, vloss = 0;
                double scale = 1.0 / static_cast<double>(l1 - l0);

                LoTrace lt;
                CriticTrace ct;
                std::vector<double> obs(buf.lo_obs_dim);
                std::vector<double> dmove(3), dturn(3);
                for (std::size_t li = l0; li < l1; ++li) {
                    std::size_t ter = lo_order[li];
                    std::size_t te = ter / R;
                    int robot = static_cast<int>(ter % R);
                    std::copy(&buf.lo_obs[ter * buf.lo_obs_dim],
                              &buf.lo_obs[ter * buf.lo_obs_dim] + buf.lo_obs_dim, obs.begin());
                    lo_actor_forward_traced(params, obs, lt);
                    int mi = buf.lo_act[ter * 2], ti = buf.lo_act[ter * 2 + 1];
                    double new_logp = categorical_logprob(lt.move_logits, mi) +
                                      categorical_logprob(lt.turn_logits, ti);
                    double entropy = categorical_entropy(lt.move_logits) +
                                     categorical_entropy(lt.turn_logits);
                    double ratio = std::exp(new_logp - buf.lo_logp[ter]);
                    double adv = lo_adv[ter];
                    Surrogate sg = clipped_surrogate(ratio, adv, cfg.clip);
                    pol += -sg.value;
                    ent += entropy;
                    double coef = sg.dlogp_coef;
                    std::fill(dmove.begin(), dmove.end(), 0.0);
                    std::fill(dturn.begin(), dturn.end(), 0.0);
                    categorical_logprob_grad(lt.move_logits, mi, -coef * scale, dmove.data());
                    categorical_logprob_grad(lt.turn_logits, ti, -coef * scale, dturn.data());
                    categorical_entropy_grad(lt.move_logits, -cfg.entropy_coef * scale, dmove.data());
                    categorical_entropy_grad(lt.turn_logits, -cfg.entropy_coef * scale, dturn.data());
                    lo_actor_backward(params, lt, dmove.data(), dturn.data(), grads);

                    std::vector<double> cin = lo_critic_input(&buf.gstate[te * buf.gstate_dim],
                                                              buf.gstate_dim, R, buf.objects, robot,
                                                              buf.target[ter]);
                    double v = critic_forward_traced(params.lo_critic, cin, ct);
                    double err = v - lo_ret[ter];
                    vloss += cfg.value_coef * err * err;
                    critic_backward(params.lo_critic, ct, cfg.value_coef * 2.0 * err * scale,
                                    grads.lo_critic);
                }

                double pol_mean = pol * scale;
                double ent_mean = ent * scale;
                double v_mean = vloss * scale;
                if (!std::isfinite(pol_mean) || !std::isfinite(v_mean) || !std::isfinite(ent_mean) ||
                    !all_finite(grads, false)) {
                    abort_update("non-finite lo loss or gradient");
                    return report;
                }
                double norm = clip_grad_norm(grads, false, cfg.max_grad_norm);
                adam_step(params, grads, adam, false, acfg);
                lo_pol_sum += pol_mean;
                lo_ent_sum += ent_mean;
                lo_val_sum += v_mean;
                lo_norm_sum += norm;
                ++lo_mb_done;
                report.lo_samples += static_cast<std::int64_t>(l1 - l0);
            }
        }
    }

    if (hi_mb_done > 0) {
        report.hi_policy_loss = hi_pol_sum / hi_mb_done;
        report.hi_value_loss = hi_val_sum / hi_mb_done;
        report.hi_entropy = hi_ent_sum / hi_mb_done;
        report.hi_grad_norm = hi_norm_sum / hi_mb_done;
    }
    if (lo_mb_done > 0) {
        report.lo_policy_loss = lo_pol_sum / lo_mb_done;
        report.lo_value_loss = lo_val_sum / lo_mb_done;
        report.lo_entropy = lo_ent_sum / lo_mb_done;
        report.lo_grad_norm = lo_norm_sum / lo_mb_done;
    }
    return report;
}

namespace {

std::string checkpoint_name(std::int64_t update) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "checkpoint_%06lld.ckpt", static_cast<long long>(update));
    return buf;
}

double mean_of(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

}  // namespace

TrainSummary train_run(const TrainConfig& cfg, const nlohmann::ordered_json& resolved_config,
                       const TrainOptions& opts, std::ostream* console) {
    cfg.validate();
    namespace fs = std::filesystem;
    fs::create_directories(opts.out_dir);

    ParamSet params;
    AdamState adam;
    Rng trainer_rng(0);
    std::uint64_t master_seed = opts.seed;
    std::int64_t env_steps = 0, update_index = 0;
    std::vector<std::int64_t> episodes_done(cfg.ppo.parallel_envs, 0);

    bool resumed = !opts.resume_path.empty();
    if (resumed) {
        Checkpoint ck = load_checkpoint(opts.resume_path);
        if (!ck.trainer.present)
            throw std::runtime_error("resume: checkpoint has no trainer state: " + opts.resume_path);
        if (ck.params.layout.tag() != cfg.layout.tag())
            throw std::runtime_error("resume: layout mismatch: checkpoint " + ck.params.layout.tag() +
                                     " vs config " + cfg.layout.tag());
        if (static_cast<int>(ck.trainer.episodes_done.size()) != cfg.ppo.parallel_envs)
            throw std::runtime_error("resume: parallel_envs mismatch");
        params = ck.params;
        adam = make_adam_state(params);
        adam.m = ck.adam_m;
        adam.v = ck.adam_v;
        adam.step_hi = ck.trainer.adam_step_hi;
        adam.step_lo = ck.trainer.adam_step_lo;
        trainer_rng.set_state(ck.trainer.trainer_rng);
        master_seed = ck.trainer.master_seed;
        env_steps = ck.trainer.env_steps;
        update_index = ck.trainer.update_index;
        episodes_done = ck.trainer.episodes_done;
    } else {
        params = init_params(cfg.layout, master_seed);
        adam = make_adam_state(params);
        trainer_rng = Rng(Rng::derive(master_seed, 0, 0, 3));
    }

    {
        std::ofstream cf(opts.out_dir + "/config.resolved.json", std::ios::trunc);
        cf << resolved_config.dump(2) << "\n";
        if (!cf) throw std::runtime_error("train: cannot write resolved config in " + opts.out_dir);
    }
    std::string metrics_path = opts.out_dir + "/metrics.jsonl";
    std::ofstream metrics(metrics_path, resumed ? std::ios::app : std::ios::trunc);
    if (!metrics) throw std::runtime_error("train: cannot open metrics log: " + metrics_path);

    std::vector<EnvRuntime> envs;
    envs.reserve(cfg.ppo.parallel_envs);
    for (int e = 0; e < cfg.ppo.parallel_envs; ++e)
        envs.push_back(make_env_runtime(cfg.run, cfg.layout, master_seed, e, episodes_done[e]));

    auto save = [&](const std::string& name) {
        Checkpoint ck;
        ck.params = params;
        ck.adam_m = adam.m;
        ck.adam_v = adam.v;
        ck.trainer.present = true;
        ck.trainer.adam_step_hi = adam.step_hi;
        ck.trainer.adam_step_lo = adam.step_lo;
        ck.trainer.trainer_rng = trainer_rng.state();
        ck.trainer.master_seed = master_seed;
        ck.trainer.env_steps = env_steps;
        ck.trainer.update_index = update_index;
        ck.trainer.episodes_done.assign(envs.size(), 0);
        for (std::size_t e = 0; e < envs.size(); ++e) ck.trainer.episodes_done[e] = envs[e].episode_index;
        ck.config = resolved_config;
        save_checkpoint(ck, opts.out_dir + "/" + name);
        save_checkpoint(ck, opts.out_dir + "/latest.ckpt");
        return opts.out_dir + "/" + name;
    };

    TrainSummary summary;
    RolloutBuffer buf;
    int horizon = cfg.run.scenario.episode_length;
    std::string last_saved;
    bool saved_this_update = false;
    while (env_steps < cfg.ppo.total_env_steps) {
        collect_rollouts(envs, cfg, params, master_seed, horizon, buf);
        env_steps += buf.total_env_steps();
        TrainReport rep = ppo_update(params, adam, buf, cfg.ppo, trainer_rng);
        ++update_index;

        double hi_mean = mean_of(buf.episode_hi_returns);
        double lo_mean = mean_of(buf.episode_lo_returns);
        nlohmann::ordered_json line;
        line["update"] = update_index;
        line["env_steps"] = env_steps;
        line["episodes"] = buf.episode_hi_returns.size();
        line["hi_return_mean"] = hi_mean;
        line["lo_return_mean"] = lo_mean;
        line["hi_policy_loss"] = rep.hi_policy_loss;
        line["hi_value_loss"] = rep.hi_value_loss;
        line["hi_entropy"] = rep.hi_entropy;
        line["hi_grad_norm"] = rep.hi_grad_norm;
        line["lo_policy_loss"] = rep.lo_policy_loss;
        line["lo_value_loss"] = rep.lo_value_loss;
        line["lo_entropy"] = rep.lo_entropy;
        line["lo_grad_norm"] = rep.lo_grad_norm;
        line["aborted"] = rep.aborted;
        metrics << line.dump() << "\n";
        metrics.flush();
        if (!metrics) throw std::runtime_error("train: metrics write failed: " + metrics_path);
        if (console)
            (*console) << "update " << update_index << " env_steps " << env_steps << " hi_return "
                       << hi_mean << " lo_return " << lo_mean
                       << (rep.aborted ? " (update aborted: " + rep.abort_reason + ")" : "") << "\n";

        saved_this_update = false;
        if (update_index % cfg.ppo.checkpoint_interval == 0 || env_steps >= cfg.ppo.total_env_steps) {
            last_saved = save(checkpoint_name(update_index));
            saved_this_update = true;
        }
        if (opts.stop_probe && opts.stop_probe(env_steps, hi_mean)) break;
    }
    if (!saved_this_update) last_saved = save(checkpoint_name(update_index));

    summary.env_steps = env_steps;
    summary.updates = update_index;
    summary.final_checkpoint = last_saved;
    summary.metrics_path = metrics_path;
    return summary;
}

}  // namespace tihdp
