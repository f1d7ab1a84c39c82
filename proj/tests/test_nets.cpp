#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "tihdp/checkpoint.hpp"
#include "tihdp/nets.hpp"
#include "tihdp/verify.hpp"

using namespace tihdp;

namespace {

NetLayout tiny_layout() {
    NetLayout layout;
    layout.variant = Variant::TihdpWithCom;
    layout.obs = ObsConfig{2, 2};
    layout.robots = 3;
    layout.objects = 4;
    layout.hidden = {16, 8};
    layout.lstm_hidden = 8;
    return layout;
}

std::vector<double> random_obs(Rng& rng, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = rng.normal();
    return v;
}

}  // namespace

TEST_CASE("zero parameters give uniform distributions and zero value") {
    NetLayout layout = tiny_layout();
    ParamSet p = make_params(layout);
    LstmState s = LstmState::zeros(layout.lstm_hidden);
    Rng rng(1);
    std::vector<double> obs = random_obs(rng, layout.hi_input_dim());

    HiStepResult hi = hi_actor_step(p, obs, s);
    for (double logit : hi.logits) CHECK(logit == 0.0);
    for (double logit : hi.logits) CHECK(sigmoid(logit) == doctest::Approx(0.5));

    LoStepResult lo = lo_actor_step(p, random_obs(rng, 24));
    CHECK(categorical_logprob(lo.move_logits, 0) == doctest::Approx(std::log(1.0 / 3.0)));

    CHECK(critic_value(p.hi_critic, random_obs(rng, layout.hi_critic_dim())) == 0.0);
}

TEST_CASE("log-probability and entropy reference values") {
    std::vector<double> zero4(4, 0.0);
    CHECK(bernoulli_logprob(zero4, {1, 0, 1, 1}, 1) == doctest::Approx(-0.6931).epsilon(1e-4));
    CHECK(bernoulli_logprob(zero4, {0, 0, 0, 0}, 4) == doctest::Approx(4.0 * std::log(0.5)));
    CHECK(bernoulli_entropy(zero4, 4) == doctest::Approx(2.7726).epsilon(1e-4));

    std::vector<double> zero3(3, 0.0);
    double pair = categorical_logprob(zero3, 1) + categorical_logprob(zero3, 2);
    CHECK(pair == doctest::Approx(-2.1972).epsilon(1e-4));
    CHECK(categorical_entropy(zero3) == doctest::Approx(std::log(3.0)));
}

TEST_CASE("initialization is seed-deterministic with near-uniform heads") {
    NetLayout layout = tiny_layout();
    ParamSet a = init_params(layout, 9);
    ParamSet b = init_params(layout, 9);
    bool identical = true;
    a.visit([&](const std::string& name, const Tensor& t) {
        const Tensor* other = nullptr;
        b.visit([&](const std::string& n2, const Tensor& t2) {
            if (n2 == name) other = &t2;
        });
        REQUIRE(other != nullptr);
        if (t.v != other->v) identical = false;
    });
    CHECK(identical);

    ParamSet c = init_params(layout, 10);
    CHECK(c.hi_actor.trunk.layers[0].W.v != a.hi_actor.trunk.layers[0].W.v);

    // Head gain 0.01 keeps the initial policy near uniform.
    LstmState s = LstmState::zeros(layout.lstm_hidden);
    Rng rng(3);
    HiStepResult hi = hi_actor_step(a, random_obs(rng, layout.hi_input_dim()), s);
    for (double logit : hi.logits) {
        double p = sigmoid(logit);
        CHECK(p > 0.4);
        CHECK(p < 0.6);
    }

    // Every stored value survives an f32 round-trip untouched.
    bool f32_clean = true;
    a.visit([&](const std::string&, const Tensor& t) {
        for (double x : t.v)
            if (x != f32_exact(x)) f32_clean = false;
    });
    CHECK(f32_clean);
}

TEST_CASE("orthogonal init scales rows or columns to the gain") {
    Rng rng(4);
    Tensor wide(6, 16);
    orthogonal_init(wide, rng, std::sqrt(2.0));
    for (int r = 0; r < wide.rows; ++r) {
        for (int r2 = 0; r2 <= r; ++r2) {
            double acc = 0.0;
            for (int c = 0; c < wide.cols; ++c) acc += wide(r, c) * wide(r2, c);
            CHECK(acc == doctest::Approx(r == r2 ? 2.0 : 0.0).epsilon(1e-5));
        }
    }
    Tensor tall(16, 6);
    orthogonal_init(tall, rng, 1.0);
    for (int c = 0; c < tall.cols; ++c) {
        for (int c2 = 0; c2 <= c; ++c2) {
            double acc = 0.0;
            for (int r = 0; r < tall.rows; ++r) acc += tall(r, c) * tall(r, c2);
            CHECK(acc == doctest::Approx(c == c2 ? 1.0 : 0.0).epsilon(1e-5));
        }
    }
}

TEST_CASE("forward passes are pure and recurrent state matters") {
    NetLayout layout = tiny_layout();
    ParamSet p = init_params(layout, 2);
    Rng rng(5);
    std::vector<double> obs = random_obs(rng, layout.hi_input_dim());

    LstmState s1 = LstmState::zeros(layout.lstm_hidden);
    LstmState s2 = LstmState::zeros(layout.lstm_hidden);
    HiStepResult r1 = hi_actor_step(p, obs, s1);
    HiStepResult r2 = hi_actor_step(p, obs, s2);
    CHECK(r1.logits == r2.logits);

    // Advance s1 once more: now the same obs must map to different logits.
    HiStepResult r3 = hi_actor_step(p, obs, s1);
    CHECK(r3.logits != r1.logits);

    // A reset state wipes history: fresh zero states always agree.
    LstmState fresh = LstmState::zeros(layout.lstm_hidden);
    HiStepResult r4 = hi_actor_step(p, obs, fresh);
    CHECK(r4.logits == r1.logits);
}

TEST_CASE("sampled actions stay in support with 3-sigma frequencies") {
    Rng rng(6);
    std::vector<double> logits{0.3, -0.5};
    const int n = 100000;
    int ones[2] = {0, 0};
    for (int i = 0; i < n; ++i) {
        std::vector<int> bits = bernoulli_sample(logits, rng);
        for (int k = 0; k < 2; ++k) {
            CHECK((bits[k] == 0 || bits[k] == 1));
            ones[k] += bits[k];
        }
    }
    for (int k = 0; k < 2; ++k) {
        double p = sigmoid(logits[static_cast<std::size_t>(k)]);
        double sigma = std::sqrt(p * (1.0 - p) / n);
        CHECK(std::abs(static_cast<double>(ones[k]) / n - p) <= 3.0 * sigma);
    }

    std::vector<double> cat_logits{0.2, -0.1, 0.7};
    std::vector<int> counts(3, 0);
    for (int i = 0; i < n; ++i) {
        int idx = categorical_sample(cat_logits, rng);
        REQUIRE(idx >= 0);
        REQUIRE(idx < 3);
        counts[static_cast<std::size_t>(idx)]++;
    }
    for (int k = 0; k < 3; ++k) {
        double p = std::exp(categorical_logprob(cat_logits, k));
        double sigma = std::sqrt(p * (1.0 - p) / n);
        CHECK(std::abs(static_cast<double>(counts[k]) / n - p) <= 3.0 * sigma);
    }

    CHECK(bernoulli_mode(logits) == std::vector<int>{1, 0});
    CHECK(categorical_mode(cat_logits) == 2);
}

TEST_CASE("gradients match central finite differences on five layouts") {
    for (const OracleResult& res : run_gradient_checks(0)) {
        INFO(res.name << " " << res.detail << " worst " << res.worst);
        CHECK(res.pass);
    }
}

TEST_CASE("checkpoint round-trip is bit-exact") {
    NetLayout layout = tiny_layout();
    Checkpoint ck;
    ck.params = init_params(layout, 31);
    ck.config = {{"note", "round-trip"}};

    std::string path =
        (std::filesystem::temp_directory_path() / "tihdp_roundtrip.ckpt").string();
    save_checkpoint(ck, path);
    Checkpoint back = load_checkpoint(path);

    CHECK(back.params.layout.tag() == layout.tag());
    CHECK(back.params.init_seed == ck.params.init_seed);
    bool identical = true;
    ck.params.visit([&](const std::string& name, const Tensor& t) {
        back.params.visit([&](const std::string& n2, const Tensor& t2) {
            if (n2 == name && t.v != t2.v) identical = false;
        });
    });
    CHECK(identical);

    // Forward behavior after the round-trip is unchanged.
    Rng rng(8);
    std::vector<double> obs = random_obs(rng, layout.hi_input_dim());
    LstmState s1 = LstmState::zeros(layout.lstm_hidden);
    LstmState s2 = LstmState::zeros(layout.lstm_hidden);
    CHECK(hi_actor_step(ck.params, obs, s1).logits ==
          hi_actor_step(back.params, obs, s2).logits);
    CHECK(!back.trainer.present);
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint carries trainer state when present") {
    NetLayout layout = tiny_layout();
    Checkpoint ck;
    ck.params = init_params(layout, 12);
    AdamState adam = make_adam_state(ck.params);
    adam.m.hi_actor.trunk.layers[0].W(0, 0) = f32_exact(0.125);
    ck.adam_m = adam.m;
    ck.adam_v = adam.v;
    ck.trainer.present = true;
    ck.trainer.adam_step_hi = 3;
    ck.trainer.adam_step_lo = 5;
    ck.trainer.trainer_rng = {1, 2, 3, 4};
    ck.trainer.master_seed = 99;
    ck.trainer.env_steps = 1234;
    ck.trainer.update_index = 7;
    ck.trainer.episodes_done = {2, 3};
    ck.config = {{"note", "trainer"}};

    std::string path =
        (std::filesystem::temp_directory_path() / "tihdp_trainer.ckpt").string();
    save_checkpoint(ck, path);
    Checkpoint back = load_checkpoint(path);
    CHECK(back.trainer.present);
    CHECK(back.trainer.adam_step_hi == 3);
    CHECK(back.trainer.adam_step_lo == 5);
    CHECK(back.trainer.trainer_rng == std::array<std::uint64_t, 4>{1, 2, 3, 4});
    CHECK(back.trainer.master_seed == 99);
    CHECK(back.trainer.env_steps == 1234);
    CHECK(back.trainer.update_index == 7);
    CHECK(back.trainer.episodes_done == std::vector<std::int64_t>{2, 3});
    CHECK(back.adam_m.hi_actor.trunk.layers[0].W(0, 0) == 0.125);
    std::filesystem::remove(path);
}

TEST_CASE("adam updates only the selected group and keeps params f32-exact") {
    NetLayout layout = tiny_layout();
    ParamSet params = init_params(layout, 1);
    ParamSet before = params;
    ParamSet grads = zeros_like(params);
    grads.visit([](const std::string&, Tensor& t) {
        for (auto& x : t.v) x = 0.01;
    });
    AdamState adam = make_adam_state(params);
    AdamConfig cfg;

    adam_step(params, grads, adam, true, cfg);
    CHECK(adam.step_hi == 1);
    CHECK(adam.step_lo == 0);
    bool lo_untouched = true, hi_changed = false, f32_clean = true;
    params.visit([&](const std::string& name, const Tensor& t) {
        const Tensor* prev = nullptr;
        before.visit([&](const std::string& n2, const Tensor& t2) {
            if (n2 == name) prev = &t2;
        });
        if (is_hi_tensor(name)) {
            if (t.v != prev->v) hi_changed = true;
        } else if (t.v != prev->v) {
            lo_untouched = false;
        }
        for (double x : t.v)
            if (x != f32_exact(x)) f32_clean = false;
    });
    CHECK(hi_changed);
    CHECK(lo_untouched);
    CHECK(f32_clean);
}

TEST_CASE("gradient clipping rescales to the threshold") {
    NetLayout layout = tiny_layout();
    ParamSet grads = zeros_like(make_params(layout));
    grads.visit([](const std::string& name, Tensor& t) {
        if (is_hi_tensor(name))
            for (auto& x : t.v) x = 1.0;
    });
    double norm_before = clip_grad_norm(grads, true, 0.5);
    CHECK(norm_before > 0.5);
    double norm_after = clip_grad_norm(grads, true, 1e9);
    CHECK(norm_after == doctest::Approx(0.5).epsilon(1e-9));
}
