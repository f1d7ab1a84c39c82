#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "tihdp/priority.hpp"
#include "tihdp/rng.hpp"
#include "tihdp/verify.hpp"

using namespace tihdp;

namespace {

PriorityVector make_pv(std::vector<double> phi, double k_phi = 0.1) {
    PriorityVector pv;
    pv.phi = std::move(phi);
    pv.k_phi = k_phi;
    return pv;
}

}  // namespace

TEST_CASE("request signal is a gated one-hot") {
    CHECK(request_signal(1, 1, 4) == std::vector<double>{0, 1, 0, 0});
    CHECK(request_signal(0, 1, 4) == std::vector<double>{0, 0, 0, 0});
    CHECK(request_signal(1, 3, 4) == std::vector<double>{0, 0, 0, 1});
    CHECK_THROWS_AS(request_signal(1, 4, 4), std::invalid_argument);
}

TEST_CASE("response signal is the identity on binary") {
    CHECK(response_signal(1) == 1);
    CHECK(response_signal(0) == 0);
    CHECK(response_signal(response_signal(1)) == response_signal(1));
}

TEST_CASE("map_local_ops scatters by object id") {
    CHECK(map_local_ops({+1, -1}, {2, 0}, 4) == std::vector<double>{-1, 0, +1, 0});
    CHECK(map_local_ops({+1, +1}, {0, 1}, 2) == std::vector<double>{+1, +1});
    CHECK(map_local_ops({+1, -1}, {2, -1}, 4) == std::vector<double>{0, 0, +1, 0});
    CHECK_THROWS_AS(map_local_ops({+1, -1}, {2, 2}, 4), std::invalid_argument);
    CHECK_THROWS_AS(map_local_ops({+1, -1}, {2, 4}, 4), std::invalid_argument);
}

TEST_CASE("worked update examples") {
    PriorityVector pv = make_pv({0.25, 0.25, 0.25, 0.25});
    std::vector<bool> none(4, false);

    PriorityVector a = update_priorities(pv, {+1, -1, 0, 0}, 0, {0, 0, 0, 0}, none);
    CHECK(a.phi[0] == doctest::Approx(0.3611).epsilon(1e-4));
    CHECK(a.phi[1] == doctest::Approx(0.1389).epsilon(1e-4));
    CHECK(a.phi[2] == doctest::Approx(0.25).epsilon(1e-4));
    CHECK(a.phi[3] == doctest::Approx(0.25).epsilon(1e-4));

    PriorityVector b = update_priorities(pv, {0, 0, 0, 0}, 1, {0, 2, 0, 0}, none);
    CHECK(b.phi[0] == doctest::Approx(0.2045).epsilon(1e-4));
    CHECK(b.phi[1] == doctest::Approx(0.3864).epsilon(1e-4));
    CHECK(b.phi[2] == doctest::Approx(0.2045).epsilon(1e-4));
    CHECK(b.phi[3] == doctest::Approx(0.2045).epsilon(1e-4));

    PriorityVector c = update_priorities(make_pv({0.4, 0.2, 0.2, 0.2}), {0, 0, 0, 0}, 0,
                                         {0, 0, 0, 0}, {true, false, false, false});
    CHECK(c.phi[0] == 0.0);
    CHECK(c.phi[1] == doctest::Approx(1.0 / 3.0));
    CHECK(c.phi[2] == doctest::Approx(1.0 / 3.0));
    CHECK(c.phi[3] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("all-completed update yields the all-zero vector") {
    PriorityVector pv = make_pv({0.5, 0.5});
    PriorityVector out = update_priorities(pv, {0, 0}, 0, {0, 0}, {true, true});
    CHECK(out.phi == std::vector<double>{0.0, 0.0});
    CHECK(!select_target(out).has_value());
}

TEST_CASE("randomized oracle with invariants") {
    OracleResult res = run_priority_oracle(10000, 0);
    INFO(res.detail);
    CHECK(res.pass);
    CHECK(res.worst <= 1e-12);
}

TEST_CASE("monotone response never demotes a requested object") {
    PriorityVector pv = make_pv({0.4, 0.3, 0.2, 0.1});
    std::vector<bool> none(4, false);
    auto rank_of = [](const std::vector<double>& phi, int l) {
        int rank = 0;
        for (std::size_t j = 0; j < phi.size(); ++j)
            if (phi[j] > phi[static_cast<std::size_t>(l)]) ++rank;
        return rank;
    };
    int prev_rank = rank_of(update_priorities(pv, {0, 0, 0, 0}, 1, {0, 0, 0, 0}, none).phi, 3);
    for (int sum = 1; sum <= 5; ++sum) {
        std::vector<double> sums{0, 0, 0, static_cast<double>(sum)};
        int rank = rank_of(update_priorities(pv, {0, 0, 0, 0}, 1, sums, none).phi, 3);
        CHECK(rank <= prev_rank);
        prev_rank = rank;
    }
}

TEST_CASE("select_target argmax with low-index tie-break and scale invariance") {
    CHECK(select_target(make_pv({0.2, 0.5, 0.3})).value() == 1);
    CHECK(select_target(make_pv({0.5, 0.5, 0.0})).value() == 0);
    CHECK(select_target(make_pv({0.04, 0.1, 0.06})).value() == 1);
    CHECK(!select_target(make_pv({0.0, 0.0, 0.0})).has_value());
}

TEST_CASE("comm_round sums one-hot requests including the requester") {
    std::vector<RobotSignals> signals(3);
    signals[0] = RobotSignals{1, 0, 2};
    signals[1] = RobotSignals{1, 1, 2};
    signals[2] = RobotSignals{0, 1, 0};
    CommResult res = comm_round(signals, 4);
    CHECK(res.request_sums == std::vector<double>{0, 0, 2, 0});
    CHECK(res.sigma == std::vector<int>{0, 1, 1});

    std::vector<RobotSignals> quiet(3);
    quiet[0] = RobotSignals{0, 0, 1};
    quiet[1] = RobotSignals{0, 0, 2};
    quiet[2] = RobotSignals{0, 0, 0};
    CHECK(comm_round(quiet, 4).request_sums == std::vector<double>{0, 0, 0, 0});

    std::vector<RobotSignals> solo{RobotSignals{1, 0, 1}};
    CHECK(comm_round(solo, 4).request_sums == std::vector<double>{0, 1, 0, 0});
}

TEST_CASE("repeated requests raise an out-of-neighborhood object to the top") {
    // Robot i never sees object 3 locally (c_bar stays zero there), but a
    // requester keeps asking for it while i responds.
    const double k_phi = 0.1;
    PriorityVector pv = PriorityVector::uniform(4, k_phi, 0);
    std::vector<bool> none(4, false);
    int steps = 0;
    while (steps < 40) {
        pv = update_priorities(pv, {0, 0, 0, 0}, 1, {0, 0, 0, 1}, none);
        ++steps;
        if (select_target(pv).value() == 3) break;
    }
    CHECK(select_target(pv).value() == 3);
    CHECK(steps <= 40);
}

TEST_CASE("update invariants on worked and random vectors") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        int m = 2 + rng.uniform_int(5);
        PriorityVector pv = PriorityVector::uniform(m, 0.1, 0);
        std::vector<double> c_bar(m), sums(m);
        std::vector<bool> completed(m);
        for (int l = 0; l < m; ++l) {
            c_bar[l] = static_cast<double>(rng.uniform_int(3) - 1);
            sums[l] = static_cast<double>(rng.uniform_int(3));
            completed[l] = rng.uniform() < 0.25;
        }
        PriorityVector out = update_priorities(pv, c_bar, rng.uniform_int(2), sums, completed);
        double total = 0.0;
        for (int l = 0; l < m; ++l) {
            CHECK(out.phi[l] >= 0.0);
            if (completed[l]) CHECK(out.phi[l] == 0.0);
            total += out.phi[l];
        }
        CHECK((total == 0.0 || std::abs(total - 1.0) <= 1e-9));
    }
}
