#include <doctest.h>

#include <cmath>

#include "obslab/error.hpp"
#include "obslab/numerics.hpp"
#include "obslab/observability.hpp"
#include "obslab/unobservable.hpp"

using namespace obslab;

TEST_CASE("constructed system carries a valid contraction certificate") {
    const UnobservableSystem sys = construct_unobservable_system(5, 6, 12, 3);
    CHECK(sys.certificate < 1.0);
    CHECK(sys.certificate >= 0.0);
    CHECK(sys.amplification >= 1.0);
    CHECK(sys.context == 5);
    CHECK(sys.closed_loop.rows() == 30);
    CHECK(sys.feedback.rows() == 12);
    CHECK(sys.feedback.cols() == 30);
    CHECK(sys.constant_token >= 0);
    CHECK(sys.constant_token < 12);

    // The certificate really is the operator norm of the window-length power.
    Tensor power = sys.closed_loop;
    for (std::size_t t = 1; t < sys.context; ++t) power = matmul(sys.closed_loop, power);
    CHECK(spectral_radius(power) == doctest::Approx(sys.certificate).epsilon(1e-9));
}

TEST_CASE("construction is deterministic per seed") {
    const UnobservableSystem a = construct_unobservable_system(4, 5, 9, 11);
    const UnobservableSystem b = construct_unobservable_system(4, 5, 9, 11);
    CHECK(bitwise_equal(a.feedback, b.feedback));
    CHECK(bitwise_equal(a.closed_loop, b.closed_loop));
    CHECK(a.constant_token == b.constant_token);
    CHECK(a.certificate == b.certificate);
    const UnobservableSystem c = construct_unobservable_system(4, 5, 9, 12);
    CHECK_FALSE(bitwise_equal(a.feedback, c.feedback));
}

TEST_CASE("every initial state emits the same outputs with its own state path") {
    const UnobservableSystem sys = construct_unobservable_system(5, 6, 12, 3);
    Rng rng(4);
    std::vector<Trajectory> trajs;
    for (int i = 0; i < 50; ++i)
        trajs.push_back(unobservable_rollout(sys, random_state(sys, 1.0, rng), 12));

    for (const Trajectory& t : trajs) {
        REQUIRE(t.verbal.size() == 12);
        for (int u : t.verbal) CHECK(u == sys.constant_token);
        CHECK_FALSE(t.terminated);
    }
    // All 50 mental trajectories are pairwise distinct: one indistinguishable
    // class holding the whole set.
    const ObservabilityReport rep = analyze_trajectories(trajs, 0.0);
    CHECK(rep.q.back() == 50);
    CHECK(rep.r.back() == 50);
    CHECK(rep.bijective);
}

TEST_CASE("trajectories contract across each window turnover") {
    const UnobservableSystem sys = construct_unobservable_system(4, 5, 10, 7);
    Rng rng(8);
    const Tensor x0 = random_state(sys, 1.0, rng);

    // Propagate the raw state and compare norms c steps apart.
    Tensor x = x0;
    std::vector<double> norms;
    for (std::size_t t = 0; t < 3 * sys.context; ++t) {
        double n2 = 0;
        for (double v : x.values) n2 += v * v;
        norms.push_back(std::sqrt(n2));
        Tensor nx = matmul(sys.closed_loop, x.reshape({x.numel(), 1}));
        x = nx.reshape({x.numel()});
    }
    // The power-iteration certificate can undershoot the true norm by a hair,
    // so allow a relative fudge.
    for (std::size_t t = 0; t + sys.context < norms.size(); ++t)
        CHECK(norms[t + sys.context] <= sys.certificate * norms[t] * (1 + 1e-6) + 1e-12);
    // And never above the certified amplification within a turnover.
    for (std::size_t t = 0; t < sys.context; ++t)
        CHECK(norms[t] <= sys.amplification * norms[0] * (1 + 1e-6) + 1e-12);
}

TEST_CASE("random states live on the requested sphere") {
    const UnobservableSystem sys = construct_unobservable_system(3, 4, 8, 1);
    Rng rng(2);
    for (double radius : {0.5, 1.0, 2.0}) {
        const Tensor x = random_state(sys, radius, rng);
        CHECK(x.numel() == 12);
        double n2 = 0;
        for (double v : x.values) n2 += v * v;
        CHECK(std::sqrt(n2) == doctest::Approx(radius).epsilon(1e-9));
    }
}

TEST_CASE("construction rejects degenerate dimensions") {
    CHECK_THROWS_AS(construct_unobservable_system(1, 4, 8, 0), Error);
    CHECK_THROWS_AS(construct_unobservable_system(4, 0, 8, 0), Error);
    CHECK_THROWS_AS(construct_unobservable_system(4, 4, 0, 0), Error);
}
