#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rats/task_space.hpp"

using namespace rats;

TEST_CASE("make_space rejects degenerate bounds") {
    CHECK_THROWS_AS(make_space({{1.0, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(make_space({{2.0, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(make_space({}), std::invalid_argument);
}

TEST_CASE("sample_uniform: bounds containment and seed reproducibility") {
    const TaskSpace space = make_space({{0.0, 1.0}});
    Rng a(42), b(42);
    const auto xs = sample_uniform(space, 3, a);
    const auto ys = sample_uniform(space, 3, b);
    REQUIRE(xs.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(contains(space, xs[i]));
        CHECK(xs[i][0] == ys[i][0]);
    }
    CHECK_THROWS_AS(sample_uniform(space, 0, a), std::invalid_argument);
}

TEST_CASE("sample_uniform: sinusoid amplitude/phase box") {
    const TaskSpace space = make_space({{0.1, 5.0}, {0.0, M_PI}});
    Rng rng(7);
    for (const TaskId& id : sample_uniform(space, 512, rng)) CHECK(contains(space, id));
}

TEST_CASE("sample_uniform: empirical mean near the box center") {
    const TaskSpace space = make_space({{0.0, 1.0}});
    Rng rng(11);
    double sum = 0.0;
    const int n = 100000;
    for (const TaskId& id : sample_uniform(space, n, rng)) sum += id[0];
    CHECK(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("normalize: corners and midpoint") {
    const TaskSpace space = make_space({{-2.0, 4.0}, {10.0, 30.0}});
    TaskId lo(2), hi(2), mid(2);
    lo << -2.0, 10.0;
    hi << 4.0, 30.0;
    mid << 1.0, 20.0;
    CHECK(normalize(space, lo).isZero(0.0));
    CHECK((normalize(space, hi) - Vec::Ones(2)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((normalize(space, mid) - Vec::Constant(2, 0.5)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("normalize rejects out-of-bounds identifiers") {
    const TaskSpace space = make_space({{0.0, 1.0}});
    TaskId bad(1);
    bad << 1.5;
    CHECK_THROWS_AS(normalize(space, bad), std::invalid_argument);
}

TEST_CASE("normalize/denormalize round-trip within 1e-12") {
    const TaskSpace space = make_space({{-3.0, 9.0}, {0.25, 0.75}, {100.0, 200.0}});
    Rng rng(13);
    for (const TaskId& id : sample_uniform(space, 200, rng)) {
        const TaskId back = denormalize(space, normalize(space, id));
        CHECK((back - id).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("pairwise_sqdist: identity, corners, direct formula") {
    const TaskSpace space2 = make_space({{0.0, 1.0}, {0.0, 1.0}});
    TaskId a(2), b(2), c(2);
    a << 0.0, 0.0;
    b << 1.0, 1.0;
    c << 1.0, 0.0;
    CHECK(pairwise_sqdist(space2, a, a) == 0.0);
    CHECK(pairwise_sqdist(space2, a, b) == doctest::Approx(1.0));
    // normalized points (0,0) and (1,0): (1 + 0) / 2
    CHECK(pairwise_sqdist(space2, a, c) == doctest::Approx(0.5));
}

TEST_CASE("pairwise_sqdist: symmetry and zero-iff-equal on random pairs") {
    const TaskSpace space = make_space({{-1.0, 1.0}, {0.0, 10.0}});
    Rng rng(17);
    const auto ids = sample_uniform(space, 40, rng);
    for (std::size_t i = 0; i + 1 < ids.size(); i += 2) {
        const double dij = pairwise_sqdist(space, ids[i], ids[i + 1]);
        const double dji = pairwise_sqdist(space, ids[i + 1], ids[i]);
        CHECK(dij == dji);
        CHECK(dij >= 0.0);
        if (dij == 0.0) CHECK((ids[i] - ids[i + 1]).isZero(0.0));
    }
}
