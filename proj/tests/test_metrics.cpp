#include "dmrl/metrics.hpp"

#include <doctest.h>

#include <cmath>

using namespace dmrl;
using namespace dmrl::metrics;

TEST_CASE("variational and hellinger distances") {
    DiscreteDistribution p(Eigen::Vector2d(1.0, 0.0));
    DiscreteDistribution q(Eigen::Vector2d(0.5, 0.5));
    CHECK(d_var(p, q) == doctest::Approx(0.5));
    CHECK(d_hellinger(p, q) == doctest::Approx(0.541196).epsilon(1e-6));
    CHECK(d_var(p, p) == 0.0);
    CHECK(d_hellinger(q, q) == 0.0);
    DiscreteDistribution r(Eigen::Vector2d(0.0, 1.0));
    CHECK(d_var(p, r) == doctest::Approx(1.0));
    CHECK(d_hellinger(p, r) == doctest::Approx(1.0));
    CHECK_THROWS_AS(d_var(p, DiscreteDistribution(Eigen::Vector3d(1, 0, 0))), InputError);
}

TEST_CASE("value gap bound on a worked example") {
    DiscreteDistribution mu_true(Eigen::Vector2d(0.5, 0.5));
    DiscreteDistribution mu_est(Eigen::Vector2d(1.0, 0.0));
    const auto rep = check_theorem1(mu_true, mu_est);
    CHECK(rep.lhs == doctest::Approx(1.0 / std::sqrt(2.0) - 0.5));
    CHECK(rep.rhs == doctest::Approx(3.0));
    CHECK(rep.holds);
    CHECK(check_theorem1(mu_true, mu_true).lhs == doctest::Approx(0.0));
}

TEST_CASE("value gap bound holds under fuzzing") {
    const auto s = fuzz_theorem1(5000, 17);
    CHECK(s.trials == 5000);
    CHECK(s.holds == s.trials);
    CHECK(s.worst_slack >= 0.0);
    // Identical seeds give identical summaries.
    CHECK(fuzz_theorem1(5000, 17).worst_slack == s.worst_slack);
}

TEST_CASE("injected violations are counted") {
    int n = 0;
    const auto s = fuzz_theorem1(100, 3, [&](BoundReport& r) {
        if (n++ % 10 == 0) {
            r.lhs = r.rhs + 1.0;
            r.holds = false;
        }
    });
    CHECK(s.holds == 90);
    CHECK(s.worst_slack == doctest::Approx(-1.0));
}

TEST_CASE("hellinger dominates variational distance") {
    const auto s = fuzz_lemma2(5000, 23);
    CHECK(s.holds == s.trials);
    CHECK(s.worst_slack >= -1e-12);
}

TEST_CASE("random distributions are valid and sometimes sparse") {
    Rng rng(4);
    int sparse = 0;
    for (int i = 0; i < 200; ++i) {
        const auto d = random_distribution(rng, 8);
        CHECK_NOTHROW(d.validate());
        sparse += (d.p.array() == 0.0).any();
    }
    CHECK(sparse > 20);
}

TEST_CASE("mixture spec") {
    MixtureSpec m;
    const auto d = m.discretize();
    CHECK(d.size() == 64);
    CHECK_NOTHROW(d.validate());
    Rng rng(1);
    double mean = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) mean += m.sample(rng);
    // 0.3 * -2 + 0.5 * 0.5 + 0.2 * 2.5
    CHECK(mean / n == doctest::Approx(0.15).epsilon(0.05 / 0.15));
}

TEST_CASE("distances are metrics") {
    Rng rng(12);
    for (int i = 0; i < 10000; ++i) {
        const auto size = static_cast<Eigen::Index>(2 + rng.below(20));
        const auto p = random_distribution(rng, size);
        const auto q = random_distribution(rng, size);
        const auto r = random_distribution(rng, size);
        CHECK(d_var(p, q) == doctest::Approx(d_var(q, p)).epsilon(1e-12));
        CHECK(d_hellinger(p, q) == doctest::Approx(d_hellinger(q, p)).epsilon(1e-12));
        CHECK(d_var(p, r) <= d_var(p, q) + d_var(q, r) + 1e-12);
        CHECK(d_hellinger(p, r) <= d_hellinger(p, q) + d_hellinger(q, r) + 1e-12);
        CHECK(d_var(p, p) <= 1e-12);
        CHECK(d_hellinger(p, p) <= 1e-12);
    }
}

TEST_CASE("value gap shrinks with more samples") {
    const auto rows = convergence_trend(MixtureSpec{}, {10, 1000}, 20, 9);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].gaps.size() == 20);
    CHECK(rows[1].median_gap < rows[0].median_gap);
    const auto again = convergence_trend(MixtureSpec{}, {10, 1000}, 20, 9);
    CHECK(again[1].gaps == rows[1].gaps);
    const auto wide = convergence_trend(MixtureSpec{}, {20, 200, 2000}, 5, 3);
    CHECK(wide[2].median_gap < wide[1].median_gap);
    CHECK(wide[1].median_gap < wide[0].median_gap);
    CHECK_THROWS_AS(convergence_trend(MixtureSpec{}, {200, 20}, 1, 1), InputError);
}
