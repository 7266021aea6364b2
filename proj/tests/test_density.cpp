#include "dmrl/density.hpp"

#include <doctest.h>

#include <cmath>

using namespace dmrl;
using namespace dmrl::density;

namespace {

DemoSet one_episode(const Eigen::MatrixXd& rows) {
    DemoSet d;
    d.episodes.push_back(rows);
    return d;
}

}  // namespace

TEST_CASE("se kernel values") {
    KernelParams p;
    Eigen::Vector2d a(0, 0), b(1, 1);
    CHECK(se_kernel(a, a, p) == doctest::Approx(1.0));
    // |a - b|^2 = 2 with unit lengthscale gives exp(-1).
    CHECK(se_kernel(a, b, p) == doctest::Approx(std::exp(-1.0)));
    p.amplitude = 3.0;
    p.lengthscale = 2.0;
    CHECK(se_kernel(a, b, p) == doctest::Approx(3.0 * std::exp(-0.25)));
    CHECK(se_kernel(a, b, p) == doctest::Approx(se_kernel(b, a, p)));
    CHECK_THROWS_AS(se_kernel(a, Eigen::Vector3d(0, 0, 0), p), InputError);
    KernelParams bad;
    bad.lengthscale = 0.0;
    CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("median trick") {
    Eigen::MatrixXd pts(3, 1);
    pts << 0, 1, 3;  // pairwise distances 1, 2, 3
    auto r = median_trick(pts);
    CHECK(r.params.lengthscale == doctest::Approx(2.0));
    CHECK_FALSE(r.degenerate);

    Eigen::MatrixXd four(4, 1);
    four << 0, 1, 2, 4;  // 1 1 2 2 3 4 -> 2
    CHECK(median_trick(four).params.lengthscale == doctest::Approx(2.0));

    Eigen::MatrixXd same = Eigen::MatrixXd::Ones(5, 2);
    auto d = median_trick(same);
    CHECK(d.degenerate);
    CHECK(d.params.lengthscale == 1.0);

    CHECK_THROWS_AS(median_trick(Eigen::MatrixXd::Zero(1, 2)), InputError);
}

TEST_CASE("median trick subsampling is seeded") {
    Rng rng(5);
    Eigen::MatrixXd pts(3000, 2);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) pts.row(i) << rng.normal(), rng.normal();
    const double a = median_trick(pts, 11).params.lengthscale;
    CHECK(a == median_trick(pts, 11).params.lengthscale);
    // Median distance between two standard 2-D normals is sqrt(2) * 1.1774.
    CHECK(a == doctest::Approx(std::sqrt(2.0) * 1.17741).epsilon(0.05));
}

TEST_CASE("leverage weights") {
    CHECK(leverage_weight(0.75, 0) == doctest::Approx(1.0));
    CHECK(leverage_weight(0.75, 2) == doctest::Approx(0.77301).epsilon(1e-5));
    CHECK(leverage_weight(1.0, 500) == doctest::Approx(1.0));
    // Monotone: earlier records weigh less.
    CHECK(leverage_weight(0.75, 5) < leverage_weight(0.75, 4));
    CHECK(leverage_weight(0.75, 200) >= 0.0);
    CHECK_THROWS_AS(leverage_weight(0.0, 1), InputError);
    CHECK_THROWS_AS(leverage_weight(1.5, 1), InputError);
    CHECK_THROWS_AS(leverage_weight(0.5, -1), InputError);
}

TEST_CASE("basis density") {
    const double h = 0.5;
    Eigen::VectorXd c = Eigen::VectorXd::Constant(1, 2.0);
    CHECK(basis_density(c, c, h) == doctest::Approx(1.0 / (h * std::sqrt(2.0 * M_PI))));
    CHECK(basis_peak(2, 1.0) == doctest::Approx(1.0 / (2.0 * M_PI)));
}

TEST_CASE("kde of two points peaks at the midpoint mean") {
    Eigen::MatrixXd rows(2, 1);
    rows << -1, 1;
    const auto est = fit_kde(one_episode(rows), 1.0, {2.0, 1.0});
    CHECK(est.weights.sum() == doctest::Approx(2.0));
    const double mid = eval_density(est, Eigen::VectorXd::Zero(1));
    CHECK(mid > eval_density(est, Eigen::VectorXd::Constant(1, 0.5)));
    // Symmetric around 0.
    CHECK(eval_density(est, Eigen::VectorXd::Constant(1, 0.7)) ==
          doctest::Approx(eval_density(est, Eigen::VectorXd::Constant(1, -0.7))));
}

TEST_CASE("kde integrates to one") {
    Eigen::MatrixXd rows(4, 2);
    rows << 0, 0, 1, 0.5, -0.5, 1, 0.2, -0.3;
    const auto est = fit_kde(one_episode(rows), 0.75, {0.6, 1.0});
    // Monte Carlo over a box that holds essentially all the mass.
    Rng rng(3);
    const double lo = -4.0, hi = 5.0;
    const int n = 200000;
    double sum = 0.0;
    Eigen::VectorXd x(2);
    for (int i = 0; i < n; ++i) {
        x << rng.uniform(lo, hi), rng.uniform(lo, hi);
        sum += eval_density(est, x);
    }
    CHECK(sum / n * (hi - lo) * (hi - lo) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("delta one reduces to the plain kde") {
    Eigen::MatrixXd rows(3, 1);
    rows << 0, 1, 3;
    const KernelParams bw{0.8, 1.0};
    const auto est = fit_kde(one_episode(rows), 1.0, bw);
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.4);
    double plain = 0.0;
    for (Eigen::Index i = 0; i < 3; ++i) plain += basis_density(x, rows.row(i).transpose(), 0.8);
    CHECK(eval_density(est, x) == doctest::Approx(plain / 3.0));
}

TEST_CASE("leveraged kde favours late samples") {
    Eigen::MatrixXd rows(3, 1);
    rows << 0, 5, 10;
    const auto est = fit_kde(one_episode(rows), 0.5, {1.0, 1.0});
    CHECK(eval_density(est, Eigen::VectorXd::Constant(1, 10.0)) >
          eval_density(est, Eigen::VectorXd::Constant(1, 0.0)));
    CHECK_THROWS_AS(fit_kde(DemoSet{}, 0.5, {1.0, 1.0}), InputError);
}

TEST_CASE("standardizer round trip") {
    Eigen::MatrixXd rows(3, 2);
    rows << 1, 5, 2, 5, 3, 5;
    const auto s = Standardizer::fit(rows);
    CHECK(s.scale()(1) == 1.0);  // zero-spread column keeps unit scale
    const Eigen::VectorXd x = Eigen::Vector2d(2.5, 7.0);
    CHECK((s.inverse(s.transform(x)) - x).norm() < 1e-12);
    const Eigen::MatrixXd z = s.transform_rows(rows);
    CHECK(z.col(0).mean() == doctest::Approx(0.0));
    CHECK_THROWS_AS(s.transform(Eigen::VectorXd::Zero(3)), InputError);
}
