#include "dmrl/model_io.hpp"
#include "dmrl/reward.hpp"

#include <doctest.h>

#include <cmath>

using namespace dmrl;
using namespace dmrl::reward;

namespace {

DemoSet random_demos(std::uint64_t seed, int episodes, int len, int dim) {
    Rng rng(seed);
    DemoSet d;
    for (int e = 0; e < episodes; ++e) {
        Eigen::MatrixXd m(len, dim);
        for (int i = 0; i < len; ++i)
            for (int j = 0; j < dim; ++j) m(i, j) = rng.normal() + 0.3 * i;
        d.episodes.push_back(m);
    }
    return d;
}

}  // namespace

TEST_CASE("discrete density matching") {
    DiscreteDistribution u(Eigen::Vector2d(0.5, 0.5));
    auto r = solve_discrete(u);
    CHECK(r.values(0) == doctest::Approx(0.70711).epsilon(1e-5));
    CHECK(r.values(1) == doctest::Approx(0.70711).epsilon(1e-5));
    CHECK(value_of(u, r) == doctest::Approx(0.70711).epsilon(1e-5));

    DiscreteDistribution mu(Eigen::Vector3d(0.6, 0.0, 0.4));
    r = solve_discrete(mu);
    CHECK(r.values.norm() == doctest::Approx(1.0));
    CHECK(r.values(1) == 0.0);
    // Any other unit vector scores lower.
    Rng rng(2);
    for (int i = 0; i < 100; ++i) {
        Eigen::Vector3d v(rng.normal(), rng.normal(), rng.normal());
        DiscreteReward other{v.normalized()};
        CHECK(value_of(mu, other) <= value_of(mu, r) + 1e-12);
    }
    // The point mass earns the full unit reward.
    DiscreteDistribution point(Eigen::Vector3d(0.0, 1.0, 0.0));
    CHECK(solve_discrete(point).values(1) == doctest::Approx(1.0));

    CHECK_THROWS_AS(DiscreteDistribution(Eigen::Vector2d(0.5, 0.6)).validate(), InputError);
    CHECK_THROWS_AS(DiscreteDistribution(Eigen::Vector2d(1.4, -0.4)).validate(), InputError);
    CHECK_THROWS_AS(solve_discrete(DiscreteDistribution(Eigen::Vector2d(0.0, 0.0))), InputError);
}

TEST_CASE("single inducing point has a scalar closed form") {
    DemoSet d;
    d.episodes.push_back(Eigen::MatrixXd::Zero(1, 1));
    const KernelParams k{1.0, 1.0};
    const double peak = 1.0 / std::sqrt(2.0 * M_PI);
    // lambda + beta = 2 * peak makes alpha exactly one half.
    const double lambda = 2.0 * peak - 1e-4;
    const auto p = build_problem(d, Eigen::MatrixXd::Zero(1, 1), k, lambda, 1e-4, 0.75);
    const auto alpha = solve_alpha(p);
    REQUIRE(alpha.size() == 1);
    CHECK(alpha(0) == doctest::Approx(0.5));
}

TEST_CASE("closed form matches gradient ascent") {
    const auto demos = random_demos(4, 3, 6, 2);
    Eigen::MatrixXd ind(5, 2);
    ind << 0, 0, 1, 1, -1, 0.5, 2, -1, 0.5, 2;
    const auto p = build_problem(demos, ind, {1.2, 1.0}, 0.5, 0.2, 0.75);
    const Eigen::VectorXd closed = solve_alpha(p);
    CHECK(p.stationarity_residual(closed) < 1e-10);

    const Eigen::MatrixXd h = p.lambda * p.k_u + p.beta * Eigen::MatrixXd::Identity(5, 5);
    const double step = 1.0 / Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(h).eigenvalues().maxCoeff();
    Eigen::VectorXd a = Eigen::VectorXd::Zero(5);
    for (int i = 0; i < 20000; ++i) a += step * p.gradient(a);
    CHECK((a - closed).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("closed form maximizes the objective") {
    const auto demos = random_demos(9, 2, 10, 3);
    const Eigen::MatrixXd ind = demos.stacked().topRows(8);
    const auto p = build_problem(demos, ind, {1.0, 1.0}, 1e-2, 1e-4, 0.75);
    const Eigen::VectorXd a = solve_alpha(p);
    const double best = p.objective(a);
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        Eigen::VectorXd da(8);
        for (int j = 0; j < 8; ++j) da(j) = rng.normal();
        CHECK(p.objective(a + 1e-2 * da) < best);
    }
}

TEST_CASE("fit and evaluate") {
    const auto demos = random_demos(3, 4, 12, 2);
    const auto ind = build_inducing(demos, 10, Bounds::of_demos(demos), 1);
    KdmrlParams params;
    params.seed = 2;
    const auto model = fit_kdmrl(demos, ind, params);
    CHECK(model.feature_dim() == 2);
    CHECK(model.alpha.size() == ind.rows());

    // Batched and single evaluation agree with the direct sum.
    RewardEvaluator ev(model);
    Eigen::MatrixXd q = demos.stacked().topRows(5);
    const Eigen::VectorXd batch = ev(q);
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        CHECK(batch(i) == doctest::Approx(eval_reward(model, q.row(i).transpose())).epsilon(1e-9));
        CHECK(ev(Eigen::VectorXd(q.row(i).transpose())) == doctest::Approx(batch(i)).epsilon(1e-12));
    }
    // Reward is higher on the demos than far outside them.
    const Eigen::Vector2d far(100, -100);
    CHECK(eval_reward(model, far) == doctest::Approx(0.0));
    CHECK(batch.maxCoeff() > 0.0);
    CHECK(objective(model, demos) > 0.0);
    CHECK_THROWS_AS(eval_reward(model, Eigen::Vector3d::Zero()), InputError);
}

TEST_CASE("fit input validation") {
    const auto demos = random_demos(3, 1, 4, 2);
    KdmrlParams p;
    CHECK_THROWS_AS(fit_kdmrl(DemoSet{}, Eigen::MatrixXd::Zero(1, 2), p), InputError);
    CHECK_THROWS_AS(fit_kdmrl(demos, Eigen::MatrixXd::Zero(0, 2), p), InputError);
    CHECK_THROWS_AS(fit_kdmrl(demos, Eigen::MatrixXd::Zero(1, 3), p), InputError);
    p.lambda = 0.0;
    CHECK_THROWS_AS(fit_kdmrl(demos, Eigen::MatrixXd::Zero(1, 2), p), InputError);
}

TEST_CASE("inducing point construction") {
    DemoSet d;
    Eigen::MatrixXd e(4, 2);
    e << 0, 0, 1, 1, 0, 1e-9, 1, 1;
    d.episodes.push_back(e);
    const Bounds b = Bounds::of_demos(d);
    CHECK(b.low(0) == doctest::Approx(-0.1));
    CHECK(b.high(1) == doctest::Approx(1.1));

    const auto ind = build_inducing(d, 0, b, 1);
    REQUIRE(ind.rows() == 2);
    CHECK(ind.row(0).norm() == 0.0);
    CHECK(ind(1, 0) == 1.0);

    const auto more = build_inducing(d, 50, b, 7);
    CHECK(more.rows() == 52);
    for (Eigen::Index i = 2; i < more.rows(); ++i)
        for (int j = 0; j < 2; ++j) {
            CHECK(more(i, j) >= b.low(j));
            CHECK(more(i, j) <= b.high(j));
        }
    CHECK(more == build_inducing(d, 50, b, 7));
    CHECK(more != build_inducing(d, 50, b, 8));

    // A cap keeps at most max_demo demo rows.
    const auto big = random_demos(1, 5, 40, 2);
    const auto capped = build_inducing(big, 0, Bounds::of_demos(big), 1, kDedupTolerance, 30);
    CHECK(capped.rows() == 30);
    CHECK(subsample_rows(big.stacked(), 500, 1).rows() == 200);
}

TEST_CASE("model json round trip is exact") {
    const auto demos = random_demos(8, 3, 9, 3);
    const auto ind = build_inducing(demos, 5, Bounds::of_demos(demos), 2);
    const auto model = fit_kdmrl(demos, ind, {});
    const auto text = to_json(model).dump();
    const auto back = model_from_json(nlohmann::json::parse(text));
    CHECK(back.alpha == model.alpha);
    CHECK(back.inducing == model.inducing);
    CHECK(back.kernel.lengthscale == model.kernel.lengthscale);
    CHECK(back.standardizer.mean() == model.standardizer.mean());
    CHECK(back.standardizer.scale() == model.standardizer.scale());
    CHECK(to_json(back).dump() == text);
    const Eigen::Vector3d x(0.1, 0.2, 0.3);
    CHECK(eval_reward(back, x) == eval_reward(model, x));

    auto broken = to_json(model);
    broken["alpha"] = "nope";
    CHECK_THROWS_AS(model_from_json(broken), InputError);
    broken = to_json(model);
    broken["inducing"][0].push_back(1.0);
    CHECK_THROWS_AS(model_from_json(broken), InputError);
}
