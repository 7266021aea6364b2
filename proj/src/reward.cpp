#include "dmrl/reward.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace dmrl::reward {

DiscreteDistribution::DiscreteDistribution(Eigen::VectorXd probs) : p(std::move(probs)) {}

void DiscreteDistribution::validate() const {
    if (p.size() == 0) throw InputError("empty distribution");
    if (!p.allFinite() || (p.array() < 0.0).any()) throw InputError("distribution has negative or non-finite entries");
    if (std::abs(p.sum() - 1.0) > 1e-9) throw InputError("distribution does not sum to one");
}

DiscreteReward solve_discrete(const DiscreteDistribution& mu) {
    if (mu.size() == 0) throw InputError("solve_discrete: empty distribution");
    const double norm = mu.p.norm();
    if (!(norm > 0.0)) throw InputError("solve_discrete: zero density vector");
    DiscreteReward r;
    r.values = mu.p / norm;
    r.r_min = -1.0;
    r.r_max = 1.0;
    return r;
}

double value_of(const DiscreteDistribution& mu, const DiscreteReward& r) {
    if (mu.size() != r.values.size()) throw InputError("value_of: size mismatch");
    return mu.p.dot(r.values);
}

void RewardModel::validate() const {
    if (inducing.rows() < 1) throw InputError("reward model needs at least one inducing point");
    if (alpha.size() != inducing.rows()) throw InputError("alpha length differs from inducing count");
    if (!alpha.allFinite()) throw InputError("alpha has non-finite entries");
    if (!(lambda > 0.0) || !(beta > 0.0)) throw InputError("lambda and beta must be positive");
    if (standardizer.dim() != inducing.cols()) throw InputError("standardizer dimension differs from inducing points");
    kernel.validate();
}

void KdmrlParams::validate() const {
    if (!(lambda > 0.0)) throw InputError("lambda must be positive");
    if (!(beta > 0.0)) throw InputError("beta must be positive");
    if (!(delta > 0.0 && delta <= 1.0)) throw InputError("delta must lie in (0, 1]");
    if (lengthscale && !(*lengthscale > 0.0)) throw InputError("lengthscale must be positive");
    if (!(median_scale > 0.0)) throw InputError("median_scale must be positive");
}

double KdmrlProblem::objective(const Eigen::VectorXd& alpha) const {
    return alpha.dot(linear_term()) - 0.5 * lambda * alpha.dot(k_u * alpha) - 0.5 * beta * alpha.squaredNorm();
}

Eigen::VectorXd KdmrlProblem::gradient(const Eigen::VectorXd& alpha) const {
    return linear_term() - lambda * (k_u * alpha) - beta * alpha;
}

double KdmrlProblem::stationarity_residual(const Eigen::VectorXd& alpha) const {
    return ((lambda * (k_u * alpha) + beta * alpha) - linear_term()).lpNorm<Eigen::Infinity>();
}

namespace {

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.cols() != b.cols()) throw InputError("kernel matrix: dimension mismatch");
    const Eigen::VectorXd an = a.rowwise().squaredNorm();
    const Eigen::VectorXd bn = b.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = -2.0 * (a * b.transpose());
    d2.colwise() += an;
    d2.rowwise() += bn.transpose();
    return d2.cwiseMax(0.0);
}

}  // namespace

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const KernelParams& p) {
    p.validate();
    const double c = 1.0 / (2.0 * p.lengthscale * p.lengthscale);
    return p.amplitude * (-c * squared_distances(a, b).array()).exp().matrix();
}

Eigen::MatrixXd density_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double bandwidth) {
    if (!(bandwidth > 0.0)) throw InputError("density bandwidth must be positive");
    const double c = 1.0 / (2.0 * bandwidth * bandwidth);
    const double peak = density::basis_peak(a.cols(), bandwidth);
    return peak * (-c * squared_distances(a, b).array()).exp().matrix();
}

Eigen::VectorXd solve_alpha(const KdmrlProblem& problem) {
    const Eigen::Index n = problem.k_u.rows();
    if (problem.k_u.cols() != n || problem.k_d.rows() != n || problem.k_d.cols() != problem.w.size())
        throw InputError("solve_alpha: inconsistent matrix shapes");
    if (!(problem.lambda > 0.0) || !(problem.beta > 0.0)) throw InputError("lambda and beta must be positive");

    Eigen::MatrixXd system = problem.lambda * problem.k_u;
    system.diagonal().array() += problem.beta;
    const Eigen::VectorXd rhs = problem.linear_term();

    Eigen::LLT<Eigen::MatrixXd> llt(system);
    if (llt.info() != Eigen::Success) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(system, Eigen::EigenvaluesOnly);
        const auto& ev = eig.eigenvalues();
        const double cond = std::abs(ev.maxCoeff()) / std::max(std::abs(ev.minCoeff()), 1e-300);
        std::ostringstream msg;
        msg << "KDMRL system is not positive definite (condition number " << cond << ")";
        throw SolverError(msg.str(), cond);
    }
    Eigen::VectorXd alpha = llt.solve(rhs);
    // One step of iterative refinement.
    alpha += llt.solve(rhs - system * alpha);
    if (!alpha.allFinite()) throw SolverError("KDMRL solve produced non-finite alpha", INFINITY);
    return alpha;
}

KdmrlProblem build_problem(const DemoSet& demos, const Eigen::MatrixXd& inducing, const KernelParams& kernel,
                           double lambda, double beta, double delta) {
    if (demos.empty()) throw InputError("KDMRL needs at least one demonstration sample");
    if (inducing.rows() == 0) throw InputError("KDMRL needs at least one inducing point");
    if (inducing.cols() != demos.dim()) throw InputError("inducing points and demos differ in dimension");
    kernel.validate();

    const auto est = density::fit_kde(demos, delta, kernel);
    KdmrlProblem p;
    p.k_u = kernel_matrix(inducing, inducing, kernel);
    p.k_d = density_matrix(inducing, est.centers, kernel.lengthscale);
    p.w = est.normalized_weights();
    p.lambda = lambda;
    p.beta = beta;
    return p;
}

namespace {

DemoSet transform_demos(const DemoSet& demos, const Standardizer& s) {
    DemoSet out;
    out.episodes.reserve(demos.episodes.size());
    for (const auto& e : demos.episodes) out.episodes.push_back(e.rows() ? s.transform_rows(e) : e);
    return out;
}

}  // namespace

RewardModel fit_kdmrl(const DemoSet& demos, const Eigen::MatrixXd& inducing, const KdmrlParams& params) {
    params.validate();
    if (demos.empty()) throw InputError("fit_kdmrl: empty demonstration set");
    if (inducing.rows() == 0) throw InputError("fit_kdmrl: no inducing points");
    if (inducing.cols() != demos.dim()) throw InputError("fit_kdmrl: inducing/demo dimension mismatch");

    RewardModel model;
    model.lambda = params.lambda;
    model.beta = params.beta;
    model.delta = params.delta;
    model.standardizer =
        params.standardize ? Standardizer::fit(demos.stacked()) : Standardizer::identity(demos.dim());

    const DemoSet z = transform_demos(demos, model.standardizer);
    model.inducing = model.standardizer.transform_rows(inducing);

    if (params.lengthscale) {
        model.kernel.lengthscale = *params.lengthscale;
    } else {
        const Eigen::MatrixXd samples = z.stacked();
        model.kernel = samples.rows() >= 2 ? density::median_trick(samples, params.seed).params : KernelParams{};
        model.kernel.lengthscale *= params.median_scale;
    }
    model.kernel.amplitude = 1.0;

    const auto problem = build_problem(z, model.inducing, model.kernel, params.lambda, params.beta, params.delta);
    model.alpha = solve_alpha(problem);
    return model;
}

RewardEvaluator::RewardEvaluator(const RewardModel& model) {
    model.validate();
    const double ell = model.kernel.lengthscale;
    scaled_inducing_ = model.inducing / ell;
    half_sq_norms_ = 0.5 * scaled_inducing_.rowwise().squaredNorm();
    alpha_ = model.alpha;
    mean_ = model.standardizer.mean().transpose();
    inv_scale_ = (model.standardizer.scale().array() * ell).inverse().matrix().transpose();
    amplitude_ = model.kernel.amplitude;
}

double RewardEvaluator::operator()(const Eigen::VectorXd& x) const {
    if (x.size() != feature_dim()) throw InputError("eval_reward: dimension mismatch");
    const Eigen::RowVectorXd z = (x.transpose() - mean_).cwiseProduct(inv_scale_);
    const Eigen::VectorXd d2 = (scaled_inducing_.rowwise() - z).rowwise().squaredNorm();
    return amplitude_ * alpha_.dot((-0.5 * d2.array()).exp().matrix());
}

Eigen::VectorXd RewardEvaluator::operator()(const Eigen::MatrixXd& rows) const {
    if (rows.cols() != feature_dim()) throw InputError("eval_reward: dimension mismatch");
    const Eigen::MatrixXd z = (rows.rowwise() - mean_).array().rowwise() * inv_scale_.array();
    // exponent = z.u - |z|^2/2 - |u|^2/2 = -|z - u|^2 / 2
    Eigen::MatrixXd expo = z * scaled_inducing_.transpose();
    expo.colwise() -= 0.5 * z.rowwise().squaredNorm();
    expo.rowwise() -= half_sq_norms_.transpose();
    // Terms below e^-700 are dropped; exp() on the subnormal range is very slow.
    const auto e = expo.array().max(-700.0).min(0.0).exp();
    return amplitude_ * ((expo.array() < -700.0).select(0.0, e).matrix() * alpha_);
}

double eval_reward(const RewardModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.feature_dim()) throw InputError("eval_reward: dimension mismatch");
    const Eigen::VectorXd z = model.standardizer.transform(x);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < model.inducing.rows(); ++i)
        sum += model.alpha(i) * density::se_kernel(z, model.inducing.row(i).transpose(), model.kernel);
    return sum;
}

double objective(const RewardModel& model, const DemoSet& demos) {
    if (demos.dim() != model.feature_dim()) throw InputError("objective: dimension mismatch");
    const DemoSet z = transform_demos(demos, model.standardizer);
    const auto problem = build_problem(z, model.inducing, model.kernel, model.lambda, model.beta, model.delta);
    return problem.objective(model.alpha);
}

void Bounds::validate() const {
    if (low.size() != high.size() || low.size() == 0) throw InputError("bounds: dimension mismatch");
    if ((low.array() > high.array()).any()) throw InputError("bounds: low exceeds high");
}

Bounds Bounds::of_demos(const DemoSet& demos, double inflate) {
    if (demos.empty()) throw InputError("bounds of an empty demo set");
    const Eigen::MatrixXd x = demos.stacked();
    Bounds b;
    b.low = x.colwise().minCoeff().transpose();
    b.high = x.colwise().maxCoeff().transpose();
    const Eigen::VectorXd pad = inflate * (b.high - b.low);
    b.low -= pad;
    b.high += pad;
    return b;
}

Eigen::MatrixXd dedup_rows(const Eigen::MatrixXd& rows, double dedup_tol) {
    const Eigen::Index n = rows.rows();
    if (n == 0) return rows;
    // Sweep in order of the first coordinate; only rows within tol on that
    // coordinate can be duplicates.
    std::vector<Eigen::Index> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return rows(a, 0) < rows(b, 0); });

    // A row is dropped if an earlier-indexed row lies within tolerance.
    std::vector<char> keep(static_cast<size_t>(n), 1);
    for (size_t a = 0; a < order.size(); ++a) {
        const Eigen::Index i = order[a];
        if (!keep[static_cast<size_t>(i)]) continue;
        for (size_t b = a + 1; b < order.size(); ++b) {
            const Eigen::Index j = order[b];
            if (rows(j, 0) - rows(i, 0) > dedup_tol) break;
            if (!keep[static_cast<size_t>(j)]) continue;
            if ((rows.row(i) - rows.row(j)).lpNorm<Eigen::Infinity>() <= dedup_tol) {
                if (i < j) {
                    keep[static_cast<size_t>(j)] = 0;
                } else {
                    keep[static_cast<size_t>(i)] = 0;
                    break;
                }
            }
        }
    }
    Eigen::Index kept = 0;
    for (char k : keep) kept += k;
    Eigen::MatrixXd out(kept, rows.cols());
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        if (keep[static_cast<size_t>(i)]) out.row(r++) = rows.row(i);
    return out;
}

Eigen::MatrixXd subsample_rows(const Eigen::MatrixXd& rows, std::size_t max_rows, std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(rows.rows());
    if (n <= max_rows) return rows;
    std::vector<Eigen::Index> idx(n);
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    Rng rng(seed);
    // Partial Fisher-Yates: the first max_rows slots are a uniform subset.
    for (std::size_t i = 0; i < max_rows; ++i)
        std::swap(idx[i], idx[i + static_cast<std::size_t>(rng.below(n - i))]);
    idx.resize(max_rows);
    std::sort(idx.begin(), idx.end());
    Eigen::MatrixXd out(static_cast<Eigen::Index>(max_rows), rows.cols());
    for (std::size_t i = 0; i < max_rows; ++i) out.row(static_cast<Eigen::Index>(i)) = rows.row(idx[i]);
    return out;
}

Eigen::MatrixXd build_inducing(const DemoSet& demos, std::size_t n_random, const Bounds& bounds, std::uint64_t seed,
                               double dedup_tol, std::size_t max_demo) {
    bounds.validate();
    const Eigen::Index d = bounds.low.size();
    Eigen::MatrixXd from_demos(0, d);
    if (!demos.empty()) {
        if (demos.dim() != d) throw InputError("build_inducing: bounds/demo dimension mismatch");
        // Subsample before deduplicating so the subset follows the demo
        // density; a heavily repeated state is then almost surely kept.
        Eigen::MatrixXd rows = demos.stacked();
        if (max_demo > 0) rows = subsample_rows(rows, max_demo, stream_seed(seed, "subset"));
        from_demos = dedup_rows(rows, dedup_tol);
    }
    Eigen::MatrixXd out(from_demos.rows() + static_cast<Eigen::Index>(n_random), d);
    out.topRows(from_demos.rows()) = from_demos;
    Rng rng(seed);
    for (Eigen::Index i = from_demos.rows(); i < out.rows(); ++i)
        for (Eigen::Index j = 0; j < d; ++j) out(i, j) = rng.uniform(bounds.low(j), bounds.high(j));
    return out;
}

}  // namespace dmrl::reward
