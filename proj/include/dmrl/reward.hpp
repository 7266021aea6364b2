#pragma once

#include "dmrl/common.hpp"
#include "dmrl/density.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>

namespace dmrl::reward {

using density::KernelParams;
using density::Standardizer;

// ---------------------------------------------------------------------------
// Discrete density matching
// ---------------------------------------------------------------------------

/// Probability vector over a finite state-action index set.
struct DiscreteDistribution {
    Eigen::VectorXd p;

    DiscreteDistribution() = default;
    explicit DiscreteDistribution(Eigen::VectorXd probs);

    Eigen::Index size() const { return p.size(); }
    /// Throws InputError unless entries are >= 0 and sum to 1 within 1e-9.
    void validate() const;
};

struct DiscreteReward {
    Eigen::VectorXd values;
    double r_min = -1.0;
    double r_max = 1.0;
};

/// Maximizer of <mu, R> over the unit L2 ball: R = mu / |mu|.
DiscreteReward solve_discrete(const DiscreteDistribution& mu);

/// <mu, R>.
double value_of(const DiscreteDistribution& mu, const DiscreteReward& r);

// ---------------------------------------------------------------------------
// Kernelized density matching
// ---------------------------------------------------------------------------

/// Reward expansion R(x) = sum_i alpha_i k(S(x), u_i), where S standardizes
/// raw features and the inducing points u_i are stored in standardized units.
struct RewardModel {
    Eigen::MatrixXd inducing;  // N_U x d, standardized
    Eigen::VectorXd alpha;     // N_U
    KernelParams kernel;
    double lambda = 1e-2;
    double beta = 1e-4;
    double delta = 0.75;
    Standardizer standardizer;

    Eigen::Index feature_dim() const { return inducing.cols(); }
    void validate() const;
};

struct KdmrlParams {
    double lambda = 1e-2;
    double beta = 1e-4;
    double delta = 0.75;
    /// Fixed lengthscale in standardized units; median trick when unset.
    std::optional<double> lengthscale;
    /// Multiplier applied to the median-trick lengthscale.
    double median_scale = 1.0;
    /// Standardize features with demo statistics before any kernel evaluation.
    bool standardize = true;
    std::uint64_t seed = 0;

    void validate() const;
};

/// The quadratic program in matrix form:
///   V(alpha) = alpha' K_U K_D w - lambda/2 alpha' K_U alpha - beta/2 alpha' alpha,
/// with w the leverage weights normalized to sum one.
struct KdmrlProblem {
    Eigen::MatrixXd k_u;  // N_U x N_U, SE kernel between inducing points
    Eigen::MatrixXd k_d;  // N_U x N_D, basis densities at inducing points
    Eigen::VectorXd w;    // N_D
    double lambda = 1e-2;
    double beta = 1e-4;

    Eigen::VectorXd linear_term() const { return k_u * (k_d * w); }
    double objective(const Eigen::VectorXd& alpha) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& alpha) const;
    /// |(lambda K_U + beta I) alpha - K_U K_D w|_inf.
    double stationarity_residual(const Eigen::VectorXd& alpha) const;
};

/// [K]_ij = k(a_i, b_j) for rows of a and b.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const KernelParams& p);

/// [K]_ij = normal density with std `bandwidth` centred at b_j, evaluated at a_i.
Eigen::MatrixXd density_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double bandwidth);

/// Closed-form maximizer: alpha = (lambda K_U + beta I)^{-1} K_U K_D w.
/// Throws SolverError (with the condition number) if the system is not
/// numerically positive definite.
Eigen::VectorXd solve_alpha(const KdmrlProblem& problem);

/// Assembles the problem for demos and inducing points that are already in
/// the kernel's coordinate system.
KdmrlProblem build_problem(const DemoSet& demos, const Eigen::MatrixXd& inducing, const KernelParams& kernel,
                           double lambda, double beta, double delta);

/// Fits the reward from raw-unit demos and raw-unit inducing points.
RewardModel fit_kdmrl(const DemoSet& demos, const Eigen::MatrixXd& inducing, const KdmrlParams& params);

double eval_reward(const RewardModel& model, const Eigen::VectorXd& x);

/// Batched evaluation with cached inducing-point norms; rows are raw features.
class RewardEvaluator {
public:
    explicit RewardEvaluator(const RewardModel& model);

    Eigen::Index feature_dim() const { return scaled_inducing_.cols(); }
    double operator()(const Eigen::VectorXd& x) const;
    Eigen::VectorXd operator()(const Eigen::MatrixXd& rows) const;

private:
    Eigen::MatrixXd scaled_inducing_;     // standardized, divided by lengthscale
    Eigen::VectorXd half_sq_norms_;       // |u|^2 / 2 per inducing point
    Eigen::VectorXd alpha_;
    Eigen::RowVectorXd mean_;
    Eigen::RowVectorXd inv_scale_;        // 1 / (scale * lengthscale)
    double amplitude_;
};

/// Objective value of the model's alpha on the given (raw-unit) demos, using
/// the model's own kernel, standardizer and leverage decay.
double objective(const RewardModel& model, const DemoSet& demos);

/// Axis-aligned feature box.
struct Bounds {
    Eigen::VectorXd low;
    Eigen::VectorXd high;

    void validate() const;
    /// Bounding box of all demo samples, each side widened by `inflate` of its
    /// extent (a zero-extent side stays degenerate).
    static Bounds of_demos(const DemoSet& demos, double inflate = 0.1);
};

inline constexpr double kDedupTolerance = 1e-6;

/// Demo samples with duplicates (max-norm within `dedup_tol`) removed, in
/// first-occurrence order.
Eigen::MatrixXd dedup_rows(const Eigen::MatrixXd& rows, double dedup_tol = kDedupTolerance);

/// Up to `max_rows` rows chosen uniformly at random, kept in their original order.
Eigen::MatrixXd subsample_rows(const Eigen::MatrixXd& rows, std::size_t max_rows, std::uint64_t seed);

/// Deduplicated demo features followed by `n_random` uniform draws from
/// `bounds`. With max_demo > 0 the demo samples are first thinned to a random
/// subset of at most max_demo rows (multiplicity preserved, so the subset
/// follows the demo density).
Eigen::MatrixXd build_inducing(const DemoSet& demos, std::size_t n_random, const Bounds& bounds, std::uint64_t seed,
                               double dedup_tol = kDedupTolerance, std::size_t max_demo = 0);

}  // namespace dmrl::reward
