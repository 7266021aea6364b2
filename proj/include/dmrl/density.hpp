#pragma once

#include "dmrl/common.hpp"

#include <Eigen/Dense>

#include <cstdint>

namespace dmrl::density {

/// Isotropic squared-exponential kernel hyperparameters.
struct KernelParams {
    double lengthscale = 1.0;
    double amplitude = 1.0;

    void validate() const;
};

/// Per-dimension affine map to zero mean / unit variance. Dimensions with
/// zero spread keep scale 1 so the map stays invertible.
class Standardizer {
public:
    Standardizer() = default;
    Standardizer(Eigen::VectorXd mean, Eigen::VectorXd scale);

    static Standardizer fit(const Eigen::MatrixXd& rows);
    static Standardizer identity(Eigen::Index dim);

    Eigen::Index dim() const { return mean_.size(); }
    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::VectorXd& scale() const { return scale_; }

    Eigen::VectorXd transform(const Eigen::VectorXd& x) const;
    Eigen::VectorXd inverse(const Eigen::VectorXd& z) const;
    /// Row-wise transform of an n x d matrix.
    Eigen::MatrixXd transform_rows(const Eigen::MatrixXd& rows) const;

private:
    Eigen::VectorXd mean_;
    Eigen::VectorXd scale_;
};

/// amplitude * exp(-|x - y|^2 / (2 lengthscale^2)).
double se_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const KernelParams& p);

/// Isotropic normal density with standard deviation `bandwidth` centred at
/// `center`, evaluated at x. Integrates to one over R^d.
double basis_density(const Eigen::VectorXd& x, const Eigen::VectorXd& center, double bandwidth);

/// Normalizing constant (2 pi h^2)^(-d/2) of basis_density.
double basis_peak(Eigen::Index dim, double bandwidth);

struct MedianTrickResult {
    KernelParams params;
    /// Set when every pairwise distance was zero and lengthscale fell back to 1.
    bool degenerate = false;
};

inline constexpr std::size_t kMedianTrickMaxPoints = 2000;

/// Lengthscale = median pairwise Euclidean distance between rows of `points`.
/// More than `max_points` rows are subsampled uniformly (seeded) first.
MedianTrickResult median_trick(const Eigen::MatrixXd& points, std::uint64_t seed = 0,
                               std::size_t max_points = kMedianTrickMaxPoints);

/// cos(pi/2 * (1 - delta^steps_to_go)); 1 for the last record of an episode.
double leverage_weight(double delta, int steps_to_go);

/// Leveraged kernel density estimate over demonstration features.
/// With delta = 1 every weight is 1 and this is the plain KDE.
struct DensityEstimate {
    Eigen::MatrixXd centers;   // N_D x d
    Eigen::VectorXd weights;   // leverage weights in (0, 1]
    double normalizer = 1.0;   // sum of weights
    KernelParams bandwidth;
    double delta = 1.0;

    Eigen::Index dim() const { return centers.cols(); }
    /// weights / normalizer; sums to one.
    Eigen::VectorXd normalized_weights() const { return weights / normalizer; }
};

DensityEstimate fit_kde(const DemoSet& demos, double delta, const KernelParams& bandwidth);

double eval_density(const DensityEstimate& est, const Eigen::VectorXd& x);

}  // namespace dmrl::density
