#include "dmrl/density.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace dmrl::density {

void KernelParams::validate() const {
    if (!(lengthscale > 0.0) || !std::isfinite(lengthscale))
        throw InputError("kernel lengthscale must be positive, got " + std::to_string(lengthscale));
    if (!(amplitude > 0.0) || !std::isfinite(amplitude))
        throw InputError("kernel amplitude must be positive, got " + std::to_string(amplitude));
}

Standardizer::Standardizer(Eigen::VectorXd mean, Eigen::VectorXd scale)
    : mean_(std::move(mean)), scale_(std::move(scale)) {
    if (mean_.size() != scale_.size()) throw InputError("standardizer mean/scale size mismatch");
    if ((scale_.array() <= 0.0).any()) throw InputError("standardizer scale must be positive");
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& rows) {
    if (rows.rows() == 0) throw InputError("cannot fit a standardizer on zero rows");
    Eigen::VectorXd mean = rows.colwise().mean().transpose();
    Eigen::VectorXd scale(rows.cols());
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
        const double var = (rows.col(j).array() - mean(j)).square().mean();
        const double sd = std::sqrt(var);
        scale(j) = sd > 1e-12 ? sd : 1.0;
    }
    return {std::move(mean), std::move(scale)};
}

Standardizer Standardizer::identity(Eigen::Index dim) {
    return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim)};
}

Eigen::VectorXd Standardizer::transform(const Eigen::VectorXd& x) const {
    if (x.size() != dim()) throw InputError("standardizer dimension mismatch");
    return ((x - mean_).array() / scale_.array()).matrix();
}

Eigen::VectorXd Standardizer::inverse(const Eigen::VectorXd& z) const {
    if (z.size() != dim()) throw InputError("standardizer dimension mismatch");
    return (z.array() * scale_.array()).matrix() + mean_;
}

Eigen::MatrixXd Standardizer::transform_rows(const Eigen::MatrixXd& rows) const {
    if (rows.cols() != dim()) throw InputError("standardizer dimension mismatch");
    return (rows.rowwise() - mean_.transpose()).array().rowwise() / scale_.transpose().array();
}

double se_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const KernelParams& p) {
    if (x.size() != y.size() || x.size() == 0) throw InputError("se_kernel: dimension mismatch");
    const double r2 = (x - y).squaredNorm();
    return p.amplitude * std::exp(-r2 / (2.0 * p.lengthscale * p.lengthscale));
}

double basis_peak(Eigen::Index dim, double bandwidth) {
    return std::pow(2.0 * M_PI * bandwidth * bandwidth, -0.5 * static_cast<double>(dim));
}

double basis_density(const Eigen::VectorXd& x, const Eigen::VectorXd& center, double bandwidth) {
    if (x.size() != center.size() || x.size() == 0) throw InputError("basis_density: dimension mismatch");
    const double r2 = (x - center).squaredNorm();
    return basis_peak(x.size(), bandwidth) * std::exp(-r2 / (2.0 * bandwidth * bandwidth));
}

MedianTrickResult median_trick(const Eigen::MatrixXd& points, std::uint64_t seed, std::size_t max_points) {
    const auto n = static_cast<std::size_t>(points.rows());
    if (n < 2) throw InputError("median_trick needs at least two points");

    std::vector<Eigen::Index> idx(n);
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    if (n > max_points) {
        // Partial Fisher-Yates: the first max_points entries form a uniform subset.
        Rng rng(seed);
        for (std::size_t i = 0; i < max_points; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.below(n - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(max_points);
    }

    std::vector<double> dist;
    dist.reserve(idx.size() * (idx.size() - 1) / 2);
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = i + 1; j < idx.size(); ++j)
            dist.push_back((points.row(idx[i]) - points.row(idx[j])).norm());

    const std::size_t m = dist.size();
    auto mid = dist.begin() + static_cast<std::ptrdiff_t>(m / 2);
    std::nth_element(dist.begin(), mid, dist.end());
    double median = *mid;
    if (m % 2 == 0) {
        const double lower = *std::max_element(dist.begin(), mid);
        median = 0.5 * (median + lower);
    }

    MedianTrickResult out;
    if (median > 0.0) {
        out.params.lengthscale = median;
    } else {
        out.params.lengthscale = 1.0;
        out.degenerate = true;
    }
    return out;
}

double leverage_weight(double delta, int steps_to_go) {
    if (!(delta > 0.0 && delta <= 1.0)) throw InputError("leverage decay must lie in (0, 1]");
    if (steps_to_go < 0) throw InputError("negative steps-to-go");
    const double gamma = std::pow(delta, steps_to_go);
    return std::cos(0.5 * M_PI * (1.0 - gamma));
}

DensityEstimate fit_kde(const DemoSet& demos, double delta, const KernelParams& bandwidth) {
    if (demos.empty()) throw InputError("fit_kde: empty demonstration set");
    bandwidth.validate();

    DensityEstimate est;
    est.centers = demos.stacked();
    est.bandwidth = bandwidth;
    est.delta = delta;

    const auto to_go = demos.steps_to_go();
    est.weights.resize(static_cast<Eigen::Index>(to_go.size()));
    for (std::size_t k = 0; k < to_go.size(); ++k)
        est.weights(static_cast<Eigen::Index>(k)) = leverage_weight(delta, to_go[k]);
    est.normalizer = est.weights.sum();
    if (!(est.normalizer > 0.0)) throw InputError("fit_kde: leverage weights sum to zero");
    return est;
}

double eval_density(const DensityEstimate& est, const Eigen::VectorXd& x) {
    if (x.size() != est.dim()) throw InputError("eval_density: dimension mismatch");
    const double h = est.bandwidth.lengthscale;
    const double inv2h2 = 1.0 / (2.0 * h * h);
    const Eigen::VectorXd r2 = (est.centers.rowwise() - x.transpose()).rowwise().squaredNorm();
    const double mix = est.weights.dot((-r2.array() * inv2h2).exp().matrix());
    return basis_peak(x.size(), h) * mix / est.normalizer;
}

}  // namespace dmrl::density
