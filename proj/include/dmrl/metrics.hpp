#pragma once

#include "dmrl/reward.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace dmrl::metrics {

using reward::DiscreteDistribution;

/// Half L1 distance.
double d_var(const DiscreteDistribution& p, const DiscreteDistribution& q);

/// sqrt(1/2 sum (sqrt p - sqrt q)^2).
double d_hellinger(const DiscreteDistribution& p, const DiscreteDistribution& q);

struct BoundReport {
    double lhs = 0.0;  // |<mu_true, R_est> - <mu_true, R_true>|
    double rhs = 0.0;  // 3 (R_max - R_min) d_var(mu_true, mu_est)
    bool holds = true;
};

/// Evaluates the value-gap bound for density-matching rewards computed from
/// the true and estimated densities. R_max - R_min defaults to the range of
/// unit-ball rewards.
BoundReport check_theorem1(const DiscreteDistribution& mu_true, const DiscreteDistribution& mu_est,
                           double r_min = -1.0, double r_max = 1.0);

/// d_var <= sqrt(2) d_H (+1e-12).
bool check_lemma2(const DiscreteDistribution& p, const DiscreteDistribution& q);

/// Random distribution on `size` points: Dirichlet(1) with a random number of
/// zeroed entries so sparse and disjoint supports also occur.
DiscreteDistribution random_distribution(Rng& rng, Eigen::Index size);

struct FuzzSummary {
    std::uint64_t trials = 0;
    std::uint64_t holds = 0;
    double worst_slack = 0.0;  // min over trials of rhs - lhs
};

/// Hook applied to each fuzzed report before it is counted; lets tests inject
/// violations to exercise the detector.
using ReportHook = std::function<void(BoundReport&)>;

/// Fuzzes check_theorem1 over supports of size 2..64.
FuzzSummary fuzz_theorem1(std::uint64_t trials, std::uint64_t seed, const ReportHook& hook = {});
FuzzSummary fuzz_lemma2(std::uint64_t trials, std::uint64_t seed);

/// Known 1-D density used by convergence_trend: a Gaussian mixture
/// discretized on `bins` cells over [low, high].
struct MixtureSpec {
    std::vector<double> weights{0.3, 0.5, 0.2};
    std::vector<double> means{-2.0, 0.5, 2.5};
    std::vector<double> stddevs{0.5, 0.7, 0.4};
    double low = -5.0;
    double high = 5.0;
    int bins = 64;

    double pdf(double x) const;
    double sample(Rng& rng) const;
    /// Cell probabilities proportional to pdf at cell centres.
    DiscreteDistribution discretize() const;
};

struct TrendRow {
    std::size_t n = 0;
    double median_gap = 0.0;
    std::vector<double> gaps;  // one per seed
};

/// For each sample size, fits a plain KDE (Silverman bandwidth) to n draws
/// from the mixture, discretizes it, solves both density-matching problems and
/// records |<mu, R_est> - <mu, R_true>|. Median over `seeds` repetitions.
std::vector<TrendRow> convergence_trend(const MixtureSpec& spec, const std::vector<std::size_t>& sample_sizes,
                                        std::size_t seeds, std::uint64_t base_seed);

}  // namespace dmrl::metrics
