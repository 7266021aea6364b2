#include "dmrl/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace dmrl::metrics {

namespace {

void same_support(const DiscreteDistribution& p, const DiscreteDistribution& q) {
    if (p.size() != q.size()) throw InputError("distributions have different support sizes");
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

double d_var(const DiscreteDistribution& p, const DiscreteDistribution& q) {
    same_support(p, q);
    return 0.5 * (p.p - q.p).lpNorm<1>();
}

double d_hellinger(const DiscreteDistribution& p, const DiscreteDistribution& q) {
    same_support(p, q);
    const double h2 = 0.5 * (p.p.array().sqrt() - q.p.array().sqrt()).square().sum();
    return std::sqrt(std::max(h2, 0.0));
}

BoundReport check_theorem1(const DiscreteDistribution& mu_true, const DiscreteDistribution& mu_est, double r_min,
                           double r_max) {
    same_support(mu_true, mu_est);
    const auto r_true = reward::solve_discrete(mu_true);
    const auto r_est = reward::solve_discrete(mu_est);
    BoundReport rep;
    rep.lhs = std::abs(reward::value_of(mu_true, r_est) - reward::value_of(mu_true, r_true));
    rep.rhs = 3.0 * (r_max - r_min) * d_var(mu_true, mu_est);
    rep.holds = rep.lhs <= rep.rhs + 1e-12;
    return rep;
}

bool check_lemma2(const DiscreteDistribution& p, const DiscreteDistribution& q) {
    return d_var(p, q) <= std::sqrt(2.0) * d_hellinger(p, q) + 1e-12;
}

DiscreteDistribution random_distribution(Rng& rng, Eigen::Index size) {
    Eigen::VectorXd v(size);
    for (Eigen::Index i = 0; i < size; ++i) {
        double u = rng.uniform();
        while (u <= 0.0) u = rng.uniform();
        v(i) = -std::log(u);  // Exp(1), normalized below: Dirichlet(1,...,1)
    }
    // Zero a random subset (never all of it).
    const auto zeros = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(size)));
    for (Eigen::Index k = 0; k < zeros; ++k) v(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(size)))) = 0.0;
    if (v.sum() <= 0.0) v(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(size)))) = 1.0;
    return DiscreteDistribution(v / v.sum());
}

FuzzSummary fuzz_theorem1(std::uint64_t trials, std::uint64_t seed, const ReportHook& hook) {
    Rng rng(seed);
    FuzzSummary s;
    s.worst_slack = INFINITY;
    for (std::uint64_t t = 0; t < trials; ++t) {
        const auto size = static_cast<Eigen::Index>(2 + rng.below(63));
        const auto mu_true = random_distribution(rng, size);
        const auto mu_est = random_distribution(rng, size);
        auto rep = check_theorem1(mu_true, mu_est);
        if (hook) hook(rep);
        ++s.trials;
        if (rep.holds) ++s.holds;
        s.worst_slack = std::min(s.worst_slack, rep.rhs - rep.lhs);
    }
    return s;
}

FuzzSummary fuzz_lemma2(std::uint64_t trials, std::uint64_t seed) {
    Rng rng(seed);
    FuzzSummary s;
    s.worst_slack = INFINITY;
    for (std::uint64_t t = 0; t < trials; ++t) {
        const auto size = static_cast<Eigen::Index>(2 + rng.below(63));
        const auto p = random_distribution(rng, size);
        const auto q = random_distribution(rng, size);
        ++s.trials;
        if (check_lemma2(p, q)) ++s.holds;
        s.worst_slack = std::min(s.worst_slack, std::sqrt(2.0) * d_hellinger(p, q) - d_var(p, q));
    }
    return s;
}

double MixtureSpec::pdf(double x) const {
    double sum = 0.0;
    for (size_t i = 0; i < weights.size(); ++i) {
        const double z = (x - means[i]) / stddevs[i];
        sum += weights[i] * std::exp(-0.5 * z * z) / (stddevs[i] * std::sqrt(2.0 * M_PI));
    }
    return sum;
}

double MixtureSpec::sample(Rng& rng) const {
    double u = rng.uniform();
    size_t k = 0;
    while (k + 1 < weights.size() && u >= weights[k]) {
        u -= weights[k];
        ++k;
    }
    return means[k] + stddevs[k] * rng.normal();
}

DiscreteDistribution MixtureSpec::discretize() const {
    Eigen::VectorXd p(bins);
    const double width = (high - low) / bins;
    for (int i = 0; i < bins; ++i) p(i) = pdf(low + (i + 0.5) * width);
    return DiscreteDistribution(p / p.sum());
}

std::vector<TrendRow> convergence_trend(const MixtureSpec& spec, const std::vector<std::size_t>& sample_sizes,
                                        std::size_t seeds, std::uint64_t base_seed) {
    for (size_t i = 1; i < sample_sizes.size(); ++i)
        if (sample_sizes[i] <= sample_sizes[i - 1]) throw InputError("sample sizes must be increasing");

    const auto mu_true = spec.discretize();
    const double width = (spec.high - spec.low) / spec.bins;
    std::vector<TrendRow> table;
    for (const std::size_t n : sample_sizes) {
        if (n < 2) throw InputError("convergence_trend needs at least two samples");
        TrendRow row;
        row.n = n;
        for (std::size_t s = 0; s < seeds; ++s) {
            Rng rng(stream_seed(base_seed, "trend", s * 1000003ULL + n));
            Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 1);
            for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, 0) = spec.sample(rng);
            DemoSet demos;
            demos.episodes.push_back(x);
            // Silverman's rule: the bandwidth has to shrink with n for the
            // estimate to converge (a median-trick width stays put).
            const double mean = x.col(0).mean();
            const double sd = std::sqrt((x.col(0).array() - mean).square().sum() / static_cast<double>(n - 1));
            std::vector<double> sorted(x.data(), x.data() + n);
            std::sort(sorted.begin(), sorted.end());
            const double iqr = sorted[3 * n / 4] - sorted[n / 4];
            double spread = std::min(sd, iqr / 1.349);
            if (!(spread > 0.0)) spread = sd > 0.0 ? sd : 1.0;
            const density::KernelParams bw{0.9 * spread * std::pow(static_cast<double>(n), -0.2), 1.0};
            const auto est = density::fit_kde(demos, 1.0, bw);

            Eigen::VectorXd p(spec.bins);
            for (int i = 0; i < spec.bins; ++i) {
                Eigen::VectorXd c(1);
                c(0) = spec.low + (i + 0.5) * width;
                p(i) = density::eval_density(est, c);
            }
            const reward::DiscreteDistribution mu_est(p / p.sum());
            row.gaps.push_back(check_theorem1(mu_true, mu_est).lhs);
        }
        row.median_gap = median(row.gaps);
        table.push_back(std::move(row));
    }
    return table;
}

}  // namespace dmrl::metrics
