#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dmrl {

/// Malformed or inconsistent caller input (dimension mismatch, empty sets, bad ranges).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A linear solve that could not be carried out reliably.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double condition)
        : std::runtime_error(what), condition_(condition) {}
    double condition() const { return condition_; }

private:
    double condition_;
};

/// Demonstrations in feature space. Each episode is a time-ordered matrix
/// whose rows are the feature vectors of consecutive state-action records.
struct DemoSet {
    std::vector<Eigen::MatrixXd> episodes;

    bool empty() const { return total_samples() == 0; }
    Eigen::Index dim() const;
    Eigen::Index total_samples() const;

    /// All samples stacked row-wise in episode order.
    Eigen::MatrixXd stacked() const;

    /// Steps remaining until the end of the episode (T - t) for every stacked
    /// sample; the final record of an episode has 0.
    std::vector<int> steps_to_go() const;
};

/// Deterministic 64-bit generator (splitmix64-seeded xoshiro256**).
/// Used everywhere instead of std:: distributions so that seeded output is
/// identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next();
    /// Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    double normal();

    using result_type = std::uint64_t;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()() { return next(); }

private:
    std::uint64_t s_[4];
};

/// Derives an independent seed for a named random stream, e.g.
/// stream_seed(seed, "demo", 3).
std::uint64_t stream_seed(std::uint64_t base, std::string_view name, std::uint64_t index = 0);

}  // namespace dmrl
