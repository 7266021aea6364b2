#include "dmrl/common.hpp"

#include <cmath>

namespace dmrl {

Eigen::Index DemoSet::dim() const {
    for (const auto& e : episodes)
        if (e.rows() > 0) return e.cols();
    return episodes.empty() ? 0 : episodes.front().cols();
}

Eigen::Index DemoSet::total_samples() const {
    Eigen::Index n = 0;
    for (const auto& e : episodes) n += e.rows();
    return n;
}

Eigen::MatrixXd DemoSet::stacked() const {
    const Eigen::Index d = dim();
    Eigen::MatrixXd out(total_samples(), d);
    Eigen::Index row = 0;
    for (const auto& e : episodes) {
        if (e.rows() == 0) continue;
        if (e.cols() != d) throw InputError("demo episodes disagree on feature dimension");
        out.middleRows(row, e.rows()) = e;
        row += e.rows();
    }
    return out;
}

std::vector<int> DemoSet::steps_to_go() const {
    std::vector<int> out;
    out.reserve(static_cast<size_t>(total_samples()));
    for (const auto& e : episodes) {
        const auto T = static_cast<int>(e.rows());
        for (int t = 0; t < T; ++t) out.push_back(T - 1 - t);
    }
    return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) {
    for (auto& s : s_) s = splitmix64(seed);
}

std::uint64_t Rng::next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) return 0;
    // Lemire's multiply-shift with rejection.
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
        if (static_cast<std::uint64_t>(m) >= threshold) return static_cast<std::uint64_t>(m >> 64);
    }
}

double Rng::normal() {
    // Box-Muller; one draw discarded to keep the generator stateless beyond s_.
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::uint64_t stream_seed(std::uint64_t base, std::string_view name, std::uint64_t index) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    std::uint64_t x = base ^ h;
    splitmix64(x);
    x ^= index * 0xd1b54a32d192ed03ULL;
    return splitmix64(x);
}

}  // namespace dmrl
