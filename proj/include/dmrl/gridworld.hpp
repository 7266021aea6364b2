#pragma once

#include "dmrl/common.hpp"
#include "dmrl/reward.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace dmrl::grid {

/// Fixed order; also the greedy tie-break order.
enum class Action : int { Up = 0, Down, Left, Right, Stay };
inline constexpr std::array<Action, 5> kActions{Action::Up, Action::Down, Action::Left, Action::Right, Action::Stay};
const char* to_string(Action a);

struct Cell {
    int x = 0;
    int y = 0;
    bool operator==(const Cell&) const = default;
};

/// Deterministic grid MDP: single-cell moves, clamped at the walls, state reward.
class GridMdp {
public:
    GridMdp(int width, int height, Eigen::VectorXd reward, double gamma = 0.95);

    int width() const { return width_; }
    int height() const { return height_; }
    int states() const { return width_ * height_; }
    double gamma() const { return gamma_; }
    const Eigen::VectorXd& reward() const { return reward_; }

    int index(Cell c) const { return c.y * width_ + c.x; }
    Cell cell(int s) const { return {s % width_, s / width_}; }
    int next(int s, Action a) const;

    GridMdp with_reward(Eigen::VectorXd reward) const { return {width_, height_, std::move(reward), gamma_}; }

private:
    int width_;
    int height_;
    Eigen::VectorXd reward_;
    double gamma_;
};

/// R(s) = sum_i sign_i exp(-|s - c_i|^2) over continuous peak centres.
struct PeakReward {
    std::vector<Eigen::Vector2d> centers;
    std::vector<double> signs;

    double operator()(double x, double y) const;
    /// Reward at every cell, indexed like GridMdp.
    Eigen::VectorXd field(int width, int height) const;
};

PeakReward gen_reward(int width, int height, int peaks, std::uint64_t seed);

enum class FeatureMode { Linear, Nonlinear };
FeatureMode parse_mode(const std::string& s);
const char* to_string(FeatureMode m);

/// Gaussian-bump observations exp(-|s - y_j|^2 / w^2). Linear mode observes
/// the true peak centres with w = 1 cell; nonlinear mode a 5 x 5 lattice
/// spanning the grid, with w defaulting to the lattice spacing (distances
/// measured in lattice units) so neighbouring cells stay distinguishable.
class FeatureMap {
public:
    static FeatureMap linear(const PeakReward& truth);
    static FeatureMap nonlinear(int width, int height, double bandwidth = 0.0);

    FeatureMode mode() const { return mode_; }
    const std::vector<Eigen::Vector2d>& centers() const { return centers_; }
    Eigen::Index dim() const { return static_cast<Eigen::Index>(centers_.size()); }
    Eigen::VectorXd operator()(Cell c) const;

private:
    FeatureMode mode_ = FeatureMode::Nonlinear;
    std::vector<Eigen::Vector2d> centers_;
    double bandwidth_ = 1.0;
};

struct ValueResult {
    Eigen::VectorXd values;
    std::vector<Action> policy;
    int sweeps = 0;
    double residual = 0.0;  // sup-norm Bellman residual of `values`
};

/// Iterates V <- R + gamma max_a V(next(s, a)) until the sup-norm Bellman
/// residual falls below tol; the policy is greedy with the fixed tie order.
ValueResult value_iteration(const GridMdp& mdp, double tol = 1e-8);

std::vector<Action> greedy_policy(const GridMdp& mdp, const Eigen::VectorXd& values);

/// Value of a deterministic policy under the MDP's own reward.
Eigen::VectorXd evaluate_policy(const GridMdp& mdp, const std::vector<Action>& policy, double tol = 1e-10);

struct GridStep {
    int state = 0;
    Action action = Action::Stay;
};
using GridTrajectory = std::vector<GridStep>;

/// n_traj episodes of exactly `len` steps from uniform start states.
std::vector<GridTrajectory> sample_demos(const GridMdp& mdp, const std::vector<Action>& policy, int n_traj, int len,
                                         std::uint64_t seed);

/// Feature-space demonstrations: one row Phi(s_t) per step (actions dropped).
DemoSet to_demo_set(const std::vector<GridTrajectory>& trajs, const GridMdp& mdp, const FeatureMap& phi);

/// Mean over uniform start states of V^{pi*}(s) - V^{pi_hat}(s), both scored
/// under the true reward; pi_hat is optimal for `learned`.
double evd(const GridMdp& true_mdp, const Eigen::VectorXd& learned, double tol = 1e-8);

/// Learned reward at every cell: R(Phi(s)).
Eigen::VectorXd reward_field(const reward::RewardModel& model, const GridMdp& mdp, const FeatureMap& phi);

struct GridConfig {
    int size = 16;
    FeatureMode mode = FeatureMode::Nonlinear;
    std::vector<int> n_traj{8, 16, 32, 64, 128, 256};
    int maps = 10;
    int demo_sets = 5;
    int peaks = 8;
    int traj_len = 0;  // 0: size / 2 (8 on 16x16, 16 on 32x32)
    double gamma = 0.95;
    double lambda = 1e-2;
    double beta = 1e-4;
    double delta = 0.75;
    std::size_t n_random = 0;
    double feature_bandwidth = 0.0;  // 0: lattice spacing
    /// Reward/KDE lengthscale as a fraction of the median pairwise distance;
    /// the plain median oversmooths peaked grid densities.
    double median_scale = 0.1;
    std::uint64_t seed = 1;
    int threads = 1;

    int trajectory_length() const { return traj_len > 0 ? traj_len : size / 2; }
    void validate() const;
};

struct GridRow {
    std::uint64_t map_seed = 0;
    std::uint64_t demo_seed = 0;
    int size = 0;
    FeatureMode mode = FeatureMode::Nonlinear;
    int n_traj = 0;
    double evd = 0.0;
    double fit_ms = 0.0;
};

/// Every (map, demo set, n_traj) combination, in that nesting order.
std::vector<GridRow> run_grid_experiment(const GridConfig& config);

/// Columns: map_seed,demo_seed,grid,mode,n_traj,evd,fit_ms. With
/// `timing` false fit_ms is written as 0 so reruns are byte-identical.
void write_csv(std::ostream& out, const std::vector<GridRow>& rows, bool timing = true);

}  // namespace dmrl::grid
