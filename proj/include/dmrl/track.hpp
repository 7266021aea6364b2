#pragma once

#include "dmrl/common.hpp"
#include "dmrl/reward.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dmrl::track {

// Geometry and timing defaults.
inline constexpr double kLaneWidth = 4.0;     // m
inline constexpr double kCarLength = 4.0;     // m
inline constexpr double kCarWidth = 2.0;      // m
inline constexpr double kDMax = 60.0;         // frontal-distance clip, m
inline constexpr double kDt = 0.1;            // s
inline constexpr double kWMax = 1.0;          // rad/s
inline constexpr double kTrafficSpeed = 30.0 / 3.6;  // 30 km/h
inline constexpr int kFeatureDim = 6;

class OffTrackError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Style { Safe, Speedy, Tailgate };
Style parse_style(const std::string& s);
const char* to_string(Style s);
/// 10 m/s (36 km/h) for safe and tailgate, 20 m/s (72 km/h) for speedy.
double nominal_speed(Style s);

/// Unicycle pose; theta is kept in (-pi, pi].
struct CarState {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;
};

struct Action {
    double v = 0.0;  // m/s, >= 0
    double w = 0.0;  // rad/s
};

double wrap_angle(double a);

/// Explicit Euler step of the unicycle model.
CarState step(const CarState& s, const Action& a, double dt = kDt);

struct TrafficCar {
    int lane = 0;
    double s0 = 0.0;  // longitudinal position at t = 0, m
    double speed = kTrafficSpeed;
};

/// A straight multi-lane road closed into a loop of `length` metres: x wraps,
/// lanes are numbered from the right (lane 0 spans y in [0, lane_width)) and
/// the left lane of lane i is i + 1. Traffic keeps its lane at constant speed.
struct Scenario {
    int lanes = 3;
    double lane_width = kLaneWidth;
    double length = 400.0;
    std::vector<TrafficCar> cars;
    Style style = Style::Safe;
    std::uint64_t seed = 0;

    void validate() const;
    double road_width() const { return lanes * lane_width; }
    double lane_center(int lane) const { return (lane + 0.5) * lane_width; }
    /// Lane under lateral position y, clamped to the road.
    int lane_of(double y) const;
    bool on_track(double y) const { return y >= 0.0 && y <= road_width(); }
    /// Wrapped longitudinal position in [0, length).
    double wrap_x(double x) const;
    /// Signed along-road offset from `from` to `to`, in [-length/2, length/2).
    double offset(double from, double to) const;
    double car_x(const TrafficCar& c, double t) const { return wrap_x(c.s0 + c.speed * t); }
};

/// dist_dev (m, positive left of the lane centre), theta_dev (rad), clipped
/// frontal distances in the left / current / right lanes (m) and v (m/s).
struct FeatureVector {
    double dist_dev = 0.0;
    double theta_dev = 0.0;
    double dist_l = kDMax;
    double dist_c = kDMax;
    double dist_r = kDMax;
    double v = 0.0;

    Eigen::VectorXd to_vector() const;
    static FeatureVector from_vector(const Eigen::VectorXd& x);
};

/// Centre-to-centre distance along the road to the nearest traffic car ahead
/// in `lane` at time t; cars overlapping the ego longitudinally count as 0.
/// Missing lanes and empty lanes report kDMax.
double frontal_distance(const Scenario& sc, double t, double ego_x, int lane);

/// Throws OffTrackError when the ego centre is outside the road.
FeatureVector features(const CarState& s, double v, const Scenario& sc, double t);
std::optional<FeatureVector> try_features(const CarState& s, double v, const Scenario& sc, double t);

/// Oriented 4 x 2 m rectangles; separating-axis test.
bool overlap(const CarState& a, const CarState& b, double length = kCarLength, double width = kCarWidth);

/// True if the ego rectangle overlaps any traffic car at time t (ring-aware).
bool collides(const CarState& ego, const Scenario& sc, double t);

// ---------------------------------------------------------------------------
// Controllers
// ---------------------------------------------------------------------------

/// Proportional lateral gains of the scripted experts.
inline constexpr double kSteerGainLateral = 0.2;  // rad/(s m)
inline constexpr double kSteerGainHeading = 1.5;  // 1/s

/// Rule-based demonstrator for the three driving styles. Steering is
/// proportional to the lane-centre error; speed takes the planner's three
/// levels {0.6, 1, 1.2} x nominal: safe (10 m/s) and speedy (20 m/s) change
/// lanes when the car ahead is closer than 30 m / 45 m and slow down only if
/// boxed in; tailgate (10 m/s) joins the lane of the nearest car ahead and
/// holds a 10 m centre gap (slow below it, nominal within 5 m over, fast beyond).
Action scripted_expert(Style style, const CarState& s, const Scenario& sc, double t);

/// Scores a batch of feature rows (n x 6) with one reward per row.
class RewardFunction {
public:
    virtual ~RewardFunction() = default;
    virtual Eigen::VectorXd evaluate(const Eigen::MatrixXd& features) const = 0;
};

class KernelReward final : public RewardFunction {
public:
    explicit KernelReward(const reward::RewardModel& model);
    Eigen::VectorXd evaluate(const Eigen::MatrixXd& features) const override;

private:
    reward::RewardEvaluator eval_;
};

class FunctionReward final : public RewardFunction {
public:
    explicit FunctionReward(std::function<double(const FeatureVector&)> fn) : fn_(std::move(fn)) {}
    Eigen::VectorXd evaluate(const Eigen::MatrixXd& features) const override;

private:
    std::function<double(const FeatureVector&)> fn_;
};

struct RhcConfig {
    int depth = 3;
    double segment = 0.6;  // s per constant-action segment
    double dt = kDt;
    double v_nominal = 10.0;
    std::array<double, 3> v_factors{0.6, 1.0, 1.2};
    std::array<double, 3> w_values{-0.5, 0.0, 0.5};
    /// Discard sequences that overlap the constant-speed traffic prediction,
    /// like sequences that leave the road.
    bool avoid_collisions = true;

    int steps_per_segment() const;
    /// The 9 actions, index = 3 * v_index + w_index.
    std::array<Action, 9> actions() const;
    void validate() const;
};

struct RhcResult {
    Action action;
    double score = 0.0;
    int sequence = -1;  // index of the best sequence, base-9 digits = action indices
    bool distress = false;
};

/// Enumerates every constant-action segment sequence of the configured depth,
/// rolls the ego forward (traffic at constant speed), scores each sequence by
/// the summed reward of its (state, action) pairs and returns the first action
/// of the best one. Ties prefer the smaller |w| of the first action, then the
/// lower sequence index. Sequences that leave the road (or hit predicted
/// traffic, see avoid_collisions) are discarded; if all are, returns
/// (lowest v, 0) with distress set.
RhcResult rhc_plan(const RewardFunction& reward, const CarState& s, const Scenario& sc, double t,
                   const RhcConfig& cfg);

// ---------------------------------------------------------------------------
// Episodes
// ---------------------------------------------------------------------------

struct StepRecord {
    int t = 0;  // step index
    CarState state;
    Action action;
    FeatureVector features;
    int lane = 0;
};

struct EpisodeStats {
    bool collision = false;
    bool off_track = false;
    int lane_changes = 0;
    int distress_steps = 0;
    double mean_abs_dev = 0.0;
    double mean_abs_theta_dev = 0.0;
    double mean_v = 0.0;
    double duration = 0.0;  // simulated seconds
};

struct Episode {
    int index = 0;
    std::vector<StepRecord> steps;
    EpisodeStats stats;
};

/// Controller callback: returns the action and whether it was a distress fallback.
using Controller = std::function<Action(const CarState&, const Scenario&, double t, bool& distress)>;

Controller expert_controller(Style style);
Controller rhc_controller(std::shared_ptr<const RewardFunction> reward, RhcConfig cfg);

/// Ego starts at x = 0 on the centre of `start_lane`, aligned with the road.
CarState start_state(const Scenario& sc, int start_lane);

/// Simulates up to `duration` seconds, logging (state, action, features) at
/// every step. Stops early on collision (flagged) or when leaving the road.
Episode run_episode(const Controller& controller, const Scenario& sc, const CarState& start, double duration,
                    int index = 0, double dt = kDt);

EpisodeStats summarize(const std::vector<StepRecord>& steps, double dt = kDt);

/// Feature-space demonstrations, one episode per run.
DemoSet to_demo_set(const std::vector<Episode>& episodes);

// ---------------------------------------------------------------------------
// Scenario generation
// ---------------------------------------------------------------------------

/// Three-lane loop with `cars` traffic cars at least 40 m apart longitudinally.
Scenario random_scenario(Style style, int lanes, int cars, double length, std::uint64_t seed);

/// Ten trained settings (3 lanes, 1-5 cars each).
std::vector<Scenario> trained_scenarios(Style style, std::uint64_t seed);

/// Transferred setting: 5 lanes, 5-10 cars at 30 km/h on an 800 m loop.
Scenario transferred_scenario(Style style, std::uint64_t seed);

/// Runs `controller` on every scenario from every start lane.
std::vector<Episode> run_scenarios(const Controller& controller, const std::vector<Scenario>& scenarios,
                                   double duration);

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Fixed 16 x 16 binning. Signed quantities use ranges whose bin centres fall
/// on zero (and on the lane centres for Y) so nominal values never sit on a
/// bin edge; values outside a range go to the edge bins.
struct HistogramAxis {
    double low = 0.0;
    double high = 1.0;
    int bins = 16;
    int bin(double v) const;
};

struct PairSpec {
    std::string name;
    int first = 0;  // column id, see trained_pairs()
    int second = 0;
    HistogramAxis a;
    HistogramAxis b;
};

/// Columns: 0 X, 1 Y, 2 dist_dev, 3 theta_dev, 4 dist_L, 5 dist_C, 6 dist_R, 7 v, 8 w.
std::vector<PairSpec> trained_pairs(const Scenario& geometry);

/// Variational distance between the 2-D histograms of two episode sets.
double histogram_distance(const std::vector<Episode>& ref, const std::vector<Episode>& runs, const PairSpec& pair,
                          const Scenario& geometry);

struct TrainedMetrics {
    std::vector<std::string> names;  // the six pairs
    std::vector<double> distances;
    double mean_distance = 0.0;
    double collision_ratio = 0.0;
    int episodes = 0;
};

TrainedMetrics eval_trained(const std::vector<Episode>& ref, const std::vector<Episode>& runs,
                            const Scenario& geometry);

struct TransferredMetrics {
    double avg_collisions = 0.0;       // per episode
    double avg_abs_dev = 0.0;          // m
    double avg_abs_theta_dev = 0.0;    // rad
    double avg_v = 0.0;                // m/s
    double avg_lane_changes = 0.0;     // per episode
    int episodes = 0;
    int collision_free = 0;
};

TransferredMetrics eval_transferred(const std::vector<Episode>& runs);

}  // namespace dmrl::track
