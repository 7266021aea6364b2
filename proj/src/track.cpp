#include "dmrl/track.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dmrl::track {

namespace {

constexpr double kPi = 3.14159265358979323846;

double clamp_w(double w) { return std::clamp(w, -kWMax, kWMax); }

// Along-road offsets of traffic cars relative to the ego, per lane.
struct LaneView {
    bool exists = false;
    double ahead = kDMax;          // clipped frontal distance
    double speed_ahead = 0.0;      // speed of that car (0 when none)
    double nearest_abs = INFINITY;  // closest |offset| of any car in the lane
    double behind = INFINITY;      // distance to nearest car behind (positive)
};

LaneView view_lane(const Scenario& sc, double t, double ego_x, int lane) {
    LaneView v;
    if (lane < 0 || lane >= sc.lanes) return v;
    v.exists = true;
    double best = INFINITY;
    for (const auto& c : sc.cars) {
        if (c.lane != lane) continue;
        const double off = sc.offset(ego_x, sc.car_x(c, t));
        v.nearest_abs = std::min(v.nearest_abs, std::abs(off));
        if (off < 0.0) v.behind = std::min(v.behind, -off);
        // Centre offsets in (-car length, 0) overlap the ego: report zero.
        const double d = off >= 0.0 ? off : (off > -kCarLength ? 0.0 : INFINITY);
        if (d < best) {
            best = d;
            v.speed_ahead = c.speed;
        }
    }
    v.ahead = std::min(best, kDMax);
    return v;
}

// A lane is safe to merge into when nothing sits within [-rear, front] of the ego.
bool merge_clear(const Scenario& sc, double t, double ego_x, int lane, double rear, double front) {
    if (lane < 0 || lane >= sc.lanes) return false;
    for (const auto& c : sc.cars) {
        if (c.lane != lane) continue;
        const double off = sc.offset(ego_x, sc.car_x(c, t));
        if (off > -rear && off < front) return false;
    }
    return true;
}

double steer_to(const CarState& s, double y_target) {
    return clamp_w(-kSteerGainLateral * (s.y - y_target) - kSteerGainHeading * wrap_angle(s.theta));
}

// Speed levels shared with the planner's action grid, so every demonstrated
// speed is one the controller can reproduce: slow below the target gap,
// nominal near it, fast when far behind.
double follow_speed(const LaneView& v, double gap, double v0) {
    if (v.ahead < gap) return 0.6 * v0;
    return v.ahead < gap + 5.0 ? v0 : 1.2 * v0;
}

Eigen::RowVectorXd feature_row(const FeatureVector& f) {
    Eigen::RowVectorXd r(kFeatureDim);
    r << f.dist_dev, f.theta_dev, f.dist_l, f.dist_c, f.dist_r, f.v;
    return r;
}

}  // namespace

Style parse_style(const std::string& s) {
    if (s == "safe") return Style::Safe;
    if (s == "speedy") return Style::Speedy;
    if (s == "tailgate") return Style::Tailgate;
    throw InputError("unknown style '" + s + "' (expected safe, speedy or tailgate)");
}

const char* to_string(Style s) {
    switch (s) {
        case Style::Safe: return "safe";
        case Style::Speedy: return "speedy";
        case Style::Tailgate: return "tailgate";
    }
    return "?";
}

double nominal_speed(Style s) { return s == Style::Speedy ? 20.0 : 10.0; }

double wrap_angle(double a) {
    if (a > -kPi && a <= kPi) return a;
    a = std::fmod(a + kPi, 2.0 * kPi);
    if (a <= 0.0) a += 2.0 * kPi;
    return a - kPi;
}

CarState step(const CarState& s, const Action& a, double dt) {
    return {s.x + a.v * std::cos(s.theta) * dt, s.y + a.v * std::sin(s.theta) * dt, wrap_angle(s.theta + a.w * dt)};
}

void Scenario::validate() const {
    if (lanes < 1) throw InputError("scenario: lanes must be >= 1");
    if (!(lane_width > 0.0)) throw InputError("scenario: lane_width must be positive");
    if (!(length > 4.0 * kCarLength)) throw InputError("scenario: track length too short");
    for (const auto& c : cars) {
        if (c.lane < 0 || c.lane >= lanes) throw InputError("scenario: traffic car lane out of range");
        if (!std::isfinite(c.s0) || !std::isfinite(c.speed) || c.speed < 0.0)
            throw InputError("scenario: traffic car position/speed invalid");
    }
}

int Scenario::lane_of(double y) const {
    return std::clamp(static_cast<int>(std::floor(y / lane_width)), 0, lanes - 1);
}

double Scenario::wrap_x(double x) const {
    double r = std::fmod(x, length);
    if (r < 0.0) r += length;
    return r >= length ? 0.0 : r;
}

double Scenario::offset(double from, double to) const {
    double d = std::fmod(to - from, length);
    if (d < -0.5 * length) d += length;
    if (d >= 0.5 * length) d -= length;
    return d;
}

Eigen::VectorXd FeatureVector::to_vector() const { return feature_row(*this).transpose(); }

FeatureVector FeatureVector::from_vector(const Eigen::VectorXd& x) {
    if (x.size() != kFeatureDim) throw InputError("feature vector must have 6 entries");
    return {x(0), x(1), x(2), x(3), x(4), x(5)};
}

double frontal_distance(const Scenario& sc, double t, double ego_x, int lane) {
    return view_lane(sc, t, ego_x, lane).ahead;
}

std::optional<FeatureVector> try_features(const CarState& s, double v, const Scenario& sc, double t) {
    if (!sc.on_track(s.y)) return std::nullopt;
    const int lane = sc.lane_of(s.y);
    FeatureVector f;
    f.dist_dev = s.y - sc.lane_center(lane);
    f.theta_dev = wrap_angle(s.theta);
    f.dist_l = frontal_distance(sc, t, s.x, lane + 1);
    f.dist_c = frontal_distance(sc, t, s.x, lane);
    f.dist_r = frontal_distance(sc, t, s.x, lane - 1);
    f.v = v;
    return f;
}

FeatureVector features(const CarState& s, double v, const Scenario& sc, double t) {
    auto f = try_features(s, v, sc, t);
    if (!f) throw OffTrackError("ego left the road (y = " + std::to_string(s.y) + ")");
    return *f;
}

bool overlap(const CarState& a, const CarState& b, double length, double width) {
    const Eigen::Vector2d ca(a.x, a.y), cb(b.x, b.y);
    const Eigen::Vector2d ua(std::cos(a.theta), std::sin(a.theta)), ub(std::cos(b.theta), std::sin(b.theta));
    const Eigen::Vector2d va(-ua.y(), ua.x()), vb(-ub.y(), ub.x());
    const double hl = 0.5 * length, hw = 0.5 * width;
    const Eigen::Vector2d d = cb - ca;
    for (const Eigen::Vector2d& axis : {ua, va, ub, vb}) {
        const double ra = hl * std::abs(ua.dot(axis)) + hw * std::abs(va.dot(axis));
        const double rb = hl * std::abs(ub.dot(axis)) + hw * std::abs(vb.dot(axis));
        if (std::abs(d.dot(axis)) > ra + rb) return false;
    }
    return true;
}

bool collides(const CarState& ego, const Scenario& sc, double t) {
    for (const auto& c : sc.cars) {
        // Place the traffic car at its ring image nearest to the ego.
        const double x = ego.x + sc.offset(ego.x, sc.car_x(c, t));
        if (overlap(ego, {x, sc.lane_center(c.lane), 0.0})) return true;
    }
    return false;
}

Action scripted_expert(Style style, const CarState& s, const Scenario& sc, double t) {
    const double v0 = nominal_speed(style);
    const int lane = sc.lane_of(s.y);
    const LaneView cur = view_lane(sc, t, s.x, lane);
    const LaneView left = view_lane(sc, t, s.x, lane + 1);
    const LaneView right = view_lane(sc, t, s.x, lane - 1);
    int target = lane;
    double v = v0;

    if (style == Style::Tailgate) {
        // Follow the nearest car ahead in this or a neighbouring lane.
        const LaneView* follow = cur.ahead < kDMax ? &cur : nullptr;
        for (const auto& [cand, l] : {std::pair{&left, lane + 1}, std::pair{&right, lane - 1}}) {
            const bool nearer = cand->ahead < (follow ? follow->ahead : kDMax);
            if (cand->exists && nearer && cand->ahead >= 12.0 && merge_clear(sc, t, s.x, l, 8.0, 12.0)) {
                follow = cand;
                target = l;
            }
        }
        if (follow) v = follow_speed(*follow, 10.0, v0);
    } else {
        const double trigger = style == Style::Speedy ? 45.0 : 30.0;
        if (cur.ahead < trigger) {
            for (const auto& [cand, l] : {std::pair{&left, lane + 1}, std::pair{&right, lane - 1}}) {
                if (target == lane && cand->exists && cand->ahead > cur.ahead &&
                    merge_clear(sc, t, s.x, l, 8.0, 15.0))
                    target = l;
            }
            if (target == lane && cur.ahead < 12.0) v = 0.6 * v0;
        }
    }
    return {v, steer_to(s, sc.lane_center(target))};
}

KernelReward::KernelReward(const reward::RewardModel& model) : eval_(model) {
    if (model.feature_dim() != kFeatureDim)
        throw InputError("reward model has " + std::to_string(model.feature_dim()) +
                         " features; the track needs 6");
}

Eigen::VectorXd KernelReward::evaluate(const Eigen::MatrixXd& features) const { return eval_(features); }

Eigen::VectorXd FunctionReward::evaluate(const Eigen::MatrixXd& features) const {
    Eigen::VectorXd out(features.rows());
    for (Eigen::Index i = 0; i < features.rows(); ++i)
        out(i) = fn_(FeatureVector::from_vector(features.row(i).transpose()));
    return out;
}

int RhcConfig::steps_per_segment() const { return std::max(1, static_cast<int>(std::lround(segment / dt))); }

std::array<Action, 9> RhcConfig::actions() const {
    std::array<Action, 9> a;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a[3 * i + j] = {v_factors[i] * v_nominal, w_values[j]};
    return a;
}

void RhcConfig::validate() const {
    if (depth < 1) throw InputError("rhc: horizon must be >= 1 segment");
    if (depth > 5) throw InputError("rhc: horizon above 5 segments is intractable");
    if (!(dt > 0.0) || !(segment >= dt)) throw InputError("rhc: need 0 < dt <= segment");
    if (!(v_nominal > 0.0)) throw InputError("rhc: nominal speed must be positive");
    for (double f : v_factors)
        if (!(f >= 0.0)) throw InputError("rhc: speed factors must be >= 0");
    for (double w : w_values)
        if (std::abs(w) > kWMax) throw InputError("rhc: |w| exceeds w_max");
}

RhcResult rhc_plan(const RewardFunction& reward, const CarState& s, const Scenario& sc, double t,
                   const RhcConfig& cfg) {
    cfg.validate();
    const auto acts = cfg.actions();
    const int k = cfg.steps_per_segment();

    // Expand the 9-ary tree level by level. Sibling sequences share prefixes,
    // so each segment is simulated and scored once.
    struct Node {
        int parent = -1;
        int action = 0;
        CarState end;
        bool valid = false;
        Eigen::Index row = 0;  // first feature row of this segment
    };
    std::vector<std::vector<Node>> levels(cfg.depth);
    std::vector<Eigen::RowVectorXd> rows;
    rows.reserve(static_cast<size_t>(k) * 9 * 820);

    for (int d = 0; d < cfg.depth; ++d) {
        const size_t parents = d == 0 ? 1 : levels[d - 1].size();
        levels[d].resize(parents * 9);
        for (size_t p = 0; p < parents; ++p) {
            const bool parent_ok = d == 0 || levels[d - 1][p].valid;
            const CarState start = d == 0 ? s : levels[d - 1][p].end;
            for (int a = 0; a < 9; ++a) {
                Node& n = levels[d][p * 9 + a];
                n.parent = static_cast<int>(p);
                n.action = a;
                if (!parent_ok) continue;
                n.row = static_cast<Eigen::Index>(rows.size());
                CarState st = start;
                bool ok = true;
                for (int i = 0; i < k && ok; ++i) {
                    const double ti = t + (d * k + i) * cfg.dt;
                    const auto f = try_features(st, acts[a].v, sc, ti);
                    if (!f) {
                        ok = false;
                        break;
                    }
                    if (cfg.avoid_collisions && collides(st, sc, ti)) {
                        ok = false;
                        break;
                    }
                    rows.push_back(feature_row(*f));
                    st = step(st, acts[a], cfg.dt);
                }
                ok = ok && sc.on_track(st.y) &&
                     !(cfg.avoid_collisions && collides(st, sc, t + (d + 1) * k * cfg.dt));
                if (!ok) {
                    rows.resize(static_cast<size_t>(n.row));
                    continue;
                }
                n.valid = true;
                n.end = st;
            }
        }
    }

    Eigen::VectorXd r;
    if (!rows.empty()) {
        Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), kFeatureDim);
        for (size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i];
        r = reward.evaluate(m);
    }

    // Accumulate segment sums down the tree.
    std::vector<std::vector<double>> score(cfg.depth);
    for (int d = 0; d < cfg.depth; ++d) {
        score[d].assign(levels[d].size(), -INFINITY);
        for (size_t i = 0; i < levels[d].size(); ++i) {
            const Node& n = levels[d][i];
            if (!n.valid) continue;
            const double seg = r.segment(n.row, k).sum();
            score[d][i] = seg + (d == 0 ? 0.0 : score[d - 1][static_cast<size_t>(n.parent)]);
        }
    }

    const auto& leaves = score[cfg.depth - 1];
    const size_t per_first = leaves.size() / 9;
    RhcResult res;
    double best_w = INFINITY;
    for (size_t i = 0; i < leaves.size(); ++i) {
        if (!std::isfinite(leaves[i])) continue;
        const double w = std::abs(acts[i / per_first].w);
        if (res.sequence < 0 || leaves[i] > res.score || (leaves[i] == res.score && w < best_w)) {
            res.score = leaves[i];
            res.sequence = static_cast<int>(i);
            best_w = w;
        }
    }
    if (res.sequence < 0) {
        res.distress = true;
        res.action = {*std::min_element(cfg.v_factors.begin(), cfg.v_factors.end()) * cfg.v_nominal, 0.0};
        res.score = -INFINITY;
        return res;
    }
    for (double v : leaves)
        if (v > res.score) throw std::logic_error("rhc: returned sequence is not the argmax");
    res.action = acts[static_cast<size_t>(res.sequence) / per_first];
    return res;
}

Controller expert_controller(Style style) {
    return [style](const CarState& s, const Scenario& sc, double t, bool& distress) {
        distress = false;
        return scripted_expert(style, s, sc, t);
    };
}

Controller rhc_controller(std::shared_ptr<const RewardFunction> reward, RhcConfig cfg) {
    cfg.validate();
    if (!reward) throw InputError("rhc: missing reward");
    return [reward = std::move(reward), cfg](const CarState& s, const Scenario& sc, double t, bool& distress) {
        const auto res = rhc_plan(*reward, s, sc, t, cfg);
        distress = res.distress;
        return res.action;
    };
}

CarState start_state(const Scenario& sc, int start_lane) {
    if (start_lane < 0 || start_lane >= sc.lanes) throw InputError("start lane out of range");
    return {0.0, sc.lane_center(start_lane), 0.0};
}

EpisodeStats summarize(const std::vector<StepRecord>& steps, double dt) {
    EpisodeStats st;
    if (steps.empty()) return st;
    for (size_t i = 0; i < steps.size(); ++i) {
        const auto& r = steps[i];
        st.mean_abs_dev += std::abs(r.features.dist_dev);
        st.mean_abs_theta_dev += std::abs(r.features.theta_dev);
        st.mean_v += r.action.v;
        if (i > 0 && r.lane != steps[i - 1].lane) ++st.lane_changes;
    }
    const double n = static_cast<double>(steps.size());
    st.mean_abs_dev /= n;
    st.mean_abs_theta_dev /= n;
    st.mean_v /= n;
    st.duration = n * dt;
    return st;
}

Episode run_episode(const Controller& controller, const Scenario& sc, const CarState& start, double duration,
                    int index, double dt) {
    if (!(duration > 0.0)) throw InputError("episode duration must be positive");
    if (!(dt > 0.0)) throw InputError("time step must be positive");
    sc.validate();
    Episode ep;
    ep.index = index;
    const int n = static_cast<int>(std::lround(duration / dt));
    CarState s = start;
    bool collided = false, off = false;
    int distress_steps = 0;
    for (int k = 0; k < n; ++k) {
        const double t = k * dt;
        if (!sc.on_track(s.y)) {
            off = true;
            break;
        }
        bool distress = false;
        Action a = controller(s, sc, t, distress);
        a.v = std::max(a.v, 0.0);
        a.w = clamp_w(a.w);
        if (distress) ++distress_steps;
        StepRecord rec;
        rec.t = k;
        rec.state = s;
        rec.action = a;
        rec.features = features(s, a.v, sc, t);
        rec.lane = sc.lane_of(s.y);
        ep.steps.push_back(rec);
        if (collides(s, sc, t)) {
            collided = true;
            break;
        }
        s = step(s, a, dt);
    }
    ep.stats = summarize(ep.steps, dt);
    ep.stats.collision = collided;
    ep.stats.off_track = off;
    ep.stats.distress_steps = distress_steps;
    return ep;
}

DemoSet to_demo_set(const std::vector<Episode>& episodes) {
    DemoSet d;
    for (const auto& ep : episodes) {
        if (ep.steps.empty()) continue;
        Eigen::MatrixXd m(static_cast<Eigen::Index>(ep.steps.size()), kFeatureDim);
        for (size_t i = 0; i < ep.steps.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = feature_row(ep.steps[i].features);
        d.episodes.push_back(std::move(m));
    }
    return d;
}

Scenario random_scenario(Style style, int lanes, int cars, double length, std::uint64_t seed) {
    Scenario sc;
    sc.lanes = lanes;
    sc.length = length;
    sc.style = style;
    sc.seed = seed;
    sc.validate();
    if (cars < 0) throw InputError("scenario: negative car count");
    constexpr double spacing = 40.0, keep_out = 30.0;
    if (cars * spacing > length - 2.0 * keep_out) throw InputError("scenario: too many cars for the track length");
    const double speed = kTrafficSpeed;
    Rng rng(seed);
    for (int attempt = 0; static_cast<int>(sc.cars.size()) < cars; ++attempt) {
        if (attempt > 10000) throw InputError("scenario: could not place traffic");
        const double s0 = rng.uniform(keep_out, length - keep_out);
        const int lane = static_cast<int>(rng.below(static_cast<std::uint64_t>(lanes)));
        bool ok = true;
        for (const auto& c : sc.cars) ok = ok && std::abs(sc.offset(c.s0, s0)) >= spacing;
        if (ok) sc.cars.push_back({lane, s0, speed});
    }
    return sc;
}

std::vector<Scenario> trained_scenarios(Style style, std::uint64_t seed) {
    std::vector<Scenario> out;
    for (int i = 0; i < 10; ++i) out.push_back(random_scenario(style, 3, 1 + i % 5, 400.0, stream_seed(seed, "traffic", i)));
    return out;
}

Scenario transferred_scenario(Style style, std::uint64_t seed) {
    Rng rng(stream_seed(seed, "traffic-count", 0));
    const int cars = 5 + static_cast<int>(rng.below(6));
    return random_scenario(style, 5, cars, 800.0, stream_seed(seed, "traffic", 0));
}

std::vector<Episode> run_scenarios(const Controller& controller, const std::vector<Scenario>& scenarios,
                                   double duration) {
    std::vector<Episode> out;
    int index = 0;
    for (const auto& sc : scenarios)
        for (int lane = 0; lane < sc.lanes; ++lane)
            out.push_back(run_episode(controller, sc, start_state(sc, lane), duration, index++));
    return out;
}

int HistogramAxis::bin(double v) const {
    const double u = (v - low) / (high - low) * bins;
    if (!(u >= 0.0)) return 0;
    return std::min(static_cast<int>(u), bins - 1);
}

std::vector<PairSpec> trained_pairs(const Scenario& geometry) {
    // Bin widths chosen so zero (and each lane centre) is a bin centre.
    const double lw = geometry.lane_width / 5.0;
    const HistogramAxis x{0.0, geometry.length};
    const HistogramAxis y{0.0, 16.0 * lw};
    const HistogramAxis dist{0.0, kDMax};
    const HistogramAxis w{-7.5 * 0.125, 8.5 * 0.125};
    const HistogramAxis dev{-7.5 * 0.25, 8.5 * 0.25};
    const HistogramAxis theta{-7.5 * 0.05, 8.5 * 0.05};
    return {
        {"X-Y", 0, 1, x, y},
        {"distC-w", 5, 8, dist, w},
        {"distC-dev", 5, 2, dist, dev},
        {"distC-theta", 5, 3, dist, theta},
        {"distR-w", 6, 8, dist, w},
        {"distL-w", 4, 8, dist, w},
    };
}

namespace {

double column(const StepRecord& r, int id, const Scenario& geometry) {
    switch (id) {
        case 0: return geometry.wrap_x(r.state.x);
        case 1: return r.state.y;
        case 2: return r.features.dist_dev;
        case 3: return r.features.theta_dev;
        case 4: return r.features.dist_l;
        case 5: return r.features.dist_c;
        case 6: return r.features.dist_r;
        case 7: return r.features.v;
        case 8: return r.action.w;
    }
    throw InputError("unknown histogram column");
}

Eigen::VectorXd histogram(const std::vector<Episode>& eps, const PairSpec& pair, const Scenario& geometry) {
    const int nb = pair.b.bins;
    Eigen::VectorXd h = Eigen::VectorXd::Zero(pair.a.bins * nb);
    for (const auto& ep : eps)
        for (const auto& r : ep.steps)
            h(pair.a.bin(column(r, pair.first, geometry)) * nb + pair.b.bin(column(r, pair.second, geometry))) += 1.0;
    const double total = h.sum();
    if (total <= 0.0) throw InputError("histogram of an empty episode set");
    return h / total;
}

}  // namespace

double histogram_distance(const std::vector<Episode>& ref, const std::vector<Episode>& runs, const PairSpec& pair,
                          const Scenario& geometry) {
    return 0.5 * (histogram(ref, pair, geometry) - histogram(runs, pair, geometry)).lpNorm<1>();
}

TrainedMetrics eval_trained(const std::vector<Episode>& ref, const std::vector<Episode>& runs,
                            const Scenario& geometry) {
    if (ref.empty() || runs.empty()) throw InputError("eval_trained: empty episode set");
    TrainedMetrics m;
    for (const auto& p : trained_pairs(geometry)) {
        m.names.push_back(p.name);
        m.distances.push_back(histogram_distance(ref, runs, p, geometry));
    }
    for (double d : m.distances) m.mean_distance += d;
    m.mean_distance /= static_cast<double>(m.distances.size());
    m.episodes = static_cast<int>(runs.size());
    int collisions = 0;
    for (const auto& ep : runs) collisions += ep.stats.collision ? 1 : 0;
    m.collision_ratio = static_cast<double>(collisions) / m.episodes;
    return m;
}

TransferredMetrics eval_transferred(const std::vector<Episode>& runs) {
    if (runs.empty()) throw InputError("eval_transferred: no episodes");
    TransferredMetrics m;
    m.episodes = static_cast<int>(runs.size());
    for (const auto& ep : runs) {
        m.avg_collisions += ep.stats.collision ? 1.0 : 0.0;
        m.collision_free += ep.stats.collision ? 0 : 1;
        m.avg_abs_dev += ep.stats.mean_abs_dev;
        m.avg_abs_theta_dev += ep.stats.mean_abs_theta_dev;
        m.avg_v += ep.stats.mean_v;
        m.avg_lane_changes += ep.stats.lane_changes;
    }
    const double n = m.episodes;
    m.avg_collisions /= n;
    m.avg_abs_dev /= n;
    m.avg_abs_theta_dev /= n;
    m.avg_v /= n;
    m.avg_lane_changes /= n;
    return m;
}

}  // namespace dmrl::track
