#pragma once

#include "dmrl/track.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace dmrl::track {

/// {lanes, lane_width, length, cars[{lane, s0, speed}], style, seed}
nlohmann::json to_json(const Scenario& sc);
Scenario scenario_from_json(const nlohmann::json& doc);
Scenario load_scenario(const std::filesystem::path& path);

/// One JSON object per line. An optional first line {"header": {...}} carries
/// the producing config; every other line is a record
/// {episode, t, x, y, theta, v, w, features[6], collided}.
///
/// Feature vectors may have any length as long as it is the same on every
/// line; track episodes are only reconstructed for 6-feature files.
struct TrajectoryFile {
    nlohmann::json header = nlohmann::json::object();
    DemoSet demos;                  // features per episode, rows in file order
    std::vector<Episode> episodes;  // empty unless the features are the track's six
};

nlohmann::json record_json(int episode, const StepRecord& r, bool collided);
/// Record for a non-track feature map (theta, v and w are written as 0).
nlohmann::json feature_record(int episode, int t, double x, double y, const Eigen::VectorXd& features);
void write_trajectories(std::ostream& out, const std::vector<Episode>& episodes, const nlohmann::json& header);
void save_trajectories(const std::filesystem::path& path, const std::vector<Episode>& episodes,
                       const nlohmann::json& header);

/// Throws InputError naming the 1-based line of the first malformed record,
/// or when the input holds no records. Records are grouped by episode id in
/// order of first appearance.
TrajectoryFile read_trajectories(std::istream& in, double lane_width = kLaneWidth);
TrajectoryFile load_trajectories(const std::filesystem::path& path, double lane_width = kLaneWidth);

}  // namespace dmrl::track
