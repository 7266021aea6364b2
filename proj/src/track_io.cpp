#include "dmrl/track_io.hpp"

#include <cmath>
#include <fstream>
#include <map>

namespace dmrl::track {

nlohmann::json to_json(const Scenario& sc) {
    auto cars = nlohmann::json::array();
    for (const auto& c : sc.cars) cars.push_back({{"lane", c.lane}, {"s0", c.s0}, {"speed", c.speed}});
    return {{"lanes", sc.lanes},       {"lane_width", sc.lane_width}, {"length", sc.length},
            {"cars", std::move(cars)}, {"style", to_string(sc.style)}, {"seed", sc.seed}};
}

Scenario scenario_from_json(const nlohmann::json& doc) {
    try {
        Scenario sc;
        sc.lanes = doc.at("lanes").get<int>();
        sc.lane_width = doc.value("lane_width", kLaneWidth);
        sc.length = doc.at("length").get<double>();
        for (const auto& c : doc.at("cars"))
            sc.cars.push_back({c.at("lane").get<int>(), c.at("s0").get<double>(), c.value("speed", kTrafficSpeed)});
        sc.style = parse_style(doc.value("style", std::string("safe")));
        sc.seed = doc.value("seed", std::uint64_t{0});
        sc.validate();
        return sc;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed scenario: ") + e.what());
    }
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read scenario file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("scenario file " + path.string() + " is not valid JSON: " + e.what());
    }
    return scenario_from_json(doc);
}

nlohmann::json record_json(int episode, const StepRecord& r, bool collided) {
    const auto& f = r.features;
    return {{"episode", episode},
            {"t", r.t},
            {"x", r.state.x},
            {"y", r.state.y},
            {"theta", r.state.theta},
            {"v", r.action.v},
            {"w", r.action.w},
            {"features", {f.dist_dev, f.theta_dev, f.dist_l, f.dist_c, f.dist_r, f.v}},
            {"collided", collided}};
}

nlohmann::json feature_record(int episode, int t, double x, double y, const Eigen::VectorXd& features) {
    std::vector<double> f(features.data(), features.data() + features.size());
    return {{"episode", episode}, {"t", t},     {"x", x},         {"y", y},          {"theta", 0.0},
            {"v", 0.0},           {"w", 0.0},   {"features", f},  {"collided", false}};
}

void write_trajectories(std::ostream& out, const std::vector<Episode>& episodes, const nlohmann::json& header) {
    out << nlohmann::json{{"header", header}}.dump() << '\n';
    for (const auto& ep : episodes)
        for (size_t i = 0; i < ep.steps.size(); ++i) {
            // The collision flag marks the final record of a colliding episode.
            const bool hit = ep.stats.collision && i + 1 == ep.steps.size();
            out << record_json(ep.index, ep.steps[i], hit).dump() << '\n';
        }
}

void save_trajectories(const std::filesystem::path& path, const std::vector<Episode>& episodes,
                       const nlohmann::json& header) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    write_trajectories(out, episodes, header);
}

TrajectoryFile read_trajectories(std::istream& in, double lane_width) {
    TrajectoryFile file;
    std::map<int, size_t> slot;
    std::vector<std::vector<Eigen::VectorXd>> rows;
    std::vector<std::vector<StepRecord>> steps;
    std::vector<bool> hits;
    std::vector<int> ids;
    Eigen::Index dim = -1;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            if (!j.is_object()) throw InputError("expected a JSON object");
            if (j.contains("header")) {
                file.header = j.at("header");
                continue;
            }
            StepRecord r;
            const int ep = j.at("episode").get<int>();
            r.t = j.at("t").get<int>();
            r.state = {j.at("x").get<double>(), j.at("y").get<double>(), j.at("theta").get<double>()};
            r.action = {j.at("v").get<double>(), j.at("w").get<double>()};
            const auto& f = j.at("features");
            if (!f.is_array() || f.empty()) throw InputError("features must be a nonempty array");
            if (dim < 0) dim = static_cast<Eigen::Index>(f.size());
            if (static_cast<Eigen::Index>(f.size()) != dim)
                throw InputError("expected " + std::to_string(dim) + " features, got " + std::to_string(f.size()));
            Eigen::VectorXd x(dim);
            for (Eigen::Index k = 0; k < dim; ++k) x(k) = f[static_cast<size_t>(k)].get<double>();
            if (!x.allFinite() || !std::isfinite(r.state.x) || !std::isfinite(r.state.y))
                throw InputError("non-finite value");
            if (dim == kFeatureDim) r.features = FeatureVector::from_vector(x);
            r.lane = static_cast<int>(std::floor(r.state.y / lane_width));
            auto [it, fresh] = slot.try_emplace(ep, rows.size());
            if (fresh) {
                rows.emplace_back();
                steps.emplace_back();
                hits.push_back(false);
                ids.push_back(ep);
            }
            rows[it->second].push_back(std::move(x));
            steps[it->second].push_back(r);
            if (j.value("collided", false)) hits[it->second] = true;
        } catch (const std::exception& e) {
            throw InputError("line " + std::to_string(lineno) + ": malformed trajectory record (" + e.what() + ")");
        }
    }
    if (rows.empty()) throw InputError("trajectory input holds no records");
    for (size_t e = 0; e < rows.size(); ++e) {
        Eigen::MatrixXd m(static_cast<Eigen::Index>(rows[e].size()), dim);
        for (size_t i = 0; i < rows[e].size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[e][i].transpose();
        file.demos.episodes.push_back(std::move(m));
        if (dim != kFeatureDim) continue;
        Episode ep;
        ep.index = ids[e];
        ep.steps = std::move(steps[e]);
        ep.stats = summarize(ep.steps);
        ep.stats.collision = hits[e];
        file.episodes.push_back(std::move(ep));
    }
    return file;
}

TrajectoryFile load_trajectories(const std::filesystem::path& path, double lane_width) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read trajectory file " + path.string());
    return read_trajectories(in, lane_width);
}

}  // namespace dmrl::track
