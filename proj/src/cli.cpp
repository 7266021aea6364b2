#include "dmrl/cli.hpp"

#include "dmrl/gridworld.hpp"
#include "dmrl/model_io.hpp"
#include "dmrl/serve.hpp"
#include "dmrl/track_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

namespace dmrl::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

/// Thrown inside a command to leave with a specific exit code.
struct Fail {
    int code;
    std::string message;
};

std::optional<std::uint64_t> env_seed() {
    const char* s = std::getenv("DMRL_SEED");
    if (!s || !*s) return std::nullopt;
    try {
        size_t pos = 0;
        const auto v = std::stoull(s, &pos, 0);
        if (s[pos] != '\0') throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw Fail{kBadConfig, std::string("DMRL_SEED is not an unsigned integer: '") + s + "'"};
    }
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) throw Fail{kBadConfig, "cannot write " + path.string()};
    return f;
}

// ---------------------------------------------------------------------------
// grid
// ---------------------------------------------------------------------------

struct GridArgs {
    grid::GridConfig cfg;
    std::string mode;
    std::string out;
    bool no_timing = false;
};

void add_grid(CLI::App& app, GridArgs& a) {
    auto* c = app.add_subcommand("grid", "gridworld EVD experiment; writes one CSV row per run");
    c->add_option("--size", a.cfg.size, "grid side length")->capture_default_str();
    c->add_option("--mode", a.mode, "feature setting: linear or nonlinear")->required();
    c->add_option("--n-traj", a.cfg.n_traj, "trajectory counts (repeatable)")->capture_default_str();
    c->add_option("--maps", a.cfg.maps, "reward maps")->capture_default_str();
    c->add_option("--demo-sets", a.cfg.demo_sets, "demonstration sets per map")->capture_default_str();
    c->add_option("--peaks", a.cfg.peaks, "reward peaks per map")->capture_default_str();
    c->add_option("--traj-len", a.cfg.traj_len, "steps per trajectory (0: size/2)")->capture_default_str();
    c->add_option("--gamma", a.cfg.gamma)->capture_default_str();
    c->add_option("--lambda", a.cfg.lambda)->capture_default_str();
    c->add_option("--beta", a.cfg.beta)->capture_default_str();
    c->add_option("--delta", a.cfg.delta, "leverage decay")->capture_default_str();
    c->add_option("--median-scale", a.cfg.median_scale, "lengthscale as a fraction of the median distance")
        ->capture_default_str();
    c->add_option("--n-random", a.cfg.n_random, "uniform inducing points added to the demo points")
        ->capture_default_str();
    c->add_option("--feature-bandwidth", a.cfg.feature_bandwidth, "nonlinear feature width (0: lattice spacing)")
        ->capture_default_str();
    c->add_option("--seed", a.cfg.seed)->capture_default_str();
    c->add_option("--threads", a.cfg.threads)->capture_default_str();
    c->add_option("--out", a.out, "CSV path (default: stdout)");
    c->add_flag("--no-timing", a.no_timing, "write fit_ms as 0 so reruns are byte-identical");
}

json grid_config_json(const grid::GridConfig& c) {
    return {{"command", "grid"},       {"size", c.size},
            {"mode", grid::to_string(c.mode)}, {"n_traj", c.n_traj},
            {"maps", c.maps},          {"demo_sets", c.demo_sets},
            {"peaks", c.peaks},        {"traj_len", c.trajectory_length()},
            {"gamma", c.gamma},        {"lambda", c.lambda},
            {"beta", c.beta},          {"delta", c.delta},
            {"median_scale", c.median_scale}, {"n_random", c.n_random},
            {"feature_bandwidth", c.feature_bandwidth}, {"seed", c.seed}};
}

int cmd_grid(GridArgs& a, std::ostream& out) {
    try {
        a.cfg.mode = grid::parse_mode(a.mode);
        a.cfg.validate();
    } catch (const InputError& e) {
        throw Fail{kBadConfig, e.what()};
    }
    const auto rows = grid::run_grid_experiment(a.cfg);
    auto emit = [&](std::ostream& o) {
        o << "# config: " << grid_config_json(a.cfg).dump() << '\n';
        grid::write_csv(o, rows, !a.no_timing);
    };
    if (a.out.empty()) {
        emit(out);
    } else {
        auto f = open_out(a.out);
        emit(f);
        out << "wrote " << rows.size() << " rows to " << a.out << '\n';
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// grid-demos
// ---------------------------------------------------------------------------

struct GridDemoArgs {
    int size = 32;
    std::string mode = "nonlinear";
    int n_traj = 200;
    int traj_len = 0;
    int peaks = 8;
    std::uint64_t seed = 1;
    std::string out;
};

void add_grid_demos(CLI::App& app, GridDemoArgs& a) {
    auto* c = app.add_subcommand("grid-demos", "expert gridworld demonstrations as a trajectory file");
    c->add_option("--size", a.size)->capture_default_str();
    c->add_option("--mode", a.mode)->capture_default_str();
    c->add_option("--n-traj", a.n_traj)->capture_default_str();
    c->add_option("--traj-len", a.traj_len, "0: size/2")->capture_default_str();
    c->add_option("--peaks", a.peaks)->capture_default_str();
    c->add_option("--seed", a.seed)->capture_default_str();
    c->add_option("--out", a.out)->required();
}

int cmd_grid_demos(const GridDemoArgs& a, std::ostream& out) {
    grid::FeatureMode mode{};
    try {
        mode = grid::parse_mode(a.mode);
    } catch (const InputError& e) {
        throw Fail{kBadConfig, e.what()};
    }
    if (a.size < 2 || a.n_traj < 1 || a.peaks < 1 || a.traj_len < 0)
        throw Fail{kBadConfig, "grid-demos: size >= 2, n-traj >= 1, peaks >= 1, traj-len >= 0 required"};
    const int len = a.traj_len > 0 ? a.traj_len : a.size / 2;
    const auto map_seed = stream_seed(a.seed, "map-gen", 0);
    const auto truth = grid::gen_reward(a.size, a.size, a.peaks, map_seed);
    const grid::GridMdp mdp(a.size, a.size, truth.field(a.size, a.size));
    const auto expert = grid::value_iteration(mdp);
    const auto phi = mode == grid::FeatureMode::Linear ? grid::FeatureMap::linear(truth)
                                                       : grid::FeatureMap::nonlinear(a.size, a.size);
    const auto trajs = grid::sample_demos(mdp, expert.policy, a.n_traj, len, stream_seed(map_seed, "demo", 0));

    auto f = open_out(a.out);
    const json header = {{"command", "grid-demos"}, {"size", a.size}, {"mode", a.mode}, {"n_traj", a.n_traj},
                         {"traj_len", len},         {"peaks", a.peaks}, {"seed", a.seed}};
    f << json{{"header", header}}.dump() << '\n';
    for (size_t e = 0; e < trajs.size(); ++e)
        for (size_t t = 0; t < trajs[e].size(); ++t) {
            const auto c = mdp.cell(trajs[e][t].state);
            f << track::feature_record(static_cast<int>(e), static_cast<int>(t), c.x, c.y, phi(c)).dump() << '\n';
        }
    out << "wrote " << trajs.size() << " trajectories to " << a.out << '\n';
    return kOk;
}

// ---------------------------------------------------------------------------
// demos
// ---------------------------------------------------------------------------

struct DemoArgs {
    std::string style;
    std::uint64_t seed = 7;
    double duration = 60.0;
    std::string out;
    std::string scenarios_out;
};

void add_demos(CLI::App& app, DemoArgs& a) {
    auto* c = app.add_subcommand("demos", "scripted-expert track demonstrations on the ten trained settings");
    c->add_option("--style", a.style, "safe, speedy or tailgate")->required();
    c->add_option("--seed", a.seed)->capture_default_str();
    c->add_option("--duration", a.duration, "seconds per episode")->capture_default_str();
    c->add_option("--out", a.out, "trajectory file")->required();
    c->add_option("--scenarios-out", a.scenarios_out, "write the scenario list (JSON array)");
}

int cmd_demos(const DemoArgs& a, std::ostream& out) {
    track::Style style{};
    try {
        style = track::parse_style(a.style);
    } catch (const InputError& e) {
        throw Fail{kBadConfig, e.what()};
    }
    if (!(a.duration > 0.0)) throw Fail{kBadConfig, "duration must be positive"};
    const auto scenarios = track::trained_scenarios(style, a.seed);
    const auto eps = track::run_scenarios(track::expert_controller(style), scenarios, a.duration);
    json scen = json::array();
    for (const auto& s : scenarios) scen.push_back(track::to_json(s));
    const json header = {{"command", "demos"}, {"style", a.style},   {"seed", a.seed},
                         {"duration", a.duration}, {"dt", track::kDt}, {"scenarios", scen}};
    auto f = open_out(a.out);
    track::write_trajectories(f, eps, header);
    if (!a.scenarios_out.empty()) {
        auto s = open_out(a.scenarios_out);
        s << scen.dump(1) << '\n';
    }
    int collisions = 0;
    for (const auto& e : eps) collisions += e.stats.collision ? 1 : 0;
    out << "wrote " << eps.size() << " " << a.style << " episodes (" << collisions << " collisions) to " << a.out
        << '\n';
    return kOk;
}

// ---------------------------------------------------------------------------
// learn
// ---------------------------------------------------------------------------

struct LearnArgs {
    std::string demos;
    std::string out;
    reward::KdmrlParams params;
    std::optional<double> lengthscale;
    std::size_t n_random = 0;
    std::size_t max_demo = 500;
    bool no_standardize = false;
    std::uint64_t seed = 1;
    std::string preset = "generic";
    CLI::App* cmd = nullptr;
};

// Settings tuned for the six track features: no leverage decay (episodes are
// hundreds of steps long), a narrow kernel and a capped inducing set.
constexpr double kTrackDelta = 1.0;
constexpr double kTrackMedianScale = 0.15;
constexpr std::size_t kTrackMaxDemo = 400;

void add_learn(CLI::App& app, LearnArgs& a) {
    auto* c = app.add_subcommand("learn", "fit a KDMRL reward to a trajectory file");
    c->add_option("--demos", a.demos, "trajectory file (JSON lines)")->required();
    c->add_option("--out", a.out, "model JSON path")->required();
    c->add_option("--lambda", a.params.lambda)->capture_default_str();
    c->add_option("--beta", a.params.beta)->capture_default_str();
    c->add_option("--delta", a.params.delta, "leverage decay (1 disables)")->capture_default_str();
    c->add_option("--lengthscale", a.lengthscale, "kernel lengthscale in standardized units (default: median trick)");
    c->add_option("--median-scale", a.params.median_scale, "multiplier on the median-trick lengthscale")
        ->capture_default_str();
    c->add_option("--n-random", a.n_random, "uniform inducing points added to the demo points")
        ->capture_default_str();
    c->add_option("--max-demo-inducing", a.max_demo, "cap on demo inducing points (0: all)")->capture_default_str();
    c->add_flag("--no-standardize", a.no_standardize, "fit in raw feature units");
    c->add_option("--seed", a.seed)->capture_default_str();
    c->add_option("--preset", a.preset,
                  "track: delta 1, median scale 0.15, 400 demo inducing points (explicit flags still win)")
        ->check(CLI::IsMember({"generic", "track"}))
        ->capture_default_str();
    a.cmd = c;
}

int cmd_learn(LearnArgs& a, std::ostream& out) {
    if (a.preset == "track") {
        if (!a.cmd->count("--delta")) a.params.delta = kTrackDelta;
        if (!a.cmd->count("--median-scale")) a.params.median_scale = kTrackMedianScale;
        if (!a.cmd->count("--max-demo-inducing")) a.max_demo = kTrackMaxDemo;
    }
    a.params.lengthscale = a.lengthscale;
    a.params.standardize = !a.no_standardize;
    a.params.seed = stream_seed(a.seed, "median");
    try {
        a.params.validate();
    } catch (const InputError& e) {
        throw Fail{kBadConfig, e.what()};
    }
    track::TrajectoryFile file;
    try {
        file = track::load_trajectories(a.demos);
    } catch (const InputError& e) {
        throw Fail{kBadInput, a.demos + ": " + e.what()};
    }
    const auto& demos = file.demos;
    const auto inducing = reward::build_inducing(demos, a.n_random, reward::Bounds::of_demos(demos),
                                                 stream_seed(a.seed, "inducing"), reward::kDedupTolerance, a.max_demo);
    const auto model = reward::fit_kdmrl(demos, inducing, a.params);

    json doc = reward::to_json(model);
    doc["config"] = {{"command", "learn"},
                     {"demos", a.demos},
                     {"demo_header", file.header},
                     {"episodes", demos.episodes.size()},
                     {"samples", demos.total_samples()},
                     {"lambda", a.params.lambda},
                     {"beta", a.params.beta},
                     {"delta", a.params.delta},
                     {"lengthscale", a.lengthscale ? json(*a.lengthscale) : json(nullptr)},
                     {"median_scale", a.params.median_scale},
                     {"n_random", a.n_random},
                     {"max_demo_inducing", a.max_demo},
                     {"standardize", a.params.standardize},
                     {"preset", a.preset},
                     {"seed", a.seed}};
    reward::save_json(a.out, doc);
    out << "model: " << model.inducing.rows() << " inducing points, " << model.feature_dim()
        << " features, lengthscale " << model.kernel.lengthscale << " -> " << a.out << '\n';
    return kOk;
}

// ---------------------------------------------------------------------------
// drive
// ---------------------------------------------------------------------------

struct DriveArgs {
    std::string model;
    std::string scenario;
    std::string reference;
    std::string out_dir = "drive-out";
    int episodes = 0;
    double duration = 60.0;
    int horizon = 3;
    double segment = 0.6;
    std::optional<double> v_nominal;
    bool no_avoid = false;
};

void add_drive(CLI::App& app, DriveArgs& a) {
    auto* c = app.add_subcommand("drive", "run the receding-horizon controller under a learned reward");
    c->add_option("--model", a.model, "model JSON")->required();
    c->add_option("--scenario", a.scenario, "scenario JSON (object or array)")->required();
    c->add_option("--reference", a.reference, "demonstration file for the six histogram distances");
    c->add_option("--out-dir", a.out_dir)->capture_default_str();
    c->add_option("--episodes", a.episodes, "episodes (default: every scenario from every lane)");
    c->add_option("--duration", a.duration, "seconds per episode")->capture_default_str();
    c->add_option("--horizon", a.horizon, "planning depth in segments")->capture_default_str();
    c->add_option("--segment", a.segment, "seconds per constant-action segment")->capture_default_str();
    c->add_option("--v-nominal", a.v_nominal, "nominal speed of the action grid (default: style speed)");
    c->add_flag("--no-avoid-collisions", a.no_avoid, "keep plans that hit predicted traffic (reward only)");
}

std::vector<track::Scenario> load_scenarios(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Fail{kBadInput, "cannot read scenario file " + path};
    json doc;
    try {
        in >> doc;
        std::vector<track::Scenario> out;
        if (doc.is_array()) {
            for (const auto& s : doc) out.push_back(track::scenario_from_json(s));
        } else {
            out.push_back(track::scenario_from_json(doc));
        }
        if (out.empty()) throw InputError("no scenarios");
        return out;
    } catch (const std::exception& e) {
        throw Fail{kBadInput, path + ": " + e.what()};
    }
}

int cmd_drive(const DriveArgs& a, std::ostream& out) {
    if (!(a.duration > 0.0)) throw Fail{kBadConfig, "duration must be positive"};
    if (a.episodes < 0) throw Fail{kBadConfig, "episodes must be non-negative"};
    reward::RewardModel model;
    try {
        model = reward::load_model(a.model);
    } catch (const InputError& e) {
        throw Fail{kBadInput, e.what()};
    }
    if (model.feature_dim() != track::kFeatureDim)
        throw Fail{kDimMismatch, "model has " + std::to_string(model.feature_dim()) +
                                     " features but track scenarios produce 6"};
    const auto scenarios = load_scenarios(a.scenario);

    track::RhcConfig rhc;
    rhc.depth = a.horizon;
    rhc.segment = a.segment;
    rhc.v_nominal = a.v_nominal.value_or(track::nominal_speed(scenarios.front().style));
    rhc.avoid_collisions = !a.no_avoid;
    try {
        rhc.validate();
    } catch (const InputError& e) {
        throw Fail{kBadConfig, e.what()};
    }
    const auto controller = track::rhc_controller(std::make_shared<track::KernelReward>(model), rhc);

    // Episode i runs scenario (i / lanes) mod count from start lane i mod lanes.
    const int lanes = scenarios.front().lanes;
    const int n = a.episodes > 0 ? a.episodes : static_cast<int>(scenarios.size()) * lanes;
    std::vector<track::Episode> eps;
    for (int i = 0; i < n; ++i) {
        const auto& sc = scenarios[static_cast<size_t>(i / lanes) % scenarios.size()];
        eps.push_back(track::run_episode(controller, sc, track::start_state(sc, i % sc.lanes), a.duration, i));
    }

    json scen = json::array();
    for (const auto& s : scenarios) scen.push_back(track::to_json(s));
    const json config = {{"command", "drive"},   {"model", a.model},       {"scenario", a.scenario},
                         {"reference", a.reference}, {"episodes", n},      {"duration", a.duration},
                         {"horizon", a.horizon}, {"segment", a.segment},   {"v_nominal", rhc.v_nominal},
                         {"avoid_collisions", rhc.avoid_collisions}, {"dt", track::kDt}, {"scenarios", scen}};
    const fs::path dir(a.out_dir);
    track::save_trajectories(dir / "trajectories.jsonl", eps, config);

    auto csv = open_out(dir / "metrics.csv");
    csv << std::setprecision(10);
    csv << "# config: " << config.dump() << '\n' << "metric,value\n";
    if (!a.reference.empty()) {
        track::TrajectoryFile ref;
        try {
            ref = track::load_trajectories(a.reference);
        } catch (const InputError& e) {
            throw Fail{kBadInput, a.reference + ": " + e.what()};
        }
        if (ref.episodes.empty()) throw Fail{kDimMismatch, a.reference + " does not hold track features"};
        const auto m = track::eval_trained(ref.episodes, eps, scenarios.front());
        for (size_t i = 0; i < m.names.size(); ++i) csv << "dvar_" << m.names[i] << ',' << m.distances[i] << '\n';
        csv << "mean_distance," << m.mean_distance << '\n';
        out << "mean six-distance " << m.mean_distance << '\n';
    }
    const auto t = track::eval_transferred(eps);
    csv << "collision_ratio," << t.avg_collisions << '\n'
        << "avg_abs_dev," << t.avg_abs_dev << '\n'
        << "avg_abs_theta_dev," << t.avg_abs_theta_dev << '\n'
        << "avg_v," << t.avg_v << '\n'
        << "avg_lane_changes," << t.avg_lane_changes << '\n'
        << "episodes," << t.episodes << '\n';
    out << n << " episodes, collision ratio " << t.avg_collisions << ", mean v " << t.avg_v << " -> " << a.out_dir
        << '\n';
    return kOk;
}

// ---------------------------------------------------------------------------
// serve
// ---------------------------------------------------------------------------

struct ServeArgs {
    int port = 8765;
    std::string bind = "127.0.0.1";
    std::string scenario;
    std::string out_dir = "demos";
    int start_lane = 1;
    std::uint64_t seed = 7;
};

void add_serve(CLI::App& app, ServeArgs& a) {
    auto* c = app.add_subcommand("serve", "live simulator over WebSocket for demonstration collection");
    c->add_option("--port", a.port)->capture_default_str();
    c->add_option("--bind", a.bind)->capture_default_str();
    c->add_option("--scenario", a.scenario, "scenario JSON (default: a generated 3-lane road)");
    c->add_option("--out-dir", a.out_dir, "where saved demonstrations go")->capture_default_str();
    c->add_option("--start-lane", a.start_lane)->capture_default_str();
    c->add_option("--seed", a.seed, "traffic seed for the default scenario")->capture_default_str();
}

int cmd_serve(const ServeArgs& a, std::ostream& out) {
    if (a.port < 0 || a.port > 65535) throw Fail{kBadConfig, "port out of range"};
    serve::ServeOptions opts;
    opts.bind = a.bind;
    opts.port = static_cast<std::uint16_t>(a.port);
    opts.out_dir = a.out_dir;
    opts.start_lane = a.start_lane;
    opts.scenario = a.scenario.empty()
                        ? track::random_scenario(track::Style::Safe, 3, 3, 400.0, stream_seed(a.seed, "traffic", 0))
                        : load_scenarios(a.scenario).front();
    if (a.start_lane < 0 || a.start_lane >= opts.scenario.lanes) throw Fail{kBadConfig, "start lane out of range"};
    std::unique_ptr<serve::Server> server;
    try {
        server = std::make_unique<serve::Server>(opts);
    } catch (const serve::PortBusyError& e) {
        throw Fail{kPortBusy, e.what()};
    }
    out << "serving on ws://" << a.bind << ':' << server->port() << '\n' << std::flush;
    server->run();
    return kOk;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct VerifyArgs {
    std::uint64_t trials = 100000;
    std::uint64_t seed = 1;
};

void add_verify(CLI::App& app, VerifyArgs& a) {
    auto* c = app.add_subcommand("verify", "fuzz the value-gap bound and the Hellinger inequality");
    c->add_option("--trials", a.trials)->capture_default_str();
    c->add_option("--seed", a.seed)->capture_default_str();
}

int cmd_verify(const VerifyArgs& a, std::ostream& out, const Hooks& hooks) {
    const auto t1 = metrics::fuzz_theorem1(a.trials, stream_seed(a.seed, "theorem1"), hooks.theorem1);
    const auto l2 = metrics::fuzz_lemma2(a.trials, stream_seed(a.seed, "lemma2"));
    out << "theorem1: " << t1.holds << '/' << t1.trials << " hold (worst slack " << t1.worst_slack << ")\n";
    out << "lemma2: " << l2.holds << '/' << l2.trials << " hold (worst slack " << l2.worst_slack << ")\n";
    return t1.holds == t1.trials && l2.holds == l2.trials ? kOk : kFailure;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Hooks& hooks) {
    CLI::App app{"Density matching reward learning toolkit", "dmrl"};
    app.require_subcommand(1);
    GridArgs grid_args;
    GridDemoArgs grid_demo_args;
    DemoArgs demo_args;
    LearnArgs learn_args;
    DriveArgs drive_args;
    ServeArgs serve_args;
    VerifyArgs verify_args;
    add_grid(app, grid_args);
    add_grid_demos(app, grid_demo_args);
    add_demos(app, demo_args);
    add_learn(app, learn_args);
    add_drive(app, drive_args);
    add_serve(app, serve_args);
    add_verify(app, verify_args);

    std::vector<std::string> storage{"dmrl"};
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : storage) argv.push_back(s.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kBadConfig;
    }

    try {
        if (const auto seed = env_seed()) {
            grid_args.cfg.seed = grid_demo_args.seed = demo_args.seed = learn_args.seed = *seed;
            serve_args.seed = verify_args.seed = *seed;
        }
        const auto* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        if (name == "grid") return cmd_grid(grid_args, out);
        if (name == "grid-demos") return cmd_grid_demos(grid_demo_args, out);
        if (name == "demos") return cmd_demos(demo_args, out);
        if (name == "learn") return cmd_learn(learn_args, out);
        if (name == "drive") return cmd_drive(drive_args, out);
        if (name == "serve") return cmd_serve(serve_args, out);
        if (name == "verify") return cmd_verify(verify_args, out, hooks);
        err << "unknown command " << name << '\n';
        return kBadConfig;
    } catch (const Fail& f) {
        err << "error: " << f.message << '\n';
        return f.code;
    } catch (const SolverError& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kBadConfig;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kFailure;
    }
}

}  // namespace dmrl::cli
