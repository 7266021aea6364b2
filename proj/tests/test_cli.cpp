#include "dmrl/cli.hpp"
#include "dmrl/model_io.hpp"
#include "dmrl/serve.hpp"
#include "dmrl/track_io.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cstdlib>
#include <sstream>

using namespace dmrl;
using testing::slurp;
using testing::TempDir;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args, const cli::Hooks& hooks = {}) {
    std::ostringstream out, err;
    Run r;
    r.code = cli::run_cli(args, out, err, hooks);
    r.out = out.str();
    r.err = err.str();
    return r;
}

void write_text(const std::filesystem::path& p, const std::string& s) {
    std::ofstream f(p);
    f << s;
}

}  // namespace

TEST_CASE("usage errors") {
    CHECK(run({}).code == cli::kBadConfig);
    CHECK(run({"grid"}).code == cli::kBadConfig);  // --mode is required
    CHECK(run({"grid", "--mode", "cubic"}).code == cli::kBadConfig);
    CHECK(run({"frobnicate"}).code == cli::kBadConfig);
    CHECK(run({"--help"}).code == cli::kOk);
    CHECK(run({"demos", "--style", "reckless", "--out", "/tmp/x"}).code == cli::kBadConfig);
}

TEST_CASE("grid output is reproducible without timing") {
    const std::vector<std::string> args{"grid",    "--size",      "6", "--mode",  "nonlinear", "--n-traj", "4",
                                        "--n-traj", "8",          "--maps", "1", "--demo-sets", "2", "--peaks", "2",
                                        "--no-timing"};
    const auto a = run(args);
    const auto b = run(args);
    REQUIRE(a.code == cli::kOk);
    CHECK(a.out == b.out);
    CHECK(a.out.rfind("# config: {", 0) == 0);
    CHECK(a.out.find("map_seed,demo_seed,grid,mode,n_traj,evd,fit_ms") != std::string::npos);
    // Four data rows, fit_ms zeroed.
    std::istringstream lines(a.out);
    std::string line;
    int rows = 0;
    while (std::getline(lines, line))
        if (!line.empty() && line[0] != '#' && line[0] != 'm') {
            ++rows;
            CHECK(line.substr(line.size() - 2) == ",0");
        }
    CHECK(rows == 4);
}

TEST_CASE("seed override") {
    TempDir dir("seed");
    const std::vector<std::string> args{"grid-demos", "--size", "6", "--n-traj", "3",
                                        "--out", (dir / "a.jsonl").string()};
    ::setenv("DMRL_SEED", "banana", 1);
    CHECK(run(args).code == cli::kBadConfig);
    ::setenv("DMRL_SEED", "5", 1);
    REQUIRE(run(args).code == cli::kOk);
    const auto with_env = slurp(dir / "a.jsonl");
    ::unsetenv("DMRL_SEED");
    auto explicit_seed = args;
    explicit_seed.insert(explicit_seed.end(), {"--seed", "5"});
    REQUIRE(run(explicit_seed).code == cli::kOk);
    CHECK(slurp(dir / "a.jsonl") == with_env);
}

TEST_CASE("learn from gridworld demos") {
    TempDir dir("learn");
    const auto demos = (dir / "demos.jsonl").string();
    REQUIRE(run({"grid-demos", "--size", "8", "--n-traj", "20", "--out", demos}).code == cli::kOk);
    const auto m1 = (dir / "m1.json").string(), m2 = (dir / "m2.json").string();
    REQUIRE(run({"learn", "--demos", demos, "--out", m1}).code == cli::kOk);
    REQUIRE(run({"learn", "--demos", demos, "--out", m2}).code == cli::kOk);
    CHECK(slurp(m1).size() > 100);
    // The output records its path, so compare everything else.
    auto a = nlohmann::json::parse(slurp(m1)), b = nlohmann::json::parse(slurp(m2));
    CHECK(a == b);
    CHECK(a["config"]["delta"] == 0.75);
    CHECK(reward::load_model(m1).feature_dim() == 25);

    write_text(dir / "empty.jsonl", "");
    CHECK(run({"learn", "--demos", (dir / "empty.jsonl").string(), "--out", m1}).code == cli::kBadInput);
    write_text(dir / "bad.jsonl", "{\"episode\": 0}\n");
    const auto bad = run({"learn", "--demos", (dir / "bad.jsonl").string(), "--out", m1});
    CHECK(bad.code == cli::kBadInput);
    CHECK(bad.err.find("line 1") != std::string::npos);
    CHECK(run({"learn", "--demos", (dir / "missing.jsonl").string(), "--out", m1}).code == cli::kBadInput);
    CHECK(run({"learn", "--demos", demos, "--out", m1, "--lambda", "-1"}).code == cli::kBadConfig);
    CHECK(run({"learn", "--demos", demos, "--out", m1, "--preset", "wild"}).code == cli::kBadConfig);

    // A gridworld model has the wrong dimension for the track.
    const auto scen = (dir / "road.json").string();
    write_text(scen, track::to_json(track::Scenario{}).dump());
    CHECK(run({"drive", "--model", m1, "--scenario", scen, "--out-dir", (dir / "d").string()}).code ==
          cli::kDimMismatch);
}

TEST_CASE("drive under a centre-seeking model") {
    TempDir dir("drive");
    // One inducing point at "centred, empty road, 10 m/s" with positive weight.
    reward::RewardModel m;
    m.inducing = (Eigen::MatrixXd(1, 6) << 0, 0, 60, 60, 60, 10).finished();
    m.alpha = Eigen::VectorXd::Ones(1);
    m.kernel = {1.0, 1.0};
    m.standardizer = density::Standardizer::identity(6);
    const auto model = (dir / "centre.json").string();
    reward::save_json(model, reward::to_json(m));

    track::Scenario sc;
    sc.cars.clear();
    const auto scen = (dir / "empty.json").string();
    write_text(scen, track::to_json(sc).dump());
    const auto out_dir = dir / "out";

    CHECK(run({"drive", "--model", model, "--scenario", scen, "--duration", "0"}).code == cli::kBadConfig);
    CHECK(run({"drive", "--model", model, "--scenario", scen, "--horizon", "0"}).code == cli::kBadConfig);
    CHECK(run({"drive", "--model", (dir / "nope.json").string(), "--scenario", scen}).code == cli::kBadInput);

    const auto r = run({"drive", "--model", model, "--scenario", scen, "--duration", "5", "--out-dir",
                        out_dir.string()});
    REQUIRE(r.code == cli::kOk);
    const auto csv = slurp(out_dir / "metrics.csv");
    CHECK(csv.find("collision_ratio,0\n") != std::string::npos);
    CHECK(csv.find("episodes,3\n") != std::string::npos);
    const auto traj = track::load_trajectories(out_dir / "trajectories.jsonl");
    REQUIRE(traj.episodes.size() == 3);
    CHECK(traj.episodes[0].steps.size() == 50);
    CHECK(traj.header["command"] == "drive");
}

TEST_CASE("track pipeline end to end") {
    TempDir dir("pipeline");
    const auto demos = (dir / "safe.jsonl").string(), scen = (dir / "scen.json").string();
    REQUIRE(run({"demos", "--style", "safe", "--duration", "6", "--out", demos, "--scenarios-out", scen}).code ==
            cli::kOk);
    const auto model = (dir / "safe.json").string();
    REQUIRE(run({"learn", "--demos", demos, "--out", model, "--preset", "track"}).code == cli::kOk);
    const auto cfg = nlohmann::json::parse(slurp(model))["config"];
    CHECK(cfg["delta"] == 1.0);
    CHECK(cfg["median_scale"] == 0.15);
    CHECK(cfg["max_demo_inducing"] == 400);
    const auto r = run({"drive", "--model", model, "--scenario", scen, "--reference", demos, "--episodes", "2",
                        "--duration", "6", "--out-dir", (dir / "out").string()});
    REQUIRE(r.code == cli::kOk);
    const auto csv = slurp(dir / "out" / "metrics.csv");
    CHECK(csv.find("dvar_X-Y,") != std::string::npos);
    CHECK(csv.find("mean_distance,") != std::string::npos);
}

TEST_CASE("verify") {
    const auto ok = run({"verify", "--trials", "10"});
    CHECK(ok.code == cli::kOk);
    CHECK(ok.out.find("theorem1: 10/10 hold") != std::string::npos);
    CHECK(ok.out.find("lemma2: 10/10 hold") != std::string::npos);
    cli::Hooks hooks;
    hooks.theorem1 = [](metrics::BoundReport& r) { r.holds = false; };
    const auto bad = run({"verify", "--trials", "10"}, hooks);
    CHECK(bad.code == cli::kFailure);
    CHECK(bad.out.find("theorem1: 0/10 hold") != std::string::npos);
}

TEST_CASE("serve reports a busy port") {
    serve::ServeOptions opts;
    opts.port = 0;
    serve::Server holder(opts);
    const auto r = run({"serve", "--port", std::to_string(holder.port())});
    CHECK(r.code == cli::kPortBusy);
    CHECK(run({"serve", "--port", "70000"}).code == cli::kBadConfig);
}
