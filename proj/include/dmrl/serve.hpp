#pragma once

#include "dmrl/reward.hpp"
#include "dmrl/track.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace dmrl::serve {

class PortBusyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One live driving simulation. Transport-free: the server feeds it client
/// messages and calls tick() at the session rate.
///
/// Client messages (JSON objects):
///   {type:"control", v, w}          latest command, applied from the next tick
///   {type:"reset", scenario?}       restart (optionally on a new scenario)
///   {type:"save", style}            persist the buffered drive, then restart
///   {type:"reward_grid", model_path, bounds:{x:[lo,hi], y:[lo,hi]}, resolution}
/// Replies: {type:"saved", path}, {type:"grid", values}, {type:"error", message}.
class Session {
public:
    Session(track::Scenario scenario, std::filesystem::path out_dir, int start_lane = 1);

    std::vector<nlohmann::json> handle(const nlohmann::json& msg);

    /// Advances one step (dt) and returns the {type:"state", ...} frame.
    nlohmann::json tick();
    /// The state frame for the current instant without advancing.
    nlohmann::json frame() const;

    std::size_t buffered() const { return steps_.size(); }
    const track::Scenario& scenario() const { return scenario_; }
    const track::CarState& ego() const { return ego_; }
    double dt() const { return dt_; }

private:
    void restart();
    nlohmann::json save(const std::string& style);
    nlohmann::json reward_grid(const nlohmann::json& msg);

    track::Scenario scenario_;
    std::filesystem::path out_dir_;
    int start_lane_;
    double dt_ = track::kDt;
    track::CarState ego_;
    track::Action control_;
    int step_ = 0;
    bool collided_ = false;
    bool off_track_ = false;
    std::vector<track::StepRecord> steps_;
    std::map<std::string, std::shared_ptr<reward::RewardEvaluator>> models_;
};

struct ServeOptions {
    std::string bind = "127.0.0.1";
    std::uint16_t port = 8765;  // 0 picks a free port
    track::Scenario scenario;
    std::filesystem::path out_dir = "demos";
    int start_lane = 1;
    double tick_hz = 10.0;
};

/// WebSocket server hosting a single Session at a time; a second client is
/// sent {type:"busy"} and closed. Messages are newline-delimited JSON in
/// text frames. Disconnecting discards any unsaved drive.
class Server {
public:
    /// Binds immediately; throws PortBusyError if the port is taken.
    explicit Server(ServeOptions opts);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    std::uint16_t port() const;
    /// Serves until stop() is called.
    void run();
    /// Safe to call from any thread.
    void stop();

    struct Impl;  // transport state, defined in serve.cpp

private:
    std::unique_ptr<Impl> impl_;
};

}  // namespace dmrl::serve
