#include "dmrl/model_io.hpp"
#include "dmrl/serve.hpp"
#include "dmrl/track_io.hpp"
#include "test_support.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <doctest.h>

#include <chrono>
#include <thread>

using namespace dmrl;
using nlohmann::json;
using testing::TempDir;

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

track::Scenario road_with_car() {
    track::Scenario sc;
    sc.cars = {{2, 50.0, track::kTrafficSpeed}};
    return sc;
}

/// Runs a server on a background thread for the lifetime of the object.
class LiveServer {
public:
    explicit LiveServer(const std::filesystem::path& out_dir) {
        serve::ServeOptions o;
        o.port = 0;
        o.scenario = road_with_car();
        o.out_dir = out_dir;
        server_ = std::make_unique<serve::Server>(o);
        thread_ = std::thread([this] { server_->run(); });
    }
    ~LiveServer() {
        server_->stop();
        thread_.join();
    }
    std::uint16_t port() const { return server_->port(); }

private:
    std::unique_ptr<serve::Server> server_;
    std::thread thread_;
};

class Client {
public:
    explicit Client(std::uint16_t port) : ws_(ioc_) {
        tcp::resolver resolver(ioc_);
        net::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
        ws_.handshake("127.0.0.1", "/");
        ws_.text(true);
    }

    void send(const json& msg) { ws_.write(net::buffer(msg.dump() + "\n")); }

    /// Next message of the given type, skipping others (state frames keep coming).
    json next(const std::string& type, int max_messages = 200) {
        for (int i = 0; i < max_messages; ++i) {
            const auto m = read();
            if (m.value("type", "") == type) return m;
        }
        FAIL("no '" << type << "' message");
        return {};
    }

    json read() {
        beast::flat_buffer buf;
        ws_.read(buf);
        return json::parse(beast::buffers_to_string(buf.data()));
    }

    void close() { ws_.close(websocket::close_code::normal); }

    websocket::stream<tcp::socket>& stream() { return ws_; }

private:
    net::io_context ioc_;
    websocket::stream<tcp::socket> ws_;
};

}  // namespace

TEST_CASE("session steps under the latest control") {
    TempDir dir("session");
    serve::Session s(road_with_car(), dir.path(), 1);
    const auto f0 = s.frame();
    CHECK(f0["type"] == "state");
    CHECK(f0["ego"]["y"] == 6.0);
    CHECK(f0["cars"].size() == 1);
    CHECK(s.handle({{"type", "control"}, {"v", 10.0}, {"w", 5.0}}).empty());
    auto f = s.tick();
    CHECK(f["t"].get<double>() == doctest::Approx(0.1));
    CHECK(f["ego"]["x"].get<double>() == doctest::Approx(1.0));
    // w was clamped to 1 rad/s.
    CHECK(f["ego"]["theta"].get<double>() == doctest::Approx(0.1));
    CHECK(s.buffered() == 1);
    CHECK(f["features"].size() == 6);

    const auto err = s.handle({{"type", "fly"}});
    REQUIRE(err.size() == 1);
    CHECK(err[0]["type"] == "error");
    CHECK(s.handle({{"type", "control"}, {"v", "fast"}})[0]["type"] == "error");
}

TEST_CASE("session save writes a demo file and restarts") {
    TempDir dir("save");
    serve::Session s(road_with_car(), dir.path(), 0);
    CHECK(s.handle({{"type", "save"}, {"style", "safe"}})[0]["type"] == "error");  // nothing yet
    s.handle({{"type", "control"}, {"v", 8.0}, {"w", 0.0}});
    for (int i = 0; i < 20; ++i) s.tick();
    const auto reply = s.handle({{"type", "save"}, {"style", "speedy"}});
    REQUIRE(reply.size() == 1);
    CHECK(reply[0]["type"] == "saved");
    const std::filesystem::path path = reply[0]["path"].get<std::string>();
    CHECK(path.filename() == "demo-speedy-0.jsonl");
    CHECK(s.buffered() == 0);
    CHECK(s.ego().x == 0.0);
    const auto file = track::load_trajectories(path);
    CHECK(file.header["source"] == "serve");
    CHECK(file.header["style"] == "speedy");
    REQUIRE(file.episodes.size() == 1);
    CHECK(file.episodes[0].steps.size() == 20);
    CHECK(file.episodes[0].steps[5].action.v == 8.0);
    CHECK(s.handle({{"type", "save"}, {"style", "wild"}})[0]["type"] == "error");
}

TEST_CASE("session freezes after a crash") {
    TempDir dir("crash");
    track::Scenario sc;
    sc.cars = {{1, 3.0, 0.0}};
    serve::Session s(sc, dir.path(), 1);
    s.handle({{"type", "control"}, {"v", 10.0}, {"w", 0.0}});
    auto f = s.tick();
    CHECK(f["collided"] == true);
    const double x = s.ego().x;
    s.tick();
    CHECK(s.ego().x == x);
    s.handle({{"type", "reset"}});
    CHECK(s.frame()["collided"] == false);
    // Reset can swap the scenario.
    track::Scenario wide;
    wide.lanes = 5;
    s.handle({{"type", "reset"}, {"scenario", track::to_json(wide)}});
    CHECK(s.scenario().lanes == 5);
}

TEST_CASE("session reward grid") {
    TempDir dir("grid");
    reward::RewardModel m;
    m.inducing = (Eigen::MatrixXd(1, 6) << 0, 0, 60, 60, 60, 0).finished();
    m.alpha = Eigen::VectorXd::Ones(1);
    m.kernel = {1.0, 1.0};
    m.standardizer = density::Standardizer::identity(6);
    reward::save_json(dir / "m.json", reward::to_json(m));

    track::Scenario sc;
    sc.cars.clear();
    serve::Session s(sc, dir.path(), 1);
    const json req = {{"type", "reward_grid"},
                      {"model_path", (dir / "m.json").string()},
                      {"bounds", {{"x", {0.0, 10.0}}, {"y", {-4.0, 16.0}}}},
                      {"resolution", {2, 5}}};
    const auto r = s.handle(req);
    REQUIRE(r.size() == 1);
    REQUIRE(r[0]["type"] == "grid");
    const auto& v = r[0]["values"];
    REQUIRE(v.size() == 5);
    CHECK(v[0][0].is_null());  // y = -2 is off the road
    CHECK(v[4][1].is_null());  // y = 14 too
    // Lane centres (y = 2, 6, 10) have zero deviation, so reward is exp(0) = 1.
    CHECK(v[1][0].get<double>() == doctest::Approx(1.0));
    CHECK(v[2][1].get<double>() == doctest::Approx(1.0));
    json bad = req;
    bad["resolution"] = 0;
    CHECK(s.handle(bad)[0]["type"] == "error");
    bad = req;
    bad["model_path"] = (dir / "none.json").string();
    CHECK(s.handle(bad)[0]["type"] == "error");
}

TEST_CASE("websocket session") {
    TempDir dir("ws");
    LiveServer server(dir.path());
    Client c(server.port());

    const auto first = c.next("state");
    CHECK(first["ego"]["x"] == 0.0);
    c.send({{"type", "control"}, {"v", 10.0}, {"w", 0.0}});
    // Ticks arrive at roughly 10 Hz.
    const auto t0 = std::chrono::steady_clock::now();
    json last;
    for (int i = 0; i < 10; ++i) last = c.next("state");
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(secs > 0.7);
    CHECK(secs < 1.6);
    CHECK(last["ego"]["x"].get<double>() > 0.0);

    // Two messages in one frame, newline separated.
    c.stream().write(net::buffer(std::string("{\"type\":\"control\",\"v\":5,\"w\":0}\n{\"type\":\"nope\"}\n")));
    CHECK(c.next("error")["message"].get<std::string>().find("nope") != std::string::npos);
    c.send({{"type", "save"}, {"style", "tailgate"}});
    const auto saved = c.next("saved");
    CHECK(std::filesystem::exists(saved["path"].get<std::string>()));
    c.stream().write(net::buffer(std::string("not json\n")));
    CHECK(c.next("error")["message"] == "message is not valid JSON");

    SUBCASE("a second client is turned away") {
        Client other(server.port());
        CHECK(other.read()["type"] == "busy");
        beast::flat_buffer buf;
        beast::error_code ec;
        other.stream().read(buf, ec);
        CHECK(ec == websocket::error::closed);
        CHECK(other.stream().reason().code == websocket::close_code::try_again_later);
    }
}

TEST_CASE("disconnecting discards the unsaved drive") {
    TempDir dir("drop");
    LiveServer server(dir.path());
    {
        Client c(server.port());
        c.send({{"type", "control"}, {"v", 10.0}, {"w", 0.0}});
        for (int i = 0; i < 5; ++i) c.next("state");
        c.close();
    }
    // The slot frees once the server notices the close.
    json first;
    for (int attempt = 0; attempt < 50; ++attempt) {
        Client c(server.port());
        first = c.read();
        if (first["type"] == "state") {
            // The fresh session only holds its own idle ticks.
            c.send({{"type", "save"}, {"style", "safe"}});
            const auto saved = track::load_trajectories(c.next("saved")["path"].get<std::string>());
            REQUIRE(saved.episodes.size() == 1);
            for (const auto& r : saved.episodes[0].steps) {
                CHECK(r.state.x == 0.0);
                CHECK(r.action.v == 0.0);
            }
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    CHECK(first["type"] == "state");
}
