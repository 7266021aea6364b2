#include "dmrl/serve.hpp"

#include "dmrl/model_io.hpp"
#include "dmrl/track_io.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <cmath>
#include <deque>
#include <sstream>

namespace dmrl::serve {

namespace {

nlohmann::json error_reply(const std::string& message) { return {{"type", "error"}, {"message", message}}; }

std::vector<double> range_of(const nlohmann::json& b, const char* key) {
    const auto r = b.at(key).get<std::vector<double>>();
    if (r.size() != 2 || !(r[0] <= r[1])) throw InputError(std::string("bounds.") + key + " must be [lo, hi]");
    return r;
}

}  // namespace

Session::Session(track::Scenario scenario, std::filesystem::path out_dir, int start_lane)
    : scenario_(std::move(scenario)), out_dir_(std::move(out_dir)), start_lane_(start_lane) {
    scenario_.validate();
    restart();
}

void Session::restart() {
    ego_ = track::start_state(scenario_, std::clamp(start_lane_, 0, scenario_.lanes - 1));
    control_ = {};
    step_ = 0;
    collided_ = false;
    off_track_ = false;
    steps_.clear();
}

std::vector<nlohmann::json> Session::handle(const nlohmann::json& msg) {
    try {
        const std::string type = msg.at("type").get<std::string>();
        if (type == "control") {
            control_.v = std::max(0.0, msg.at("v").get<double>());
            control_.w = std::clamp(msg.at("w").get<double>(), -track::kWMax, track::kWMax);
            if (!std::isfinite(control_.v) || !std::isfinite(control_.w)) throw InputError("non-finite control");
            return {};
        }
        if (type == "reset") {
            if (msg.contains("scenario") && !msg.at("scenario").is_null())
                scenario_ = track::scenario_from_json(msg.at("scenario"));
            restart();
            return {};
        }
        if (type == "save") return {save(msg.value("style", std::string(track::to_string(scenario_.style))))};
        if (type == "reward_grid") return {reward_grid(msg)};
        return {error_reply("unknown message type '" + type + "'")};
    } catch (const std::exception& e) {
        return {error_reply(e.what())};
    }
}

nlohmann::json Session::frame() const {
    nlohmann::json cars = nlohmann::json::array();
    const double t = step_ * dt_;
    for (const auto& c : scenario_.cars)
        cars.push_back({{"lane", c.lane}, {"x", scenario_.car_x(c, t)}, {"y", scenario_.lane_center(c.lane)},
                        {"speed", c.speed}});
    nlohmann::json f = nullptr;
    if (const auto fv = track::try_features(ego_, control_.v, scenario_, t))
        f = {fv->dist_dev, fv->theta_dev, fv->dist_l, fv->dist_c, fv->dist_r, fv->v};
    return {{"type", "state"},
            {"t", t},
            {"ego", {{"x", ego_.x}, {"y", ego_.y}, {"theta", ego_.theta}}},
            {"cars", std::move(cars)},
            {"features", std::move(f)},
            {"collided", collided_},
            {"off_track", off_track_}};
}

nlohmann::json Session::tick() {
    // A crash or leaving the road freezes the car until reset or save.
    if (!collided_ && !off_track_) {
        const double t = step_ * dt_;
        if (const auto f = track::try_features(ego_, control_.v, scenario_, t)) {
            track::StepRecord rec;
            rec.t = step_;
            rec.state = ego_;
            rec.action = control_;
            rec.features = *f;
            rec.lane = scenario_.lane_of(ego_.y);
            steps_.push_back(rec);
            if (track::collides(ego_, scenario_, t)) {
                collided_ = true;
            } else {
                ego_ = track::step(ego_, control_, dt_);
                ++step_;
                off_track_ = !scenario_.on_track(ego_.y);
            }
        } else {
            off_track_ = true;
        }
    }
    return frame();
}

nlohmann::json Session::save(const std::string& style) {
    track::parse_style(style);
    if (steps_.empty()) return error_reply("nothing to save: no steps recorded since the last reset");
    track::Episode ep;
    ep.steps = steps_;
    ep.stats = track::summarize(ep.steps, dt_);
    ep.stats.collision = collided_;
    std::filesystem::create_directories(out_dir_);
    std::filesystem::path path;
    for (int n = 0;; ++n) {
        std::ostringstream name;
        name << "demo-" << style << '-' << n << ".jsonl";
        path = out_dir_ / name.str();
        if (!std::filesystem::exists(path)) break;
    }
    const nlohmann::json header = {{"source", "serve"},
                                   {"style", style},
                                   {"dt", dt_},
                                   {"start_lane", start_lane_},
                                   {"scenario", track::to_json(scenario_)}};
    track::save_trajectories(path, {ep}, header);
    restart();
    return {{"type", "saved"}, {"path", path.string()}};
}

nlohmann::json Session::reward_grid(const nlohmann::json& msg) {
    const std::string model_path = msg.at("model_path").get<std::string>();
    auto& eval = models_[model_path];
    if (!eval) {
        const auto model = reward::load_model(model_path);
        if (model.feature_dim() != track::kFeatureDim) {
            models_.erase(model_path);
            throw InputError("model has " + std::to_string(model.feature_dim()) + " features; the track needs 6");
        }
        eval = std::make_shared<reward::RewardEvaluator>(model);
    }
    const auto& b = msg.at("bounds");
    const auto xr = range_of(b, "x");
    const auto yr = range_of(b, "y");
    int nx = 0, ny = 0;
    const auto& res = msg.at("resolution");
    if (res.is_array()) {
        nx = res.at(0).get<int>();
        ny = res.at(1).get<int>();
    } else {
        nx = ny = res.get<int>();
    }
    if (nx < 1 || ny < 1 || nx * ny > 250000) throw InputError("resolution must give 1..250000 cells");

    // Cell centres; the ego is placed aligned with the road at the commanded speed.
    const double t = step_ * dt_;
    std::vector<std::pair<int, int>> where;
    std::vector<Eigen::VectorXd> rows;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double x = xr[0] + (i + 0.5) * (xr[1] - xr[0]) / nx;
            const double y = yr[0] + (j + 0.5) * (yr[1] - yr[0]) / ny;
            if (const auto f = track::try_features({x, y, 0.0}, control_.v, scenario_, t)) {
                where.emplace_back(j, i);
                rows.push_back(f->to_vector());
            }
        }
    nlohmann::json values = nlohmann::json::array();
    for (int j = 0; j < ny; ++j) values.push_back(std::vector<std::nullptr_t>(static_cast<size_t>(nx), nullptr));
    if (!rows.empty()) {
        Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), track::kFeatureDim);
        for (size_t k = 0; k < rows.size(); ++k) m.row(static_cast<Eigen::Index>(k)) = rows[k].transpose();
        const Eigen::VectorXd r = (*eval)(m);
        for (size_t k = 0; k < where.size(); ++k)
            values[static_cast<size_t>(where[k].first)][static_cast<size_t>(where[k].second)] = r(static_cast<Eigen::Index>(k));
    }
    return {{"type", "grid"}, {"values", std::move(values)}};
}

// ---------------------------------------------------------------------------
// Transport
// ---------------------------------------------------------------------------

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

class Connection;

}  // namespace

struct Server::Impl {
    ServeOptions opts;
    net::io_context ioc{1};
    tcp::acceptor acceptor{ioc};
    std::weak_ptr<Connection> active;

    void accept_next();
};

namespace {

/// One client. All handlers run on the single io_context thread, so the
/// completion-handler queue is the hand-off between reader and tick loop.
class Connection : public std::enable_shared_from_this<Connection> {
public:
    Connection(tcp::socket socket, Server::Impl& server)
        : ws_(std::move(socket)), timer_(ws_.get_executor()), server_(server) {}

    void start() {
        ws_.text(true);
        ws_.async_accept([self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
    }

private:
    void on_accept(beast::error_code ec) {
        if (ec) return;
        if (server_.active.lock()) {
            busy_ = true;
            send({{"type", "busy"}, {"message", "another session is active"}});
            return;
        }
        server_.active = shared_from_this();
        session_ = std::make_unique<Session>(server_.opts.scenario, server_.opts.out_dir, server_.opts.start_lane);
        period_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(1.0 / server_.opts.tick_hz));
        next_tick_ = std::chrono::steady_clock::now() + period_;
        arm_timer();
        read();
    }

    void read() {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) return self->shutdown();
            self->on_message(beast::buffers_to_string(self->buffer_.data()));
            self->buffer_.consume(self->buffer_.size());
            self->read();
        });
    }

    void on_message(const std::string& text) {
        std::istringstream lines(text);
        std::string line;
        while (std::getline(lines, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            nlohmann::json msg;
            try {
                msg = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception&) {
                send(error_reply("message is not valid JSON"));
                continue;
            }
            for (auto& reply : session_->handle(msg)) send(reply);
        }
    }

    void arm_timer() {
        timer_.expires_at(next_tick_);
        timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
            if (ec || self->closed_) return;
            self->send(self->session_->tick());
            // Fixed schedule: a late tick does not shift the ones after it.
            self->next_tick_ += self->period_;
            self->arm_timer();
        });
    }

    void send(const nlohmann::json& msg) {
        if (closed_) return;
        outbox_.push_back(msg.dump() + "\n");
        if (outbox_.size() == 1) write_front();
    }

    void write_front() {
        ws_.async_write(net::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) return self->shutdown();
            self->outbox_.pop_front();
            if (!self->outbox_.empty()) {
                self->write_front();
            } else if (self->busy_) {
                self->closed_ = true;
                self->ws_.async_close(websocket::close_code::try_again_later, [self](beast::error_code) {});
            }
        });
    }

    void shutdown() {
        // The unsaved buffer dies with the session.
        closed_ = true;
        timer_.cancel();
        if (server_.active.lock().get() == this) server_.active.reset();
        session_.reset();
    }

    websocket::stream<beast::tcp_stream> ws_;
    net::steady_timer timer_;
    Server::Impl& server_;
    beast::flat_buffer buffer_;
    std::deque<std::string> outbox_;
    std::unique_ptr<Session> session_;
    std::chrono::steady_clock::duration period_{};
    std::chrono::steady_clock::time_point next_tick_{};
    bool busy_ = false;
    bool closed_ = false;
};

}  // namespace

void Server::Impl::accept_next() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
        if (ec == net::error::operation_aborted) return;
        if (!ec) std::make_shared<Connection>(std::move(socket), *this)->start();
        accept_next();
    });
}

Server::Server(ServeOptions opts) : impl_(std::make_unique<Impl>()) {
    if (!(opts.tick_hz > 0.0)) throw InputError("tick rate must be positive");
    opts.scenario.validate();
    impl_->opts = std::move(opts);
    beast::error_code ec;
    const auto address = net::ip::make_address(impl_->opts.bind, ec);
    if (ec) throw InputError("bad bind address '" + impl_->opts.bind + "'");
    const tcp::endpoint ep(address, impl_->opts.port);
    impl_->acceptor.open(ep.protocol());
    impl_->acceptor.set_option(net::socket_base::reuse_address(true));
    impl_->acceptor.bind(ep, ec);
    if (ec) throw PortBusyError("cannot bind " + impl_->opts.bind + ":" + std::to_string(impl_->opts.port) + ": " + ec.message());
    impl_->acceptor.listen(net::socket_base::max_listen_connections, ec);
    if (ec) throw PortBusyError("cannot listen on port " + std::to_string(impl_->opts.port) + ": " + ec.message());
}

Server::~Server() = default;

std::uint16_t Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run() {
    impl_->accept_next();
    impl_->ioc.run();
}

void Server::stop() { impl_->ioc.stop(); }

}  // namespace dmrl::serve
