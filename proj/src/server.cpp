#include <atomic>
#include <chrono>
#include <csignal>
#include <deque>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "dash/errors.hpp"
#include "dash/service.hpp"

namespace dash::service {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

struct SessionInfo {
    std::atomic<int> status{0};
    std::atomic<std::size_t> accepted{0};
    std::atomic<std::size_t> rejected{0};
};

struct Target {
    std::string path;
    std::map<std::string, std::string> query;
};

Target split_target(std::string_view target) {
    Target t;
    const auto q = target.find('?');
    t.path = std::string(target.substr(0, q));
    if (q == std::string_view::npos) return t;
    std::string_view rest = target.substr(q + 1);
    while (!rest.empty()) {
        const auto amp = rest.find('&');
        const std::string_view kv = rest.substr(0, amp);
        const auto eq = kv.find('=');
        if (eq == std::string_view::npos) {
            t.query[std::string(kv)] = "";
        } else {
            t.query[std::string(kv.substr(0, eq))] = std::string(kv.substr(eq + 1));
        }
        if (amp == std::string_view::npos) break;
        rest = rest.substr(amp + 1);
    }
    return t;
}

std::pair<std::string, unsigned short> split_address(const std::string& addr) {
    const auto colon = addr.rfind(':');
    if (colon == std::string::npos) throw ConfigError("listen address '" + addr + "' must be host:port");
    std::string host = addr.substr(0, colon);
    if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
    int port = 0;
    try {
        std::size_t used = 0;
        port = std::stoi(addr.substr(colon + 1), &used);
        if (used != addr.size() - colon - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw ConfigError("listen address '" + addr + "' has an invalid port");
    }
    if (port < 0 || port > 65535) throw ConfigError("listen address '" + addr + "' has an invalid port");
    return {host, static_cast<unsigned short>(port)};
}

struct ServerCore {
    SessionConfig cfg;
    const evaluation::TaskRegistry& tasks;
    evaluation::TrialStore store;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

    std::mutex sessions_mu;
    std::map<std::string, std::shared_ptr<SessionInfo>> sessions;
    std::atomic<std::uint64_t> next_session{1};

    ServerCore(SessionConfig c, const evaluation::TaskRegistry& t)
        : cfg(std::move(c)), tasks(t), store(cfg.trials_path, t) {}

    http::response<http::string_body> handle(const http::request<http::string_body>& req);
    nlohmann::json status_json();
};

class WsSession : public std::enable_shared_from_this<WsSession> {
public:
    WsSession(tcp::socket&& socket, ServerCore& srv, std::string id)
        : ws_(std::move(socket)),
          timer_(ws_.get_executor()),
          srv_(srv),
          session_(id, srv.cfg, srv.store),
          info_(std::make_shared<SessionInfo>()),
          started_(std::chrono::steady_clock::now()) {}

    void run(http::request<http::string_body> req) {
        beast::get_lowest_layer(ws_).expires_never();
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
    }

private:
    std::int64_t now_ms() const {
        return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started_)
            .count();
    }

    void on_accept(beast::error_code ec) {
        if (ec) return;
        ws_.text(true);
        {
            std::lock_guard lock(srv_.sessions_mu);
            srv_.sessions[session_.id()] = info_;
        }
        send(session_.hello());
        do_read();
        schedule_tick();
    }

    void do_read() {
        ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) {
            close();
            return;
        }
        const std::string text = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        for (auto& m : session_.on_text(text, now_ms())) send(m);
        publish();
        do_read();
    }

    void schedule_tick() {
        timer_.expires_after(std::chrono::milliseconds(srv_.cfg.retarget.tick_ms));
        timer_.async_wait(beast::bind_front_handler(&WsSession::on_tick, shared_from_this()));
    }

    void on_tick(beast::error_code ec) {
        if (ec || closed_) return;
        for (auto& m : session_.on_tick(now_ms())) send(m);
        publish();
        schedule_tick();
    }

    void publish() {
        info_->status = static_cast<int>(session_.status());
        info_->accepted = session_.frames_accepted();
        info_->rejected = session_.frames_rejected();
    }

    void send(const StreamMessage& m) {
        if (closed_) return;
        outbox_.push_back(to_json(m).dump());
        if (outbox_.size() == 1) do_write();
    }

    void do_write() {
        ws_.async_write(net::buffer(outbox_.front()),
                        beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t) {
        if (ec) {
            close();
            return;
        }
        outbox_.pop_front();
        if (!outbox_.empty()) do_write();
    }

    void close() {
        if (closed_) return;
        closed_ = true;
        timer_.cancel();
        std::lock_guard lock(srv_.sessions_mu);
        srv_.sessions.erase(session_.id());
    }

    websocket::stream<beast::tcp_stream> ws_;
    net::steady_timer timer_;
    beast::flat_buffer buffer_;
    std::deque<std::string> outbox_;
    ServerCore& srv_;
    Session session_;
    std::shared_ptr<SessionInfo> info_;
    std::chrono::steady_clock::time_point started_;
    bool closed_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(tcp::socket&& socket, ServerCore& srv) : stream_(std::move(socket)), srv_(srv) {}

    void run() {
        net::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpSession::do_read, shared_from_this()));
    }

private:
    void do_read() {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec == http::error::end_of_stream) {
            beast::error_code ignored;
            stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
            return;
        }
        if (ec) return;
        if (websocket::is_upgrade(req_) && split_target(std::string(req_.target())).path == "/session") {
            const std::string id = "s" + std::to_string(srv_.next_session++);
            std::make_shared<WsSession>(stream_.release_socket(), srv_, id)->run(std::move(req_));
            return;
        }
        res_ = std::make_shared<http::response<http::string_body>>(srv_.handle(req_));
        http::async_write(stream_, *res_,
                          beast::bind_front_handler(&HttpSession::on_write, shared_from_this(), res_->need_eof()));
    }

    void on_write(bool close, beast::error_code ec, std::size_t) {
        if (ec) return;
        if (close) {
            beast::error_code ignored;
            stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
            return;
        }
        res_.reset();
        do_read();
    }

    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
    std::shared_ptr<http::response<http::string_body>> res_;
    ServerCore& srv_;
};

http::response<http::string_body> make_response(const http::request<http::string_body>& req, http::status status,
                                                std::string body, std::string_view content_type) {
    http::response<http::string_body> res{status, req.version()};
    res.set(http::field::content_type, std::string(content_type));
    res.set(http::field::access_control_allow_origin, "*");
    res.keep_alive(req.keep_alive());
    res.body() = std::move(body);
    res.prepare_payload();
    return res;
}

http::response<http::string_body> json_response(const http::request<http::string_body>& req, http::status status,
                                                const nlohmann::json& body) {
    return make_response(req, status, body.dump(), "application/json");
}

http::response<http::string_body> error_response(const http::request<http::string_body>& req, http::status status,
                                                 const std::string& message) {
    return json_response(req, status, {{"ok", false}, {"error", message}});
}

}  // namespace

struct Server::Impl {
    ServerCore core;
    net::io_context ioc;
    tcp::acceptor acceptor{ioc};
    std::unique_ptr<net::signal_set> signals;
    std::vector<std::thread> threads;
    unsigned short bound_port = 0;
    std::atomic<bool> stopped{false};

    Impl(SessionConfig c, const evaluation::TaskRegistry& t) : core(std::move(c), t) {}

    void do_accept();
};

void Server::Impl::do_accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
        if (!ec) std::make_shared<HttpSession>(std::move(socket), core)->run();
        if (acceptor.is_open()) do_accept();
    });
}

nlohmann::json ServerCore::status_json() {
    nlohmann::json list = nlohmann::json::array();
    {
        std::lock_guard lock(sessions_mu);
        for (const auto& [id, info] : sessions) {
            list.push_back({{"id", id},
                            {"state", std::string(retargeting::to_string(
                                          static_cast<retargeting::PipelineStatus>(info->status.load())))},
                            {"accepted", info->accepted.load()},
                            {"rejected", info->rejected.load()}});
        }
    }
    const auto uptime =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
    return {{"ok", true},
            {"hand_version", cfg.hand_version},
            {"tick_ms", cfg.retarget.tick_ms},
            {"uptime_ms", uptime},
            {"trials", store.size()},
            {"sessions", list}};
}

http::response<http::string_body> ServerCore::handle(const http::request<http::string_body>& req) {
    const Target target = split_target(std::string(req.target()));
    const bool get = req.method() == http::verb::get;
    const bool post = req.method() == http::verb::post;

    if (target.path == "/status") {
        if (!get) return error_response(req, http::status::method_not_allowed, "use GET");
        return json_response(req, http::status::ok, status_json());
    }
    if (target.path == "/tasks") {
        if (!get) return error_response(req, http::status::method_not_allowed, "use GET");
        return json_response(req, http::status::ok, evaluation::task_registry_to_json(tasks));
    }
    if (target.path == "/trials") {
        if (get) {
            nlohmann::json out = nlohmann::json::array();
            for (const auto& t : store.snapshot()) out.push_back(evaluation::trial_to_json(t));
            return json_response(req, http::status::ok, out);
        }
        if (!post) return error_response(req, http::status::method_not_allowed, "use GET or POST");
        const auto body = nlohmann::json::parse(req.body(), nullptr, false);
        if (body.is_discarded()) return error_response(req, http::status::bad_request, "malformed JSON body");
        try {
            const auto trial = evaluation::parse_trial(body, tasks);
            store.append(trial);
            return json_response(req, http::status::created, {{"ok", true}, {"trial", evaluation::trial_to_json(trial)}});
        } catch (const evaluation::DuplicateTrialError& e) {
            return error_response(req, http::status::conflict, e.what());
        } catch (const ValidationError& e) {
            return error_response(req, http::status::bad_request, e.what());
        } catch (const IoError& e) {
            return error_response(req, http::status::internal_server_error, e.what());
        }
    }
    if (target.path == "/report") {
        if (!get) return error_response(req, http::status::method_not_allowed, "use GET");
        const auto strict_it = target.query.find("strict");
        const bool strict = strict_it != target.query.end() &&
                            (strict_it->second == "1" || strict_it->second == "true" || strict_it->second.empty());
        const auto fmt_it = target.query.find("format");
        const std::string format = fmt_it == target.query.end() ? "json" : fmt_it->second;
        const auto table = evaluation::aggregate(store.snapshot(), strict, tasks);
        if (format == "json") return json_response(req, http::status::ok, evaluation::report_to_json(table));
        std::ostringstream out;
        if (format == "csv") {
            evaluation::write_report_csv(out, table);
            return make_response(req, http::status::ok, out.str(), "text/csv");
        }
        if (format == "text") {
            evaluation::write_report_text(out, table);
            return make_response(req, http::status::ok, out.str(), "text/plain");
        }
        return error_response(req, http::status::bad_request, "unknown report format '" + format + "'");
    }
    if (target.path == "/session") {
        return error_response(req, http::status::upgrade_required, "/session requires a WebSocket upgrade");
    }
    return error_response(req, http::status::not_found, "no route for " + target.path);
}

Server::Server(SessionConfig cfg, const evaluation::TaskRegistry& tasks) {
    cfg.validate();
    impl_ = std::make_unique<Impl>(std::move(cfg), tasks);
}

Server::~Server() {
    stop();
    for (auto& t : impl_->threads) {
        if (t.joinable()) t.join();
    }
}

void Server::start(int threads) {
    if (threads < 1) throw ConfigError("server needs at least one I/O thread");
    const auto [host, port] = split_address(impl_->core.cfg.listen_address);
    beast::error_code ec;
    const auto address = net::ip::make_address(host == "localhost" ? "127.0.0.1" : host, ec);
    if (ec) throw ConfigError("listen address '" + impl_->core.cfg.listen_address + "': " + ec.message());
    const tcp::endpoint endpoint(address, port);

    auto& acc = impl_->acceptor;
    acc.open(endpoint.protocol(), ec);
    if (!ec) acc.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) acc.bind(endpoint, ec);
    if (!ec) acc.listen(net::socket_base::max_listen_connections, ec);
    if (ec) throw IoError("cannot listen on " + impl_->core.cfg.listen_address + ": " + ec.message());
    impl_->bound_port = acc.local_endpoint().port();

    impl_->do_accept();
    for (int i = 0; i < threads; ++i) {
        impl_->threads.emplace_back([this] { impl_->ioc.run(); });
    }
}

void Server::wait() {
    impl_->signals = std::make_unique<net::signal_set>(impl_->ioc, SIGINT, SIGTERM);
    impl_->signals->async_wait([this](beast::error_code ec, int) {
        if (!ec) stop();
    });
    for (auto& t : impl_->threads) {
        if (t.joinable()) t.join();
    }
}

void Server::stop() {
    if (impl_->stopped.exchange(true)) return;
    net::post(impl_->ioc, [impl = impl_.get()] {
        beast::error_code ignored;
        impl->acceptor.close(ignored);
        if (impl->signals) impl->signals->cancel(ignored);
    });
    impl_->ioc.stop();
}

unsigned short Server::port() const { return impl_->bound_port; }

}  // namespace dash::service
