#pragma once

#include <chrono>
#include <csignal>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "actsugg/service.hpp"

namespace actsugg {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace detail {

inline constexpr auto kPushInterval = std::chrono::milliseconds(50);

/// One WebSocket client. Replies to each message in order, and pushes new
/// frames for auto-mode sessions it has seen.
class WsConnection : public std::enable_shared_from_this<WsConnection> {
public:
    WsConnection(tcp::socket socket, SessionManager& manager)
        : ws_(std::move(socket)), timer_(ws_.get_executor()), manager_(manager) {}

    void run(http::request<http::string_body> req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
            if (ec) return;
            self->read();
            self->schedule_push();
        });
    }

private:
    void read() {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->closed_ = true;
                self->timer_.cancel();
                return;
            }
            const std::string text = beast::buffers_to_string(self->buffer_.data());
            self->buffer_.consume(self->buffer_.size());
            const std::string reply = self->manager_.handle_text(text);
            self->track(reply);
            self->send(reply);
            self->read();
        });
    }

    // Remember which sessions this client drives and the step it last saw.
    void track(const std::string& reply) {
        const auto j = nlohmann::json::parse(reply);
        if (j.value("type", "") == "frame") watched_[j["session"]] = j["step"];
        if (j.value("type", "") == "closed") watched_.erase(j["session"].get<std::string>());
    }

    void schedule_push() {
        timer_.expires_after(kPushInterval);
        timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
            if (ec || self->closed_) return;
            for (auto& [id, step] : self->watched_) {
                if (auto f = self->manager_.poll(id, step)) {
                    step = (*f)["step"];
                    self->send(f->dump());
                }
            }
            self->schedule_push();
        });
    }

    void send(std::string text) {
        queue_.push_back(std::move(text));
        if (queue_.size() == 1) write();
    }

    void write() {
        ws_.text(true);
        ws_.async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->closed_ = true;
                return;
            }
            self->queue_.pop_front();
            if (!self->queue_.empty()) self->write();
        });
    }

    websocket::stream<beast::tcp_stream> ws_;
    net::steady_timer timer_;
    beast::flat_buffer buffer_;
    SessionManager& manager_;
    std::deque<std::string> queue_;
    std::map<std::string, std::size_t> watched_;
    bool closed_ = false;
};

/// Plain HTTP client: POST /api takes one protocol message per request (the
/// polling fallback); GET /health answers liveness; upgrades on /ws hand the
/// socket to a WebSocket connection.
class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
public:
    HttpConnection(tcp::socket socket, SessionManager& manager) : stream_(std::move(socket)), manager_(manager) {}

    void run() { read(); }

private:
    void read() {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(60));
        http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) return;
            self->dispatch();
        });
    }

    void dispatch() {
        if (websocket::is_upgrade(req_)) {
            if (req_.target() == "/ws") {
                stream_.expires_never();
                std::make_shared<WsConnection>(stream_.release_socket(), manager_)->run(std::move(req_));
                return;
            }
            return respond(http::status::not_found, R"({"type":"error","code":"not_found","message":"no such path"})");
        }
        if (req_.method() == http::verb::options) return respond(http::status::no_content, "");
        if (req_.target() == "/health" && req_.method() == http::verb::get)
            return respond(http::status::ok, R"({"status":"ok"})");
        if (req_.target() == "/api") {
            if (req_.method() != http::verb::post)
                return respond(http::status::method_not_allowed,
                               R"({"type":"error","code":"bad_request","message":"use POST"})");
            return respond(http::status::ok, manager_.handle_text(req_.body()));
        }
        respond(http::status::not_found, R"({"type":"error","code":"not_found","message":"no such path"})");
    }

    void respond(http::status status, std::string body) {
        auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
        res->set(http::field::server, "actsugg");
        res->set(http::field::content_type, "application/json");
        res->set(http::field::access_control_allow_origin, "*");
        res->set(http::field::access_control_allow_headers, "Content-Type");
        res->set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
        res->keep_alive(req_.keep_alive());
        res->body() = std::move(body);
        res->prepare_payload();
        http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
            if (ec) return;
            if (!res->keep_alive()) {
                beast::error_code ignored;
                self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                return;
            }
            self->read();
        });
    }

    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
    SessionManager& manager_;
};

} // namespace detail

/// Serves the session protocol on one port: WebSocket at /ws, HTTP POST at /api.
class Server {
public:
    Server(SessionManager& manager, const std::string& address, unsigned short port)
        : manager_(manager), acceptor_(ioc_) {
        const tcp::endpoint endpoint(net::ip::make_address(address), port);
        acceptor_.open(endpoint.protocol());
        acceptor_.set_option(net::socket_base::reuse_address(true));
        acceptor_.bind(endpoint);
        acceptor_.listen(net::socket_base::max_listen_connections);
        accept();
    }

    ~Server() { stop(); }

    /// The bound port (useful when constructed with port 0).
    unsigned short port() const { return acceptor_.local_endpoint().port(); }

    /// Serves until stop() is called.
    void run() { ioc_.run(); }

    /// Stops serving on SIGINT or SIGTERM.
    void stop_on_signals() {
        signals_.emplace(ioc_, SIGINT, SIGTERM);
        signals_->async_wait([this](beast::error_code, int) { ioc_.stop(); });
    }

    void start_background() {
        thread_ = std::thread([this] { ioc_.run(); });
    }

    void stop() {
        ioc_.stop();
        if (thread_.joinable()) thread_.join();
    }

private:
    void accept() {
        acceptor_.async_accept(net::make_strand(ioc_), [this](beast::error_code ec, tcp::socket socket) {
            if (!ec) std::make_shared<detail::HttpConnection>(std::move(socket), manager_)->run();
            accept();
        });
    }

    SessionManager& manager_;
    net::io_context ioc_{1};
    tcp::acceptor acceptor_;
    std::optional<net::signal_set> signals_;
    std::thread thread_;
};

} // namespace actsugg
