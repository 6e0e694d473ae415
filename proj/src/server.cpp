#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <condition_variable>
#include <csignal>
#include <iostream>
#include <set>

#include "vnav/errors.hpp"
#include "vnav/service.hpp"

namespace vnav {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

constexpr std::size_t kMaxLineBytes = 1 << 20;

class Connection : public std::enable_shared_from_this<Connection> {
public:
    virtual ~Connection() = default;
    virtual void start() = 0;
    // Finishes the in-flight reply, then closes. Safe from any thread.
    virtual void shutdown() = 0;
};

}  // namespace

struct Server::Impl {
    const PhantomRegistry& registry;
    ServiceConfig cfg;
    ServerOptions opts;
    asio::io_context ioc;
    std::optional<tcp::acceptor> tcp_acceptor;
    std::optional<tcp::acceptor> ws_acceptor;
    std::optional<asio::executor_work_guard<asio::io_context::executor_type>> work;
    std::vector<std::thread> threads;
    std::optional<TranscriptLog> transcript;
    std::atomic<std::uint64_t> next_session{1};
    std::atomic<bool> stopping{false};
    std::mutex live_mu;
    std::condition_variable live_cv;
    std::set<std::shared_ptr<Connection>> live;
    unsigned short bound_tcp = 0;
    std::optional<unsigned short> bound_ws;

    Impl(const PhantomRegistry& r, ServiceConfig c, ServerOptions o) : registry(r), cfg(std::move(c)), opts(std::move(o)) {}

    std::string new_session_id() { return "s" + std::to_string(next_session++); }

    void log(const std::string& session, const char* dir, const std::string& line)
    {
        if (transcript) transcript->record(session, dir, line, steady_clock_seconds()());
    }

    void add(const std::shared_ptr<Connection>& c)
    {
        {
            std::lock_guard lock(live_mu);
            live.insert(c);
        }
        if (stopping) c->shutdown();
    }

    void remove(const std::shared_ptr<Connection>& c)
    {
        {
            std::lock_guard lock(live_mu);
            live.erase(c);
        }
        live_cv.notify_all();
    }

    void accept_tcp();
    void accept_ws();
};

namespace {

class TcpConnection : public Connection {
public:
    TcpConnection(Server::Impl& srv, tcp::socket socket)
        : srv_(srv), socket_(std::move(socket)), buffer_(kMaxLineBytes), session_(srv.new_session_id(), srv.registry, srv.cfg)
    {
    }

    void start() override
    {
        asio::dispatch(socket_.get_executor(), [self = shared()] { self->read(); });
    }

    void shutdown() override
    {
        asio::post(socket_.get_executor(), [self = shared()] {
            self->closing_ = true;
            if (!self->writing_) self->close();
        });
    }

private:
    std::shared_ptr<TcpConnection> shared() { return std::static_pointer_cast<TcpConnection>(shared_from_this()); }

    void read()
    {
        if (closing_) return close();
        asio::async_read_until(socket_, buffer_, '\n', [self = shared()](beast::error_code ec, std::size_t n) {
            if (ec) return self->close();
            std::string line(asio::buffers_begin(self->buffer_.data()),
                             asio::buffers_begin(self->buffer_.data()) + static_cast<std::ptrdiff_t>(n));
            self->buffer_.consume(n);
            while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
            if (line.empty()) return self->read();
            self->reply(line);
        });
    }

    void reply(const std::string& line)
    {
        srv_.log(session_.id(), "in", line);
        out_ = session_.handle_line(line);
        srv_.log(session_.id(), "out", out_);
        out_ += '\n';
        writing_ = true;
        asio::async_write(socket_, asio::buffer(out_), [self = shared()](beast::error_code ec, std::size_t) {
            self->writing_ = false;
            if (ec || self->session_.closed()) return self->close();
            self->read();
        });
    }

    void close()
    {
        if (closed_) return;
        closed_ = true;
        beast::error_code ec;
        socket_.shutdown(tcp::socket::shutdown_both, ec);
        socket_.close(ec);
        srv_.remove(shared_from_this());
    }

    Server::Impl& srv_;
    tcp::socket socket_;
    asio::streambuf buffer_;
    Session session_;
    std::string out_;
    bool writing_ = false;
    bool closing_ = false;
    bool closed_ = false;
};

class WsConnection : public Connection {
public:
    WsConnection(Server::Impl& srv, tcp::socket socket)
        : srv_(srv), ws_(std::move(socket)), session_(srv.new_session_id(), srv.registry, srv.cfg)
    {
        ws_.read_message_max(kMaxLineBytes);
    }

    void start() override
    {
        asio::dispatch(ws_.get_executor(), [self = shared()] {
            self->ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
            self->ws_.async_accept([self](beast::error_code ec) {
                if (ec) return self->finish();
                self->accepted_ = true;
                self->read();
            });
        });
    }

    void shutdown() override
    {
        asio::post(ws_.get_executor(), [self = shared()] {
            self->closing_ = true;
            // A close frame already sent: do not wait for the peer's reply.
            if (self->close_sent_) return beast::get_lowest_layer(self->ws_).close();
            if (!self->writing_) self->close();
        });
    }

private:
    std::shared_ptr<WsConnection> shared() { return std::static_pointer_cast<WsConnection>(shared_from_this()); }

    void read()
    {
        if (closing_) return close();
        ws_.async_read(buffer_, [self = shared()](beast::error_code ec, std::size_t) {
            if (ec) return self->finish();
            std::string line = beast::buffers_to_string(self->buffer_.data());
            self->buffer_.consume(self->buffer_.size());
            self->reply(line);
        });
    }

    void reply(const std::string& line)
    {
        srv_.log(session_.id(), "in", line);
        out_ = session_.handle_line(line);
        srv_.log(session_.id(), "out", out_);
        writing_ = true;
        ws_.text(true);
        ws_.async_write(asio::buffer(out_), [self = shared()](beast::error_code ec, std::size_t) {
            self->writing_ = false;
            if (ec) return self->finish();
            if (self->session_.closed()) return self->close();
            self->read();
        });
    }

    void close()
    {
        if (finished_ || close_sent_) return;
        // While the server stops, the reply is already flushed; skip the
        // closing handshake rather than wait on the peer.
        if (!accepted_ || closing_) {
            beast::error_code ec;
            beast::get_lowest_layer(ws_).socket().close(ec);
            return finish();
        }
        close_sent_ = true;
        ws_.async_close(websocket::close_code::normal, [self = shared()](beast::error_code) { self->finish(); });
    }

    void finish()
    {
        if (finished_) return;
        finished_ = true;
        beast::error_code ec;
        beast::get_lowest_layer(ws_).socket().close(ec);
        srv_.remove(shared_from_this());
    }

    Server::Impl& srv_;
    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buffer_;
    Session session_;
    std::string out_;
    bool accepted_ = false;
    bool writing_ = false;
    bool closing_ = false;
    bool close_sent_ = false;
    bool finished_ = false;
};

tcp::acceptor open_acceptor(asio::io_context& ioc, const std::string& address, unsigned short port)
{
    beast::error_code ec;
    const auto addr = asio::ip::make_address(address, ec);
    if (ec) throw InvalidParams("bad listen address '" + address + "'");
    tcp::acceptor acc(ioc);
    const tcp::endpoint ep(addr, port);
    acc.open(ep.protocol(), ec);
    if (!ec) acc.set_option(asio::socket_base::reuse_address(true), ec);
    if (!ec) acc.bind(ep, ec);
    if (!ec) acc.listen(asio::socket_base::max_listen_connections, ec);
    if (ec) throw IoError("cannot listen on " + address + ":" + std::to_string(port) + ": " + ec.message());
    return acc;
}

}  // namespace

void Server::Impl::accept_tcp()
{
    tcp_acceptor->async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
        if (stopping) return;
        if (!ec) {
            auto c = std::make_shared<TcpConnection>(*this, std::move(socket));
            add(c);
            c->start();
        }
        accept_tcp();
    });
}

void Server::Impl::accept_ws()
{
    ws_acceptor->async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
        if (stopping) return;
        if (!ec) {
            auto c = std::make_shared<WsConnection>(*this, std::move(socket));
            add(c);
            c->start();
        }
        accept_ws();
    });
}

Server::Server(const PhantomRegistry& registry, ServiceConfig cfg, ServerOptions opts)
    : impl_(std::make_unique<Impl>(registry, std::move(cfg), std::move(opts)))
{
}

Server::~Server() { stop(); }

void Server::start()
{
    Impl& s = *impl_;
    if (s.opts.threads < 1) throw InvalidParams("server needs at least one thread");
    if (s.opts.transcript) s.transcript.emplace(*s.opts.transcript);
    s.tcp_acceptor.emplace(open_acceptor(s.ioc, s.opts.address, s.opts.tcp_port));
    if (s.opts.ws_port) s.ws_acceptor.emplace(open_acceptor(s.ioc, s.opts.address, *s.opts.ws_port));
    s.bound_tcp = s.tcp_acceptor->local_endpoint().port();
    if (s.ws_acceptor) s.bound_ws = s.ws_acceptor->local_endpoint().port();
    s.work.emplace(s.ioc.get_executor());
    s.accept_tcp();
    if (s.ws_acceptor) s.accept_ws();
    for (int i = 0; i < s.opts.threads; ++i) s.threads.emplace_back([&s] { s.ioc.run(); });
}

void Server::stop()
{
    Impl& s = *impl_;
    if (s.threads.empty() || s.stopping.exchange(true)) return;
    asio::post(s.ioc, [&s] {
        beast::error_code ec;
        if (s.tcp_acceptor) s.tcp_acceptor->close(ec);
        if (s.ws_acceptor) s.ws_acceptor->close(ec);
    });
    std::vector<std::shared_ptr<Connection>> live;
    {
        std::lock_guard lock(s.live_mu);
        live.assign(s.live.begin(), s.live.end());
    }
    for (auto& c : live) c->shutdown();
    s.work.reset();
    {
        // Connections finish once their in-flight replies are written. Library
        // timers (WebSocket close timeouts) can outlive them, so stop the loop
        // explicitly instead of waiting for it to drain.
        std::unique_lock lock(s.live_mu);
        s.live_cv.wait_for(lock, std::chrono::seconds(5), [&s] { return s.live.empty(); });
    }
    s.ioc.stop();
    for (auto& t : s.threads) t.join();
    s.threads.clear();
}

void Server::run_until_signal()
{
    asio::io_context sig_ioc;
    asio::signal_set signals(sig_ioc, SIGINT, SIGTERM);
    signals.async_wait([](beast::error_code, int) {});
    sig_ioc.run();
    stop();
}

unsigned short Server::tcp_port() const { return impl_->bound_tcp; }

std::optional<unsigned short> Server::ws_port() const { return impl_->bound_ws; }

}  // namespace vnav
