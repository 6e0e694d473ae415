#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "vnav/actuation.hpp"
#include "vnav/env.hpp"
#include "vnav/metrics.hpp"

namespace vnav {

inline constexpr const char* kProtocolVersion = "1";

// Named phantoms available to remote clients; immutable once serving starts.
class PhantomRegistry {
public:
    void add(const std::string& id, VesselPhantom phantom);
    std::shared_ptr<const EnvContext> find(const std::string& id) const;
    const std::map<std::string, std::shared_ptr<const EnvContext>>& all() const { return entries_; }

private:
    std::map<std::string, std::shared_ptr<const EnvContext>> entries_;
};

// Direction-tagged JSON-lines log of every message; safe to share across sessions.
class TranscriptLog {
public:
    explicit TranscriptLog(const std::filesystem::path& path);
    void record(const std::string& session, const char* direction, const std::string& line, double t);

private:
    std::mutex mu_;
    std::ofstream out_;
};

struct ServiceConfig {
    // Defaults for every episode; target, seed and mode come from reset.
    EnvConfig env;
    MotorParams motor;
    // Appended by post_log and by teleop successes (JSON-lines).
    std::optional<std::filesystem::path> teleop_log;
};

using Clock = std::function<double()>;  // seconds
Clock steady_clock_seconds();

enum class SessionMode { agent, teleop };

// Protocol state for one connection. Not thread-safe: a session handles one
// message at a time, in arrival order.
class Session {
public:
    Session(std::string id, const PhantomRegistry& registry, const ServiceConfig& cfg, Clock clock = steady_clock_seconds());

    // Parses one request line and returns the compact JSON reply (no newline).
    std::string handle_line(const std::string& line);
    nlohmann::json handle(const nlohmann::json& msg);

    bool closed() const { return closed_; }
    const std::string& id() const { return id_; }

private:
    void dispatch(const std::string& type, const nlohmann::json& msg, nlohmann::json& reply);
    void on_hello(const nlohmann::json& msg, nlohmann::json& reply);
    void on_list_phantoms(nlohmann::json& reply);
    void on_reset(const nlohmann::json& msg, nlohmann::json& reply);
    void on_step(const nlohmann::json& msg, nlohmann::json& reply);
    void on_render(const nlohmann::json& msg, nlohmann::json& reply);
    void on_motor_echo(const nlohmann::json& msg, nlohmann::json& reply);
    void on_metrics(nlohmann::json& reply);
    void on_post_log(const nlohmann::json& msg, nlohmann::json& reply);
    void append_teleop_log(const nlohmann::json& entry);

    std::string id_;
    const PhantomRegistry& registry_;
    const ServiceConfig& cfg_;
    Clock clock_;

    std::optional<Env> env_;
    std::string phantom_id_;
    SessionMode mode_ = SessionMode::agent;
    std::uint64_t episode_seed_ = 0;
    double reset_time_ = 0.0;
    std::optional<std::int64_t> last_seq_;
    bool closed_ = false;

    EpisodeRecord current_;
    std::vector<EpisodeRecord> finished_;
    std::vector<nlohmann::json> teleop_runs_;
};

struct ServerOptions {
    std::string address = "127.0.0.1";
    unsigned short tcp_port = 7878;  // 0 picks a free port
    std::optional<unsigned short> ws_port;
    int threads = 2;
    std::optional<std::filesystem::path> transcript;
};

// Newline-delimited JSON over TCP plus the same payloads over WebSocket text
// frames. One session per connection.
class Server {
public:
    Server(const PhantomRegistry& registry, ServiceConfig cfg, ServerOptions opts);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    // Binds and starts serving in background threads. Throws Error on bind failure.
    void start();
    // Stops accepting, lets in-flight replies flush, closes connections, joins threads.
    void stop();
    // Blocks until SIGINT or SIGTERM, then stops.
    void run_until_signal();

    unsigned short tcp_port() const;
    std::optional<unsigned short> ws_port() const;

    struct Impl;

private:
    std::unique_ptr<Impl> impl_;
};

}  // namespace vnav
