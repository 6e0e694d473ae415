#include <chrono>
#include <cmath>

#include "vnav/errors.hpp"
#include "vnav/service.hpp"

namespace vnav {

using nlohmann::json;

namespace {

struct ProtocolError {
    std::string code;  // parse, schema, bad_state, unreachable
    std::string detail;
};

[[noreturn]] void schema_error(const std::string& detail) { throw ProtocolError{"schema", detail}; }

double number_field(const json& msg, const char* key, std::optional<double> fallback = std::nullopt)
{
    const auto it = msg.find(key);
    if (it == msg.end()) {
        if (fallback) return *fallback;
        schema_error(std::string("missing field '") + key + "'");
    }
    if (!it->is_number()) schema_error(std::string("field '") + key + "' must be a number");
    const double v = it->get<double>();
    if (!std::isfinite(v)) schema_error(std::string("field '") + key + "' must be finite");
    return v;
}

std::string string_field(const json& msg, const char* key, std::optional<std::string> fallback = std::nullopt)
{
    const auto it = msg.find(key);
    if (it == msg.end()) {
        if (fallback) return *fallback;
        schema_error(std::string("missing field '") + key + "'");
    }
    if (!it->is_string()) schema_error(std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

bool bool_field(const json& msg, const char* key, bool fallback)
{
    const auto it = msg.find(key);
    if (it == msg.end()) return fallback;
    if (!it->is_boolean()) schema_error(std::string("field '") + key + "' must be a boolean");
    return it->get<bool>();
}

json encode_observation(const Observation& obs)
{
    return {{"format", "png"}, {"width", obs.width}, {"height", obs.height}, {"data", base64_encode(encode_png(obs))}};
}

json summary_json(const MetricsSummary& s)
{
    auto ms = [](const MeanStd& m) { return json{{"mean", m.mean}, {"std", m.std}}; };
    return {{"episodes", s.episodes},
            {"success_rate", s.success_rate},
            {"episode_reward", ms(s.episode_reward)},
            {"episode_length", ms(s.episode_length)},
            {"movement_mm", ms(s.movement_mm)},
            {"boundary_px", ms(s.boundary_px)},
            {"retracement_mm", ms(s.retracement_mm)}};
}

}  // namespace

void PhantomRegistry::add(const std::string& id, VesselPhantom phantom)
{
    entries_[id] = make_env_context(std::move(phantom));
}

std::shared_ptr<const EnvContext> PhantomRegistry::find(const std::string& id) const
{
    const auto it = entries_.find(id);
    return it == entries_.end() ? nullptr : it->second;
}

TranscriptLog::TranscriptLog(const std::filesystem::path& path) : out_(path, std::ios::app)
{
    if (!out_) throw IoError("cannot open transcript " + path.string());
}

void TranscriptLog::record(const std::string& session, const char* direction, const std::string& line, double t)
{
    json entry = {{"t", t}, {"session", session}, {"dir", direction}};
    const json parsed = json::parse(line, nullptr, false);
    if (parsed.is_discarded())
        entry["raw"] = line;
    else
        entry["msg"] = parsed;
    std::lock_guard lock(mu_);
    out_ << entry.dump() << '\n';
    out_.flush();
}

Clock steady_clock_seconds()
{
    return [] {
        using namespace std::chrono;
        return duration<double>(steady_clock::now().time_since_epoch()).count();
    };
}

Session::Session(std::string id, const PhantomRegistry& registry, const ServiceConfig& cfg, Clock clock)
    : id_(std::move(id)), registry_(registry), cfg_(cfg), clock_(std::move(clock))
{
}

std::string Session::handle_line(const std::string& line)
{
    const json msg = json::parse(line, nullptr, false);
    if (msg.is_discarded())
        return json{{"seq", nullptr}, {"type", "error"}, {"code", "parse"}, {"detail", "request is not valid JSON"}}.dump();
    return handle(msg).dump();
}

json Session::handle(const json& msg)
{
    json reply = {{"seq", nullptr}};
    try {
        if (!msg.is_object()) schema_error("request must be a JSON object");
        const auto seq = msg.find("seq");
        if (seq == msg.end() || !seq->is_number_integer()) schema_error("field 'seq' must be an integer");
        reply["seq"] = *seq;
        const std::int64_t n = seq->get<std::int64_t>();
        if (last_seq_ && n <= *last_seq_) schema_error("sequence numbers must be strictly increasing");
        last_seq_ = n;
        if (closed_) throw ProtocolError{"bad_state", "session closed"};
        const std::string type = string_field(msg, "type");
        dispatch(type, msg, reply);
    } catch (const ProtocolError& e) {
        reply["type"] = "error";
        reply["code"] = e.code;
        reply["detail"] = e.detail;
    }
    return reply;
}

void Session::dispatch(const std::string& type, const json& msg, json& reply)
{
    if (type == "hello") return on_hello(msg, reply);
    if (type == "list_phantoms") return on_list_phantoms(reply);
    if (type == "reset") return on_reset(msg, reply);
    if (type == "step") return on_step(msg, reply);
    if (type == "render") return on_render(msg, reply);
    if (type == "motor_echo") return on_motor_echo(msg, reply);
    if (type == "metrics") return on_metrics(reply);
    if (type == "post_log") return on_post_log(msg, reply);
    if (type == "bye") {
        reply["type"] = "bye_ack";
        closed_ = true;
        return;
    }
    schema_error("unknown message type '" + type + "'");
}

void Session::on_hello(const json&, json& reply)
{
    reply["type"] = "hello_ack";
    reply["protocol"] = kProtocolVersion;
    reply["session"] = id_;
}

void Session::on_list_phantoms(json& reply)
{
    json list = json::array();
    for (const auto& [id, ctx] : registry_.all()) {
        json targets = json::array();
        for (const auto& [name, p] : ctx->phantom.targets) targets.push_back(name);
        list.push_back({{"id", id},
                        {"width", ctx->phantom.mask.width()},
                        {"height", ctx->phantom.mask.height()},
                        {"px_per_mm", ctx->phantom.px_per_mm},
                        {"targets", targets}});
    }
    reply["type"] = "list_phantoms_ack";
    reply["phantoms"] = std::move(list);
}

void Session::on_reset(const json& msg, json& reply)
{
    const std::string phantom = string_field(msg, "phantom");
    const std::string target = string_field(msg, "target");
    const std::string mode = string_field(msg, "mode", std::string("agent"));
    const auto seed_it = msg.find("seed");
    std::uint64_t seed = 0;
    if (seed_it != msg.end()) {
        if (!seed_it->is_number_unsigned()) schema_error("field 'seed' must be a non-negative integer");
        seed = seed_it->get<std::uint64_t>();
    }
    const bool render = bool_field(msg, "render", false);
    if (mode != "agent" && mode != "teleop") schema_error("field 'mode' must be 'agent' or 'teleop'");

    const auto ctx = registry_.find(phantom);
    if (!ctx) schema_error("unknown phantom '" + phantom + "'");
    if (!ctx->phantom.targets.contains(target)) schema_error("phantom '" + phantom + "' has no target '" + target + "'");

    EnvConfig cfg = cfg_.env;
    cfg.target = target;
    cfg.render_observations = false;
    Env env(ctx, cfg);
    Observation obs;
    try {
        obs = env.reset(seed);
    } catch (const Unreachable& e) {
        throw ProtocolError{"unreachable", e.what()};
    }

    env_.emplace(std::move(env));
    phantom_id_ = phantom;
    mode_ = mode == "teleop" ? SessionMode::teleop : SessionMode::agent;
    episode_seed_ = seed;
    reset_time_ = clock_();
    current_ = EpisodeRecord{};
    current_.target = target;
    current_.seed = seed;

    const GuidewireState& s = env_->state();
    reply["type"] = "reset_ack";
    reply["phantom"] = phantom;
    reply["target"] = target;
    reply["mode"] = mode;
    reply["tip"] = {s.tip.x, s.tip.y};
    reply["heading_deg"] = s.heading_deg + 0.0;  // no negative zero on the wire
    reply["target_px"] = {env_->target().x, env_->target().y};
    reply["plan"] = {{"points", env_->plan().size()}, {"length_px", env_->plan().length()}};
    reply["max_steps"] = cfg.max_steps;
    reply["limits"] = {{"translate_mm", cfg.limits.max_translate_mm}, {"rotate_deg", cfg.limits.max_rotate_deg}};
    if (render) reply["observation"] = encode_observation(obs);
}

void Session::on_step(const json& msg, json& reply)
{
    if (!env_) throw ProtocolError{"bad_state", "step before reset"};
    if (env_->done()) throw ProtocolError{"bad_state", "episode finished; send reset"};
    const Action action = clamp_action({number_field(msg, "translate_mm"), number_field(msg, "rotate_deg")},
                                       env_->config().limits);
    const bool render = bool_field(msg, "render", false);

    const StepResult r = env_->step(action);
    current_.steps.push_back({action, r.info.executed_mm, r.info.tip, r.reward});
    current_.episode_return += r.reward;
    current_.kind = r.info.kind;

    reply["type"] = "step_ack";
    reply["step"] = r.info.step;
    reply["reward"] = r.reward;
    reply["done"] = r.done;
    reply["kind"] = to_string(r.info.kind);
    reply["tip"] = {r.info.tip.x, r.info.tip.y};
    reply["heading_deg"] = r.info.heading_deg + 0.0;
    reply["cum_signed_mm"] = r.info.cum_signed_mm;
    reply["executed_mm"] = r.info.executed_mm;
    if (r.done) {
        reply["retract_to_start_mm"] = r.info.retract_to_start_mm;
        finished_.push_back(current_);
        if (mode_ == SessionMode::teleop && r.info.kind == Termination::success) {
            const double elapsed = clock_() - reset_time_;
            reply["elapsed_s"] = elapsed;
            json run = {{"session", id_},   {"phantom", phantom_id_},    {"target", current_.target},
                        {"mode", "teleop"}, {"elapsed_s", elapsed},     {"steps", r.info.step}};
            teleop_runs_.push_back(run);
            append_teleop_log(run);
        }
    }
    if (render) reply["observation"] = encode_observation(env_->observe());
}

void Session::on_render(const json& msg, json& reply)
{
    const std::string format = string_field(msg, "format", std::string("png"));
    if (format != "png") schema_error("unsupported render format '" + format + "'");
    if (!env_) throw ProtocolError{"bad_state", "render before reset"};
    reply["type"] = "render_ack";
    reply["observation"] = encode_observation(env_->observe());
}

void Session::on_motor_echo(const json& msg, json& reply)
{
    MotorParams p = cfg_.motor;
    if (const auto it = msg.find("params"); it != msg.end()) {
        if (!it->is_object()) schema_error("field 'params' must be an object");
        p.rpm = number_field(*it, "rpm", p.rpm);
        p.d = number_field(*it, "d", p.d);
        p.r = number_field(*it, "r", p.r);
        p.epsilon = number_field(*it, "epsilon", p.epsilon);
        p.c = number_field(*it, "c", p.c);
    }
    const double translate = number_field(msg, "translate_mm", 0.0);
    const double rotate = number_field(msg, "rotate_deg", 0.0);
    try {
        reply["push_pull_ms"] = push_pull_duration_ms(std::abs(translate), p);
        reply["rotation_ms"] = rotation_duration_ms(std::abs(rotate), p);
    } catch (const InvalidParams& e) {
        schema_error(e.what());
    }
    reply["type"] = "motor_echo_ack";
    reply["push_pull_direction"] = translate > 0.0 ? "push" : translate < 0.0 ? "pull" : "none";
    reply["rotation_direction"] = rotate > 0.0 ? "ccw" : rotate < 0.0 ? "cw" : "none";
}

void Session::on_metrics(json& reply)
{
    reply["type"] = "metrics_ack";
    reply["episodes"] = finished_.size();
    if (!finished_.empty()) {
        const auto ctx = registry_.find(phantom_id_);
        reply["summary"] = summary_json(summarize(finished_, ctx->distance));
    }
    reply["teleop"] = teleop_runs_;
}

void Session::on_post_log(const json& msg, json& reply)
{
    const auto it = msg.find("log");
    if (it == msg.end() || !it->is_object()) schema_error("field 'log' must be an object");
    json entry = *it;
    if (!entry.contains("target") || !entry["target"].is_string()) schema_error("log.target must be a string");
    if (!entry.contains("elapsed_s") || !entry["elapsed_s"].is_number()) schema_error("log.elapsed_s must be a number");
    entry["session"] = id_;
    entry["mode"] = "teleop";
    entry["source"] = "client";
    append_teleop_log(entry);
    reply["type"] = "post_log_ack";
}

void Session::append_teleop_log(const json& entry)
{
    if (!cfg_.teleop_log) return;
    static std::mutex mu;
    std::lock_guard lock(mu);
    std::ofstream out(*cfg_.teleop_log, std::ios::app);
    if (out) out << entry.dump() << '\n';
}

}  // namespace vnav
