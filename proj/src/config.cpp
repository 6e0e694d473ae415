#include "vnav/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "vnav/errors.hpp"

namespace vnav {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt(double v)
{
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

double parse_double(const std::string& key, const std::string& v)
{
    double out = 0.0;
    const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || end != v.data() + v.size() || !std::isfinite(out))
        throw InvalidParams(key + ": expected a number, got '" + v + "'");
    return out;
}

int parse_int(const std::string& key, const std::string& v)
{
    int out = 0;
    const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || end != v.data() + v.size())
        throw InvalidParams(key + ": expected an integer, got '" + v + "'");
    return out;
}

std::string fmt_rgb(const Rgb& c) { return std::to_string(c[0]) + "," + std::to_string(c[1]) + "," + std::to_string(c[2]); }

Rgb parse_rgb(const std::string& key, const std::string& v)
{
    Rgb c{};
    std::istringstream in(v);
    std::string part;
    int i = 0;
    while (std::getline(in, part, ',')) {
        if (i >= 3) throw InvalidParams(key + ": expected r,g,b");
        const int x = parse_int(key, trim(part));
        if (x < 0 || x > 255) throw InvalidParams(key + ": channel out of range 0..255");
        c[i++] = static_cast<std::uint8_t>(x);
    }
    if (i != 3) throw InvalidParams(key + ": expected r,g,b");
    return c;
}

struct Entry {
    const char* key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

#define VNAV_DOUBLE(KEY, FIELD)                                                                     \
    Entry{KEY, [](const RunConfig& c) { return fmt(c.FIELD); },                                     \
          [](RunConfig& c, const std::string& v) { c.FIELD = parse_double(KEY, v); }}
#define VNAV_INT(KEY, FIELD)                                                                        \
    Entry{KEY, [](const RunConfig& c) { return std::to_string(c.FIELD); },                          \
          [](RunConfig& c, const std::string& v) { c.FIELD = parse_int(KEY, v); }}
#define VNAV_RGB(KEY, FIELD)                                                                        \
    Entry{KEY, [](const RunConfig& c) { return fmt_rgb(c.FIELD); },                                 \
          [](RunConfig& c, const std::string& v) { c.FIELD = parse_rgb(KEY, v); }}

const std::vector<Entry>& entries()
{
    static const std::vector<Entry> table = {
        VNAV_DOUBLE("env.max_rotate_deg", env.limits.max_rotate_deg),
        VNAV_INT("env.max_steps", env.max_steps),
        VNAV_DOUBLE("env.max_translate_mm", env.limits.max_translate_mm),
        VNAV_DOUBLE("env.start_jitter_px", env.start_jitter_px),
        VNAV_DOUBLE("greedy.lookahead_px", greedy.lookahead_px),
        VNAV_DOUBLE("greedy.recovery_px", greedy.recovery_px),
        VNAV_DOUBLE("greedy.straight_tolerance_px", greedy.straight_tolerance_px),
        VNAV_DOUBLE("motor.c", motor.c),
        VNAV_DOUBLE("motor.d", motor.d),
        VNAV_DOUBLE("motor.epsilon", motor.epsilon),
        VNAV_DOUBLE("motor.r", motor.r),
        VNAV_DOUBLE("motor.rpm", motor.rpm),
        VNAV_DOUBLE("overlay.alpha1", env.overlay.alpha1),
        VNAV_DOUBLE("overlay.alpha2", env.overlay.alpha2),
        VNAV_DOUBLE("overlay.alpha3", env.overlay.alpha3),
        VNAV_RGB("overlay.c1", env.overlay.c1),
        VNAV_RGB("overlay.c2", env.overlay.c2),
        VNAV_RGB("overlay.c3", env.overlay.c3),
        VNAV_INT("overlay.r1", env.overlay.r1),
        VNAV_INT("overlay.r2", env.overlay.r2),
        VNAV_INT("overlay.r3", env.overlay.r3),
        VNAV_DOUBLE("phantom.corridor_length_mm", phantom.corridor_length_mm),
        VNAV_DOUBLE("phantom.corridor_width_mm", phantom.corridor_width_mm),
        VNAV_INT("phantom.height", phantom.height),
        VNAV_DOUBLE("phantom.lumen_mm", phantom.lumen_mm),
        VNAV_DOUBLE("phantom.px_per_mm", phantom.px_per_mm),
        VNAV_INT("phantom.seed", phantom.seed),
        VNAV_INT("phantom.width", phantom.width),
        VNAV_INT("planner.connectivity", env.planner.connectivity),
        Entry{"planner.mode", [](const RunConfig& c) { return to_string(c.env.planner.centering); },
              [](RunConfig& c, const std::string& v) { c.env.planner.centering = parse_centering_mode(v); }},
        VNAV_DOUBLE("planner.omega", env.planner.omega),
        VNAV_DOUBLE("q.cell_px", q.disc.cell_px),
        VNAV_DOUBLE("q.discount", q.discount),
        VNAV_DOUBLE("q.epsilon_decay_fraction", q.epsilon_decay_fraction),
        VNAV_DOUBLE("q.epsilon_end", q.epsilon_end),
        VNAV_DOUBLE("q.epsilon_start", q.epsilon_start),
        VNAV_INT("q.heading_bins", q.disc.heading_bins),
        VNAV_DOUBLE("q.initial_value", q.initial_value),
        VNAV_DOUBLE("q.learning_rate", q.learning_rate),
        VNAV_DOUBLE("report.step_overhead_ms", report_step_overhead_ms),
        VNAV_DOUBLE("reward.d_b_mm", env.reward.d_b_mm),
        Entry{"reward.d_f_mm",
              [](const RunConfig& c) { return c.env.reward.d_f_mm ? fmt(*c.env.reward.d_f_mm) : std::string("auto"); },
              [](RunConfig& c, const std::string& v) {
                  if (v == "auto")
                      c.env.reward.d_f_mm.reset();
                  else
                      c.env.reward.d_f_mm = parse_double("reward.d_f_mm", v);
              }},
        VNAV_DOUBLE("reward.delta_px", env.reward.delta_px),
        VNAV_DOUBLE("reward.omega1", env.reward.omega1),
        VNAV_DOUBLE("reward.omega2", env.reward.omega2),
        VNAV_DOUBLE("reward.r_boundary", env.reward.r_boundary),
        VNAV_DOUBLE("reward.r_success", env.reward.r_success),
        Entry{"serve.address", [](const RunConfig& c) { return c.serve.address; },
              [](RunConfig& c, const std::string& v) { c.serve.address = v; }},
        VNAV_INT("serve.tcp_port", serve.tcp_port),
        VNAV_INT("serve.threads", serve.threads),
        VNAV_INT("serve.ws_port", serve.ws_port),
    };
    return table;
}

#undef VNAV_DOUBLE
#undef VNAV_INT
#undef VNAV_RGB

}  // namespace

void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value)
{
    for (const Entry& e : entries()) {
        if (key == e.key) {
            e.set(cfg, value);
            return;
        }
    }
    throw InvalidParams("unknown config key '" + key + "'");
}

void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin)
{
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        try {
            apply_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const InvalidParams& e) {
            throw ParseError(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    RunConfig cfg;
    apply_config_text(cfg, buf.str(), path.string());
    return cfg;
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg)
{
    std::vector<std::pair<std::string, std::string>> out;
    for (const Entry& e : entries()) out.emplace_back(e.key, e.get(cfg));
    return out;
}

std::string config_hash(const RunConfig& cfg)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [k, v] : config_entries(cfg)) {
        for (const char ch : k + "=" + v + "\n") {
            h ^= static_cast<unsigned char>(ch);
            h *= 0x100000001b3ULL;
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace vnav
