#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "vnav/actuation.hpp"
#include "vnav/agents.hpp"
#include "vnav/env.hpp"

namespace vnav {

struct PhantomParams {
    int seed = 7;  // built-in aorta phantom
    int width = 512;
    int height = 512;
    double lumen_mm = 18.0;
    double px_per_mm = kDefaultPxPerMm;
    double corridor_length_mm = 100.0;
    double corridor_width_mm = 10.0;
};

struct ServeParams {
    std::string address = "127.0.0.1";
    int tcp_port = 7878;
    int ws_port = 7879;
    int threads = 2;
};

// Everything a CLI run can be configured with. Keys in a config file are
// "<section>.<field>", e.g. "planner.omega = 2" (see config_entries).
struct RunConfig {
    // Seeded episodes differ only through the start position, so runs jitter it.
    RunConfig() { env.start_jitter_px = 4.0; }

    PhantomParams phantom;
    EnvConfig env;
    GreedyConfig greedy;
    QHyperparams q;
    MotorParams motor;
    ServeParams serve;
    // Fixed per-step overhead added to motor run-times in `report`, ms.
    double report_step_overhead_ms = 0.0;
};

// Throws InvalidParams for an unknown key or a malformed value.
void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

// key = value lines; '#' starts a comment. Errors name the file and line.
RunConfig load_config(const std::filesystem::path& path);
void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin = "<config>");

// Every key with its current value, sorted by key.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg);

// FNV-1a 64 over the canonical "key=value\n" listing, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

}  // namespace vnav
