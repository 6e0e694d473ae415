#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vnav/agents.hpp"
#include "vnav/env.hpp"

namespace vnav {

struct StepRecord {
    Action action;  // commanded, after clamping
    double executed_mm = 0.0;
    Vec2 tip;
    double reward = 0.0;
    bool operator==(const StepRecord&) const = default;
};

struct EpisodeRecord {
    std::string target;
    std::uint64_t seed = 0;
    std::vector<StepRecord> steps;
    Termination kind = Termination::none;
    double episode_return = 0.0;

    int length() const { return static_cast<int>(steps.size()); }
    bool operator==(const EpisodeRecord&) const = default;
};

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
};

MeanStd mean_std(const std::vector<double>& values);

struct MetricsSummary {
    int episodes = 0;
    double success_rate = 0.0;
    MeanStd episode_reward;
    MeanStd episode_length;
    MeanStd movement_mm;
    MeanStd boundary_px;
    MeanStd retracement_mm;
};

// Per-episode metric values.
double movement_distance_mm(const EpisodeRecord& r);
double retracement_distance_mm(const EpisodeRecord& r);
// Mean distance-transform value over the visited tip pixels; nullopt with no steps.
std::optional<double> boundary_distance_px(const EpisodeRecord& r, const ScalarField& distance);

// Runs one episode of `policy` in `env`.
EpisodeRecord run_episode(Policy& policy, Env& env, std::uint64_t seed);

// Episode i uses episode_seed(seed, i) for both environment and policy;
// episodes are spread over `workers` threads without affecting results.
std::vector<EpisodeRecord> evaluate(const PolicyFactory& make_policy, const EnvFactory& make_env, int n_episodes,
                                    std::uint64_t seed, int workers = 1);

MetricsSummary summarize(const std::vector<EpisodeRecord>& records, const ScalarField& distance);
MetricsSummary summarize(const std::vector<EpisodeRecord>& records, const VesselPhantom& phantom);

// Background = phantom view, planned path, then per-episode tip marks.
RgbImage render_trajectories(const std::vector<EpisodeRecord>& records, const VesselPhantom& phantom,
                             const PathPlan* path = nullptr);
std::string trajectories_svg(const std::vector<EpisodeRecord>& records, const VesselPhantom& phantom,
                             const PathPlan* path = nullptr);
Rgb episode_color(std::size_t episode);

// One row per episode plus a "summary" row.
void write_metrics_csv(const std::vector<EpisodeRecord>& records, const ScalarField& distance,
                       const std::filesystem::path& path);

// JSON-lines, one step per line tagged with its episode index.
void write_records_jsonl(const std::vector<EpisodeRecord>& records, const std::filesystem::path& path);
std::vector<EpisodeRecord> read_records_jsonl(const std::filesystem::path& path);

}  // namespace vnav
