#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "vnav/env.hpp"

namespace vnav {

class Policy {
public:
    virtual ~Policy() = default;
    virtual Action act(const PolicyInput& in) = 0;
    // Called at the start of every episode.
    virtual void reset(std::uint64_t /*seed*/) {}
    virtual bool deterministic() const { return true; }
    virtual std::string name() const = 0;
};

using PolicyFactory = std::function<std::unique_ptr<Policy>()>;
using EnvFactory = std::function<Env()>;

struct GreedyConfig {
    double lookahead_px = 24.0;
    // Beyond this distance from the path the controller backs off by S/2.
    double recovery_px = 30.0;
    double straight_tolerance_px = 3.0;
};

// Steers toward the path point `lookahead_px` of arc length past the nearest
// path index and pushes forward by at most S, no further than the remaining
// path and the stretch of path that runs straight along the new heading.
// With a lumen mask the aim point is pulled back to the farthest visible path
// vertex and the push stops short of the wall ahead.
Action greedy_path_follow(Vec2 tip, double heading_deg, const PathPlan& plan, double px_per_mm,
                          const ActionLimits& limits, const GreedyConfig& cfg = {},
                          const GridMask* lumen = nullptr);

class GreedyPolicy : public Policy {
public:
    explicit GreedyPolicy(GreedyConfig cfg = {}) : cfg_(cfg) {}
    Action act(const PolicyInput& in) override;
    std::string name() const override { return "greedy"; }

private:
    GreedyConfig cfg_;
};

// Uniform actions over the clamped action box.
class RandomPolicy : public Policy {
public:
    explicit RandomPolicy(std::uint64_t seed = 0) : rng_(seed) {}
    Action act(const PolicyInput& in) override;
    Action sample(const ActionLimits& limits);
    void reset(std::uint64_t seed) override { rng_.seed(seed); }
    bool deterministic() const override { return false; }
    std::string name() const override { return "random"; }

private:
    std::mt19937_64 rng_;
};

std::unique_ptr<Policy> random_policy(std::uint64_t seed);

// Discretization of the privileged state and the 3x3 action grid.
struct QDiscretization {
    double cell_px = 10.0;
    int heading_bins = 8;
    std::array<double, 3> translate_mm{-10.0, 0.0, 20.0};
    std::array<double, 3> rotate_deg{-45.0, 0.0, 45.0};

    static constexpr int kActions = 9;
    Action action(int index) const { return {translate_mm[index / 3], rotate_deg[index % 3]}; }
    bool operator==(const QDiscretization&) const = default;
};

struct QKey {
    int cx = 0;
    int cy = 0;
    int heading = 0;
    auto operator<=>(const QKey&) const = default;
};

struct QTable {
    QDiscretization disc;
    double initial_value = 0.0;
    std::map<QKey, std::array<double, QDiscretization::kActions>> values;

    QKey key(Vec2 tip, double heading_deg) const;
    // Row for `k`, created at initial_value when missing.
    std::array<double, QDiscretization::kActions>& row(const QKey& k);
    // Greedy action index; ties go to the lowest index; unseen states use the initial row.
    int best_action(const QKey& k) const;
    bool operator==(const QTable&) const = default;
};

struct QHyperparams {
    QDiscretization disc;
    double learning_rate = 0.2;
    double discount = 0.95;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    // Fraction of the run over which epsilon decays linearly.
    double epsilon_decay_fraction = 0.6;
    double initial_value = 0.0;
};

struct TrainingEpisode {
    int episode = 0;
    double episode_return = 0.0;
    int length = 0;
    Termination kind = Termination::none;
};

struct QTrainingResult {
    QTable table;
    std::vector<TrainingEpisode> curve;
};

// Epsilon-greedy tabular Q-learning on privileged state; deterministic per seed.
QTrainingResult q_learning_train(const EnvFactory& make_env, int episodes, std::uint64_t seed,
                                 const QHyperparams& hp = {});

class QPolicy : public Policy {
public:
    explicit QPolicy(QTable table) : table_(std::move(table)) {}
    Action act(const PolicyInput& in) override;
    std::string name() const override { return "q"; }
    const QTable& table() const { return table_; }

private:
    QTable table_;
};

void save_qtable(const QTable& table, const std::filesystem::path& path);
QTable load_qtable(const std::filesystem::path& path);
// CSV header "episode,return,length".
void write_training_curve(const std::vector<TrainingEpisode>& curve, const std::filesystem::path& path);

// Per-episode seeds derived from a base seed.
std::uint64_t episode_seed(std::uint64_t base, std::uint64_t episode);

}  // namespace vnav
