#pragma once

#include <cstdint>
#include <json.hpp>
#include <memory>
#include <optional>
#include <string>

#include "vnav/image_io.hpp"
#include "vnav/phantom.hpp"
#include "vnav/planner.hpp"
#include "vnav/simulator.hpp"

namespace vnav {

// Marks blended into the camera frame: tip (1), target (2), planned path (3).
struct OverlayConfig {
    int r1 = 6;
    int r2 = 8;
    int r3 = 1;
    Rgb c1{255, 40, 40};
    Rgb c2{40, 220, 40};
    Rgb c3{60, 120, 255};
    double alpha1 = 1.0;
    double alpha2 = 0.8;
    double alpha3 = 0.6;
};

struct RewardConfig {
    double r_success = 50.0;
    double r_boundary = -50.0;
    double delta_px = 40.0;
    // Forward movement limit; unset means 1.25 x planned path length.
    std::optional<double> d_f_mm;
    double d_b_mm = 40.0;
    double omega1 = 0.005;
    double omega2 = 0.01;
};

struct EnvConfig {
    int max_steps = 50;
    ActionLimits limits;
    PlannerConfig planner;
    OverlayConfig overlay;
    RewardConfig reward;
    std::string target;
    // Uniform jitter of the start position per reset seed (0 disables).
    double start_jitter_px = 0.0;
    // Privileged-state agents can skip per-step image rendering.
    bool render_observations = true;
};

using Observation = RgbImage;

enum class Termination { none, success, out_of_range, timeout };
std::string to_string(Termination t);
Termination parse_termination(const std::string& s);

// Priority order: tip over target over path.
Observation render_observation(const GrayImage& base, Vec2 tip, Pixel target, const PathPlan& plan,
                               const OverlayConfig& cfg);

// Path-navigation reward: success inside delta, boundary penalty outside
// [-d_b, d_f], otherwise -(exp(omega1 * dist_to_path) + omega2 * remaining path).
double compute_reward(Vec2 tip, const PathPlan& plan, Pixel target, double cum_signed_mm, const RewardConfig& cfg);

// Which reward case applies (success / out_of_range / none for continuous).
Termination classify_reward(Vec2 tip, Pixel target, double cum_signed_mm, const RewardConfig& cfg);

// Shared immutable data for all environments over one phantom.
struct EnvContext {
    VesselPhantom phantom;
    ScalarField heatmap;
    ScalarField distance;
    GrayImage view;
};
std::shared_ptr<const EnvContext> make_env_context(VesselPhantom phantom);

struct StepInfo {
    Vec2 tip;
    double heading_deg = 0.0;
    double cum_signed_mm = 0.0;
    double executed_mm = 0.0;
    bool blocked = false;
    int step = 0;
    Termination kind = Termination::none;
    // Pull-back needed to return the wire to its start once the episode ends.
    double retract_to_start_mm = 0.0;
};

struct StepResult {
    std::optional<Observation> observation;
    double reward = 0.0;
    bool done = false;
    StepInfo info;
};

// Everything a privileged (non-pixel) controller may look at.
struct PolicyInput {
    Vec2 tip;
    double heading_deg = 0.0;
    const PathPlan* plan = nullptr;
    const GridMask* lumen = nullptr;
    Pixel target;
    double cum_signed_mm = 0.0;
    int step = 0;
    double px_per_mm = kDefaultPxPerMm;
    ActionLimits limits;
};

class Env {
public:
    Env(std::shared_ptr<const EnvContext> ctx, EnvConfig cfg);

    // Resets the wire, plans the path once and returns the first observation.
    // Throws InvalidParams for an unknown target and Unreachable from the planner.
    Observation reset(std::uint64_t seed = 0);
    // Throws EpisodeFinished after done and Error before the first reset.
    StepResult step(const Action& action);

    Observation observe() const;
    PolicyInput policy_input() const;

    bool active() const { return active_; }
    bool done() const { return done_; }
    const PathPlan& plan() const { return plan_; }
    const GuidewireState& state() const { return state_; }
    const EnvConfig& config() const { return cfg_; }
    const RewardConfig& effective_reward() const { return reward_; }
    const VesselPhantom& phantom() const { return ctx_->phantom; }
    const EnvContext& context() const { return *ctx_; }
    Pixel target() const { return target_; }
    Termination termination() const { return kind_; }

private:
    std::shared_ptr<const EnvContext> ctx_;
    EnvConfig cfg_;
    RewardConfig reward_;
    Pixel target_;
    PathPlan plan_;
    std::optional<Pixel> plan_start_;
    GuidewireState state_;
    bool active_ = false;
    bool done_ = false;
    Termination kind_ = Termination::none;
};

// One JSON-lines record for a step.
nlohmann::json step_log(const Action& action, const StepResult& result);

}  // namespace vnav
