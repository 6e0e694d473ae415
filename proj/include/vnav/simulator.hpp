#pragma once

#include <json.hpp>
#include <vector>

#include "vnav/geometry.hpp"
#include "vnav/phantom.hpp"

namespace vnav {

// Per-step action limits: translation in [-S, S] mm, rotation in [-R, R] degrees.
struct ActionLimits {
    double max_translate_mm = 20.0;
    double max_rotate_deg = 90.0;
};

struct Action {
    double translate_mm = 0.0;
    double rotate_deg = 0.0;
    bool operator==(const Action&) const = default;
};

Action clamp_action(const Action& a, const ActionLimits& limits);

struct GuidewireState {
    Vec2 tip;
    double heading_deg = 0.0;
    // Past tip positions, oldest first; the current tip is not included.
    std::vector<Vec2> body;
    double inserted_mm = 0.0;
    double cum_signed_mm = 0.0;
    int step_count = 0;
    // Delta of the most recent step.
    double last_executed_mm = 0.0;
    bool last_blocked = false;

    bool operator==(const GuidewireState&) const = default;
};

inline constexpr double kSubstepPx = 0.5;
inline constexpr double kSlideConeDeg = 60.0;
inline constexpr double kSlideIncrementDeg = 5.0;

GuidewireState sim_reset(const VesselPhantom& phantom);
// Reset with the tip placed at `tip` (must be a lumen position).
GuidewireState sim_reset_at(const VesselPhantom& phantom, Vec2 tip);

// Applies one clamped action: rotate, then advance along the heading with wall
// sliding or retract along the stored body. When the tip slides, the heading
// follows the executed direction.
GuidewireState sim_step(const GuidewireState& state, const Action& action, const VesselPhantom& phantom,
                        const ActionLimits& limits = {});

// Direction of the trunk polyline at its first point.
double initial_heading(const VesselPhantom& phantom);

nlohmann::json state_snapshot(const GuidewireState& state);

}  // namespace vnav
