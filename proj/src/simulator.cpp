#include "vnav/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vnav/errors.hpp"

namespace vnav {

Action clamp_action(const Action& a, const ActionLimits& limits)
{
    auto clamp = [](double v, double lim) { return std::isfinite(v) ? std::clamp(v, -lim, lim) : 0.0; };
    return {clamp(a.translate_mm, limits.max_translate_mm), clamp(a.rotate_deg, limits.max_rotate_deg)};
}

double initial_heading(const VesselPhantom& phantom)
{
    const auto& trunk = phantom.trunk_polyline;
    if (trunk.size() < 2) return 0.0;
    const std::size_t ahead = std::min<std::size_t>(10, trunk.size() - 1);
    return heading_of(to_vec(trunk.front()), to_vec(trunk[ahead]));
}

GuidewireState sim_reset(const VesselPhantom& phantom) { return sim_reset_at(phantom, to_vec(phantom.start)); }

GuidewireState sim_reset_at(const VesselPhantom& phantom, Vec2 tip)
{
    if (!phantom.mask.is_vessel(tip)) throw OffVessel("reset position is not on the lumen");
    GuidewireState s;
    s.tip = tip;
    s.heading_deg = initial_heading(phantom);
    return s;
}

namespace {

// Advances by up to `length_px`; returns the distance actually covered.
double advance(GuidewireState& s, double length_px, const GridMask& mask)
{
    double moved = 0.0;
    double remaining = length_px;
    while (remaining > 1e-12) {
        const double step = std::min(kSubstepPx, remaining);
        bool advanced = false;
        for (double dev = 0.0; dev <= kSlideConeDeg + 1e-9 && !advanced; dev += kSlideIncrementDeg) {
            // Equal deviations: counter-clockwise first.
            for (const double sign : {1.0, -1.0}) {
                const double dir = wrap_deg(s.heading_deg + sign * dev);
                const Vec2 d = heading_dir(dir);
                const Vec2 cand{s.tip.x + step * d.x, s.tip.y + step * d.y};
                if (mask.is_vessel(cand)) {
                    s.body.push_back(s.tip);
                    s.tip = cand;
                    s.heading_deg = dir;
                    advanced = true;
                    break;
                }
                if (dev == 0.0) break;
            }
        }
        if (!advanced) {
            s.last_blocked = true;
            break;
        }
        moved += step;
        remaining -= step;
    }
    return moved;
}

// Retraces the body by up to `length_px`; returns the distance actually covered.
double retract(GuidewireState& s, double length_px, const GridMask& mask)
{
    double moved = 0.0;
    double remaining = length_px;
    while (remaining > 1e-12 && !s.body.empty()) {
        const Vec2 back = s.body.back();
        const double seg = distance(s.tip, back);
        if (seg <= remaining + 1e-12) {
            s.tip = back;
            s.body.pop_back();
            moved += seg;
            remaining -= seg;
            continue;
        }
        const double u = remaining / seg;
        const Vec2 cand{s.tip.x + u * (back.x - s.tip.x), s.tip.y + u * (back.y - s.tip.y)};
        // A partial segment may clip a background corner; stop short instead.
        if (mask.is_vessel(cand)) {
            s.tip = cand;
            moved += remaining;
        }
        break;
    }
    return moved;
}

}  // namespace

GuidewireState sim_step(const GuidewireState& state, const Action& action, const VesselPhantom& phantom,
                        const ActionLimits& limits)
{
    const Action a = clamp_action(action, limits);
    GuidewireState s = state;
    s.last_blocked = false;
    s.heading_deg = wrap_deg(s.heading_deg + a.rotate_deg);

    const double ppm = phantom.px_per_mm;
    double executed_mm = 0.0;
    if (a.translate_mm > 0.0) {
        executed_mm = advance(s, a.translate_mm * ppm, phantom.mask) / ppm;
        s.inserted_mm += executed_mm;
    } else if (a.translate_mm < 0.0) {
        // A pull covering the whole insertion retracts the whole body, so
        // rounding drift in inserted_mm cannot leave stranded segments.
        const bool all = -a.translate_mm >= s.inserted_mm - 1e-9;
        const double want_px = all ? std::numeric_limits<double>::infinity() : -a.translate_mm * ppm;
        executed_mm = -retract(s, want_px, phantom.mask) / ppm;
        s.inserted_mm = s.body.empty() ? 0.0 : std::max(0.0, s.inserted_mm + executed_mm);
    }
    s.cum_signed_mm += executed_mm;
    s.last_executed_mm = executed_mm;
    s.step_count += 1;
    return s;
}

nlohmann::json state_snapshot(const GuidewireState& state)
{
    return {{"tip", {state.tip.x, state.tip.y}},
            {"heading_deg", state.heading_deg},
            {"inserted_mm", state.inserted_mm},
            {"cum_signed_mm", state.cum_signed_mm},
            {"step_count", state.step_count}};
}

}  // namespace vnav
