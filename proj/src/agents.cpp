#include "vnav/agents.hpp"

#include <algorithm>
#include <cmath>

#include "vnav/errors.hpp"

namespace vnav {

namespace {

constexpr double kMinPushMm = 1.0;

bool visible(const GridMask& lumen, Vec2 a, Vec2 b)
{
    const double len = distance(a, b);
    const int n = static_cast<int>(std::ceil(len / kSubstepPx));
    for (int i = 1; i <= n; ++i) {
        const double t = static_cast<double>(i) / n;
        if (!lumen.is_vessel(Vec2{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)})) return false;
    }
    return true;
}

// Free distance along `u` before the ray leaves the lumen, capped at `limit`.
double free_run(const GridMask& lumen, Vec2 tip, Vec2 u, double limit)
{
    double s = 0.0;
    while (s + kSubstepPx <= limit && lumen.is_vessel(Vec2{tip.x + (s + kSubstepPx) * u.x, tip.y + (s + kSubstepPx) * u.y}))
        s += kSubstepPx;
    return s;
}

}  // namespace

Action greedy_path_follow(Vec2 tip, double heading_deg, const PathPlan& plan, double px_per_mm,
                          const ActionLimits& limits, const GreedyConfig& cfg, const GridMask* lumen)
{
    if (plan.empty()) throw InvalidParams("greedy controller needs a non-empty plan");
    const std::size_t j = nearest_path_index(plan, tip);
    if (distance(tip, to_vec(plan.points[j])) > cfg.recovery_px) return {-limits.max_translate_mm / 2.0, 0.0};

    Vec2 aim = point_at_length(plan, plan.cum_length[j] + cfg.lookahead_px);
    if (lumen && !visible(*lumen, tip, aim)) {
        // Farthest path vertex inside the lookahead that the tip can see.
        aim = to_vec(plan.points[j]);
        for (std::size_t k = j + 1; k < plan.points.size(); ++k) {
            if (plan.cum_length[k] - plan.cum_length[j] > cfg.lookahead_px) break;
            if (!visible(*lumen, tip, to_vec(plan.points[k]))) break;
            aim = to_vec(plan.points[k]);
        }
    }
    double rotate = 0.0;
    if (distance(aim, tip) > 1e-9) rotate = wrap_deg(heading_of(tip, aim) - heading_deg);
    rotate = std::clamp(rotate, -limits.max_rotate_deg, limits.max_rotate_deg);

    // Push only as far as the path ahead stays within straight_tolerance_px of
    // the new heading line, so one step never cuts across a bend.
    const Vec2 u = heading_dir(heading_deg + rotate);
    double reach_px = 0.0;
    for (std::size_t k = j; k < plan.points.size(); ++k) {
        const double dx = plan.points[k].x - tip.x;
        const double dy = plan.points[k].y - tip.y;
        const double along = dx * u.x + dy * u.y;
        const double across = std::abs(dx * u.y - dy * u.x);
        if (across > cfg.straight_tolerance_px || along < -cfg.straight_tolerance_px) break;
        reach_px = std::max(reach_px, along);
    }

    if (lumen) reach_px = std::min(reach_px, free_run(*lumen, tip, u, reach_px));

    const double remaining_mm = remaining_length(plan, j) / px_per_mm;
    const double push_mm = std::min({reach_px / px_per_mm, std::max(remaining_mm, kMinPushMm)});
    const double translate = std::clamp(push_mm, kMinPushMm, limits.max_translate_mm);
    return {translate, rotate};
}

Action GreedyPolicy::act(const PolicyInput& in)
{
    return greedy_path_follow(in.tip, in.heading_deg, *in.plan, in.px_per_mm, in.limits, cfg_, in.lumen);
}

Action RandomPolicy::sample(const ActionLimits& limits)
{
    std::uniform_real_distribution<double> t(-limits.max_translate_mm, limits.max_translate_mm);
    std::uniform_real_distribution<double> r(-limits.max_rotate_deg, limits.max_rotate_deg);
    const double translate = t(rng_);
    return {translate, r(rng_)};
}

Action RandomPolicy::act(const PolicyInput& in) { return sample(in.limits); }

std::unique_ptr<Policy> random_policy(std::uint64_t seed) { return std::make_unique<RandomPolicy>(seed); }

std::uint64_t episode_seed(std::uint64_t base, std::uint64_t episode)
{
    // splitmix64 finalizer
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (episode + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace vnav
