#include "vnav/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "vnav/errors.hpp"

namespace vnav {

std::string to_string(Termination t)
{
    switch (t) {
    case Termination::success: return "success";
    case Termination::out_of_range: return "out_of_range";
    case Termination::timeout: return "timeout";
    case Termination::none: break;
    }
    return "none";
}

Termination parse_termination(const std::string& s)
{
    if (s == "success") return Termination::success;
    if (s == "out_of_range") return Termination::out_of_range;
    if (s == "timeout") return Termination::timeout;
    if (s == "none") return Termination::none;
    throw ParseError("unknown termination kind '" + s + "'");
}

Observation render_observation(const GrayImage& base, Vec2 tip, Pixel target, const PathPlan& plan,
                               const OverlayConfig& cfg)
{
    const int w = base.width;
    const int h = base.height;
    std::vector<std::uint8_t> region(static_cast<std::size_t>(w) * h, 0);

    auto stamp = [&](Vec2 c, int radius, std::uint8_t label) {
        const double r2 = double(radius) * radius;
        const int x0 = std::max(0, static_cast<int>(std::floor(c.x - radius)));
        const int x1 = std::min(w - 1, static_cast<int>(std::ceil(c.x + radius)));
        const int y0 = std::max(0, static_cast<int>(std::floor(c.y - radius)));
        const int y1 = std::min(h - 1, static_cast<int>(std::ceil(c.y + radius)));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const double dx = x - c.x;
                const double dy = y - c.y;
                if (dx * dx + dy * dy <= r2) region[static_cast<std::size_t>(y) * w + x] = label;
            }
    };
    // Later stamps win, so paint in reverse priority.
    for (const Pixel& p : plan.points) stamp(to_vec(p), cfg.r3, 3);
    stamp(to_vec(target), cfg.r2, 2);
    stamp(tip, cfg.r1, 1);

    auto blend = [](std::uint8_t i, std::uint8_t c, double a) {
        return static_cast<std::uint8_t>(std::clamp(std::lround((1.0 - a) * i + a * c), 0L, 255L));
    };
    Observation out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::uint8_t i = base.at(x, y);
            const std::uint8_t label = region[static_cast<std::size_t>(y) * w + x];
            if (label == 0) {
                out.set(x, y, {i, i, i});
                continue;
            }
            const Rgb& c = label == 1 ? cfg.c1 : label == 2 ? cfg.c2 : cfg.c3;
            const double a = label == 1 ? cfg.alpha1 : label == 2 ? cfg.alpha2 : cfg.alpha3;
            out.set(x, y, {blend(i, c[0], a), blend(i, c[1], a), blend(i, c[2], a)});
        }
    return out;
}

Termination classify_reward(Vec2 tip, Pixel target, double cum_signed_mm, const RewardConfig& cfg)
{
    if (distance(tip, to_vec(target)) <= cfg.delta_px) return Termination::success;
    const double d_f = cfg.d_f_mm.value_or(std::numeric_limits<double>::infinity());
    if (cum_signed_mm > d_f || cum_signed_mm < -cfg.d_b_mm) return Termination::out_of_range;
    return Termination::none;
}

double compute_reward(Vec2 tip, const PathPlan& plan, Pixel target, double cum_signed_mm, const RewardConfig& cfg)
{
    switch (classify_reward(tip, target, cum_signed_mm, cfg)) {
    case Termination::success: return cfg.r_success;
    case Termination::out_of_range: return cfg.r_boundary;
    default: break;
    }
    const std::size_t j = nearest_path_index(plan, tip);
    const double off_path = distance(tip, to_vec(plan.points[j]));
    return -(std::exp(cfg.omega1 * off_path) + cfg.omega2 * remaining_length(plan, j));
}

std::shared_ptr<const EnvContext> make_env_context(VesselPhantom phantom)
{
    auto ctx = std::make_shared<EnvContext>();
    ctx->heatmap = ndt_heatmap(phantom.mask);
    ctx->distance = distance_transform(phantom.mask);
    ctx->view = phantom_view(phantom);
    ctx->phantom = std::move(phantom);
    return ctx;
}

Env::Env(std::shared_ptr<const EnvContext> ctx, EnvConfig cfg) : ctx_(std::move(ctx)), cfg_(std::move(cfg))
{
    if (cfg_.max_steps < 1) throw InvalidParams("max_steps must be >= 1");
    const RewardConfig& r = cfg_.reward;
    if (!(r.delta_px > 0.0)) throw InvalidParams("delta must be > 0");
    if (!(r.r_success > 0.0) || !(r.r_boundary < 0.0)) throw InvalidParams("need R_success > 0 > R_boundary");
    if (r.omega1 < 0.0 || r.omega2 < 0.0) throw InvalidParams("reward weights must be >= 0");
    if (!(r.d_b_mm > 0.0) || (r.d_f_mm && !(*r.d_f_mm > 0.0))) throw InvalidParams("movement limits must be > 0");
    const OverlayConfig& o = cfg_.overlay;
    for (double a : {o.alpha1, o.alpha2, o.alpha3})
        if (!(a >= 0.0 && a <= 1.0)) throw InvalidParams("overlay alphas must lie in [0, 1]");
    if (o.r1 < 1 || o.r2 < 1 || o.r3 < 1) throw InvalidParams("overlay radii must be >= 1");
}

Observation Env::reset(std::uint64_t seed)
{
    const VesselPhantom& ph = ctx_->phantom;
    const auto it = ph.targets.find(cfg_.target);
    if (it == ph.targets.end()) throw InvalidParams("phantom has no target named '" + cfg_.target + "'");
    target_ = it->second;

    Vec2 start = to_vec(ph.start);
    if (cfg_.start_jitter_px > 0.0) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(-cfg_.start_jitter_px, cfg_.start_jitter_px);
        for (int attempt = 0; attempt < 64; ++attempt) {
            const Vec2 c{start.x + u(rng), start.y + u(rng)};
            if (distance(c, start) <= cfg_.start_jitter_px && ph.mask.is_vessel(c)) {
                start = c;
                break;
            }
        }
    }
    state_ = sim_reset_at(ph, start);

    // The plan depends only on the start pixel; reuse it across resets.
    const Pixel start_px = to_pixel(start);
    if (!plan_start_ || *plan_start_ != start_px || plan_.points.back() != target_) {
        plan_ = plan_bda_star(ph.mask, ctx_->heatmap, start_px, target_, cfg_.planner);
        plan_start_ = start_px;
    }
    reward_ = cfg_.reward;
    if (!reward_.d_f_mm) reward_.d_f_mm = 1.25 * plan_.length() / ph.px_per_mm;

    active_ = true;
    done_ = false;
    kind_ = Termination::none;
    return observe();
}

StepResult Env::step(const Action& action)
{
    if (!active_) throw Error("step before reset");
    if (done_) throw EpisodeFinished();

    const VesselPhantom& ph = ctx_->phantom;
    state_ = sim_step(state_, action, ph, cfg_.limits);

    StepResult out;
    out.reward = compute_reward(state_.tip, plan_, target_, state_.cum_signed_mm, reward_);
    Termination kind = classify_reward(state_.tip, target_, state_.cum_signed_mm, reward_);
    if (kind == Termination::none && state_.step_count >= cfg_.max_steps) kind = Termination::timeout;
    out.done = kind != Termination::none;
    if (out.done) {
        done_ = true;
        kind_ = kind;
    }

    out.info.tip = state_.tip;
    out.info.heading_deg = state_.heading_deg;
    out.info.cum_signed_mm = state_.cum_signed_mm;
    out.info.executed_mm = state_.last_executed_mm;
    out.info.blocked = state_.last_blocked;
    out.info.step = state_.step_count;
    out.info.kind = kind;
    out.info.retract_to_start_mm = out.done ? state_.inserted_mm : 0.0;
    if (cfg_.render_observations) out.observation = observe();
    return out;
}

Observation Env::observe() const
{
    return render_observation(ctx_->view, state_.tip, target_, plan_, cfg_.overlay);
}

PolicyInput Env::policy_input() const
{
    PolicyInput in;
    in.tip = state_.tip;
    in.heading_deg = state_.heading_deg;
    in.plan = &plan_;
    in.lumen = &ctx_->phantom.mask;
    in.target = target_;
    in.cum_signed_mm = state_.cum_signed_mm;
    in.step = state_.step_count;
    in.px_per_mm = ctx_->phantom.px_per_mm;
    in.limits = cfg_.limits;
    return in;
}

nlohmann::json step_log(const Action& action, const StepResult& r)
{
    return {{"step", r.info.step},
            {"translate_mm", action.translate_mm},
            {"rotate_deg", action.rotate_deg},
            {"executed_mm", r.info.executed_mm},
            {"tip", {r.info.tip.x, r.info.tip.y}},
            {"heading_deg", r.info.heading_deg},
            {"cum_signed_mm", r.info.cum_signed_mm},
            {"reward", r.reward},
            {"done", r.done},
            {"kind", to_string(r.info.kind)}};
}

}  // namespace vnav
