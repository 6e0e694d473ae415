#include "vnav/planner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>
#include <tuple>

#include "vnav/errors.hpp"
#include "vnav/image_io.hpp"

namespace vnav {

std::int64_t quantize_cost(double value) { return static_cast<std::int64_t>(std::ceil(value * kCostScale)); }

double boundary_term(const ScalarField& heatmap, double heat_max, Pixel n, CenteringMode mode)
{
    const double h = heatmap.at(n);
    return mode == CenteringMode::penalize_boundary ? heat_max - h : h;
}

namespace {

struct Neighbor {
    int dx, dy;
    bool diagonal;
};

constexpr Neighbor kNeighbors8[] = {{1, 0, false},  {-1, 0, false}, {0, 1, false}, {0, -1, false},
                                    {1, 1, true},   {-1, 1, true},  {1, -1, true}, {-1, -1, true}};

void check_endpoints(const GridMask& mask, Pixel start, Pixel goal)
{
    if (!mask.is_vessel(start))
        throw OffVessel("start (" + std::to_string(start.x) + ", " + std::to_string(start.y) + ") is not a vessel pixel");
    if (!mask.is_vessel(goal))
        throw OffVessel("goal (" + std::to_string(goal.x) + ", " + std::to_string(goal.y) + ") is not a vessel pixel");
}

PathPlan search(const GridMask& mask, const std::vector<std::int64_t>& node_cost, Pixel start, Pixel goal,
                int connectivity)
{
    check_endpoints(mask, start, goal);
    if (connectivity != 4 && connectivity != 8) throw InvalidParams("connectivity must be 4 or 8");

    const std::int64_t orth = quantize_cost(1.0);
    const std::int64_t diag = quantize_cost(std::sqrt(2.0));
    const std::size_t n = mask.size();
    constexpr std::int64_t unset = std::numeric_limits<std::int64_t>::max();

    // Floor minus one keeps the heuristic below the rounded-up step costs.
    auto heuristic = [&](Pixel p) {
        const std::int64_t h = static_cast<std::int64_t>(std::floor(distance(p, goal) * kCostScale)) - 1;
        return std::max<std::int64_t>(0, h);
    };

    std::vector<std::int64_t> g(n, unset);
    std::vector<std::int64_t> parent(n, -1);
    // (f, h, index, g); smallest first.
    using Entry = std::tuple<std::int64_t, std::int64_t, std::size_t, std::int64_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;

    const std::size_t s = mask.index(start.x, start.y);
    const std::size_t t = mask.index(goal.x, goal.y);
    g[s] = 0;
    const std::int64_t hs = heuristic(start);
    open.emplace(hs, hs, s, 0);

    const int neighbors = connectivity;
    bool found = false;
    while (!open.empty()) {
        const auto [f, h, idx, gi] = open.top();
        open.pop();
        if (gi != g[idx]) continue;  // stale
        if (idx == t) {
            found = true;
            break;
        }
        const Pixel p = mask.pixel(idx);
        for (int k = 0; k < neighbors; ++k) {
            const Neighbor& nb = kNeighbors8[k];
            const int x = p.x + nb.dx;
            const int y = p.y + nb.dy;
            if (!mask.at(x, y)) continue;
            const std::size_t j = mask.index(x, y);
            const std::int64_t cand = gi + (nb.diagonal ? diag : orth) + node_cost[j];
            if (cand < g[j]) {
                g[j] = cand;
                parent[j] = static_cast<std::int64_t>(idx);
                const std::int64_t hj = heuristic({x, y});
                open.emplace(cand + hj, hj, j, cand);
            }
        }
    }
    if (!found)
        throw Unreachable("goal (" + std::to_string(goal.x) + ", " + std::to_string(goal.y) +
                          ") is not reachable from start (" + std::to_string(start.x) + ", " +
                          std::to_string(start.y) + ")");

    PathPlan plan;
    for (std::int64_t i = static_cast<std::int64_t>(t); i != -1; i = parent[static_cast<std::size_t>(i)])
        plan.points.push_back(mask.pixel(static_cast<std::size_t>(i)));
    std::reverse(plan.points.begin(), plan.points.end());
    compute_cum_length(plan);
    plan.total_cost = static_cast<double>(g[t]) / kCostScale;
    return plan;
}

}  // namespace

PathPlan plan_bda_star(const GridMask& mask, const ScalarField& heatmap, Pixel start, Pixel goal,
                       const PlannerConfig& cfg)
{
    if (!std::isfinite(cfg.omega) || cfg.omega < 0.0) throw InvalidParams("omega must be finite and >= 0");
    if (heatmap.width() != mask.width() || heatmap.height() != mask.height())
        throw InvalidParams("heatmap dimensions differ from mask");
    std::vector<std::int64_t> node_cost(mask.size(), 0);
    if (cfg.omega > 0.0) {
        const double heat_max = heatmap.max();
        for (std::size_t i = 0; i < mask.size(); ++i)
            if (mask.cells()[i])
                node_cost[i] = quantize_cost(cfg.omega * boundary_term(heatmap, heat_max, mask.pixel(i), cfg.centering));
    }
    return search(mask, node_cost, start, goal, cfg.connectivity);
}

PathPlan plan_a_star(const GridMask& mask, Pixel start, Pixel goal, int connectivity)
{
    return search(mask, std::vector<std::int64_t>(mask.size(), 0), start, goal, connectivity);
}

std::size_t nearest_path_index(const PathPlan& plan, Vec2 x)
{
    if (plan.empty()) throw InvalidParams("empty path");
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < plan.points.size(); ++k) {
        const double dx = plan.points[k].x - x.x;
        const double dy = plan.points[k].y - x.y;
        const double d2 = dx * dx + dy * dy;
        if (d2 <= best_d2) {
            best_d2 = d2;
            best = k;
        }
    }
    return best;
}

double remaining_length(const PathPlan& plan, std::size_t j)
{
    if (j >= plan.cum_length.size()) throw InvalidParams("path index out of range");
    return plan.cum_length.back() - plan.cum_length[j];
}

Vec2 point_at_length(const PathPlan& plan, double s)
{
    if (plan.empty()) throw InvalidParams("empty path");
    if (s <= 0.0) return to_vec(plan.points.front());
    if (s >= plan.length()) return to_vec(plan.points.back());
    const auto it = std::upper_bound(plan.cum_length.begin(), plan.cum_length.end(), s);
    const std::size_t k = static_cast<std::size_t>(it - plan.cum_length.begin());
    const double seg = plan.cum_length[k] - plan.cum_length[k - 1];
    const double u = seg > 0.0 ? (s - plan.cum_length[k - 1]) / seg : 0.0;
    const Vec2 a = to_vec(plan.points[k - 1]);
    const Vec2 b = to_vec(plan.points[k]);
    return {a.x + u * (b.x - a.x), a.y + u * (b.y - a.y)};
}

void compute_cum_length(PathPlan& plan)
{
    plan.cum_length.assign(plan.points.size(), 0.0);
    for (std::size_t k = 1; k < plan.points.size(); ++k)
        plan.cum_length[k] = plan.cum_length[k - 1] + distance(plan.points[k - 1], plan.points[k]);
}

double mean_along(const PathPlan& plan, const ScalarField& field)
{
    if (plan.empty()) return 0.0;
    double sum = 0.0;
    for (const Pixel& p : plan.points) sum += field.at(p);
    return sum / static_cast<double>(plan.points.size());
}

void write_path_csv(const PathPlan& plan, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "k,x,y,cum_length\n";
    out.precision(10);
    for (std::size_t k = 0; k < plan.points.size(); ++k)
        out << (k + 1) << ',' << plan.points[k].x << ',' << plan.points[k].y << ',' << plan.cum_length[k] << '\n';
}

std::string path_svg(const PathPlan& plan, const GridMask& mask, const std::string& color)
{
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << mask.width() << "\" height=\"" << mask.height()
        << "\" viewBox=\"0 0 " << mask.width() << ' ' << mask.height() << "\">\n";
    svg << "<image width=\"" << mask.width() << "\" height=\"" << mask.height()
        << "\" href=\"data:image/png;base64," << base64_encode(encode_png(mask_to_gray(mask, 70, 200))) << "\"/>\n";
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < plan.points.size(); ++k)
        svg << (k ? " " : "") << plan.points[k].x << ',' << plan.points[k].y;
    svg << "\"/>\n</svg>\n";
    return svg.str();
}

void write_path_svg(const PathPlan& plan, const GridMask& mask, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << path_svg(plan, mask);
}

CenteringMode parse_centering_mode(const std::string& s)
{
    if (s == "penalize_boundary") return CenteringMode::penalize_boundary;
    if (s == "raw_heatmap") return CenteringMode::raw_heatmap;
    throw InvalidParams("unknown centering mode '" + s + "' (expected penalize_boundary or raw_heatmap)");
}

std::string to_string(CenteringMode m)
{
    return m == CenteringMode::penalize_boundary ? "penalize_boundary" : "raw_heatmap";
}

}  // namespace vnav
