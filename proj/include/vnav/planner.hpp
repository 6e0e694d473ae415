#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vnav/geometry.hpp"
#include "vnav/raster.hpp"

namespace vnav {

enum class CenteringMode {
    penalize_boundary,  // node cost omega * (max H - H(n)): pulls the path toward the centerline
    raw_heatmap,        // node cost omega * H(n), the boundary term taken literally
};

struct PlannerConfig {
    double omega = 2.0;
    CenteringMode centering = CenteringMode::penalize_boundary;
    int connectivity = 8;  // 8 or 4
};

// Pixel path from start to goal with prefix arc lengths (px).
struct PathPlan {
    std::vector<Pixel> points;
    std::vector<double> cum_length;
    double total_cost = 0.0;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    double length() const { return cum_length.empty() ? 0.0 : cum_length.back(); }
    bool operator==(const PathPlan&) const = default;
};

// Path costs are accumulated as fixed-point integers in units of 1/kCostScale,
// each term rounded up: edge(u->v) = ceil(step * S) + ceil(omega * B(v) * S).
// Integer sums make the optimum independent of evaluation order.
inline constexpr double kCostScale = 1048576.0;  // 2^20
std::int64_t quantize_cost(double value);

// Per-node boundary term B(n) for the given mode (without omega).
double boundary_term(const ScalarField& heatmap, double heat_max, Pixel n, CenteringMode mode);

// A* over lumen pixels minimizing sum(step + omega * B(n)) over the nodes
// entered after the start. Euclidean heuristic; ties broken by (f, h, linear
// index). Throws OffVessel or Unreachable.
PathPlan plan_bda_star(const GridMask& mask, const ScalarField& heatmap, Pixel start, Pixel goal,
                       const PlannerConfig& cfg = {});

// Classic shortest path (omega = 0).
PathPlan plan_a_star(const GridMask& mask, Pixel start, Pixel goal, int connectivity = 8);

// Index of the path point closest to x; ties go to the larger index.
std::size_t nearest_path_index(const PathPlan& plan, Vec2 x);

// Arc length from point j to the end of the path.
double remaining_length(const PathPlan& plan, std::size_t j);

// Point at arc length `s` along the path (clamped to the ends).
Vec2 point_at_length(const PathPlan& plan, double s);

// Fills cum_length from points.
void compute_cum_length(PathPlan& plan);

// Mean of `field` over the path pixels.
double mean_along(const PathPlan& plan, const ScalarField& field);

// CSV with header "k,x,y,cum_length"; k starts at 1.
void write_path_csv(const PathPlan& plan, const std::filesystem::path& path);
std::string path_svg(const PathPlan& plan, const GridMask& mask, const std::string& color = "#d62728");
void write_path_svg(const PathPlan& plan, const GridMask& mask, const std::filesystem::path& path);

CenteringMode parse_centering_mode(const std::string& s);
std::string to_string(CenteringMode m);

}  // namespace vnav
