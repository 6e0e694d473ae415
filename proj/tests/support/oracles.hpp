#pragma once

// Slow, obviously-correct reference implementations used to check the library.

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "vnav/planner.hpp"
#include "vnav/raster.hpp"

namespace oracle {

using vnav::GridMask;
using vnav::Pixel;
using vnav::ScalarField;

// Minimum distance to any background pixel, scanning the raster plus a
// one-pixel background frame around it.
ScalarField brute_distance_transform(const GridMask& mask);

// Vessel count under a disk (dx^2 + dy^2 <= r^2) or square footprint.
ScalarField nested_convolve(const GridMask& mask, int radius, bool disk = true);

// D / (I * K_r) with r = ceil(max D), from the two oracles above.
ScalarField heatmap(const GridMask& mask);

// Quantized per-node charge for entering a pixel, same graph as the planner.
std::vector<std::int64_t> node_costs(const GridMask& mask, const ScalarField& heat, double omega,
                                     vnav::CenteringMode mode);

// Plain Dijkstra over the node-cost graph (no heuristic); nullopt if unreachable.
std::optional<std::int64_t> dijkstra(const GridMask& mask, const std::vector<std::int64_t>& node_cost, Pixel start,
                                     Pixel goal, int connectivity = 8);

// Exact (floating) cost of a path: steps plus omega * B at every node after the first.
double path_cost(const std::vector<Pixel>& path, const ScalarField& heat, double omega, vnav::CenteringMode mode);

// Depth-first enumeration of all simple 8-connected paths (branch and bound
// on the exact cost). Only for tiny masks.
struct Enumerated {
    double cost = 0.0;
    std::vector<Pixel> path;
    int optimal_paths = 0;  // paths within 1e-9 of the optimum
};
std::optional<Enumerated> enumerate_best(const GridMask& mask, const ScalarField& heat, Pixel start, Pixel goal,
                                         double omega, vnav::CenteringMode mode);

// Random masks up to max_side x max_side with a mix of noise and blob shapes.
GridMask random_mask(std::mt19937_64& rng, int max_side);

// Pixels 8-connected to `seed` (including it).
std::vector<Pixel> component(const GridMask& mask, Pixel seed);

std::size_t nearest_index(const vnav::PathPlan& plan, vnav::Vec2 x);
double remaining(const vnav::PathPlan& plan, std::size_t j);

}  // namespace oracle
