#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vnav/geometry.hpp"
#include "vnav/image_io.hpp"
#include "vnav/raster.hpp"

namespace vnav {

inline constexpr double kDefaultPxPerMm = 2.0;

// Synthetic vessel model with labeled targets.
struct VesselPhantom {
    GridMask mask;
    Pixel start;
    std::map<std::string, Pixel> targets;
    std::vector<Pixel> trunk_polyline;
    std::map<std::string, std::vector<Pixel>> branch_polylines;
    double px_per_mm = kDefaultPxPerMm;

    bool operator==(const VesselPhantom&) const = default;
};

// Descending aorta entering from the bottom, an arch over the top and an
// ascending segment, with BCA, LCA and LSA branching off the arch (in that
// order from the ascending side). Control points are jittered by up to 5% of
// the lumen width from `seed`. Throws GeometryOverflow when the template does
// not fit the raster at this lumen width.
VesselPhantom generate_aorta_phantom(int width = 512, int height = 512, double lumen_width_mm = 18.0,
                                     std::uint64_t seed = 7, double px_per_mm = kDefaultPxPerMm);

// Straight horizontal corridor; start at the left end, target "END" at the right end.
VesselPhantom generate_corridor(double length_mm, double width_mm, double px_per_mm = kDefaultPxPerMm);

// Margin in pixels around a generated corridor.
inline constexpr int kCorridorMargin = 16;

// `path` is the JSON sidecar; the mask is stored next to it with the same stem
// and `mask_ext` (".png" or ".pgm").
void save_phantom(const VesselPhantom& phantom, const std::filesystem::path& path,
                  const std::string& mask_ext = ".png");
VesselPhantom load_phantom(const std::filesystem::path& path);

// Checks the structural invariants; returns an empty string when valid.
std::string validate_phantom(const VesselPhantom& phantom);

// Grayscale camera-like view: dark lumen on a light background.
GrayImage phantom_view(const VesselPhantom& phantom);

// Number of 8-connected lumen components.
int count_components(const GridMask& mask);

}  // namespace vnav
