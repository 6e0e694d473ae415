#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vnav/geometry.hpp"

namespace vnav {

// Binary occupancy raster of the vessel lumen: 1 = lumen, 0 = background.
class GridMask {
public:
    GridMask() = default;
    GridMask(int width, int height);
    // Any nonzero sample becomes 1.
    GridMask(int width, int height, std::span<const std::uint8_t> samples);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return cells_.size(); }
    bool empty() const { return cells_.empty(); }

    bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
    bool in_bounds(Pixel p) const { return in_bounds(p.x, p.y); }

    // Out-of-raster reads return 0.
    std::uint8_t at(int x, int y) const { return in_bounds(x, y) ? cells_[index(x, y)] : 0; }
    std::uint8_t at(Pixel p) const { return at(p.x, p.y); }
    bool is_vessel(Pixel p) const { return at(p) != 0; }
    bool is_vessel(Vec2 v) const { return is_vessel(to_pixel(v)); }

    void set(int x, int y, bool vessel) { cells_[index(x, y)] = vessel ? 1 : 0; }

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }
    Pixel pixel(std::size_t idx) const
    {
        return {static_cast<int>(idx % width_), static_cast<int>(idx / width_)};
    }

    std::size_t count() const;
    const std::vector<std::uint8_t>& cells() const { return cells_; }

    bool operator==(const GridMask&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> cells_;
};

// Per-pixel non-negative real field.
class ScalarField {
public:
    ScalarField() = default;
    ScalarField(int width, int height, double fill = 0.0)
        : width_(width), height_(height), cells_(static_cast<std::size_t>(width) * height, fill)
    {
    }

    int width() const { return width_; }
    int height() const { return height_; }
    double at(int x, int y) const { return cells_[static_cast<std::size_t>(y) * width_ + x]; }
    double at(Pixel p) const { return at(p.x, p.y); }
    double& at(int x, int y) { return cells_[static_cast<std::size_t>(y) * width_ + x]; }
    double operator[](std::size_t i) const { return cells_[i]; }
    double& operator[](std::size_t i) { return cells_[i]; }
    const std::vector<double>& cells() const { return cells_; }
    double max() const;

    bool operator==(const ScalarField&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> cells_;
};

enum class KernelShape { disk, square };

// Binary structuring kernel of side 2*radius+1.
class DiskKernel {
public:
    explicit DiskKernel(int radius, KernelShape shape = KernelShape::disk);

    int radius() const { return radius_; }
    int side() const { return 2 * radius_ + 1; }
    KernelShape shape() const { return shape_; }
    // Offsets relative to the center, |dx|, |dy| <= radius.
    bool contains(int dx, int dy) const;
    // Half-width of the kernel's horizontal span on row dy, or -1 if the row is empty.
    int half_span(int dy) const { return spans_[dy + radius_]; }
    std::size_t count() const;

private:
    int radius_;
    KernelShape shape_;
    std::vector<int> spans_;
};

// Exact Euclidean distance from each lumen pixel to the nearest background
// pixel; everything outside the raster counts as background.
ScalarField distance_transform(const GridMask& mask);

// Number of lumen pixels under the kernel footprint centered at each pixel
// (zero padding outside the raster).
ScalarField convolve(const GridMask& mask, const DiskKernel& kernel);

// Normalized distance-transform heatmap: D / (mask * K_r) on lumen pixels with
// r = ceil(max D), zero on background. Throws EmptyMask.
ScalarField ndt_heatmap(const GridMask& mask, KernelShape shape = KernelShape::disk);

}  // namespace vnav
