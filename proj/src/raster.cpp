#include "vnav/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "vnav/errors.hpp"

namespace vnav {

GridMask::GridMask(int width, int height)
    : width_(width), height_(height), cells_(static_cast<std::size_t>(width) * height, 0)
{
    if (width <= 0 || height <= 0) throw InvalidParams("mask dimensions must be positive");
}

GridMask::GridMask(int width, int height, std::span<const std::uint8_t> samples)
    : GridMask(width, height)
{
    if (samples.size() != cells_.size()) throw InvalidParams("sample count does not match mask dimensions");
    std::transform(samples.begin(), samples.end(), cells_.begin(),
                   [](std::uint8_t s) { return static_cast<std::uint8_t>(s != 0); });
}

std::size_t GridMask::count() const
{
    return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), 1));
}

double ScalarField::max() const
{
    if (cells_.empty()) return 0.0;
    return *std::max_element(cells_.begin(), cells_.end());
}

DiskKernel::DiskKernel(int radius, KernelShape shape) : radius_(radius), shape_(shape)
{
    if (radius < 1) throw InvalidParams("kernel radius must be >= 1");
    spans_.resize(static_cast<std::size_t>(side()));
    for (int dy = -radius; dy <= radius; ++dy) {
        int half = radius;
        if (shape == KernelShape::disk) {
            half = 0;
            while ((half + 1) * (half + 1) + dy * dy <= radius * radius) ++half;
        }
        spans_[dy + radius] = half;
    }
}

bool DiskKernel::contains(int dx, int dy) const
{
    if (std::abs(dy) > radius_ || std::abs(dx) > radius_) return false;
    return std::abs(dx) <= spans_[dy + radius_];
}

std::size_t DiskKernel::count() const
{
    std::size_t n = 0;
    for (int s : spans_) n += static_cast<std::size_t>(2 * s + 1);
    return n;
}

namespace {

// One-dimensional squared distance transform of a sampled function
// (lower envelope of parabolas). f and d have length n.
void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
            std::vector<double>& z)
{
    const int n = static_cast<int>(f.size());
    constexpr double inf = std::numeric_limits<double>::infinity();
    int k = 0;
    v[0] = 0;
    z[0] = -inf;
    z[1] = inf;
    for (int q = 1; q < n; ++q) {
        if (f[q] == inf) continue;
        if (f[v[k]] == inf) {
            v[k] = q;
            continue;
        }
        double s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) / (2.0 * (q - v[k]));
        while (s <= z[k]) {
            --k;
            s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) / (2.0 * (q - v[k]));
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = inf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        const double dq = q - v[k];
        d[q] = dq * dq + f[v[k]];
    }
}

}  // namespace

ScalarField distance_transform(const GridMask& mask)
{
    const int w = mask.width();
    const int h = mask.height();
    // One background pixel of padding on every side supplies the implicit border.
    const int pw = w + 2;
    const int ph = h + 2;
    constexpr double inf = std::numeric_limits<double>::infinity();

    std::vector<double> grid(static_cast<std::size_t>(pw) * ph, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (mask.at(x, y)) grid[static_cast<std::size_t>(y + 1) * pw + (x + 1)] = inf;

    const int n = std::max(pw, ph);
    std::vector<double> f(n), d(n), z(n + 1);
    std::vector<int> v(n);

    // Columns: every padded column has background at both ends, so results are finite.
    f.resize(ph);
    d.resize(ph);
    for (int x = 1; x <= w; ++x) {
        for (int y = 0; y < ph; ++y) f[y] = grid[static_cast<std::size_t>(y) * pw + x];
        edt_1d(f, d, v, z);
        for (int y = 0; y < ph; ++y) grid[static_cast<std::size_t>(y) * pw + x] = d[y];
    }
    f.resize(pw);
    d.resize(pw);
    for (int y = 1; y <= h; ++y) {
        for (int x = 0; x < pw; ++x) f[x] = grid[static_cast<std::size_t>(y) * pw + x];
        edt_1d(f, d, v, z);
        for (int x = 0; x < pw; ++x) grid[static_cast<std::size_t>(y) * pw + x] = d[x];
    }

    ScalarField out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out.at(x, y) = std::sqrt(grid[static_cast<std::size_t>(y + 1) * pw + (x + 1)]);
    return out;
}

ScalarField convolve(const GridMask& mask, const DiskKernel& kernel)
{
    const int w = mask.width();
    const int h = mask.height();
    const int r = kernel.radius();

    // Row prefix sums turn each kernel row into an O(1) span query.
    std::vector<int> prefix(static_cast<std::size_t>(w + 1) * h, 0);
    for (int y = 0; y < h; ++y) {
        int* row = &prefix[static_cast<std::size_t>(y) * (w + 1)];
        for (int x = 0; x < w; ++x) row[x + 1] = row[x] + mask.at(x, y);
    }

    ScalarField out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int total = 0;
            for (int dy = -r; dy <= r; ++dy) {
                const int yy = y + dy;
                if (yy < 0 || yy >= h) continue;
                const int half = kernel.half_span(dy);
                const int lo = std::max(0, x - half);
                const int hi = std::min(w - 1, x + half);
                if (lo > hi) continue;
                const int* row = &prefix[static_cast<std::size_t>(yy) * (w + 1)];
                total += row[hi + 1] - row[lo];
            }
            out.at(x, y) = total;
        }
    }
    return out;
}

ScalarField ndt_heatmap(const GridMask& mask, KernelShape shape)
{
    if (mask.empty() || mask.count() == 0) throw EmptyMask();
    const ScalarField dist = distance_transform(mask);
    const int radius = std::max(1, static_cast<int>(std::ceil(dist.max())));
    const ScalarField support = convolve(mask, DiskKernel(radius, shape));

    ScalarField heat(mask.width(), mask.height());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        // support >= 1 on lumen pixels: the footprint always covers its own center.
        if (mask.cells()[i]) heat[i] = dist[i] / support[i];
    }
    return heat;
}

}  // namespace vnav
