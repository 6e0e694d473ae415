#pragma once

#include <cmath>
#include <compare>
#include <cstdint>

namespace vnav {

// Integer raster coordinate; x grows right, y grows down.
struct Pixel {
    int x = 0;
    int y = 0;
    auto operator<=>(const Pixel&) const = default;
};

// Continuous position in pixel units. Pixel (i, j) covers [i-0.5, i+0.5) x [j-0.5, j+0.5).
struct Vec2 {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Vec2&) const = default;
};

inline Vec2 to_vec(Pixel p) { return {static_cast<double>(p.x), static_cast<double>(p.y)}; }

inline Pixel to_pixel(Vec2 v)
{
    return {static_cast<int>(std::floor(v.x + 0.5)), static_cast<int>(std::floor(v.y + 0.5))};
}

inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }
inline double distance(Pixel a, Pixel b) { return distance(to_vec(a), to_vec(b)); }

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

// Wraps into (-180, 180].
inline double wrap_deg(double d)
{
    double w = std::fmod(d, 360.0);
    if (w <= -180.0) w += 360.0;
    if (w > 180.0) w -= 360.0;
    return w;
}

// Headings are screen angles: 0 points to +x and positive angles turn
// counter-clockwise as seen on screen, i.e. toward -y in raster coordinates.
inline Vec2 heading_dir(double deg)
{
    const double r = deg2rad(deg);
    return {std::cos(r), -std::sin(r)};
}

inline double heading_of(Vec2 from, Vec2 to)
{
    return rad2deg(std::atan2(-(to.y - from.y), to.x - from.x));
}

}  // namespace vnav
