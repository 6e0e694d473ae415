#include "vnav/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <json.hpp>
#include <random>
#include <set>
#include <sstream>

#include "vnav/errors.hpp"

namespace vnav {

using nlohmann::json;

namespace {

// Arch template in normalized raster coordinates (fractions of width/height).
constexpr double kArchCx = 0.50;
constexpr double kArchCy = 0.45;
constexpr double kArchR = 0.20;
constexpr double kDescX = 0.70;
constexpr double kAscX = 0.30;
constexpr double kBranchWidthRatio = 0.6;

struct BranchTemplate {
    const char* name;
    double root_angle_deg;
};

// Anatomical order along the arch starting from the ascending side.
constexpr BranchTemplate kBranches[] = {{"BCA", 135.0}, {"LCA", 90.0}, {"LSA", 45.0}};

Vec2 catmull_rom(Vec2 p0, Vec2 p1, Vec2 p2, Vec2 p3, double t)
{
    const double t2 = t * t;
    const double t3 = t2 * t;
    auto f = [&](double a, double b, double c, double d) {
        return 0.5 * ((2.0 * b) + (-a + c) * t + (2.0 * a - 5.0 * b + 4.0 * c - d) * t2 + (-a + 3.0 * b - 3.0 * c + d) * t3);
    };
    return {f(p0.x, p1.x, p2.x, p3.x), f(p0.y, p1.y, p2.y, p3.y)};
}

// Dense samples (spacing well below one pixel) of the spline through `ctrl`.
std::vector<Vec2> sample_spline(const std::vector<Vec2>& ctrl)
{
    std::vector<Vec2> out;
    const std::size_t n = ctrl.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const Vec2 p0 = ctrl[i == 0 ? 0 : i - 1];
        const Vec2 p1 = ctrl[i];
        const Vec2 p2 = ctrl[i + 1];
        const Vec2 p3 = ctrl[std::min(i + 2, n - 1)];
        const int steps = std::max(8, static_cast<int>(std::ceil(distance(p1, p2) * 4.0)));
        for (int s = 0; s < steps; ++s) out.push_back(catmull_rom(p0, p1, p2, p3, double(s) / steps));
    }
    out.push_back(ctrl.back());
    return out;
}

std::vector<Pixel> to_pixel_polyline(const std::vector<Vec2>& samples)
{
    std::vector<Pixel> out;
    for (const Vec2& v : samples) {
        const Pixel p = to_pixel(v);
        if (out.empty() || out.back() != p) out.push_back(p);
    }
    return out;
}

void stamp_disk(GridMask& mask, Vec2 c, double radius)
{
    const int x0 = static_cast<int>(std::floor(c.x - radius));
    const int x1 = static_cast<int>(std::ceil(c.x + radius));
    const int y0 = static_cast<int>(std::floor(c.y - radius));
    const int y1 = static_cast<int>(std::ceil(c.y + radius));
    const double r2 = radius * radius;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double dx = x - c.x;
            const double dy = y - c.y;
            if (dx * dx + dy * dy <= r2 && mask.in_bounds(x, y)) mask.set(x, y, true);
        }
}

void require_inside(const std::vector<Vec2>& samples, double radius, int width, int height)
{
    for (const Vec2& s : samples) {
        if (s.x - radius < 1.0 || s.y - radius < 1.0 || s.x + radius > width - 2.0 || s.y + radius > height - 2.0)
            throw GeometryOverflow("vessel template does not fit a " + std::to_string(width) + "x" +
                                   std::to_string(height) + " raster at this lumen width");
    }
}

json pixel_json(Pixel p) { return json::array({p.x, p.y}); }

json polyline_json(const std::vector<Pixel>& pts)
{
    json arr = json::array();
    for (const Pixel& p : pts) arr.push_back(pixel_json(p));
    return arr;
}

[[noreturn]] void field_error(const std::filesystem::path& path, const std::string& field, const std::string& what)
{
    throw ParseError(path.string() + ": field '" + field + "': " + what);
}

Pixel parse_pixel(const json& j, const std::filesystem::path& path, const std::string& field)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
        field_error(path, field, "expected [x, y] integer pair");
    return {j[0].get<int>(), j[1].get<int>()};
}

std::vector<Pixel> parse_polyline(const json& j, const std::filesystem::path& path, const std::string& field)
{
    if (!j.is_array()) field_error(path, field, "expected an array of [x, y] pairs");
    std::vector<Pixel> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(parse_pixel(j[i], path, field + "[" + std::to_string(i) + "]"));
    return out;
}

const json& require(const json& doc, const char* key, const std::filesystem::path& path)
{
    auto it = doc.find(key);
    if (it == doc.end()) field_error(path, key, "missing");
    return *it;
}

}  // namespace

VesselPhantom generate_aorta_phantom(int width, int height, double lumen_width_mm, std::uint64_t seed,
                                     double px_per_mm)
{
    if (!(lumen_width_mm > 0.0) || !(px_per_mm > 0.0))
        throw GeometryOverflow("lumen width and scale must be positive");
    if (width <= 0 || height <= 0) throw GeometryOverflow("raster dimensions must be positive");
    const double lumen_px = lumen_width_mm * px_per_mm;
    if (lumen_px < 2.0) throw GeometryOverflow("lumen narrower than two pixels");
    const double arch_r_px = kArchR * std::min(width, height);
    if (arch_r_px < 1.5 * lumen_px)
        throw GeometryOverflow("lumen too wide for the arch template in this raster");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.05 * lumen_px, 0.05 * lumen_px);
    auto at = [&](double u, double v) { return Vec2{u * width + jitter(rng), v * height + jitter(rng)}; };
    auto on_arch = [&](double deg, double radius) {
        const double r = deg2rad(deg);
        return at(kArchCx + radius * std::cos(r), kArchCy - radius * std::sin(r));
    };

    std::vector<Vec2> trunk_ctrl = {at(kDescX, 0.93), at(kDescX, 0.75), at(kDescX, 0.57)};
    for (double deg = 0.0; deg <= 180.0; deg += 30.0) trunk_ctrl.push_back(on_arch(deg, kArchR));
    trunk_ctrl.push_back(at(kAscX, 0.57));
    trunk_ctrl.push_back(at(kAscX, 0.72));

    const std::vector<Vec2> trunk_samples = sample_spline(trunk_ctrl);
    require_inside(trunk_samples, lumen_px / 2.0, width, height);

    VesselPhantom ph;
    ph.px_per_mm = px_per_mm;
    ph.mask = GridMask(width, height);
    for (const Vec2& s : trunk_samples) stamp_disk(ph.mask, s, lumen_px / 2.0);
    ph.trunk_polyline = to_pixel_polyline(trunk_samples);
    ph.start = ph.trunk_polyline.front();

    const double branch_radius = kBranchWidthRatio * lumen_px / 2.0;
    for (const BranchTemplate& b : kBranches) {
        // Root on the trunk polyline closest to the template root angle.
        const Vec2 ideal_root{(kArchCx + kArchR * std::cos(deg2rad(b.root_angle_deg))) * width,
                              (kArchCy - kArchR * std::sin(deg2rad(b.root_angle_deg))) * height};
        const Pixel root = *std::min_element(ph.trunk_polyline.begin(), ph.trunk_polyline.end(),
                                             [&](Pixel a, Pixel c) {
                                                 return distance(to_vec(a), ideal_root) < distance(to_vec(c), ideal_root);
                                             });
        // Branches curve gently toward vertical as they leave the arch.
        const double bend = b.root_angle_deg < 90.0 ? 3.0 : (b.root_angle_deg > 90.0 ? -3.0 : 0.0);
        std::vector<Vec2> ctrl = {to_vec(root)};
        const double radii[] = {0.27, 0.32, 0.37, 0.40};
        for (int k = 0; k < 4; ++k) ctrl.push_back(on_arch(b.root_angle_deg + bend * (k + 1), radii[k]));

        const std::vector<Vec2> samples = sample_spline(ctrl);
        require_inside(samples, branch_radius, width, height);
        for (const Vec2& s : samples) stamp_disk(ph.mask, s, branch_radius);

        std::vector<Pixel> line = to_pixel_polyline(samples);
        // The target sits on the branch axis at the third control point, inside the lumen.
        const Vec2 tgt = ctrl[3];
        const Pixel target = *std::min_element(line.begin(), line.end(), [&](Pixel a, Pixel c) {
            return distance(to_vec(a), tgt) < distance(to_vec(c), tgt);
        });
        ph.targets[b.name] = target;
        ph.branch_polylines[b.name] = std::move(line);
    }

    // Branch axes must stay apart so each ostium is distinct.
    for (auto a = ph.branch_polylines.begin(); a != ph.branch_polylines.end(); ++a)
        for (auto c = std::next(a); c != ph.branch_polylines.end(); ++c)
            if (distance(a->second.back(), c->second.back()) < 4.0 * branch_radius)
                throw GeometryOverflow("branches overlap at this lumen width");

    return ph;
}

VesselPhantom generate_corridor(double length_mm, double width_mm, double px_per_mm)
{
    if (!(length_mm > 0.0) || !(width_mm > 0.0) || !(px_per_mm > 0.0))
        throw GeometryOverflow("corridor dimensions must be positive");
    const int len = static_cast<int>(std::lround(length_mm * px_per_mm));
    const int wid = static_cast<int>(std::lround(width_mm * px_per_mm));
    if (len < 2 || wid < 1) throw GeometryOverflow("corridor smaller than the raster resolution");
    constexpr int m = kCorridorMargin;
    if (len > 20000 || wid > 20000) throw GeometryOverflow("corridor too large");

    VesselPhantom ph;
    ph.px_per_mm = px_per_mm;
    ph.mask = GridMask(len + 2 * m, wid + 2 * m);
    for (int y = m; y < m + wid; ++y)
        for (int x = m; x < m + len; ++x) ph.mask.set(x, y, true);
    const int axis_y = m + wid / 2;
    ph.start = {m, axis_y};
    const Pixel end{m + len - 1, axis_y};
    ph.targets["END"] = end;
    for (int x = m; x < m + len; ++x) ph.trunk_polyline.push_back({x, axis_y});
    ph.branch_polylines["END"] = {end};
    return ph;
}

std::string validate_phantom(const VesselPhantom& ph)
{
    if (ph.mask.empty()) return "empty mask";
    if (!(ph.px_per_mm > 0.0)) return "px_per_mm must be positive";
    if (!ph.mask.is_vessel(ph.start)) return "start is not on a vessel pixel";
    for (const auto& [name, p] : ph.targets)
        if (!ph.mask.is_vessel(p)) return "target " + name + " is not on a vessel pixel";
    const std::set<Pixel> trunk(ph.trunk_polyline.begin(), ph.trunk_polyline.end());
    for (const auto& [name, line] : ph.branch_polylines) {
        if (line.empty()) return "branch polyline " + name + " is empty";
        if (!trunk.contains(line.front())) return "branch polyline " + name + " does not begin on the trunk";
    }
    return {};
}

void save_phantom(const VesselPhantom& ph, const std::filesystem::path& path, const std::string& mask_ext)
{
    std::filesystem::path mask_path = path;
    mask_path.replace_extension(mask_ext);
    save_mask(ph.mask, mask_path);

    json doc;
    doc["version"] = 1;
    doc["mask"] = mask_path.filename().string();
    doc["width"] = ph.mask.width();
    doc["height"] = ph.mask.height();
    doc["px_per_mm"] = ph.px_per_mm;
    doc["start"] = pixel_json(ph.start);
    doc["targets"] = json::object();
    for (const auto& [name, p] : ph.targets) doc["targets"][name] = pixel_json(p);
    doc["trunk_polyline"] = polyline_json(ph.trunk_polyline);
    doc["branch_polylines"] = json::object();
    for (const auto& [name, line] : ph.branch_polylines) doc["branch_polylines"][name] = polyline_json(line);

    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << doc.dump(1) << '\n';
}

VesselPhantom load_phantom(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
        throw ParseError(path.string() + ": line " + std::to_string(line) + ": " + e.what());
    }
    if (!doc.is_object()) throw ParseError(path.string() + ": top level must be an object");

    const json& version = require(doc, "version", path);
    if (!version.is_number_integer() || version.get<int>() != 1) field_error(path, "version", "unsupported version");
    const json& mask_name = require(doc, "mask", path);
    if (!mask_name.is_string()) field_error(path, "mask", "expected a file name");
    const json& width = require(doc, "width", path);
    const json& height = require(doc, "height", path);
    if (!width.is_number_integer() || !height.is_number_integer()) field_error(path, "width/height", "expected integers");
    const json& scale = require(doc, "px_per_mm", path);
    if (!scale.is_number() || !(scale.get<double>() > 0.0)) field_error(path, "px_per_mm", "expected a positive number");

    VesselPhantom ph;
    ph.px_per_mm = scale.get<double>();
    ph.start = parse_pixel(require(doc, "start", path), path, "start");
    const json& targets = require(doc, "targets", path);
    if (!targets.is_object() || targets.empty()) field_error(path, "targets", "expected a non-empty object");
    for (const auto& [name, p] : targets.items()) ph.targets[name] = parse_pixel(p, path, "targets." + name);
    ph.trunk_polyline = parse_polyline(require(doc, "trunk_polyline", path), path, "trunk_polyline");
    const json& branches = require(doc, "branch_polylines", path);
    if (!branches.is_object()) field_error(path, "branch_polylines", "expected an object");
    for (const auto& [name, line] : branches.items())
        ph.branch_polylines[name] = parse_polyline(line, path, "branch_polylines." + name);

    ph.mask = load_mask(path.parent_path() / mask_name.get<std::string>());
    if (ph.mask.width() != width.get<int>() || ph.mask.height() != height.get<int>())
        throw ParseError(path.string() + ": field 'width/height': metadata says " + std::to_string(width.get<int>()) +
                         "x" + std::to_string(height.get<int>()) + " but mask is " + std::to_string(ph.mask.width()) +
                         "x" + std::to_string(ph.mask.height()));
    if (const std::string problem = validate_phantom(ph); !problem.empty())
        throw ParseError(path.string() + ": " + problem);
    return ph;
}

GrayImage phantom_view(const VesselPhantom& ph) { return mask_to_gray(ph.mask, 70, 200); }

int count_components(const GridMask& mask)
{
    std::vector<std::uint8_t> seen(mask.size(), 0);
    int components = 0;
    std::deque<std::size_t> queue;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask.cells()[i] || seen[i]) continue;
        ++components;
        seen[i] = 1;
        queue.push_back(i);
        while (!queue.empty()) {
            const Pixel p = mask.pixel(queue.front());
            queue.pop_front();
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int x = p.x + dx;
                    const int y = p.y + dy;
                    if (!mask.at(x, y)) continue;
                    const std::size_t j = mask.index(x, y);
                    if (!seen[j]) {
                        seen[j] = 1;
                        queue.push_back(j);
                    }
                }
        }
    }
    return components;
}

}  // namespace vnav
