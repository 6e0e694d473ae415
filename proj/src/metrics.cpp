#include "vnav/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <sstream>
#include <thread>

#include "vnav/errors.hpp"

namespace vnav {

using nlohmann::json;

MeanStd mean_std(const std::vector<double>& values)
{
    if (values.empty()) return {};
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    return {mean, std::sqrt(var / n)};
}

double movement_distance_mm(const EpisodeRecord& r)
{
    double sum = 0.0;
    for (const auto& s : r.steps) sum += std::abs(s.executed_mm);
    return sum;
}

double retracement_distance_mm(const EpisodeRecord& r)
{
    double sum = 0.0;
    for (const auto& s : r.steps) sum += std::max(0.0, -s.executed_mm);
    return sum;
}

std::optional<double> boundary_distance_px(const EpisodeRecord& r, const ScalarField& distance)
{
    if (r.steps.empty()) return std::nullopt;
    double sum = 0.0;
    for (const auto& s : r.steps) sum += distance.at(to_pixel(s.tip));
    return sum / static_cast<double>(r.steps.size());
}

EpisodeRecord run_episode(Policy& policy, Env& env, std::uint64_t seed)
{
    EpisodeRecord rec;
    rec.target = env.config().target;
    rec.seed = seed;
    policy.reset(seed);
    env.reset(seed);
    bool done = false;
    while (!done) {
        const Action a = clamp_action(policy.act(env.policy_input()), env.config().limits);
        const StepResult r = env.step(a);
        rec.steps.push_back({a, r.info.executed_mm, r.info.tip, r.reward});
        rec.episode_return += r.reward;
        rec.kind = r.info.kind;
        done = r.done;
    }
    return rec;
}

std::vector<EpisodeRecord> evaluate(const PolicyFactory& make_policy, const EnvFactory& make_env, int n_episodes,
                                    std::uint64_t seed, int workers)
{
    if (n_episodes < 1) throw InvalidParams("n_episodes must be >= 1");
    std::vector<EpisodeRecord> records(static_cast<std::size_t>(n_episodes));
    std::atomic<int> next{0};
    auto worker = [&] {
        auto policy = make_policy();
        Env env = make_env();
        for (int i = next++; i < n_episodes; i = next++)
            records[static_cast<std::size_t>(i)] = run_episode(*policy, env, episode_seed(seed, static_cast<std::uint64_t>(i)));
    };
    const int threads = std::clamp(workers, 1, n_episodes);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    return records;
}

MetricsSummary summarize(const std::vector<EpisodeRecord>& records, const ScalarField& distance)
{
    if (records.empty()) throw InvalidParams("no records to summarize");
    std::vector<double> ret, len, move, bound, retr;
    int successes = 0;
    for (const auto& r : records) {
        successes += r.kind == Termination::success;
        ret.push_back(r.episode_return);
        len.push_back(r.length());
        move.push_back(movement_distance_mm(r));
        retr.push_back(retracement_distance_mm(r));
        if (const auto b = boundary_distance_px(r, distance)) bound.push_back(*b);
    }
    MetricsSummary s;
    s.episodes = static_cast<int>(records.size());
    s.success_rate = static_cast<double>(successes) / static_cast<double>(records.size());
    s.episode_reward = mean_std(ret);
    s.episode_length = mean_std(len);
    s.movement_mm = mean_std(move);
    s.boundary_px = mean_std(bound);
    s.retracement_mm = mean_std(retr);
    return s;
}

MetricsSummary summarize(const std::vector<EpisodeRecord>& records, const VesselPhantom& phantom)
{
    return summarize(records, distance_transform(phantom.mask));
}

Rgb episode_color(std::size_t episode)
{
    static constexpr Rgb palette[] = {{230, 25, 75},  {60, 180, 75},   {255, 225, 25}, {0, 130, 200},
                                      {245, 130, 48}, {145, 30, 180},  {70, 240, 240}, {240, 50, 230},
                                      {210, 245, 60}, {250, 190, 212}, {0, 128, 128},  {170, 110, 40}};
    return palette[episode % std::size(palette)];
}

namespace {

void draw_line(RgbImage& img, Pixel a, Pixel b, Rgb c)
{
    int x = a.x, y = a.y;
    const int dx = std::abs(b.x - a.x), sx = a.x < b.x ? 1 : -1;
    const int dy = -std::abs(b.y - a.y), sy = a.y < b.y ? 1 : -1;
    int err = dx + dy;
    while (true) {
        if (x >= 0 && y >= 0 && x < img.width && y < img.height) img.set(x, y, c);
        if (x == b.x && y == b.y) break;
        const int e2 = 2 * err;
        if (e2 >= dy) { err += dy; x += sx; }
        if (e2 <= dx) { err += dx; y += sy; }
    }
}

}  // namespace

RgbImage render_trajectories(const std::vector<EpisodeRecord>& records, const VesselPhantom& phantom,
                             const PathPlan* path)
{
    const GrayImage view = phantom_view(phantom);
    RgbImage img(view.width, view.height);
    for (int y = 0; y < view.height; ++y)
        for (int x = 0; x < view.width; ++x) {
            const std::uint8_t v = view.at(x, y);
            img.set(x, y, {v, v, v});
        }
    if (path)
        for (std::size_t k = 1; k < path->points.size(); ++k)
            draw_line(img, path->points[k - 1], path->points[k], {255, 255, 255});
    // Tip marks: a small cross clipped to the lumen.
    for (std::size_t e = 0; e < records.size(); ++e) {
        const Rgb c = episode_color(e);
        for (const auto& s : records[e].steps) {
            const Pixel p = to_pixel(s.tip);
            for (const Pixel d : {Pixel{0, 0}, Pixel{1, 0}, Pixel{-1, 0}, Pixel{0, 1}, Pixel{0, -1}}) {
                const Pixel q{p.x + d.x, p.y + d.y};
                if (phantom.mask.is_vessel(q)) img.set(q.x, q.y, c);
            }
        }
    }
    return img;
}

std::string trajectories_svg(const std::vector<EpisodeRecord>& records, const VesselPhantom& phantom,
                             const PathPlan* path)
{
    const GridMask& m = phantom.mask;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << m.width() << "\" height=\"" << m.height()
        << "\" viewBox=\"0 0 " << m.width() << ' ' << m.height() << "\">\n";
    svg << "<image width=\"" << m.width() << "\" height=\"" << m.height() << "\" href=\"data:image/png;base64,"
        << base64_encode(encode_png(phantom_view(phantom))) << "\"/>\n";
    if (path) {
        svg << "<polyline fill=\"none\" stroke=\"#ffffff\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < path->points.size(); ++k)
            svg << (k ? " " : "") << path->points[k].x << ',' << path->points[k].y;
        svg << "\"/>\n";
    }
    for (std::size_t e = 0; e < records.size(); ++e) {
        const Rgb c = episode_color(e);
        svg << "<g fill=\"rgb(" << int(c[0]) << ',' << int(c[1]) << ',' << int(c[2]) << ")\">";
        for (const auto& s : records[e].steps) svg << "<circle cx=\"" << s.tip.x << "\" cy=\"" << s.tip.y << "\" r=\"2\"/>";
        svg << "</g>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

void write_metrics_csv(const std::vector<EpisodeRecord>& records, const ScalarField& distance,
                       const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out.precision(10);
    out << "row,target,success,return,length,movement_mm,boundary_px,retracement_mm,"
           "return_std,length_std,movement_std,boundary_std,retracement_std\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const auto b = boundary_distance_px(r, distance);
        out << i << ',' << r.target << ',' << (r.kind == Termination::success ? 1 : 0) << ',' << r.episode_return << ','
            << r.length() << ',' << movement_distance_mm(r) << ',' << (b ? *b : 0.0) << ','
            << retracement_distance_mm(r) << ",,,,,\n";
    }
    const MetricsSummary s = summarize(records, distance);
    out << "summary," << (records.empty() ? "" : records.front().target) << ',' << s.success_rate << ','
        << s.episode_reward.mean << ',' << s.episode_length.mean << ',' << s.movement_mm.mean << ','
        << s.boundary_px.mean << ',' << s.retracement_mm.mean << ',' << s.episode_reward.std << ','
        << s.episode_length.std << ',' << s.movement_mm.std << ',' << s.boundary_px.std << ','
        << s.retracement_mm.std << '\n';
}

void write_records_jsonl(const std::vector<EpisodeRecord>& records, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (std::size_t e = 0; e < records.size(); ++e) {
        const auto& r = records[e];
        for (std::size_t k = 0; k < r.steps.size(); ++k) {
            const auto& s = r.steps[k];
            const bool last = k + 1 == r.steps.size();
            json line = {{"episode", e},
                         {"target", r.target},
                         {"seed", r.seed},
                         {"step", k + 1},
                         {"translate_mm", s.action.translate_mm},
                         {"rotate_deg", s.action.rotate_deg},
                         {"executed_mm", s.executed_mm},
                         {"tip", {s.tip.x, s.tip.y}},
                         {"reward", s.reward},
                         {"done", last},
                         {"kind", to_string(last ? r.kind : Termination::none)}};
            out << line.dump() << '\n';
        }
    }
}

std::vector<EpisodeRecord> read_records_jsonl(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<EpisodeRecord> records;
    std::string text;
    int line_no = 0;
    long current = -1;
    while (std::getline(in, text)) {
        ++line_no;
        if (text.empty()) continue;
        try {
            const json j = json::parse(text);
            const long episode = j.at("episode").get<long>();
            if (episode != current) {
                records.emplace_back();
                records.back().target = j.at("target").get<std::string>();
                records.back().seed = j.at("seed").get<std::uint64_t>();
                current = episode;
            }
            EpisodeRecord& r = records.back();
            StepRecord s;
            s.action = {j.at("translate_mm").get<double>(), j.at("rotate_deg").get<double>()};
            s.executed_mm = j.at("executed_mm").get<double>();
            s.tip = {j.at("tip").at(0).get<double>(), j.at("tip").at(1).get<double>()};
            s.reward = j.at("reward").get<double>();
            r.steps.push_back(s);
            r.episode_return += s.reward;
            if (j.at("done").get<bool>()) r.kind = parse_termination(j.at("kind").get<std::string>());
        } catch (const json::exception& e) {
            throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

}  // namespace vnav
