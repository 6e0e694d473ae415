#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "vnav/agents.hpp"
#include "vnav/errors.hpp"

namespace vnav {

using nlohmann::json;

QKey QTable::key(Vec2 tip, double heading_deg) const
{
    const double bin = 360.0 / disc.heading_bins;
    double h = std::fmod(heading_deg + bin / 2.0, 360.0);
    if (h < 0.0) h += 360.0;
    const int hb = std::min(disc.heading_bins - 1, static_cast<int>(h / bin));
    return {static_cast<int>(std::floor(tip.x / disc.cell_px)), static_cast<int>(std::floor(tip.y / disc.cell_px)), hb};
}

std::array<double, QDiscretization::kActions>& QTable::row(const QKey& k)
{
    auto it = values.find(k);
    if (it == values.end()) {
        std::array<double, QDiscretization::kActions> init;
        init.fill(initial_value);
        it = values.emplace(k, init).first;
    }
    return it->second;
}

int QTable::best_action(const QKey& k) const
{
    const auto it = values.find(k);
    if (it == values.end()) return 0;
    const auto& q = it->second;
    return static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
}

QTrainingResult q_learning_train(const EnvFactory& make_env, int episodes, std::uint64_t seed, const QHyperparams& hp)
{
    if (episodes < 1) throw InvalidParams("episodes must be >= 1");
    if (hp.disc.cell_px <= 0.0 || hp.disc.heading_bins < 1) throw InvalidParams("invalid discretization");

    QTrainingResult out;
    out.table.disc = hp.disc;
    out.table.initial_value = hp.initial_value;
    QTable& q = out.table;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<int> any_action(0, QDiscretization::kActions - 1);

    Env env = make_env();
    const double decay_episodes = std::max(1.0, hp.epsilon_decay_fraction * episodes);
    for (int ep = 0; ep < episodes; ++ep) {
        const double eps = std::max(hp.epsilon_end, hp.epsilon_start - (hp.epsilon_start - hp.epsilon_end) * ep / decay_episodes);
        env.reset(episode_seed(seed, static_cast<std::uint64_t>(ep)));
        QKey s = q.key(env.state().tip, env.state().heading_deg);

        TrainingEpisode stat;
        stat.episode = ep;
        bool done = false;
        while (!done) {
            const int a = coin(rng) < eps ? any_action(rng) : q.best_action(s);
            const StepResult r = env.step(q.disc.action(a));
            const QKey next = q.key(r.info.tip, r.info.heading_deg);
            double target = r.reward;
            if (!r.done) {
                const auto& nrow = q.row(next);
                target += hp.discount * *std::max_element(nrow.begin(), nrow.end());
            }
            double& value = q.row(s)[a];
            value += hp.learning_rate * (target - value);

            stat.episode_return += r.reward;
            stat.length += 1;
            stat.kind = r.info.kind;
            done = r.done;
            s = next;
        }
        out.curve.push_back(stat);
    }
    return out;
}

Action QPolicy::act(const PolicyInput& in)
{
    return clamp_action(table_.disc.action(table_.best_action(table_.key(in.tip, in.heading_deg))), in.limits);
}

void save_qtable(const QTable& table, const std::filesystem::path& path)
{
    json doc;
    doc["version"] = 1;
    doc["cell_px"] = table.disc.cell_px;
    doc["heading_bins"] = table.disc.heading_bins;
    doc["translate_mm"] = table.disc.translate_mm;
    doc["rotate_deg"] = table.disc.rotate_deg;
    doc["initial_value"] = table.initial_value;
    json entries = json::array();
    for (const auto& [k, row] : table.values) entries.push_back({{"s", {k.cx, k.cy, k.heading}}, {"q", row}});
    doc["entries"] = std::move(entries);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << doc.dump() << '\n';
}

QTable load_qtable(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    QTable t;
    try {
        const json doc = json::parse(in);
        if (doc.at("version").get<int>() != 1) throw ParseError(path.string() + ": unsupported version");
        t.disc.cell_px = doc.at("cell_px").get<double>();
        t.disc.heading_bins = doc.at("heading_bins").get<int>();
        t.disc.translate_mm = doc.at("translate_mm").get<std::array<double, 3>>();
        t.disc.rotate_deg = doc.at("rotate_deg").get<std::array<double, 3>>();
        t.initial_value = doc.at("initial_value").get<double>();
        for (const json& e : doc.at("entries")) {
            const auto s = e.at("s").get<std::array<int, 3>>();
            const auto row = e.at("q").get<std::array<double, QDiscretization::kActions>>();
            for (double v : row)
                if (!std::isfinite(v)) throw ParseError(path.string() + ": non-finite Q value");
            t.values[{s[0], s[1], s[2]}] = row;
        }
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (!(t.disc.cell_px > 0.0) || t.disc.heading_bins < 1) throw ParseError(path.string() + ": invalid discretization");
    return t;
}

void write_training_curve(const std::vector<TrainingEpisode>& curve, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "episode,return,length\n";
    out.precision(10);
    for (const auto& e : curve) out << e.episode << ',' << e.episode_return << ',' << e.length << '\n';
}

}  // namespace vnav
