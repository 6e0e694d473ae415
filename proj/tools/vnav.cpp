#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>

#include "vnav/config.hpp"
#include "vnav/errors.hpp"
#include "vnav/metrics.hpp"
#include "vnav/report.hpp"
#include "vnav/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vnav;

namespace {

struct Globals {
    std::string config_path;
    std::uint64_t seed = 7;
    std::string out_dir = "out";
    RunConfig cfg;
    std::vector<std::string> argv;
};

struct Manifest {
    json inputs = json::array();
    json outputs = json::array();
    json extra = json::object();
};

void write_manifest(const Globals& g, const std::string& command, const Manifest& m)
{
    json config = json::object();
    for (const auto& [k, v] : config_entries(g.cfg)) config[k] = v;
    json doc = {{"command", command},
                {"argv", g.argv},
                {"seed", g.seed},
                {"config_file", g.config_path.empty() ? json(nullptr) : json(g.config_path)},
                {"config", config},
                {"config_hash", config_hash(g.cfg)},
                {"inputs", m.inputs},
                {"outputs", m.outputs}};
    for (const auto& [k, v] : m.extra.items()) doc[k] = v;
    std::ofstream out(fs::path(g.out_dir) / "manifest.json");
    if (!out) throw IoError("cannot write manifest in " + g.out_dir);
    out << doc.dump(2) << '\n';
}

fs::path out_path(const Globals& g, const std::string& name, Manifest& m)
{
    m.outputs.push_back(name);
    return fs::path(g.out_dir) / name;
}

// Either a phantom sidecar on disk or one of the built-in generators.
struct PhantomSource {
    std::string path;
    std::string builtin = "aorta";
};

VesselPhantom load_source(const PhantomSource& src, const RunConfig& cfg, Manifest& m)
{
    if (!src.path.empty()) {
        m.inputs.push_back(src.path);
        return load_phantom(src.path);
    }
    const PhantomParams& p = cfg.phantom;
    if (src.builtin == "aorta")
        return generate_aorta_phantom(p.width, p.height, p.lumen_mm, static_cast<std::uint64_t>(p.seed), p.px_per_mm);
    if (src.builtin == "corridor") return generate_corridor(p.corridor_length_mm, p.corridor_width_mm, p.px_per_mm);
    throw InvalidParams("unknown built-in phantom '" + src.builtin + "' (expected aorta or corridor)");
}

void add_phantom_options(CLI::App* app, PhantomSource& src, const std::string& default_builtin)
{
    src.builtin = default_builtin;
    app->add_option("--phantom", src.path, "Phantom JSON sidecar (overrides --builtin)");
    app->add_option("--builtin", src.builtin, "Built-in phantom: aorta or corridor")
        ->check(CLI::IsMember({"aorta", "corridor"}))
        ->capture_default_str();
}

Pixel parse_point(const std::string& s)
{
    const auto comma = s.find(',');
    if (comma == std::string::npos) throw InvalidParams("expected a point as x,y, got '" + s + "'");
    try {
        return {std::stoi(s.substr(0, comma)), std::stoi(s.substr(comma + 1))};
    } catch (const std::exception&) {
        throw InvalidParams("expected a point as x,y, got '" + s + "'");
    }
}

std::string fmt_ms(const MeanStd& m)
{
    std::ostringstream s;
    s << std::fixed << std::setprecision(3) << m.mean << " +/- " << m.std;
    return s.str();
}

void print_summary(const MetricsSummary& s)
{
    std::cout << "episodes         " << s.episodes << '\n'
              << "success_rate     " << s.success_rate << '\n'
              << "episode_reward   " << fmt_ms(s.episode_reward) << '\n'
              << "episode_length   " << fmt_ms(s.episode_length) << '\n'
              << "movement_mm      " << fmt_ms(s.movement_mm) << '\n'
              << "boundary_px      " << fmt_ms(s.boundary_px) << '\n'
              << "retracement_mm   " << fmt_ms(s.retracement_mm) << '\n';
}

// ---- phantom ---------------------------------------------------------------

struct PhantomGenArgs {
    std::string kind = "aorta";
    std::string name = "phantom";
    std::string format = "png";
};

void cmd_phantom_gen(const Globals& g, const PhantomGenArgs& a)
{
    Manifest m;
    const PhantomParams& p = g.cfg.phantom;
    VesselPhantom ph = a.kind == "corridor"
                           ? generate_corridor(p.corridor_length_mm, p.corridor_width_mm, p.px_per_mm)
                           : generate_aorta_phantom(p.width, p.height, p.lumen_mm, g.seed, p.px_per_mm);
    save_phantom(ph, out_path(g, a.name + ".json", m), "." + a.format);
    m.outputs.push_back(a.name + "." + a.format);
    write_gray(phantom_view(ph), out_path(g, a.name + "_view.png", m));
    write_manifest(g, "phantom gen", m);
    std::cout << "wrote " << (fs::path(g.out_dir) / (a.name + ".json")).string() << " (" << ph.mask.width() << "x"
              << ph.mask.height() << ", " << ph.targets.size() << " targets)\n";
}

void cmd_phantom_show(const Globals& g, const PhantomSource& src)
{
    Manifest m;
    const VesselPhantom ph = load_source(src, g.cfg, m);
    if (const std::string problem = validate_phantom(ph); !problem.empty()) throw ParseError(problem);
    std::cout << "size        " << ph.mask.width() << "x" << ph.mask.height() << '\n'
              << "px_per_mm   " << ph.px_per_mm << '\n'
              << "lumen_px    " << ph.mask.count() << '\n'
              << "components  " << count_components(ph.mask) << '\n'
              << "start       " << ph.start.x << ',' << ph.start.y << '\n';
    for (const auto& [name, t] : ph.targets) std::cout << "target " << std::left << std::setw(5) << name << t.x << ',' << t.y << '\n';

    RgbImage img(ph.mask.width(), ph.mask.height());
    const GrayImage view = phantom_view(ph);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const auto v = view.pixels[static_cast<std::size_t>(y) * view.width + x];
            img.set(x, y, {v, v, v});
        }
    // Polylines in the path colour, start and targets as filled discs.
    const OverlayConfig marks;
    auto disc = [&](Pixel c, int r, Rgb col) {
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx)
                if (dx * dx + dy * dy <= r * r && c.x + dx >= 0 && c.y + dy >= 0 && c.x + dx < img.width &&
                    c.y + dy < img.height)
                    img.set(c.x + dx, c.y + dy, col);
    };
    for (const Pixel& p : ph.trunk_polyline) disc(p, 0, marks.c3);
    for (const auto& [name, poly] : ph.branch_polylines)
        for (const Pixel& p : poly) disc(p, 0, marks.c3);
    disc(ph.start, marks.r1, marks.c1);
    for (const auto& [name, t] : ph.targets) disc(t, marks.r2, marks.c2);
    write_rgb_png(img, out_path(g, "phantom_show.png", m));
    write_manifest(g, "phantom show", m);
}

// ---- plan ------------------------------------------------------------------

struct PlanArgs {
    PhantomSource src;
    std::string mask;
    std::string start;
    std::string goal;
    std::string target = "BCA";
    std::optional<double> omega;
    std::optional<std::string> mode;
    std::optional<int> connectivity;
};

void cmd_plan(Globals& g, const PlanArgs& a)
{
    Manifest m;
    PlannerConfig pc = g.cfg.env.planner;
    if (a.omega) pc.omega = *a.omega;
    if (a.mode) pc.centering = parse_centering_mode(*a.mode);
    if (a.connectivity) pc.connectivity = *a.connectivity;
    g.cfg.env.planner = pc;

    GridMask mask(1, 1);
    Pixel start, goal;
    if (!a.mask.empty()) {
        if (a.start.empty() || a.goal.empty()) throw InvalidParams("--mask needs --start and --goal");
        m.inputs.push_back(a.mask);
        mask = load_mask(a.mask);
        start = parse_point(a.start);
        goal = parse_point(a.goal);
    } else {
        VesselPhantom ph = load_source(a.src, g.cfg, m);
        const auto it = ph.targets.find(a.target);
        if (it == ph.targets.end()) throw InvalidParams("phantom has no target named '" + a.target + "'");
        start = a.start.empty() ? ph.start : parse_point(a.start);
        goal = a.goal.empty() ? it->second : parse_point(a.goal);
        mask = std::move(ph.mask);
    }
    const ScalarField heat = ndt_heatmap(mask);
    const ScalarField dist = distance_transform(mask);
    const PathPlan plan = plan_bda_star(mask, heat, start, goal, pc);
    write_path_csv(plan, out_path(g, "path.csv", m));
    write_path_svg(plan, mask, out_path(g, "path.svg", m));
    const double boundary = mean_along(plan, dist);
    m.extra["plan"] = {{"points", plan.size()}, {"length_px", plan.length()}, {"total_cost", plan.total_cost},
                       {"mean_boundary_px", boundary}};
    write_manifest(g, "plan", m);
    std::cout << std::setprecision(10) << "points            " << plan.size() << '\n'
              << "length_px         " << plan.length() << '\n'
              << "total_cost        " << plan.total_cost << '\n'
              << "mean_boundary_px  " << boundary << '\n';
}

// ---- run -------------------------------------------------------------------

struct RunArgs {
    PhantomSource src;
    std::string policy = "greedy";
    std::string qtable;
    std::string target = "BCA";
    int episodes = 20;
    int workers = 1;
};

PolicyFactory make_policy_factory(const RunArgs& a, const RunConfig& cfg, Manifest& m)
{
    if (a.policy == "greedy") return [gc = cfg.greedy] { return std::make_unique<GreedyPolicy>(gc); };
    if (a.policy == "random") return [] { return random_policy(0); };
    if (a.qtable.empty()) throw InvalidParams("--policy q needs --qtable");
    m.inputs.push_back(a.qtable);
    QTable table = load_qtable(a.qtable);
    return [table] { return std::make_unique<QPolicy>(table); };
}

void cmd_run(Globals& g, const RunArgs& a)
{
    Manifest m;
    const auto ctx = make_env_context(load_source(a.src, g.cfg, m));
    EnvConfig ec = g.cfg.env;
    ec.target = a.target;
    ec.render_observations = false;
    g.cfg.env = ec;
    const EnvFactory make_env = [ctx, ec] { return Env(ctx, ec); };
    const PolicyFactory make_policy = make_policy_factory(a, g.cfg, m);

    const auto records = evaluate(make_policy, make_env, a.episodes, g.seed, a.workers);
    write_records_jsonl(records, out_path(g, "records.jsonl", m));
    write_metrics_csv(records, ctx->distance, out_path(g, "metrics.csv", m));

    Env probe = make_env();
    probe.reset(g.seed);
    write_rgb_png(render_trajectories(records, ctx->phantom, &probe.plan()), out_path(g, "trajectories.png", m));
    {
        std::ofstream svg(out_path(g, "trajectories.svg", m));
        svg << trajectories_svg(records, ctx->phantom, &probe.plan());
    }
    const MetricsSummary s = summarize(records, ctx->distance);
    m.extra["policy"] = a.policy;
    m.extra["target"] = a.target;
    m.extra["episodes"] = a.episodes;
    m.extra["success_rate"] = s.success_rate;
    write_manifest(g, "run", m);
    std::cout << "policy           " << a.policy << " on " << a.target << '\n';
    print_summary(s);
}

// ---- train-q ---------------------------------------------------------------

struct TrainArgs {
    PhantomSource src;
    std::string target = "END";
    int episodes = 2000;
    int eval_episodes = 50;
};

void cmd_train_q(Globals& g, const TrainArgs& a)
{
    Manifest m;
    const auto ctx = make_env_context(load_source(a.src, g.cfg, m));
    EnvConfig ec = g.cfg.env;
    ec.target = a.target;
    ec.render_observations = false;
    const EnvFactory make_env = [ctx, ec] { return Env(ctx, ec); };

    const auto t0 = std::chrono::steady_clock::now();
    const QTrainingResult res = q_learning_train(make_env, a.episodes, g.seed, g.cfg.q);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    save_qtable(res.table, out_path(g, "qtable.json", m));
    write_training_curve(res.curve, out_path(g, "training_curve.csv", m));

    const QTable table = res.table;
    const auto q_records = evaluate([table] { return std::make_unique<QPolicy>(table); }, make_env, a.eval_episodes, g.seed);
    const auto r_records = evaluate([] { return random_policy(0); }, make_env, a.eval_episodes, g.seed);
    const double q_rate = summarize(q_records, ctx->distance).success_rate;
    const double r_rate = summarize(r_records, ctx->distance).success_rate;
    m.extra["training"] = {{"episodes", a.episodes}, {"states", res.table.values.size()}};
    m.extra["eval"] = {{"episodes", a.eval_episodes}, {"q_success_rate", q_rate}, {"random_success_rate", r_rate}};
    write_manifest(g, "train-q", m);
    std::cout << "trained          " << a.episodes << " episodes in " << std::fixed << std::setprecision(2) << seconds
              << " s (" << res.table.values.size() << " states)\n"
              << std::setprecision(3) << "q success        " << q_rate << '\n'
              << "random success   " << r_rate << '\n';
}

// ---- serve -----------------------------------------------------------------

struct ServeArgs {
    std::vector<std::string> phantoms;
    std::optional<int> tcp_port;
    std::optional<int> ws_port;
    bool no_ws = false;
    std::string transcript;
    std::string teleop_log;
};

void cmd_serve(Globals& g, const ServeArgs& a)
{
    Manifest m;
    PhantomRegistry registry;
    if (a.phantoms.empty()) {
        registry.add("aorta", load_source({"", "aorta"}, g.cfg, m));
        registry.add("corridor", load_source({"", "corridor"}, g.cfg, m));
    }
    for (const std::string& spec : a.phantoms) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0) throw InvalidParams("--phantom expects id=path, got '" + spec + "'");
        registry.add(spec.substr(0, eq), load_source({spec.substr(eq + 1), ""}, g.cfg, m));
    }
    if (a.tcp_port) g.cfg.serve.tcp_port = *a.tcp_port;
    if (a.ws_port) g.cfg.serve.ws_port = *a.ws_port;
    auto port = [](int p, const char* what) {
        if (p < 0 || p > 65535) throw InvalidParams(std::string(what) + " port out of range");
        return static_cast<unsigned short>(p);
    };

    ServiceConfig sc;
    sc.env = g.cfg.env;
    sc.motor = g.cfg.motor;
    sc.teleop_log = a.teleop_log.empty() ? out_path(g, "teleop_log.jsonl", m) : fs::path(a.teleop_log);
    ServerOptions so;
    so.address = g.cfg.serve.address;
    so.tcp_port = port(g.cfg.serve.tcp_port, "tcp");
    if (!a.no_ws) so.ws_port = port(g.cfg.serve.ws_port, "websocket");
    so.threads = g.cfg.serve.threads;
    if (!a.transcript.empty()) so.transcript = a.transcript;

    Server server(registry, sc, so);
    server.start();
    write_manifest(g, "serve", m);
    std::cout << "listening tcp=" << so.address << ":" << server.tcp_port();
    if (server.ws_port()) std::cout << " ws=" << so.address << ":" << *server.ws_port();
    std::cout << std::endl;
    server.run_until_signal();
    std::cout << "stopped" << std::endl;
}

// ---- report ----------------------------------------------------------------

struct ReportArgs {
    std::vector<std::string> records;
    std::vector<std::string> teleop;
};

void cmd_report(const Globals& g, const ReportArgs& a)
{
    Manifest m;
    if (a.records.empty() && a.teleop.empty()) throw InvalidParams("report needs --records and/or --teleop files");
    std::vector<TimedRun> runs;
    for (const std::string& f : a.records) {
        m.inputs.push_back(f);
        const auto r = autonomous_runs(read_records_jsonl(f), g.cfg.motor, g.cfg.report_step_overhead_ms);
        runs.insert(runs.end(), r.begin(), r.end());
    }
    for (const std::string& f : a.teleop) {
        m.inputs.push_back(f);
        const auto r = read_teleop_log(f);
        runs.insert(runs.end(), r.begin(), r.end());
    }
    const auto rows = build_report(runs);
    write_report_csv(rows, out_path(g, "report.csv", m));
    write_manifest(g, "report", m);
    std::cout << std::left << std::setw(12) << "mode" << std::setw(8) << "target" << std::setw(6) << "runs"
              << "time_s\n";
    for (const ReportRow& r : rows)
        std::cout << std::setw(12) << r.mode << std::setw(8) << r.target << std::setw(6) << r.runs << fmt_ms(r.time_s)
                  << '\n';
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"vnav: vessel navigation toolkit"};
    app.require_subcommand(1);
    Globals g;
    g.argv.assign(argv, argv + argc);
    app.add_option("--config", g.config_path, "key = value config file")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Base seed")->capture_default_str();
    app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();
    std::vector<std::string> overrides;
    app.add_option("--set", overrides, "Config override key=value (repeatable)");

    auto* phantom = app.add_subcommand("phantom", "Generate or inspect phantoms");
    phantom->require_subcommand(1);
    PhantomGenArgs gen_args;
    auto* gen = phantom->add_subcommand("gen", "Generate a phantom (mask + JSON sidecar)");
    gen->add_option("--kind", gen_args.kind)->check(CLI::IsMember({"aorta", "corridor"}))->capture_default_str();
    gen->add_option("--name", gen_args.name, "Output file stem")->capture_default_str();
    gen->add_option("--format", gen_args.format, "Mask format")->check(CLI::IsMember({"png", "pgm"}))->capture_default_str();
    PhantomSource show_src;
    auto* show = phantom->add_subcommand("show", "Print phantom facts and render it");
    add_phantom_options(show, show_src, "aorta");

    PlanArgs plan_args;
    auto* plan = app.add_subcommand("plan", "Plan a path with BDA-star");
    add_phantom_options(plan, plan_args.src, "aorta");
    plan->add_option("--mask", plan_args.mask, "Mask image (.png/.pgm) instead of a phantom")->check(CLI::ExistingFile);
    plan->add_option("--start", plan_args.start, "Start pixel x,y");
    plan->add_option("--goal", plan_args.goal, "Goal pixel x,y");
    plan->add_option("--target", plan_args.target, "Phantom target name")->capture_default_str();
    plan->add_option("--omega", plan_args.omega, "Boundary weight")->check(CLI::NonNegativeNumber);
    plan->add_option("--mode", plan_args.mode, "penalize_boundary or raw_heatmap");
    plan->add_option("--connectivity", plan_args.connectivity)->check(CLI::IsMember({4, 8}));

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "Evaluate a policy");
    add_phantom_options(run, run_args.src, "aorta");
    run->add_option("--policy", run_args.policy)->check(CLI::IsMember({"greedy", "random", "q"}))->capture_default_str();
    run->add_option("--qtable", run_args.qtable, "Q-table JSON for --policy q")->check(CLI::ExistingFile);
    run->add_option("--target", run_args.target)->capture_default_str();
    run->add_option("--episodes", run_args.episodes)->check(CLI::PositiveNumber)->capture_default_str();
    run->add_option("--workers", run_args.workers)->check(CLI::PositiveNumber)->capture_default_str();

    TrainArgs train_args;
    auto* train = app.add_subcommand("train-q", "Train the tabular Q-learning agent");
    add_phantom_options(train, train_args.src, "corridor");
    train->add_option("--target", train_args.target)->capture_default_str();
    train->add_option("--episodes", train_args.episodes)->check(CLI::PositiveNumber)->capture_default_str();
    train->add_option("--eval-episodes", train_args.eval_episodes)->check(CLI::PositiveNumber)->capture_default_str();

    ServeArgs serve_args;
    auto* serve = app.add_subcommand("serve", "Serve the JSON protocol over TCP and WebSocket");
    serve->add_option("--phantom", serve_args.phantoms, "id=path of a phantom sidecar (repeatable)");
    serve->add_option("--tcp-port", serve_args.tcp_port, "TCP port (0 = any free port)");
    serve->add_option("--ws-port", serve_args.ws_port, "WebSocket port (0 = any free port)");
    serve->add_flag("--no-ws", serve_args.no_ws, "Disable the WebSocket endpoint");
    serve->add_option("--transcript", serve_args.transcript, "Transcript log file (JSON-lines)");
    serve->add_option("--teleop-log", serve_args.teleop_log, "Teleop session log (default <out-dir>/teleop_log.jsonl)");

    ReportArgs report_args;
    auto* report = app.add_subcommand("report", "Compare autonomous and manual navigation times");
    report->add_option("--records", report_args.records, "records.jsonl from run")->check(CLI::ExistingFile);
    report->add_option("--teleop", report_args.teleop, "Teleop session logs")->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (!g.config_path.empty()) g.cfg = load_config(g.config_path);
        for (const std::string& kv : overrides) apply_config_text(g.cfg, kv, "--set");
        fs::create_directories(g.out_dir);

        if (gen->parsed())
            cmd_phantom_gen(g, gen_args);
        else if (show->parsed())
            cmd_phantom_show(g, show_src);
        else if (plan->parsed())
            cmd_plan(g, plan_args);
        else if (run->parsed())
            cmd_run(g, run_args);
        else if (train->parsed())
            cmd_train_q(g, train_args);
        else if (serve->parsed())
            cmd_serve(g, serve_args);
        else if (report->parsed())
            cmd_report(g, report_args);
    } catch (const std::exception& e) {
        std::cerr << "vnav: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
