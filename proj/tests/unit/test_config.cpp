#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "vnav/config.hpp"
#include "vnav/errors.hpp"

using namespace vnav;

TEST_SUITE("config")
{
    TEST_CASE("defaults carry the documented hyperparameters")
    {
        const RunConfig c;
        CHECK(c.env.max_steps == 50);
        CHECK(c.env.limits.max_translate_mm == 20.0);
        CHECK(c.env.limits.max_rotate_deg == 90.0);
        CHECK(c.env.reward.r_success == 50.0);
        CHECK(c.env.reward.delta_px == 40.0);
        CHECK(c.env.reward.omega1 == 0.005);
        CHECK(c.env.reward.omega2 == 0.01);
        CHECK(c.env.planner.omega == 2.0);
        CHECK(c.env.planner.centering == CenteringMode::penalize_boundary);
        CHECK_FALSE(c.env.reward.d_f_mm.has_value());
    }

    TEST_CASE("key = value text with comments")
    {
        RunConfig c;
        apply_config_text(c, "# planner\nplanner.omega = 4   # stronger\n\nplanner.mode=raw_heatmap\nreward.d_f_mm = 300\n"
                             "overlay.c1 = 1, 2, 3\nserve.address = 0.0.0.0\n");
        CHECK(c.env.planner.omega == 4.0);
        CHECK(c.env.planner.centering == CenteringMode::raw_heatmap);
        CHECK(*c.env.reward.d_f_mm == 300.0);
        CHECK(c.env.overlay.c1 == Rgb{1, 2, 3});
        CHECK(c.serve.address == "0.0.0.0");
        apply_config_value(c, "reward.d_f_mm", "auto");
        CHECK_FALSE(c.env.reward.d_f_mm.has_value());
    }

    TEST_CASE("errors name the line")
    {
        RunConfig c;
        auto message = [&](const std::string& text) {
            try {
                apply_config_text(c, text, "cfg");
            } catch (const ParseError& e) {
                return std::string(e.what());
            }
            return std::string();
        };
        CHECK(message("env.max_steps = 10\nnonsense\n") == "cfg:2: expected 'key = value'");
        CHECK(message("bogus.key = 1") == "cfg:1: unknown config key 'bogus.key'");
        CHECK(message("env.max_steps = ten").find("cfg:1: env.max_steps: expected an integer") == 0);
        CHECK(message("planner.omega = 1.5x").find("expected a number") != std::string::npos);
        CHECK(message("overlay.c2 = 1,2").find("expected r,g,b") != std::string::npos);
        CHECK(message("overlay.c2 = 1,2,300").find("out of range") != std::string::npos);
        CHECK(message("planner.mode = sideways").find("unknown centering mode") != std::string::npos);
        CHECK_THROWS_AS(load_config("/nonexistent/vnav.cfg"), IoError);
    }

    TEST_CASE("listing round-trips and the hash follows the values")
    {
        RunConfig a;
        a.env.planner.omega = 3.25;
        a.env.reward.d_f_mm = 123.5;
        RunConfig b;
        for (const auto& [k, v] : config_entries(a)) apply_config_value(b, k, v);
        CHECK(config_entries(a) == config_entries(b));
        CHECK(config_hash(a) == config_hash(b));
        CHECK(config_hash(a) != config_hash(RunConfig{}));
        CHECK(config_hash(a).size() == 16);

        const auto entries = config_entries(a);
        CHECK(std::is_sorted(entries.begin(), entries.end()));

        const auto path = std::filesystem::temp_directory_path() / "vnav_unit_cfg.txt";
        {
            std::ofstream out(path);
            for (const auto& [k, v] : entries) out << k << " = " << v << '\n';
        }
        CHECK(config_hash(load_config(path)) == config_hash(a));
    }
}
