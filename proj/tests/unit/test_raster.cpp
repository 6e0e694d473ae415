#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "vnav/errors.hpp"
#include "vnav/image_io.hpp"
#include "vnav/phantom.hpp"
#include "vnav/raster.hpp"

using namespace vnav;

namespace {

GridMask filled(int w, int h)
{
    GridMask m(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) m.set(x, y, true);
    return m;
}

void check_field_near(const ScalarField& a, const ScalarField& b, double tol)
{
    REQUIRE(a.width() == b.width());
    REQUIRE(a.height() == b.height());
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) {
            INFO("pixel " << x << "," << y);
            CHECK(std::abs(a.at(x, y) - b.at(x, y)) <= tol);
        }
}

std::filesystem::path scratch(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / "vnav_unit";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_SUITE("raster")
{
    TEST_CASE("distance transform of an all-zero mask is zero")
    {
        const ScalarField d = distance_transform(GridMask(4, 4));
        for (double v : d.cells()) CHECK(v == 0.0);
    }

    TEST_CASE("distance transform of a 3x3 block counts the implicit border")
    {
        const ScalarField d = distance_transform(filled(3, 3));
        const double expect[3][3] = {{1, 1, 1}, {1, 2, 1}, {1, 1, 1}};
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 3; ++x) CHECK(d.at(x, y) == expect[y][x]);
    }

    TEST_CASE("distance transform of a single row is one everywhere")
    {
        const ScalarField d = distance_transform(filled(5, 1));
        for (double v : d.cells()) CHECK(v == 1.0);
    }

    TEST_CASE("distance transform matches brute force on random masks")
    {
        std::mt19937_64 rng(101);
        for (int i = 0; i < 60; ++i) {
            const GridMask m = oracle::random_mask(rng, 32);
            check_field_near(distance_transform(m), oracle::brute_distance_transform(m), 1e-9);
        }
    }

    TEST_CASE("distance transform handles diagonal-only nearest background")
    {
        // Hole at the corner of a 5x5 block: the center is sqrt(8) from it but 3 from the border.
        GridMask m = filled(5, 5);
        m.set(0, 0, false);
        const ScalarField d = distance_transform(m);
        CHECK(d.at(2, 2) == doctest::Approx(std::sqrt(8.0)).epsilon(1e-12));
        CHECK(d.at(1, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    }

    TEST_CASE("disk kernel shape")
    {
        const DiskKernel k1(1);
        CHECK(k1.side() == 3);
        CHECK(k1.count() == 5);
        CHECK(k1.contains(0, 0));
        CHECK_FALSE(k1.contains(1, 1));
        const DiskKernel k3(3);
        for (int dy = -3; dy <= 3; ++dy)
            for (int dx = -3; dx <= 3; ++dx) {
                CHECK(k3.contains(dx, dy) == (dx * dx + dy * dy <= 9));
                CHECK(k3.contains(dx, dy) == k3.contains(-dx, -dy));
            }
        CHECK(DiskKernel(2, KernelShape::square).count() == 25);
        CHECK_THROWS_AS(DiskKernel(0), InvalidParams);
    }

    TEST_CASE("convolution of an impulse stamps the kernel")
    {
        GridMask m(7, 7);
        m.set(3, 3, true);
        const DiskKernel k(2);
        const ScalarField c = convolve(m, k);
        for (int y = 0; y < 7; ++y)
            for (int x = 0; x < 7; ++x) CHECK(c.at(x, y) == (k.contains(x - 3, y - 3) ? 1.0 : 0.0));
    }

    TEST_CASE("convolution of a 3x3 block with a radius-1 disk")
    {
        const ScalarField c = convolve(filled(3, 3), DiskKernel(1));
        CHECK(c.at(1, 1) == 5.0);
        CHECK(c.at(0, 0) == 3.0);
        const ScalarField empty = convolve(GridMask(6, 4), DiskKernel(2));
        for (double v : empty.cells()) CHECK(v == 0.0);
    }

    TEST_CASE("convolution equals nested-loop counting")
    {
        std::mt19937_64 rng(202);
        for (int i = 0; i < 40; ++i) {
            const GridMask m = oracle::random_mask(rng, 32);
            for (int r : {1, 2, 5}) {
                CHECK(convolve(m, DiskKernel(r)) == oracle::nested_convolve(m, r, true));
                CHECK(convolve(m, DiskKernel(r, KernelShape::square)) == oracle::nested_convolve(m, r, false));
            }
        }
    }

    TEST_CASE("heatmap of an isolated pixel is one")
    {
        GridMask m(5, 5);
        m.set(2, 2, true);
        const ScalarField h = ndt_heatmap(m);
        CHECK(h.at(2, 2) == 1.0);
        CHECK(h.at(0, 0) == 0.0);
    }

    TEST_CASE("heatmap of a 3x3 block follows the scalar formula")
    {
        // max D = 2 so r = 2; every pixel of the block is within the radius-2 disk of the center.
        const ScalarField h = ndt_heatmap(filled(3, 3));
        CHECK(h.at(1, 1) == doctest::Approx(2.0 / 9.0).epsilon(1e-15));
        // Corner: a radius-2 disk at (0,0) keeps rows of 3, 2 and 1 pixels inside the block.
        CHECK(h.at(0, 0) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
        check_field_near(h, oracle::heatmap(filled(3, 3)), 1e-15);
    }

    TEST_CASE("heatmap matches the oracle and is zero exactly off the lumen")
    {
        std::mt19937_64 rng(303);
        for (int i = 0; i < 25; ++i) {
            const GridMask m = oracle::random_mask(rng, 24);
            if (m.count() == 0) {
                CHECK_THROWS_AS(ndt_heatmap(m), EmptyMask);
                continue;
            }
            const ScalarField h = ndt_heatmap(m);
            check_field_near(h, oracle::heatmap(m), 1e-12);
            for (int y = 0; y < m.height(); ++y)
                for (int x = 0; x < m.width(); ++x) {
                    CHECK(std::isfinite(h.at(x, y)));
                    CHECK(h.at(x, y) >= 0.0);
                    CHECK((h.at(x, y) > 0.0) == static_cast<bool>(m.at(x, y)));
                }
        }
    }

    TEST_CASE("heatmap of an empty mask throws")
    {
        CHECK_THROWS_AS(ndt_heatmap(GridMask(3, 3)), EmptyMask);
    }

    TEST_CASE("corridor heatmap is symmetric about the axis")
    {
        const VesselPhantom c = generate_corridor(40, 10, 2.0);
        const ScalarField h = ndt_heatmap(c.mask);
        const int top = kCorridorMargin;
        const int bottom = kCorridorMargin + 19;
        for (int x = 0; x < c.mask.width(); ++x)
            for (int k = 0; k < 10; ++k) CHECK(h.at(x, top + k) == h.at(x, bottom - k));
    }

    TEST_CASE("mask files round-trip through PGM and PNG")
    {
        std::mt19937_64 rng(404);
        const GridMask m = oracle::random_mask(rng, 32);
        for (const char* ext : {".pgm", ".png"}) {
            const auto path = scratch(std::string("mask") + ext);
            save_mask(m, path);
            CHECK(load_mask(path) == m);
        }
    }

    TEST_CASE("any nonzero sample is a vessel pixel")
    {
        const std::vector<std::uint8_t> samples{0, 1, 128, 255};
        const GridMask m(2, 2, samples);
        CHECK(m.at(0, 0) == 0);
        CHECK(m.at(1, 0) == 1);
        CHECK(m.at(0, 1) == 1);
        CHECK(m.at(1, 1) == 1);
    }

    TEST_CASE("PGM header with comments parses; truncated data is rejected")
    {
        const auto good = scratch("comment.pgm");
        {
            std::ofstream out(good, std::ios::binary);
            out << "P5\n# made by hand\n3 1\n255\n";
            out.put(0).put(9).put(0);
        }
        const GridMask m = load_mask(good);
        CHECK(m.width() == 3);
        CHECK(m.count() == 1);

        const auto bad = scratch("short.pgm");
        {
            std::ofstream out(bad, std::ios::binary);
            out << "P5\n4 4\n255\n";
            out.put(1);
        }
        CHECK_THROWS_AS(load_mask(bad), ParseError);
        const auto ascii = scratch("ascii.pgm");
        {
            std::ofstream out(ascii);
            out << "P2\n1 1\n255\n0\n";
        }
        CHECK_THROWS_AS(load_mask(ascii), ParseError);
        CHECK_THROWS_AS(load_mask(scratch("missing.png")), IoError);
    }

    TEST_CASE("base64 round trip")
    {
        const std::vector<std::uint8_t> bytes{0, 1, 2, 250, 251, 252, 253};
        CHECK(base64_encode({'M', 'a', 'n'}) == "TWFu");
        CHECK(base64_decode(base64_encode(bytes)) == bytes);
        for (std::size_t n = 0; n < 7; ++n) {
            const std::vector<std::uint8_t> prefix(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(n));
            CHECK(base64_decode(base64_encode(prefix)) == prefix);
        }
        CHECK_THROWS_AS(base64_decode("@@@@"), ParseError);
        CHECK_THROWS_AS(base64_decode("TW=u"), ParseError);
    }
}
