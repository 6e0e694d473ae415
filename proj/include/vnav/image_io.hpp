#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vnav/raster.hpp"

namespace vnav {

struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // row-major

    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    bool operator==(const GrayImage&) const = default;
};

using Rgb = std::array<std::uint8_t, 3>;

struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // row-major, interleaved RGB

    RgbImage() = default;
    RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}
    Rgb at(int x, int y) const
    {
        const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
        return {pixels[i], pixels[i + 1], pixels[i + 2]};
    }
    void set(int x, int y, Rgb c)
    {
        const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
        pixels[i] = c[0];
        pixels[i + 1] = c[1];
        pixels[i + 2] = c[2];
    }
    bool operator==(const RgbImage&) const = default;
};

// 8-bit single-channel PGM (P5) and PNG. Format is chosen by extension.
GrayImage read_gray(const std::filesystem::path& path);
void write_gray(const GrayImage& img, const std::filesystem::path& path);
void write_rgb_png(const RgbImage& img, const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const RgbImage& img);
std::vector<std::uint8_t> encode_png(const GrayImage& img);
RgbImage decode_png_rgb(const std::vector<std::uint8_t>& bytes);

GridMask load_mask(const std::filesystem::path& path);
// Lumen pixels are written as 255.
void save_mask(const GridMask& mask, const std::filesystem::path& path);

GrayImage mask_to_gray(const GridMask& mask, std::uint8_t vessel = 255, std::uint8_t background = 0);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace vnav
