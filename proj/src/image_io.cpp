#include "vnav/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <boost/beast/core/detail/base64.hpp>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "vnav/errors.hpp"

namespace vnav {

namespace {

std::string lower_ext(const std::filesystem::path& path)
{
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

// Skips whitespace and '#' comments in a PNM header, then reads one integer.
int pnm_int(const std::vector<std::uint8_t>& data, std::size_t& pos, const std::string& what)
{
    while (pos < data.size()) {
        if (data[pos] == '#') {
            while (pos < data.size() && data[pos] != '\n') ++pos;
        } else if (std::isspace(data[pos])) {
            ++pos;
        } else {
            break;
        }
    }
    if (pos >= data.size() || !std::isdigit(data[pos])) throw ParseError("PGM header: expected " + what);
    long v = 0;
    while (pos < data.size() && std::isdigit(data[pos])) {
        v = v * 10 + (data[pos++] - '0');
        if (v > 1'000'000) throw ParseError("PGM header: " + what + " out of range");
    }
    return static_cast<int>(v);
}

GrayImage decode_pgm(const std::vector<std::uint8_t>& data)
{
    if (data.size() < 2 || data[0] != 'P' || data[1] != '5') throw ParseError("not a binary PGM (P5) file");
    std::size_t pos = 2;
    GrayImage img;
    img.width = pnm_int(data, pos, "width");
    img.height = pnm_int(data, pos, "height");
    const int maxval = pnm_int(data, pos, "maxval");
    if (img.width <= 0 || img.height <= 0) throw ParseError("PGM header: non-positive dimensions");
    if (maxval <= 0 || maxval > 255) throw ParseError("PGM header: only 8-bit maxval is supported");
    ++pos;  // single whitespace after maxval
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
    if (data.size() < pos + n) throw ParseError("PGM data truncated");
    img.pixels.assign(data.begin() + static_cast<std::ptrdiff_t>(pos),
                      data.begin() + static_cast<std::ptrdiff_t>(pos + n));
    return img;
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img)
{
    const std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

std::vector<std::uint8_t> encode_png_raw(int width, int height, png_uint_32 format, const std::uint8_t* data)
{
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = format;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, data, 0, nullptr))
        throw IoError(std::string("png encode: ") + image.message);
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, data, 0, nullptr))
        throw IoError(std::string("png encode: ") + image.message);
    out.resize(size);
    return out;
}

std::vector<std::uint8_t> decode_png_raw(const std::vector<std::uint8_t>& bytes, png_uint_32 format, int& width,
                                         int& height)
{
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        throw ParseError(std::string("png decode: ") + image.message);
    image.format = format;
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
        png_image_free(&image);
        throw ParseError(std::string("png decode: ") + image.message);
    }
    width = static_cast<int>(image.width);
    height = static_cast<int>(image.height);
    return buf;
}

}  // namespace

GrayImage read_gray(const std::filesystem::path& path)
{
    const auto bytes = read_file(path);
    const std::string ext = lower_ext(path);
    if (ext == ".pgm") return decode_pgm(bytes);
    if (ext == ".png") {
        GrayImage img;
        img.pixels = decode_png_raw(bytes, PNG_FORMAT_GRAY, img.width, img.height);
        return img;
    }
    throw ParseError("unsupported image extension '" + ext + "' (expected .pgm or .png)");
}

void write_gray(const GrayImage& img, const std::filesystem::path& path)
{
    const std::string ext = lower_ext(path);
    if (ext == ".pgm")
        write_file(path, encode_pgm(img));
    else if (ext == ".png")
        write_file(path, encode_png(img));
    else
        throw IoError("unsupported image extension '" + ext + "' (expected .pgm or .png)");
}

void write_rgb_png(const RgbImage& img, const std::filesystem::path& path) { write_file(path, encode_png(img)); }

std::vector<std::uint8_t> encode_png(const RgbImage& img)
{
    return encode_png_raw(img.width, img.height, PNG_FORMAT_RGB, img.pixels.data());
}

std::vector<std::uint8_t> encode_png(const GrayImage& img)
{
    return encode_png_raw(img.width, img.height, PNG_FORMAT_GRAY, img.pixels.data());
}

RgbImage decode_png_rgb(const std::vector<std::uint8_t>& bytes)
{
    RgbImage img;
    img.pixels = decode_png_raw(bytes, PNG_FORMAT_RGB, img.width, img.height);
    return img;
}

GridMask load_mask(const std::filesystem::path& path)
{
    const GrayImage img = read_gray(path);
    return GridMask(img.width, img.height, img.pixels);
}

void save_mask(const GridMask& mask, const std::filesystem::path& path) { write_gray(mask_to_gray(mask), path); }

GrayImage mask_to_gray(const GridMask& mask, std::uint8_t vessel, std::uint8_t background)
{
    GrayImage img{mask.width(), mask.height(), {}};
    img.pixels.resize(mask.size());
    std::transform(mask.cells().begin(), mask.cells().end(), img.pixels.begin(),
                   [&](std::uint8_t c) { return c ? vessel : background; });
    return img;
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes)
{
    namespace b64 = boost::beast::detail::base64;
    std::string out(b64::encoded_size(bytes.size()), '\0');
    out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
    return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text)
{
    namespace b64 = boost::beast::detail::base64;
    // The decoder stops at '=' padding; at most two trailing pad characters are allowed.
    std::size_t n = text.size();
    for (int pad = 0; pad < 2 && n > 0 && text[n - 1] == '='; ++pad) --n;
    std::vector<std::uint8_t> out(b64::decoded_size(text.size()));
    const auto [written, read] = b64::decode(out.data(), text.data(), n);
    if (read != n) throw ParseError("invalid base64 payload");
    out.resize(written);
    return out;
}

}  // namespace vnav
