#include "lumisplit/io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lumisplit::io {

namespace {

void put_u32le(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<char*>(b), 4);
}

uint32_t get_u32le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return uint32_t(b[0]) | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) |
           (uint32_t(b[3]) << 24);
}

}  // namespace

void write_flr(const std::string& path, const Flr& r) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os.write("FLR1", 4);
    put_u32le(os, r.w);
    put_u32le(os, r.h);
    put_u32le(os, r.c);
    static_assert(sizeof(float) == 4);
    // Assumes little-endian host (x86/ARM targets).
    os.write(reinterpret_cast<const char*>(r.data.data()),
             static_cast<std::streamsize>(r.data.size() * 4));
    if (!os) throw std::runtime_error("write failed: " + path);
}

Flr read_flr(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "FLR1", 4) != 0)
        throw std::runtime_error("bad FLR magic in " + path);
    Flr r;
    r.w = get_u32le(is);
    r.h = get_u32le(is);
    r.c = get_u32le(is);
    size_t n = static_cast<size_t>(r.w) * r.h * r.c;
    r.data.resize(n);
    is.read(reinterpret_cast<char*>(r.data.data()), static_cast<std::streamsize>(n * 4));
    if (!is) throw std::runtime_error("truncated FLR: " + path);
    return r;
}

Flr to_flr(const Image& img) {
    Flr r;
    r.w = static_cast<uint32_t>(img.w);
    r.h = static_cast<uint32_t>(img.h);
    r.c = static_cast<uint32_t>(img.c);
    r.data.reserve(img.data.size());
    for (double v : img.data) r.data.push_back(static_cast<float>(v));
    return r;
}

Image from_flr(const Flr& r) {
    Image img(static_cast<int>(r.w), static_cast<int>(r.h), static_cast<int>(r.c));
    for (size_t i = 0; i < r.data.size(); ++i) img.data[i] = r.data[i];
    return img;
}

double srgb_encode(double v) {
    v = clamp01(v);
    return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

double srgb_decode(double v) {
    v = clamp01(v);
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

void write_png(const std::string& path, const Image& linear) {
    if (linear.c != 1 && linear.c != 3)
        throw std::runtime_error("write_png: 1 or 3 channels required");
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw std::runtime_error("cannot open for write: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw std::runtime_error("libpng write error: " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, linear.w, linear.h, 8,
                 linear.c == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<unsigned char> row(static_cast<size_t>(linear.w) * linear.c);
    for (int y = 0; y < linear.h; ++y) {
        for (int x = 0; x < linear.w; ++x)
            for (int ch = 0; ch < linear.c; ++ch) {
                double s = srgb_encode(linear.at(x, y, ch));
                row[static_cast<size_t>(x) * linear.c + ch] =
                    static_cast<unsigned char>(std::lround(s * 255.0));
            }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

Image read_png(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw std::runtime_error("cannot open: " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw std::runtime_error("libpng read error: " + path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3)
        throw std::runtime_error("read_png: unsupported channel count in " + path);
    Image img(static_cast<int>(w), static_cast<int>(h), channels);
    std::vector<unsigned char> row(static_cast<size_t>(w) * channels);
    for (png_uint_32 y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (png_uint_32 x = 0; x < w; ++x)
            for (int ch = 0; ch < channels; ++ch)
                img.at(static_cast<int>(x), static_cast<int>(y), ch) =
                    srgb_decode(row[static_cast<size_t>(x) * channels + ch] / 255.0);
    }
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return img;
}

Image read_image(const std::string& path) {
    auto ends_with = [&](const char* s) {
        size_t n = std::strlen(s);
        return path.size() >= n && path.compare(path.size() - n, n, s) == 0;
    };
    if (ends_with(".flr")) return read_flr_image(path);
    if (ends_with(".png")) return read_png(path);
    throw std::runtime_error("unknown image extension: " + path);
}

bool file_exists(const std::string& path) {
    return std::filesystem::exists(path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os << content;
}

}  // namespace lumisplit::io
