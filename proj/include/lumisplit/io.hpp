#pragma once

// Raster I/O. Two containers:
//  - FLR: little-endian float32, magic "FLR1", bit-exact round trip. Used for
//    masks, textures, field weights and debug buffers.
//  - PNG: 8-bit sRGB at the edges; everything in memory is linear RGB.

#include <cstdint>
#include <string>
#include <vector>

#include "lumisplit/core.hpp"

namespace lumisplit::io {

struct Flr {
    uint32_t w = 0, h = 0, c = 0;
    std::vector<float> data;  // row-major, channel-interleaved
};

void write_flr(const std::string& path, const Flr& r);
Flr read_flr(const std::string& path);

// Image <-> Flr (double <-> float cast)
Flr to_flr(const Image& img);
Image from_flr(const Flr& r);

inline void write_flr(const std::string& path, const Image& img) {
    write_flr(path, to_flr(img));
}
inline Image read_flr_image(const std::string& path) {
    return from_flr(read_flr(path));
}

// sRGB transfer (piecewise IEC 61966-2-1)
double srgb_encode(double linear);
double srgb_decode(double srgb);

// Linear -> 8-bit sRGB PNG. 1-channel images are written as grayscale.
void write_png(const std::string& path, const Image& linear);
// 8-bit sRGB PNG -> linear image (3 channels, or 1 for grayscale files).
Image read_png(const std::string& path);

// Reads either container by extension.
Image read_image(const std::string& path);

bool file_exists(const std::string& path);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace lumisplit::io
