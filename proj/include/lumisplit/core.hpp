#pragma once

// Small value types, image container, seeded RNG and hashing shared by the
// whole toolkit. Everything numerical is double precision.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace lumisplit {

struct Vec2 {
    double x = 0.0, y = 0.0;
    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}
    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double norm() const { return std::sqrt(x * x + y * y); }
};

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}
    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const {
        double n = norm();
        return n > 0.0 ? Vec3{x / n, y / n, z / n} : Vec3{0, 0, 0};
    }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Row-major interleaved raster of doubles; c channels per pixel.
struct Image {
    int w = 0, h = 0, c = 0;
    std::vector<double> data;

    Image() = default;
    Image(int w_, int h_, int c_, double fill = 0.0)
        : w(w_), h(h_), c(c_), data(static_cast<size_t>(w_) * h_ * c_, fill) {}

    double& at(int x, int y, int ch) {
        return data[(static_cast<size_t>(y) * w + x) * c + ch];
    }
    double at(int x, int y, int ch) const {
        return data[(static_cast<size_t>(y) * w + x) * c + ch];
    }
    size_t pixels() const { return static_cast<size_t>(w) * h; }
    size_t size() const { return data.size(); }
    bool same_shape(const Image& o) const { return w == o.w && h == o.h && c == o.c; }
};

// Deterministic RNG used everywhere a seed appears in an interface.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}
    double uniform(double lo = 0.0, double hi = 1.0) {
        return std::uniform_real_distribution<double>(lo, hi)(eng_);
    }
    double normal(double mean = 0.0, double stddev = 1.0) {
        return std::normal_distribution<double>(mean, stddev)(eng_);
    }
    int uniform_int(int lo, int hi) {  // inclusive range
        return std::uniform_int_distribution<int>(lo, hi)(eng_);
    }
    uint64_t next_u64() { return eng_(); }
    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
};

// FNV-1a over raw bytes; used for reproducibility checks on serialized outputs.
inline uint64_t fnv1a(const void* bytes, size_t n, uint64_t h = 1469598103934665603ULL) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

inline uint64_t hash_doubles(const std::vector<double>& v, uint64_t h = 1469598103934665603ULL) {
    return fnv1a(v.data(), v.size() * sizeof(double), h);
}

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// Rec.601 luma; also used as the channel weighting for SH irradiance luma.
constexpr double kLumaR = 0.299, kLumaG = 0.587, kLumaB = 0.114;
inline double luma(double r, double g, double b) {
    return kLumaR * r + kLumaG * g + kLumaB * b;
}

}  // namespace lumisplit
