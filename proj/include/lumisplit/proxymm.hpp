#pragma once

// Procedural morphable head model: a subdivided icosphere ellipsoid with
// seeded Gaussian-blob shape/expression/albedo bases, fixed landmarks and a
// pinhole camera. Immutable after generation; same seed => bit-identical.

#include <string>
#include <vector>

#include "lumisplit/core.hpp"
#include "lumisplit/texture.hpp"

namespace lumisplit {

struct Triangle {
    int a = 0, b = 0, c = 0;
};

struct ProxyMM {
    std::vector<Vec3> mean_vertices;
    std::vector<Triangle> triangles;
    std::vector<Vec2> uv_coords;                    // per vertex, in [0,1]^2
    std::vector<std::vector<Vec3>> shape_basis;     // K_alpha fields
    std::vector<std::vector<Vec3>> expr_basis;      // K_beta fields
    TextureSet albedo_mean;
    std::vector<Image> albedo_basis;                // K_delta diffuse RGB offsets
    std::vector<int> landmark_idx;
    uint64_t seed = 0;

    int k_alpha() const { return static_cast<int>(shape_basis.size()); }
    int k_beta() const { return static_cast<int>(expr_basis.size()); }
    int k_delta() const { return static_cast<int>(albedo_basis.size()); }
    int n_landmarks() const { return static_cast<int>(landmark_idx.size()); }
};

struct PoseCamera {
    Vec3 rotation;      // axis-angle, radians, |.| < pi
    Vec3 translation;   // head units
    double focal = 0.0; // pixels
    int width = 0, height = 0;
};

// Rodrigues rotation and its Jacobian d(R(w)v)/dw (3x3, row = output coord).
Vec3 rotate_axis_angle(const Vec3& w, const Vec3& v);
void rotate_axis_angle_jacobian(const Vec3& w, const Vec3& v, double J[3][3]);

ProxyMM generate_model(uint64_t seed, int k_alpha = 8, int k_beta = 8,
                       int k_delta = 8, int tex_size = 256);

// V = mean + sum alpha_i shape_i + sum beta_j expr_j, plus area-weighted
// unit vertex normals.
struct GeometryEval {
    std::vector<Vec3> vertices;
    std::vector<Vec3> normals;
};
GeometryEval evaluate_geometry(const ProxyMM& model, const std::vector<double>& alpha,
                               const std::vector<double>& beta);

// T0: diffuse = clamp(mean + sum delta_i basis_i, 0, 1); specular/roughness
// are the model means.
TextureSet evaluate_albedo(const ProxyMM& model, const std::vector<double>& delta);

std::vector<Vec2> project_landmarks(const ProxyMM& model, const std::vector<double>& alpha,
                                    const std::vector<double>& beta, const PoseCamera& pose);

// world point -> pixel. Throws if z <= 0 in camera frame.
Vec2 project_point(const PoseCamera& pose, const Vec3& world);

std::string serialize_model(const ProxyMM& model);
ProxyMM deserialize_model(const std::string& json_text);
uint64_t model_hash(const ProxyMM& model);

}  // namespace lumisplit
