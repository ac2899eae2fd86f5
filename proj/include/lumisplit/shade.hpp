#pragma once

// Spherical-harmonics shading with the diffuse/specular/roughness local
// reflectance model, per-condition rendering and the mask-weighted
// compositions. Forward plus hand-derived reverse-mode gradients.

#include <vector>

#include "lumisplit/core.hpp"
#include "lumisplit/raster.hpp"
#include "lumisplit/texture.hpp"

namespace lumisplit {

// n SH coefficient blocks, one per light condition.
struct LightSet {
    int n = 0;
    int c_sh = 9;
    // coeffs[i] has 3*c_sh entries, channel-major: [ch*c_sh + k]
    std::vector<std::vector<double>> coeffs;
    std::vector<uint8_t> alive;

    // gamma_i = 2*(i/n) - 1 over every coefficient, i = 1..n.
    static LightSet initialize(int n, int c_sh);
    int n_alive() const;
    std::vector<int> alive_indices() const;
};

// Real SH basis Y_0..Y_{c_sh-1} in standard (l,m) order; c_sh in {1,4,9,16,25}.
std::vector<double> sh_basis(const Vec3& unit_normal, int c_sh);

// Bilinear texture sample with the footprint kept for gradient scatter.
struct TexSample {
    double diffuse[3];
    double specular;
    double roughness;
    int px[4], py[4];
    double w[4];
};
TexSample sample_texture(const TextureSet& tex, const Vec2& uv);

// Everything shading needs about one covered pixel, fixed per iteration.
struct ShadePoint {
    Vec3 normal;              // camera space, unit
    Vec3 view;                // surface -> camera, unit
    std::vector<double> sh;   // basis at normal
    TexSample tex;
};

// Forward shading of one pixel under one condition.
Vec3 shade_point(const ShadePoint& p, const std::vector<double>& gamma, int c_sh);

// Gradient accumulators for one pixel/condition. d_gamma has 3*c_sh entries.
struct ShadeGrad {
    double d_diffuse[3] = {0, 0, 0};
    double d_specular = 0;
    double d_roughness = 0;
};
void shade_point_backward(const ShadePoint& p, const std::vector<double>& gamma,
                          int c_sh, const Vec3& d_rgb, ShadeGrad* d_tex,
                          double* d_gamma);

ShadePoint make_shade_point(const GBuffer& gb, int pixel, const TextureSet& tex, int c_sh);

// One full-frame image per requested condition; zero outside M_R.
std::vector<Image> render_conditions(const GBuffer& gb, const TextureSet& tex,
                                     const LightSet& lights,
                                     const std::vector<int>& condition_ids);

// I_R = sum I_Rs[i] .* M_L[i];  I_out = I_R .* M_o + I_in .* (1 - M_o)
struct Composed {
    Image i_r;
    Image i_out;
};
Composed compose(const std::vector<Image>& i_rs, const std::vector<Image>& m_l,
                 const Image& m_o, const Image& i_in);

}  // namespace lumisplit
