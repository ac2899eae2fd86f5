#pragma once

// The eight loss terms of the fitting objective plus their helpers:
// K-means palette, 5x5 neighbor variation, and the pluggable plausibility
// scorer. Every loss returns its value and exact gradients w.r.t. its
// optimizable inputs.

#include <memory>
#include <string>
#include <vector>

#include "lumisplit/core.hpp"
#include "lumisplit/texture.hpp"

namespace lumisplit {

// ---- landmark / photometric / segmentation -------------------------------

// mean per-landmark euclidean distance; d_q_out filled if non-null
double landmark_loss(const std::vector<Vec2>& q_out, const std::vector<Vec2>& q_in,
                     std::vector<Vec2>* d_q_out = nullptr);

// mean over pixels of the per-pixel RGB L2 norm
double photometric_loss(const Image& i_out, const Image& i_in, Image* d_i_out = nullptr);

// mean over pixels of |g - h| (probabilities, 1 channel)
double seg_loss(const Image& g_out, const Image& h_out, Image* d_g = nullptr);

// ---- mask regularizers ----------------------------------------------------

// pushes each M_N^i away from the per-pixel mean of all masks; in [-1, 0]
double area_loss(const std::vector<Image>& m_n, std::vector<Image>* d_m = nullptr);

// pushes each M_L^i away from its own spatial mean; in [-1, 0]
double bin_loss(const std::vector<Image>& m_l, std::vector<Image>* d_m = nullptr);

// ---- texture priors -------------------------------------------------------

struct Palette {
    std::vector<Vec3> colors;  // k entries (4x4 matrix C by default)
    uint64_t source_hash = 0;
    std::string warning;       // set when k had to be reduced
};

Palette kmeans_palette(const Image& t0_diffuse, int k, uint64_t seed);

// mean over texels of the distance to the nearest palette color
double global_prior_loss(const Image& t_diffuse, const Palette& palette,
                         Image* d_t = nullptr);

// 24 center-minus-shifted rasters over the 5x5 window, clamp-to-edge
std::vector<Image> neighbor_variation(const Image& channel);

// neighbor-variation matching of T against T0 over all three albedos
double local_prior_loss(const TextureSet& t, const TextureSet& t0,
                        TextureSet* d_t = nullptr);

// ---- human prior ----------------------------------------------------------

class PlausibilityScorer {
public:
    virtual ~PlausibilityScorer() = default;
    virtual std::vector<double> scores(const Image& face) const = 0;
    // d scores[idx] / d face, same shape as face
    virtual Image score_gradient(const Image& face, int idx) const = 0;
};

// sum over faces of the best score's gap to 1; d_faces aligned with i_rs
double human_prior_loss(const std::vector<Image>& i_rs, const PlausibilityScorer& scorer,
                        std::vector<Image>* d_faces = nullptr);

// Deterministic differentiable stand-in for a recognition network: softmax
// (temperature 0.05) over negative MSE against a bank of reference renders.
class ReferenceBankScorer : public PlausibilityScorer {
public:
    ReferenceBankScorer(std::vector<Image> bank, double temperature = 0.05);
    std::vector<double> scores(const Image& face) const override;
    Image score_gradient(const Image& face, int idx) const override;

    static constexpr int kCropSize = 32;

private:
    std::vector<Image> bank_;  // kCropSize^2 x 3 references
    double tau_;
    std::vector<double> mse_all(const Image& face) const;
};

Image box_downsample(const Image& img, int out_w, int out_h);

}  // namespace lumisplit
