#pragma once

// Ground-truthed synthetic scene generator. Scenes are rendered through the
// same rasterize/shade/compose path the fitter uses, so stored ground truth
// reproduces the frames exactly.

#include <string>
#include <utility>
#include <vector>

#include "lumisplit/core.hpp"
#include "lumisplit/proxymm.hpp"
#include "lumisplit/texture.hpp"

namespace lumisplit {

enum class Occluder { None, Shadow, Sprite, Both };

std::string occluder_name(Occluder o);
Occluder occluder_from_name(const std::string& s);

struct SceneSpec {
    int k = 1;              // frame count
    int n_regions = 1;      // 1..3; regions beyond the first are cast shadows
    Occluder occluder = Occluder::None;
    int image_size = 128;
    int c_sh = 9;
    uint64_t model_seed = 0;       // 0 => derived from the scene seed
    double landmark_noise = 0.0;   // px, uniform
    double min_region_frac = 0.02; // of the whole frame, every region
};

struct SceneBundle {
    SceneSpec spec;
    uint64_t seed = 0;
    ProxyMM model;

    std::vector<Image> frames;                 // linear RGB [0,1]
    std::vector<std::vector<Vec2>> landmarks;  // k x L
    std::vector<double> times;                 // i/k

    // ground truth
    std::vector<double> gt_alpha;
    std::vector<std::vector<double>> gt_beta;  // per frame
    std::vector<double> gt_delta;
    std::vector<PoseCamera> gt_pose;           // per frame
    TextureSet gt_texture;
    std::vector<std::vector<double>> gt_lights;  // per region, 3*c_sh
    std::vector<Image> gt_region_id;   // 1ch per frame; region index, -1 uncovered
    std::vector<Image> gt_face_mask;   // 1ch per frame; excludes the sprite
    std::vector<Image> backgrounds;    // the I_in layer, sprite included

    int n_regions() const { return static_cast<int>(gt_lights.size()); }
    // Binary per-region masks for one frame, in region order.
    std::vector<Image> region_masks(int frame) const;
};

// Throws std::runtime_error if a region stays under min_region_frac after
// 10 resampling attempts.
SceneBundle gen_scene(uint64_t seed, const SceneSpec& spec);

// Face-mask oracle h: ground truth, Gaussian-blurred (sigma = 1.5 px), with
// seeded per-pixel flips at rate rho. rho in [0, 0.5).
Image seg_oracle_frame(const SceneBundle& scene, int frame, double rho, uint64_t seed);
std::vector<Image> seg_oracle(const SceneBundle& scene, double rho, uint64_t seed);

// Occluded source / clean target sharing identity (alpha, delta, texture, model).
std::pair<SceneBundle, SceneBundle> make_pair(uint64_t seed, const SceneSpec& base = {});

void save_scene(const std::string& dir, const SceneBundle& scene);
SceneBundle load_scene(const std::string& dir);

}  // namespace lumisplit
