#pragma once

// Three-stage fitting controller: landmark alignment, joint photometric /
// mask optimization with one-shot condition pruning, then free-texel texture
// refinement under the prior losses.

#include <string>
#include <vector>

#include "lumisplit/ace.hpp"
#include "lumisplit/config.hpp"
#include "lumisplit/core.hpp"
#include "lumisplit/fields.hpp"
#include "lumisplit/metrics.hpp"
#include "lumisplit/proxymm.hpp"
#include "lumisplit/shade.hpp"
#include "lumisplit/synth.hpp"
#include "lumisplit/texture.hpp"

namespace lumisplit {

// Pixels whose face-mask value falls below this never push texture colors;
// they still drive the light and mask variables.
inline constexpr double kTexGateMask = 0.1;

struct FitResult {
    FitConfig config;
    uint64_t model_seed = 0;
    ProxyMM model;

    std::vector<double> alpha;
    std::vector<std::vector<double>> beta;   // per frame
    std::vector<double> delta;
    std::vector<PoseCamera> pose;            // per frame
    std::vector<double> times;
    LightSet lights;
    MaskField field_f;
    MaskField field_g;
    TextureSet texture;                      // final T (diffuse refined)

    AceReport ace;
    std::vector<Image> frames;               // inputs kept for composition
    std::vector<Image> renders;              // final I_out per frame
    std::vector<std::vector<Image>> light_masks;  // per frame, alive conditions
    std::vector<Image> face_masks;           // per frame
    std::string log_csv;
    MetricsReport metrics;
};

FitResult fit(const SceneBundle& scene, const FitConfig& config);

// Re-renders frame `frame` of a finished fit, optionally under a substitute
// diffuse texture and/or substitute lights. Bit-identical to the stored
// render when both are the fit's own.
Image render_fit_frame(const FitResult& fit, int frame,
                       const Image* diffuse_override = nullptr,
                       const LightSet* lights_override = nullptr);

// Target re-rendered with the source's texture. Throws if the fits use
// different head models.
Image swap_synthesize(const FitResult& fit_src, const FitResult& fit_tgt, int frame = 0);

// Replays the final-state photometric texture backward through the same
// per-pixel gate the optimizer uses and splits the accumulated diffuse
// gradient by the contributing pixel's face-mask value: `below` collects
// pixels with M_o < threshold, `above` the rest. With the gate in place the
// `below` raster is exactly zero.
void texture_grad_by_mask(const FitResult& fit, double threshold, Image* below, Image* above);

uint64_t fit_result_hash(const FitResult& r);

void save_fit(const std::string& dir, const FitResult& r);
FitResult load_fit(const std::string& dir);

// Finite-difference gradient audit of every optimized group on a tiny scene.
// Returns true when all analytic gradients match central differences;
// appends one line per group to `report`.
bool gradient_check(std::string* report);

}  // namespace lumisplit
