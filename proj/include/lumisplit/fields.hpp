#pragma once

// Spatio-temporal coordinate MLPs: f(x,y,t) assigns pixels to light
// conditions (softmax head), g(x,y,t) predicts face-region probability
// (sigmoid head). Inputs carry a sinusoidal frequency encoding. Forward is
// batched through the kernel GEMMs; backward is exact reverse mode.

#include <cstdint>
#include <string>
#include <vector>

#include "lumisplit/core.hpp"
#include "lumisplit/raster.hpp"

namespace lumisplit {

struct MaskField {
    // layers[l]: weight (in x out, row-major) + bias (out)
    struct Layer {
        int in = 0, out = 0;
        std::vector<double> w;
        std::vector<double> b;
    };
    std::vector<Layer> layers;
    int n_out = 0;
    bool softmax_head = true;  // false => sigmoid scalar head
    int freq_pairs = 6;        // F sinusoid pairs per coordinate

    int input_dim() const { return 3 + 6 * freq_pairs; }
    size_t param_count() const;
    std::vector<double> pack_params() const;
    void unpack_params(const std::vector<double>& flat);
};

MaskField init_field(uint64_t seed, int n_outputs, int depth, int width, int freq_pairs,
                     bool softmax_head);

// coords: P x 3 (x,y in [-1,1], t in [0,1])
struct FieldForward {
    int batch = 0;
    std::vector<std::vector<double>> pre;   // per layer pre-activation (P x out)
    std::vector<std::vector<double>> act;   // encoded input + post-activation per hidden layer
    std::vector<double> probs;              // P x n_out (head applied; dropped classes 0)
};

// alive: optional per-class mask for the softmax head (ACE logit masking);
// nullptr means all classes participate.
FieldForward field_forward(const MaskField& field, const std::vector<double>& coords,
                           const std::vector<uint8_t>* alive = nullptr);

// d_probs: P x n_out upstream gradient w.r.t. head probabilities.
// Returns packed parameter gradient (same layout as pack_params).
std::vector<double> field_backward(const MaskField& field, const FieldForward& fwd,
                                   const std::vector<double>& d_probs,
                                   const std::vector<uint8_t>* alive = nullptr);

// Normalized (x,y,t) coordinates for a list of pixel indices of a w x h frame.
std::vector<double> pixel_coords(const std::vector<int>& pixel_indices, int w, int h, double t);

// M_N^i = M_R .* f_i(x,y,t): full-frame masks, zero outside coverage.
std::vector<Image> eval_light_mask(const MaskField& f, const GBuffer& gb, double t,
                                   const std::vector<uint8_t>* alive = nullptr);
Image eval_face_mask(const MaskField& g, const GBuffer& gb, double t);

void save_field(const std::string& path_base, const MaskField& field);
MaskField load_field(const std::string& path_base);

}  // namespace lumisplit
