#pragma once

// Flat key=value fit configuration.

#include <cstdint>
#include <string>

namespace lumisplit {

struct FitConfig {
    // loss weights, in the order the staged objective uses them:
    // w0 photometric, w1 landmark, w2 segmentation, w3 area, w4 binary,
    // w5 global prior, w6 local prior, w7 human prior
    double w0 = 2e3, w1 = 1e-3, w2 = 1.5e2, w3 = 0.5, w4 = 25.0, w5 = 2e3, w6 = 2.0, w7 = 1.0;
    // iter0 = ACE iteration (inside stage 2); iter1..iter3 = stage lengths
    int iter0 = 100, iter1 = 2000, iter2 = 400, iter3 = 200;
    double epsilon = 0.17;
    int n = 5;
    int c_sh = 9;
    int image_size = 128;
    int texture_size = 256;
    uint64_t seed = 0;
    double lr_coeffs = 1e-2;        // alpha, beta, delta, pose
    double lr_gamma = 3e-2;
    double lr_fields = 5e-3;        // theta_f, theta_g
    double lr_texture = 2e-2;       // stage-3 T
    double lr_stage3_light = 3e-2;  // stage-3 gamma and theta_f

    void validate() const;  // throws on inconsistent settings
    std::string to_text() const;
};

// Parses the flat key=value format; every known key must be present.
// Throws naming the first missing or unknown key.
FitConfig parse_config(const std::string& text);
FitConfig load_config(const std::string& path);

}  // namespace lumisplit
