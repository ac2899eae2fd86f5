#pragma once

// Adam over named variable groups with per-group learning rates and freeze
// flags.

#include <string>
#include <vector>

#include "lumisplit/core.hpp"

namespace lumisplit {

struct VarGroup {
    std::string name;
    std::vector<double> values;
    std::vector<double> m, v;  // Adam moments
    double lr = 1e-3;
    bool frozen = false;
    int step_count = 0;

    static VarGroup make(std::string name, std::vector<double> values, double lr);
};

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Standard bias-corrected Adam update in place. Frozen groups must not be
// stepped; a non-finite gradient raises naming the group.
void adam_step(VarGroup& group, const std::vector<double>& grad,
               const AdamParams& params = {});

// Domain clamps applied after each step: texture texels to [0,1], roughness
// to [0.05,1], pose rotation renormalized if it leaves |w| < pi.
void clamp_unit_interval(std::vector<double>& values, size_t begin, size_t end);
void clamp_range(std::vector<double>& values, size_t begin, size_t end, double lo, double hi);
void renormalize_axis_angle(double* w3);

}  // namespace lumisplit
