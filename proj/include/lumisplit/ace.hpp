#pragma once

// Adaptive Condition Estimation: one-shot pruning of light conditions whose
// mask area (fraction of the whole frame, averaged over frames for
// sequences) is below epsilon.

#include <string>
#include <vector>

#include "lumisplit/core.hpp"
#include "lumisplit/shade.hpp"

namespace lumisplit {

struct AceReport {
    int iteration = -1;
    std::vector<double> areas;  // fractional, per condition
    double epsilon = 0.0;
    std::vector<int> kept;
    std::vector<int> dropped;

    std::string to_json() const;
};

// m_n_frames: per frame, the n light masks (full-frame rasters). Area is the
// mean pixel value over the whole image, averaged across frames.
AceReport ace_estimate(const std::vector<std::vector<Image>>& m_n_frames, double epsilon,
                       int iteration = -1);

// Sets alive flags; dropped conditions are frozen by the optimizer and the
// field softmax is restricted to kept logits afterwards. Throws on a second
// application to the same LightSet.
void ace_apply(LightSet& lights, const AceReport& report);

}  // namespace lumisplit
