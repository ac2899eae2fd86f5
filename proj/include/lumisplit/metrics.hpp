#pragma once

// Image-quality metrics and the evaluation report.

#include <string>
#include <vector>

#include "lumisplit/core.hpp"

namespace lumisplit {

struct MetricsReport {
    double psnr_db = 0.0;
    double ssim = 0.0;
    std::vector<double> mask_iou;  // per gt region, best matching
    double texture_rmse_visible = -1.0;
    int n_l = 0;
    double runtime_seconds = 0.0;

    std::string to_json() const;
};

// 10 log10(peak^2 / MSE); identical images clamp to 99 dB
double psnr(const Image& a, const Image& b, double peak = 1.0);

// standard single-scale SSIM: 11x11 Gaussian window sigma=1.5, K1=0.01,
// K2=0.03, dynamic range 1. RGB is converted to luma first; mean over valid
// (fully interior) windows.
double ssim(const Image& a, const Image& b);

// best injective matching (exhaustive, counts <= 5) of predicted masks
// (binarized at 0.5) to binary gt regions, maximizing mean IoU. Returns one
// IoU per gt region (0 for unmatched regions).
std::vector<double> mask_iou(const std::vector<Image>& pred, const std::vector<Image>& gt);

// RMSE over texels with visibility > 0, diffuse RGB
double texture_rmse_visible(const Image& t_pred, const Image& t_gt, const Image& visibility);

}  // namespace lumisplit
