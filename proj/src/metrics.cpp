#include "lumisplit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace lumisplit {

std::string MetricsReport::to_json() const {
    nlohmann::json j;
    j["psnr_db"] = psnr_db;
    j["ssim"] = ssim;
    j["mask_iou"] = mask_iou;
    j["texture_rmse_visible"] = texture_rmse_visible;
    j["n_l"] = n_l;
    j["runtime_seconds"] = runtime_seconds;
    return j.dump(2);
}

double psnr(const Image& a, const Image& b, double peak) {
    if (!a.same_shape(b)) throw std::invalid_argument("psnr: shape mismatch");
    double mse = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        double d = a.data[i] - b.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.data.size());
    if (mse < 1e-20) return 99.0;
    return std::min(99.0, 10.0 * std::log10(peak * peak / mse));
}

namespace {

std::vector<double> to_luma(const Image& img) {
    std::vector<double> out(img.pixels());
    if (img.c == 1) {
        out.assign(img.data.begin(), img.data.end());
    } else if (img.c == 3) {
        for (size_t p = 0; p < img.pixels(); ++p)
            out[p] = luma(img.data[p * 3], img.data[p * 3 + 1], img.data[p * 3 + 2]);
    } else {
        throw std::invalid_argument("ssim: 1 or 3 channels required");
    }
    return out;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("ssim: shape mismatch");
    if (a.w < 11 || a.h < 11) throw std::invalid_argument("ssim: images must be >= 11x11");
    std::vector<double> la = to_luma(a), lb = to_luma(b);

    constexpr int R = 5;  // 11x11 window
    double win[11][11];
    double wsum = 0.0;
    for (int dy = -R; dy <= R; ++dy)
        for (int dx = -R; dx <= R; ++dx) {
            double g = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
            win[dy + R][dx + R] = g;
            wsum += g;
        }
    for (auto& row : win)
        for (auto& v : row) v /= wsum;

    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double acc = 0.0;
    size_t count = 0;
    for (int y = R; y < a.h - R; ++y)
        for (int x = R; x < a.w - R; ++x) {
            double mua = 0, mub = 0, sa = 0, sb = 0, sab = 0;
            for (int dy = -R; dy <= R; ++dy)
                for (int dx = -R; dx <= R; ++dx) {
                    double w = win[dy + R][dx + R];
                    double va = la[static_cast<size_t>(y + dy) * a.w + (x + dx)];
                    double vb = lb[static_cast<size_t>(y + dy) * a.w + (x + dx)];
                    mua += w * va;
                    mub += w * vb;
                    sa += w * va * va;
                    sb += w * vb * vb;
                    sab += w * va * vb;
                }
            sa -= mua * mua;
            sb -= mub * mub;
            sab -= mua * mub;
            double num = (2.0 * mua * mub + c1) * (2.0 * sab + c2);
            double den = (mua * mua + mub * mub + c1) * (sa + sb + c2);
            acc += num / den;
            ++count;
        }
    return acc / static_cast<double>(count);
}

std::vector<double> mask_iou(const std::vector<Image>& pred, const std::vector<Image>& gt) {
    size_t np = pred.size(), ng = gt.size();
    if (ng == 0) return {};
    // pairwise IoU with prediction binarized at 0.5
    std::vector<std::vector<double>> iou(np, std::vector<double>(ng, 0.0));
    for (size_t i = 0; i < np; ++i)
        for (size_t j = 0; j < ng; ++j) {
            size_t inter = 0, uni = 0;
            for (size_t p = 0; p < pred[i].data.size(); ++p) {
                bool a = pred[i].data[p] >= 0.5;
                bool b = gt[j].data[p] >= 0.5;
                inter += a && b;
                uni += a || b;
            }
            iou[i][j] = uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
        }
    // exhaustive injective matching over the smaller side
    std::vector<int> pidx(np);
    std::iota(pidx.begin(), pidx.end(), 0);
    std::vector<double> best_per_gt(ng, 0.0);
    double best_mean = -1.0;
    std::sort(pidx.begin(), pidx.end());
    do {
        std::vector<double> cur(ng, 0.0);
        double mean = 0.0;
        for (size_t j = 0; j < ng && j < np; ++j) {
            cur[j] = iou[pidx[j]][j];
            mean += cur[j];
        }
        if (mean > best_mean) {
            best_mean = mean;
            best_per_gt = cur;
        }
    } while (std::next_permutation(pidx.begin(), pidx.end()));
    return best_per_gt;
}

double texture_rmse_visible(const Image& t_pred, const Image& t_gt, const Image& visibility) {
    if (!t_pred.same_shape(t_gt)) throw std::invalid_argument("texture_rmse: shape mismatch");
    if (visibility.pixels() != t_pred.pixels())
        throw std::invalid_argument("texture_rmse: visibility shape mismatch");
    double acc = 0.0;
    size_t count = 0;
    for (size_t p = 0; p < t_pred.pixels(); ++p) {
        if (visibility.data[p] <= 0.0) continue;
        for (int c = 0; c < t_pred.c; ++c) {
            double d = t_pred.data[p * t_pred.c + c] - t_gt.data[p * t_pred.c + c];
            acc += d * d;
        }
        count += t_pred.c;
    }
    if (count == 0) throw std::runtime_error("texture_rmse: empty visibility");
    return std::sqrt(acc / static_cast<double>(count));
}

}  // namespace lumisplit
