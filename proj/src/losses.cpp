#include "lumisplit/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace lumisplit {

namespace {
constexpr double kNormEps = 1e-12;
}

double landmark_loss(const std::vector<Vec2>& q_out, const std::vector<Vec2>& q_in,
                     std::vector<Vec2>* d_q_out) {
    if (q_out.size() != q_in.size())
        throw std::invalid_argument("landmark_loss: length mismatch");
    size_t L = q_out.size();
    if (d_q_out) d_q_out->assign(L, Vec2());
    double acc = 0.0;
    for (size_t i = 0; i < L; ++i) {
        Vec2 d = q_out[i] - q_in[i];
        double n = d.norm();
        acc += n;
        if (d_q_out && n > kNormEps) (*d_q_out)[i] = d * (1.0 / (n * L));
    }
    return acc / static_cast<double>(L);
}

double photometric_loss(const Image& i_out, const Image& i_in, Image* d_i_out) {
    if (!i_out.same_shape(i_in))
        throw std::invalid_argument("photometric_loss: shape mismatch");
    size_t P = i_out.pixels();
    if (d_i_out) *d_i_out = Image(i_out.w, i_out.h, i_out.c, 0.0);
    double acc = 0.0;
    for (size_t p = 0; p < P; ++p) {
        double ss = 0.0;
        for (int c = 0; c < i_out.c; ++c) {
            double d = i_out.data[p * i_out.c + c] - i_in.data[p * i_out.c + c];
            ss += d * d;
        }
        double n = std::sqrt(ss);
        acc += n;
        if (d_i_out && n > kNormEps)
            for (int c = 0; c < i_out.c; ++c)
                d_i_out->data[p * i_out.c + c] =
                    (i_out.data[p * i_out.c + c] - i_in.data[p * i_out.c + c]) /
                    (n * static_cast<double>(P));
    }
    return acc / static_cast<double>(P);
}

double seg_loss(const Image& g_out, const Image& h_out, Image* d_g) {
    if (!g_out.same_shape(h_out)) throw std::invalid_argument("seg_loss: shape mismatch");
    size_t P = g_out.size();
    if (d_g) *d_g = Image(g_out.w, g_out.h, g_out.c, 0.0);
    double acc = 0.0;
    for (size_t p = 0; p < P; ++p) {
        double d = g_out.data[p] - h_out.data[p];
        acc += std::abs(d);
        if (d_g && std::abs(d) > kNormEps)
            d_g->data[p] = (d > 0.0 ? 1.0 : -1.0) / static_cast<double>(P);
    }
    return acc / static_cast<double>(P);
}

double area_loss(const std::vector<Image>& m_n, std::vector<Image>* d_m) {
    size_t n = m_n.size();
    if (n == 0) throw std::invalid_argument("area_loss: no masks");
    size_t P = m_n[0].pixels();
    if (d_m) {
        d_m->clear();
        for (size_t i = 0; i < n; ++i) d_m->emplace_back(m_n[0].w, m_n[0].h, 1, 0.0);
    }
    double acc = 0.0;
    std::vector<double> dev(n), ex(n);
    for (size_t p = 0; p < P; ++p) {
        double mu = 0.0;
        for (size_t i = 0; i < n; ++i) mu += m_n[i].data[p];
        mu /= static_cast<double>(n);
        double s = 0.0;
        for (size_t i = 0; i < n; ++i) {
            dev[i] = m_n[i].data[p] - mu;
            ex[i] = std::exp(-dev[i] * dev[i]);
            s += ex[i];
        }
        acc += s / static_cast<double>(n);
        if (d_m) {
            // d/dm_j of (1/n) sum_i exp(-(m_i - mu)^2), with mu = mean
            double common = 0.0;  // sum_i ex_i * (-2 dev_i) * (-1/n)
            for (size_t i = 0; i < n; ++i) common += ex[i] * 2.0 * dev[i] / static_cast<double>(n);
            for (size_t j = 0; j < n; ++j) {
                double g = ex[j] * (-2.0 * dev[j]) + common;
                (*d_m)[j].data[p] = g / (static_cast<double>(n) * static_cast<double>(P));
            }
        }
    }
    return acc / static_cast<double>(P) - 1.0;
}

double bin_loss(const std::vector<Image>& m_l, std::vector<Image>* d_m) {
    size_t n = m_l.size();
    if (n == 0) throw std::invalid_argument("bin_loss: no masks");
    size_t P = m_l[0].pixels();
    if (d_m) {
        d_m->clear();
        for (size_t i = 0; i < n; ++i) d_m->emplace_back(m_l[0].w, m_l[0].h, 1, 0.0);
    }
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double mbar = 0.0;
        for (size_t p = 0; p < P; ++p) mbar += m_l[i].data[p];
        mbar /= static_cast<double>(P);
        double sum_dex = 0.0;  // sum_p ex_p * 2 dev_p  (coupling through mbar)
        for (size_t p = 0; p < P; ++p) {
            double dev = m_l[i].data[p] - mbar;
            double ex = std::exp(-dev * dev);
            acc += ex;
            if (d_m) {
                (*d_m)[i].data[p] = ex * (-2.0 * dev);
                sum_dex += ex * 2.0 * dev;
            }
        }
        if (d_m) {
            double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(P));
            double coupling = sum_dex / static_cast<double>(P);
            for (size_t p = 0; p < P; ++p)
                (*d_m)[i].data[p] = ((*d_m)[i].data[p] + coupling) * scale;
        }
    }
    return acc / (static_cast<double>(n) * static_cast<double>(P)) - 1.0;
}

Palette kmeans_palette(const Image& t0_diffuse, int k, uint64_t seed) {
    size_t P = t0_diffuse.pixels();
    std::vector<Vec3> pts;
    pts.reserve(P);
    for (size_t p = 0; p < P; ++p)
        pts.push_back({t0_diffuse.data[p * 3], t0_diffuse.data[p * 3 + 1],
                       t0_diffuse.data[p * 3 + 2]});

    Palette pal;
    pal.source_hash = hash_doubles(t0_diffuse.data);

    std::set<std::array<double, 3>> distinct;
    for (auto& c : pts) distinct.insert({c.x, c.y, c.z});
    if (static_cast<int>(distinct.size()) < k) {
        pal.warning = "kmeans_palette: only " + std::to_string(distinct.size()) +
                      " distinct colors, reducing k from " + std::to_string(k);
        k = static_cast<int>(distinct.size());
    }

    Rng rng(seed);
    auto d2 = [](const Vec3& a, const Vec3& b) {
        Vec3 d = a - b;
        return d.dot(d);
    };

    // k-means++ seeding
    std::vector<Vec3> centers;
    centers.push_back(pts[static_cast<size_t>(rng.uniform() * P) % P]);
    std::vector<double> dist(P);
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (size_t p = 0; p < P; ++p) {
            double best = std::numeric_limits<double>::infinity();
            for (auto& c : centers) best = std::min(best, d2(pts[p], c));
            dist[p] = best;
            total += best;
        }
        double r = rng.uniform(0.0, total);
        size_t chosen = P - 1;
        double run = 0.0;
        for (size_t p = 0; p < P; ++p) {
            run += dist[p];
            if (run >= r) {
                chosen = p;
                break;
            }
        }
        centers.push_back(pts[chosen]);
    }

    // Lloyd iterations
    std::vector<int> assign(P, 0);
    for (int it = 0; it < 100; ++it) {
        for (size_t p = 0; p < P; ++p) {
            double best = std::numeric_limits<double>::infinity();
            int arg = 0;
            for (size_t c = 0; c < centers.size(); ++c) {
                double d = d2(pts[p], centers[c]);
                if (d < best) {
                    best = d;
                    arg = static_cast<int>(c);
                }
            }
            assign[p] = arg;
        }
        std::vector<Vec3> sums(centers.size());
        std::vector<size_t> counts(centers.size(), 0);
        for (size_t p = 0; p < P; ++p) {
            sums[assign[p]] += pts[p];
            counts[assign[p]]++;
        }
        double shift = 0.0;
        for (size_t c = 0; c < centers.size(); ++c) {
            Vec3 nc;
            if (counts[c] == 0) {
                // reseed empty cluster to the farthest point
                size_t far = 0;
                double best = -1.0;
                for (size_t p = 0; p < P; ++p) {
                    double d = d2(pts[p], centers[assign[p]]);
                    if (d > best) {
                        best = d;
                        far = p;
                    }
                }
                nc = pts[far];
            } else {
                nc = sums[c] * (1.0 / static_cast<double>(counts[c]));
            }
            shift = std::max(shift, std::sqrt(d2(nc, centers[c])));
            centers[c] = nc;
        }
        if (shift < 1e-6) break;
    }
    pal.colors = centers;
    return pal;
}

double global_prior_loss(const Image& t_diffuse, const Palette& palette, Image* d_t) {
    size_t P = t_diffuse.pixels();
    if (palette.colors.empty()) throw std::invalid_argument("global_prior_loss: empty palette");
    if (d_t) *d_t = Image(t_diffuse.w, t_diffuse.h, 3, 0.0);
    double acc = 0.0;
    for (size_t p = 0; p < P; ++p) {
        Vec3 tc{t_diffuse.data[p * 3], t_diffuse.data[p * 3 + 1], t_diffuse.data[p * 3 + 2]};
        double best = std::numeric_limits<double>::infinity();
        Vec3 bc;
        for (auto& c : palette.colors) {
            Vec3 d = tc - c;
            double dd = d.dot(d);
            if (dd < best) {
                best = dd;
                bc = c;
            }
        }
        double dist = std::sqrt(best);
        acc += dist;
        if (d_t && dist > kNormEps) {
            Vec3 g = (tc - bc) * (1.0 / (dist * static_cast<double>(P)));
            d_t->data[p * 3 + 0] = g.x;
            d_t->data[p * 3 + 1] = g.y;
            d_t->data[p * 3 + 2] = g.z;
        }
    }
    return acc / static_cast<double>(P);
}

namespace {

// the 24 non-center offsets of a 5x5 window, fixed order
std::vector<std::pair<int, int>> window_offsets() {
    std::vector<std::pair<int, int>> offs;
    for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx)
            if (dx != 0 || dy != 0) offs.emplace_back(dx, dy);
    return offs;
}

inline int clamp_idx(int v, int n) { return v < 0 ? 0 : (v >= n ? n - 1 : v); }

}  // namespace

std::vector<Image> neighbor_variation(const Image& channel) {
    if (channel.w < 5 || channel.h < 5)
        throw std::invalid_argument("neighbor_variation: raster must be >= 5x5");
    auto offs = window_offsets();
    std::vector<Image> out;
    out.reserve(offs.size());
    for (auto [dx, dy] : offs) {
        Image r(channel.w, channel.h, channel.c, 0.0);
        for (int y = 0; y < channel.h; ++y)
            for (int x = 0; x < channel.w; ++x) {
                int sx = clamp_idx(x + dx, channel.w), sy = clamp_idx(y + dy, channel.h);
                for (int c = 0; c < channel.c; ++c)
                    r.at(x, y, c) = channel.at(x, y, c) - channel.at(sx, sy, c);
            }
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

// |N - N0| accumulation for one channel raster; scale applied to both the
// value and the gradient (handles the RGB averaging).
double variation_l1(const Image& t, const Image& t0, double scale, Image* d_t) {
    auto offs = window_offsets();
    double acc = 0.0;
    for (auto [dx, dy] : offs)
        for (int y = 0; y < t.h; ++y)
            for (int x = 0; x < t.w; ++x) {
                int sx = clamp_idx(x + dx, t.w), sy = clamp_idx(y + dy, t.h);
                for (int c = 0; c < t.c; ++c) {
                    double n = t.at(x, y, c) - t.at(sx, sy, c);
                    double n0 = t0.at(x, y, c) - t0.at(sx, sy, c);
                    double diff = n - n0;
                    acc += scale * std::abs(diff);
                    if (d_t && std::abs(diff) > kNormEps) {
                        double s = (diff > 0.0 ? scale : -scale);
                        d_t->at(x, y, c) += s;
                        d_t->at(sx, sy, c) -= s;
                    }
                }
            }
    return acc;
}

}  // namespace

double local_prior_loss(const TextureSet& t, const TextureSet& t0, TextureSet* d_t) {
    if (!t.diffuse.same_shape(t0.diffuse) || !t.specular.same_shape(t0.specular) ||
        !t.roughness.same_shape(t0.roughness))
        throw std::invalid_argument("local_prior_loss: shape mismatch");
    size_t P = t.diffuse.pixels();
    if (d_t) *d_t = TextureSet(t.width(), t.height());
    double acc = 0.0;
    acc += variation_l1(t.diffuse, t0.diffuse, 1.0 / 3.0, d_t ? &d_t->diffuse : nullptr);
    acc += variation_l1(t.specular, t0.specular, 1.0, d_t ? &d_t->specular : nullptr);
    acc += variation_l1(t.roughness, t0.roughness, 1.0, d_t ? &d_t->roughness : nullptr);
    double inv = 1.0 / static_cast<double>(P);
    if (d_t) {
        for (auto& v : d_t->diffuse.data) v *= inv;
        for (auto& v : d_t->specular.data) v *= inv;
        for (auto& v : d_t->roughness.data) v *= inv;
    }
    return acc * inv;
}

double human_prior_loss(const std::vector<Image>& i_rs, const PlausibilityScorer& scorer,
                        std::vector<Image>* d_faces) {
    if (d_faces) d_faces->clear();
    double acc = 0.0;
    for (const auto& face : i_rs) {
        std::vector<double> s = scorer.scores(face);
        if (s.empty()) throw std::runtime_error("human_prior_loss: scorer returned no scores");
        int best = 0;
        double gap = std::abs(1.0 - s[0]);
        for (size_t i = 1; i < s.size(); ++i)
            if (std::abs(1.0 - s[i]) < gap) {
                gap = std::abs(1.0 - s[i]);
                best = static_cast<int>(i);
            }
        acc += gap;
        if (d_faces) {
            Image g = scorer.score_gradient(face, best);
            // d|1-s|/ds = -sign(1-s)
            double sgn = (1.0 - s[best]) >= 0.0 ? -1.0 : 1.0;
            for (auto& v : g.data) v *= sgn;
            d_faces->push_back(std::move(g));
        }
    }
    return acc;
}

Image box_downsample(const Image& img, int out_w, int out_h) {
    Image out(out_w, out_h, img.c, 0.0);
    std::vector<double> counts(static_cast<size_t>(out_w) * out_h, 0.0);
    for (int y = 0; y < img.h; ++y) {
        int oy = std::min(out_h - 1, y * out_h / img.h);
        for (int x = 0; x < img.w; ++x) {
            int ox = std::min(out_w - 1, x * out_w / img.w);
            counts[static_cast<size_t>(oy) * out_w + ox] += 1.0;
            for (int c = 0; c < img.c; ++c) out.at(ox, oy, c) += img.at(x, y, c);
        }
    }
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x) {
            double n = counts[static_cast<size_t>(y) * out_w + x];
            if (n > 0)
                for (int c = 0; c < img.c; ++c) out.at(x, y, c) /= n;
        }
    return out;
}

ReferenceBankScorer::ReferenceBankScorer(std::vector<Image> bank, double temperature)
    : bank_(std::move(bank)), tau_(temperature) {
    if (bank_.empty()) throw std::invalid_argument("ReferenceBankScorer: empty bank");
}

std::vector<double> ReferenceBankScorer::mse_all(const Image& face) const {
    Image down = (face.w == kCropSize && face.h == kCropSize)
                     ? face
                     : box_downsample(face, kCropSize, kCropSize);
    std::vector<double> mse;
    mse.reserve(bank_.size());
    for (const auto& ref : bank_) {
        double acc = 0.0;
        for (size_t i = 0; i < down.data.size(); ++i) {
            double d = down.data[i] - ref.data[i];
            acc += d * d;
        }
        mse.push_back(acc / static_cast<double>(down.data.size()));
    }
    return mse;
}

std::vector<double> ReferenceBankScorer::scores(const Image& face) const {
    std::vector<double> mse = mse_all(face);
    double mn = *std::min_element(mse.begin(), mse.end());
    std::vector<double> s(mse.size());
    double sum = 0.0;
    for (size_t i = 0; i < mse.size(); ++i) {
        s[i] = std::exp(-(mse[i] - mn) / tau_);
        sum += s[i];
    }
    for (auto& v : s) v /= sum;
    return s;
}

Image ReferenceBankScorer::score_gradient(const Image& face, int idx) const {
    std::vector<double> mse = mse_all(face);
    std::vector<double> s = scores(face);
    // ds_idx/dmse_j = s_idx (delta_ij - s_j) * (-1/tau)
    Image down = (face.w == kCropSize && face.h == kCropSize)
                     ? face
                     : box_downsample(face, kCropSize, kCropSize);
    Image d_down(kCropSize, kCropSize, face.c, 0.0);
    size_t N = down.data.size();
    for (size_t j = 0; j < bank_.size(); ++j) {
        double ds_dm = s[idx] * ((static_cast<int>(j) == idx ? 1.0 : 0.0) - s[j]) * (-1.0 / tau_);
        if (ds_dm == 0.0) continue;
        for (size_t i = 0; i < N; ++i)
            d_down.data[i] += ds_dm * 2.0 * (down.data[i] - bank_[j].data[i]) /
                              static_cast<double>(N);
    }
    // scatter through the box filter
    Image grad(face.w, face.h, face.c, 0.0);
    std::vector<double> counts(static_cast<size_t>(kCropSize) * kCropSize, 0.0);
    for (int y = 0; y < face.h; ++y) {
        int oy = std::min(kCropSize - 1, y * kCropSize / face.h);
        for (int x = 0; x < face.w; ++x) {
            int ox = std::min(kCropSize - 1, x * kCropSize / face.w);
            counts[static_cast<size_t>(oy) * kCropSize + ox] += 1.0;
        }
    }
    for (int y = 0; y < face.h; ++y) {
        int oy = std::min(kCropSize - 1, y * kCropSize / face.h);
        for (int x = 0; x < face.w; ++x) {
            int ox = std::min(kCropSize - 1, x * kCropSize / face.w);
            double n = counts[static_cast<size_t>(oy) * kCropSize + ox];
            for (int c = 0; c < face.c; ++c)
                grad.at(x, y, c) = d_down.at(ox, oy, c) / n;
        }
    }
    return grad;
}

}  // namespace lumisplit
