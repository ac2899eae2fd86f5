#include "lumisplit/shade.hpp"

#include <cmath>
#include <stdexcept>

namespace lumisplit {

LightSet LightSet::initialize(int n, int c_sh) {
    LightSet ls;
    ls.n = n;
    ls.c_sh = c_sh;
    ls.alive.assign(n, 1);
    for (int i = 1; i <= n; ++i) {
        double v = 2.0 * (static_cast<double>(i) / n) - 1.0;
        ls.coeffs.emplace_back(3 * c_sh, v);
    }
    return ls;
}

int LightSet::n_alive() const {
    int k = 0;
    for (auto a : alive) k += a ? 1 : 0;
    return k;
}

std::vector<int> LightSet::alive_indices() const {
    std::vector<int> out;
    for (int i = 0; i < n; ++i)
        if (alive[i]) out.push_back(i);
    return out;
}

std::vector<double> sh_basis(const Vec3& nrm, int c_sh) {
    if (c_sh != 1 && c_sh != 4 && c_sh != 9 && c_sh != 16 && c_sh != 25)
        throw std::invalid_argument("sh_basis: c_sh must be a square count in {1,4,9,16,25}");
    double x = nrm.x, y = nrm.y, z = nrm.z;
    std::vector<double> sh(c_sh);
    sh[0] = 0.2820947917738781;
    if (c_sh < 4) return sh;
    sh[1] = 0.4886025119029199 * y;
    sh[2] = 0.4886025119029199 * z;
    sh[3] = 0.4886025119029199 * x;
    if (c_sh < 9) return sh;
    sh[4] = 1.0925484305920792 * x * y;
    sh[5] = 1.0925484305920792 * y * z;
    sh[6] = 0.31539156525252005 * (3.0 * z * z - 1.0);
    sh[7] = 1.0925484305920792 * x * z;
    sh[8] = 0.5462742152960396 * (x * x - y * y);
    if (c_sh < 16) return sh;
    double z2 = z * z;
    sh[9] = 0.5900435899266435 * y * (3.0 * x * x - y * y);
    sh[10] = 2.890611442640554 * x * y * z;
    sh[11] = 0.4570457994644658 * y * (5.0 * z2 - 1.0);
    sh[12] = 0.3731763325901154 * z * (5.0 * z2 - 3.0);
    sh[13] = 0.4570457994644658 * x * (5.0 * z2 - 1.0);
    sh[14] = 1.445305721320277 * z * (x * x - y * y);
    sh[15] = 0.5900435899266435 * x * (x * x - 3.0 * y * y);
    if (c_sh < 25) return sh;
    double x2 = x * x, y2 = y * y;
    sh[16] = 2.5033429417967046 * x * y * (x2 - y2);
    sh[17] = 1.7701307697799304 * y * z * (3.0 * x2 - y2);
    sh[18] = 0.9461746957575601 * x * y * (7.0 * z2 - 1.0);
    sh[19] = 0.6690465435572892 * y * z * (7.0 * z2 - 3.0);
    sh[20] = 0.10578554691520431 * (35.0 * z2 * z2 - 30.0 * z2 + 3.0);
    sh[21] = 0.6690465435572892 * x * z * (7.0 * z2 - 3.0);
    sh[22] = 0.47308734787878004 * (x2 - y2) * (7.0 * z2 - 1.0);
    sh[23] = 1.7701307697799304 * x * z * (x2 - y2);
    sh[24] = 0.6258357354491761 * (x2 * x2 - 6.0 * x2 * y2 + y2 * y2);
    return sh;
}

TexSample sample_texture(const TextureSet& tex, const Vec2& uv) {
    int w = tex.width(), h = tex.height();
    double fx = uv.x * w - 0.5, fy = uv.y * h - 0.5;
    int x0 = static_cast<int>(std::floor(fx)), y0 = static_cast<int>(std::floor(fy));
    double tx = fx - x0, ty = fy - y0;
    auto wrap = [](int v, int n) { return ((v % n) + n) % n; };
    TexSample s;
    s.px[0] = wrap(x0, w);     s.py[0] = wrap(y0, h);
    s.px[1] = wrap(x0 + 1, w); s.py[1] = wrap(y0, h);
    s.px[2] = wrap(x0, w);     s.py[2] = wrap(y0 + 1, h);
    s.px[3] = wrap(x0 + 1, w); s.py[3] = wrap(y0 + 1, h);
    s.w[0] = (1 - tx) * (1 - ty);
    s.w[1] = tx * (1 - ty);
    s.w[2] = (1 - tx) * ty;
    s.w[3] = tx * ty;
    for (int c = 0; c < 3; ++c) s.diffuse[c] = 0.0;
    s.specular = 0.0;
    s.roughness = 0.0;
    for (int k = 0; k < 4; ++k) {
        for (int c = 0; c < 3; ++c)
            s.diffuse[c] += s.w[k] * tex.diffuse.at(s.px[k], s.py[k], c);
        s.specular += s.w[k] * tex.specular.at(s.px[k], s.py[k], 0);
        s.roughness += s.w[k] * tex.roughness.at(s.px[k], s.py[k], 0);
    }
    return s;
}

ShadePoint make_shade_point(const GBuffer& gb, int pixel, const TextureSet& tex, int c_sh) {
    ShadePoint p;
    p.normal = gb.normal[pixel];
    p.view = gb.view_dir[pixel];
    p.sh = sh_basis(p.normal, c_sh);
    p.tex = sample_texture(tex, gb.uv[pixel]);
    return p;
}

namespace {

constexpr double kRoughEps = 1e-4;
constexpr double kDirEps = 1e-6;

struct SpecularFwd {
    Vec3 u;          // raw l=1 luma vector (x,y,z)
    bool use_view;   // |u| below threshold -> dominant dir falls back to view
    Vec3 d;          // dominant light direction, unit
    Vec3 hv;         // view + d, pre-normalization
    Vec3 h;          // half vector, unit
    double b;        // max(0, n.h)
    double s;        // shininess
    double bs;       // b^s
    double e[3];     // irradiance pre-clamp
    double ec[3];    // clamped irradiance
    double elum;
};

SpecularFwd shade_forward(const ShadePoint& p, const std::vector<double>& g, int c_sh) {
    SpecularFwd f;
    for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        const double* gc = g.data() + static_cast<size_t>(c) * c_sh;
        for (int k = 0; k < c_sh; ++k) acc += gc[k] * p.sh[k];
        f.e[c] = acc;
        f.ec[c] = acc > 0.0 ? acc : 0.0;
    }
    f.elum = luma(f.ec[0], f.ec[1], f.ec[2]);

    const double lw[3] = {kLumaR, kLumaG, kLumaB};
    f.u = Vec3();
    if (c_sh >= 4) {
        for (int c = 0; c < 3; ++c) {
            const double* gc = g.data() + static_cast<size_t>(c) * c_sh;
            f.u.x += lw[c] * gc[3];
            f.u.y += lw[c] * gc[1];
            f.u.z += lw[c] * gc[2];
        }
    }
    f.use_view = f.u.norm() < kDirEps;
    f.d = f.use_view ? p.view : f.u.normalized();
    f.hv = p.view + f.d;
    f.h = f.hv.normalized();
    f.b = std::max(0.0, p.normal.dot(f.h));
    double r = p.tex.roughness;
    f.s = 2.0 / (r * r + kRoughEps) - 2.0;
    f.bs = f.b > 0.0 ? std::pow(f.b, f.s) : 0.0;
    return f;
}

}  // namespace

Vec3 shade_point(const ShadePoint& p, const std::vector<double>& gamma, int c_sh) {
    SpecularFwd f = shade_forward(p, gamma, c_sh);
    double spec = p.tex.specular * f.bs * f.elum;
    Vec3 rgb;
    rgb.x = std::max(0.0, p.tex.diffuse[0] * f.ec[0] + spec);
    rgb.y = std::max(0.0, p.tex.diffuse[1] * f.ec[1] + spec);
    rgb.z = std::max(0.0, p.tex.diffuse[2] * f.ec[2] + spec);
    return rgb;
}

void shade_point_backward(const ShadePoint& p, const std::vector<double>& gamma,
                          int c_sh, const Vec3& d_rgb, ShadeGrad* d_tex,
                          double* d_gamma) {
    SpecularFwd f = shade_forward(p, gamma, c_sh);
    double spec = p.tex.specular * f.bs * f.elum;
    double up[3] = {d_rgb.x, d_rgb.y, d_rgb.z};
    // final clamp: zero gradient when the pre-clamp color is negative
    double col[3] = {p.tex.diffuse[0] * f.ec[0] + spec, p.tex.diffuse[1] * f.ec[1] + spec,
                     p.tex.diffuse[2] * f.ec[2] + spec};
    for (int c = 0; c < 3; ++c)
        if (col[c] < 0.0) up[c] = 0.0;

    double d_spec = up[0] + up[1] + up[2];
    const double lw[3] = {kLumaR, kLumaG, kLumaB};

    // irradiance path
    double d_elum = d_spec * p.tex.specular * f.bs;
    for (int c = 0; c < 3; ++c) {
        double d_ec = up[c] * p.tex.diffuse[c] + d_elum * lw[c];
        d_tex->d_diffuse[c] += up[c] * f.ec[c];
        if (f.e[c] > 0.0) {
            double* gc = d_gamma + static_cast<size_t>(c) * c_sh;
            for (int k = 0; k < c_sh; ++k) gc[k] += d_ec * p.sh[k];
        }
    }
    d_tex->d_specular += d_spec * f.bs * f.elum;

    // roughness -> shininess
    if (f.b > 0.0) {
        double r = p.tex.roughness;
        double ds_dr = -4.0 * r / ((r * r + kRoughEps) * (r * r + kRoughEps));
        d_tex->d_roughness += d_spec * p.tex.specular * f.elum * f.bs * std::log(f.b) * ds_dr;
    }

    // dominant-direction path (l=1 coefficients through two normalizations)
    if (f.b > 0.0 && !f.use_view && c_sh >= 4) {
        double d_b = d_spec * p.tex.specular * f.elum * f.s *
                     (f.b > 0.0 ? std::pow(f.b, f.s - 1.0) : 0.0);
        Vec3 d_h = p.normal * d_b;
        double hn = f.hv.norm();
        Vec3 d_hv = (d_h - f.h * f.h.dot(d_h)) * (1.0 / hn);
        double un = f.u.norm();
        Vec3 d_u = (d_hv - f.d * f.d.dot(d_hv)) * (1.0 / un);
        for (int c = 0; c < 3; ++c) {
            double* gc = d_gamma + static_cast<size_t>(c) * c_sh;
            gc[1] += lw[c] * d_u.y;
            gc[2] += lw[c] * d_u.z;
            gc[3] += lw[c] * d_u.x;
        }
    }
}

std::vector<Image> render_conditions(const GBuffer& gb, const TextureSet& tex,
                                     const LightSet& lights,
                                     const std::vector<int>& condition_ids) {
    std::vector<Image> out;
    out.reserve(condition_ids.size());
    for (size_t i = 0; i < condition_ids.size(); ++i) out.emplace_back(gb.w, gb.h, 3, 0.0);
    for (int pi : gb.covered_indices) {
        ShadePoint p = make_shade_point(gb, pi, tex, lights.c_sh);
        for (size_t i = 0; i < condition_ids.size(); ++i) {
            Vec3 rgb = shade_point(p, lights.coeffs[condition_ids[i]], lights.c_sh);
            out[i].data[static_cast<size_t>(pi) * 3 + 0] = rgb.x;
            out[i].data[static_cast<size_t>(pi) * 3 + 1] = rgb.y;
            out[i].data[static_cast<size_t>(pi) * 3 + 2] = rgb.z;
        }
    }
    return out;
}

Composed compose(const std::vector<Image>& i_rs, const std::vector<Image>& m_l,
                 const Image& m_o, const Image& i_in) {
    if (i_rs.size() != m_l.size())
        throw std::invalid_argument("compose: |I_Rs| != |M_L|");
    Composed out;
    out.i_r = Image(i_in.w, i_in.h, 3, 0.0);
    out.i_out = Image(i_in.w, i_in.h, 3, 0.0);
    for (size_t i = 0; i < i_rs.size(); ++i) {
        if (!i_rs[i].same_shape(out.i_r) || m_l[i].w != i_in.w || m_l[i].h != i_in.h)
            throw std::invalid_argument("compose: shape mismatch");
        for (size_t pi = 0; pi < i_in.pixels(); ++pi) {
            double m = m_l[i].data[pi];
            for (int c = 0; c < 3; ++c)
                out.i_r.data[pi * 3 + c] += m * i_rs[i].data[pi * 3 + c];
        }
    }
    for (size_t pi = 0; pi < i_in.pixels(); ++pi) {
        double mo = m_o.data[pi];
        for (int c = 0; c < 3; ++c)
            out.i_out.data[pi * 3 + c] =
                mo * out.i_r.data[pi * 3 + c] + (1.0 - mo) * i_in.data[pi * 3 + c];
    }
    return out;
}

}  // namespace lumisplit
