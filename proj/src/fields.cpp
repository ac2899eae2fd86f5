#include "lumisplit/fields.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lumisplit/io.hpp"
#include "lumisplit/kernels.hpp"

namespace lumisplit {

using nlohmann::json;

size_t MaskField::param_count() const {
    size_t n = 0;
    for (auto& l : layers) n += l.w.size() + l.b.size();
    return n;
}

std::vector<double> MaskField::pack_params() const {
    std::vector<double> flat;
    flat.reserve(param_count());
    for (auto& l : layers) {
        flat.insert(flat.end(), l.w.begin(), l.w.end());
        flat.insert(flat.end(), l.b.begin(), l.b.end());
    }
    return flat;
}

void MaskField::unpack_params(const std::vector<double>& flat) {
    if (flat.size() != param_count())
        throw std::invalid_argument("unpack_params: size mismatch");
    size_t off = 0;
    for (auto& l : layers) {
        std::copy(flat.begin() + off, flat.begin() + off + l.w.size(), l.w.begin());
        off += l.w.size();
        std::copy(flat.begin() + off, flat.begin() + off + l.b.size(), l.b.begin());
        off += l.b.size();
    }
}

MaskField init_field(uint64_t seed, int n_outputs, int depth, int width, int freq_pairs,
                     bool softmax_head) {
    if (depth < 1 || width < 1) throw std::invalid_argument("init_field: bad architecture");
    MaskField f;
    f.n_out = n_outputs;
    f.softmax_head = softmax_head;
    f.freq_pairs = freq_pairs;
    Rng rng(seed);
    auto make_layer = [&](int in, int out, double scale) {
        MaskField::Layer l;
        l.in = in;
        l.out = out;
        double lim = std::sqrt(6.0 / (in + out)) * scale;
        l.w.resize(static_cast<size_t>(in) * out);
        for (auto& v : l.w) v = rng.uniform(-lim, lim);
        l.b.assign(out, 0.0);
        return l;
    };
    int in = f.input_dim();
    f.layers.push_back(make_layer(in, width, 1.0));
    for (int d = 1; d < depth; ++d) f.layers.push_back(make_layer(width, width, 1.0));
    // Small head init keeps the softmax near-uniform at start.
    f.layers.push_back(make_layer(width, n_outputs, 0.1));
    return f;
}

namespace {

// (x,y,t) -> [x,y,t, sin(2^j pi c), cos(2^j pi c) ...]
void encode(const double* xyz, int freq_pairs, double* out) {
    out[0] = xyz[0];
    out[1] = xyz[1];
    out[2] = xyz[2];
    int o = 3;
    for (int c = 0; c < 3; ++c) {
        double f = M_PI;
        for (int j = 0; j < freq_pairs; ++j) {
            out[o++] = std::sin(f * xyz[c]);
            out[o++] = std::cos(f * xyz[c]);
            f *= 2.0;
        }
    }
}

}  // namespace

FieldForward field_forward(const MaskField& field, const std::vector<double>& coords,
                           const std::vector<uint8_t>* alive) {
    int P = static_cast<int>(coords.size() / 3);
    FieldForward fwd;
    fwd.batch = P;
    int in_dim = field.input_dim();
    fwd.act.resize(field.layers.size());  // act[0] = encoded input, act[l] = hidden l output
    fwd.pre.resize(field.layers.size());

    std::vector<double> enc(static_cast<size_t>(P) * in_dim);
    for (int p = 0; p < P; ++p) encode(&coords[static_cast<size_t>(p) * 3], field.freq_pairs,
                                       &enc[static_cast<size_t>(p) * in_dim]);
    fwd.act[0] = std::move(enc);

    const auto& K = kernels::active();
    size_t L = field.layers.size();
    for (size_t l = 0; l < L; ++l) {
        const auto& layer = field.layers[l];
        std::vector<double> z(static_cast<size_t>(P) * layer.out);
        for (int p = 0; p < P; ++p)
            std::copy(layer.b.begin(), layer.b.end(), z.begin() + static_cast<size_t>(p) * layer.out);
        K.gemm_acc(fwd.act[l].data(), layer.w.data(), z.data(), P, layer.in, layer.out);
        fwd.pre[l] = z;
        if (l + 1 < L) {
            for (auto& v : z) v = v > 0.0 ? v : 0.0;  // ReLU
            fwd.act[l + 1] = std::move(z);
        }
    }

    // head
    int n = field.n_out;
    fwd.probs.assign(static_cast<size_t>(P) * n, 0.0);
    const std::vector<double>& logits = fwd.pre.back();
    if (field.softmax_head) {
        for (int p = 0; p < P; ++p) {
            const double* lp = &logits[static_cast<size_t>(p) * n];
            double mx = -1e300;
            for (int i = 0; i < n; ++i)
                if ((!alive || (*alive)[i]) && lp[i] > mx) mx = lp[i];
            double sum = 0.0;
            double* pp = &fwd.probs[static_cast<size_t>(p) * n];
            for (int i = 0; i < n; ++i) {
                if (alive && !(*alive)[i]) continue;
                pp[i] = std::exp(lp[i] - mx);
                sum += pp[i];
            }
            for (int i = 0; i < n; ++i) pp[i] /= sum;
        }
    } else {
        for (size_t i = 0; i < fwd.probs.size(); ++i)
            fwd.probs[i] = 1.0 / (1.0 + std::exp(-logits[i]));
    }
    return fwd;
}

std::vector<double> field_backward(const MaskField& field, const FieldForward& fwd,
                                   const std::vector<double>& d_probs,
                                   const std::vector<uint8_t>* alive) {
    int P = fwd.batch;
    int n = field.n_out;
    if (d_probs.size() != static_cast<size_t>(P) * n)
        throw std::invalid_argument("field_backward: upstream shape mismatch");
    const auto& K = kernels::active();

    // head jacobian -> d logits
    std::vector<double> dz(static_cast<size_t>(P) * n, 0.0);
    if (field.softmax_head) {
        for (int p = 0; p < P; ++p) {
            const double* pp = &fwd.probs[static_cast<size_t>(p) * n];
            const double* dp = &d_probs[static_cast<size_t>(p) * n];
            double dot = 0.0;
            for (int i = 0; i < n; ++i)
                if (!alive || (*alive)[i]) dot += dp[i] * pp[i];
            for (int i = 0; i < n; ++i)
                if (!alive || (*alive)[i])
                    dz[static_cast<size_t>(p) * n + i] = pp[i] * (dp[i] - dot);
        }
    } else {
        for (size_t i = 0; i < dz.size(); ++i) {
            double s = fwd.probs[i];
            dz[i] = d_probs[i] * s * (1.0 - s);
        }
    }

    size_t L = field.layers.size();
    std::vector<std::vector<double>> grads_w(L), grads_b(L);
    for (int l = static_cast<int>(L) - 1; l >= 0; --l) {
        const auto& layer = field.layers[l];
        grads_w[l].assign(layer.w.size(), 0.0);
        grads_b[l].assign(layer.b.size(), 0.0);
        // dW = act[l]^T * dz ; db = column sums of dz
        K.gemm_at_acc(fwd.act[l].data(), dz.data(), grads_w[l].data(), P, layer.in, layer.out);
        for (int p = 0; p < P; ++p)
            for (int j = 0; j < layer.out; ++j)
                grads_b[l][j] += dz[static_cast<size_t>(p) * layer.out + j];
        if (l == 0) break;
        // d act[l] = dz * W^T, then ReLU gate by pre[l-1]
        std::vector<double> wt(layer.w.size());
        for (int i = 0; i < layer.in; ++i)
            for (int j = 0; j < layer.out; ++j)
                wt[static_cast<size_t>(j) * layer.in + i] = layer.w[static_cast<size_t>(i) * layer.out + j];
        std::vector<double> da(static_cast<size_t>(P) * layer.in, 0.0);
        K.gemm_acc(dz.data(), wt.data(), da.data(), P, layer.out, layer.in);
        const auto& pre = fwd.pre[l - 1];
        for (size_t i = 0; i < da.size(); ++i)
            if (pre[i] <= 0.0) da[i] = 0.0;
        dz = std::move(da);
    }

    std::vector<double> flat;
    flat.reserve(field.param_count());
    for (size_t l = 0; l < L; ++l) {
        flat.insert(flat.end(), grads_w[l].begin(), grads_w[l].end());
        flat.insert(flat.end(), grads_b[l].begin(), grads_b[l].end());
    }
    return flat;
}

std::vector<double> pixel_coords(const std::vector<int>& pixel_indices, int w, int h, double t) {
    std::vector<double> coords;
    coords.reserve(pixel_indices.size() * 3);
    for (int pi : pixel_indices) {
        int x = pi % w, y = pi / w;
        coords.push_back((x + 0.5) / w * 2.0 - 1.0);
        coords.push_back((y + 0.5) / h * 2.0 - 1.0);
        coords.push_back(t);
    }
    return coords;
}

std::vector<Image> eval_light_mask(const MaskField& f, const GBuffer& gb, double t,
                                   const std::vector<uint8_t>* alive) {
    std::vector<double> coords = pixel_coords(gb.covered_indices, gb.w, gb.h, t);
    FieldForward fwd = field_forward(f, coords, alive);
    std::vector<Image> masks(f.n_out, Image(gb.w, gb.h, 1, 0.0));
    for (size_t ci = 0; ci < gb.covered_indices.size(); ++ci) {
        int pi = gb.covered_indices[ci];
        for (int i = 0; i < f.n_out; ++i)
            masks[i].data[pi] = fwd.probs[ci * f.n_out + i];
    }
    return masks;
}

Image eval_face_mask(const MaskField& g, const GBuffer& gb, double t) {
    std::vector<double> coords = pixel_coords(gb.covered_indices, gb.w, gb.h, t);
    FieldForward fwd = field_forward(g, coords);
    Image mask(gb.w, gb.h, 1, 0.0);
    for (size_t ci = 0; ci < gb.covered_indices.size(); ++ci)
        mask.data[gb.covered_indices[ci]] = fwd.probs[ci];
    return mask;
}

void save_field(const std::string& path_base, const MaskField& field) {
    io::Flr flr;
    auto flat = field.pack_params();
    flr.w = static_cast<uint32_t>(flat.size());
    flr.h = 1;
    flr.c = 1;
    flr.data.assign(flat.begin(), flat.end());
    io::write_flr(path_base + ".flr", flr);
    json j;
    j["n_out"] = field.n_out;
    j["softmax_head"] = field.softmax_head;
    j["freq_pairs"] = field.freq_pairs;
    json shapes = json::array();
    for (auto& l : field.layers) shapes.push_back({l.in, l.out});
    j["layer_shapes"] = shapes;
    // float32 container truncates; keep full precision alongside
    j["params_f64"] = flat;
    io::write_text_file(path_base + ".json", j.dump());
}

MaskField load_field(const std::string& path_base) {
    json j = json::parse(io::read_text_file(path_base + ".json"));
    MaskField f;
    f.n_out = j.at("n_out");
    f.softmax_head = j.at("softmax_head");
    f.freq_pairs = j.at("freq_pairs");
    for (auto& s : j.at("layer_shapes")) {
        MaskField::Layer l;
        l.in = s[0];
        l.out = s[1];
        l.w.assign(static_cast<size_t>(l.in) * l.out, 0.0);
        l.b.assign(l.out, 0.0);
        f.layers.push_back(std::move(l));
    }
    f.unpack_params(j.at("params_f64").get<std::vector<double>>());
    return f;
}

}  // namespace lumisplit
