#include "lumisplit/proxymm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace lumisplit {

using nlohmann::json;

Vec3 rotate_axis_angle(const Vec3& w, const Vec3& v) {
    double theta = w.norm();
    if (theta < 1e-12) return v + w.cross(v);
    Vec3 k = w * (1.0 / theta);
    double c = std::cos(theta), s = std::sin(theta);
    return v * c + k.cross(v) * s + k * (k.dot(v) * (1.0 - c));
}

// Gallego & Yezzi closed form for d(R(w)v)/dw; series branch near theta=0.
void rotate_axis_angle_jacobian(const Vec3& w, const Vec3& v, double J[3][3]) {
    double theta = w.norm();
    if (theta < 1e-7) {
        // R ~ I + [w]x ; d(Rv)/dw ~ -[v]x
        double m[3][3] = {{0, v.z, -v.y}, {-v.z, 0, v.x}, {v.y, -v.x, 0}};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) J[i][j] = m[i][j];
        return;
    }
    Vec3 rv = rotate_axis_angle(w, v);
    double t2 = theta * theta;
    double wa[3] = {w.x, w.y, w.z};
    for (int j = 0; j < 3; ++j) {
        Vec3 ej(j == 0, j == 1, j == 2);
        Vec3 rej = rotate_axis_angle(w, ej);
        Vec3 u = w * (wa[j] / t2);
        Vec3 cr = w.cross(ej - rej) * (1.0 / t2);
        // column j = (w_j [w]x + [w x (I-R)e_j]x) / theta^2 * R v
        Vec3 col = u.cross(rv) + cr.cross(rv);
        J[0][j] = col.x;
        J[1][j] = col.y;
        J[2][j] = col.z;
    }
}

namespace {

struct MeshBuild {
    std::vector<Vec3> verts;  // on unit sphere
    std::vector<Triangle> tris;
};

MeshBuild icosphere(int subdivisions) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    MeshBuild m;
    auto add = [&](double x, double y, double z) {
        m.verts.push_back(Vec3(x, y, z).normalized());
    };
    add(-1, t, 0); add(1, t, 0); add(-1, -t, 0); add(1, -t, 0);
    add(0, -1, t); add(0, 1, t); add(0, -1, -t); add(0, 1, -t);
    add(t, 0, -1); add(t, 0, 1); add(-t, 0, -1); add(-t, 0, 1);
    int faces[20][3] = {{0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
                        {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                        {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
                        {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
    for (auto& f : faces) m.tris.push_back({f[0], f[1], f[2]});

    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            Vec3 p = (m.verts[a] + m.verts[b]).normalized();
            int idx = static_cast<int>(m.verts.size());
            m.verts.push_back(p);
            midpoint[key] = idx;
            return idx;
        };
        std::vector<Triangle> out;
        out.reserve(m.tris.size() * 4);
        for (auto& tr : m.tris) {
            int ab = mid(tr.a, tr.b), bc = mid(tr.b, tr.c), ca = mid(tr.c, tr.a);
            out.push_back({tr.a, ab, ca});
            out.push_back({tr.b, bc, ab});
            out.push_back({tr.c, ca, bc});
            out.push_back({ab, bc, ca});
        }
        m.tris = std::move(out);
    }
    return m;
}

Vec2 sphere_uv(const Vec3& p) {
    double u = 0.5 + std::atan2(p.x, p.z) / (2.0 * M_PI);
    double v = 0.5 + std::asin(std::clamp(p.y, -1.0, 1.0)) / M_PI;
    return {std::clamp(u, 0.0, 1.0), std::clamp(v, 0.0, 1.0)};
}

// Band-limited displacement field: sum of <= 8 Gaussian blobs on the sphere.
std::vector<Vec3> blob_field(Rng& rng, const std::vector<Vec3>& unit_pos) {
    int blobs = rng.uniform_int(4, 8);
    struct Blob {
        Vec3 center, dir;
        double inv2s2;
    };
    std::vector<Blob> bs;
    for (int j = 0; j < blobs; ++j) {
        Vec3 c(rng.normal(), rng.normal(), rng.normal());
        c = c.normalized();
        double sigma = rng.uniform(0.15, 0.45);
        Vec3 d(rng.normal(), rng.normal(), rng.normal());
        d = d.normalized() * rng.uniform(0.02, 0.08);
        bs.push_back({c, d, 1.0 / (2.0 * sigma * sigma)});
    }
    std::vector<Vec3> field(unit_pos.size());
    for (size_t i = 0; i < unit_pos.size(); ++i) {
        Vec3 acc;
        for (auto& b : bs) {
            Vec3 dp = unit_pos[i] - b.center;
            acc += b.dir * std::exp(-dp.dot(dp) * b.inv2s2);
        }
        field[i] = acc;
    }
    return field;
}

// Low-frequency UV blob raster, one value per channel per blob.
void add_uv_blobs(Rng& rng, Image& raster, int blobs, double amp_lo, double amp_hi) {
    for (int j = 0; j < blobs; ++j) {
        double cx = rng.uniform(0.0, 1.0), cy = rng.uniform(0.0, 1.0);
        double sigma = rng.uniform(0.06, 0.25);
        double amp[3];
        for (int ch = 0; ch < raster.c; ++ch)
            amp[ch] = rng.uniform(amp_lo, amp_hi) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
        double inv2s2 = 1.0 / (2.0 * sigma * sigma);
        for (int y = 0; y < raster.h; ++y)
            for (int x = 0; x < raster.w; ++x) {
                double u = (x + 0.5) / raster.w, v = (y + 0.5) / raster.h;
                double du = u - cx, dv = v - cy;
                double g = std::exp(-(du * du + dv * dv) * inv2s2);
                for (int ch = 0; ch < raster.c; ++ch) raster.at(x, y, ch) += amp[ch] * g;
            }
    }
}

std::vector<int> pick_landmarks(const std::vector<Vec3>& unit_pos, int count) {
    // Candidates on the +z hemisphere, then farthest-point sampling from the
    // most frontal vertex. Deterministic, independent of the seed.
    std::vector<int> cand;
    for (size_t i = 0; i < unit_pos.size(); ++i)
        if (unit_pos[i].z > 0.35) cand.push_back(static_cast<int>(i));
    if (static_cast<int>(cand.size()) < count)
        throw std::runtime_error("not enough frontal vertices for landmarks");
    int best = cand[0];
    for (int i : cand)
        if (unit_pos[i].z > unit_pos[best].z) best = i;
    std::vector<int> chosen = {best};
    std::vector<double> mind(cand.size(), 1e30);
    while (static_cast<int>(chosen.size()) < count) {
        int last = chosen.back();
        int arg = -1;
        double bestd = -1.0;
        for (size_t ci = 0; ci < cand.size(); ++ci) {
            Vec3 d = unit_pos[cand[ci]] - unit_pos[last];
            mind[ci] = std::min(mind[ci], d.norm());
            if (mind[ci] > bestd) {
                bestd = mind[ci];
                arg = static_cast<int>(ci);
            }
        }
        chosen.push_back(cand[arg]);
        mind[arg] = -1.0;
    }
    return chosen;
}

}  // namespace

ProxyMM generate_model(uint64_t seed, int k_alpha, int k_beta, int k_delta, int tex_size) {
    if (k_alpha < 1 || k_alpha > 32 || k_beta < 1 || k_beta > 32 || k_delta < 1 || k_delta > 32)
        throw std::invalid_argument("basis counts must be in [1,32]");
    Rng rng(seed);
    MeshBuild mesh = icosphere(4);

    ProxyMM model;
    model.seed = seed;
    model.triangles = mesh.tris;
    model.mean_vertices.reserve(mesh.verts.size());
    model.uv_coords.reserve(mesh.verts.size());
    const Vec3 scale(1.0, 1.25, 1.1);
    for (auto& p : mesh.verts) {
        model.mean_vertices.push_back({p.x * scale.x, p.y * scale.y, p.z * scale.z});
        model.uv_coords.push_back(sphere_uv(p));
    }

    for (int k = 0; k < k_alpha; ++k) model.shape_basis.push_back(blob_field(rng, mesh.verts));
    for (int k = 0; k < k_beta; ++k) model.expr_basis.push_back(blob_field(rng, mesh.verts));

    model.albedo_mean = TextureSet(tex_size, tex_size);
    for (int y = 0; y < tex_size; ++y)
        for (int x = 0; x < tex_size; ++x) {
            model.albedo_mean.diffuse.at(x, y, 0) = 0.78;
            model.albedo_mean.diffuse.at(x, y, 1) = 0.60;
            model.albedo_mean.diffuse.at(x, y, 2) = 0.50;
            model.albedo_mean.specular.at(x, y, 0) = 0.15;
            model.albedo_mean.roughness.at(x, y, 0) = 0.60;
        }
    add_uv_blobs(rng, model.albedo_mean.diffuse, 6, 0.02, 0.08);
    for (double& v : model.albedo_mean.diffuse.data) v = std::clamp(v, 0.05, 0.95);

    for (int k = 0; k < k_delta; ++k) {
        Image basis(tex_size, tex_size, 3, 0.0);
        add_uv_blobs(rng, basis, rng.uniform_int(4, 8), 0.05, 0.15);
        // Keep each basis channel zero-mean so the coefficient span carries
        // only local variation; global brightness lives in the mean texture
        // and the lighting, which keeps the decomposition well-posed.
        for (int c = 0; c < 3; ++c) {
            double mean = 0.0;
            for (int i = c; i < (int)basis.data.size(); i += 3) mean += basis.data[i];
            mean /= tex_size * (double)tex_size;
            for (int i = c; i < (int)basis.data.size(); i += 3) basis.data[i] -= mean;
        }
        model.albedo_basis.push_back(std::move(basis));
    }

    model.landmark_idx = pick_landmarks(mesh.verts, 16);
    return model;
}

GeometryEval evaluate_geometry(const ProxyMM& model, const std::vector<double>& alpha,
                               const std::vector<double>& beta) {
    if (static_cast<int>(alpha.size()) != model.k_alpha())
        throw std::invalid_argument("alpha length mismatch");
    if (static_cast<int>(beta.size()) != model.k_beta())
        throw std::invalid_argument("beta length mismatch");
    GeometryEval out;
    out.vertices = model.mean_vertices;
    for (size_t k = 0; k < alpha.size(); ++k)
        if (alpha[k] != 0.0)
            for (size_t i = 0; i < out.vertices.size(); ++i)
                out.vertices[i] += model.shape_basis[k][i] * alpha[k];
    for (size_t k = 0; k < beta.size(); ++k)
        if (beta[k] != 0.0)
            for (size_t i = 0; i < out.vertices.size(); ++i)
                out.vertices[i] += model.expr_basis[k][i] * beta[k];

    out.normals.assign(out.vertices.size(), Vec3());
    for (auto& tr : model.triangles) {
        Vec3 n = (out.vertices[tr.b] - out.vertices[tr.a])
                     .cross(out.vertices[tr.c] - out.vertices[tr.a]);
        out.normals[tr.a] += n;  // cross product length = 2*area
        out.normals[tr.b] += n;
        out.normals[tr.c] += n;
    }
    for (auto& n : out.normals) n = n.normalized();
    return out;
}

TextureSet evaluate_albedo(const ProxyMM& model, const std::vector<double>& delta) {
    if (static_cast<int>(delta.size()) != model.k_delta())
        throw std::invalid_argument("delta length mismatch");
    TextureSet t = model.albedo_mean;
    for (size_t k = 0; k < delta.size(); ++k)
        if (delta[k] != 0.0)
            for (size_t i = 0; i < t.diffuse.data.size(); ++i)
                t.diffuse.data[i] += delta[k] * model.albedo_basis[k].data[i];
    for (double& v : t.diffuse.data) v = clamp01(v);
    return t;
}

Vec2 project_point(const PoseCamera& pose, const Vec3& world) {
    Vec3 cam = rotate_axis_angle(pose.rotation, world) + pose.translation;
    if (cam.z <= 1e-9) throw std::runtime_error("point behind camera");
    return {pose.focal * cam.x / cam.z + pose.width * 0.5,
            pose.focal * cam.y / cam.z + pose.height * 0.5};
}

std::vector<Vec2> project_landmarks(const ProxyMM& model, const std::vector<double>& alpha,
                                    const std::vector<double>& beta, const PoseCamera& pose) {
    GeometryEval geo = evaluate_geometry(model, alpha, beta);
    std::vector<Vec2> out;
    out.reserve(model.landmark_idx.size());
    for (size_t li = 0; li < model.landmark_idx.size(); ++li) {
        const Vec3& v = geo.vertices[model.landmark_idx[li]];
        Vec3 cam = rotate_axis_angle(pose.rotation, v) + pose.translation;
        if (cam.z <= 1e-9)
            throw std::runtime_error("landmark " + std::to_string(li) + " behind camera");
        out.push_back({pose.focal * cam.x / cam.z + pose.width * 0.5,
                       pose.focal * cam.y / cam.z + pose.height * 0.5});
    }
    return out;
}

namespace {

json vec3_list_to_json(const std::vector<Vec3>& vs) {
    json arr = json::array();
    for (auto& v : vs) arr.push_back({v.x, v.y, v.z});
    return arr;
}

std::vector<Vec3> vec3_list_from_json(const json& arr) {
    std::vector<Vec3> out;
    out.reserve(arr.size());
    for (auto& e : arr) out.push_back({e[0], e[1], e[2]});
    return out;
}

json image_to_json(const Image& img) {
    return json{{"w", img.w}, {"h", img.h}, {"c", img.c}, {"data", img.data}};
}

Image image_from_json(const json& j) {
    Image img(j.at("w"), j.at("h"), j.at("c"));
    img.data = j.at("data").get<std::vector<double>>();
    return img;
}

}  // namespace

std::string serialize_model(const ProxyMM& model) {
    json j;
    j["seed"] = model.seed;
    j["vertices"] = vec3_list_to_json(model.mean_vertices);
    json tris = json::array();
    for (auto& t : model.triangles) tris.push_back({t.a, t.b, t.c});
    j["triangles"] = tris;
    json uvs = json::array();
    for (auto& uv : model.uv_coords) uvs.push_back({uv.x, uv.y});
    j["uv_coords"] = uvs;
    j["shape_basis"] = json::array();
    for (auto& f : model.shape_basis) j["shape_basis"].push_back(vec3_list_to_json(f));
    j["expr_basis"] = json::array();
    for (auto& f : model.expr_basis) j["expr_basis"].push_back(vec3_list_to_json(f));
    j["albedo_mean"] = {{"diffuse", image_to_json(model.albedo_mean.diffuse)},
                        {"specular", image_to_json(model.albedo_mean.specular)},
                        {"roughness", image_to_json(model.albedo_mean.roughness)}};
    j["albedo_basis"] = json::array();
    for (auto& b : model.albedo_basis) j["albedo_basis"].push_back(image_to_json(b));
    j["landmark_idx"] = model.landmark_idx;
    return j.dump();
}

ProxyMM deserialize_model(const std::string& text) {
    json j = json::parse(text);
    ProxyMM m;
    m.seed = j.at("seed");
    m.mean_vertices = vec3_list_from_json(j.at("vertices"));
    for (auto& t : j.at("triangles")) m.triangles.push_back({t[0], t[1], t[2]});
    for (auto& uv : j.at("uv_coords")) m.uv_coords.push_back({uv[0], uv[1]});
    for (auto& f : j.at("shape_basis")) m.shape_basis.push_back(vec3_list_from_json(f));
    for (auto& f : j.at("expr_basis")) m.expr_basis.push_back(vec3_list_from_json(f));
    m.albedo_mean.diffuse = image_from_json(j.at("albedo_mean").at("diffuse"));
    m.albedo_mean.specular = image_from_json(j.at("albedo_mean").at("specular"));
    m.albedo_mean.roughness = image_from_json(j.at("albedo_mean").at("roughness"));
    for (auto& b : j.at("albedo_basis")) m.albedo_basis.push_back(image_from_json(b));
    m.landmark_idx = j.at("landmark_idx").get<std::vector<int>>();
    return m;
}

uint64_t model_hash(const ProxyMM& model) {
    uint64_t h = 1469598103934665603ULL;
    h = fnv1a(model.mean_vertices.data(), model.mean_vertices.size() * sizeof(Vec3), h);
    h = fnv1a(model.triangles.data(), model.triangles.size() * sizeof(Triangle), h);
    for (auto& f : model.shape_basis) h = fnv1a(f.data(), f.size() * sizeof(Vec3), h);
    for (auto& f : model.expr_basis) h = fnv1a(f.data(), f.size() * sizeof(Vec3), h);
    h = hash_doubles(model.albedo_mean.diffuse.data, h);
    for (auto& b : model.albedo_basis) h = hash_doubles(b.data, h);
    h = fnv1a(model.landmark_idx.data(), model.landmark_idx.size() * sizeof(int), h);
    return h;
}

}  // namespace lumisplit
