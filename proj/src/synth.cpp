#include "lumisplit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lumisplit/io.hpp"
#include "lumisplit/raster.hpp"
#include "lumisplit/shade.hpp"

namespace lumisplit {

using nlohmann::json;
namespace fs = std::filesystem;

std::string occluder_name(Occluder o) {
    switch (o) {
        case Occluder::None: return "none";
        case Occluder::Shadow: return "shadow";
        case Occluder::Sprite: return "sprite";
        case Occluder::Both: return "both";
    }
    return "none";
}

Occluder occluder_from_name(const std::string& s) {
    if (s == "none") return Occluder::None;
    if (s == "shadow") return Occluder::Shadow;
    if (s == "sprite") return Occluder::Sprite;
    if (s == "both") return Occluder::Both;
    throw std::invalid_argument("unknown occluder kind '" + s + "'");
}

std::vector<Image> SceneBundle::region_masks(int frame) const {
    const Image& ids = gt_region_id[frame];
    std::vector<Image> masks(n_regions(), Image(ids.w, ids.h, 1));
    for (size_t i = 0; i < ids.data.size(); ++i) {
        int r = static_cast<int>(ids.data[i]);
        if (r >= 0) masks[r].data[i] = 1.0;
    }
    return masks;
}

namespace {

constexpr double kDeg = 3.14159265358979323846 / 180.0;

uint64_t derive_seed(uint64_t seed, uint64_t salt) {
    uint64_t x = seed + salt * 0x9E3779B97F4A7C15ULL;
    x ^= x >> 30; x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27; x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x | 1ULL;
}

// A disk fan used as a shadow caster, plus the direction toward its light.
struct ShadowCaster {
    std::vector<Vec3> vertices;
    std::vector<Triangle> triangles;
    Vec3 light_dir;
};

ShadowCaster make_caster(Rng& rng, const Vec3& head_center) {
    ShadowCaster c;
    c.light_dir = Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), -1.0).normalized();
    double dist = 1.6 + rng.uniform(0.0, 0.6);
    double radius = 0.55 + rng.uniform(0.0, 0.45);
    Vec3 center = head_center + c.light_dir * dist +
                  Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 0.0);
    // orthonormal frame perpendicular to the light direction
    Vec3 a = std::abs(c.light_dir.x) < 0.8 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
    Vec3 u = c.light_dir.cross(a).normalized();
    Vec3 v = c.light_dir.cross(u).normalized();
    const int seg = 24;
    c.vertices.push_back(center);
    for (int i = 0; i < seg; ++i) {
        double ang = 2.0 * 3.14159265358979323846 * i / seg;
        c.vertices.push_back(center + u * (radius * std::cos(ang)) +
                             v * (radius * std::sin(ang)));
    }
    for (int i = 0; i < seg; ++i)
        c.triangles.push_back({0, 1 + i, 1 + (i + 1) % seg});
    return c;
}

struct Sprite {
    std::vector<Vec2> poly;  // convex, screen space
    Vec3 base_color;
    uint64_t noise_seed = 0;

    bool contains(double x, double y) const {
        for (size_t i = 0; i < poly.size(); ++i) {
            const Vec2& p = poly[i];
            const Vec2& q = poly[(i + 1) % poly.size()];
            if ((q.x - p.x) * (y - p.y) - (q.y - p.y) * (x - p.x) < 0.0) return false;
        }
        return true;
    }
};

Sprite make_sprite(Rng& rng, int w, int h) {
    Sprite s;
    double cx = w * (0.5 + rng.uniform(-0.15, 0.15));
    double cy = h * (0.22 + rng.uniform(-0.08, 0.08));
    double rad = w * (0.18 + rng.uniform(0.0, 0.08));
    const int nv = 5;
    for (int i = 0; i < nv; ++i) {
        double ang = 2.0 * 3.14159265358979323846 * i / nv + rng.uniform(-0.2, 0.2);
        double r = rad * (0.8 + rng.uniform(0.0, 0.4));
        s.poly.push_back({cx + r * std::cos(ang), cy + r * std::sin(ang)});
    }
    s.base_color = Vec3(rng.uniform(0.05, 0.18), rng.uniform(0.05, 0.18),
                        rng.uniform(0.05, 0.18));
    s.noise_seed = rng.next_u64();
    return s;
}

Image gaussian_blur(const Image& src, double sigma) {
    int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kern(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kern[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += kern[i + radius];
    }
    for (double& k : kern) k /= sum;
    Image tmp(src.w, src.h, src.c), out(src.w, src.h, src.c);
    for (int y = 0; y < src.h; ++y)
        for (int x = 0; x < src.w; ++x)
            for (int ch = 0; ch < src.c; ++ch) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    int xx = std::clamp(x + i, 0, src.w - 1);
                    acc += kern[i + radius] * src.at(xx, y, ch);
                }
                tmp.at(x, y, ch) = acc;
            }
    for (int y = 0; y < src.h; ++y)
        for (int x = 0; x < src.w; ++x)
            for (int ch = 0; ch < src.c; ++ch) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    int yy = std::clamp(y + i, 0, src.h - 1);
                    acc += kern[i + radius] * tmp.at(x, yy, ch);
                }
                out.at(x, y, ch) = acc;
            }
    return out;
}

struct Identity {
    std::vector<double> alpha;
    std::vector<double> delta;
    TextureSet texture;
};

SceneBundle gen_scene_impl(uint64_t seed, const SceneSpec& spec_in,
                           const Identity* shared) {
    SceneSpec spec = spec_in;
    if (spec.n_regions < 1 || spec.n_regions > 3)
        throw std::invalid_argument("n_regions must be 1..3");
    bool want_shadow = spec.occluder == Occluder::Shadow || spec.occluder == Occluder::Both;
    bool want_sprite = spec.occluder == Occluder::Sprite || spec.occluder == Occluder::Both;
    if (want_shadow && spec.n_regions < 2)
        throw std::invalid_argument("shadow occluder needs n_regions >= 2");
    if (spec.n_regions > 1 && !want_shadow)
        throw std::invalid_argument("n_regions > 1 needs a shadow occluder");
    if (spec.model_seed == 0) spec.model_seed = derive_seed(seed, 77);

    SceneBundle sc;
    sc.spec = spec;
    sc.seed = seed;
    sc.model = generate_model(spec.model_seed);

    Rng rng(derive_seed(seed, 1));
    const int W = spec.image_size, H = spec.image_size;
    const int k = spec.k;

    if (shared) {
        sc.gt_alpha = shared->alpha;
        sc.gt_delta = shared->delta;
        sc.gt_texture = shared->texture;
        // keep the draw count identical either way
        for (int i = 0; i < sc.model.k_alpha(); ++i) rng.normal(0.0, 0.5);
        for (int i = 0; i < sc.model.k_delta(); ++i) rng.normal(0.0, 0.5);
    } else {
        for (int i = 0; i < sc.model.k_alpha(); ++i) sc.gt_alpha.push_back(rng.normal(0.0, 0.5));
        for (int i = 0; i < sc.model.k_delta(); ++i) sc.gt_delta.push_back(rng.normal(0.0, 0.5));
        sc.gt_texture = evaluate_albedo(sc.model, sc.gt_delta);
    }
    // blob detail the coefficient basis cannot represent
    {
        Rng drng(derive_seed(seed, 9));
        Image& d = shared ? sc.gt_texture.diffuse : sc.gt_texture.diffuse;
        int nblob = 6;
        // shared identities already carry their detail
        if (!shared) {
            for (int b = 0; b < nblob; ++b) {
                double bu = drng.uniform(), bv = drng.uniform();
                double sig = drng.uniform(0.05, 0.14);
                double amp[3] = {drng.uniform(-0.06, 0.06), drng.uniform(-0.06, 0.06),
                                 drng.uniform(-0.06, 0.06)};
                for (int y = 0; y < d.h; ++y)
                    for (int x = 0; x < d.w; ++x) {
                        double u = (x + 0.5) / d.w, v = (y + 0.5) / d.h;
                        double du = u - bu, dv = v - bv;
                        double g = std::exp(-0.5 * (du * du + dv * dv) / (sig * sig));
                        for (int ch = 0; ch < 3; ++ch)
                            d.at(x, y, ch) = clamp01(d.at(x, y, ch) + amp[ch] * g);
                    }
            }
        }
    }

    // lights: region 0 ambient + dominant direction; shadow regions dimmer + tinted
    Vec3 d0 = Vec3(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4), -1.0).normalized();
    {
        std::vector<double> base(3 * spec.c_sh, 0.0);
        double s = 0.8 + rng.uniform(-0.15, 0.15);
        for (int ch = 0; ch < 3; ++ch) {
            base[ch * spec.c_sh + 0] = 2.0 + rng.uniform(-0.25, 0.25);
            if (spec.c_sh >= 4) {
                base[ch * spec.c_sh + 1] = s * d0.y;
                base[ch * spec.c_sh + 2] = s * d0.z;
                base[ch * spec.c_sh + 3] = s * d0.x;
            }
            for (int q = 4; q < spec.c_sh; ++q)
                base[ch * spec.c_sh + q] = rng.uniform(-0.06, 0.06);
        }
        sc.gt_lights.push_back(base);
        for (int r = 1; r < spec.n_regions; ++r) {
            double factor = rng.uniform(0.15, 0.5);
            std::vector<double> lr(3 * spec.c_sh);
            for (size_t i = 0; i < lr.size(); ++i) lr[i] = base[i] * factor;
            for (int ch = 0; ch < 3; ++ch)
                lr[ch * spec.c_sh + 0] += rng.uniform(-0.1, 0.1);
            sc.gt_lights.push_back(lr);
        }
    }

    // per-frame pose and expression
    double base_yaw = rng.uniform(-12.0, 12.0) * kDeg;
    double pitch = rng.uniform(-8.0, 8.0) * kDeg;
    double roll = rng.uniform(-5.0, 5.0) * kDeg;
    Vec3 base_t(rng.uniform(-0.12, 0.12), rng.uniform(-0.12, 0.12),
                3.2 + rng.uniform(-0.2, 0.2));
    for (int f = 0; f < k; ++f) {
        PoseCamera p;
        double sweep = (k > 1) ? (static_cast<double>(f) / (k - 1) - 0.5) * 36.0 * kDeg : 0.0;
        double yaw = std::clamp(base_yaw + sweep, -32.0 * kDeg, 32.0 * kDeg);
        p.rotation = Vec3(pitch, yaw, roll);
        p.translation = base_t;
        p.focal = 1.25 * W;
        p.width = W;
        p.height = H;
        sc.gt_pose.push_back(p);
        std::vector<double> beta(sc.model.k_beta());
        for (double& b : beta) b = rng.normal(0.0, 0.25);
        sc.gt_beta.push_back(beta);
        sc.times.push_back(k == 1 ? 0.0 : static_cast<double>(f) / k);
    }

    Sprite sprite;
    if (want_sprite) sprite = make_sprite(rng, W, H);

    // shadow casters; resample jointly until every region clears the floor
    int n_shadow = spec.n_regions - 1;
    std::vector<ShadowCaster> casters;
    std::vector<GBuffer> gbs(k);
    std::vector<std::vector<Vec3>> posed_v(k), posed_n(k);
    for (int f = 0; f < k; ++f) {
        GeometryEval geo = evaluate_geometry(sc.model, sc.gt_alpha, sc.gt_beta[f]);
        gbs[f] = rasterize(geo.vertices, geo.normals, sc.model.triangles,
                           sc.model.uv_coords, sc.gt_pose[f]);
        posed_v[f].resize(geo.vertices.size());
        posed_n[f].resize(geo.normals.size());
        for (size_t i = 0; i < geo.vertices.size(); ++i) {
            posed_v[f][i] = rotate_axis_angle(sc.gt_pose[f].rotation, geo.vertices[i]) +
                            sc.gt_pose[f].translation;
            posed_n[f][i] = rotate_axis_angle(sc.gt_pose[f].rotation, geo.normals[i]);
        }
    }

    bool ok = false;
    for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
        casters.clear();
        for (int r = 0; r < n_shadow; ++r) casters.push_back(make_caster(rng, base_t));
        sc.gt_region_id.assign(k, Image(W, H, 1, -1.0));
        std::vector<std::vector<int>> counts(k, std::vector<int>(spec.n_regions, 0));
        for (int f = 0; f < k; ++f) {
            Image& ids = sc.gt_region_id[f];
            for (int pi : gbs[f].covered_indices) ids.data[pi] = 0.0;
            for (int r = 0; r < n_shadow; ++r) {
                Image vis = shadow_visibility(casters[r].vertices, casters[r].triangles,
                                              gbs[f], posed_v[f], posed_n[f],
                                              sc.model.triangles, casters[r].light_dir);
                for (int pi : gbs[f].covered_indices)
                    if (vis.data[pi] == 0.0) ids.data[pi] = 1.0 + r;
            }
            for (int pi : gbs[f].covered_indices)
                counts[f][static_cast<int>(ids.data[pi])]++;
        }
        ok = true;
        double total = static_cast<double>(W) * H;
        for (int f = 0; f < k && ok; ++f)
            for (int r = 0; r < spec.n_regions; ++r)
                if (counts[f][r] / total < spec.min_region_frac) { ok = false; break; }
    }
    if (!ok) throw std::runtime_error("scene generation: a light region stayed below the area floor after 10 attempts");

    // render + compose; light scale is linear, so one rescale pass keeps [0,1]
    double peak = 0.0;
    for (int pass = 0; pass < 2; ++pass) {
        sc.frames.clear();
        sc.gt_face_mask.clear();
        sc.backgrounds.clear();
        LightSet ls;
        ls.n = spec.n_regions;
        ls.c_sh = spec.c_sh;
        ls.coeffs = sc.gt_lights;
        ls.alive.assign(spec.n_regions, 1);
        std::vector<int> cond_ids;
        for (int r = 0; r < spec.n_regions; ++r) cond_ids.push_back(r);
        for (int f = 0; f < k; ++f) {
            std::vector<Image> i_rs = render_conditions(gbs[f], sc.gt_texture, ls, cond_ids);
            Image face = gbs[f].coverage_image();
            Image bg(W, H, 3);
            Rng brng(derive_seed(seed, 301));
            Vec3 top(brng.uniform(0.2, 0.5), brng.uniform(0.2, 0.5), brng.uniform(0.3, 0.6));
            Vec3 bot(brng.uniform(0.05, 0.25), brng.uniform(0.05, 0.25), brng.uniform(0.1, 0.3));
            for (int y = 0; y < H; ++y) {
                double ty = static_cast<double>(y) / (H - 1);
                Vec3 cc = top * (1.0 - ty) + bot * ty;
                for (int x = 0; x < W; ++x) {
                    bg.at(x, y, 0) = cc.x; bg.at(x, y, 1) = cc.y; bg.at(x, y, 2) = cc.z;
                }
            }
            if (want_sprite) {
                Rng nrng(sprite.noise_seed);
                for (int y = 0; y < H; ++y)
                    for (int x = 0; x < W; ++x) {
                        double nz = nrng.uniform(-0.03, 0.03);
                        if (!sprite.contains(x + 0.5, y + 0.5)) continue;
                        face.at(x, y, 0) = 0.0;
                        bg.at(x, y, 0) = clamp01(sprite.base_color.x + nz);
                        bg.at(x, y, 1) = clamp01(sprite.base_color.y + nz);
                        bg.at(x, y, 2) = clamp01(sprite.base_color.z + nz);
                    }
            }
            std::vector<Image> m_l = [&] {
                std::vector<Image> m(spec.n_regions, Image(W, H, 1));
                for (size_t i = 0; i < sc.gt_region_id[f].data.size(); ++i) {
                    int r = static_cast<int>(sc.gt_region_id[f].data[i]);
                    if (r >= 0) m[r].data[i] = 1.0;
                }
                return m;
            }();
            Composed comp = compose(i_rs, m_l, face, bg);
            for (double v : comp.i_out.data) peak = std::max(peak, v);
            sc.frames.push_back(std::move(comp.i_out));
            sc.gt_face_mask.push_back(std::move(face));
            sc.backgrounds.push_back(std::move(bg));
        }
        if (pass == 0) {
            if (peak <= 1.0) break;
            double scale = 0.995 / peak;
            for (auto& lr : sc.gt_lights)
                for (double& v : lr) v *= scale;
        }
    }

    // landmarks from ground-truth projection (the detector stand-in)
    Rng lrng(derive_seed(seed, 501));
    for (int f = 0; f < k; ++f) {
        std::vector<Vec2> lm = project_landmarks(sc.model, sc.gt_alpha, sc.gt_beta[f],
                                                 sc.gt_pose[f]);
        if (spec.landmark_noise > 0.0)
            for (Vec2& p : lm) {
                p.x += lrng.uniform(-spec.landmark_noise, spec.landmark_noise);
                p.y += lrng.uniform(-spec.landmark_noise, spec.landmark_noise);
            }
        sc.landmarks.push_back(lm);
    }
    return sc;
}

}  // namespace

SceneBundle gen_scene(uint64_t seed, const SceneSpec& spec) {
    return gen_scene_impl(seed, spec, nullptr);
}

Image seg_oracle_frame(const SceneBundle& scene, int frame, double rho, uint64_t seed) {
    if (rho < 0.0 || rho >= 0.5) throw std::invalid_argument("seg oracle noise must be in [0, 0.5)");
    Image h = gaussian_blur(scene.gt_face_mask[frame], 1.5);
    if (rho > 0.0) {
        Rng rng(derive_seed(seed, 7000 + frame));
        for (double& v : h.data)
            if (rng.uniform() < rho) v = 1.0 - v;
    }
    return h;
}

std::vector<Image> seg_oracle(const SceneBundle& scene, double rho, uint64_t seed) {
    std::vector<Image> out;
    for (size_t f = 0; f < scene.frames.size(); ++f)
        out.push_back(seg_oracle_frame(scene, static_cast<int>(f), rho, seed));
    return out;
}

std::pair<SceneBundle, SceneBundle> make_pair(uint64_t seed, const SceneSpec& base) {
    SceneSpec src_spec = base, tgt_spec = base;
    uint64_t model_seed = base.model_seed ? base.model_seed : derive_seed(seed, 42);
    src_spec.model_seed = tgt_spec.model_seed = model_seed;
    src_spec.n_regions = std::max(base.n_regions, 2);
    src_spec.occluder = Occluder::Both;
    tgt_spec.n_regions = 1;
    tgt_spec.occluder = Occluder::None;
    SceneBundle src = gen_scene_impl(derive_seed(seed, 100), src_spec, nullptr);
    Identity id{src.gt_alpha, src.gt_delta, src.gt_texture};
    SceneBundle tgt = gen_scene_impl(derive_seed(seed, 200), tgt_spec, &id);
    return {std::move(src), std::move(tgt)};
}

static json pose_to_json(const PoseCamera& p) {
    return json{{"rotation", {p.rotation.x, p.rotation.y, p.rotation.z}},
                {"translation", {p.translation.x, p.translation.y, p.translation.z}},
                {"focal", p.focal},
                {"width", p.width},
                {"height", p.height}};
}

static PoseCamera pose_from_json(const json& j) {
    PoseCamera p;
    p.rotation = {j["rotation"][0], j["rotation"][1], j["rotation"][2]};
    p.translation = {j["translation"][0], j["translation"][1], j["translation"][2]};
    p.focal = j["focal"];
    p.width = j["width"];
    p.height = j["height"];
    return p;
}

void save_scene(const std::string& dir, const SceneBundle& sc) {
    fs::create_directories(fs::path(dir) / "frames");
    fs::create_directories(fs::path(dir) / "gt");
    char name[64];
    for (size_t f = 0; f < sc.frames.size(); ++f) {
        std::snprintf(name, sizeof name, "frames/frame_%03zu.png", f);
        io::write_png((fs::path(dir) / name).string(), sc.frames[f]);
        std::snprintf(name, sizeof name, "frames/frame_%03zu.flr", f);
        io::write_flr((fs::path(dir) / name).string(), sc.frames[f]);
        std::snprintf(name, sizeof name, "gt/background_%03zu.flr", f);
        io::write_flr((fs::path(dir) / name).string(), sc.backgrounds[f]);
    }
    json lm;
    lm["times"] = sc.times;
    lm["points"] = json::array();
    for (const auto& frame : sc.landmarks) {
        json fr = json::array();
        for (const Vec2& p : frame) fr.push_back({p.x, p.y});
        lm["points"].push_back(fr);
    }
    io::write_text_file((fs::path(dir) / "landmarks.json").string(), lm.dump(1));

    json co;
    co["alpha"] = sc.gt_alpha;
    co["beta"] = sc.gt_beta;
    co["delta"] = sc.gt_delta;
    co["poses"] = json::array();
    for (const auto& p : sc.gt_pose) co["poses"].push_back(pose_to_json(p));
    io::write_text_file((fs::path(dir) / "gt/coeffs.json").string(), co.dump(1));

    json li;
    li["c_sh"] = sc.spec.c_sh;
    li["coeffs"] = sc.gt_lights;
    io::write_text_file((fs::path(dir) / "gt/lights.json").string(), li.dump(1));

    int k = static_cast<int>(sc.frames.size());
    int W = sc.spec.image_size, H = sc.spec.image_size;
    Image ids(W, H, k), mask(W, H, k);
    for (int f = 0; f < k; ++f)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                ids.at(x, y, f) = sc.gt_region_id[f].at(x, y, 0);
                mask.at(x, y, f) = sc.gt_face_mask[f].at(x, y, 0);
            }
    io::write_flr((fs::path(dir) / "gt/region_ids.flr").string(), ids);
    io::write_flr((fs::path(dir) / "gt/face_mask.flr").string(), mask);

    io::write_png((fs::path(dir) / "gt/texture_diffuse.png").string(), sc.gt_texture.diffuse);
    io::write_flr((fs::path(dir) / "gt/texture_diffuse.flr").string(), sc.gt_texture.diffuse);
    io::write_flr((fs::path(dir) / "gt/texture_specular.flr").string(), sc.gt_texture.specular);
    io::write_flr((fs::path(dir) / "gt/texture_roughness.flr").string(), sc.gt_texture.roughness);

    json sp;
    sp["k"] = sc.spec.k;
    sp["n_regions"] = sc.spec.n_regions;
    sp["occluder"] = occluder_name(sc.spec.occluder);
    sp["image_size"] = sc.spec.image_size;
    sp["c_sh"] = sc.spec.c_sh;
    sp["seed"] = sc.seed;
    sp["model_seed"] = sc.spec.model_seed;
    sp["landmark_noise"] = sc.spec.landmark_noise;
    sp["min_region_frac"] = sc.spec.min_region_frac;
    io::write_text_file((fs::path(dir) / "spec.json").string(), sp.dump(1));
}

SceneBundle load_scene(const std::string& dir) {
    SceneBundle sc;
    json sp = json::parse(io::read_text_file((fs::path(dir) / "spec.json").string()));
    sc.spec.k = sp["k"];
    sc.spec.n_regions = sp["n_regions"];
    sc.spec.occluder = occluder_from_name(sp["occluder"]);
    sc.spec.image_size = sp["image_size"];
    sc.spec.c_sh = sp["c_sh"];
    sc.seed = sp["seed"];
    sc.spec.model_seed = sp["model_seed"];
    sc.spec.landmark_noise = sp["landmark_noise"];
    sc.spec.min_region_frac = sp["min_region_frac"];
    sc.model = generate_model(sc.spec.model_seed);

    char name[64];
    for (int f = 0; f < sc.spec.k; ++f) {
        std::snprintf(name, sizeof name, "frames/frame_%03d.flr", f);
        std::string flr = (fs::path(dir) / name).string();
        if (io::file_exists(flr)) {
            sc.frames.push_back(io::read_flr_image(flr));
        } else {
            std::snprintf(name, sizeof name, "frames/frame_%03d.png", f);
            sc.frames.push_back(io::read_png((fs::path(dir) / name).string()));
        }
        std::snprintf(name, sizeof name, "gt/background_%03d.flr", f);
        std::string bg = (fs::path(dir) / name).string();
        if (io::file_exists(bg)) sc.backgrounds.push_back(io::read_flr_image(bg));
    }

    json lm = json::parse(io::read_text_file((fs::path(dir) / "landmarks.json").string()));
    sc.times = lm["times"].get<std::vector<double>>();
    for (const auto& fr : lm["points"]) {
        std::vector<Vec2> pts;
        for (const auto& p : fr) pts.push_back({p[0], p[1]});
        sc.landmarks.push_back(pts);
    }

    json co = json::parse(io::read_text_file((fs::path(dir) / "gt/coeffs.json").string()));
    sc.gt_alpha = co["alpha"].get<std::vector<double>>();
    sc.gt_beta = co["beta"].get<std::vector<std::vector<double>>>();
    sc.gt_delta = co["delta"].get<std::vector<double>>();
    for (const auto& pj : co["poses"]) sc.gt_pose.push_back(pose_from_json(pj));

    json li = json::parse(io::read_text_file((fs::path(dir) / "gt/lights.json").string()));
    sc.gt_lights = li["coeffs"].get<std::vector<std::vector<double>>>();

    Image ids = io::read_flr_image((fs::path(dir) / "gt/region_ids.flr").string());
    Image mask = io::read_flr_image((fs::path(dir) / "gt/face_mask.flr").string());
    int W = sc.spec.image_size, H = sc.spec.image_size;
    for (int f = 0; f < sc.spec.k; ++f) {
        Image idf(W, H, 1), mf(W, H, 1);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                idf.at(x, y, 0) = ids.at(x, y, f);
                mf.at(x, y, 0) = mask.at(x, y, f);
            }
        sc.gt_region_id.push_back(idf);
        sc.gt_face_mask.push_back(mf);
    }

    sc.gt_texture.diffuse = io::read_flr_image((fs::path(dir) / "gt/texture_diffuse.flr").string());
    sc.gt_texture.specular = io::read_flr_image((fs::path(dir) / "gt/texture_specular.flr").string());
    sc.gt_texture.roughness = io::read_flr_image((fs::path(dir) / "gt/texture_roughness.flr").string());
    return sc;
}

}  // namespace lumisplit
