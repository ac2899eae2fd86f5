#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include <lumisplit/core.hpp>
#include <lumisplit/losses.hpp>
#include <lumisplit/texture.hpp>

using namespace lumisplit;

namespace {

Image random_image(Rng& rng, int w, int h, int c, double lo = 0.0, double hi = 1.0) {
    Image img(w, h, c);
    for (double& x : img.data) x = rng.uniform(lo, hi);
    return img;
}

}  // namespace

TEST_CASE("landmark distance on a 3-4-5 triangle is 5") {
    std::vector<Vec2> q_out = {{3.0, 4.0}};
    std::vector<Vec2> q_in = {{0.0, 0.0}};
    CHECK(landmark_loss(q_out, q_in) == doctest::Approx(5.0).epsilon(1e-9));
    // mean over two landmarks, one exact
    q_out.push_back({1.0, 1.0});
    q_in.push_back({1.0, 1.0});
    CHECK(landmark_loss(q_out, q_in) == doctest::Approx(2.5).epsilon(1e-9));
}

TEST_CASE("a uniform single-channel offset costs exactly that offset photometrically") {
    Image a(4, 4, 3, 0.5), b(4, 4, 3, 0.5);
    for (size_t i = 0; i < a.data.size(); i += 3) a.data[i] += 0.1;
    CHECK(photometric_loss(a, b) == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(photometric_loss(b, b) == doctest::Approx(0.0));
}

TEST_CASE("fully wrong segmentation costs 1") {
    Image g(5, 3, 1, 1.0), h(5, 3, 1, 0.0);
    CHECK(seg_loss(g, h) == doctest::Approx(1.0));
    CHECK(seg_loss(h, h) == doctest::Approx(0.0));
}

TEST_CASE("one-hot masks sit at the hand-computed separation value") {
    // five masks, each pixel assigned entirely to one of them
    const int w = 5, h = 1, n = 5;
    std::vector<Image> masks;
    for (int i = 0; i < n; ++i) masks.emplace_back(w, h, 1, 0.0);
    for (int p = 0; p < w; ++p) masks[p].data[p] = 1.0;
    // per pixel: mean 0.2, so (exp(-0.64) + 4 exp(-0.04))/5 - 1
    double expect = (std::exp(-0.64) + 4.0 * std::exp(-0.04)) / 5.0 - 1.0;
    CHECK(expect == doctest::Approx(-0.1259100).epsilon(1e-5));
    CHECK(area_loss(masks) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("a half-on binary mask sits at exp(-1/4)-1 binarization cost") {
    Image m(4, 2, 1, 0.0);
    for (int i = 0; i < 4; ++i) m.data[i] = 1.0;
    std::vector<Image> ms = {m};
    CHECK(bin_loss(ms) == doctest::Approx(std::exp(-0.25) - 1.0).epsilon(1e-9));
    CHECK(bin_loss(ms) == doctest::Approx(-0.2212000).epsilon(1e-4));
}

TEST_CASE("binarization cost falls monotonically as a mask hardens") {
    // morph a uniform 0.5 mask toward half-zeros/half-ones in 11 steps
    double prev = 1e9;
    for (int s = 0; s <= 10; ++s) {
        double d = 0.05 * s;
        Image m(4, 2, 1, 0.5);
        for (int i = 0; i < 4; ++i) m.data[i] = 0.5 + d;
        for (int i = 4; i < 8; ++i) m.data[i] = 0.5 - d;
        std::vector<Image> ms = {m};
        double v = bin_loss(ms);
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("mask regularizer gradients match central differences") {
    Rng rng(17);
    std::vector<Image> masks;
    for (int i = 0; i < 3; ++i) masks.push_back(random_image(rng, 3, 3, 1, 0.05, 0.95));
    for (int which = 0; which < 2; ++which) {
        auto eval = [&](const std::vector<Image>& ms) {
            return which == 0 ? area_loss(ms) : bin_loss(ms);
        };
        std::vector<Image> grads;
        double base = which == 0 ? area_loss(masks, &grads) : bin_loss(masks, &grads);
        (void)base;
        const double eps = 1e-6;
        for (size_t mi = 0; mi < masks.size(); ++mi)
            for (size_t px = 0; px < masks[mi].data.size(); ++px) {
                auto mp = masks, mm = masks;
                mp[mi].data[px] += eps;
                mm[mi].data[px] -= eps;
                double fd = (eval(mp) - eval(mm)) / (2.0 * eps);
                CHECK(grads[mi].data[px] == doctest::Approx(fd).epsilon(1e-5).scale(1e-7));
            }
    }
}

TEST_CASE("photometric gradient matches central differences away from the kink") {
    Rng rng(19);
    Image a = random_image(rng, 3, 3, 3, 0.1, 0.9);
    Image b = random_image(rng, 3, 3, 3, 0.1, 0.9);
    Image grad;
    photometric_loss(a, b, &grad);
    const double eps = 1e-6;
    for (size_t i = 0; i < a.data.size(); ++i) {
        Image ap = a, am = a;
        ap.data[i] += eps;
        am.data[i] -= eps;
        double fd = (photometric_loss(ap, b) - photometric_loss(am, b)) / (2.0 * eps);
        CHECK(grad.data[i] == doctest::Approx(fd).epsilon(1e-5).scale(1e-7));
    }
}

TEST_CASE("palette clustering is seeded, deterministic and no worse than random restarts") {
    Rng rng(23);
    Image tex = random_image(rng, 16, 16, 3);
    Palette p1 = kmeans_palette(tex, 16, 7);
    Palette p2 = kmeans_palette(tex, 16, 7);
    REQUIRE(p1.colors.size() == p2.colors.size());
    for (size_t i = 0; i < p1.colors.size(); ++i) {
        CHECK(p1.colors[i].x == p2.colors[i].x);
        CHECK(p1.colors[i].y == p2.colors[i].y);
        CHECK(p1.colors[i].z == p2.colors[i].z);
    }
    CHECK(p1.source_hash == p2.source_hash);

    auto sse = [&](const Palette& p) {
        double total = 0.0;
        for (size_t px = 0; px < tex.data.size(); px += 3) {
            double best = 1e18;
            for (const Vec3& c : p.colors) {
                double dx = tex.data[px] - c.x, dy = tex.data[px + 1] - c.y,
                       dz = tex.data[px + 2] - c.z;
                best = std::min(best, dx * dx + dy * dy + dz * dz);
            }
            total += best;
        }
        return total;
    };
    double fitted = sse(p1);
    // 100 random palettes drawn from the image must not beat the fit badly;
    // the fitted palette has to be at least as good as the worst of them
    Rng rr(99);
    double worst_random = 0.0;
    for (int t = 0; t < 100; ++t) {
        Palette rp;
        for (int k = 0; k < 16; ++k) {
            size_t px = 3 * static_cast<size_t>(rr.uniform_int(0, 255));
            rp.colors.push_back(Vec3{tex.data[px], tex.data[px + 1], tex.data[px + 2]});
        }
        worst_random = std::max(worst_random, sse(rp));
    }
    CHECK(fitted <= worst_random);
}

TEST_CASE("palette shrinks with a warning when the image has too few colors") {
    Image tex(4, 4, 3, 0.0);
    for (size_t i = 0; i < tex.data.size(); i += 3) tex.data[i] = (i / 3 % 2) ? 1.0 : 0.0;
    Palette p = kmeans_palette(tex, 16, 1);
    CHECK(p.colors.size() < 16);
    CHECK(!p.warning.empty());
}

TEST_CASE("distance to a one-color palette is the euclidean offset") {
    Palette p;
    p.colors.push_back(Vec3{0.5, 0.5, 0.5});
    Image tex(1, 1, 3, 0.6);
    CHECK(global_prior_loss(tex, p) == doctest::Approx(std::sqrt(3.0) * 0.1).epsilon(1e-7));
    CHECK(global_prior_loss(tex, p) == doctest::Approx(0.1732100).epsilon(1e-4));
    // gradient check
    Image grad;
    global_prior_loss(tex, p, &grad);
    const double eps = 1e-6;
    for (int i = 0; i < 3; ++i) {
        Image tp = tex, tm = tex;
        tp.data[i] += eps;
        tm.data[i] -= eps;
        double fd = (global_prior_loss(tp, p) - global_prior_loss(tm, p)) / (2.0 * eps);
        CHECK(grad.data[i] == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("5x5 neighbor stack has 24 shifted differences that vanish on constants") {
    Image flat(6, 6, 1, 0.42);
    std::vector<Image> nv = neighbor_variation(flat);
    REQUIRE(nv.size() == 24);
    for (const Image& d : nv)
        for (double v : d.data) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("local texture prior ignores global brightness shifts") {
    Rng rng(29);
    TextureSet t0(8, 8);
    t0.diffuse = random_image(rng, 8, 8, 3);
    t0.specular = random_image(rng, 8, 8, 1);
    t0.roughness = random_image(rng, 8, 8, 1);
    TextureSet t = t0;
    for (double& x : t.diffuse.data) x += 0.13;
    for (double& x : t.specular.data) x -= 0.07;
    for (double& x : t.roughness.data) x += 0.02;
    CHECK(local_prior_loss(t, t0) == doctest::Approx(0.0).scale(1).epsilon(1e-12));
    // but a local bump does cost
    t.diffuse.data[0] += 0.3;
    CHECK(local_prior_loss(t, t0) > 1e-4);
}

TEST_CASE("local prior gradient matches central differences") {
    Rng rng(31);
    TextureSet t0(4, 4);
    t0.diffuse = random_image(rng, 4, 4, 3);
    t0.specular = random_image(rng, 4, 4, 1);
    t0.roughness = random_image(rng, 4, 4, 1);
    TextureSet t(4, 4);
    t.diffuse = random_image(rng, 4, 4, 3);
    t.specular = random_image(rng, 4, 4, 1);
    t.roughness = random_image(rng, 4, 4, 1);
    TextureSet grad(4, 4);
    local_prior_loss(t, t0, &grad);
    const double eps = 1e-6;
    for (size_t i = 0; i < t.diffuse.data.size(); i += 5) {
        TextureSet tp = t, tm = t;
        tp.diffuse.data[i] += eps;
        tm.diffuse.data[i] -= eps;
        double fd = (local_prior_loss(tp, t0) - local_prior_loss(tm, t0)) / (2.0 * eps);
        CHECK(grad.diffuse.data[i] == doctest::Approx(fd).epsilon(1e-5).scale(1e-7));
    }
}

namespace {
// fixed scorer for the hand example: ignores the face, returns set scores
class FixedScorer : public PlausibilityScorer {
public:
    explicit FixedScorer(std::vector<double> s) : s_(std::move(s)) {}
    std::vector<double> scores(const Image&) const override { return s_; }
    Image score_gradient(const Image& face, int) const override {
        return Image(face.w, face.h, face.c, 0.0);
    }

private:
    std::vector<double> s_;
};
}  // namespace

TEST_CASE("plausibility gap uses the best identity score") {
    FixedScorer scorer({0.2, 0.7});
    std::vector<Image> faces = {Image(4, 4, 3, 0.5)};
    CHECK(human_prior_loss(faces, scorer) == doctest::Approx(0.3).epsilon(1e-9));
    // two faces sum their gaps
    faces.push_back(Image(4, 4, 3, 0.1));
    CHECK(human_prior_loss(faces, scorer) == doctest::Approx(0.6).epsilon(1e-9));
}

TEST_CASE("reference bank scorer is differentiable and prefers its own entries") {
    Rng rng(37);
    std::vector<Image> bank;
    for (int i = 0; i < 3; ++i)
        bank.push_back(random_image(rng, ReferenceBankScorer::kCropSize,
                                    ReferenceBankScorer::kCropSize, 3));
    ReferenceBankScorer scorer(bank);
    std::vector<double> s = scorer.scores(bank[1]);
    REQUIRE(s.size() == 3);
    CHECK(s[1] > s[0]);
    CHECK(s[1] > s[2]);
    double sum = s[0] + s[1] + s[2];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));

    // FD check of the score gradient on a random face
    Image face = random_image(rng, 48, 48, 3);
    Image g = scorer.score_gradient(face, 0);
    const double eps = 1e-6;
    Rng pick(5);
    for (int t = 0; t < 10; ++t) {
        size_t i = static_cast<size_t>(pick.uniform_int(0, static_cast<int>(face.data.size()) - 1));
        Image fp = face, fm = face;
        fp.data[i] += eps;
        fm.data[i] -= eps;
        double fd = (scorer.scores(fp)[0] - scorer.scores(fm)[0]) / (2.0 * eps);
        CHECK(g.data[i] == doctest::Approx(fd).epsilon(1e-4).scale(1e-8));
    }
}

TEST_CASE("box downsample averages whole blocks") {
    Image img(4, 4, 1, 0.0);
    for (int i = 0; i < 16; ++i) img.data[i] = static_cast<double>(i);
    Image out = box_downsample(img, 2, 2);
    REQUIRE(out.w == 2);
    REQUIRE(out.h == 2);
    CHECK(out.data[0] == doctest::Approx((0 + 1 + 4 + 5) / 4.0));
    CHECK(out.data[3] == doctest::Approx((10 + 11 + 14 + 15) / 4.0));
}
