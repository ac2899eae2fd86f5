#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <vector>

#include <lumisplit/core.hpp>
#include <lumisplit/proxymm.hpp>
#include <lumisplit/synth.hpp>

using namespace lumisplit;

TEST_CASE("occluder names round trip") {
    for (Occluder o : {Occluder::None, Occluder::Shadow, Occluder::Sprite, Occluder::Both})
        CHECK(occluder_from_name(occluder_name(o)) == o);
    CHECK_THROWS(occluder_from_name("volumetric_fog"));
}

TEST_CASE("regenerating a scene from the same seed is bit-identical") {
    SceneSpec spec;
    spec.k = 2;
    spec.image_size = 48;
    spec.n_regions = 2;
    spec.occluder = Occluder::Shadow;
    spec.min_region_frac = 0.05;
    SceneBundle a = gen_scene(31, spec);
    SceneBundle b = gen_scene(31, spec);
    REQUIRE(a.frames.size() == b.frames.size());
    for (size_t f = 0; f < a.frames.size(); ++f)
        CHECK(hash_doubles(a.frames[f].data) == hash_doubles(b.frames[f].data));
    CHECK(hash_doubles(a.gt_alpha) == hash_doubles(b.gt_alpha));
    CHECK(hash_doubles(a.gt_texture.diffuse.data) == hash_doubles(b.gt_texture.diffuse.data));
    SceneBundle c = gen_scene(32, spec);
    CHECK(hash_doubles(a.frames[0].data) != hash_doubles(c.frames[0].data));
}

TEST_CASE("scene shapes and value ranges are consistent") {
    SceneSpec spec;
    spec.k = 3;
    spec.image_size = 48;
    spec.n_regions = 2;
    spec.occluder = Occluder::Shadow;
    spec.min_region_frac = 0.05;
    SceneBundle s = gen_scene(7, spec);
    REQUIRE(s.frames.size() == 3);
    REQUIRE(s.landmarks.size() == 3);
    REQUIRE(s.times.size() == 3);
    REQUIRE(s.gt_beta.size() == 3);
    REQUIRE(s.gt_pose.size() == 3);
    REQUIRE(s.gt_region_id.size() == 3);
    REQUIRE(s.gt_face_mask.size() == 3);
    CHECK(s.n_regions() == 2);
    for (const Image& f : s.frames) {
        CHECK(f.w == 48);
        CHECK(f.c == 3);
        for (double v : f.data) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
    for (size_t i = 0; i < s.times.size(); ++i)
        CHECK(s.times[i] == doctest::Approx(static_cast<double>(i) / 3.0));
}

TEST_CASE("every lighting region holds its minimum share of the frame") {
    SceneSpec spec;
    spec.k = 1;
    spec.image_size = 64;
    spec.n_regions = 2;
    spec.occluder = Occluder::Shadow;
    spec.min_region_frac = 0.08;
    SceneBundle s = gen_scene(19, spec);
    std::vector<Image> rm = s.region_masks(0);
    REQUIRE(rm.size() == 2);
    for (const Image& m : rm) {
        double area = 0.0;
        for (double v : m.data) area += v;
        CHECK(area / m.pixels() >= 0.08);
    }
    // regions partition coverage
    const Image& rid = s.gt_region_id[0];
    for (size_t px = 0; px < rid.data.size(); ++px) {
        double covered = rm[0].data[px] + rm[1].data[px];
        if (rid.data[px] < -0.5)
            CHECK(covered == 0.0);
        else
            CHECK(covered == 1.0);
    }
}

TEST_CASE("an impossible region budget raises after resampling") {
    SceneSpec spec;
    spec.k = 1;
    spec.image_size = 32;
    spec.n_regions = 3;
    spec.occluder = Occluder::Shadow;
    spec.min_region_frac = 0.4;  // 3 x 0.4 cannot fit in one frame
    CHECK_THROWS(gen_scene(3, spec));
}

TEST_CASE("a sprite occluder removes face pixels but a shadow does not") {
    SceneSpec base;
    base.k = 1;
    base.image_size = 48;
    base.n_regions = 1;

    base.occluder = Occluder::Sprite;
    SceneBundle sprite = gen_scene(13, base);
    base.occluder = Occluder::Shadow;
    base.n_regions = 2;
    base.min_region_frac = 0.05;
    SceneBundle shadow = gen_scene(13, base);

    // sprite: face mask strictly smaller than the covered area somewhere
    double sprite_hole = 0.0;
    const Image& rid = sprite.gt_region_id[0];
    for (size_t px = 0; px < rid.data.size(); ++px)
        if (rid.data[px] > -0.5 && sprite.gt_face_mask[0].data[px] < 0.5) sprite_hole += 1.0;
    CHECK(sprite_hole > 0.0);

    // shadow: the face mask keeps the whole rendered head
    const Image& rid2 = shadow.gt_region_id[0];
    for (size_t px = 0; px < rid2.data.size(); ++px)
        if (rid2.data[px] > -0.5) CHECK(shadow.gt_face_mask[0].data[px] == 1.0);
}

TEST_CASE("segmentation oracle flips pixels at the requested rate") {
    SceneSpec spec;
    spec.k = 1;
    spec.image_size = 316;  // ~1e5 pixels for a tight rate estimate
    SceneBundle s = gen_scene(11, spec);
    Image clean = seg_oracle_frame(s, 0, 0.0, 5);
    Image noisy = seg_oracle_frame(s, 0, 0.25, 5);
    size_t flipped = 0;
    for (size_t px = 0; px < clean.data.size(); ++px) {
        bool a = clean.data[px] > 0.5, b = noisy.data[px] > 0.5;
        if (a != b) ++flipped;
    }
    double rate = static_cast<double>(flipped) / clean.data.size();
    CHECK(std::abs(rate - 0.25) < 0.01);
    CHECK_THROWS(seg_oracle_frame(s, 0, 0.7, 5));
}

TEST_CASE("source/target pairs share identity bit-exactly") {
    SceneSpec base;
    base.k = 2;
    base.image_size = 48;
    base.min_region_frac = 0.05;
    auto [src, tgt] = make_pair(91, base);
    CHECK(model_hash(src.model) == model_hash(tgt.model));
    CHECK(hash_doubles(src.gt_alpha) == hash_doubles(tgt.gt_alpha));
    CHECK(hash_doubles(src.gt_delta) == hash_doubles(tgt.gt_delta));
    CHECK(hash_doubles(src.gt_texture.diffuse.data) == hash_doubles(tgt.gt_texture.diffuse.data));
    // the source carries occlusions and extra regions, the target is clean
    CHECK(src.n_regions() >= 2);
    CHECK(tgt.n_regions() == 1);
    // but their frames still differ (pose/lights resampled)
    CHECK(hash_doubles(src.frames[0].data) != hash_doubles(tgt.frames[0].data));
}

TEST_CASE("scenes survive a save/load round trip") {
    SceneSpec spec;
    spec.k = 2;
    spec.image_size = 32;
    spec.n_regions = 2;
    spec.occluder = Occluder::Shadow;
    spec.min_region_frac = 0.05;
    SceneBundle s = gen_scene(27, spec);
    std::string dir = "/tmp/lumisplit_scene_test";
    save_scene(dir, s);
    SceneBundle back = load_scene(dir);
    CHECK(back.seed == s.seed);
    CHECK(model_hash(back.model) == model_hash(s.model));
    REQUIRE(back.frames.size() == s.frames.size());
    for (size_t f = 0; f < s.frames.size(); ++f) {
        // frames are stored in the lossless float container
        REQUIRE(back.frames[f].data.size() == s.frames[f].data.size());
        for (size_t i = 0; i < s.frames[f].data.size(); ++i)
            CHECK(back.frames[f].data[i] ==
                  doctest::Approx(s.frames[f].data[i]).epsilon(1e-6));
    }
    CHECK(hash_doubles(back.gt_lights[0]) == hash_doubles(s.gt_lights[0]));
}
