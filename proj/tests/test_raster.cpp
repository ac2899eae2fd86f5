#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include <lumisplit/core.hpp>
#include <lumisplit/proxymm.hpp>
#include <lumisplit/raster.hpp>

using namespace lumisplit;

namespace {

PoseCamera front_pose(int size, double focal) {
    PoseCamera pose;
    pose.rotation = Vec3{0.0, 0.0, 0.0};
    pose.translation = Vec3{0.0, 0.0, 4.0};
    pose.focal = focal;
    pose.width = size;
    pose.height = size;
    return pose;
}

}  // namespace

TEST_CASE("a single large triangle covers the expected half plane") {
    // right triangle spanning the whole frustum near the image center
    std::vector<Vec3> verts = {{-2.0, -2.0, 0.0}, {2.0, -2.0, 0.0}, {-2.0, 2.0, 0.0}};
    std::vector<Vec3> normals = {{0.0, 0.0, -1.0}, {0.0, 0.0, -1.0}, {0.0, 0.0, -1.0}};
    std::vector<Triangle> tris = {{0, 2, 1}};
    std::vector<Vec2> uvs = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
    PoseCamera pose = front_pose(64, 40.0);

    GBuffer gb = rasterize(verts, normals, tris, uvs, pose);
    REQUIRE(gb.w == 64);
    REQUIRE(gb.h == 64);
    size_t covered = 0;
    for (uint8_t c : gb.covered) covered += c;
    CHECK(covered > 100);
    // the hypotenuse runs through the center: pixels well inside the legs are
    // covered, pixels well past the hypotenuse are not
    auto at = [&](int x, int y) { return gb.covered[y * 64 + x]; };
    CHECK(at(20, 20) == 1);
    CHECK(at(50, 50) == 0);
    CHECK(gb.covered_indices.size() == covered);
    for (int idx : gb.covered_indices) CHECK(gb.covered[idx] == 1);
}

TEST_CASE("covered pixels carry sane interpolated attributes") {
    std::vector<Vec3> verts = {{-2.0, -2.0, 0.0}, {2.0, -2.0, 0.0}, {-2.0, 2.0, 0.0}};
    std::vector<Vec3> normals = {{0.0, 0.0, -1.0}, {0.0, 0.0, -1.0}, {0.0, 0.0, -1.0}};
    std::vector<Triangle> tris = {{0, 2, 1}};
    std::vector<Vec2> uvs = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
    GBuffer gb = rasterize(verts, normals, tris, uvs, front_pose(64, 40.0));

    for (int idx : gb.covered_indices) {
        CHECK(gb.triangle_id[idx] == 0);
        double bsum = gb.bary[3 * idx] + gb.bary[3 * idx + 1] + gb.bary[3 * idx + 2];
        CHECK(bsum == doctest::Approx(1.0).epsilon(1e-9));
        for (int k = 0; k < 3; ++k) CHECK(gb.bary[3 * idx + k] >= -1e-9);
        CHECK(gb.uv[idx].x >= -1e-9);
        CHECK(gb.uv[idx].x <= 1.0 + 1e-9);
        CHECK(gb.depth[idx] == doctest::Approx(4.0).epsilon(1e-9));
        Vec3 n = gb.normal[idx];
        CHECK(std::sqrt(n.x * n.x + n.y * n.y + n.z * n.z) == doctest::Approx(1.0).epsilon(1e-9));
        Vec3 v = gb.view_dir[idx];
        CHECK(std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z) == doctest::Approx(1.0).epsilon(1e-9));
        // camera is in front of the plane, so the view ray points back at it
        CHECK(v.z < 0.0);
    }
    // uncovered pixels mark their triangle id as invalid
    for (size_t i = 0; i < gb.pixels(); ++i)
        if (!gb.covered[i]) CHECK(gb.triangle_id[i] == -1);
}

TEST_CASE("nearer geometry wins the depth test") {
    // two stacked triangles; the z=-1 one sits closer to the camera at z=-4
    std::vector<Vec3> verts = {{-2.0, -2.0, 0.0}, {2.0, -2.0, 0.0}, {0.0, 2.0, 0.0},
                               {-2.0, -2.0, -1.0}, {2.0, -2.0, -1.0}, {0.0, 2.0, -1.0}};
    std::vector<Vec3> normals(6, Vec3{0.0, 0.0, -1.0});
    std::vector<Triangle> tris = {{0, 2, 1}, {3, 5, 4}};
    std::vector<Vec2> uvs(6, Vec2{0.5, 0.5});
    GBuffer gb = rasterize(verts, normals, tris, uvs, front_pose(48, 30.0));
    size_t covered = 0;
    for (int idx : gb.covered_indices) {
        ++covered;
        CHECK(gb.triangle_id[idx] == 1);
        CHECK(gb.depth[idx] == doctest::Approx(3.0).epsilon(1e-6));
    }
    CHECK(covered > 50);
}

TEST_CASE("perspective-correct interpolation beats screen-space lerp on a slanted face") {
    // triangle tilted in depth: uv midpoint in screen space is biased toward
    // the near vertex under correct interpolation
    std::vector<Vec3> verts = {{-1.5, -1.5, -1.5}, {1.5, -1.5, 1.5}, {0.0, 1.5, 0.0}};
    std::vector<Vec3> normals(3, Vec3{0.0, 0.0, -1.0});
    std::vector<Triangle> tris = {{0, 2, 1}};
    std::vector<Vec2> uvs = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
    GBuffer gb = rasterize(verts, normals, tris, uvs, front_pose(64, 40.0));

    // reconstruct each covered pixel's camera-space point from its uv and
    // check it reprojects onto that pixel
    PoseCamera pose = front_pose(64, 40.0);
    int checked = 0;
    for (int idx : gb.covered_indices) {
        double b0 = gb.bary[3 * idx], b1 = gb.bary[3 * idx + 1], b2 = gb.bary[3 * idx + 2];
        const Vec3& va = verts[tris[0].a];
        const Vec3& vb = verts[tris[0].b];
        const Vec3& vc = verts[tris[0].c];
        Vec3 p = b0 * va + b1 * vb + b2 * vc;
        Vec2 px = project_point(pose, p);
        int x = idx % 64, y = idx / 64;
        CHECK(px.x == doctest::Approx(x + 0.5).epsilon(0.02));
        CHECK(px.y == doctest::Approx(y + 0.5).epsilon(0.02));
        ++checked;
    }
    CHECK(checked > 100);
}

TEST_CASE("head render covers a plausible blob and hides back faces") {
    ProxyMM m = generate_model(21);
    std::vector<double> zero_a(m.k_alpha(), 0.0), zero_b(m.k_beta(), 0.0);
    GeometryEval g = evaluate_geometry(m, zero_a, zero_b);
    PoseCamera pose = front_pose(96, 110.0);
    GBuffer gb = rasterize(g.vertices, g.normals, m.triangles, m.uv_coords, pose);
    size_t covered = gb.covered_indices.size();
    double frac = static_cast<double>(covered) / gb.pixels();
    CHECK(frac > 0.1);
    CHECK(frac < 0.9);
    // every visible normal faces the camera
    for (int idx : gb.covered_indices) CHECK(gb.normal[idx].z < 0.0);
}

TEST_CASE("shadow rays notice an occluding triangle") {
    // ground triangle plus a small blocker between it and an overhead light
    std::vector<Vec3> verts = {{-2.0, -2.0, 0.0}, {2.0, -2.0, 0.0}, {0.0, 2.0, 0.0}};
    std::vector<Vec3> normals(3, Vec3{0.0, 0.0, -1.0});
    std::vector<Triangle> tris = {{0, 2, 1}};
    std::vector<Vec2> uvs = {{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}};
    GBuffer gb = rasterize(verts, normals, tris, uvs, front_pose(48, 30.0));

    Vec3 light_dir{0.0, 0.0, -1.0};  // toward the camera side

    // no blocker: everything lit
    Image vis_clear = shadow_visibility(verts, tris, gb, verts, normals, tris, light_dir);
    double lit = 0.0;
    for (int idx : gb.covered_indices) lit += vis_clear.data[idx];
    CHECK(lit == doctest::Approx(static_cast<double>(gb.covered_indices.size())));

    // add a blocker hovering at z=-1 over part of the face
    std::vector<Vec3> occ_verts = verts;
    occ_verts.push_back({-1.5, -1.5, -1.0});
    occ_verts.push_back({0.0, -1.5, -1.0});
    occ_verts.push_back({-0.75, 0.5, -1.0});
    std::vector<Triangle> occ_tris = tris;
    occ_tris.push_back({3, 5, 4});
    Image vis = shadow_visibility(occ_verts, occ_tris, gb, verts, normals, tris, light_dir);
    double shadowed = 0.0, total = 0.0;
    for (int idx : gb.covered_indices) {
        total += 1.0;
        if (vis.data[idx] < 0.5) shadowed += 1.0;
    }
    CHECK(shadowed > 0.05 * total);
    CHECK(shadowed < 0.95 * total);
}
