#include "lumisplit/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lumisplit {

namespace {

struct ScreenVert {
    double x, y, z;  // pixel coords + camera z
};

inline double edge(double ax, double ay, double bx, double by, double px, double py) {
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

// Top-left fill rule for an edge a->b of a CCW triangle.
inline bool top_left(double ax, double ay, double bx, double by) {
    return (ay == by && bx < ax) || (by < ay);
}

bool ray_triangle(const Vec3& orig, const Vec3& dir, const Vec3& a, const Vec3& b,
                  const Vec3& c, double* t_out) {
    // Moller-Trumbore
    Vec3 e1 = b - a, e2 = c - a;
    Vec3 p = dir.cross(e2);
    double det = e1.dot(p);
    if (std::abs(det) < 1e-14) return false;
    double inv = 1.0 / det;
    Vec3 tv = orig - a;
    double u = tv.dot(p) * inv;
    if (u < 0.0 || u > 1.0) return false;
    Vec3 q = tv.cross(e1);
    double v = dir.dot(q) * inv;
    if (v < 0.0 || u + v > 1.0) return false;
    double t = e2.dot(q) * inv;
    if (t <= 1e-9) return false;
    *t_out = t;
    return true;
}

}  // namespace

GBuffer rasterize(const std::vector<Vec3>& vertices, const std::vector<Vec3>& normals,
                  const std::vector<Triangle>& triangles, const std::vector<Vec2>& uvs,
                  const PoseCamera& pose) {
    if (pose.width <= 0 || pose.height <= 0)
        throw std::invalid_argument("rasterize: image size must be positive");
    GBuffer gb;
    gb.w = pose.width;
    gb.h = pose.height;
    size_t np = gb.pixels();
    gb.covered.assign(np, 0);
    gb.triangle_id.assign(np, -1);
    gb.bary.assign(np * 3, 0.0);
    gb.uv.assign(np, Vec2());
    gb.normal.assign(np, Vec3());
    gb.view_dir.assign(np, Vec3());
    gb.depth.assign(np, std::numeric_limits<double>::infinity());

    std::vector<Vec3> cam(vertices.size());
    std::vector<Vec3> cam_n(normals.size());
    for (size_t i = 0; i < vertices.size(); ++i)
        cam[i] = rotate_axis_angle(pose.rotation, vertices[i]) + pose.translation;
    for (size_t i = 0; i < normals.size(); ++i)
        cam_n[i] = rotate_axis_angle(pose.rotation, normals[i]);

    std::vector<ScreenVert> sv(vertices.size());
    std::vector<uint8_t> front(vertices.size());
    double cx = pose.width * 0.5, cy = pose.height * 0.5;
    for (size_t i = 0; i < cam.size(); ++i) {
        front[i] = cam[i].z > 1e-6;
        if (front[i])
            sv[i] = {pose.focal * cam[i].x / cam[i].z + cx,
                     pose.focal * cam[i].y / cam[i].z + cy, cam[i].z};
    }

    for (size_t ti = 0; ti < triangles.size(); ++ti) {
        const Triangle& tr = triangles[ti];
        if (!front[tr.a] || !front[tr.b] || !front[tr.c]) continue;

        // Cull triangles whose geometric normal faces away from the camera.
        Vec3 fn = (cam[tr.b] - cam[tr.a]).cross(cam[tr.c] - cam[tr.a]);
        if (fn.dot(cam[tr.a]) >= 0.0) continue;

        int idx[3] = {tr.a, tr.b, tr.c};
        int slot[3] = {0, 1, 2};  // maps local vertex -> position in tr
        ScreenVert a = sv[idx[0]], b = sv[idx[1]], c = sv[idx[2]];
        double area2 = edge(a.x, a.y, b.x, b.y, c.x, c.y);
        if (std::abs(area2) < 1e-12) continue;
        if (area2 < 0.0) {  // orient CCW in screen space
            std::swap(b, c);
            std::swap(idx[1], idx[2]);
            std::swap(slot[1], slot[2]);
            area2 = -area2;
        }

        int x0 = std::max(0, static_cast<int>(std::floor(std::min({a.x, b.x, c.x}))));
        int x1 = std::min(gb.w - 1, static_cast<int>(std::ceil(std::max({a.x, b.x, c.x}))));
        int y0 = std::max(0, static_cast<int>(std::floor(std::min({a.y, b.y, c.y}))));
        int y1 = std::min(gb.h - 1, static_cast<int>(std::ceil(std::max({a.y, b.y, c.y}))));

        bool tl0 = top_left(b.x, b.y, c.x, c.y);
        bool tl1 = top_left(c.x, c.y, a.x, a.y);
        bool tl2 = top_left(a.x, a.y, b.x, b.y);

        for (int py = y0; py <= y1; ++py)
            for (int px = x0; px <= x1; ++px) {
                double sx = px + 0.5, sy = py + 0.5;
                double e0 = edge(b.x, b.y, c.x, c.y, sx, sy);  // weight of a
                double e1 = edge(c.x, c.y, a.x, a.y, sx, sy);  // weight of b
                double e2 = edge(a.x, a.y, b.x, b.y, sx, sy);  // weight of c
                bool in = (e0 > 0.0 || (e0 == 0.0 && tl0)) &&
                          (e1 > 0.0 || (e1 == 0.0 && tl1)) &&
                          (e2 > 0.0 || (e2 == 0.0 && tl2));
                if (!in) continue;
                double l0 = e0 / area2, l1 = e1 / area2, l2 = e2 / area2;
                double inv_z = l0 / a.z + l1 / b.z + l2 / c.z;
                double z = 1.0 / inv_z;
                size_t pi = static_cast<size_t>(py) * gb.w + px;
                if (z >= gb.depth[pi]) continue;
                double w[3] = {(l0 / a.z) * z, (l1 / b.z) * z, (l2 / c.z) * z};

                gb.depth[pi] = z;
                gb.covered[pi] = 1;
                gb.triangle_id[pi] = static_cast<int>(ti);
                for (int k = 0; k < 3; ++k) gb.bary[pi * 3 + slot[k]] = w[k];

                Vec2 uv = uvs[idx[0]] * w[0] + uvs[idx[1]] * w[1] + uvs[idx[2]] * w[2];
                gb.uv[pi] = uv;
                Vec3 n = cam_n[idx[0]] * w[0] + cam_n[idx[1]] * w[1] + cam_n[idx[2]] * w[2];
                gb.normal[pi] = n.normalized();
                Vec3 pos = cam[idx[0]] * w[0] + cam[idx[1]] * w[1] + cam[idx[2]] * w[2];
                gb.view_dir[pi] = (pos * -1.0).normalized();
            }
    }

    for (size_t pi = 0; pi < np; ++pi)
        if (gb.covered[pi]) gb.covered_indices.push_back(static_cast<int>(pi));
    return gb;
}

Image shadow_visibility(const std::vector<Vec3>& occ_vertices,
                        const std::vector<Triangle>& occ_triangles,
                        const GBuffer& gb,
                        const std::vector<Vec3>& mesh_vertices,
                        const std::vector<Vec3>& mesh_normals,
                        const std::vector<Triangle>& mesh_triangles,
                        const Vec3& light_dir) {
    Image vis(gb.w, gb.h, 1, 0.0);
    Vec3 dir = light_dir.normalized();
    const double offset = 1e-4;
    for (int pi : gb.covered_indices) {
        const Triangle& t = mesh_triangles[gb.triangle_id[pi]];
        double w0 = gb.bary[static_cast<size_t>(pi) * 3 + 0];
        double w1 = gb.bary[static_cast<size_t>(pi) * 3 + 1];
        double w2 = gb.bary[static_cast<size_t>(pi) * 3 + 2];
        Vec3 p = mesh_vertices[t.a] * w0 + mesh_vertices[t.b] * w1 + mesh_vertices[t.c] * w2;
        Vec3 n = (mesh_normals[t.a] * w0 + mesh_normals[t.b] * w1 +
                  mesh_normals[t.c] * w2).normalized();
        Vec3 orig = p + n * offset;
        bool blocked = false;
        double th;
        for (const auto& ot : occ_triangles) {
            if (ray_triangle(orig, dir, occ_vertices[ot.a], occ_vertices[ot.b],
                             occ_vertices[ot.c], &th)) {
                blocked = true;
                break;
            }
        }
        vis.data[pi] = blocked ? 0.0 : 1.0;
    }
    return vis;
}

}  // namespace lumisplit
