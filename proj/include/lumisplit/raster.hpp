#pragma once

// Z-buffered triangle rasterizer with perspective-correct attributes.
// Coverage is the render mask M_R. Rasterization is treated as fixed
// (piecewise constant) during color backpropagation.

#include <cstdint>
#include <vector>

#include "lumisplit/core.hpp"
#include "lumisplit/proxymm.hpp"

namespace lumisplit {

struct GBuffer {
    int w = 0, h = 0;
    std::vector<uint8_t> covered;       // M_R
    std::vector<int> triangle_id;       // -1 where uncovered
    std::vector<double> bary;           // 3 per pixel, perspective-correct
    std::vector<Vec2> uv;
    std::vector<Vec3> normal;           // camera space, unit
    std::vector<Vec3> view_dir;         // surface -> camera, unit
    std::vector<double> depth;          // camera-space z
    std::vector<int> covered_indices;   // pixel indices with covered=1

    size_t pixels() const { return static_cast<size_t>(w) * h; }
    Image coverage_image() const {
        Image m(w, h, 1);
        for (size_t i = 0; i < covered.size(); ++i) m.data[i] = covered[i] ? 1.0 : 0.0;
        return m;
    }
};

GBuffer rasterize(const std::vector<Vec3>& vertices, const std::vector<Vec3>& normals,
                  const std::vector<Triangle>& triangles, const std::vector<Vec2>& uvs,
                  const PoseCamera& pose);

// 1 where the ray from the surface point toward light_dir (world space) is
// unobstructed. Rays are cast brute-force against (occ_vertices,
// occ_triangles), which may include extra occluder geometry beyond the
// rasterized mesh. Generator-side only.
Image shadow_visibility(const std::vector<Vec3>& occ_vertices,
                        const std::vector<Triangle>& occ_triangles,
                        const GBuffer& gb,
                        const std::vector<Vec3>& mesh_vertices,
                        const std::vector<Vec3>& mesh_normals,
                        const std::vector<Triangle>& mesh_triangles,
                        const Vec3& light_dir);

}  // namespace lumisplit
