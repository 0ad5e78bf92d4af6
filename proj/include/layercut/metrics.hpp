#pragma once

#include "layercut/image.hpp"
#include "layercut/mesh.hpp"
#include "layercut/mesh_query.hpp"
#include "layercut/threads.hpp"

#include <iostream>
#include <vector>

namespace layercut {

/// Symmetric Chamfer distance: mean nearest-surface distance over
/// area-weighted samples of each mesh against the other's surface,
/// averaged both ways. `units_to_cm` converts scene units to centimeters.
inline double chamfer(const TriMesh& a, const TriMesh& b, int samples = 100000,
                      std::uint64_t seed = 0, double units_to_cm = 1.0) {
    require(!a.empty() && !b.empty(), "chamfer: empty mesh");
    const TriangleBvh bvh_a(a), bvh_b(b);
    Rng rng(seed);
    Rng rng_b = rng.fork(1);
    const auto pts_a = sample_surface(a, samples, rng);
    const auto pts_b = sample_surface(b, samples, rng_b);

    std::vector<double> da(pts_a.size()), db(pts_b.size());
    parallel_for(static_cast<std::int64_t>(pts_a.size()),
                 [&](std::int64_t i) { da[i] = bvh_b.distance(pts_a[i]); });
    parallel_for(static_cast<std::int64_t>(pts_b.size()),
                 [&](std::int64_t i) { db[i] = bvh_a.distance(pts_b[i]); });
    double sum_a = 0.0, sum_b = 0.0;
    for (double d : da) sum_a += d;
    for (double d : db) sum_b += d;
    return 0.5 * (sum_a / pts_a.size() + sum_b / pts_b.size()) * units_to_cm;
}

namespace detail_iou {

/// Occupancy of voxel centers by parity of ray crossings along +x columns;
/// valid for closed meshes. `gwn` switches to winding-number evaluation.
inline std::vector<std::uint8_t> occupancy(const TriMesh& mesh, const Vec3& lo, const Vec3& step,
                                           int res, bool gwn) {
    const TriangleBvh bvh(mesh);
    std::vector<std::uint8_t> occ(static_cast<size_t>(res) * res * res, 0);
    if (gwn) {
        parallel_for(static_cast<std::int64_t>(res) * res * res, [&](std::int64_t idx) {
            const int i = static_cast<int>(idx / (res * res));
            const int j = static_cast<int>((idx / res) % res);
            const int k = static_cast<int>(idx % res);
            const Vec3 p = lo + Vec3((i + 0.5) * step.x(), (j + 0.5) * step.y(), (k + 0.5) * step.z());
            occ[idx] = winding_number(mesh, p) > 0.5 ? 1 : 0;
        });
        return occ;
    }
    const double span = res * (step.x() + step.y() + step.z()) + 1.0;
    // Slightly tilted ray avoids exact edge/vertex hits on axis-aligned meshes.
    const Vec3 dir = Vec3(1.0, 7.3e-8, 3.1e-8).normalized();
    parallel_for(static_cast<std::int64_t>(res) * res, [&](std::int64_t col) {
        const int j = static_cast<int>(col / res);
        const int k = static_cast<int>(col % res);
        for (int i = 0; i < res; ++i) {
            const Vec3 p = lo + Vec3((i + 0.5) * step.x(), (j + 0.5) * step.y(), (k + 0.5) * step.z());
            const int crossings = bvh.count_crossings(p, dir, span);
            occ[(static_cast<size_t>(i) * res + j) * res + k] = (crossings % 2 == 1) ? 1 : 0;
        }
    });
    return occ;
}

}  // namespace detail_iou

/// Volumetric IoU on a shared bounding grid. Open meshes trigger a warning
/// and fall back to generalized winding numbers for occupancy.
inline double voxel_iou(const TriMesh& a, const TriMesh& b, int resolution = 128) {
    require(!a.empty() && !b.empty(), "voxel_iou: empty mesh");
    require(resolution >= 2, "voxel_iou: resolution too small");
    const bool a_closed = is_closed(a), b_closed = is_closed(b);
    if (!a_closed || !b_closed)
        std::cerr << "voxel_iou: warning: open mesh, sign from winding number\n";

    auto [lo_a, hi_a] = bounding_box(a);
    auto [lo_b, hi_b] = bounding_box(b);
    const Vec3 lo = lo_a.cwiseMin(lo_b) - Vec3::Constant(1e-3);
    const Vec3 hi = hi_a.cwiseMax(hi_b) + Vec3::Constant(1e-3);
    const Vec3 step = (hi - lo) / resolution;

    const auto occ_a = detail_iou::occupancy(a, lo, step, resolution, !a_closed);
    const auto occ_b = detail_iou::occupancy(b, lo, step, resolution, !b_closed);
    std::int64_t inter = 0, uni = 0;
    for (size_t i = 0; i < occ_a.size(); ++i) {
        inter += occ_a[i] & occ_b[i];
        uni += occ_a[i] | occ_b[i];
    }
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// Pixel-wise object removal score: over matched camera pairs, the fraction
/// of input target-object pixels still classified as target after the edit.
/// Cameras with an empty input mask are skipped.
inline double por_score(const std::vector<Image>& input_target_masks,
                        const std::vector<Image>& edited_target_masks) {
    require(input_target_masks.size() == edited_target_masks.size(),
            "por_score: view count mismatch");
    double total = 0.0;
    int used = 0;
    for (size_t v = 0; v < input_target_masks.size(); ++v) {
        const Image& in = input_target_masks[v];
        const Image& ed = edited_target_masks[v];
        require(in.height == ed.height && in.width == ed.width && in.channels == 1 &&
                    ed.channels == 1,
                "por_score: mask shape mismatch");
        std::int64_t input_count = 0, remaining = 0;
        for (size_t i = 0; i < in.data.size(); ++i) {
            if (in.data[i] >= 0.5) {
                ++input_count;
                if (ed.data[i] >= 0.5) ++remaining;
            }
        }
        if (input_count == 0) continue;
        total += static_cast<double>(remaining) / static_cast<double>(input_count);
        ++used;
    }
    require(used > 0, "por_score: all input masks empty");
    return total / used;
}

}  // namespace layercut
