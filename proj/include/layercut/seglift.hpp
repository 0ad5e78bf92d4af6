#pragma once

#include "layercut/camera.hpp"
#include "layercut/image.hpp"
#include "layercut/mesh.hpp"
#include "layercut/raster.hpp"

#include <deque>
#include <vector>

namespace layercut {

/// One calibrated binary object mask, aligned with rasterize(scan, camera).
struct ViewMask {
    Camera camera;
    Image mask;  // H x W x 1, values >= 0.5 mean "object"

    void validate() const {
        require(mask.channels == 1, "ViewMask: mask must be single-channel");
        require(mask.height == camera.height && mask.width == camera.width,
                "ViewMask: mask dims must equal camera dims");
    }
};

/// Lift multi-view 2D object masks onto scan faces. Every covered pixel
/// votes its mask value for the face it sees; faces reaching min_votes take
/// the majority label (ties -> human), the rest inherit the label of the
/// nearest labeled face by BFS over shared-edge adjacency.
inline std::vector<Layer> lift_segmentation(const TriMesh& scan, const std::vector<ViewMask>& views,
                                            int min_votes = 3) {
    require(!views.empty(), "lift_segmentation: no views");
    scan.validate();

    std::vector<std::int64_t> object_votes(scan.faces.size(), 0);
    std::vector<std::int64_t> total_votes(scan.faces.size(), 0);
    for (const auto& view : views) {
        view.validate();
        const RenderBuffers buf = rasterize(scan, view.camera);
        for (int r = 0; r < buf.height; ++r)
            for (int c = 0; c < buf.width; ++c) {
                const std::int32_t f = buf.face_id[buf.idx(r, c)];
                if (f < 0) continue;
                ++total_votes[f];
                if (view.mask.at(r, c, 0) >= 0.5) ++object_votes[f];
            }
    }

    std::vector<Layer> labels(scan.faces.size(), Layer::Human);
    std::vector<bool> decided(scan.faces.size(), false);
    std::deque<int> frontier;
    for (size_t f = 0; f < scan.faces.size(); ++f) {
        if (total_votes[f] >= min_votes) {
            labels[f] = (2 * object_votes[f] > total_votes[f]) ? Layer::Object : Layer::Human;
            decided[f] = true;
            frontier.push_back(static_cast<int>(f));
        }
    }

    // Unvoted faces inherit from the nearest decided face.
    if (!frontier.empty()) {
        const auto adjacency = face_adjacency(scan);
        while (!frontier.empty()) {
            const int f = frontier.front();
            frontier.pop_front();
            for (int g : adjacency[f]) {
                if (decided[g]) continue;
                labels[g] = labels[f];
                decided[g] = true;
                frontier.push_back(g);
            }
        }
    }
    return labels;
}

/// Split a labeled scan into (human, object) submeshes with compactly
/// reindexed vertices; colors are carried over.
inline std::pair<TriMesh, TriMesh> partition_mesh(const TriMesh& scan,
                                                  const std::vector<Layer>& labels) {
    require(labels.size() == scan.faces.size(), "partition_mesh: label count mismatch");
    auto extract = [&](Layer which) {
        TriMesh out;
        std::vector<int> remap(scan.vertices.size(), -1);
        for (size_t f = 0; f < scan.faces.size(); ++f) {
            if (labels[f] != which) continue;
            std::array<int, 3> tri;
            for (int k = 0; k < 3; ++k) {
                const int v = scan.faces[f][k];
                if (remap[v] < 0) {
                    remap[v] = static_cast<int>(out.vertices.size());
                    out.vertices.push_back(scan.vertices[v]);
                    if (scan.has_colors()) out.colors.push_back(scan.colors[v]);
                }
                tri[k] = remap[v];
            }
            out.faces.push_back(tri);
        }
        return out;
    };
    return {extract(Layer::Human), extract(Layer::Object)};
}

/// Ground-truth buffers of the labeled scan for the reconstruction losses:
/// one pass emitting mask, normal map, both segmentation channels and rgb.
inline RenderBuffers render_scan_ground_truth(const TriMesh& scan, const std::vector<Layer>& labels,
                                              const Camera& camera) {
    require(labels.size() == scan.faces.size(), "render_scan_ground_truth: label count mismatch");
    TriMesh labeled = scan;
    labeled.labels = labels;
    return rasterize(labeled, camera);
}

}  // namespace layercut
