#pragma once

#include "layercut/kdtree.hpp"
#include "layercut/math.hpp"
#include "layercut/mesh.hpp"
#include "layercut/optim.hpp"
#include "layercut/raster.hpp"
#include "layercut/rig.hpp"

#include <set>
#include <vector>

namespace layercut {

/// Default visibility ring: evenly spaced azimuths at elevation 0, r = 3.
inline std::vector<Camera> visibility_cameras(int count = 30, int width = 128, int height = 128) {
    std::vector<Camera> cams(count);
    for (int i = 0; i < count; ++i) {
        cams[i].radius = 3.0;
        cams[i].elevation = 0.0;
        cams[i].azimuth = 2.0 * kPi * i / count;
        cams[i].fov = kPi / 6.0;
        cams[i].width = width;
        cams[i].height = height;
    }
    return cams;
}

/// Vertices with at least one incident face appearing in some camera's
/// face-id buffer.
inline std::vector<int> visible_vertices(const TriMesh& mesh, const std::vector<Camera>& cameras) {
    require(!cameras.empty(), "visible_vertices: no cameras");
    std::vector<bool> face_seen(mesh.faces.size(), false);
    for (const auto& cam : cameras) {
        const RenderBuffers buf = rasterize(mesh, cam);
        for (std::int32_t f : buf.face_id)
            if (f >= 0) face_seen[f] = true;
    }
    std::set<int> verts;
    for (size_t f = 0; f < mesh.faces.size(); ++f)
        if (face_seen[f])
            for (int k = 0; k < 3; ++k) verts.insert(mesh.faces[f][k]);
    return std::vector<int>(verts.begin(), verts.end());
}

struct RefineConfig {
    double lambda_dis = 10.0;
    int steps = 200;
    double lr = 1e-3;
    std::vector<Camera> cameras = visibility_cameras();
    std::vector<int>* penetration_trace = nullptr;  // optional per-step counts
};

namespace detail_refine {

/// Penetration test used by the benchmark: the direction to the nearest
/// visible object vertex opposes the (frozen) human normal.
inline int count_penetrating(const std::vector<Vec3>& human_vertices,
                             const std::vector<Vec3>& human_normals, const KdTree& object_kd) {
    int count = 0;
    for (size_t v = 0; v < human_vertices.size(); ++v) {
        const Vec3 w = object_kd.point(object_kd.nearest(human_vertices[v])) - human_vertices[v];
        if (w.norm() > 1e-12 && w.normalized().dot(human_normals[v]) < 0.0) ++count;
    }
    return count;
}

}  // namespace detail_refine

/// Push the human layer beneath the object layer: one scalar displacement
/// per human vertex along its frozen normal, penalizing human->object
/// nearest-neighbor directions that oppose the human normal and
/// object->human ones that align with the object normal, plus a squared
/// displacement regularizer. The object mesh never moves.
inline TriMesh refine_composition(const TriMesh& m_h, const TriMesh& m_o,
                                  const RefineConfig& cfg = {}) {
    if (m_o.empty()) return m_h;
    require(!m_h.empty(), "refine_composition: empty human mesh");

    const std::vector<Vec3> normals_h = vertex_normals(m_h);  // frozen for the whole run
    const std::vector<Vec3> normals_o = vertex_normals(m_o);

    const std::vector<int> vis = visible_vertices(m_o, cfg.cameras);
    if (vis.empty()) return m_h;
    std::vector<Vec3> vis_points(vis.size());
    for (size_t i = 0; i < vis.size(); ++i) vis_points[i] = m_o.vertices[vis[i]];
    const KdTree object_kd(vis_points);

    const int nh = static_cast<int>(m_h.vertices.size());
    VecX displacement = VecX::Zero(nh);
    AdamState adam(nh);

    std::vector<Vec3> cur(m_h.vertices.begin(), m_h.vertices.end());
    for (int step = 0; step < cfg.steps; ++step) {
        for (int v = 0; v < nh; ++v) cur[v] = m_h.vertices[v] + displacement[v] * normals_h[v];
        const KdTree human_kd(cur);

        VecX grad = VecX::Zero(nh);
        // Human term: -unit(v_h -> nn_o) . n_h, averaged over human vertices.
        for (int v = 0; v < nh; ++v) {
            const Vec3 w = object_kd.point(object_kd.nearest(cur[v])) - cur[v];
            const double len = w.norm();
            if (len < 1e-12) continue;
            const Vec3 u = w / len;
            // d(-u.n)/dd with v_h = v0 + d n: n^T (I - uu^T) n / |w|
            const double un = u.dot(normals_h[v]);
            grad[v] += (1.0 - un * un) / len / nh;
        }
        // Object term: +unit(v_o -> nn_h) . n_o, gradient on the human vertex.
        for (size_t i = 0; i < vis.size(); ++i) {
            const int hv = human_kd.nearest(vis_points[i]);
            const Vec3 w = cur[hv] - vis_points[i];
            const double len = w.norm();
            if (len < 1e-12) continue;
            const Vec3 u = w / len;
            const Vec3 no = normals_o[vis[i]];
            // d(u.n_o)/dv_h = (I - uu^T) n_o / |w|; project on the motion axis.
            const Vec3 dv = (no - u * u.dot(no)) / len;
            grad[hv] += dv.dot(normals_h[hv]) / static_cast<double>(vis.size());
        }
        // Displacement regularizer.
        for (int v = 0; v < nh; ++v) grad[v] += cfg.lambda_dis * 2.0 * displacement[v] / nh;

        adam.step(displacement, grad, cfg.lr);

        if (cfg.penetration_trace) {
            for (int v = 0; v < nh; ++v) cur[v] = m_h.vertices[v] + displacement[v] * normals_h[v];
            cfg.penetration_trace->push_back(
                detail_refine::count_penetrating(cur, normals_h, object_kd));
        }
    }

    TriMesh out = m_h;
    for (int v = 0; v < nh; ++v)
        out.vertices[v] = m_h.vertices[v] + displacement[v] * normals_h[v];
    return out;
}

inline TriMesh refine_composition(const TriMesh& m_h, const TriMesh& m_o, double lambda_dis,
                                  int steps, double lr, const std::vector<Camera>& cameras) {
    RefineConfig cfg;
    cfg.lambda_dis = lambda_dis;
    cfg.steps = steps;
    cfg.lr = lr;
    cfg.cameras = cameras;
    return refine_composition(m_h, m_o, cfg);
}

/// Compose a canonical object asset onto a target canonical human and pose
/// the result; optional penetration refinement runs in canonical space.
inline TriMesh transfer(const TriMesh& asset_o, const TriMesh& target_h, const Rig& target_rig,
                        const Pose& target_pose, bool refine, double lambda_dis = 10.0) {
    require(target_pose.theta.size() == target_rig.bones.size(), "transfer: rig/pose mismatch");
    TriMesh human = target_h;
    if (refine && !asset_o.empty()) {
        RefineConfig cfg;
        cfg.lambda_dis = lambda_dis;
        human = refine_composition(target_h, asset_o, cfg);
    }
    const TriMesh composite = merge_meshes(human, asset_o);
    return lbs_forward(composite, target_rig, target_pose);
}

}  // namespace layercut
