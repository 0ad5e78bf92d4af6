#pragma once

#include "layercut/math.hpp"
#include "layercut/mesh.hpp"
#include "layercut/rig.hpp"
#include "layercut/seglift.hpp"

#include <map>
#include <vector>

namespace layercut {

/// Icosphere of the given radius; `subdivisions` quadruple the face count
/// each level (20 * 4^n faces).
inline TriMesh make_icosphere(double radius, int subdivisions, const Vec3& center = Vec3::Zero()) {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {{-1, phi, 0}, {1, phi, 0},   {-1, -phi, 0}, {1, -phi, 0},
                               {0, -1, phi}, {0, 1, phi},   {0, -1, -phi}, {0, 1, -phi},
                               {phi, 0, -1}, {phi, 0, 1},   {-phi, 0, -1}, {-phi, 0, 1}};
    for (auto& v : verts) v.normalize();
    std::vector<std::array<int, 3>> faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
        {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
        {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};

    for (int level = 0; level < subdivisions; ++level) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            const int idx = static_cast<int>(verts.size());
            verts.push_back(((verts[a] + verts[b]) / 2.0).normalized());
            midpoint[key] = idx;
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            const int a = mid(f[0], f[1]), b = mid(f[1], f[2]), c = mid(f[2], f[0]);
            next.push_back({f[0], a, c});
            next.push_back({f[1], b, a});
            next.push_back({f[2], c, b});
            next.push_back({a, b, c});
        }
        faces = std::move(next);
    }
    TriMesh mesh;
    mesh.faces = std::move(faces);
    mesh.vertices.reserve(verts.size());
    for (const auto& v : verts) mesh.vertices.push_back(center + radius * v);
    return mesh;
}

/// Closed band around the y axis: a rectangular radial profile
/// [r_in, r_out] x [-y_half, y_half] swept over `segments` steps.
inline TriMesh make_band(double r_in, double r_out, double y_half, int segments = 64) {
    require(r_out > r_in && r_in > 0.0 && y_half > 0.0, "make_band: bad profile");
    // Profile corners ordered so the swept quads face outward.
    const std::array<Vec2, 4> profile = {Vec2(r_out, -y_half), Vec2(r_out, y_half),
                                         Vec2(r_in, y_half), Vec2(r_in, -y_half)};
    TriMesh mesh;
    for (int s = 0; s < segments; ++s) {
        const double a = 2.0 * kPi * s / segments;
        for (const auto& p : profile)
            mesh.vertices.emplace_back(p.x() * std::cos(a), p.y(), p.x() * std::sin(a));
    }
    auto idx = [&](int seg, int corner) { return (seg % segments) * 4 + corner; };
    for (int s = 0; s < segments; ++s)
        for (int c = 0; c < 4; ++c) {
            const int c2 = (c + 1) % 4;
            const int v00 = idx(s, c), v01 = idx(s, c2), v10 = idx(s + 1, c), v11 = idx(s + 1, c2);
            mesh.faces.push_back({v00, v01, v11});
            mesh.faces.push_back({v00, v11, v10});
        }
    // Fix orientation outward if the sweep direction flipped it.
    double vol = 0.0;
    for (const auto& f : mesh.faces)
        vol += mesh.vertices[f[0]].cross(mesh.vertices[f[1]]).dot(mesh.vertices[f[2]]);
    if (vol < 0.0)
        for (auto& f : mesh.faces) std::swap(f[1], f[2]);
    return mesh;
}

/// Vertical capsule (cylinder with hemispherical caps), closed.
inline TriMesh make_capsule(double radius, double half_height, int rings = 12, int segments = 24) {
    TriMesh mesh;
    // Stacked rings from south pole to north pole.
    std::vector<double> ys;
    std::vector<double> rs;
    for (int i = 0; i <= rings; ++i) {  // lower cap
        const double a = -kPi / 2.0 + (kPi / 2.0) * i / rings;
        ys.push_back(-half_height + radius * std::sin(a));
        rs.push_back(radius * std::cos(a));
    }
    for (int i = 1; i <= rings; ++i) {  // upper cap
        const double a = (kPi / 2.0) * i / rings;
        ys.push_back(half_height + radius * std::sin(a));
        rs.push_back(radius * std::cos(a));
    }
    const int south = 0;
    mesh.vertices.emplace_back(0, ys.front(), 0);
    std::vector<int> ring_start;
    for (size_t r = 1; r + 1 < ys.size(); ++r) {
        ring_start.push_back(static_cast<int>(mesh.vertices.size()));
        for (int s = 0; s < segments; ++s) {
            const double a = 2.0 * kPi * s / segments;
            mesh.vertices.emplace_back(rs[r] * std::cos(a), ys[r], rs[r] * std::sin(a));
        }
    }
    const int north = static_cast<int>(mesh.vertices.size());
    mesh.vertices.emplace_back(0, ys.back(), 0);

    auto ring_v = [&](int ring, int s) { return ring_start[ring] + (s % segments); };
    for (int s = 0; s < segments; ++s)
        mesh.faces.push_back({south, ring_v(0, s), ring_v(0, s + 1)});
    for (size_t r = 0; r + 1 < ring_start.size(); ++r)
        for (int s = 0; s < segments; ++s) {
            const int v00 = ring_v(static_cast<int>(r), s), v01 = ring_v(static_cast<int>(r), s + 1);
            const int v10 = ring_v(static_cast<int>(r) + 1, s),
                      v11 = ring_v(static_cast<int>(r) + 1, s + 1);
            mesh.faces.push_back({v00, v11, v01});
            mesh.faces.push_back({v00, v10, v11});
        }
    for (int s = 0; s < segments; ++s)
        mesh.faces.push_back({north, ring_v(static_cast<int>(ring_start.size()) - 1, s + 1),
                              ring_v(static_cast<int>(ring_start.size()) - 1, s)});

    double vol = 0.0;
    for (const auto& f : mesh.faces)
        vol += mesh.vertices[f[0]].cross(mesh.vertices[f[1]]).dot(mesh.vertices[f[2]]);
    if (vol < 0.0)
        for (auto& f : mesh.faces) std::swap(f[1], f[2]);
    return mesh;
}

namespace detail_synth {

struct JointSpec {
    const char* name;
    int parent;
    Vec3 position;  // world position in the rest pose
};

/// 12-joint humanoid skeleton shared by the synthetic rigs.
inline const std::vector<JointSpec>& skeleton() {
    static const std::vector<JointSpec> joints = {
        {"pelvis", -1, {0.0, -0.20, 0.0}},    {"spine", 0, {0.0, 0.05, 0.0}},
        {"chest", 1, {0.0, 0.30, 0.0}},       {"neck", 2, {0.0, 0.50, 0.0}},
        {"head", 3, {0.0, 0.65, 0.0}},        {"l_shoulder", 2, {0.15, 0.45, 0.0}},
        {"l_elbow", 5, {0.45, 0.45, 0.0}},    {"l_wrist", 6, {0.70, 0.45, 0.0}},
        {"r_shoulder", 2, {-0.15, 0.45, 0.0}},{"r_elbow", 8, {-0.45, 0.45, 0.0}},
        {"r_wrist", 9, {-0.70, 0.45, 0.0}},   {"lower", 0, {0.0, -0.55, 0.0}}};
    return joints;
}

inline double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 ab = b - a;
    const double t = std::clamp(ab.squaredNorm() > 0 ? (p - a).dot(ab) / ab.squaredNorm() : 0.0,
                                0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

inline Rig build_rig(TriMesh template_mesh) {
    Rig rig;
    const auto& joints = skeleton();
    for (const auto& j : joints) {
        Bone bone;
        bone.name = j.name;
        bone.parent = j.parent;
        const Vec3 parent_pos = j.parent < 0 ? Vec3::Zero() : joints[j.parent].position;
        bone.rest_local = rigid_transform(Mat3::Identity(), j.position - parent_pos);
        rig.bones.push_back(bone);
    }
    rig.template_mesh = std::move(template_mesh);

    // Soft weights from distance to the bone segments (joint -> mean child).
    const int v = rig.vertex_count(), nb = rig.bone_count();
    std::vector<std::pair<Vec3, Vec3>> segments(nb);
    for (int b = 0; b < nb; ++b) {
        Vec3 end = joints[b].position;
        int children = 0;
        Vec3 child_sum = Vec3::Zero();
        for (int c = 0; c < nb; ++c)
            if (joints[c].parent == b) {
                child_sum += joints[c].position;
                ++children;
            }
        if (children > 0) end = child_sum / children;
        segments[b] = {joints[b].position, end};
    }
    rig.weights.resize(v, nb);
    const double sigma = 0.18;
    for (int i = 0; i < v; ++i) {
        VecX w(nb);
        for (int b = 0; b < nb; ++b) {
            const double d =
                point_segment_distance(rig.template_mesh.vertices[i], segments[b].first,
                                       segments[b].second);
            w[b] = std::exp(-d * d / (2.0 * sigma * sigma));
        }
        // Keep the two strongest influences for crisp, deterministic posing.
        VecX sorted = w;
        std::nth_element(sorted.data(), sorted.data() + nb - 2, sorted.data() + nb);
        const double cutoff = sorted[nb - 2];
        for (int b = 0; b < nb; ++b)
            if (w[b] < cutoff) w[b] = 0.0;
        rig.weights.row(i) = (w / w.sum()).transpose();
    }

    // Deterministic smooth blend-shape bases.
    rig.shape_basis.resize(3 * v, 10);
    rig.expression_basis.resize(3 * v, 10);
    for (int i = 0; i < v; ++i) {
        const Vec3& p = rig.template_mesh.vertices[i];
        for (int j = 0; j < 10; ++j)
            for (int k = 0; k < 3; ++k) {
                rig.shape_basis(3 * i + k, j) =
                    0.05 * std::sin(1.7 * j + 2.1 * p[k] + 0.9 * p[(k + 1) % 3] + k);
                rig.expression_basis(3 * i + k, j) =
                    0.02 * std::cos(1.3 * j + 3.7 * p[(k + 2) % 3] + k);
            }
    }

    rig.openpose_map = {4, 3, 8, 9, 10, 5, 6, 7, 11, -1, -1, 11, -1, -1, 4, 4, 4, 4};
    rig.validate();
    rig.finalize();
    return rig;
}

}  // namespace detail_synth

/// 12-bone capsule-body rig used by the unit and property tests.
inline Rig make_capsule_rig() {
    return detail_synth::build_rig(make_capsule(0.22, 0.45, 8, 20));
}

/// Same skeleton over a spherical template; drives the sphere/band demo.
inline Rig make_sphere_rig(int subdivisions = 3) {
    return detail_synth::build_rig(make_icosphere(0.5, subdivisions));
}

/// Fully synthetic decomposition problem: a spherical "human" wearing a
/// band "object", posed by the synthetic rig, with ground truth kept for
/// oracles.
struct SyntheticScene {
    Rig rig;
    TriMesh gt_human_c, gt_object_c;  // canonical ground truth
    TriMesh gt_composite_c;
    Pose input_pose;
    Pose arms_down_pose;  // extra SDS pose
    TriMesh scan;         // posed single-layer scan (human + band merged)
    std::vector<Layer> scan_labels;
};

inline SyntheticScene make_sphere_band_scene(int sphere_subdivisions = 3, int band_segments = 48) {
    SyntheticScene scene;
    scene.rig = make_sphere_rig(sphere_subdivisions);
    scene.gt_human_c = make_icosphere(0.5, sphere_subdivisions);
    scene.gt_object_c = make_band(0.56, 0.66, 0.16, band_segments);

    // Position-derived colors so texture reconstruction has structure.
    auto paint = [](TriMesh& m, double hue_shift, double saturation) {
        m.colors.resize(m.vertices.size());
        for (size_t i = 0; i < m.vertices.size(); ++i) {
            const Vec3& p = m.vertices[i];
            m.colors[i] = Vec3(0.5 + saturation * std::sin(3.0 * p.x() + hue_shift),
                               0.5 + saturation * std::sin(3.0 * p.y() + hue_shift + 2.0),
                               0.5 + saturation * std::sin(3.0 * p.z() + hue_shift + 4.0));
            for (int k = 0; k < 3; ++k) m.colors[i][k] = std::clamp(m.colors[i][k], 0.05, 0.95);
        }
    };
    paint(scene.gt_human_c, 0.0, 0.35);
    paint(scene.gt_object_c, 2.5, 0.25);

    scene.gt_composite_c = merge_meshes(scene.gt_human_c, scene.gt_object_c);

    scene.input_pose = Pose::rest(scene.rig.bone_count());
    scene.input_pose.theta[1] = Vec3(0.0, 0.0, 0.35);  // spine bend
    scene.input_pose.theta[3] = Vec3(0.15, 0.0, 0.0);  // slight neck tilt

    scene.arms_down_pose = Pose::rest(scene.rig.bone_count());
    scene.arms_down_pose.theta[1] = Vec3(0.0, 0.0, -0.2);

    scene.scan = lbs_forward(scene.gt_composite_c, scene.rig, scene.input_pose);
    scene.scan_labels = scene.gt_composite_c.labels;
    return scene;
}

/// Object masks for segmentation lifting, rendered from the ground-truth
/// labels over an evenly spaced azimuth ring.
inline std::vector<ViewMask> make_gt_view_masks(const TriMesh& scan,
                                                const std::vector<Layer>& labels, int n_views,
                                                int size = 128) {
    std::vector<ViewMask> views;
    views.reserve(n_views);
    for (int i = 0; i < n_views; ++i) {
        ViewMask vm;
        vm.camera.radius = 3.0;
        vm.camera.elevation = (i % 3 - 1) * kPi / 12.0;
        vm.camera.azimuth = 2.0 * kPi * i / n_views;
        vm.camera.fov = kPi / 5.0;
        vm.camera.width = size;
        vm.camera.height = size;
        const RenderBuffers buf = render_scan_ground_truth(scan, labels, vm.camera);
        vm.mask = Image(size, size, 1);
        for (int r = 0; r < size; ++r)
            for (int c = 0; c < size; ++c) vm.mask.at(r, c, 0) = buf.seg_o[buf.idx(r, c)];
        views.push_back(std::move(vm));
    }
    return views;
}

}  // namespace layercut
