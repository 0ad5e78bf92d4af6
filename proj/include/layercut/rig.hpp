#pragma once

#include "layercut/camera.hpp"
#include "layercut/kdtree.hpp"
#include "layercut/math.hpp"
#include "layercut/mesh.hpp"

#include <array>
#include <string>
#include <vector>

namespace layercut {

struct Bone {
    std::string name;
    int parent = -1;      // -1 only for the root (bone 0)
    Mat4 rest_local = Mat4::Identity();
};

/// Generic skeletal body model: joint tree, canonical template with
/// skinning weights, and linear blend-shape bases. Immutable after
/// finalize(); the nearest-neighbor index is safe for concurrent queries.
struct Rig {
    std::vector<Bone> bones;
    TriMesh template_mesh;
    Eigen::MatrixXd weights;           // V x n_b, rows nonnegative, sum 1
    Eigen::MatrixXd shape_basis;       // 3V x 10
    Eigen::MatrixXd expression_basis;  // 3V x 10
    Eigen::MatrixXd pose_basis;        // 3V x K, or empty
    std::array<int, 18> openpose_map{};  // OpenPose slot -> bone index, -1 unmapped

    KdTree template_kd;  // built by finalize()

    int bone_count() const { return static_cast<int>(bones.size()); }
    int vertex_count() const { return static_cast<int>(template_mesh.vertices.size()); }

    void finalize() { template_kd = KdTree(template_mesh.vertices); }

    void validate() const {
        require(!bones.empty(), "Rig: no bones");
        require(bones[0].parent == -1, "Rig: bone 0 must be the root");
        for (size_t i = 1; i < bones.size(); ++i)
            require(bones[i].parent >= 0 && bones[i].parent < static_cast<int>(i),
                    "Rig: parents must form a tree rooted at bone 0");
        const int v = vertex_count();
        require(weights.rows() == v && weights.cols() == bone_count(),
                "Rig: weight matrix shape mismatch");
        for (int r = 0; r < weights.rows(); ++r) {
            double sum = 0.0;
            for (int c = 0; c < weights.cols(); ++c) {
                require(weights(r, c) >= -1e-12, "Rig: negative skinning weight");
                sum += weights(r, c);
            }
            require(std::abs(sum - 1.0) <= 1e-6, "Rig: weights must sum to 1");
        }
        require(shape_basis.rows() == 3 * v && shape_basis.cols() == 10,
                "Rig: shape basis shape mismatch");
        require(expression_basis.rows() == 3 * v && expression_basis.cols() == 10,
                "Rig: expression basis shape mismatch");
        require(pose_basis.size() == 0 || pose_basis.rows() == 3 * v,
                "Rig: pose basis shape mismatch");
    }
};

/// Body pose: per-bone axis-angle rotations plus identity/expression
/// blend-shape coefficients.
struct Pose {
    std::vector<Vec3> theta;  // n_b axis-angle vectors
    VecX beta = VecX::Zero(10);
    VecX psi = VecX::Zero(10);

    static Pose rest(int n_bones) {
        Pose p;
        p.theta.assign(n_bones, Vec3::Zero());
        return p;
    }

    /// Wrap each axis-angle to the equivalent rotation with angle <= pi.
    Pose canonicalized() const {
        Pose p = *this;
        for (auto& aa : p.theta) {
            double angle = aa.norm();
            if (angle > kPi) {
                const double wrapped = std::fmod(angle + kPi, 2.0 * kPi) - kPi;
                aa *= wrapped / angle;
            }
        }
        return p;
    }
};

namespace detail {

/// World transforms of every bone for the given pose (rotation applied in
/// the bone's local frame).
inline std::vector<Mat4> forward_kinematics(const Rig& rig, const Pose& pose) {
    std::vector<Mat4> world(rig.bones.size());
    for (size_t i = 0; i < rig.bones.size(); ++i) {
        const Mat4 local =
            rig.bones[i].rest_local * rigid_transform(axis_angle_to_matrix(pose.theta[i]), Vec3::Zero());
        world[i] = (rig.bones[i].parent < 0) ? local : world[rig.bones[i].parent] * local;
    }
    return world;
}

}  // namespace detail

/// Skinning transforms T_i mapping canonical space to posed space:
/// T_i = G_i(pose) * G_i(rest)^-1 over the forward-kinematic chain.
inline std::vector<Mat4> bone_transforms(const Rig& rig, const Pose& pose) {
    require(pose.theta.size() == rig.bones.size(), "bone_transforms: pose dimension mismatch");
    const auto posed = detail::forward_kinematics(rig, pose);
    const auto rest = detail::forward_kinematics(rig, Pose::rest(rig.bone_count()));
    std::vector<Mat4> out(rig.bones.size());
    for (size_t i = 0; i < rig.bones.size(); ++i) out[i] = posed[i] * rest[i].inverse();
    return out;
}

/// Posed world positions of all joints.
inline std::vector<Vec3> joint_positions(const Rig& rig, const Pose& pose) {
    const auto world = detail::forward_kinematics(rig, pose);
    std::vector<Vec3> out(world.size());
    for (size_t i = 0; i < world.size(); ++i) out[i] = world[i].topRightCorner<3, 1>();
    return out;
}

/// Skinning weights for arbitrary query points: each point inherits the
/// weight row of its nearest template vertex (ties: lowest index).
inline std::vector<VecX> nn_skinning_weights(const Rig& rig, const std::vector<Vec3>& query_points) {
    require(!rig.template_mesh.vertices.empty(), "nn_skinning_weights: empty template");
    std::vector<VecX> out;
    out.reserve(query_points.size());
    for (const auto& q : query_points) {
        const int nn = rig.template_kd.nearest(q);
        out.push_back(rig.weights.row(nn).transpose());
    }
    return out;
}

/// Blend-shape displacement per template vertex:
/// B = shape_basis * beta + expression_basis * psi + pose_basis * f(theta),
/// with f the flattened (R(theta_j) - I) features of the non-root joints.
inline std::vector<Vec3> blend_shape_offset(const Rig& rig, const Pose& pose) {
    require(pose.beta.size() == 10 && pose.psi.size() == 10, "blend_shape_offset: coeff dims");
    require(pose.theta.size() == rig.bones.size(), "blend_shape_offset: pose dimension mismatch");
    VecX flat = rig.shape_basis * pose.beta + rig.expression_basis * pose.psi;
    if (rig.pose_basis.size() > 0) {
        VecX f(9 * (rig.bone_count() - 1));
        for (int j = 1; j < rig.bone_count(); ++j) {
            const Mat3 r = axis_angle_to_matrix(pose.theta[j]) - Mat3::Identity();
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) f[9 * (j - 1) + 3 * a + b] = r(a, b);
        }
        require(rig.pose_basis.cols() == f.size(), "blend_shape_offset: pose basis dims");
        flat += rig.pose_basis * f;
    }
    std::vector<Vec3> out(rig.vertex_count());
    for (int v = 0; v < rig.vertex_count(); ++v)
        out[v] = Vec3(flat[3 * v], flat[3 * v + 1], flat[3 * v + 2]);
    return out;
}

/// Forward linear blend skinning with per-vertex skinning matrices exposed
/// for gradient pullback: posed = linear * canonical + translation.
struct SkinnedMesh {
    TriMesh mesh;
    std::vector<Mat3> linear;  // per vertex
};

inline SkinnedMesh lbs_forward_ext(const TriMesh& mesh, const Rig& rig, const Pose& pose) {
    const auto transforms = bone_transforms(rig, pose);
    const auto blend = blend_shape_offset(rig, pose);
    SkinnedMesh out;
    out.mesh = mesh;
    out.linear.resize(mesh.vertices.size());
    for (size_t v = 0; v < mesh.vertices.size(); ++v) {
        const int nn = rig.template_kd.nearest(mesh.vertices[v]);
        Mat4 skin = Mat4::Zero();
        for (int b = 0; b < rig.bone_count(); ++b) {
            const double w = rig.weights(nn, b);
            if (w != 0.0) skin += w * transforms[b];
        }
        out.mesh.vertices[v] = transform_point(skin, mesh.vertices[v] + blend[nn]);
        out.linear[v] = skin.topLeftCorner<3, 3>();
    }
    return out;
}

/// Transform a canonical-space mesh to posed space (Eq. warp semantics);
/// faces, colors and labels are carried through unchanged.
inline TriMesh lbs_forward(const TriMesh& mesh, const Rig& rig, const Pose& pose) {
    return lbs_forward_ext(mesh, rig, pose).mesh;
}

struct Keypoint2D {
    double x = 0.0, y = 0.0;
    bool visible = false;
};

/// Project posed joints through the camera in the 18-slot OpenPose order
/// declared by the rig. Joints behind the camera or unmapped slots are
/// flagged invisible.
inline std::array<Keypoint2D, 18> pose_keypoints_2d(const Rig& rig, const Pose& pose,
                                                    const Camera& camera) {
    camera.validate();
    const auto joints = joint_positions(rig, pose);
    const double fl = camera.focal_length();
    std::array<Keypoint2D, 18> out{};
    for (int s = 0; s < 18; ++s) {
        const int b = rig.openpose_map[s];
        if (b < 0 || b >= rig.bone_count()) continue;
        const Vec3 pc = camera.to_camera(joints[b]);
        if (pc.z() <= 1e-6) continue;  // behind the camera
        out[s].x = camera.width / 2.0 + fl * pc.x() / pc.z();
        out[s].y = camera.height / 2.0 - fl * pc.y() / pc.z();
        out[s].visible = true;
    }
    return out;
}

}  // namespace layercut
