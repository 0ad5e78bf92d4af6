#pragma once

#include "layercut/math.hpp"
#include "layercut/mesh.hpp"

#include <cstdint>

namespace layercut {

/// Perspective camera on a sphere around the origin, up = +y.
/// Azimuth 0 places the camera on +z looking at the origin ("front").
struct Camera {
    double radius = 3.0;
    double elevation = 0.0;  // rad
    double azimuth = 0.0;    // rad
    double fov = kPi / 6.0;  // vertical, rad
    int width = 64, height = 64;

    void validate() const {
        require(fov > 0.0 && fov < kPi, "Camera: fov out of range");
        require(width >= 8 && height >= 8, "Camera: resolution below 8");
        require(radius > 0.0, "Camera: radius must be positive");
    }

    Vec3 position() const {
        return radius * Vec3(std::cos(elevation) * std::sin(azimuth), std::sin(elevation),
                             std::cos(elevation) * std::cos(azimuth));
    }

    /// Orthonormal basis rows (right, up, forward); forward points from the
    /// eye toward the origin.
    Mat3 basis() const {
        const Vec3 eye = position();
        const Vec3 fwd = (-eye).normalized();
        Vec3 up(0, 1, 0);
        Vec3 right = fwd.cross(up);
        if (right.norm() < 1e-9) right = Vec3(1, 0, 0);  // looking straight up/down
        right.normalize();
        const Vec3 up2 = right.cross(fwd);
        Mat3 m;
        m.row(0) = right;
        m.row(1) = up2;
        m.row(2) = fwd;
        return m;
    }

    double focal_length() const { return (height / 2.0) / std::tan(fov / 2.0); }

    /// World point -> (camera x, camera y, depth along forward).
    Vec3 to_camera(const Vec3& p) const { return basis() * (p - position()); }
};

struct CameraConfig {
    double radius = 3.0;
    double elevation_min = -kPi / 18.0, elevation_max = kPi / 9.0;
    double fov_min = kPi / 7.0, fov_max = kPi / 4.0;
    int width = 64, height = 64;
};

/// Random view on the sampling sphere; deterministic per seed.
inline Camera sample_camera(std::uint64_t rng_seed, const CameraConfig& config = {}) {
    Rng rng(rng_seed);
    Camera cam;
    cam.radius = config.radius;
    cam.elevation = rng.uniform(config.elevation_min, config.elevation_max);
    cam.azimuth = rng.uniform(0.0, 2.0 * kPi);
    cam.fov = rng.uniform(config.fov_min, config.fov_max);
    cam.width = config.width;
    cam.height = config.height;
    return cam;
}

/// View-direction tag for prompt construction, from the camera azimuth.
enum class ViewTag { Front, Side, Back };

inline ViewTag view_tag_from_azimuth(double azimuth) {
    double a = std::fmod(std::abs(azimuth), 2.0 * kPi);
    if (a > kPi) a = 2.0 * kPi - a;  // fold to [0, pi]
    if (a <= kPi / 4.0) return ViewTag::Front;
    if (a >= 3.0 * kPi / 4.0) return ViewTag::Back;
    return ViewTag::Side;
}

/// Zoom-view target: either a joint (face/hand close-up) or an axis-aligned
/// interaction bounding box.
struct ZoomTarget {
    enum class Kind { Face, Hand, Bbox } kind = Kind::Bbox;
    Vec3 joint = Vec3::Zero();          // joint modes
    Vec3 bbox_lo = Vec3::Zero(), bbox_hi = Vec3::Zero();  // bbox mode
};

/// v -> (v - translate) * scale
struct ZoomTransform {
    Vec3 translate = Vec3::Zero();
    double scale = 1.0;
};

/// Zoom transform for a region of interest: joint modes translate the joint
/// to the origin and scale by 5 (face) or 10 (hands); bbox mode samples the
/// focus point in the middle half of the box and the scale from the box
/// extent. Deterministic per seed.
inline ZoomTransform zoom_transform(const ZoomTarget& target, std::uint64_t rng_seed) {
    ZoomTransform zt;
    if (target.kind == ZoomTarget::Kind::Face || target.kind == ZoomTarget::Kind::Hand) {
        zt.translate = target.joint;
        zt.scale = target.kind == ZoomTarget::Kind::Face ? 5.0 : 10.0;
    } else {
        const Vec3 extent = target.bbox_hi - target.bbox_lo;
        const double max_extent = extent.maxCoeff();
        require(max_extent > 0.0, "zoom_view: degenerate bbox");
        Rng rng(rng_seed);
        for (int k = 0; k < 3; ++k) {
            const double lo = (target.bbox_hi[k] + 3.0 * target.bbox_lo[k]) / 4.0;
            const double hi = (3.0 * target.bbox_hi[k] + target.bbox_lo[k]) / 4.0;
            zt.translate[k] = rng.uniform(lo, hi);
        }
        zt.scale = rng.uniform(1.0 / (0.6 * max_extent), 1.0 / (0.3 * max_extent));
    }
    return zt;
}

inline TriMesh apply_zoom(const TriMesh& mesh, const ZoomTransform& zt) {
    TriMesh out = mesh;
    for (auto& v : out.vertices) v = (v - zt.translate) * zt.scale;
    return out;
}

/// Transform a mesh so a region of interest fills the standard camera view.
inline TriMesh zoom_view(const TriMesh& mesh, const ZoomTarget& target, std::uint64_t rng_seed) {
    return apply_zoom(mesh, zoom_transform(target, rng_seed));
}

}  // namespace layercut
