#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace layercut {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using VecX = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;

/// Skew-symmetric matrix such that skew(a) * b == a.cross(b).
inline Mat3 skew(const Vec3& a) {
    Mat3 m;
    m << 0.0, -a.z(), a.y(),
         a.z(), 0.0, -a.x(),
        -a.y(), a.x(), 0.0;
    return m;
}

/// Rodrigues' formula: rotation matrix from an axis-angle vector.
inline Mat3 axis_angle_to_matrix(const Vec3& aa) {
    const double angle = aa.norm();
    if (angle < 1e-12) {
        return Mat3::Identity() + skew(aa);  // first-order for tiny angles
    }
    const Vec3 axis = aa / angle;
    const Mat3 k = skew(axis);
    return Mat3::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * k * k;
}

inline Mat4 rigid_transform(const Mat3& r, const Vec3& t) {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = r;
    m.topRightCorner<3, 1>() = t;
    return m;
}

inline Vec3 transform_point(const Mat4& m, const Vec3& p) {
    return m.topLeftCorner<3, 3>() * p + m.topRightCorner<3, 1>();
}

/// Deterministic PRNG used everywhere randomness is needed. Wraps a
/// splitmix64 state so that uniform/normal draws are reproducible across
/// platforms and standard-library versions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        // splitmix64 (Vigna). Full 64-bit period, passes BigCrush.
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    /// Standard normal via Box-Muller.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * kPi * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    Vec3 normal3() {
        const double a = normal(), b = normal(), c = normal();
        return Vec3(a, b, c);
    }

    /// Child stream decorrelated from this one; used to give each
    /// optimization step / subsystem its own reproducible stream.
    Rng fork(std::uint64_t stream) const {
        return Rng(state_ ^ (0x632be59bd9b4e019ULL * (stream + 0x9e3779b97f4a7c15ULL)));
    }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

inline void require(bool cond, const char* what) {
    if (!cond) throw std::invalid_argument(what);
}

}  // namespace layercut
