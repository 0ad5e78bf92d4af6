#pragma once

#include "layercut/math.hpp"
#include "layercut/mesh.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace layercut {

/// Closest point on triangle (a, b, c) to p. Ericson, Real-Time Collision
/// Detection, 5.1.5.
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;

    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return b;

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;

    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return c;

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + w * (c - b);
    }

    const double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

/// Median-split AABB tree over mesh triangles for closest-point and
/// segment-intersection queries.
class TriangleBvh {
public:
    TriangleBvh() = default;

    explicit TriangleBvh(const TriMesh& mesh) {
        require(!mesh.empty(), "TriangleBvh: empty mesh");
        tris_.reserve(mesh.faces.size());
        for (const auto& f : mesh.faces)
            tris_.push_back({mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]});
        order_.resize(tris_.size());
        std::iota(order_.begin(), order_.end(), 0);
        nodes_.reserve(tris_.size() * 2);
        root_ = build(0, static_cast<int>(tris_.size()));
    }

    bool empty() const { return tris_.empty(); }

    /// Unsigned distance from p to the surface; also reports the closest point.
    double distance(const Vec3& p, Vec3* closest = nullptr, int* tri_index = nullptr) const {
        double best_d2 = std::numeric_limits<double>::max();
        Vec3 best_pt = Vec3::Zero();
        int best_tri = -1;
        closest_rec(root_, p, best_d2, best_pt, best_tri);
        if (closest) *closest = best_pt;
        if (tri_index) *tri_index = order_[best_tri];
        return std::sqrt(best_d2);
    }

    /// Number of triangle crossings of the segment p -> p + dir*tmax.
    /// Used for inside/outside parity on closed meshes.
    int count_crossings(const Vec3& origin, const Vec3& dir, double tmax) const {
        int count = 0;
        crossings_rec(root_, origin, dir, tmax, count);
        return count;
    }

private:
    struct Tri {
        Vec3 a, b, c;
    };
    struct Node {
        Vec3 lo, hi;
        int left = -1, right = -1;
        int begin = 0, end = 0;  // leaf range when left < 0
    };

    static constexpr int kLeafSize = 4;

    int build(int begin, int end) {
        Node node;
        node.lo = Vec3::Constant(std::numeric_limits<double>::max());
        node.hi = Vec3::Constant(std::numeric_limits<double>::lowest());
        for (int i = begin; i < end; ++i) {
            const Tri& t = tris_[order_[i]];
            node.lo = node.lo.cwiseMin(t.a).cwiseMin(t.b).cwiseMin(t.c);
            node.hi = node.hi.cwiseMax(t.a).cwiseMax(t.b).cwiseMax(t.c);
        }
        const int self = static_cast<int>(nodes_.size());
        nodes_.push_back(node);
        if (end - begin <= kLeafSize) {
            nodes_[self].begin = begin;
            nodes_[self].end = end;
            return self;
        }
        int axis = 0;
        (node.hi - node.lo).maxCoeff(&axis);
        const int mid = (begin + end) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](int x, int y) {
                             const double cx = tris_[x].a[axis] + tris_[x].b[axis] + tris_[x].c[axis];
                             const double cy = tris_[y].a[axis] + tris_[y].b[axis] + tris_[y].c[axis];
                             return cx < cy;
                         });
        const int l = build(begin, mid);
        const int r = build(mid, end);
        nodes_[self].left = l;
        nodes_[self].right = r;
        return self;
    }

    static double box_d2(const Node& n, const Vec3& p) {
        double d2 = 0.0;
        for (int k = 0; k < 3; ++k) {
            const double d = std::max({n.lo[k] - p[k], 0.0, p[k] - n.hi[k]});
            d2 += d * d;
        }
        return d2;
    }

    void closest_rec(int ni, const Vec3& p, double& best_d2, Vec3& best_pt, int& best_tri) const {
        const Node& n = nodes_[ni];
        if (box_d2(n, p) > best_d2) return;
        if (n.left < 0) {
            for (int i = n.begin; i < n.end; ++i) {
                const Tri& t = tris_[order_[i]];
                const Vec3 cp = closest_point_on_triangle(p, t.a, t.b, t.c);
                const double d2 = (cp - p).squaredNorm();
                if (d2 < best_d2) {
                    best_d2 = d2;
                    best_pt = cp;
                    best_tri = i;
                }
            }
            return;
        }
        // Visit the nearer child first for tighter pruning.
        const double dl = box_d2(nodes_[n.left], p);
        const double dr = box_d2(nodes_[n.right], p);
        if (dl < dr) {
            closest_rec(n.left, p, best_d2, best_pt, best_tri);
            closest_rec(n.right, p, best_d2, best_pt, best_tri);
        } else {
            closest_rec(n.right, p, best_d2, best_pt, best_tri);
            closest_rec(n.left, p, best_d2, best_pt, best_tri);
        }
    }

    static bool box_hit(const Node& n, const Vec3& o, const Vec3& inv_dir, double tmax) {
        double t0 = 0.0, t1 = tmax;
        for (int k = 0; k < 3; ++k) {
            double ta = (n.lo[k] - o[k]) * inv_dir[k];
            double tb = (n.hi[k] - o[k]) * inv_dir[k];
            if (ta > tb) std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
            if (t0 > t1) return false;
        }
        return true;
    }

    void crossings_rec(int ni, const Vec3& o, const Vec3& dir, double tmax, int& count) const {
        const Node& n = nodes_[ni];
        const Vec3 inv_dir(1.0 / dir.x(), 1.0 / dir.y(), 1.0 / dir.z());
        if (!box_hit(n, o, inv_dir, tmax)) return;
        if (n.left < 0) {
            for (int i = n.begin; i < n.end; ++i) {
                const Tri& t = tris_[order_[i]];
                // Moller-Trumbore
                const Vec3 e1 = t.b - t.a, e2 = t.c - t.a;
                const Vec3 pv = dir.cross(e2);
                const double det = e1.dot(pv);
                if (std::abs(det) < 1e-14) continue;
                const double inv = 1.0 / det;
                const Vec3 tv = o - t.a;
                const double u = tv.dot(pv) * inv;
                if (u < 0.0 || u > 1.0) continue;
                const Vec3 qv = tv.cross(e1);
                const double v = dir.dot(qv) * inv;
                if (v < 0.0 || u + v > 1.0) continue;
                const double th = e2.dot(qv) * inv;
                if (th > 1e-12 && th < tmax) ++count;
            }
            return;
        }
        crossings_rec(n.left, o, dir, tmax, count);
        crossings_rec(n.right, o, dir, tmax, count);
    }

    std::vector<Tri> tris_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

/// Generalized winding number of p with respect to the mesh
/// (van Oosterom / Strackee solid-angle sum). ~1 inside a closed surface,
/// ~0 outside.
inline double winding_number(const TriMesh& mesh, const Vec3& p) {
    double total = 0.0;
    for (const auto& f : mesh.faces) {
        const Vec3 a = mesh.vertices[f[0]] - p;
        const Vec3 b = mesh.vertices[f[1]] - p;
        const Vec3 c = mesh.vertices[f[2]] - p;
        const double la = a.norm(), lb = b.norm(), lc = c.norm();
        const double det = a.dot(b.cross(c));
        const double denom = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
        total += 2.0 * std::atan2(det, denom);
    }
    return total / (4.0 * kPi);
}

/// Signed distance from point to mesh surface: negative inside (winding
/// number > 0.5), positive outside. A prebuilt BVH can be supplied to
/// amortize queries.
inline double mesh_signed_distance(const TriMesh& mesh, const Vec3& point,
                                   const TriangleBvh* bvh = nullptr) {
    require(!mesh.empty(), "mesh_signed_distance: empty mesh");
    double d;
    if (bvh) {
        d = bvh->distance(point);
    } else {
        TriangleBvh local(mesh);
        d = local.distance(point);
    }
    return winding_number(mesh, point) > 0.5 ? -d : d;
}

/// Batched signed distances sharing one BVH.
inline std::vector<double> mesh_signed_distances(const TriMesh& mesh,
                                                 const std::vector<Vec3>& points) {
    require(!mesh.empty(), "mesh_signed_distance: empty mesh");
    const TriangleBvh bvh(mesh);
    std::vector<double> out(points.size());
    for (size_t i = 0; i < points.size(); ++i) {
        const double d = bvh.distance(points[i]);
        out[i] = winding_number(mesh, points[i]) > 0.5 ? -d : d;
    }
    return out;
}

/// Uniform area-weighted surface samples. Returns sampled points and,
/// optionally, the unit normal of the face each sample came from.
inline std::vector<Vec3> sample_surface(const TriMesh& mesh, int count, Rng& rng,
                                        std::vector<Vec3>* normals = nullptr) {
    require(!mesh.empty(), "sample_surface: empty mesh");
    std::vector<double> cdf(mesh.faces.size());
    double acc = 0.0;
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        acc += face_area(mesh, static_cast<int>(f));
        cdf[f] = acc;
    }
    require(acc > 0.0, "sample_surface: zero-area mesh");
    std::vector<Vec3> pts;
    pts.reserve(count);
    if (normals) normals->reserve(count);
    for (int i = 0; i < count; ++i) {
        const double r = rng.uniform() * acc;
        const size_t f = std::lower_bound(cdf.begin(), cdf.end(), r) - cdf.begin();
        const auto& t = mesh.faces[std::min(f, mesh.faces.size() - 1)];
        double u = rng.uniform(), v = rng.uniform();
        if (u + v > 1.0) {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        pts.push_back(mesh.vertices[t[0]] +
                      u * (mesh.vertices[t[1]] - mesh.vertices[t[0]]) +
                      v * (mesh.vertices[t[2]] - mesh.vertices[t[0]]));
        if (normals) normals->push_back(face_normal(mesh, static_cast<int>(std::min(f, mesh.faces.size() - 1))));
    }
    return pts;
}

/// Training points for fitting an implicit field to a mesh: n_near samples
/// jittered around the surface within +-band plus n_uniform samples in
/// [-1,1]^3, each paired with its signed distance. Deterministic per seed.
inline std::vector<std::pair<Vec3, double>> sample_sdf_training_points(
    const TriMesh& mesh, int n_near, int n_uniform, double band, std::uint64_t seed) {
    require(!mesh.empty(), "sample_sdf_training_points: empty mesh");
    require(n_near + n_uniform > 0, "sample_sdf_training_points: no points requested");
    Rng rng(seed);
    std::vector<Vec3> pts;
    pts.reserve(n_near + n_uniform);
    if (n_near > 0) {
        std::vector<Vec3> normals;
        std::vector<Vec3> surf = sample_surface(mesh, n_near, rng, &normals);
        for (int i = 0; i < n_near; ++i)
            pts.push_back(surf[i] + normals[i] * rng.uniform(-band, band));
    }
    for (int i = 0; i < n_uniform; ++i)
        pts.emplace_back(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));

    const TriangleBvh bvh(mesh);
    std::vector<std::pair<Vec3, double>> out;
    out.reserve(pts.size());
    for (const auto& p : pts) {
        const double d = bvh.distance(p);
        out.emplace_back(p, winding_number(mesh, p) > 0.5 ? -d : d);
    }
    return out;
}

}  // namespace layercut
