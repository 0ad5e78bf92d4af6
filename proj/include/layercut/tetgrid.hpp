#pragma once

#include "layercut/math.hpp"
#include "layercut/mesh.hpp"

#include <cstdint>
#include <unordered_map>
#include <vector>

namespace layercut {

/// Tetrahedral grid over the canonical cube [-1,1]^3. Nodes and tets are
/// immutable after construction; every tet is positively oriented.
struct TetGrid {
    std::vector<Vec3> nodes;
    std::vector<std::array<int, 4>> tets;
    int resolution = 0;                     // cells per axis (regular grids)
    std::vector<double> min_incident_edge;  // per node, for the offset bound

    int node_index(int i, int j, int k) const {
        const int n = resolution + 1;
        return (i * n + j) * n + k;
    }
};

namespace detail {

inline double tet_signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    return (b - a).cross(c - a).dot(d - a) / 6.0;
}

}  // namespace detail

/// Regular grid: the cube [-1,1]^3 split into resolution^3 cells, each cell
/// into 6 tets sharing the main diagonal. Deterministic node/tet ordering.
inline TetGrid build_regular_grid(int resolution) {
    require(resolution >= 1 && resolution <= 256, "build_regular_grid: resolution out of range");
    TetGrid grid;
    grid.resolution = resolution;
    const int n = resolution + 1;
    grid.nodes.reserve(static_cast<size_t>(n) * n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                grid.nodes.emplace_back(-1.0 + 2.0 * i / resolution,
                                        -1.0 + 2.0 * j / resolution,
                                        -1.0 + 2.0 * k / resolution);

    // Six tets around the c000-c111 diagonal of each cell.
    static const int kCellTets[6][4] = {
        {0b000, 0b100, 0b110, 0b111}, {0b000, 0b110, 0b010, 0b111},
        {0b000, 0b010, 0b011, 0b111}, {0b000, 0b011, 0b001, 0b111},
        {0b000, 0b001, 0b101, 0b111}, {0b000, 0b101, 0b100, 0b111}};

    grid.tets.reserve(static_cast<size_t>(resolution) * resolution * resolution * 6);
    for (int i = 0; i < resolution; ++i)
        for (int j = 0; j < resolution; ++j)
            for (int k = 0; k < resolution; ++k)
                for (const auto& ct : kCellTets) {
                    std::array<int, 4> tet;
                    for (int v = 0; v < 4; ++v) {
                        const int b = ct[v];
                        tet[v] = grid.node_index(i + ((b >> 2) & 1), j + ((b >> 1) & 1), k + (b & 1));
                    }
                    if (detail::tet_signed_volume(grid.nodes[tet[0]], grid.nodes[tet[1]],
                                                  grid.nodes[tet[2]], grid.nodes[tet[3]]) < 0.0)
                        std::swap(tet[2], tet[3]);
                    grid.tets.push_back(tet);
                }

    grid.min_incident_edge.assign(grid.nodes.size(), std::numeric_limits<double>::max());
    for (const auto& t : grid.tets)
        for (int a = 0; a < 4; ++a)
            for (int b = a + 1; b < 4; ++b) {
                const double len = (grid.nodes[t[a]] - grid.nodes[t[b]]).norm();
                grid.min_incident_edge[t[a]] = std::min(grid.min_incident_edge[t[a]], len);
                grid.min_incident_edge[t[b]] = std::min(grid.min_incident_edge[t[b]], len);
            }
    return grid;
}

/// Per-node field parameters: signed distance and node displacement.
/// Offsets are bounded by 0.45x the node's minimum incident edge length so
/// no tet can invert.
struct ImplicitField {
    VecX sdf;
    std::vector<Vec3> offset;

    static ImplicitField zeros(const TetGrid& grid, double initial_sdf = 1.0) {
        ImplicitField f;
        f.sdf = VecX::Constant(static_cast<Eigen::Index>(grid.nodes.size()), initial_sdf);
        f.offset.assign(grid.nodes.size(), Vec3::Zero());
        return f;
    }

    void validate(const TetGrid& grid) const {
        require(static_cast<size_t>(sdf.size()) == grid.nodes.size() &&
                    offset.size() == grid.nodes.size(),
                "ImplicitField: size mismatch with grid");
        for (Eigen::Index i = 0; i < sdf.size(); ++i)
            require(std::isfinite(sdf[i]), "ImplicitField: non-finite sdf");
        for (size_t i = 0; i < offset.size(); ++i) {
            require(offset[i].allFinite(), "ImplicitField: non-finite offset");
            require(offset[i].norm() <= 0.45 * grid.min_incident_edge[i] + 1e-12,
                    "ImplicitField: offset exceeds inversion bound");
        }
    }
};

/// Project offsets back onto the no-inversion ball. Called after each
/// optimizer step.
inline void clamp_offsets(const TetGrid& grid, ImplicitField& field) {
    for (size_t i = 0; i < field.offset.size(); ++i) {
        const double bound = 0.45 * grid.min_incident_edge[i];
        const double len = field.offset[i].norm();
        if (len > bound) field.offset[i] *= bound / len;
    }
}

/// Marching Tetrahedra output plus the per-vertex crossing-edge records
/// needed to push surface gradients back into the field parameters.
struct MtMesh {
    TriMesh mesh;
    struct EdgeRef {
        int a, b;  // grid node indices, a < b
    };
    std::vector<EdgeRef> vertex_edges;  // one per output vertex
};

/// Partial derivatives of a crossing vertex
///   v = (x'_a s_b - x'_b s_a) / (s_b - s_a),  x' = node + offset
/// with respect to the endpoint field parameters. The offset Jacobians are
/// scalar multiples of the identity.
struct MtVertexJacobian {
    Vec3 dv_dsa, dv_dsb;
    double dv_doffset_a, dv_doffset_b;
};

inline MtVertexJacobian mt_vertex_jacobian(const TetGrid& grid, const ImplicitField& field,
                                           int a, int b) {
    require(a >= 0 && b >= 0 && a < static_cast<int>(grid.nodes.size()) &&
                b < static_cast<int>(grid.nodes.size()),
            "mt_vertex_jacobian: node index out of range");
    const double sa = field.sdf[a], sb = field.sdf[b];
    require(sa * sb < 0.0, "mt_vertex_jacobian: edge has no sign change");
    const Vec3 xa = grid.nodes[a] + field.offset[a];
    const Vec3 xb = grid.nodes[b] + field.offset[b];
    const double denom = sb - sa;
    MtVertexJacobian j;
    j.dv_dsa = sb * (xa - xb) / (denom * denom);
    j.dv_dsb = -sa * (xa - xb) / (denom * denom);
    j.dv_doffset_a = sb / denom;
    j.dv_doffset_b = -sa / denom;
    return j;
}

/// Differentiable Marching Tetrahedra. Extracts the zero level set of the
/// field as a triangle mesh with normals oriented toward positive sdf.
/// Output is deterministic: vertices appear in first-crossing order over the
/// fixed tet traversal, shared crossing edges yield a single vertex.
inline MtMesh marching_tetrahedra_ext(const TetGrid& grid, const ImplicitField& field) {
    require(static_cast<size_t>(field.sdf.size()) == grid.nodes.size() &&
                field.offset.size() == grid.nodes.size(),
            "marching_tetrahedra: field size mismatch");

    // Exact zeros are nudged positive so every tet falls in a generic case.
    VecX s = field.sdf;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] == 0.0) s[i] = 1e-8;

    MtMesh out;
    std::unordered_map<std::uint64_t, int> edge_vertex;
    edge_vertex.reserve(grid.tets.size());

    auto deformed = [&](int n) { return Vec3(grid.nodes[n] + field.offset[n]); };

    auto crossing_vertex = [&](int na, int nb) -> int {
        int a = na, b = nb;
        if (a > b) std::swap(a, b);
        const std::uint64_t key =
            (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
            static_cast<std::uint32_t>(b);
        auto it = edge_vertex.find(key);
        if (it != edge_vertex.end()) return it->second;
        const double sa = s[a], sb = s[b];
        const Vec3 v = (deformed(a) * sb - deformed(b) * sa) / (sb - sa);
        const int idx = static_cast<int>(out.mesh.vertices.size());
        out.mesh.vertices.push_back(v);
        out.vertex_edges.push_back({a, b});
        edge_vertex.emplace(key, idx);
        return idx;
    };

    auto emit = [&](int v0, int v1, int v2, const Vec3& toward_positive) {
        const Vec3& p0 = out.mesh.vertices[v0];
        const Vec3& p1 = out.mesh.vertices[v1];
        const Vec3& p2 = out.mesh.vertices[v2];
        const Vec3 n = (p1 - p0).cross(p2 - p0);
        if (n.dot(toward_positive) >= 0.0)
            out.mesh.faces.push_back({v0, v1, v2});
        else
            out.mesh.faces.push_back({v0, v2, v1});
    };

    for (const auto& tet : grid.tets) {
        int neg[4], pos[4];
        int nn = 0, np = 0;
        for (int v = 0; v < 4; ++v) {
            if (s[tet[v]] < 0.0)
                neg[nn++] = tet[v];
            else
                pos[np++] = tet[v];
        }
        if (nn == 0 || np == 0) continue;

        if (nn == 1 || np == 1) {
            // Lone vertex: one triangle on the three incident crossing edges.
            const int lone = (nn == 1) ? neg[0] : pos[0];
            const int* others = (nn == 1) ? pos : neg;
            const int v0 = crossing_vertex(lone, others[0]);
            const int v1 = crossing_vertex(lone, others[1]);
            const int v2 = crossing_vertex(lone, others[2]);
            Vec3 centroid_pos = Vec3::Zero(), centroid_neg = Vec3::Zero();
            for (int i = 0; i < np; ++i) centroid_pos += deformed(pos[i]);
            for (int i = 0; i < nn; ++i) centroid_neg += deformed(neg[i]);
            emit(v0, v1, v2, centroid_pos / np - centroid_neg / nn);
        } else {
            // Two-two split: quad over the four crossing edges, fanned along
            // a fixed diagonal.
            const int v00 = crossing_vertex(neg[0], pos[0]);
            const int v01 = crossing_vertex(neg[0], pos[1]);
            const int v11 = crossing_vertex(neg[1], pos[1]);
            const int v10 = crossing_vertex(neg[1], pos[0]);
            const Vec3 toward = (deformed(pos[0]) + deformed(pos[1])) / 2.0 -
                                (deformed(neg[0]) + deformed(neg[1])) / 2.0;
            emit(v00, v01, v11, toward);
            emit(v00, v11, v10, toward);
        }
    }
    return out;
}

inline TriMesh marching_tetrahedra(const TetGrid& grid, const ImplicitField& field) {
    return marching_tetrahedra_ext(grid, field).mesh;
}

/// Trilinear interpolation stencil of a point in a regular grid: the 8 cell
/// corner nodes and their weights. Points outside [-1,1]^3 clamp to the
/// boundary cell.
struct TrilinearStencil {
    std::array<int, 8> nodes;
    std::array<double, 8> weights;
};

inline TrilinearStencil trilinear_stencil(const TetGrid& grid, const Vec3& p) {
    require(grid.resolution > 0, "trilinear_stencil: needs a regular grid");
    const int res = grid.resolution;
    TrilinearStencil st;
    int cell[3];
    double frac[3];
    for (int k = 0; k < 3; ++k) {
        const double x = (p[k] + 1.0) * 0.5 * res;
        int c = static_cast<int>(std::floor(x));
        c = std::clamp(c, 0, res - 1);
        cell[k] = c;
        frac[k] = std::clamp(x - c, 0.0, 1.0);
    }
    int n = 0;
    for (int di = 0; di < 2; ++di)
        for (int dj = 0; dj < 2; ++dj)
            for (int dk = 0; dk < 2; ++dk) {
                st.nodes[n] = grid.node_index(cell[0] + di, cell[1] + dj, cell[2] + dk);
                st.weights[n] = (di ? frac[0] : 1.0 - frac[0]) * (dj ? frac[1] : 1.0 - frac[1]) *
                                (dk ? frac[2] : 1.0 - frac[2]);
                ++n;
            }
    return st;
}

inline double sample_field(const TetGrid& grid, const ImplicitField& field, const Vec3& p) {
    const TrilinearStencil st = trilinear_stencil(grid, p);
    double v = 0.0;
    for (int i = 0; i < 8; ++i) v += st.weights[i] * field.sdf[st.nodes[i]];
    return v;
}

}  // namespace layercut
