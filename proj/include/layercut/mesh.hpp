#pragma once

#include "layercut/math.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace layercut {

enum class Layer : std::uint8_t { Human = 0, Object = 1 };

/// Indexed triangle mesh. Colors (per vertex, RGB in [0,1]) and layer
/// labels (per face) are optional and empty when absent.
struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;
    std::vector<Vec3> colors;       // empty or size == vertices.size()
    std::vector<Layer> labels;      // empty or size == faces.size()

    bool empty() const { return faces.empty(); }
    bool has_colors() const { return !colors.empty(); }
    bool has_labels() const { return !labels.empty(); }

    void validate() const {
        const int nv = static_cast<int>(vertices.size());
        for (const auto& f : faces) {
            require(f[0] >= 0 && f[0] < nv && f[1] >= 0 && f[1] < nv && f[2] >= 0 && f[2] < nv,
                    "TriMesh: face index out of range");
            require(f[0] != f[1] && f[1] != f[2] && f[0] != f[2],
                    "TriMesh: degenerate face with repeated index");
        }
        require(colors.empty() || colors.size() == vertices.size(),
                "TriMesh: color count != vertex count");
        require(labels.empty() || labels.size() == faces.size(),
                "TriMesh: label count != face count");
    }
};

inline Vec3 face_normal(const TriMesh& m, int f) {
    const auto& t = m.faces[f];
    const Vec3 u = (m.vertices[t[1]] - m.vertices[t[0]]).cross(m.vertices[t[2]] - m.vertices[t[0]]);
    const double n = u.norm();
    return n > 0.0 ? Vec3(u / n) : Vec3(0, 0, 0);
}

inline double face_area(const TriMesh& m, int f) {
    const auto& t = m.faces[f];
    return 0.5 * (m.vertices[t[1]] - m.vertices[t[0]]).cross(m.vertices[t[2]] - m.vertices[t[0]]).norm();
}

/// Area-weighted per-vertex normals (normalized; zero for isolated vertices).
inline std::vector<Vec3> vertex_normals(const TriMesh& m) {
    std::vector<Vec3> n(m.vertices.size(), Vec3::Zero());
    for (size_t f = 0; f < m.faces.size(); ++f) {
        const auto& t = m.faces[f];
        const Vec3 u = (m.vertices[t[1]] - m.vertices[t[0]]).cross(m.vertices[t[2]] - m.vertices[t[0]]);
        n[t[0]] += u;
        n[t[1]] += u;
        n[t[2]] += u;
    }
    for (auto& v : n) {
        const double len = v.norm();
        if (len > 0.0) v /= len;
    }
    return n;
}

/// Face adjacency over shared edges. adj[f] lists faces sharing an edge with f.
inline std::vector<std::vector<int>> face_adjacency(const TriMesh& m) {
    std::map<std::pair<int, int>, std::vector<int>> edge_faces;
    for (size_t f = 0; f < m.faces.size(); ++f) {
        const auto& t = m.faces[f];
        for (int e = 0; e < 3; ++e) {
            int a = t[e], b = t[(e + 1) % 3];
            if (a > b) std::swap(a, b);
            edge_faces[{a, b}].push_back(static_cast<int>(f));
        }
    }
    std::vector<std::vector<int>> adj(m.faces.size());
    for (const auto& [edge, fs] : edge_faces) {
        for (size_t i = 0; i < fs.size(); ++i)
            for (size_t j = 0; j < fs.size(); ++j)
                if (i != j) adj[fs[i]].push_back(fs[j]);
    }
    for (auto& a : adj) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    return adj;
}

/// Every edge shared by exactly two faces.
inline bool is_closed(const TriMesh& m) {
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& t : m.faces) {
        for (int e = 0; e < 3; ++e) {
            int a = t[e], b = t[(e + 1) % 3];
            if (a > b) std::swap(a, b);
            ++edge_count[{a, b}];
        }
    }
    for (const auto& [edge, c] : edge_count)
        if (c != 2) return false;
    return !m.faces.empty();
}

inline double total_area(const TriMesh& m) {
    double a = 0.0;
    for (size_t f = 0; f < m.faces.size(); ++f) a += face_area(m, static_cast<int>(f));
    return a;
}

inline std::pair<Vec3, Vec3> bounding_box(const TriMesh& m) {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
    Vec3 hi = Vec3::Constant(std::numeric_limits<double>::lowest());
    for (const auto& v : m.vertices) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    return {lo, hi};
}

/// Concatenate a human layer and an object layer into a composite mesh.
/// Object face indices are offset past the human vertices; faces are
/// labeled Human / Object respectively. Colors are kept when both inputs
/// carry them (missing side filled with gray).
inline TriMesh merge_meshes(const TriMesh& human, const TriMesh& object) {
    TriMesh out;
    out.vertices = human.vertices;
    out.vertices.insert(out.vertices.end(), object.vertices.begin(), object.vertices.end());
    out.faces = human.faces;
    const int off = static_cast<int>(human.vertices.size());
    for (const auto& f : object.faces)
        out.faces.push_back({f[0] + off, f[1] + off, f[2] + off});
    out.labels.assign(human.faces.size(), Layer::Human);
    out.labels.insert(out.labels.end(), object.faces.size(), Layer::Object);
    if (human.has_colors() || object.has_colors()) {
        out.colors.assign(out.vertices.size(), Vec3(0.5, 0.5, 0.5));
        if (human.has_colors())
            std::copy(human.colors.begin(), human.colors.end(), out.colors.begin());
        if (object.has_colors())
            std::copy(object.colors.begin(), object.colors.end(), out.colors.begin() + off);
    }
    return out;
}

}  // namespace layercut
