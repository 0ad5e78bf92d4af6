#include "layercut/mesh_query.hpp"
#include "layercut/tetgrid.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>

using namespace layercut;

namespace {

ImplicitField sphere_field(const TetGrid& grid, double radius) {
    ImplicitField f = ImplicitField::zeros(grid);
    for (size_t i = 0; i < grid.nodes.size(); ++i) f.sdf[i] = grid.nodes[i].norm() - radius;
    return f;
}

TetGrid single_tet_grid() {
    TetGrid g;
    g.nodes = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    g.tets = {{0, 1, 2, 3}};
    if (detail::tet_signed_volume(g.nodes[0], g.nodes[1], g.nodes[2], g.nodes[3]) < 0.0)
        std::swap(g.tets[0][2], g.tets[0][3]);
    g.min_incident_edge.assign(4, 1.0);
    return g;
}

}  // namespace

TEST_CASE("regular grid: counts and cell structure") {
    const TetGrid g1 = build_regular_grid(1);
    CHECK(g1.nodes.size() == 8);
    CHECK(g1.tets.size() == 6);

    const TetGrid g2 = build_regular_grid(2);
    CHECK(g2.nodes.size() == 27);
    CHECK(g2.tets.size() == 48);

    CHECK_THROWS_AS(build_regular_grid(0), std::invalid_argument);
    CHECK_THROWS_AS(build_regular_grid(300), std::invalid_argument);
}

TEST_CASE("regular grid: invariants") {
    const TetGrid g = build_regular_grid(4);
    for (const auto& t : g.tets) {
        for (int v : t) REQUIRE(v < static_cast<int>(g.nodes.size()));
        CHECK(detail::tet_signed_volume(g.nodes[t[0]], g.nodes[t[1]], g.nodes[t[2]],
                                        g.nodes[t[3]]) > 0.0);
    }
    for (const auto& n : g.nodes) {
        CHECK(n.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
    }
    // Axis edges dominate the incident-edge minimum on a cube split.
    for (double e : g.min_incident_edge) CHECK(e == Catch::Approx(2.0 / 4.0));
}

TEST_CASE("marching tetrahedra: sixteen sign cases") {
    const TetGrid g = single_tet_grid();
    for (int mask = 0; mask < 16; ++mask) {
        ImplicitField f = ImplicitField::zeros(g);
        int negatives = 0;
        for (int v = 0; v < 4; ++v) {
            const bool neg = (mask >> v) & 1;
            f.sdf[v] = neg ? -1.0 : 1.0;
            negatives += neg;
        }
        const TriMesh mesh = marching_tetrahedra(g, f);
        const size_t expected = (negatives == 0 || negatives == 4) ? 0
                               : (negatives == 2)                  ? 2
                                                                   : 1;
        INFO("sign mask " << mask);
        CHECK(mesh.faces.size() == expected);
        // Faces oriented toward positive sdf.
        for (size_t fi = 0; fi < mesh.faces.size(); ++fi) {
            Vec3 centroid_pos = Vec3::Zero(), centroid_neg = Vec3::Zero();
            int np = 0, nn = 0;
            for (int v = 0; v < 4; ++v)
                if (f.sdf[v] > 0) {
                    centroid_pos += g.nodes[v];
                    ++np;
                } else {
                    centroid_neg += g.nodes[v];
                    ++nn;
                }
            const Vec3 toward = centroid_pos / np - centroid_neg / nn;
            CHECK(face_normal(mesh, static_cast<int>(fi)).dot(toward) > 0.0);
        }
    }
}

TEST_CASE("marching tetrahedra: constant positive field is empty") {
    const TetGrid g = build_regular_grid(4);
    ImplicitField f = ImplicitField::zeros(g, 1.0);
    CHECK(marching_tetrahedra(g, f).empty());
}

TEST_CASE("marching tetrahedra: sphere vertices on the level set") {
    const TetGrid g = build_regular_grid(32);
    const ImplicitField f = sphere_field(g, 0.5);
    const TriMesh mesh = marching_tetrahedra(g, f);
    REQUIRE(mesh.faces.size() > 500);
    for (const auto& v : mesh.vertices) CHECK(std::abs(v.norm() - 0.5) < 2.0 / 32.0);
    CHECK(is_closed(mesh));
    // Normals point outward (toward positive sdf).
    double outward = 0.0;
    for (size_t fi = 0; fi < mesh.faces.size(); ++fi) {
        const auto& t = mesh.faces[fi];
        const Vec3 c = (mesh.vertices[t[0]] + mesh.vertices[t[1]] + mesh.vertices[t[2]]) / 3.0;
        outward += face_normal(mesh, static_cast<int>(fi)).dot(c.normalized());
    }
    CHECK(outward / static_cast<double>(mesh.faces.size()) > 0.9);
}

TEST_CASE("marching tetrahedra: deterministic output") {
    const TetGrid g = build_regular_grid(12);
    const ImplicitField f = sphere_field(g, 0.4);
    const MtMesh a = marching_tetrahedra_ext(g, f);
    const MtMesh b = marching_tetrahedra_ext(g, f);
    REQUIRE(a.mesh.vertices.size() == b.mesh.vertices.size());
    for (size_t i = 0; i < a.mesh.vertices.size(); ++i)
        CHECK(a.mesh.vertices[i] == b.mesh.vertices[i]);  // bitwise
    CHECK(a.mesh.faces == b.mesh.faces);
}

TEST_CASE("marching tetrahedra: sign symmetry") {
    const TetGrid g = build_regular_grid(8);
    ImplicitField f = sphere_field(g, 0.45);
    ImplicitField fneg = f;
    fneg.sdf = -f.sdf;

    const TriMesh m1 = marching_tetrahedra(g, f);
    const TriMesh m2 = marching_tetrahedra(g, fneg);
    REQUIRE(m1.vertices.size() == m2.vertices.size());

    std::set<std::array<double, 3>> v1, v2;
    for (const auto& v : m1.vertices) v1.insert({v.x(), v.y(), v.z()});
    for (const auto& v : m2.vertices) v2.insert({v.x(), v.y(), v.z()});
    CHECK(v1 == v2);

    // Every face appears in both with opposite winding parity.
    auto face_key = [](const TriMesh& m, const std::array<int, 3>& f) {
        std::array<std::array<double, 3>, 3> k;
        for (int i = 0; i < 3; ++i)
            k[i] = {m.vertices[f[i]].x(), m.vertices[f[i]].y(), m.vertices[f[i]].z()};
        // Parity of the permutation that sorts the triple.
        int parity = 0;
        std::array<int, 3> order = {0, 1, 2};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2 - i; ++j)
                if (k[order[j + 1]] < k[order[j]]) {
                    std::swap(order[j], order[j + 1]);
                    parity ^= 1;
                }
        std::array<std::array<double, 3>, 3> sorted = {k[order[0]], k[order[1]], k[order[2]]};
        return std::make_pair(sorted, parity);
    };
    std::map<std::array<std::array<double, 3>, 3>, int> parity1;
    for (const auto& f : m1.faces) {
        auto [key, parity] = face_key(m1, f);
        parity1[key] = parity;
    }
    for (const auto& f : m2.faces) {
        auto [key, parity] = face_key(m2, f);
        REQUIRE(parity1.count(key) == 1);
        CHECK(parity1[key] != parity);
    }
}

TEST_CASE("marching tetrahedra: exact zero sdf is nudged, never fails") {
    const TetGrid g = single_tet_grid();
    ImplicitField f = ImplicitField::zeros(g);
    f.sdf << 0.0, 1.0, 1.0, -1.0;
    TriMesh mesh;
    REQUIRE_NOTHROW(mesh = marching_tetrahedra(g, f));
    CHECK(mesh.faces.size() == 1);  // node 0 counts as positive after the nudge
    ImplicitField bad = f;
    bad.sdf.resize(3);
    CHECK_THROWS_AS(marching_tetrahedra(g, bad), std::invalid_argument);
}

TEST_CASE("mt vertex jacobian: symmetry midpoint and finite differences") {
    const TetGrid g = single_tet_grid();
    ImplicitField f = ImplicitField::zeros(g);
    f.sdf << -1.0, 1.0, 1.0, 1.0;

    // s_a = -s_b with zero offsets: crossing at the edge midpoint.
    const MtMesh mt = marching_tetrahedra_ext(g, f);
    for (size_t v = 0; v < mt.mesh.vertices.size(); ++v) {
        const auto [a, b] = mt.vertex_edges[v];
        CHECK((mt.mesh.vertices[v] - (g.nodes[a] + g.nodes[b]) / 2.0).norm() < 1e-12);
    }

    const auto jac = mt_vertex_jacobian(g, f, 0, 1);
    CHECK(jac.dv_doffset_a == Catch::Approx(0.5));
    CHECK(jac.dv_doffset_b == Catch::Approx(0.5));

    CHECK_THROWS_AS(mt_vertex_jacobian(g, f, 1, 2), std::invalid_argument);  // no sign change

    // Finite-difference oracle over random edge configurations.
    Rng rng(42);
    int checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        TetGrid gg = single_tet_grid();
        for (auto& n : gg.nodes) n += 0.2 * rng.normal3();
        ImplicitField ff = ImplicitField::zeros(gg);
        ff.sdf[0] = -rng.uniform(0.2, 1.5);
        ff.sdf[1] = rng.uniform(0.2, 1.5);
        ff.offset[0] = 0.1 * rng.normal3();
        ff.offset[1] = 0.1 * rng.normal3();

        const auto j = mt_vertex_jacobian(gg, ff, 0, 1);
        auto vertex_of = [&](const ImplicitField& field) {
            const Vec3 xa = gg.nodes[0] + field.offset[0];
            const Vec3 xb = gg.nodes[1] + field.offset[1];
            return Vec3((xa * field.sdf[1] - xb * field.sdf[0]) / (field.sdf[1] - field.sdf[0]));
        };
        const double h = 1e-4;
        for (int which : {0, 1}) {
            ImplicitField fp = ff, fm = ff;
            fp.sdf[which] += h;
            fm.sdf[which] -= h;
            const Vec3 fd = (vertex_of(fp) - vertex_of(fm)) / (2.0 * h);
            const Vec3 an = which == 0 ? j.dv_dsa : j.dv_dsb;
            REQUIRE((fd - an).norm() <= 1e-3 * std::max(1e-8, fd.norm()));
        }
        ++checked;
    }
    CHECK(checked == 1000);
}

TEST_CASE("offset clamp enforces the inversion bound") {
    const TetGrid g = build_regular_grid(4);
    ImplicitField f = sphere_field(g, 0.5);
    Rng rng(3);
    for (auto& o : f.offset) o = rng.normal3();  // far beyond the bound
    CHECK_THROWS_AS(f.validate(g), std::invalid_argument);
    clamp_offsets(g, f);
    REQUIRE_NOTHROW(f.validate(g));
    for (size_t i = 0; i < f.offset.size(); ++i)
        CHECK(f.offset[i].norm() <= 0.45 * g.min_incident_edge[i] + 1e-12);
    // Offsets already inside the ball are untouched.
    ImplicitField small = sphere_field(g, 0.5);
    small.offset[3] = Vec3(0.01, 0.0, 0.0);
    clamp_offsets(g, small);
    CHECK(small.offset[3] == Vec3(0.01, 0.0, 0.0));
}

TEST_CASE("trilinear field sampling") {
    const TetGrid g = build_regular_grid(16);
    ImplicitField f = sphere_field(g, 0.5);
    // Exact at nodes, interpolating between them.
    CHECK(sample_field(g, f, g.nodes[0]) == Catch::Approx(f.sdf[0]));
    const Vec3 q(0.1, -0.2, 0.3);
    CHECK(sample_field(g, f, q) == Catch::Approx(q.norm() - 0.5).margin(0.03));
}
