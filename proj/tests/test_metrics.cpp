#include "layercut/metrics.hpp"
#include "layercut/synthetic.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace layercut;

namespace {

TriMesh unit_square(double z) {
    TriMesh m;
    m.vertices = {{0, 0, z}, {1, 0, z}, {1, 1, z}, {0, 1, z}};
    m.faces = {{0, 1, 2}, {0, 2, 3}};
    return m;
}

TriMesh unit_cube(const Vec3& origin) {
    TriMesh m;
    for (int i = 0; i < 8; ++i)
        m.vertices.push_back(origin + Vec3((i >> 2) & 1, (i >> 1) & 1, i & 1));
    auto quad = [&](int a, int b, int c, int d) {
        m.faces.push_back({a, b, c});
        m.faces.push_back({a, c, d});
    };
    quad(0, 1, 3, 2);
    quad(4, 6, 7, 5);
    quad(0, 4, 5, 1);
    quad(2, 3, 7, 6);
    quad(0, 2, 6, 4);
    quad(1, 5, 7, 3);
    const Vec3 center = origin + Vec3(0.5, 0.5, 0.5);
    for (auto& f : m.faces) {
        const Vec3 n =
            (m.vertices[f[1]] - m.vertices[f[0]]).cross(m.vertices[f[2]] - m.vertices[f[0]]);
        const Vec3 c = (m.vertices[f[0]] + m.vertices[f[1]] + m.vertices[f[2]]) / 3.0;
        if (n.dot(c - center) < 0.0) std::swap(f[1], f[2]);
    }
    return m;
}

Image const_mask(int size, double value) { return Image(size, size, 1, value); }

}  // namespace

TEST_CASE("chamfer: identity, parallel planes, symmetry") {
    const TriMesh sphere = make_icosphere(0.5, 3);
    CHECK(chamfer(sphere, sphere, 5000, 3) <= 1e-9);

    const TriMesh a = unit_square(0.0);
    const TriMesh b = unit_square(0.25);
    const double d = chamfer(a, b, 20000, 1);
    CHECK(std::abs(d - 0.25) / 0.25 < 0.02);

    const double ab = chamfer(a, b, 20000, 5);
    const double ba = chamfer(b, a, 20000, 5);
    CHECK(ab == Catch::Approx(ba).epsilon(1e-6));

    TriMesh empty;
    CHECK_THROWS_AS(chamfer(empty, sphere, 100, 1), std::invalid_argument);
}

TEST_CASE("chamfer: nonnegative and rigid-motion invariant") {
    const TriMesh a = make_icosphere(0.4, 2);
    const TriMesh b = make_band(0.5, 0.6, 0.2, 24);
    const double base = chamfer(a, b, 20000, 9);
    CHECK(base > 0.0);

    const Mat3 r = axis_angle_to_matrix(Vec3(0.4, -0.8, 0.3));
    const Vec3 t(0.2, -0.7, 1.1);
    TriMesh ar = a, br = b;
    for (auto& v : ar.vertices) v = r * v + t;
    for (auto& v : br.vertices) v = r * v + t;
    const double moved = chamfer(ar, br, 20000, 9);
    CHECK(std::abs(moved - base) <= 1e-6);
}

TEST_CASE("chamfer: unit conversion to centimeters") {
    const TriMesh a = unit_square(0.0);
    const TriMesh b = unit_square(0.1);
    const double in_units = chamfer(a, b, 5000, 2, 1.0);
    const double in_cm = chamfer(a, b, 5000, 2, 100.0);
    CHECK(in_cm == Catch::Approx(100.0 * in_units).epsilon(1e-12));
}

TEST_CASE("voxel iou: identity, disjoint, half-shifted cubes") {
    const TriMesh cube = unit_cube(Vec3::Zero());
    REQUIRE(is_closed(cube));
    CHECK(voxel_iou(cube, cube, 32) == Catch::Approx(1.0));

    const TriMesh far_cube = unit_cube(Vec3(5, 5, 5));
    CHECK(voxel_iou(cube, far_cube, 32) == Catch::Approx(0.0));

    const TriMesh shifted = unit_cube(Vec3(0.5, 0, 0));
    const double iou = voxel_iou(cube, shifted, 64);
    CHECK(std::abs(iou - 1.0 / 3.0) < 0.1 / 3.0);  // within 10% of 1/3
}

TEST_CASE("voxel iou: grid-aligned rigid motion invariance") {
    const TriMesh a = unit_cube(Vec3::Zero());
    const TriMesh b = unit_cube(Vec3(0.5, 0, 0));
    const double base = voxel_iou(a, b, 32);
    TriMesh a2 = a, b2 = b;
    for (auto& v : a2.vertices) v += Vec3(10, -3, 7);
    for (auto& v : b2.vertices) v += Vec3(10, -3, 7);
    CHECK(voxel_iou(a2, b2, 32) == Catch::Approx(base));
}

TEST_CASE("voxel iou: open mesh falls back to winding numbers") {
    const TriMesh open_square = unit_square(0.2);
    const TriMesh cube = unit_cube(Vec3::Zero());
    REQUIRE_FALSE(is_closed(open_square));
    const double iou = voxel_iou(open_square, cube, 16);
    CHECK(iou >= 0.0);
    CHECK(iou <= 1.0);
}

TEST_CASE("por score: analytic cases") {
    const int n_views = 5, size = 32;
    std::vector<Image> input(n_views, const_mask(size, 0.0));
    for (auto& m : input)
        for (int r = 0; r < 16; ++r)
            for (int c = 0; c < 16; ++c) m.at(r, c, 0) = 1.0;

    SECTION("identical edited masks give 1") {
        CHECK(por_score(input, input) == Catch::Approx(1.0));
    }
    SECTION("all-zero edited masks give 0") {
        std::vector<Image> cleared(n_views, const_mask(size, 0.0));
        CHECK(por_score(input, cleared) == Catch::Approx(0.0));
    }
    SECTION("half-cleared masks give 0.5") {
        std::vector<Image> half = input;
        for (auto& m : half)
            for (int r = 0; r < 8; ++r)
                for (int c = 0; c < 16; ++c) m.at(r, c, 0) = 0.0;
        CHECK(por_score(input, half) == Catch::Approx(0.5));
    }
    SECTION("empty input views are skipped") {
        std::vector<Image> some = input;
        some[2] = const_mask(size, 0.0);
        CHECK(por_score(some, some) == Catch::Approx(1.0));
    }
    SECTION("edits outside the input region do not lower the score") {
        std::vector<Image> edited = input;
        for (auto& m : edited)
            for (int r = 20; r < 30; ++r)
                for (int c = 20; c < 30; ++c) m.at(r, c, 0) = 1.0;
        CHECK(por_score(input, edited) == Catch::Approx(1.0));
    }
    SECTION("all-empty inputs error") {
        std::vector<Image> blank(n_views, const_mask(size, 0.0));
        CHECK_THROWS_AS(por_score(blank, blank), std::invalid_argument);
    }
    SECTION("mismatched view counts error") {
        std::vector<Image> fewer(input.begin(), input.end() - 1);
        CHECK_THROWS_AS(por_score(input, fewer), std::invalid_argument);
    }
}
