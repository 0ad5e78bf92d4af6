#include "layercut/seglift.hpp"
#include "layercut/synthetic.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

using namespace layercut;

namespace {

std::vector<ViewMask> masks_for_labels(const TriMesh& scan, const std::vector<Layer>& labels,
                                       int n_views, int size = 96) {
    return make_gt_view_masks(scan, labels, n_views, size);
}

}  // namespace

TEST_CASE("lift: all-zero masks label everything human") {
    const TriMesh sphere = make_icosphere(0.5, 2);
    std::vector<ViewMask> views =
        masks_for_labels(sphere, std::vector<Layer>(sphere.faces.size(), Layer::Human), 8);
    const auto labels = lift_segmentation(sphere, views, 3);
    REQUIRE(labels.size() == sphere.faces.size());
    for (Layer l : labels) CHECK(l == Layer::Human);
}

TEST_CASE("lift: hemisphere masks recover the hemisphere labels") {
    const TriMesh sphere = make_icosphere(0.5, 3);
    std::vector<Layer> gt(sphere.faces.size());
    for (size_t f = 0; f < sphere.faces.size(); ++f) {
        const auto& t = sphere.faces[f];
        const Vec3 c = (sphere.vertices[t[0]] + sphere.vertices[t[1]] + sphere.vertices[t[2]]) / 3.0;
        gt[f] = c.y() > 0.0 ? Layer::Object : Layer::Human;
    }
    const auto views = masks_for_labels(sphere, gt, 20, 128);
    const auto labels = lift_segmentation(sphere, views, 3);
    int correct = 0;
    for (size_t f = 0; f < gt.size(); ++f) correct += labels[f] == gt[f];
    const double accuracy = static_cast<double>(correct) / gt.size();
    CHECK(accuracy >= 0.99);
}

TEST_CASE("lift: unvoted separate component keeps the default label") {
    // A tiny sphere hidden inside a big one receives no votes and has no
    // adjacency path to voted faces.
    TriMesh big = make_icosphere(0.5, 2);
    TriMesh small = make_icosphere(0.02, 1, Vec3(0.05, 0, 0));
    const TriMesh scan = merge_meshes(big, small);
    std::vector<Layer> gt(scan.faces.size(), Layer::Object);
    const auto views = masks_for_labels(scan, gt, 8, 96);
    const auto labels = lift_segmentation(scan, views, 3);
    for (size_t f = 0; f < big.faces.size(); ++f) CHECK(labels[f] == Layer::Object);
    for (size_t f = big.faces.size(); f < scan.faces.size(); ++f) CHECK(labels[f] == Layer::Human);
}

TEST_CASE("lift: unvoted faces inherit the label of their neighbors") {
    // Mask views see only the band from afar; faces of the sphere occluded
    // in every view inherit from adjacent voted faces.
    const SyntheticScene scene = make_sphere_band_scene(2, 24);
    const auto views = masks_for_labels(scene.scan, scene.scan_labels, 16, 128);
    const auto labels = lift_segmentation(scene.scan, views, 3);
    int correct = 0;
    for (size_t f = 0; f < labels.size(); ++f) correct += labels[f] == scene.scan_labels[f];
    CHECK(static_cast<double>(correct) / labels.size() > 0.95);
}

TEST_CASE("lift: a face with no pixel votes inherits from object neighbors") {
    // One triangle faces the lone camera, its edge-neighbor faces away and is
    // never rasterized; the mask covers everything, so the visible face votes
    // object and the unseen one inherits object by adjacency.
    TriMesh m;
    m.vertices = {{-0.5, -0.4, 0.0}, {0.5, -0.4, 0.0}, {0.0, 0.6, 0.0}, {0.0, -1.2, 0.1}};
    m.faces = {{0, 1, 2}, {1, 0, 3}};  // second winds away from the front camera
    ViewMask vm;
    vm.camera.azimuth = 0.0;
    vm.camera.width = vm.camera.height = 64;
    vm.mask = Image(64, 64, 1, 1.0);
    const auto labels = lift_segmentation(m, {vm}, 3);
    CHECK(labels[0] == Layer::Object);
    CHECK(labels[1] == Layer::Object);
}

TEST_CASE("lift: voting is view-order independent") {
    const SyntheticScene scene = make_sphere_band_scene(2, 24);
    auto views = masks_for_labels(scene.scan, scene.scan_labels, 12, 96);
    const auto labels_a = lift_segmentation(scene.scan, views, 3);
    std::reverse(views.begin(), views.end());
    const auto labels_b = lift_segmentation(scene.scan, views, 3);
    CHECK(labels_a == labels_b);
}

TEST_CASE("lift: a view agreeing with current labels never flips a face") {
    const SyntheticScene scene = make_sphere_band_scene(2, 24);
    auto views = masks_for_labels(scene.scan, scene.scan_labels, 12, 96);
    const auto labels_before = lift_segmentation(scene.scan, views, 3);
    auto extra = masks_for_labels(scene.scan, labels_before, 1, 96);
    views.push_back(extra[0]);
    const auto labels_after = lift_segmentation(scene.scan, views, 3);
    CHECK(labels_before == labels_after);
}

TEST_CASE("lift: errors") {
    const TriMesh sphere = make_icosphere(0.5, 1);
    CHECK_THROWS_AS(lift_segmentation(sphere, {}, 3), std::invalid_argument);
    ViewMask bad;
    bad.camera.width = 64;
    bad.camera.height = 64;
    bad.mask = Image(32, 32, 1);
    CHECK_THROWS_AS(lift_segmentation(sphere, {bad}, 3), std::invalid_argument);
}

TEST_CASE("partition: set partition with compact reindexing") {
    const SyntheticScene scene = make_sphere_band_scene(2, 24);
    auto [human, object] = partition_mesh(scene.scan, scene.scan_labels);
    CHECK(human.faces.size() + object.faces.size() == scene.scan.faces.size());
    human.validate();
    object.validate();
    CHECK(human.has_colors() == scene.scan.has_colors());

    auto face_set = [](const TriMesh& m) {
        std::set<std::array<std::array<double, 3>, 3>> s;
        for (const auto& f : m.faces) {
            std::array<std::array<double, 3>, 3> key;
            for (int k = 0; k < 3; ++k)
                key[k] = {m.vertices[f[k]].x(), m.vertices[f[k]].y(), m.vertices[f[k]].z()};
            std::sort(key.begin(), key.end());
            s.insert(key);
        }
        return s;
    };
    CHECK(face_set(merge_meshes(human, object)) == face_set(scene.scan));

    SECTION("all-human labels give (scan, empty)") {
        auto [h2, o2] =
            partition_mesh(scene.scan, std::vector<Layer>(scene.scan.faces.size(), Layer::Human));
        CHECK(h2.faces.size() == scene.scan.faces.size());
        CHECK(o2.empty());
    }
    SECTION("label count mismatch errors") {
        CHECK_THROWS_AS(partition_mesh(scene.scan, std::vector<Layer>(3, Layer::Human)),
                        std::invalid_argument);
    }
}

TEST_CASE("scan ground truth: one-hot channels and compositing oracle") {
    const SyntheticScene scene = make_sphere_band_scene(2, 24);
    Camera cam;
    cam.azimuth = 0.7;
    cam.elevation = 0.1;
    cam.width = cam.height = 96;
    const RenderBuffers gt = render_scan_ground_truth(scene.scan, scene.scan_labels, cam);

    SECTION("segmentation channels sum to the mask") {
        for (size_t i = 0; i < gt.mask.size(); ++i)
            CHECK(static_cast<int>(gt.seg_h[i]) + gt.seg_o[i] == gt.mask[i]);
    }

    SECTION("all-object labels blank the human channel") {
        const RenderBuffers all_o = render_scan_ground_truth(
            scene.scan, std::vector<Layer>(scene.scan.faces.size(), Layer::Object), cam);
        for (size_t i = 0; i < all_o.mask.size(); ++i) CHECK(all_o.seg_h[i] == 0);
    }

    SECTION("matches depth compositing of the partitioned submeshes") {
        auto [human, object] = partition_mesh(scene.scan, scene.scan_labels);
        const RenderBuffers bh = rasterize(human, cam);
        const RenderBuffers bo = rasterize(object, cam);
        for (int r = 0; r < cam.height; ++r)
            for (int c = 0; c < cam.width; ++c) {
                const size_t i = gt.idx(r, c);
                std::uint8_t exp_h = 0, exp_o = 0;
                if (bh.mask[i] && (!bo.mask[i] || bh.depth[i] <= bo.depth[i]))
                    exp_h = 1;
                else if (bo.mask[i])
                    exp_o = 1;
                CHECK(gt.seg_h[i] == exp_h);
                CHECK(gt.seg_o[i] == exp_o);
                if (exp_h || exp_o) {
                    const double exp_depth = exp_h ? bh.depth[i] : bo.depth[i];
                    CHECK(gt.depth[i] == Catch::Approx(exp_depth).margin(1e-9));
                }
            }
    }
}
