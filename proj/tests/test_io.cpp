#include "layercut/io.hpp"
#include "layercut/synthetic.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

using namespace layercut;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("layercut_test_" + std::to_string(Catch::rngSeed()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("obj round trip with vertex colors") {
    TempDir dir;
    SyntheticScene scene = make_sphere_band_scene(1, 12);
    const TriMesh& mesh = scene.gt_human_c;
    save_obj(dir.file("m.obj"), mesh);
    const TriMesh loaded = load_obj(dir.file("m.obj"));
    REQUIRE(loaded.vertices.size() == mesh.vertices.size());
    REQUIRE(loaded.faces == mesh.faces);
    REQUIRE(loaded.has_colors());
    for (size_t v = 0; v < mesh.vertices.size(); ++v) {
        CHECK((loaded.vertices[v] - mesh.vertices[v]).norm() < 1e-7);
        CHECK((loaded.colors[v] - mesh.colors[v]).norm() < 1e-7);
    }

    TriMesh plain = mesh;
    plain.colors.clear();
    save_obj(dir.file("p.obj"), plain);
    CHECK_FALSE(load_obj(dir.file("p.obj")).has_colors());

    CHECK_THROWS_AS(load_obj(dir.file("missing.obj")), IoError);
}

TEST_CASE("ply round trip with colors and labels") {
    TempDir dir;
    SyntheticScene scene = make_sphere_band_scene(1, 12);
    TriMesh mesh = scene.scan;
    mesh.labels = scene.scan_labels;
    save_ply(dir.file("m.ply"), mesh);
    const TriMesh loaded = load_ply(dir.file("m.ply"));
    REQUIRE(loaded.faces == mesh.faces);
    REQUIRE(loaded.labels == mesh.labels);
    REQUIRE(loaded.has_colors());
    for (size_t v = 0; v < mesh.vertices.size(); ++v) {
        CHECK((loaded.vertices[v] - mesh.vertices[v]).norm() < 1e-6);
        CHECK((loaded.colors[v] - mesh.colors[v]).cwiseAbs().maxCoeff() < 1.0 / 255.0 + 1e-9);
    }

    std::ofstream bad(dir.file("bad.ply"));
    bad << "not a ply\n";
    bad.close();
    CHECK_THROWS_AS(load_ply(dir.file("bad.ply")), IoError);
}

TEST_CASE("checkpoint round trip and magic validation") {
    TempDir dir;
    const TetGrid grid = build_regular_grid(8);
    ImplicitField field = ImplicitField::zeros(grid);
    Rng rng(4);
    for (Eigen::Index i = 0; i < field.sdf.size(); ++i) field.sdf[i] = rng.normal();
    for (auto& o : field.offset) o = 0.01 * rng.normal3();

    save_checkpoint(dir.file("f.lctg"), grid, field);

    // Exact on-disk layout: magic, u32 resolution, f32 sdf, f32 offsets.
    std::ifstream in(dir.file("f.lctg"), std::ios::binary);
    char magic[4];
    in.read(magic, 4);
    CHECK(std::string(magic, 4) == "LCTG");
    std::uint32_t res;
    in.read(reinterpret_cast<char*>(&res), 4);
    CHECK(res == 8);
    in.seekg(0, std::ios::end);
    CHECK(static_cast<size_t>(in.tellg()) == 8 + grid.nodes.size() * 4 * 4);

    auto [res2, loaded] = load_checkpoint(dir.file("f.lctg"));
    CHECK(res2 == 8);
    REQUIRE(loaded.sdf.size() == field.sdf.size());
    for (Eigen::Index i = 0; i < field.sdf.size(); ++i)
        CHECK(loaded.sdf[i] == Catch::Approx(field.sdf[i]).margin(1e-6));
    for (size_t i = 0; i < field.offset.size(); ++i)
        CHECK((loaded.offset[i] - field.offset[i]).norm() < 1e-6);

    std::ofstream bad(dir.file("bad.lctg"), std::ios::binary);
    bad << "NOPE";
    bad.close();
    CHECK_THROWS_AS(load_checkpoint(dir.file("bad.lctg")), IoError);
}

TEST_CASE("label file round trip") {
    TempDir dir;
    const std::vector<Layer> labels = {Layer::Human, Layer::Object, Layer::Object, Layer::Human};
    save_labels(dir.file("l.txt"), labels);
    CHECK(load_labels(dir.file("l.txt")) == labels);

    std::ofstream bad(dir.file("bad.txt"));
    bad << "human\nbanana\n";
    bad.close();
    CHECK_THROWS_AS(load_labels(dir.file("bad.txt")), IoError);
}

TEST_CASE("rig file round trip preserves skinning behavior") {
    TempDir dir;
    const Rig rig = make_capsule_rig();
    save_rig(dir.path.string(), "caps", rig);
    const Rig loaded = load_rig(dir.file("caps.rig.json"));

    REQUIRE(loaded.bone_count() == rig.bone_count());
    REQUIRE(loaded.vertex_count() == rig.vertex_count());
    CHECK(loaded.openpose_map == rig.openpose_map);
    for (int b = 0; b < rig.bone_count(); ++b) {
        CHECK(loaded.bones[b].parent == rig.bones[b].parent);
        CHECK(loaded.bones[b].name == rig.bones[b].name);
        CHECK((loaded.bones[b].rest_local - rig.bones[b].rest_local).norm() < 1e-12);
    }

    // Skinning agrees to f32 precision through the round trip.
    Pose pose = Pose::rest(rig.bone_count());
    pose.theta[1] = Vec3(0, 0, 0.4);
    pose.beta[0] = 0.5;
    const TriMesh a = lbs_forward(rig.template_mesh, rig, pose);
    const TriMesh b = lbs_forward(loaded.template_mesh, loaded, pose);
    REQUIRE(a.vertices.size() == b.vertices.size());
    for (size_t v = 0; v < a.vertices.size(); ++v)
        CHECK((a.vertices[v] - b.vertices[v]).norm() < 1e-5);
}

TEST_CASE("pose json round trip") {
    TempDir dir;
    Pose pose = Pose::rest(12);
    pose.theta[3] = Vec3(0.1, -0.2, 0.3);
    pose.beta[2] = 1.5;
    pose.psi[9] = -0.25;
    save_pose(dir.file("p.json"), pose);
    const Pose loaded = load_pose(dir.file("p.json"));
    REQUIRE(loaded.theta.size() == pose.theta.size());
    for (size_t i = 0; i < pose.theta.size(); ++i)
        CHECK((loaded.theta[i] - pose.theta[i]).norm() < 1e-12);
    CHECK((loaded.beta - pose.beta).norm() < 1e-12);
    CHECK((loaded.psi - pose.psi).norm() < 1e-12);
}

TEST_CASE("png round trip and view manifest") {
    TempDir dir;
    Image img(24, 16, 1);
    Rng rng(5);
    for (auto& v : img.data) v = rng.uniform(0.0, 1.0);
    write_png(dir.file("m.png"), img);
    const Image back = read_png_gray(dir.file("m.png"));
    REQUIRE(back.height == 24);
    REQUIRE(back.width == 16);
    for (size_t i = 0; i < img.data.size(); ++i)
        CHECK(back.data[i] == Catch::Approx(img.data[i]).margin(1.0 / 255.0));

    const SyntheticScene scene = make_sphere_band_scene(1, 12);
    const auto views = make_gt_view_masks(scene.scan, scene.scan_labels, 4, 32);
    save_view_manifest(dir.file("views.json"), views, "mask_");
    const auto loaded = load_view_manifest(dir.file("views.json"));
    REQUIRE(loaded.size() == views.size());
    for (size_t i = 0; i < views.size(); ++i) {
        CHECK(loaded[i].camera.azimuth == Catch::Approx(views[i].camera.azimuth));
        CHECK(loaded[i].camera.fov == Catch::Approx(views[i].camera.fov));
        REQUIRE(loaded[i].mask.data.size() == views[i].mask.data.size());
        for (size_t p = 0; p < views[i].mask.data.size(); ++p)
            CHECK((loaded[i].mask.data[p] >= 0.5) == (views[i].mask.data[p] >= 0.5));
    }
}

TEST_CASE("fid export layout") {
    TempDir dir;
    const std::vector<std::int32_t> ids = {-1, 0, 513, -1};
    write_fid(dir.file("x.fid"), ids);
    std::ifstream in(dir.file("x.fid"), std::ios::binary);
    std::vector<std::int32_t> back(4);
    in.read(reinterpret_cast<char*>(back.data()), 16);
    CHECK(back == ids);
}

TEST_CASE("run config json round trip and hash stability") {
    RunConfig cfg;
    cfg.grid_resolution = 48;
    cfg.weights.seg_comp = 123.0;
    cfg.sched.seed = 99;
    cfg.guidance = "remote";
    cfg.guidance_url = "http://localhost:8188";

    const auto j = run_config_to_json(cfg);
    const RunConfig back = run_config_from_json(j);
    CHECK(back.grid_resolution == 48);
    CHECK(back.weights.seg_comp == 123.0);
    CHECK(back.sched.seed == 99);
    CHECK(back.guidance_url == cfg.guidance_url);

    CHECK(config_hash(cfg) == config_hash(back));
    RunConfig other = cfg;
    other.grid_resolution = 49;
    CHECK(config_hash(cfg) != config_hash(other));

    // Partial JSON files keep defaults for missing fields.
    const RunConfig partial = run_config_from_json(nlohmann::json{{"render_size", 32}});
    CHECK(partial.render_size == 32);
    CHECK(partial.grid_resolution == 64);
    CHECK(partial.weights.rec_h_geo == 5e3);
}

TEST_CASE("metrics csv format") {
    TempDir dir;
    std::vector<StepMetrics> rows(2);
    rows[0].step = 0;
    rows[0].total = 12.5;
    rows[1].step = 1;
    rows[1].rec_h = 0.25;
    save_metrics_csv(dir.file("m.csv"), rows);
    std::ifstream in(dir.file("m.csv"));
    std::string header, r0, r1;
    std::getline(in, header);
    std::getline(in, r0);
    std::getline(in, r1);
    CHECK(header == "step,total,rec_h,rec_o,seg,sds_h,sds_o");
    CHECK(r0 == "0,12.5,0,0,0,0,0");
    CHECK(r1 == "1,0,0.25,0,0,0,0");

    save_eval_csv(dir.file("e.csv"), {{"chamfer_cm", 0.5}}, "deadbeef");
    std::ifstream ein(dir.file("e.csv"));
    std::getline(ein, header);
    std::getline(ein, r0);
    CHECK(header == "metric,value,config");
    CHECK(r0 == "chamfer_cm,0.5,deadbeef");
}
