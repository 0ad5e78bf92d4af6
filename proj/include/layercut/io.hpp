#pragma once

#include "layercut/decompose.hpp"
#include "layercut/image.hpp"
#include "layercut/mesh.hpp"
#include "layercut/rig.hpp"
#include "layercut/seglift.hpp"
#include "layercut/tetgrid.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace layercut {

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian; big-endian hosts are unsupported");

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail_io {

inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

template <typename T>
void write_raw(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError("unexpected end of binary file");
    return v;
}

inline std::vector<float> read_f32_blob(const std::string& path, size_t expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<float> data(expected);
    in.read(reinterpret_cast<char*>(data.data()), expected * 4);
    if (!in) throw IoError("short read in " + path);
    return data;
}

inline void write_f32_blob(const std::string& path, const float* data, size_t count) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(data), count * 4);
}

}  // namespace detail_io

// ---------------------------------------------------------------- OBJ

/// OBJ writer; vertex colors, when present, use the extended
/// `v x y z r g b` form.
inline void save_obj(const std::string& path, const TriMesh& mesh) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (size_t v = 0; v < mesh.vertices.size(); ++v) {
        out << "v " << detail_io::fmt_double(mesh.vertices[v].x()) << ' '
            << detail_io::fmt_double(mesh.vertices[v].y()) << ' '
            << detail_io::fmt_double(mesh.vertices[v].z());
        if (mesh.has_colors())
            out << ' ' << detail_io::fmt_double(mesh.colors[v].x()) << ' '
                << detail_io::fmt_double(mesh.colors[v].y()) << ' '
                << detail_io::fmt_double(mesh.colors[v].z());
        out << '\n';
    }
    for (const auto& f : mesh.faces)
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

inline TriMesh load_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    TriMesh mesh;
    std::string line;
    bool any_color = false;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "v") {
            double x, y, z;
            ss >> x >> y >> z;
            if (!ss) throw IoError("malformed vertex in " + path);
            mesh.vertices.emplace_back(x, y, z);
            double r, g, b;
            if (ss >> r >> g >> b) {
                any_color = true;
                mesh.colors.emplace_back(r, g, b);
            } else {
                mesh.colors.emplace_back(1.0, 1.0, 1.0);
            }
        } else if (tag == "f") {
            std::array<int, 3> f;
            for (int k = 0; k < 3; ++k) {
                std::string tok;
                ss >> tok;
                if (tok.empty()) throw IoError("malformed face in " + path);
                f[k] = std::stoi(tok.substr(0, tok.find('/'))) - 1;
            }
            mesh.faces.push_back(f);
        }
    }
    if (!any_color) mesh.colors.clear();
    mesh.validate();
    return mesh;
}

// ---------------------------------------------------------------- PLY

/// Binary little-endian PLY; optional uchar vertex colors and optional
/// per-face uchar layer labels (0 human, 1 object).
inline void save_ply(const std::string& path, const TriMesh& mesh) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "ply\nformat binary_little_endian 1.0\n";
    out << "element vertex " << mesh.vertices.size() << "\n";
    out << "property float x\nproperty float y\nproperty float z\n";
    if (mesh.has_colors())
        out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    out << "element face " << mesh.faces.size() << "\n";
    out << "property list uchar int vertex_indices\n";
    if (mesh.has_labels()) out << "property uchar label\n";
    out << "end_header\n";
    for (size_t v = 0; v < mesh.vertices.size(); ++v) {
        for (int k = 0; k < 3; ++k)
            detail_io::write_raw(out, static_cast<float>(mesh.vertices[v][k]));
        if (mesh.has_colors())
            for (int k = 0; k < 3; ++k)
                detail_io::write_raw(
                    out, static_cast<std::uint8_t>(
                             std::clamp(mesh.colors[v][k] * 255.0 + 0.5, 0.0, 255.0)));
    }
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        detail_io::write_raw(out, static_cast<std::uint8_t>(3));
        for (int k = 0; k < 3; ++k)
            detail_io::write_raw(out, static_cast<std::int32_t>(mesh.faces[f][k]));
        if (mesh.has_labels())
            detail_io::write_raw(out, static_cast<std::uint8_t>(mesh.labels[f] == Layer::Object));
    }
}

inline TriMesh load_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    size_t n_vert = 0, n_face = 0;
    bool has_color = false, has_label = false;
    bool in_vertex = false, in_face = false;
    std::getline(in, line);
    if (line != "ply") throw IoError(path + ": not a PLY file");
    while (std::getline(in, line) && line != "end_header") {
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "element") {
            std::string what;
            size_t count;
            ss >> what >> count;
            in_vertex = what == "vertex";
            in_face = what == "face";
            if (in_vertex) n_vert = count;
            if (in_face) n_face = count;
        } else if (tag == "property") {
            if (in_vertex && line.find("red") != std::string::npos) has_color = true;
            if (in_face && line.find("label") != std::string::npos) has_label = true;
        } else if (tag == "format" && line.find("binary_little_endian") == std::string::npos) {
            throw IoError(path + ": only binary_little_endian PLY supported");
        }
    }
    TriMesh mesh;
    mesh.vertices.resize(n_vert);
    if (has_color) mesh.colors.resize(n_vert);
    for (size_t v = 0; v < n_vert; ++v) {
        for (int k = 0; k < 3; ++k) mesh.vertices[v][k] = detail_io::read_raw<float>(in);
        if (has_color)
            for (int k = 0; k < 3; ++k)
                mesh.colors[v][k] = detail_io::read_raw<std::uint8_t>(in) / 255.0;
    }
    mesh.faces.resize(n_face);
    if (has_label) mesh.labels.resize(n_face);
    for (size_t f = 0; f < n_face; ++f) {
        const int count = detail_io::read_raw<std::uint8_t>(in);
        if (count != 3) throw IoError(path + ": non-triangular face");
        for (int k = 0; k < 3; ++k) mesh.faces[f][k] = detail_io::read_raw<std::int32_t>(in);
        if (has_label)
            mesh.labels[f] = detail_io::read_raw<std::uint8_t>(in) ? Layer::Object : Layer::Human;
    }
    mesh.validate();
    return mesh;
}

// ---------------------------------------------------------------- checkpoint

/// Field checkpoint: magic "LCTG", u32 resolution, f32 sdf array, then the
/// f32 offset array xyz-interleaved.
inline void save_checkpoint(const std::string& path, const TetGrid& grid,
                            const ImplicitField& field) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write("LCTG", 4);
    detail_io::write_raw(out, static_cast<std::uint32_t>(grid.resolution));
    for (Eigen::Index i = 0; i < field.sdf.size(); ++i)
        detail_io::write_raw(out, static_cast<float>(field.sdf[i]));
    for (const auto& o : field.offset)
        for (int k = 0; k < 3; ++k) detail_io::write_raw(out, static_cast<float>(o[k]));
}

inline std::pair<int, ImplicitField> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "LCTG") throw IoError(path + ": bad checkpoint magic");
    const int res = static_cast<int>(detail_io::read_raw<std::uint32_t>(in));
    const size_t n = static_cast<size_t>(res + 1) * (res + 1) * (res + 1);
    ImplicitField field;
    field.sdf.resize(static_cast<Eigen::Index>(n));
    for (size_t i = 0; i < n; ++i) field.sdf[i] = detail_io::read_raw<float>(in);
    field.offset.resize(n);
    for (size_t i = 0; i < n; ++i)
        for (int k = 0; k < 3; ++k) field.offset[i][k] = detail_io::read_raw<float>(in);
    return {res, std::move(field)};
}

// ---------------------------------------------------------------- labels

inline void save_labels(const std::string& path, const std::vector<Layer>& labels) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (Layer l : labels) out << (l == Layer::Object ? "object" : "human") << '\n';
}

inline std::vector<Layer> load_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<Layer> labels;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line == "object")
            labels.push_back(Layer::Object);
        else if (line == "human")
            labels.push_back(Layer::Human);
        else
            throw IoError(path + ": unknown label '" + line + "'");
    }
    return labels;
}

// ---------------------------------------------------------------- rig

/// Rig file: JSON document referencing the template OBJ and little-endian
/// f32 blobs for weights and blend-shape bases; paths are relative to the
/// rig file.
inline Rig load_rig(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
    const auto dir = std::filesystem::path(path).parent_path();
    auto resolve = [&](const std::string& p) { return (dir / p).string(); };

    Rig rig;
    for (const auto& b : doc.at("bones")) {
        Bone bone;
        bone.name = b.at("name").get<std::string>();
        bone.parent = b.at("parent").get<int>();
        const auto& m = b.at("rest_transform");
        if (m.size() != 16) throw IoError(path + ": rest_transform must have 16 entries");
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) bone.rest_local(r, c) = m[4 * r + c].get<double>();
        rig.bones.push_back(bone);
    }
    rig.template_mesh = load_obj(resolve(doc.at("template").at("obj_path").get<std::string>()));

    const int v = rig.vertex_count(), nb = rig.bone_count();
    {
        const auto blob = detail_io::read_f32_blob(
            resolve(doc.at("weights").at("binary_path").get<std::string>()),
            static_cast<size_t>(v) * nb);
        rig.weights.resize(v, nb);
        for (int r = 0; r < v; ++r)
            for (int c = 0; c < nb; ++c) rig.weights(r, c) = blob[static_cast<size_t>(r) * nb + c];
    }
    auto load_basis = [&](const nlohmann::json& spec) {
        const int dims = spec.at("dims").get<int>();
        const auto blob = detail_io::read_f32_blob(
            resolve(spec.at("binary_path").get<std::string>()), static_cast<size_t>(3) * v * dims);
        Eigen::MatrixXd basis(3 * v, dims);
        for (int r = 0; r < 3 * v; ++r)
            for (int c = 0; c < dims; ++c) basis(r, c) = blob[static_cast<size_t>(r) * dims + c];
        return basis;
    };
    rig.shape_basis = load_basis(doc.at("shape_basis"));
    rig.expression_basis = load_basis(doc.at("expression_basis"));
    if (doc.contains("pose_basis")) rig.pose_basis = load_basis(doc.at("pose_basis"));

    const auto& map = doc.at("openpose_map");
    if (map.size() != 18) throw IoError(path + ": openpose_map must have 18 entries");
    for (int i = 0; i < 18; ++i) rig.openpose_map[i] = map[i].get<int>();

    rig.validate();
    rig.finalize();
    return rig;
}

/// Writes the rig JSON plus its template/blob side files into `dir`.
inline void save_rig(const std::string& dir, const std::string& name, const Rig& rig) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const auto base = fs::path(dir);

    save_obj((base / (name + "_template.obj")).string(), rig.template_mesh);

    const int v = rig.vertex_count(), nb = rig.bone_count();
    std::vector<float> wblob(static_cast<size_t>(v) * nb);
    for (int r = 0; r < v; ++r)
        for (int c = 0; c < nb; ++c)
            wblob[static_cast<size_t>(r) * nb + c] = static_cast<float>(rig.weights(r, c));
    detail_io::write_f32_blob((base / (name + "_weights.f32")).string(), wblob.data(), wblob.size());

    auto dump_basis = [&](const Eigen::MatrixXd& basis, const std::string& file) {
        std::vector<float> blob(static_cast<size_t>(basis.rows()) * basis.cols());
        for (int r = 0; r < basis.rows(); ++r)
            for (int c = 0; c < basis.cols(); ++c)
                blob[static_cast<size_t>(r) * basis.cols() + c] = static_cast<float>(basis(r, c));
        detail_io::write_f32_blob((base / file).string(), blob.data(), blob.size());
    };
    dump_basis(rig.shape_basis, name + "_shape.f32");
    dump_basis(rig.expression_basis, name + "_expr.f32");
    if (rig.pose_basis.size() > 0) dump_basis(rig.pose_basis, name + "_posecorr.f32");

    nlohmann::json doc;
    for (const auto& b : rig.bones) {
        nlohmann::json m = nlohmann::json::array();
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) m.push_back(b.rest_local(r, c));
        doc["bones"].push_back({{"name", b.name}, {"parent", b.parent}, {"rest_transform", m}});
    }
    doc["template"] = {{"obj_path", name + "_template.obj"}};
    doc["weights"] = {{"binary_path", name + "_weights.f32"}};
    doc["shape_basis"] = {{"binary_path", name + "_shape.f32"}, {"dims", rig.shape_basis.cols()}};
    doc["expression_basis"] = {{"binary_path", name + "_expr.f32"},
                               {"dims", rig.expression_basis.cols()}};
    if (rig.pose_basis.size() > 0)
        doc["pose_basis"] = {{"binary_path", name + "_posecorr.f32"}, {"dims", rig.pose_basis.cols()}};
    doc["openpose_map"] = rig.openpose_map;

    std::ofstream out((base / (name + ".rig.json")).string());
    if (!out) throw IoError("cannot write rig file");
    out << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------- pose

inline void save_pose(const std::string& path, const Pose& pose) {
    nlohmann::json doc;
    for (const auto& t : pose.theta) doc["theta"].push_back({t.x(), t.y(), t.z()});
    for (int i = 0; i < 10; ++i) doc["beta"].push_back(pose.beta[i]);
    for (int i = 0; i < 10; ++i) doc["psi"].push_back(pose.psi[i]);
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << doc.dump(2) << '\n';
}

inline Pose load_pose(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
    Pose pose;
    for (const auto& t : doc.at("theta"))
        pose.theta.emplace_back(t[0].get<double>(), t[1].get<double>(), t[2].get<double>());
    if (doc.contains("beta"))
        for (int i = 0; i < 10 && i < static_cast<int>(doc["beta"].size()); ++i)
            pose.beta[i] = doc["beta"][i].get<double>();
    if (doc.contains("psi"))
        for (int i = 0; i < 10 && i < static_cast<int>(doc["psi"].size()); ++i)
            pose.psi[i] = doc["psi"][i].get<double>();
    return pose;
}

// ---------------------------------------------------------------- view-mask manifest

/// Manifest of per-view binary object masks: camera parameters plus a mask
/// PNG path per view, relative to the manifest.
inline std::vector<ViewMask> load_view_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
    const auto dir = std::filesystem::path(path).parent_path();
    std::vector<ViewMask> views;
    for (const auto& v : doc.at("views")) {
        ViewMask vm;
        vm.camera.radius = v.at("radius").get<double>();
        vm.camera.elevation = v.at("elevation").get<double>();
        vm.camera.azimuth = v.at("azimuth").get<double>();
        vm.camera.fov = v.at("fov").get<double>();
        vm.camera.width = v.at("width").get<int>();
        vm.camera.height = v.at("height").get<int>();
        vm.mask = read_png_gray((dir / v.at("mask_path").get<std::string>()).string());
        vm.validate();
        views.push_back(std::move(vm));
    }
    return views;
}

inline void save_view_manifest(const std::string& path, const std::vector<ViewMask>& views,
                               const std::string& mask_prefix) {
    const auto dir = std::filesystem::path(path).parent_path();
    nlohmann::json doc;
    doc["views"] = nlohmann::json::array();
    for (size_t i = 0; i < views.size(); ++i) {
        const std::string mask_name = mask_prefix + std::to_string(i) + ".png";
        write_png((dir / mask_name).string(), views[i].mask);
        doc["views"].push_back({{"radius", views[i].camera.radius},
                                {"elevation", views[i].camera.elevation},
                                {"azimuth", views[i].camera.azimuth},
                                {"fov", views[i].camera.fov},
                                {"width", views[i].camera.width},
                                {"height", views[i].camera.height},
                                {"mask_path", mask_name}});
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------- run config

/// One resolved configuration drives a whole run; CLI flags override file
/// fields and the result is snapshotted next to the outputs.
struct RunConfig {
    int grid_resolution = 64;
    int render_size = 64;
    int eval_render_size = 256;
    LossWeights weights;
    OptimSchedule sched;
    std::string gender_word = "person";
    std::string object_name = "object";
    int zoom_every = 4;
    int checkpoint_every = 200;
    int lift_min_votes = 3;
    int lift_views = 30;
    int voxel_iou_resolution = 128;
    int chamfer_samples = 100000;
    std::string guidance = "mock";  // "mock" or "remote"
    std::string guidance_url;
    int guidance_timeout_ms = 10000;
};

inline nlohmann::json run_config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["grid_resolution"] = c.grid_resolution;
    j["render_size"] = c.render_size;
    j["eval_render_size"] = c.eval_render_size;
    j["weights"] = {{"rec_h_geo", c.weights.rec_h_geo},   {"rec_o_geo", c.weights.rec_o_geo},
                    {"seg_comp", c.weights.seg_comp},     {"sds_h_geo", c.weights.sds_h_geo},
                    {"sds_o_geo", c.weights.sds_o_geo},   {"rec_h_tex", c.weights.rec_h_tex},
                    {"rec_o_tex", c.weights.rec_o_tex},   {"sds_h_tex", c.weights.sds_h_tex},
                    {"sds_o_tex", c.weights.sds_o_tex}};
    j["schedule"] = {{"init_steps", c.sched.init_steps},
                     {"geo_steps", c.sched.geo_steps},
                     {"tex_steps", c.sched.tex_steps},
                     {"tex_sds_warmup", c.sched.tex_sds_warmup},
                     {"geo_lr", c.sched.geo_lr},
                     {"tex_lr", c.sched.tex_lr},
                     {"seed", c.sched.seed}};
    j["gender_word"] = c.gender_word;
    j["object_name"] = c.object_name;
    j["zoom_every"] = c.zoom_every;
    j["checkpoint_every"] = c.checkpoint_every;
    j["lift_min_votes"] = c.lift_min_votes;
    j["lift_views"] = c.lift_views;
    j["voxel_iou_resolution"] = c.voxel_iou_resolution;
    j["chamfer_samples"] = c.chamfer_samples;
    j["guidance"] = c.guidance;
    j["guidance_url"] = c.guidance_url;
    j["guidance_timeout_ms"] = c.guidance_timeout_ms;
    return j;
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
    RunConfig c;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("grid_resolution", c.grid_resolution);
    get("render_size", c.render_size);
    get("eval_render_size", c.eval_render_size);
    if (j.contains("weights")) {
        const auto& w = j["weights"];
        auto getw = [&](const char* key, double& field) {
            if (w.contains(key)) field = w.at(key).get<double>();
        };
        getw("rec_h_geo", c.weights.rec_h_geo);
        getw("rec_o_geo", c.weights.rec_o_geo);
        getw("seg_comp", c.weights.seg_comp);
        getw("sds_h_geo", c.weights.sds_h_geo);
        getw("sds_o_geo", c.weights.sds_o_geo);
        getw("rec_h_tex", c.weights.rec_h_tex);
        getw("rec_o_tex", c.weights.rec_o_tex);
        getw("sds_h_tex", c.weights.sds_h_tex);
        getw("sds_o_tex", c.weights.sds_o_tex);
    }
    if (j.contains("schedule")) {
        const auto& s = j["schedule"];
        auto gets = [&](const char* key, auto& field) {
            if (s.contains(key)) field = s.at(key).get<std::decay_t<decltype(field)>>();
        };
        gets("init_steps", c.sched.init_steps);
        gets("geo_steps", c.sched.geo_steps);
        gets("tex_steps", c.sched.tex_steps);
        gets("tex_sds_warmup", c.sched.tex_sds_warmup);
        gets("geo_lr", c.sched.geo_lr);
        gets("tex_lr", c.sched.tex_lr);
        gets("seed", c.sched.seed);
    }
    get("gender_word", c.gender_word);
    get("object_name", c.object_name);
    get("zoom_every", c.zoom_every);
    get("checkpoint_every", c.checkpoint_every);
    get("lift_min_votes", c.lift_min_votes);
    get("lift_views", c.lift_views);
    get("voxel_iou_resolution", c.voxel_iou_resolution);
    get("chamfer_samples", c.chamfer_samples);
    get("guidance", c.guidance);
    get("guidance_url", c.guidance_url);
    get("guidance_timeout_ms", c.guidance_timeout_ms);
    return c;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
    return run_config_from_json(j);
}

/// FNV-1a over the canonical JSON dump; identifies a configuration in the
/// eval CSV.
inline std::string config_hash(const RunConfig& c) {
    const std::string dump = run_config_to_json(c).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------- CSV

inline void save_metrics_csv(const std::string& path, const std::vector<StepMetrics>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "step,total,rec_h,rec_o,seg,sds_h,sds_o\n";
    for (const auto& r : rows)
        out << r.step << ',' << detail_io::fmt_double(r.total) << ','
            << detail_io::fmt_double(r.rec_h) << ',' << detail_io::fmt_double(r.rec_o) << ','
            << detail_io::fmt_double(r.seg) << ',' << detail_io::fmt_double(r.sds_h) << ','
            << detail_io::fmt_double(r.sds_o) << '\n';
}

inline void save_eval_csv(const std::string& path,
                          const std::vector<std::pair<std::string, double>>& metrics,
                          const std::string& hash) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "metric,value,config\n";
    for (const auto& [name, value] : metrics)
        out << name << ',' << detail_io::fmt_double(value) << ',' << hash << '\n';
}

}  // namespace layercut
