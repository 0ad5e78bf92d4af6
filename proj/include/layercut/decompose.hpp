#pragma once

#include "layercut/guidance.hpp"
#include "layercut/losses.hpp"
#include "layercut/math.hpp"
#include "layercut/mesh_query.hpp"
#include "layercut/optim.hpp"
#include "layercut/raster.hpp"
#include "layercut/rig.hpp"
#include "layercut/seglift.hpp"
#include "layercut/tetgrid.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace layercut {

/// Raised when a loss or gradient goes non-finite; the run aborts and the
/// last written checkpoint stands.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LossWeights {
    double rec_h_geo = 5e3, rec_o_geo = 5e3, seg_comp = 1e5;
    double sds_h_geo = 1.0, sds_o_geo = 1.0;
    double rec_h_tex = 1e8, rec_o_tex = 1e8;
    double sds_h_tex = 1.0, sds_o_tex = 1.0;

    void validate() const {
        for (double v : {rec_h_geo, rec_o_geo, seg_comp, sds_h_geo, sds_o_geo, rec_h_tex,
                         rec_o_tex, sds_h_tex, sds_o_tex})
            require(v >= 0.0 && std::isfinite(v), "LossWeights: weights must be finite and >= 0");
    }
};

struct OptimSchedule {
    int init_steps = 400;
    int geo_steps = 1600;
    int tex_steps = 2000;
    int tex_sds_warmup = 400;
    double geo_lr = 1e-3;
    double tex_lr = 1e-2;
    std::vector<Pose> pose_set;  // SDS poses; canonical + input pose by convention
    std::uint64_t seed = 0;

    void validate() const {
        require(init_steps >= 0 && geo_steps >= 0 && tex_steps >= 0 && tex_sds_warmup >= 0,
                "OptimSchedule: negative step count");
        require(geo_lr > 0.0 && tex_lr > 0.0, "OptimSchedule: learning rates must be positive");
    }
};

struct StepMetrics {
    int step = 0;
    double total = 0.0;
    double rec_h = 0.0, rec_o = 0.0, seg = 0.0, sds_h = 0.0, sds_o = 0.0;
};

/// Everything a guidance factory needs to know about one SDS application.
struct SdsContext {
    PromptSpace space = PromptSpace::Human;
    Camera camera;
    Pose pose;
    bool texture_stage = false;
};

/// Returns the guidance model for one SDS application, or nullptr to skip
/// that application (no gradient, zero recorded loss).
using GuidanceFactory = std::function<std::shared_ptr<GuidanceModel>(const SdsContext&)>;

inline GuidanceFactory constant_guidance(std::shared_ptr<GuidanceModel> model) {
    return [model](const SdsContext&) { return model; };
}

struct GeoOptions {
    int grid_resolution = 64;
    int render_size = 64;
    std::string gender_word = "person";
    std::string object_name = "object";
    int zoom_every = 4;          // 0 disables zoom passes
    int checkpoint_every = 200;  // 0 disables checkpoints
    std::function<void(int step, const ImplicitField& h, const ImplicitField& o)> on_checkpoint;
};

namespace detail_opt {

inline void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite value in ") + what);
}

inline void check_finite(const VecX& v, const char* what) {
    if (!v.allFinite()) throw NumericError(std::string("non-finite gradient in ") + what);
}

/// Scatter per-vertex surface gradients into the field parameters through
/// the crossing-edge interpolation formula. Exact zeros see the same nudge
/// as extraction.
inline void accumulate_mt_gradients(const TetGrid& grid, const ImplicitField& field,
                                    const MtMesh& mt, const std::vector<Vec3>& d_vertices,
                                    double scale, VecX& d_sdf, VecX& d_offset) {
    for (size_t v = 0; v < d_vertices.size(); ++v) {
        const Vec3 g = d_vertices[v] * scale;
        if (g.isZero()) continue;
        const int a = mt.vertex_edges[v].a, b = mt.vertex_edges[v].b;
        double sa = field.sdf[a], sb = field.sdf[b];
        if (sa == 0.0) sa = 1e-8;
        if (sb == 0.0) sb = 1e-8;
        const Vec3 xa = grid.nodes[a] + field.offset[a];
        const Vec3 xb = grid.nodes[b] + field.offset[b];
        const double denom = sb - sa;
        const Vec3 dab = (xa - xb) / (denom * denom);
        d_sdf[a] += g.dot(sb * dab);
        d_sdf[b] += g.dot(-sa * dab);
        const double ka = sb / denom, kb = -sa / denom;
        for (int k = 0; k < 3; ++k) {
            d_offset[3 * a + k] += ka * g[k];
            d_offset[3 * b + k] += kb * g[k];
        }
    }
}

/// Pull posed-space vertex gradients back to canonical space through the
/// per-vertex skinning linear maps.
inline std::vector<Vec3> pull_through_lbs(const SkinnedMesh& skinned,
                                          const std::vector<Vec3>& d_posed) {
    std::vector<Vec3> out(d_posed.size());
    for (size_t v = 0; v < d_posed.size(); ++v)
        out[v] = skinned.linear[v].transpose() * d_posed[v];
    return out;
}

inline Image normal_channels(const Image& grad4) {
    Image out(grad4.height, grad4.width, 3);
    for (int r = 0; r < grad4.height; ++r)
        for (int c = 0; c < grad4.width; ++c)
            for (int ch = 0; ch < 3; ++ch) out.at(r, c, ch) = grad4.at(r, c, ch);
    return out;
}

/// t-normalized SDS surrogate recorded in the metrics CSV. For the mock
/// oracle this equals 0.5 || x - target ||^2 independent of t.
inline double sds_surrogate(const Image& pixel_grad, const NoiseSchedule& schedule, int t) {
    const double ab = schedule.alpha_bar_at(t);
    const double scale = schedule.weight(t) * std::sqrt(ab);  // gradient premultiplier
    double sq = 0.0;
    for (double g : pixel_grad.data) sq += g * g;
    const double denom = scale * scale * ab / (1.0 - ab);
    return denom > 0.0 ? 0.5 * sq / denom : 0.0;
}

}  // namespace detail_opt

/// Fit the field's signed distances to a closed template mesh by plain
/// gradient descent on sampled points (offsets stay untouched). The step
/// size is set from a power bound on the quadratic's curvature, which makes
/// the descent monotone.
inline ImplicitField init_field(const TetGrid& grid, ImplicitField field, const TriMesh& templ,
                                int steps, std::vector<double>* loss_trace = nullptr,
                                std::uint64_t seed = 7) {
    require(!templ.empty(), "init_field: empty template");
    if (steps <= 0) return field;

    const int n_uniform = 3 * static_cast<int>(grid.nodes.size());
    const int n_near = std::max(5000, n_uniform / 2);
    const auto samples =
        sample_sdf_training_points(templ, n_near, n_uniform, 4.0 / grid.resolution, seed);
    const double inv_n = 1.0 / static_cast<double>(samples.size());

    std::vector<TrilinearStencil> stencils(samples.size());
    VecX target(samples.size());
    VecX coverage = VecX::Zero(field.sdf.size());
    for (size_t i = 0; i < samples.size(); ++i) {
        stencils[i] = trilinear_stencil(grid, samples[i].first);
        target[i] = samples[i].second;
        for (int k = 0; k < 8; ++k) coverage[stencils[i].nodes[k]] += stencils[i].weights[k];
    }
    // L-smoothness bound of (1/N)||W s - d||^2: 2/N * max column mass of W.
    const double lipschitz = 2.0 * inv_n * std::max(coverage.maxCoeff(), 1e-9);
    const double lr = 1.0 / lipschitz;

    for (int step = 0; step < steps; ++step) {
        VecX grad = VecX::Zero(field.sdf.size());
        double loss = 0.0;
        for (size_t i = 0; i < samples.size(); ++i) {
            double s = 0.0;
            for (int k = 0; k < 8; ++k) s += stencils[i].weights[k] * field.sdf[stencils[i].nodes[k]];
            const double r = s - target[i];
            loss += r * r;
            for (int k = 0; k < 8; ++k)
                grad[stencils[i].nodes[k]] += 2.0 * inv_n * stencils[i].weights[k] * r;
        }
        loss *= inv_n;
        detail_opt::check_finite(loss, "init_field");
        if (loss_trace) loss_trace->push_back(loss);
        field.sdf -= lr * grad;
    }
    return field;
}

struct GeometryResult {
    ImplicitField field_h, field_o;
    TriMesh mesh_h, mesh_o;  // canonical extractions after the last step
    std::vector<StepMetrics> metrics;
};

/// Geometry decomposition / canonicalization loop. Fields are initialized
/// on the rig template, then per step: reconstruction + segmentation losses
/// in posed space, pose-guided SDS on canonical-human and composite normal
/// renders (human gradient stopped in composite space), periodic zoom
/// passes, Adam updates, offset clamping.
inline GeometryResult optimize_geometry(const TriMesh& scan, const std::vector<Layer>& labels,
                                        const Rig& rig, const Pose& input_pose,
                                        const LossWeights& weights, const OptimSchedule& sched,
                                        const GuidanceFactory& guidance,
                                        const GeoOptions& opt = {}) {
    scan.validate();
    weights.validate();
    sched.validate();
    require(labels.size() == scan.faces.size(), "optimize_geometry: label count mismatch");
    require(static_cast<bool>(guidance), "optimize_geometry: no guidance factory");

    const TetGrid grid = build_regular_grid(opt.grid_resolution);
    const NoiseSchedule noise = NoiseSchedule::linear();
    const int n = static_cast<int>(grid.nodes.size());

    GeometryResult result;
    result.field_h = init_field(grid, ImplicitField::zeros(grid, 0.5), rig.template_mesh,
                                sched.init_steps, nullptr, sched.seed ^ 0x11);
    result.field_o = init_field(grid, ImplicitField::zeros(grid, 0.5), rig.template_mesh,
                                sched.init_steps, nullptr, sched.seed ^ 0x22);

    AdamState adam_sdf_h(n), adam_off_h(3 * n), adam_sdf_o(n), adam_off_o(3 * n);

    std::vector<Pose> sds_poses = sched.pose_set;
    if (sds_poses.empty()) sds_poses.push_back(Pose::rest(rig.bone_count()));

    // Zoom targets: face and hand joints when the rig maps them, plus the
    // interaction region around the current posed object layer.
    std::vector<ZoomTarget> zoom_kinds;
    {
        const auto joints = joint_positions(rig, input_pose);
        if (rig.openpose_map[0] >= 0)
            zoom_kinds.push_back({ZoomTarget::Kind::Face, joints[rig.openpose_map[0]], {}, {}});
        for (int slot : {4, 7})
            if (rig.openpose_map[slot] >= 0)
                zoom_kinds.push_back({ZoomTarget::Kind::Hand, joints[rig.openpose_map[slot]], {}, {}});
        zoom_kinds.push_back({ZoomTarget::Kind::Bbox, {}, {}, {}});  // bbox filled per step
    }

    const CameraConfig cam_config{3.0, -kPi / 18.0, kPi / 9.0, kPi / 7.0, kPi / 4.0,
                                  opt.render_size, opt.render_size};
    Rng run_rng(sched.seed);

    const int t_lo = std::max(1, static_cast<int>(0.02 * noise.T));
    const int t_hi = std::min(noise.T, static_cast<int>(0.98 * noise.T));

    for (int step = 0; step < sched.geo_steps; ++step) {
        StepMetrics sm;
        VecX d_sdf_h = VecX::Zero(n), d_off_h = VecX::Zero(3 * n);
        VecX d_sdf_o = VecX::Zero(n), d_off_o = VecX::Zero(3 * n);

        int attempts = 0;
        for (;;) {
            try {
                Rng step_rng = run_rng.fork(step);
                d_sdf_h.setZero(); d_off_h.setZero();
                d_sdf_o.setZero(); d_off_o.setZero();
                sm = StepMetrics{};
                sm.step = step;

                const Camera cam = sample_camera(step_rng.next_u64(), cam_config);
                const MtMesh mt_h = marching_tetrahedra_ext(grid, result.field_h);
                const MtMesh mt_o = marching_tetrahedra_ext(grid, result.field_o);
                const SkinnedMesh posed_h = lbs_forward_ext(mt_h.mesh, rig, input_pose);
                const SkinnedMesh posed_o = lbs_forward_ext(mt_o.mesh, rig, input_pose);

                const RenderBuffers scan_buf = render_scan_ground_truth(scan, labels, cam);

                // Reconstruction losses in posed space. `posed_view` may be a
                // zoomed copy of the skinned mesh; `zoom_scale` is its chain factor.
                auto run_recon = [&](const SkinnedMesh& posed, const MtMesh& mt, Layer which,
                                     double w, double zoom_scale,
                                     const RenderBuffers& scan_view_buf, const TriMesh& posed_view,
                                     VecX& dsdf, VecX& doff) -> double {
                    const RenderBuffers buf = rasterize(posed_view, cam);
                    const LossResult loss = recon_geo_loss(buf, scan_view_buf, which);
                    if (w > 0.0 && !posed_view.empty()) {
                        PixelGrads pg;
                        pg.d_normal = loss.d_normal;
                        const VertexGrads vg = backprop_pixels_to_vertices(posed_view, cam, buf, pg);
                        std::vector<Vec3> d_posed = vg.d_position;
                        for (auto& g : d_posed) g *= zoom_scale;
                        const auto d_canon = detail_opt::pull_through_lbs(posed, d_posed);
                        const ImplicitField& f = which == Layer::Human ? result.field_h : result.field_o;
                        detail_opt::accumulate_mt_gradients(grid, f, mt, d_canon, w, dsdf, doff);
                    }
                    return loss.value;
                };

                sm.rec_h += run_recon(posed_h, mt_h, Layer::Human, weights.rec_h_geo, 1.0,
                                      scan_buf, posed_h.mesh, d_sdf_h, d_off_h);
                sm.rec_o += run_recon(posed_o, mt_o, Layer::Object, weights.rec_o_geo, 1.0,
                                      scan_buf, posed_o.mesh, d_sdf_o, d_off_o);

                // Segmentation consistency of the jointly rasterized layers.
                {
                    const TriMesh composite = merge_meshes(posed_h.mesh, posed_o.mesh);
                    const RenderBuffers comp_buf = rasterize(composite, cam);
                    sm.seg = seg_comp_loss(comp_buf, scan_buf);
                }

                // Zoom pass: reconstruction on a close-up view.
                if (opt.zoom_every > 0 && !zoom_kinds.empty() && step % opt.zoom_every == 0) {
                    ZoomTarget zt = zoom_kinds[(step / opt.zoom_every) % zoom_kinds.size()];
                    bool ok = true;
                    if (zt.kind == ZoomTarget::Kind::Bbox) {
                        if (posed_o.mesh.empty()) {
                            ok = false;
                        } else {
                            auto [lo, hi] = bounding_box(posed_o.mesh);
                            zt.bbox_lo = lo;
                            zt.bbox_hi = hi;
                            ok = (hi - lo).maxCoeff() > 1e-6;
                        }
                    }
                    if (ok) {
                        const ZoomTransform ztr = zoom_transform(zt, step_rng.next_u64());
                        const TriMesh scan_z = apply_zoom(scan, ztr);
                        const TriMesh posed_h_z = apply_zoom(posed_h.mesh, ztr);
                        const TriMesh posed_o_z = apply_zoom(posed_o.mesh, ztr);
                        const RenderBuffers scan_zbuf = render_scan_ground_truth(scan_z, labels, cam);
                        sm.rec_h += run_recon(posed_h, mt_h, Layer::Human, weights.rec_h_geo,
                                              ztr.scale, scan_zbuf, posed_h_z, d_sdf_h, d_off_h);
                        sm.rec_o += run_recon(posed_o, mt_o, Layer::Object, weights.rec_o_geo,
                                              ztr.scale, scan_zbuf, posed_o_z, d_sdf_o, d_off_o);
                    }
                }

                // Pose-guided SDS in canonical space, cycling the pose set.
                const Pose& sds_pose = sds_poses[step % sds_poses.size()];
                const bool rest_pose = std::all_of(sds_pose.theta.begin(), sds_pose.theta.end(),
                                                   [](const Vec3& v) { return v.isZero(); });
                const int t_step = step_rng.uniform_int(t_lo, t_hi);
                const std::uint64_t noise_seed = step_rng.next_u64();
                const ViewTag tag = view_tag_from_azimuth(cam.azimuth);

                // Human space.
                const auto model_h = weights.sds_h_geo > 0.0
                                         ? guidance({PromptSpace::Human, cam, sds_pose, false})
                                         : nullptr;
                if (model_h) {
                    const SkinnedMesh sds_h_mesh =
                        rest_pose ? SkinnedMesh{mt_h.mesh, std::vector<Mat3>(mt_h.mesh.vertices.size(),
                                                                             Mat3::Identity())}
                                  : lbs_forward_ext(mt_h.mesh, rig, sds_pose);
                    const RenderBuffers buf = rasterize(sds_h_mesh.mesh, cam);
                    const Image x = buf.normal_mask_image();
                    Condition cond =
                        build_prompts(PromptSpace::Human, opt.gender_word, opt.object_name, tag);
                    cond.pose_keypoints = pose_keypoints_2d(rig, sds_pose, cam);
                    const Image g = sds_pixel_gradient(x, cond, *model_h, noise, t_step, noise_seed);
                    sm.sds_h = detail_opt::sds_surrogate(g, noise, t_step);
                    if (!sds_h_mesh.mesh.empty()) {
                        PixelGrads pg;
                        pg.d_normal = detail_opt::normal_channels(g);
                        const VertexGrads vg =
                            backprop_pixels_to_vertices(sds_h_mesh.mesh, cam, buf, pg);
                        const auto d_canon = detail_opt::pull_through_lbs(sds_h_mesh, vg.d_position);
                        detail_opt::accumulate_mt_gradients(grid, result.field_h, mt_h, d_canon,
                                                            weights.sds_h_geo, d_sdf_h, d_off_h);
                    }
                }

                // Composite space; gradients reach only the object field.
                const auto model_c = weights.sds_o_geo > 0.0
                                         ? guidance({PromptSpace::Composite, cam, sds_pose, false})
                                         : nullptr;
                if (model_c) {
                    const TriMesh comp_c = merge_meshes(mt_h.mesh, mt_o.mesh);
                    const SkinnedMesh sds_c_mesh =
                        rest_pose ? SkinnedMesh{comp_c, std::vector<Mat3>(comp_c.vertices.size(),
                                                                          Mat3::Identity())}
                                  : lbs_forward_ext(comp_c, rig, sds_pose);
                    const RenderBuffers buf = rasterize(sds_c_mesh.mesh, cam);
                    const Image x = buf.normal_mask_image();
                    Condition cond =
                        build_prompts(PromptSpace::Composite, opt.gender_word, opt.object_name, tag);
                    cond.pose_keypoints = pose_keypoints_2d(rig, sds_pose, cam);
                    const Image g = sds_pixel_gradient(x, cond, *model_c, noise, t_step, noise_seed);
                    sm.sds_o = detail_opt::sds_surrogate(g, noise, t_step);
                    if (!sds_c_mesh.mesh.empty()) {
                        PixelGrads pg;
                        pg.d_normal = detail_opt::normal_channels(g);
                        const VertexGrads vg =
                            backprop_pixels_to_vertices(sds_c_mesh.mesh, cam, buf, pg);
                        const auto d_canon = detail_opt::pull_through_lbs(sds_c_mesh, vg.d_position);
                        // Flow stop on the human part: only object-layer vertices scatter.
                        const size_t nh_verts = mt_h.mesh.vertices.size();
                        std::vector<Vec3> d_obj(mt_o.mesh.vertices.size(), Vec3::Zero());
                        for (size_t v = nh_verts; v < d_canon.size(); ++v)
                            d_obj[v - nh_verts] = d_canon[v];
                        detail_opt::accumulate_mt_gradients(grid, result.field_o, mt_o, d_obj,
                                                            weights.sds_o_geo, d_sdf_o, d_off_o);
                    }
                }
                break;
            } catch (const GuidanceError&) {
                // Guidance failures are retriable; the step reruns from its seed.
                if (++attempts > 2) throw;
            }
        }

        sm.total = weights.rec_h_geo * sm.rec_h + weights.rec_o_geo * sm.rec_o +
                   weights.seg_comp * sm.seg + weights.sds_h_geo * sm.sds_h +
                   weights.sds_o_geo * sm.sds_o;
        detail_opt::check_finite(sm.total, "geometry loss");
        detail_opt::check_finite(d_sdf_h, "geometry gradients (human)");
        detail_opt::check_finite(d_off_h, "geometry gradients (human offsets)");
        detail_opt::check_finite(d_sdf_o, "geometry gradients (object)");
        detail_opt::check_finite(d_off_o, "geometry gradients (object offsets)");

        adam_sdf_h.step(result.field_h.sdf, d_sdf_h, sched.geo_lr);
        adam_sdf_o.step(result.field_o.sdf, d_sdf_o, sched.geo_lr);
        VecX off_h = Eigen::Map<VecX>(result.field_h.offset[0].data(), 3 * n);
        VecX off_o = Eigen::Map<VecX>(result.field_o.offset[0].data(), 3 * n);
        adam_off_h.step(off_h, d_off_h, sched.geo_lr);
        adam_off_o.step(off_o, d_off_o, sched.geo_lr);
        for (int i = 0; i < n; ++i) {
            result.field_h.offset[i] = Vec3(off_h[3 * i], off_h[3 * i + 1], off_h[3 * i + 2]);
            result.field_o.offset[i] = Vec3(off_o[3 * i], off_o[3 * i + 1], off_o[3 * i + 2]);
        }
        clamp_offsets(grid, result.field_h);
        clamp_offsets(grid, result.field_o);

        result.metrics.push_back(sm);
        if (opt.checkpoint_every > 0 && opt.on_checkpoint && (step + 1) % opt.checkpoint_every == 0)
            opt.on_checkpoint(step + 1, result.field_h, result.field_o);
    }

    result.mesh_h = marching_tetrahedra(grid, result.field_h);
    result.mesh_o = marching_tetrahedra(grid, result.field_o);
    return result;
}

struct TexOptions {
    int render_size = 64;
    std::string gender_word = "person";
    std::string object_name = "object";
};

struct TextureResult {
    std::vector<Vec3> colors_h, colors_o;  // per-vertex albedo in [0,1]
    std::vector<StepMetrics> metrics;
};

/// Appearance completion over frozen geometry: per-vertex colors driven by
/// masked RGB reconstruction in posed space plus (after the warmup) SDS on
/// canonical human and composite renders.
inline TextureResult optimize_texture(const TriMesh& mesh_h, const TriMesh& mesh_o,
                                      const TriMesh& scan, const std::vector<Layer>& labels,
                                      const Rig& rig, const Pose& input_pose,
                                      const LossWeights& weights, const OptimSchedule& sched,
                                      const GuidanceFactory& guidance, const TexOptions& opt = {}) {
    weights.validate();
    sched.validate();
    require(scan.has_colors(), "optimize_texture: scan has no colors");
    require(labels.size() == scan.faces.size(), "optimize_texture: label count mismatch");

    const NoiseSchedule noise = NoiseSchedule::linear();
    const int nh = static_cast<int>(mesh_h.vertices.size());
    const int no = static_cast<int>(mesh_o.vertices.size());

    TextureResult result;
    result.colors_h.assign(nh, Vec3(0.5, 0.5, 0.5));
    result.colors_o.assign(no, Vec3(0.5, 0.5, 0.5));

    // Geometry is frozen: pose once.
    const SkinnedMesh posed_h = lbs_forward_ext(mesh_h, rig, input_pose);
    const SkinnedMesh posed_o = lbs_forward_ext(mesh_o, rig, input_pose);

    AdamState adam_h(3 * nh), adam_o(3 * no);
    const CameraConfig cam_config{3.0, -kPi / 18.0, kPi / 9.0, kPi / 7.0, kPi / 4.0,
                                  opt.render_size, opt.render_size};
    Rng run_rng(sched.seed ^ 0x7e0);
    const int t_lo = std::max(1, static_cast<int>(0.02 * noise.T));
    const int t_hi = std::min(noise.T, static_cast<int>(0.98 * noise.T));

    auto colors_to_mesh = [](const TriMesh& base, const std::vector<Vec3>& colors) {
        TriMesh m = base;
        m.colors = colors;
        return m;
    };

    for (int step = 0; step < sched.tex_steps; ++step) {
        Rng step_rng = run_rng.fork(step);
        StepMetrics sm;
        sm.step = step;
        const bool sds_on = step >= sched.tex_sds_warmup;

        VecX d_col_h = VecX::Zero(3 * nh), d_col_o = VecX::Zero(3 * no);
        const Camera cam = sample_camera(step_rng.next_u64(), cam_config);
        const RenderBuffers scan_buf = render_scan_ground_truth(scan, labels, cam);

        auto recon_pass = [&](const SkinnedMesh& posed, const std::vector<Vec3>& colors,
                              Layer which, double w, VecX& dcol) -> double {
            const TriMesh colored = colors_to_mesh(posed.mesh, colors);
            const RenderBuffers buf = rasterize(colored, cam);
            const LossResult loss = recon_tex_loss(buf, scan_buf, which);
            if (w > 0.0 && !colored.empty()) {
                PixelGrads pg;
                pg.d_rgb = loss.d_rgb;
                const VertexGrads vg = backprop_pixels_to_vertices(colored, cam, buf, pg);
                for (size_t v = 0; v < vg.d_color.size(); ++v)
                    for (int k = 0; k < 3; ++k) dcol[3 * v + k] += w * vg.d_color[v][k];
            }
            return loss.value;
        };

        sm.rec_h = recon_pass(posed_h, result.colors_h, Layer::Human, weights.rec_h_tex, d_col_h);
        sm.rec_o = recon_pass(posed_o, result.colors_o, Layer::Object, weights.rec_o_tex, d_col_o);

        if (sds_on) {
            const int t_step = step_rng.uniform_int(t_lo, t_hi);
            const std::uint64_t noise_seed = step_rng.next_u64();
            const ViewTag tag = view_tag_from_azimuth(cam.azimuth);
            const Pose rest = Pose::rest(rig.bone_count());

            const auto model_h =
                weights.sds_h_tex > 0.0 ? guidance({PromptSpace::Human, cam, rest, true}) : nullptr;
            if (model_h) {
                const TriMesh colored = colors_to_mesh(mesh_h, result.colors_h);
                const RenderBuffers buf = rasterize(colored, cam);
                Condition cond =
                    build_prompts(PromptSpace::Human, opt.gender_word, opt.object_name, tag);
                cond.pose_keypoints = pose_keypoints_2d(rig, rest, cam);
                const Image g =
                    sds_pixel_gradient(buf.rgb, cond, *model_h, noise, t_step, noise_seed);
                sm.sds_h = detail_opt::sds_surrogate(g, noise, t_step);
                if (!colored.empty()) {
                    PixelGrads pg;
                    pg.d_rgb = g;
                    const VertexGrads vg = backprop_pixels_to_vertices(colored, cam, buf, pg);
                    for (int v = 0; v < nh; ++v)
                        for (int k = 0; k < 3; ++k)
                            d_col_h[3 * v + k] += weights.sds_h_tex * vg.d_color[v][k];
                }
            }
            const auto model_c = weights.sds_o_tex > 0.0
                                     ? guidance({PromptSpace::Composite, cam, rest, true})
                                     : nullptr;
            if (model_c) {
                TriMesh comp = merge_meshes(colors_to_mesh(mesh_h, result.colors_h),
                                            colors_to_mesh(mesh_o, result.colors_o));
                const RenderBuffers buf = rasterize(comp, cam);
                Condition cond =
                    build_prompts(PromptSpace::Composite, opt.gender_word, opt.object_name, tag);
                cond.pose_keypoints = pose_keypoints_2d(rig, rest, cam);
                const Image g =
                    sds_pixel_gradient(buf.rgb, cond, *model_c, noise, t_step, noise_seed);
                sm.sds_o = detail_opt::sds_surrogate(g, noise, t_step);
                if (!comp.empty()) {
                    PixelGrads pg;
                    pg.d_rgb = g;
                    const VertexGrads vg = backprop_pixels_to_vertices(comp, cam, buf, pg);
                    // Flow stop on the human part.
                    for (int v = 0; v < no; ++v)
                        for (int k = 0; k < 3; ++k)
                            d_col_o[3 * v + k] += weights.sds_o_tex * vg.d_color[nh + v][k];
                }
            }
        }

        sm.total = weights.rec_h_tex * sm.rec_h + weights.rec_o_tex * sm.rec_o +
                   weights.sds_h_tex * sm.sds_h + weights.sds_o_tex * sm.sds_o;
        detail_opt::check_finite(sm.total, "texture loss");
        detail_opt::check_finite(d_col_h, "texture gradients (human)");
        detail_opt::check_finite(d_col_o, "texture gradients (object)");

        VecX col_h(3 * nh), col_o(3 * no);
        for (int v = 0; v < nh; ++v)
            for (int k = 0; k < 3; ++k) col_h[3 * v + k] = result.colors_h[v][k];
        for (int v = 0; v < no; ++v)
            for (int k = 0; k < 3; ++k) col_o[3 * v + k] = result.colors_o[v][k];
        adam_h.step(col_h, d_col_h, sched.tex_lr);
        adam_o.step(col_o, d_col_o, sched.tex_lr);
        for (int v = 0; v < nh; ++v)
            for (int k = 0; k < 3; ++k)
                result.colors_h[v][k] = std::clamp(col_h[3 * v + k], 0.0, 1.0);
        for (int v = 0; v < no; ++v)
            for (int k = 0; k < 3; ++k)
                result.colors_o[v][k] = std::clamp(col_o[3 * v + k], 0.0, 1.0);

        result.metrics.push_back(sm);
    }
    return result;
}

}  // namespace layercut
