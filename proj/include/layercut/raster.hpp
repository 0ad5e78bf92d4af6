#pragma once

#include "layercut/camera.hpp"
#include "layercut/image.hpp"
#include "layercut/math.hpp"
#include "layercut/mesh.hpp"

#include <cstdint>
#include <vector>

namespace layercut {

/// Per-view output of the software rasterizer. Pixels not covered by any
/// front-facing triangle carry face_id = -1 and zeros everywhere else.
struct RenderBuffers {
    int width = 0, height = 0;
    std::vector<std::uint8_t> mask;
    Image normal;  // camera-space unit face normals, H x W x 3
    std::vector<std::uint8_t> seg_h, seg_o;
    Image rgb;  // H x W x 3, from barycentric-interpolated vertex colors
    std::vector<std::int32_t> face_id;
    std::vector<double> depth;
    std::vector<std::array<double, 3>> bary;  // screen barycentrics of the covering face

    size_t idx(int row, int col) const { return static_cast<size_t>(row) * width + col; }

    /// Rendered normals concatenated with the mask as a 4-channel image;
    /// the layout fed to the geometry-stage guidance models.
    Image normal_mask_image() const {
        Image out(height, width, 4);
        for (int r = 0; r < height; ++r)
            for (int c = 0; c < width; ++c) {
                out.at(r, c, 0) = normal.at(r, c, 0);
                out.at(r, c, 1) = normal.at(r, c, 1);
                out.at(r, c, 2) = normal.at(r, c, 2);
                out.at(r, c, 3) = mask[idx(r, c)];
            }
        return out;
    }
};

namespace detail {

inline double edge_fn(double ax, double ay, double bx, double by, double px, double py) {
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

constexpr double kNearPlane = 0.05;

struct ProjectedVertex {
    double sx, sy;   // screen coords, y down
    double d;        // depth along camera forward
    bool in_front;
};

inline std::vector<ProjectedVertex> project_vertices(const TriMesh& mesh, const Camera& cam) {
    const Mat3 basis = cam.basis();
    const Vec3 eye = cam.position();
    const double fl = cam.focal_length();
    const double cx = cam.width / 2.0, cy = cam.height / 2.0;
    std::vector<ProjectedVertex> out(mesh.vertices.size());
    for (size_t i = 0; i < mesh.vertices.size(); ++i) {
        const Vec3 p = basis * (mesh.vertices[i] - eye);
        ProjectedVertex& pv = out[i];
        pv.d = p.z();
        pv.in_front = p.z() > kNearPlane;
        if (pv.in_front) {
            pv.sx = cx + fl * p.x() / p.z();
            pv.sy = cy - fl * p.y() / p.z();
        } else {
            pv.sx = pv.sy = 0.0;
        }
    }
    return out;
}

}  // namespace detail

/// Pinhole-perspective z-buffer rasterization of front-facing triangles.
/// Triangles with any vertex closer than the near plane are dropped whole.
/// Deterministic: depth ties go to the lower face index.
inline RenderBuffers rasterize(const TriMesh& mesh, const Camera& camera) {
    camera.validate();
    const int w = camera.width, h = camera.height;
    RenderBuffers buf;
    buf.width = w;
    buf.height = h;
    buf.mask.assign(static_cast<size_t>(w) * h, 0);
    buf.seg_h.assign(static_cast<size_t>(w) * h, 0);
    buf.seg_o.assign(static_cast<size_t>(w) * h, 0);
    buf.face_id.assign(static_cast<size_t>(w) * h, -1);
    buf.depth.assign(static_cast<size_t>(w) * h, 0.0);
    buf.bary.assign(static_cast<size_t>(w) * h, {0.0, 0.0, 0.0});
    buf.normal = Image(h, w, 3);
    buf.rgb = Image(h, w, 3);
    if (mesh.empty()) return buf;

    const auto proj = detail::project_vertices(mesh, camera);

    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& tri = mesh.faces[f];
        const auto& p0 = proj[tri[0]];
        const auto& p1 = proj[tri[1]];
        const auto& p2 = proj[tri[2]];
        if (!p0.in_front || !p1.in_front || !p2.in_front) continue;
        const double area = detail::edge_fn(p0.sx, p0.sy, p1.sx, p1.sy, p2.sx, p2.sy);
        if (area >= 0.0) continue;  // back-facing or degenerate in screen space

        const double min_x = std::min({p0.sx, p1.sx, p2.sx});
        const double max_x = std::max({p0.sx, p1.sx, p2.sx});
        const double min_y = std::min({p0.sy, p1.sy, p2.sy});
        const double max_y = std::max({p0.sy, p1.sy, p2.sy});
        const int c0 = std::max(0, static_cast<int>(std::floor(min_x - 0.5)));
        const int c1 = std::min(w - 1, static_cast<int>(std::ceil(max_x - 0.5)));
        const int r0 = std::max(0, static_cast<int>(std::floor(min_y - 0.5)));
        const int r1 = std::min(h - 1, static_cast<int>(std::ceil(max_y - 0.5)));

        for (int r = r0; r <= r1; ++r) {
            const double py = r + 0.5;
            for (int c = c0; c <= c1; ++c) {
                const double px = c + 0.5;
                const double e0 = detail::edge_fn(p1.sx, p1.sy, p2.sx, p2.sy, px, py);
                const double e1 = detail::edge_fn(p2.sx, p2.sy, p0.sx, p0.sy, px, py);
                const double e2 = detail::edge_fn(p0.sx, p0.sy, p1.sx, p1.sy, px, py);
                const double l0 = e0 / area, l1 = e1 / area, l2 = e2 / area;
                if (l0 < 0.0 || l1 < 0.0 || l2 < 0.0) continue;
                const double inv_d = l0 / p0.d + l1 / p1.d + l2 / p2.d;
                const double d = 1.0 / inv_d;
                const size_t i = buf.idx(r, c);
                if (buf.face_id[i] >= 0 && buf.depth[i] <= d) continue;
                buf.face_id[i] = static_cast<std::int32_t>(f);
                buf.depth[i] = d;
                buf.bary[i] = {l0, l1, l2};
            }
        }
    }

    // Attribute pass over covered pixels.
    const Mat3 basis = camera.basis();
    std::vector<Vec3> cam_normals(mesh.faces.size());
    for (size_t f = 0; f < mesh.faces.size(); ++f)
        cam_normals[f] = basis * face_normal(mesh, static_cast<int>(f));

    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const size_t i = buf.idx(r, c);
            const std::int32_t f = buf.face_id[i];
            if (f < 0) continue;
            buf.mask[i] = 1;
            buf.normal.at(r, c, 0) = cam_normals[f].x();
            buf.normal.at(r, c, 1) = cam_normals[f].y();
            buf.normal.at(r, c, 2) = cam_normals[f].z();
            const auto& tri = mesh.faces[f];
            if (mesh.has_colors()) {
                // Perspective-correct interpolation weights.
                const auto& l = buf.bary[i];
                const double q0 = l[0] / proj[tri[0]].d,
                             q1 = l[1] / proj[tri[1]].d,
                             q2 = l[2] / proj[tri[2]].d;
                const double q = q0 + q1 + q2;
                const Vec3 col = (q0 * mesh.colors[tri[0]] + q1 * mesh.colors[tri[1]] +
                                  q2 * mesh.colors[tri[2]]) /
                                 q;
                buf.rgb.at(r, c, 0) = col.x();
                buf.rgb.at(r, c, 1) = col.y();
                buf.rgb.at(r, c, 2) = col.z();
            }
            if (mesh.has_labels()) {
                if (mesh.labels[f] == Layer::Human)
                    buf.seg_h[i] = 1;
                else
                    buf.seg_o[i] = 1;
            }
        }
    return buf;
}

namespace detail_backprop {
struct ScreenGrad {
    double x = 0.0, y = 0.0, d = 0.0;
};
}  // namespace detail_backprop

/// Pixel-space gradients to feed back through the rasterizer. Empty images
/// mean "no gradient for that buffer". Mask/segmentation channels carry no
/// geometry gradient here (no silhouette term); only interpolated color and
/// face-normal channels propagate.
struct PixelGrads {
    Image d_normal;  // H x W x 3, gradient w.r.t. camera-space normals
    Image d_rgb;     // H x W x 3, gradient w.r.t. rendered rgb
};

struct VertexGrads {
    std::vector<Vec3> d_position;
    std::vector<Vec3> d_color;
};

/// Backpropagate per-pixel gradients to mesh vertex positions and colors.
/// Gradients flow through barycentric interpolation (rgb) and the face
/// normal computation (normal buffer) of the covering triangle only; pixels
/// with face_id = -1 contribute nothing.
inline VertexGrads backprop_pixels_to_vertices(const TriMesh& mesh, const Camera& camera,
                                               const RenderBuffers& buffers,
                                               const PixelGrads& grads) {
    require(buffers.width == camera.width && buffers.height == camera.height,
            "backprop: buffer/camera size mismatch");
    require(!grads.d_normal.empty() || !grads.d_rgb.empty(), "backprop: no gradients supplied");
    for (std::int32_t f : buffers.face_id)
        require(f < static_cast<std::int32_t>(mesh.faces.size()), "backprop: buffer/mesh mismatch");

    VertexGrads out;
    out.d_position.assign(mesh.vertices.size(), Vec3::Zero());
    out.d_color.assign(mesh.vertices.size(), Vec3::Zero());

    const Mat3 basis = camera.basis();
    const Vec3 eye = camera.position();
    const double fl = camera.focal_length();

    // Accumulate normal-channel gradients per face first: the normal is
    // constant across the face, so one Jacobian application per face covers
    // all its pixels.
    std::vector<Vec3> face_normal_grad;
    if (!grads.d_normal.empty()) {
        require(grads.d_normal.height == buffers.height && grads.d_normal.width == buffers.width &&
                    grads.d_normal.channels == 3,
                "backprop: d_normal shape mismatch");
        face_normal_grad.assign(mesh.faces.size(), Vec3::Zero());
        for (int r = 0; r < buffers.height; ++r)
            for (int c = 0; c < buffers.width; ++c) {
                const std::int32_t f = buffers.face_id[buffers.idx(r, c)];
                if (f < 0) continue;
                face_normal_grad[f] += Vec3(grads.d_normal.at(r, c, 0), grads.d_normal.at(r, c, 1),
                                            grads.d_normal.at(r, c, 2));
            }
        for (size_t f = 0; f < mesh.faces.size(); ++f) {
            if (face_normal_grad[f].isZero()) continue;
            const auto& tri = mesh.faces[f];
            const Vec3& v0 = mesh.vertices[tri[0]];
            const Vec3& v1 = mesh.vertices[tri[1]];
            const Vec3& v2 = mesh.vertices[tri[2]];
            const Vec3 e1 = v1 - v0, e2 = v2 - v0;
            const Vec3 u = e1.cross(e2);
            const double len = u.norm();
            if (len < 1e-16) continue;
            const Vec3 n = u / len;
            // d(normal)/d(u), then d(u)/d(vertex); upstream gradient is in
            // camera space, so pull it back through the view rotation first.
            const Vec3 g_world = basis.transpose() * face_normal_grad[f];
            const Vec3 g_u = (g_world - n * n.dot(g_world)) / len;
            out.d_position[tri[0]] += skew(e2 - e1).transpose() * g_u;
            out.d_position[tri[1]] += (-skew(e2)).transpose() * g_u;
            out.d_position[tri[2]] += skew(e1).transpose() * g_u;
        }
    }

    if (!grads.d_rgb.empty()) {
        require(grads.d_rgb.height == buffers.height && grads.d_rgb.width == buffers.width &&
                    grads.d_rgb.channels == 3,
                "backprop: d_rgb shape mismatch");
        require(mesh.has_colors(), "backprop: rgb gradient but mesh has no colors");
        for (int r = 0; r < buffers.height; ++r)
            for (int c = 0; c < buffers.width; ++c) {
                const size_t i = buffers.idx(r, c);
                const std::int32_t f = buffers.face_id[i];
                if (f < 0) continue;
                const Vec3 g(grads.d_rgb.at(r, c, 0), grads.d_rgb.at(r, c, 1),
                             grads.d_rgb.at(r, c, 2));
                if (g.isZero()) continue;
                const auto& tri = mesh.faces[f];
                const auto& l = buffers.bary[i];

                double dvert[3], sxv[3], syv[3];  // camera depth + screen coords
                Vec3 pc[3];
                for (int k = 0; k < 3; ++k) {
                    pc[k] = basis * (mesh.vertices[tri[k]] - eye);
                    dvert[k] = pc[k].z();
                    sxv[k] = camera.width / 2.0 + fl * pc[k].x() / pc[k].z();
                    syv[k] = camera.height / 2.0 - fl * pc[k].y() / pc[k].z();
                }

                // Perspective-correct weights w_k = (l_k/d_k) / Q.
                const double q[3] = {l[0] / dvert[0], l[1] / dvert[1], l[2] / dvert[2]};
                const double Q = q[0] + q[1] + q[2];
                const double wgt[3] = {q[0] / Q, q[1] / Q, q[2] / Q};

                // Color gradients.
                for (int k = 0; k < 3; ++k) out.d_color[tri[k]] += wgt[k] * g;

                // Position gradients via the interpolation weights.
                double G[3], S = 0.0;
                for (int k = 0; k < 3; ++k) {
                    G[k] = g.dot(mesh.colors[tri[k]]);
                    S += G[k] * wgt[k];
                }
                double dL_dl[3], dL_dd[3];
                for (int k = 0; k < 3; ++k) {
                    dL_dl[k] = (G[k] - S) / (dvert[k] * Q);
                    dL_dd[k] = -wgt[k] * (G[k] - S) / dvert[k];
                }
                // Screen barycentrics l_k = E_k / sum(E); pixel at (px,py).
                const double px = c + 0.5, py = r + 0.5;
                const double area = detail::edge_fn(sxv[0], syv[0], sxv[1], syv[1], sxv[2], syv[2]);
                double dL_dE[3];
                double lam_dot = 0.0;
                for (int k = 0; k < 3; ++k) lam_dot += l[k] * dL_dl[k];
                for (int k = 0; k < 3; ++k) dL_dE[k] = (dL_dl[k] - lam_dot) / area;

                detail_backprop::ScreenGrad sg[3];
                // E_k = edge(P_{k+1}, P_{k+2}, pixel)
                for (int k = 0; k < 3; ++k) {
                    const int a = (k + 1) % 3, b = (k + 2) % 3;
                    // dE/da = (b.y - p.y, p.x - b.x); dE/db = (p.y - a.y, a.x - p.x)
                    sg[a].x += dL_dE[k] * (syv[b] - py);
                    sg[a].y += dL_dE[k] * (px - sxv[b]);
                    sg[b].x += dL_dE[k] * (py - syv[a]);
                    sg[b].y += dL_dE[k] * (sxv[a] - px);
                }
                for (int k = 0; k < 3; ++k) sg[k].d += dL_dd[k];

                // Screen/depth back to camera coords, then to world.
                for (int k = 0; k < 3; ++k) {
                    const double X = pc[k].x(), Y = pc[k].y(), d = dvert[k];
                    Vec3 g_cam;
                    g_cam.x() = sg[k].x * (fl / d);
                    g_cam.y() = sg[k].y * (-fl / d);
                    g_cam.z() = sg[k].x * (-fl * X / (d * d)) + sg[k].y * (fl * Y / (d * d)) + sg[k].d;
                    out.d_position[tri[k]] += basis.transpose() * g_cam;
                }
            }
    }
    return out;
}

}  // namespace layercut
