#pragma once

#include "layercut/image.hpp"
#include "layercut/math.hpp"
#include "layercut/raster.hpp"

namespace layercut {

struct LossResult {
    double value = 0.0;
    Image d_normal;  // gradient w.r.t. the layer's rendered normals (when applicable)
    Image d_rgb;     // gradient w.r.t. the layer's rendered rgb (when applicable)
};

namespace detail_loss {

inline void check_dims(const RenderBuffers& a, const RenderBuffers& b, const char* what) {
    require(a.width == b.width && a.height == b.height, what);
}

}  // namespace detail_loss

/// Geometry reconstruction loss of one layer against the scan, masked by
/// the scan's segmentation channel:
///   human:  || (N^p - N^scan) . S_h ||^2
///   object: || (N^p - N^scan) . S_o ||^2 + || A^p - A^scan . S_o ||^2
/// The mask term contributes value only; silhouette gradients are not
/// modeled by the rasterizer.
inline LossResult recon_geo_loss(const RenderBuffers& layer, const RenderBuffers& scan,
                                 Layer which) {
    detail_loss::check_dims(layer, scan, "recon_geo_loss: dims mismatch");
    const auto& seg = which == Layer::Human ? scan.seg_h : scan.seg_o;
    LossResult out;
    out.d_normal = Image(layer.height, layer.width, 3);
    for (int r = 0; r < layer.height; ++r)
        for (int c = 0; c < layer.width; ++c) {
            const size_t i = layer.idx(r, c);
            if (seg[i]) {
                for (int ch = 0; ch < 3; ++ch) {
                    const double diff = layer.normal.at(r, c, ch) - scan.normal.at(r, c, ch);
                    out.value += diff * diff;
                    out.d_normal.at(r, c, ch) = 2.0 * diff;
                }
            }
            if (which == Layer::Object) {
                const double diff =
                    static_cast<double>(layer.mask[i]) - static_cast<double>(scan.mask[i] & seg[i]);
                out.value += diff * diff;
            }
        }
    return out;
}

/// Segmentation consistency of the jointly rasterized composite against the
/// scan's one-hot channels. Value only: per-face constant channels carry no
/// interior gradient.
inline double seg_comp_loss(const RenderBuffers& composite, const RenderBuffers& scan) {
    detail_loss::check_dims(composite, scan, "seg_comp_loss: dims mismatch");
    double value = 0.0;
    for (size_t i = 0; i < composite.seg_h.size(); ++i) {
        const double dh = static_cast<double>(composite.seg_h[i]) - static_cast<double>(scan.seg_h[i]);
        const double dob = static_cast<double>(composite.seg_o[i]) - static_cast<double>(scan.seg_o[i]);
        value += dh * dh + dob * dob;
    }
    return value;
}

/// Texture reconstruction loss of one layer: || (I^p - I^scan) . S ||^2.
inline LossResult recon_tex_loss(const RenderBuffers& layer, const RenderBuffers& scan,
                                 Layer which) {
    detail_loss::check_dims(layer, scan, "recon_tex_loss: dims mismatch");
    const auto& seg = which == Layer::Human ? scan.seg_h : scan.seg_o;
    LossResult out;
    out.d_rgb = Image(layer.height, layer.width, 3);
    for (int r = 0; r < layer.height; ++r)
        for (int c = 0; c < layer.width; ++c) {
            const size_t i = layer.idx(r, c);
            if (!seg[i]) continue;
            for (int ch = 0; ch < 3; ++ch) {
                const double diff = layer.rgb.at(r, c, ch) - scan.rgb.at(r, c, ch);
                out.value += diff * diff;
                out.d_rgb.at(r, c, ch) = 2.0 * diff;
            }
        }
    return out;
}

}  // namespace layercut
