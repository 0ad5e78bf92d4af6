#pragma once

#include "layercut/image.hpp"
#include "layercut/math.hpp"
#include "layercut/rig.hpp"

#include <memory>
#include <string>
#include <utility>

namespace layercut {

/// DDPM-style schedule: T steps, linear betas, cumulative alpha-bar, and the
/// SDS weighting w(t) = 1 - alpha_bar(t).
struct NoiseSchedule {
    int T = 0;
    VecX alpha_bar;  // index t-1 holds alpha_bar_t, strictly decreasing

    static NoiseSchedule linear(int steps = 1000, double beta_start = 1e-4,
                                double beta_end = 2e-2) {
        require(steps >= 1, "NoiseSchedule: steps must be positive");
        NoiseSchedule s;
        s.T = steps;
        s.alpha_bar.resize(steps);
        double prod = 1.0;
        for (int t = 0; t < steps; ++t) {
            const double beta = steps == 1 ? beta_start
                                           : beta_start + (beta_end - beta_start) * t / (steps - 1);
            prod *= 1.0 - beta;
            s.alpha_bar[t] = prod;
        }
        return s;
    }

    double alpha_bar_at(int t) const {
        require(t >= 1 && t <= T, "NoiseSchedule: t out of range");
        return alpha_bar[t - 1];
    }

    double weight(int t) const { return 1.0 - alpha_bar_at(t); }
};

/// Conditioning for a noise prediction: prompts, 2D pose keypoints, and the
/// coarse view direction.
struct Condition {
    std::string text_positive;
    std::string text_negative;
    std::array<Keypoint2D, 18> pose_keypoints{};
    ViewTag view_tag = ViewTag::Front;
};

inline const char* view_tag_text(ViewTag tag) {
    switch (tag) {
        case ViewTag::Front: return "front view";
        case ViewTag::Side: return "side view";
        default: return "back view";
    }
}

/// Guidance failures, kept distinct so callers can react per kind:
/// timeouts/unreachable endpoints, HTTP-level errors, malformed responses.
struct GuidanceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct GuidanceTimeoutError : GuidanceError {
    using GuidanceError::GuidanceError;
};
struct GuidanceHttpError : GuidanceError {
    using GuidanceError::GuidanceError;
};
struct GuidanceMalformedError : GuidanceError {
    using GuidanceError::GuidanceError;
};

/// Noise-prediction contract. Implementations must be deterministic given
/// (x_t, cond, t) and safe for concurrent calls.
class GuidanceModel {
public:
    virtual ~GuidanceModel() = default;
    virtual Image predict_noise(const Image& x_t, const Condition& cond, int t) const = 0;
};

/// Forward diffusion: x_t = sqrt(ab_t) x + sqrt(1 - ab_t) eps. Returns the
/// noised image and the sampled noise; deterministic per seed.
inline std::pair<Image, Image> forward_diffuse(const Image& x, int t, const NoiseSchedule& schedule,
                                               std::uint64_t rng_seed) {
    const double ab = schedule.alpha_bar_at(t);
    const double sa = std::sqrt(ab), sb = std::sqrt(1.0 - ab);
    Rng rng(rng_seed);
    Image eps(x.height, x.width, x.channels);
    Image xt(x.height, x.width, x.channels);
    for (size_t i = 0; i < x.data.size(); ++i) {
        eps.data[i] = rng.normal();
        xt.data[i] = sa * x.data[i] + sb * eps.data[i];
    }
    return {std::move(xt), std::move(eps)};
}

/// Score-distillation pixel gradient: w(t) (eps_hat - eps) * d z_t / d x,
/// with the latent encoder the identity so d z_t / d x = sqrt(ab_t).
inline Image sds_pixel_gradient(const Image& x, const Condition& cond, const GuidanceModel& model,
                                const NoiseSchedule& schedule, int t, std::uint64_t rng_seed) {
    auto [xt, eps] = forward_diffuse(x, t, schedule, rng_seed);
    const Image eps_hat = model.predict_noise(xt, cond, t);
    require(eps_hat.height == x.height && eps_hat.width == x.width &&
                eps_hat.channels == x.channels,
            "sds_pixel_gradient: prediction shape mismatch");
    const double scale = schedule.weight(t) * std::sqrt(schedule.alpha_bar_at(t));
    Image grad(x.height, x.width, x.channels);
    for (size_t i = 0; i < x.data.size(); ++i)
        grad.data[i] = scale * (eps_hat.data[i] - eps.data[i]);
    return grad;
}

/// Analytic stand-in for a diffusion model: predicts exactly the noise that
/// would have produced x_t from `target`, so eps_hat - eps =
/// sqrt(ab)(x - target)/sqrt(1-ab) and SDS descent pulls x toward target.
class MockGuidance : public GuidanceModel {
public:
    MockGuidance(Image target, NoiseSchedule schedule)
        : target_(std::move(target)), schedule_(std::move(schedule)) {}

    Image predict_noise(const Image& x_t, const Condition&, int t) const override {
        require(x_t.height == target_.height && x_t.width == target_.width &&
                    x_t.channels == target_.channels,
                "MockGuidance: shape mismatch");
        const double ab = schedule_.alpha_bar_at(t);
        const double sa = std::sqrt(ab), sb = std::sqrt(1.0 - ab);
        Image out(x_t.height, x_t.width, x_t.channels);
        for (size_t i = 0; i < x_t.data.size(); ++i)
            out.data[i] = (x_t.data[i] - sa * target_.data[i]) / sb;
        return out;
    }

    const Image& target() const { return target_; }

private:
    Image target_;
    NoiseSchedule schedule_;
};

inline std::shared_ptr<GuidanceModel> mock_guidance(Image target,
                                                    NoiseSchedule schedule = NoiseSchedule::linear()) {
    return std::make_shared<MockGuidance>(std::move(target), std::move(schedule));
}

enum class PromptSpace { Human, Composite };

/// Prompt templates: the human space describes the person and negates the
/// object; the composite space describes the person wearing the object.
/// The view tag is appended to the positive prompt.
inline Condition build_prompts(PromptSpace space, const std::string& gender_word,
                               const std::string& object_name, ViewTag view_tag) {
    Condition cond;
    cond.view_tag = view_tag;
    if (space == PromptSpace::Human) {
        cond.text_positive = "A photo of a " + gender_word + ", " + view_tag_text(view_tag);
        cond.text_negative = object_name;
    } else {
        cond.text_positive =
            "A photo of a " + gender_word + " wearing " + object_name + ", " + view_tag_text(view_tag);
        cond.text_negative = "";
    }
    return cond;
}

}  // namespace layercut
