#pragma once

#include "posr/discriminators.hpp"
#include "posr/tape.hpp"

namespace posr {

// Balance factors of the stage-2 generator objective
// total = perceptual + lambda * L1 + eta_pixel * adv_pixel + eta_feature * adv_feature.
struct LossWeights {
    double lambda = 0;
    double eta_pixel = 0;
    double eta_feature = 0;

    // Presets tuned per target distortion band: 1 -> (100, 0.005, 0.005),
    // 2 -> (30, 0.005, 0.005), 3 -> (10, 0.125, 0.125).
    static LossWeights region(int r);
};

struct CharbonnierParams {
    double epsilon = 1e-3;
};

// Mean over all elements of sqrt((hr - sr)^2 + eps^2); smooth at sr == hr.
Tensor charbonnier_loss(Tape& tape, const Tensor& sr, const Tensor& hr, double eps = 1e-3);

// Mean absolute difference.
Tensor l1_loss(Tape& tape, const Tensor& sr, const Tensor& hr);

enum class PerceptualDistance { squared, absolute };

// Distance between extractor responses; the hr branch is detached so the
// gradient reaches sr only.
Tensor perceptual_loss(Tape& tape, const FeatureExtractorSpec& phi_spec,
                       const ParameterStore& phi, const Tensor& sr, const Tensor& hr,
                       PerceptualDistance distance = PerceptualDistance::squared);

// Relativistic-average adversarial losses over raw scores. Log arguments are
// clamped at 1e-12 so saturated scores stay finite.
Tensor adv_loss_generator(Tape& tape, const Tensor& real_scores, const Tensor& fake_scores);
Tensor adv_loss_discriminator(Tape& tape, const Tensor& real_scores,
                              const Tensor& fake_scores);

// Weighted sum of the stage-2 terms. Zero-weighted components are skipped
// entirely (their tensors may be undefined), so they contribute neither value
// nor gradient.
Tensor total_generator_loss(Tape& tape, const LossWeights& weights, const Tensor& perceptual,
                            const Tensor& l1, const Tensor& adv_pixel,
                            const Tensor& adv_feature);

inline constexpr double kLogFloor = 1e-12;

} // namespace posr
