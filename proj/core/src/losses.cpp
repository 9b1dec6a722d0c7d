#include "posr/losses.hpp"

#include "posr/error.hpp"
#include "posr/ops.hpp"

namespace posr {

LossWeights LossWeights::region(int r) {
    switch (r) {
    case 1:
        return {100.0, 0.005, 0.005};
    case 2:
        return {30.0, 0.005, 0.005};
    case 3:
        return {10.0, 0.125, 0.125};
    default:
        throw ConfigError("unknown region preset " + std::to_string(r) + " (expected 1, 2, 3)");
    }
}

Tensor charbonnier_loss(Tape& tape, const Tensor& sr, const Tensor& hr, double eps) {
    if (!(sr.shape() == hr.shape())) {
        throw DimensionError("charbonnier_loss: shapes " + sr.shape().str() + " and " +
                             hr.shape().str() + " do not match");
    }
    if (!(eps > 0)) {
        throw ContractError("charbonnier_loss: epsilon must be positive");
    }
    Tensor diff = sub(tape, hr, sr);
    Tensor sq = square(tape, diff);
    Tensor shifted = affine(tape, sq, 1, static_cast<real_t>(eps * eps));
    Tensor rho = elem_sqrt(tape, shifted);
    return mean_all(tape, rho);
}

Tensor l1_loss(Tape& tape, const Tensor& sr, const Tensor& hr) {
    if (!(sr.shape() == hr.shape())) {
        throw DimensionError("l1_loss: shapes " + sr.shape().str() + " and " +
                             hr.shape().str() + " do not match");
    }
    return mean_all(tape, elem_abs(tape, sub(tape, hr, sr)));
}

Tensor perceptual_loss(Tape& tape, const FeatureExtractorSpec& phi_spec,
                       const ParameterStore& phi, const Tensor& sr, const Tensor& hr,
                       PerceptualDistance distance) {
    if (!(sr.shape() == hr.shape())) {
        throw DimensionError("perceptual_loss: shapes " + sr.shape().str() + " and " +
                             hr.shape().str() + " do not match");
    }
    Tensor f_sr = feature_extract(tape, phi_spec, phi, sr);
    Tensor f_hr = feature_extract(tape, phi_spec, phi, hr.detached());
    Tensor diff = sub(tape, f_sr, f_hr);
    if (distance == PerceptualDistance::squared) {
        return mean_all(tape, square(tape, diff));
    }
    return mean_all(tape, elem_abs(tape, diff));
}

namespace {

void check_scores(const char* op, const Tensor& real_scores, const Tensor& fake_scores) {
    if (!real_scores.defined() || !fake_scores.defined() || real_scores.numel() < 1 ||
        fake_scores.numel() < 1) {
        throw ContractError(std::string(op) + ": both score batches must be nonempty");
    }
}

} // namespace

Tensor adv_loss_generator(Tape& tape, const Tensor& real_scores, const Tensor& fake_scores) {
    check_scores("adv_loss_generator", real_scores, fake_scores);
    // The generator wins when reals look no more real than the average fake
    // and fakes look more real than the average real.
    Tensor c_real = relativistic_criterion(tape, real_scores, fake_scores);
    Tensor c_fake = relativistic_criterion(tape, fake_scores, real_scores);
    Tensor one_minus = affine(tape, c_real, -1, 1);
    Tensor term_real = mean_all(tape, log_clamped(tape, one_minus, static_cast<real_t>(kLogFloor)));
    Tensor term_fake = mean_all(tape, log_clamped(tape, c_fake, static_cast<real_t>(kLogFloor)));
    Tensor total = add(tape, term_real, term_fake);
    return affine(tape, total, -1, 0);
}

Tensor adv_loss_discriminator(Tape& tape, const Tensor& real_scores,
                              const Tensor& fake_scores) {
    check_scores("adv_loss_discriminator", real_scores, fake_scores);
    Tensor c_real = relativistic_criterion(tape, real_scores, fake_scores);
    Tensor c_fake = relativistic_criterion(tape, fake_scores, real_scores);
    Tensor term_real = mean_all(tape, log_clamped(tape, c_real, static_cast<real_t>(kLogFloor)));
    Tensor one_minus = affine(tape, c_fake, -1, 1);
    Tensor term_fake = mean_all(tape, log_clamped(tape, one_minus, static_cast<real_t>(kLogFloor)));
    Tensor total = add(tape, term_real, term_fake);
    return affine(tape, total, -1, 0);
}

Tensor total_generator_loss(Tape& tape, const LossWeights& weights, const Tensor& perceptual,
                            const Tensor& l1, const Tensor& adv_pixel,
                            const Tensor& adv_feature) {
    if (!perceptual.defined() || perceptual.numel() != 1) {
        throw ContractError("total_generator_loss: perceptual component must be scalar");
    }
    Tensor total = perceptual;
    const auto accumulate = [&](const Tensor& term, double weight, const char* name) {
        if (weight == 0.0) {
            return;
        }
        if (!term.defined() || term.numel() != 1) {
            throw ContractError(std::string("total_generator_loss: ") + name +
                                " component must be scalar when its weight is nonzero");
        }
        total = add(tape, total, affine(tape, term, static_cast<real_t>(weight), 0));
    };
    accumulate(l1, weights.lambda, "l1");
    accumulate(adv_pixel, weights.eta_pixel, "adv_pixel");
    accumulate(adv_feature, weights.eta_feature, "adv_feature");
    return total;
}

} // namespace posr
