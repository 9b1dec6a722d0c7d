#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "posr/checkpoint.hpp"
#include "posr/config.hpp"
#include "posr/dataset.hpp"
#include "posr/metrics.hpp"

namespace posr {

// Per-iteration numbers handed to test hooks and the logger. loss_recon is
// the reconstruction term (Charbonnier in stage 1, plain L1 in stage 2) and
// is logged under loss_charb.
struct IterStats {
    std::int64_t iteration = 0;
    int stage = 1;
    double loss_total = 0;
    double loss_recon = 0;
    double loss_perc = 0;
    double loss_adv_pixel = 0;
    double loss_adv_feature = 0;
    double loss_disc_pixel = 0;
    double loss_disc_feature = 0;
    double lr = 0;
    double sr_min = 0;
    double sr_max = 0;
};

struct TrainHooks {
    std::function<void(const IterStats&)> on_iter;
    // Return true to stop before the configured iteration budget (the final
    // checkpoint is still written).
    std::function<bool(const IterStats&)> stop_early;
};

// Loads every manifest image and cuts the training pool; empty datasets are
// a config error. Images smaller than the patch size are skipped with a
// warning on `log`.
PatchPool load_training_data(const TrainConfig& cfg, std::ostream& log);

// Stage 1: generator-only optimization of the Charbonnier objective.
Checkpoint train_stage1(const TrainConfig& cfg, const PatchPool& data, std::ostream& log,
                        const Checkpoint* resume = nullptr, const TrainHooks& hooks = {});

// Stage 2: alternating updates — pixel discriminator, feature discriminator
// (both on detached generator output), then the generator on the weighted
// total loss with both critics frozen. `init` is a stage-1 checkpoint for a
// fresh run or a stage-2 checkpoint to resume.
Checkpoint train_stage2(const TrainConfig& cfg, const PatchPool& data, const Checkpoint& init,
                        std::ostream& log, const TrainHooks& hooks = {});

// Generator spec reconstructed from checkpoint metadata.
GeneratorSpec generator_spec_of(const Checkpoint& ckpt);

// Single-image inference: unit-range input, clipped unit-range output,
// tiled with linear overlap blending when the input exceeds tile_size.
ImagePlane infer_image(const GeneratorSpec& spec, const ParameterStore& generator,
                       const ImagePlane& lr, int tile_size = 128, int tile_overlap = 8);
ImagePlane infer_image(const Checkpoint& ckpt, const ImagePlane& lr, int tile_size = 128,
                       int tile_overlap = 8);

struct EvalOptions {
    int border = 4;
    bool y_only = true;
    bool antialias = true;
    int tile_size = 128;
    int tile_overlap = 8;
};

struct EvalRow {
    std::string image;
    double psnr = 0;
    double ssim = 0;
    double rmse = 0;
    PirmRegion region = PirmRegion::region1;
};

// Degrade -> infer -> metrics per manifest entry. `ckpt` may be null for the
// identity protocol check (the HR image scores against itself).
std::vector<EvalRow> evaluate_images(const Checkpoint* ckpt,
                                     const std::vector<std::string>& hr_paths,
                                     const EvalOptions& options);
void write_eval_csv(const std::vector<EvalRow>& rows, std::ostream& out);

} // namespace posr
