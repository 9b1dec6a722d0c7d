#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "posr/discriminators.hpp"
#include "posr/generator.hpp"
#include "posr/losses.hpp"
#include "posr/optimizer.hpp"

namespace posr {

// Full description of one training run. Loaded from a `key = value` file,
// every key overridable from the command line; see read_config_file /
// make_train_config.
struct TrainConfig {
    int stage = 1;
    std::int64_t iterations = 1000;
    int batch_size = 4;

    double lr_initial = 5e-5;
    // Absolute iterations at which the learning rate halves; strictly
    // increasing. The config file may list successive interval lengths
    // instead (lr_schedule_mode = cumulative, the default reading).
    std::vector<std::int64_t> lr_halving_points;

    AdamConfig adam;
    LossWeights weights; // stage 2
    std::uint64_t seed = 1;

    GeneratorSpec generator = GeneratorSpec::make(128, 64, 4);
    int disc_base_channels = 64;
    int pixel_disc_blocks = 8;
    int feature_disc_blocks = 7;
    FeatureExtractorSpec phi;

    std::string manifest;
    std::string out_dir = "runs/run";
    std::string stage1_checkpoint; // required for stage 2
    std::string phi_weights;       // optional external extractor weights

    int patch_size = 96;
    int patch_stride = 48;
    bool augment = true;
    bool antialias = true;

    std::int64_t log_interval = 100;
    std::int64_t checkpoint_interval = 1000;
    PerceptualDistance perceptual_distance = PerceptualDistance::squared;

    int tile_size = 128;
    int tile_overlap = 8;

    void validate() const;
    // Hash of the semantically relevant fields, stored in checkpoints so a
    // resume under a different configuration is flagged.
    std::string hash() const;
};

using ConfigMap = std::map<std::string, std::string>;

// `key = value` lines; '#' comments; keys are snake_case field names.
ConfigMap read_config_file(const std::string& path);

// Builds and validates a TrainConfig from raw keys (file contents merged with
// command line overrides). Unknown keys raise ConfigError.
TrainConfig make_train_config(const ConfigMap& values);

// Piecewise-constant schedule: the initial rate halves once per passed point.
double lr_at(std::int64_t iteration, const TrainConfig& config);

} // namespace posr
