#pragma once

#include <cstdint>
#include <vector>

#include "posr/param_store.hpp"
#include "posr/tape.hpp"

namespace posr {

enum class DiscKind { pixel, feature };
enum class DiscHead { fully_connected, fully_convolutional };

// Strided-conv critic. An entry conv maps the input to base_channels, then
// num_blocks conv+LeakyReLU(0.2) blocks alternate stride 2 / stride 1
// starting with stride 2; channels double at every stride-2 block up to
// max_channels. The pixel kind finishes with flatten -> fc_hidden -> 1 and is
// tied to input_size; the feature kind finishes with two 1x1 convs and global
// average pooling, so it accepts any spatial size.
struct DiscriminatorSpec {
    DiscKind kind = DiscKind::pixel;
    int base_channels = 64;
    int num_blocks = 8;
    DiscHead head = DiscHead::fully_connected;
    int in_channels = 3;
    int input_size = 96;
    int fc_hidden = 1024;
    int max_channels = 512;

    static DiscriminatorSpec pixel(int base = 64, int blocks = 8, int input = 96);
    static DiscriminatorSpec feature(int feature_channels, int base = 64, int blocks = 7);

    // Channel count after block i (i in [0, num_blocks]); index 0 is the
    // entry conv output.
    std::vector<int> channel_plan() const;
    int spatial_after_blocks() const; // FC head only; from input_size
};

ParameterStore build_discriminator(const DiscriminatorSpec& spec, std::uint64_t seed);

// Raw (pre-sigmoid) realness score per sample, shape [N,1,1,1].
Tensor disc_forward(Tape& tape, const DiscriminatorSpec& spec, const ParameterStore& store,
                    const Tensor& x, bool frozen = false);

std::int64_t count_parameters(const DiscriminatorSpec& spec);

// Fixed convolutional feature extractor standing in for a pretrained
// backbone: conv(3x3)+ReLU stages with the given channels and strides,
// deterministically seeded, never trained. Externally converted weights can
// be loaded over it through the checkpoint parameter-store format.
struct FeatureExtractorSpec {
    std::vector<int> channels{32, 64, 128, 128};
    std::vector<int> strides{1, 2, 2, 1};
    int in_channels = 3;
    std::uint64_t seed = 0x706f7372;

    int out_channels() const { return channels.empty() ? in_channels : channels.back(); }
    void validate() const;
};

ParameterStore build_feature_extractor(const FeatureExtractorSpec& spec);
Tensor feature_extract(Tape& tape, const FeatureExtractorSpec& spec,
                       const ParameterStore& store, const Tensor& image);
std::int64_t count_parameters(const FeatureExtractorSpec& spec);

// sigmoid(score_a - mean(scores_b)): realness of each row of `a` relative to
// the average score of the opposing batch half.
Tensor relativistic_criterion(Tape& tape, const Tensor& score_a, const Tensor& scores_b);

} // namespace posr
