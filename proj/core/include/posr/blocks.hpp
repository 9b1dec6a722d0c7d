#pragma once

#include <cstdint>
#include <string>

#include "posr/ops.hpp"
#include "posr/param_store.hpp"

namespace posr {

// Squeeze-style channel gate: global pooling, a 1x1 bottleneck conv pair
// (reduction ratio 16 by default) with ReLU between and Sigmoid after, then a
// per-channel multiply back onto the input.
struct ChannelAttentionSpec {
    int channels = 64;
    int reduction = 16;

    int bottleneck() const { return channels / reduction > 0 ? channels / reduction : 1; }
};

// Residual block: convs_per_block 3x3 convolutions (one shared weight/bias
// pair when share_parameters) with ReLU between them, channel attention, and
// a local skip connection. Input and output shapes are identical.
struct RCABSpec {
    int channels = 64;
    int kernel = 3;
    int convs_per_block = 2;
    bool share_parameters = true;
    bool use_attention = true;

    ChannelAttentionSpec attention() const { return ChannelAttentionSpec{channels, 16}; }
};

void init_channel_attention(ParameterStore& store, const std::string& prefix,
                            const ChannelAttentionSpec& spec, Rng& rng, real_t init_scale = 1);
Tensor channel_attention_forward(Tape& tape, const ChannelAttentionSpec& spec,
                                 const ParameterStore& store, const std::string& prefix,
                                 const Tensor& x, bool frozen = false);

void init_rcab(ParameterStore& store, const std::string& prefix, const RCABSpec& spec,
               Rng& rng, real_t init_scale = 1);
Tensor rcab_forward(Tape& tape, const RCABSpec& spec, const ParameterStore& store,
                    const std::string& prefix, const Tensor& x, bool frozen = false);

std::int64_t count_parameters(const ChannelAttentionSpec& spec);
std::int64_t count_parameters(const RCABSpec& spec);

// He-style fan-in standard deviation for a conv weight.
real_t he_stddev(std::int64_t fan_in);

} // namespace posr
