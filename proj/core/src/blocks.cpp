#include "posr/blocks.hpp"

#include <cmath>

#include "posr/error.hpp"

namespace posr {

real_t he_stddev(std::int64_t fan_in) {
    return static_cast<real_t>(std::sqrt(2.0 / static_cast<double>(fan_in)));
}

namespace {

// Parameter access that optionally detaches, so a network can run under a
// tape without its weights joining the gradient computation.
Tensor pick(const ParameterStore& store, const std::string& name, bool frozen) {
    const Tensor& t = store.get(name);
    return frozen ? t.detached() : t;
}

std::string conv_name(const RCABSpec& spec, int use_index) {
    if (spec.share_parameters) {
        return "conv";
    }
    return "conv" + std::to_string(use_index);
}

} // namespace

void init_channel_attention(ParameterStore& store, const std::string& prefix,
                            const ChannelAttentionSpec& spec, Rng& rng, real_t init_scale) {
    const int mid = spec.bottleneck();
    store.create_normal(prefix + ".down.w", {mid, spec.channels, 1, 1}, rng,
                        init_scale * he_stddev(spec.channels));
    store.create(prefix + ".down.b", {mid, 1, 1, 1});
    store.create_normal(prefix + ".up.w", {spec.channels, mid, 1, 1}, rng,
                        init_scale * he_stddev(mid));
    store.create(prefix + ".up.b", {spec.channels, 1, 1, 1});
}

Tensor channel_attention_forward(Tape& tape, const ChannelAttentionSpec& spec,
                                 const ParameterStore& store, const std::string& prefix,
                                 const Tensor& x, bool frozen) {
    if (x.shape().c != spec.channels) {
        throw DimensionError("channel_attention: input " + x.shape().str() + " does not have " +
                             std::to_string(spec.channels) + " channels");
    }
    Tensor pooled = global_avg_pool(tape, x);
    Tensor down = conv2d(tape, pooled, pick(store, prefix + ".down.w", frozen),
                         pick(store, prefix + ".down.b", frozen), 1, 0);
    Tensor mid = relu(tape, down);
    Tensor up = conv2d(tape, mid, pick(store, prefix + ".up.w", frozen),
                       pick(store, prefix + ".up.b", frozen), 1, 0);
    Tensor descriptor = sigmoid(tape, up);
    return broadcast_mul(tape, descriptor, x);
}

void init_rcab(ParameterStore& store, const std::string& prefix, const RCABSpec& spec,
               Rng& rng, real_t init_scale) {
    const Shape conv_shape{spec.channels, spec.channels, spec.kernel, spec.kernel};
    const real_t stddev =
        init_scale * he_stddev(static_cast<std::int64_t>(spec.channels) * spec.kernel * spec.kernel);
    const int distinct = spec.share_parameters ? 1 : spec.convs_per_block;
    for (int i = 0; i < distinct; ++i) {
        const std::string base = prefix + "." + conv_name(spec, i);
        store.create_normal(base + ".w", conv_shape, rng, stddev);
        store.create(base + ".b", {spec.channels, 1, 1, 1});
    }
    if (spec.use_attention) {
        init_channel_attention(store, prefix + ".ca", spec.attention(), rng, init_scale);
    }
}

Tensor rcab_forward(Tape& tape, const RCABSpec& spec, const ParameterStore& store,
                    const std::string& prefix, const Tensor& x, bool frozen) {
    if (x.shape().c != spec.channels) {
        throw DimensionError("rcab: input " + x.shape().str() + " does not have " +
                             std::to_string(spec.channels) + " channels");
    }
    const int pad = spec.kernel / 2;
    Tensor h = x;
    for (int i = 0; i < spec.convs_per_block; ++i) {
        const std::string base = prefix + "." + conv_name(spec, i);
        h = conv2d(tape, h, pick(store, base + ".w", frozen), pick(store, base + ".b", frozen),
                   1, pad);
        if (i + 1 < spec.convs_per_block) {
            h = relu(tape, h);
        }
    }
    if (spec.use_attention) {
        h = channel_attention_forward(tape, spec.attention(), store, prefix + ".ca", h, frozen);
    }
    return add(tape, x, h);
}

std::int64_t count_parameters(const ChannelAttentionSpec& spec) {
    const std::int64_t c = spec.channels;
    const std::int64_t mid = spec.bottleneck();
    return (c * mid + mid) + (mid * c + c);
}

std::int64_t count_parameters(const RCABSpec& spec) {
    const std::int64_t c = spec.channels;
    const std::int64_t k = spec.kernel;
    const std::int64_t conv = k * k * c * c + c; // weight + bias
    const std::int64_t distinct = spec.share_parameters ? 1 : spec.convs_per_block;
    std::int64_t total = distinct * conv;
    if (spec.use_attention) {
        total += count_parameters(spec.attention());
    }
    return total;
}

} // namespace posr
