#include "posr/discriminators.hpp"

#include <algorithm>

#include "posr/blocks.hpp"
#include "posr/error.hpp"
#include "posr/ops.hpp"

namespace posr {

namespace {

constexpr real_t kSlope = static_cast<real_t>(0.2);

Tensor pick(const ParameterStore& store, const std::string& name, bool frozen) {
    const Tensor& t = store.get(name);
    return frozen ? t.detached() : t;
}

int block_stride(int i) {
    return i % 2 == 0 ? 2 : 1;
}

} // namespace

DiscriminatorSpec DiscriminatorSpec::pixel(int base, int blocks, int input) {
    DiscriminatorSpec s;
    s.kind = DiscKind::pixel;
    s.base_channels = base;
    s.num_blocks = blocks;
    s.head = DiscHead::fully_connected;
    s.in_channels = 3;
    s.input_size = input;
    return s;
}

DiscriminatorSpec DiscriminatorSpec::feature(int feature_channels, int base, int blocks) {
    DiscriminatorSpec s;
    s.kind = DiscKind::feature;
    s.base_channels = base;
    s.num_blocks = blocks;
    s.head = DiscHead::fully_convolutional;
    s.in_channels = feature_channels;
    return s;
}

std::vector<int> DiscriminatorSpec::channel_plan() const {
    std::vector<int> plan;
    plan.reserve(static_cast<std::size_t>(num_blocks) + 1);
    int ch = base_channels;
    plan.push_back(ch);
    for (int i = 0; i < num_blocks; ++i) {
        if (block_stride(i) == 2) {
            ch = std::min(ch * 2, max_channels);
        }
        plan.push_back(ch);
    }
    return plan;
}

int DiscriminatorSpec::spatial_after_blocks() const {
    int s = input_size;
    for (int i = 0; i < num_blocks; ++i) {
        if (block_stride(i) == 2) {
            s = static_cast<int>(conv_out_extent(s, 3, 2, 1));
        }
    }
    return s;
}

ParameterStore build_discriminator(const DiscriminatorSpec& spec, std::uint64_t seed) {
    ParameterStore store;
    Rng rng(seed);
    const auto plan = spec.channel_plan();

    store.create_normal("entry.w", {plan[0], spec.in_channels, 3, 3}, rng,
                        he_stddev(9LL * spec.in_channels));
    store.create("entry.b", {plan[0], 1, 1, 1});
    for (int i = 0; i < spec.num_blocks; ++i) {
        const int cin = plan[static_cast<std::size_t>(i)];
        const int cout = plan[static_cast<std::size_t>(i) + 1];
        const std::string base = "block" + std::to_string(i);
        store.create_normal(base + ".w", {cout, cin, 3, 3}, rng, he_stddev(9LL * cin));
        store.create(base + ".b", {cout, 1, 1, 1});
    }

    const int last = plan.back();
    if (spec.head == DiscHead::fully_connected) {
        const int side = spec.spatial_after_blocks();
        const std::int64_t flat = static_cast<std::int64_t>(last) * side * side;
        store.create_normal("fc0.w", {spec.fc_hidden, flat, 1, 1}, rng, he_stddev(flat));
        store.create("fc0.b", {spec.fc_hidden, 1, 1, 1});
        store.create_normal("fc1.w", {1, spec.fc_hidden, 1, 1}, rng,
                            he_stddev(spec.fc_hidden));
        store.create("fc1.b", {1, 1, 1, 1});
    } else {
        const int mid = std::max(last / 4, 1);
        store.create_normal("headconv0.w", {mid, last, 1, 1}, rng, he_stddev(last));
        store.create("headconv0.b", {mid, 1, 1, 1});
        store.create_normal("headconv1.w", {1, mid, 1, 1}, rng, he_stddev(mid));
        store.create("headconv1.b", {1, 1, 1, 1});
    }
    return store;
}

Tensor disc_forward(Tape& tape, const DiscriminatorSpec& spec, const ParameterStore& store,
                    const Tensor& x, bool frozen) {
    const Shape& is = x.shape();
    if (is.c != spec.in_channels) {
        throw DimensionError("discriminator expects " + std::to_string(spec.in_channels) +
                             " channels, got " + is.str());
    }
    if (spec.head == DiscHead::fully_connected &&
        (is.h != spec.input_size || is.w != spec.input_size)) {
        throw DimensionError("fully connected head is built for " +
                             std::to_string(spec.input_size) + "x" +
                             std::to_string(spec.input_size) + " inputs, got " + is.str());
    }

    Tensor h = conv2d(tape, x, pick(store, "entry.w", frozen), pick(store, "entry.b", frozen),
                      1, 1);
    h = leaky_relu(tape, h, kSlope);
    for (int i = 0; i < spec.num_blocks; ++i) {
        const std::string base = "block" + std::to_string(i);
        h = conv2d(tape, h, pick(store, base + ".w", frozen), pick(store, base + ".b", frozen),
                   block_stride(i), 1);
        h = leaky_relu(tape, h, kSlope);
    }

    if (spec.head == DiscHead::fully_connected) {
        h = fully_connected(tape, h, pick(store, "fc0.w", frozen), pick(store, "fc0.b", frozen));
        h = leaky_relu(tape, h, kSlope);
        h = fully_connected(tape, h, pick(store, "fc1.w", frozen), pick(store, "fc1.b", frozen));
        return h;
    }
    h = conv2d(tape, h, pick(store, "headconv0.w", frozen), pick(store, "headconv0.b", frozen),
               1, 0);
    h = leaky_relu(tape, h, kSlope);
    h = conv2d(tape, h, pick(store, "headconv1.w", frozen), pick(store, "headconv1.b", frozen),
               1, 0);
    return global_avg_pool(tape, h);
}

std::int64_t count_parameters(const DiscriminatorSpec& spec) {
    const auto plan = spec.channel_plan();
    std::int64_t total = 9LL * spec.in_channels * plan[0] + plan[0];
    for (int i = 0; i < spec.num_blocks; ++i) {
        const std::int64_t cin = plan[static_cast<std::size_t>(i)];
        const std::int64_t cout = plan[static_cast<std::size_t>(i) + 1];
        total += 9 * cin * cout + cout;
    }
    const std::int64_t last = plan.back();
    if (spec.head == DiscHead::fully_connected) {
        const std::int64_t side = spec.spatial_after_blocks();
        const std::int64_t flat = last * side * side;
        total += flat * spec.fc_hidden + spec.fc_hidden;
        total += spec.fc_hidden + 1;
    } else {
        const std::int64_t mid = std::max<std::int64_t>(last / 4, 1);
        total += last * mid + mid;
        total += mid + 1;
    }
    return total;
}

void FeatureExtractorSpec::validate() const {
    if (channels.empty() || channels.size() != strides.size()) {
        throw ConfigError("feature extractor needs matching channel and stride lists");
    }
    for (int s : strides) {
        if (s < 1) {
            throw ConfigError("feature extractor strides must be positive");
        }
    }
}

ParameterStore build_feature_extractor(const FeatureExtractorSpec& spec) {
    spec.validate();
    ParameterStore store;
    Rng rng(spec.seed);
    int cin = spec.in_channels;
    for (std::size_t i = 0; i < spec.channels.size(); ++i) {
        const int cout = spec.channels[i];
        const std::string base = "stage" + std::to_string(i);
        store.create_normal(base + ".w", {cout, cin, 3, 3}, rng, he_stddev(9LL * cin));
        store.create(base + ".b", {cout, 1, 1, 1});
        cin = cout;
    }
    store.freeze();
    return store;
}

Tensor feature_extract(Tape& tape, const FeatureExtractorSpec& spec,
                       const ParameterStore& store, const Tensor& image) {
    spec.validate();
    Tensor h = image;
    for (std::size_t i = 0; i < spec.channels.size(); ++i) {
        const std::string base = "stage" + std::to_string(i);
        // Store is frozen: weights act as constants, gradient only flows to
        // the image.
        h = conv2d(tape, h, store.get(base + ".w"), store.get(base + ".b"),
                   spec.strides[i], 1);
        h = relu(tape, h);
    }
    return h;
}

std::int64_t count_parameters(const FeatureExtractorSpec& spec) {
    spec.validate();
    std::int64_t total = 0;
    std::int64_t cin = spec.in_channels;
    for (int cout : spec.channels) {
        total += 9 * cin * cout + cout;
        cin = cout;
    }
    return total;
}

Tensor relativistic_criterion(Tape& tape, const Tensor& score_a, const Tensor& scores_b) {
    if (!scores_b.defined() || scores_b.numel() < 1) {
        throw ContractError("relativistic_criterion: opposing score batch is empty");
    }
    Tensor mean_b = mean_all(tape, scores_b);
    Tensor shifted = sub_scalar(tape, score_a, mean_b);
    return sigmoid(tape, shifted);
}

} // namespace posr
