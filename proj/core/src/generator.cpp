#include "posr/generator.hpp"

#include "posr/error.hpp"

namespace posr {

namespace {

Tensor pick(const ParameterStore& store, const std::string& name, bool frozen) {
    const Tensor& t = store.get(name);
    return frozen ? t.detached() : t;
}

} // namespace

GeneratorSpec GeneratorSpec::make(int blocks, int channels, int scale, bool share,
                                  bool attention) {
    GeneratorSpec spec;
    spec.num_blocks = blocks;
    spec.channels = channels;
    spec.scale = scale;
    spec.block = RCABSpec{channels, 3, 2, share, attention};
    return spec;
}

int GeneratorSpec::upsample_stages() const {
    int s = scale;
    int stages = 0;
    while (s > 1) {
        if (s % 2 != 0) {
            throw ContractError("generator scale must be a power of 2, got " +
                                std::to_string(scale));
        }
        s /= 2;
        ++stages;
    }
    return stages;
}

void GeneratorSpec::validate() const {
    if (num_blocks < 1 || channels < 1) {
        throw ConfigError("generator needs at least one block and one channel");
    }
    if (block.channels != channels) {
        throw ConfigError("generator block channel count does not match generator channels");
    }
    (void)upsample_stages();
}

ParameterStore build_generator(const GeneratorSpec& spec, std::uint64_t seed) {
    spec.validate();
    ParameterStore store;
    Rng rng(seed);
    const int c = spec.channels;
    const real_t s = spec.init_scale;

    store.create_normal("head.w", {c, 3, 3, 3}, rng, s * he_stddev(3 * 3 * 3));
    store.create("head.b", {c, 1, 1, 1});
    for (int b = 0; b < spec.num_blocks; ++b) {
        init_rcab(store, "block" + std::to_string(b), spec.block, rng, s);
    }
    store.create_normal("tail.w", {c, c, 3, 3}, rng, s * he_stddev(9 * c));
    store.create("tail.b", {c, 1, 1, 1});
    const int stages = spec.upsample_stages();
    for (int u = 0; u < stages; ++u) {
        store.create_normal("up" + std::to_string(u) + ".w", {4 * c, c, 3, 3}, rng,
                            s * he_stddev(9 * c));
        store.create("up" + std::to_string(u) + ".b", {4 * c, 1, 1, 1});
    }
    store.create_normal("out.w", {3, c, 3, 3}, rng, s * he_stddev(9 * c));
    store.create("out.b", {3, 1, 1, 1});
    return store;
}

Tensor gposr_forward(Tape& tape, const GeneratorSpec& spec, const ParameterStore& store,
                     const Tensor& lr_image, bool frozen) {
    const Shape& is = lr_image.shape();
    if (is.c != 3) {
        throw DimensionError("generator expects a 3-channel input, got " + is.str());
    }
    if (is.h < 1 || is.w < 1 || is.n < 1) {
        throw ContractError("generator input must be non-empty, got " + is.str());
    }
    if (!all_finite(lr_image)) {
        throw ContractError("generator input contains non-finite values");
    }

    Tensor head = conv2d(tape, lr_image, pick(store, "head.w", frozen),
                         pick(store, "head.b", frozen), 1, 1);
    Tensor h = head;
    for (int b = 0; b < spec.num_blocks; ++b) {
        h = rcab_forward(tape, spec.block, store, "block" + std::to_string(b), h, frozen);
    }
    h = conv2d(tape, h, pick(store, "tail.w", frozen), pick(store, "tail.b", frozen), 1, 1);
    h = add(tape, h, head); // global skip

    const int stages = spec.upsample_stages();
    for (int u = 0; u < stages; ++u) {
        const std::string base = "up" + std::to_string(u);
        h = conv2d(tape, h, pick(store, base + ".w", frozen), pick(store, base + ".b", frozen),
                   1, 1);
        h = pixel_shuffle(tape, h, 2);
    }
    return conv2d(tape, h, pick(store, "out.w", frozen), pick(store, "out.b", frozen), 1, 1);
}

std::int64_t count_parameters(const GeneratorSpec& spec) {
    const std::int64_t c = spec.channels;
    std::int64_t total = 0;
    total += 3LL * 3 * 3 * c + c;                               // head
    total += spec.num_blocks * count_parameters(spec.block);    // body
    total += 9 * c * c + c;                                     // tail
    total += spec.upsample_stages() * (9 * c * (4 * c) + 4 * c); // sub-pixel stages
    total += 9 * c * 3 + 3;                                     // output conv
    return total;
}

} // namespace posr
