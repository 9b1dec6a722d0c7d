#pragma once

#include <cstdint>

#include "posr/blocks.hpp"
#include "posr/param_store.hpp"

namespace posr {

// Super-resolution generator: 3->C head conv, a cascade of residual channel
// attention blocks, a C->C tail conv with a global skip from the head output,
// log2(scale) sub-pixel x2 upsampling stages (conv C->4C + pixel shuffle),
// and a final C->3 conv. Output is left unclipped; clipping happens at image
// export.
struct GeneratorSpec {
    int num_blocks = 128;
    int channels = 64;
    int scale = 4;
    RCABSpec block{64, 3, 2, true, true};
    real_t init_scale = 1;

    static GeneratorSpec make(int blocks, int channels, int scale = 4, bool share = true,
                              bool attention = true);
    int upsample_stages() const;
    void validate() const;
};

ParameterStore build_generator(const GeneratorSpec& spec, std::uint64_t seed);
Tensor gposr_forward(Tape& tape, const GeneratorSpec& spec, const ParameterStore& store,
                     const Tensor& lr_image, bool frozen = false);
std::int64_t count_parameters(const GeneratorSpec& spec);

} // namespace posr
