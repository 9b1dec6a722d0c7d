#pragma once

#include <map>
#include <string>

#include "posr/optimizer.hpp"
#include "posr/param_store.hpp"

namespace posr {

// Versioned training snapshot: named parameter stores ("g", "dp", "df",
// "phi"), optimizer moments, iteration counter, sampler RNG state and config
// hash. The on-disk layout is a magic tag, a JSON header (names, shapes,
// dtypes, byte offsets), then the raw little-endian arrays. Round trips are
// bit exact.
struct Checkpoint {
    int version = 1;
    int stage = 1;
    std::int64_t iteration = 0;
    std::string config_hash;
    std::string rng_state;
    // Free-form descriptors (generator architecture fields live here so a
    // checkpoint alone is enough to run inference).
    std::map<std::string, std::string> meta;
    std::map<std::string, ParameterStore> stores;
    std::map<std::string, AdamState> adam;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Standalone parameter-store files (the ingestion path for externally
// converted feature-extractor weights) reuse the same container with a single
// store named "params".
void save_parameter_store(const ParameterStore& store, const std::string& path);
ParameterStore load_parameter_store(const std::string& path);

} // namespace posr
