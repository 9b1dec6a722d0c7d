#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace posr {

// Deterministic random source. Distributions are hand-rolled on top of the
// raw engine output so that sequences depend only on the seed and the call
// order, not on standard library internals. State round-trips through a
// string for checkpointing.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0);

    std::uint64_t next_u64();

    // Uniform in [0, 1).
    double uniform();

    // Standard normal via Box-Muller (pairs cached).
    double normal();

    // Uniform integer in [0, n), unbiased. n must be positive.
    std::int64_t below(std::int64_t n);

    std::string serialize() const;
    void deserialize(const std::string& state);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace posr
