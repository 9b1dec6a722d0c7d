#pragma once

#include <map>
#include <string>
#include <vector>

#include "posr/param_store.hpp"
#include "posr/tape.hpp"

namespace posr {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected first/second moment estimates per parameter, keyed by name.
struct AdamState {
    std::int64_t step = 0;
    std::map<std::string, std::vector<real_t>> m;
    std::map<std::string, std::vector<real_t>> v;

    void ensure(const ParameterStore& params);
};

// One ADAM update over every parameter in the store, reading gradients from
// the tape (parameters the loss never reached see a zero gradient). Throws
// NumericError naming the parameter on a NaN/Inf gradient.
void adam_step(ParameterStore& params, Tape& tape, AdamState& state, double lr,
               const AdamConfig& cfg);

// Same update from explicit gradient buffers (used by tests and the
// reference comparisons).
void adam_step_raw(ParameterStore& params,
                   const std::map<std::string, std::vector<real_t>>& grads, AdamState& state,
                   double lr, const AdamConfig& cfg);

} // namespace posr
