#include "posr/optimizer.hpp"

#include <cmath>
#include <functional>
#include <span>

#include "posr/error.hpp"

namespace posr {

void AdamState::ensure(const ParameterStore& params) {
    for (const auto& [name, t] : params.map()) {
        const auto count = static_cast<std::size_t>(t.numel());
        auto& mv = m[name];
        auto& vv = v[name];
        if (mv.size() != count) {
            mv.assign(count, 0);
        }
        if (vv.size() != count) {
            vv.assign(count, 0);
        }
    }
}

namespace {

using GradLookup = std::function<std::span<const real_t>(const std::string&, Tensor&)>;

void apply_update(ParameterStore& params, const GradLookup& grad_of, AdamState& state,
                  double lr, const AdamConfig& cfg) {
    state.ensure(params);
    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

    for (auto& [name, t] : params.map()) {
        auto g = grad_of(name, t);
        auto& m = state.m[name];
        auto& v = state.v[name];
        auto p = t.mutable_data();
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double gi = static_cast<double>(g[i]);
            if (!std::isfinite(gi)) {
                throw NumericError("non-finite gradient for parameter '" + name + "' at step " +
                                   std::to_string(state.step));
            }
            const double mi = cfg.beta1 * static_cast<double>(m[i]) + (1.0 - cfg.beta1) * gi;
            const double vi = cfg.beta2 * static_cast<double>(v[i]) + (1.0 - cfg.beta2) * gi * gi;
            m[i] = static_cast<real_t>(mi);
            v[i] = static_cast<real_t>(vi);
            const double m_hat = mi / bc1;
            const double v_hat = vi / bc2;
            p[i] -= static_cast<real_t>(lr * m_hat / (std::sqrt(v_hat) + cfg.eps));
        }
    }
}

} // namespace

void adam_step(ParameterStore& params, Tape& tape, AdamState& state, double lr,
               const AdamConfig& cfg) {
    std::vector<real_t> zeros;
    apply_update(
        params,
        [&](const std::string&, Tensor& t) -> std::span<const real_t> {
            if (tape.find(t) >= 0) {
                return tape.grad(t);
            }
            // Parameter never touched this pass: zero gradient.
            if (zeros.size() < static_cast<std::size_t>(t.numel())) {
                zeros.assign(static_cast<std::size_t>(t.numel()), 0);
            }
            return {zeros.data(), static_cast<std::size_t>(t.numel())};
        },
        state, lr, cfg);
}

void adam_step_raw(ParameterStore& params,
                   const std::map<std::string, std::vector<real_t>>& grads, AdamState& state,
                   double lr, const AdamConfig& cfg) {
    std::vector<real_t> zeros;
    apply_update(
        params,
        [&](const std::string& name, Tensor& t) -> std::span<const real_t> {
            if (auto it = grads.find(name); it != grads.end()) {
                return {it->second.data(), it->second.size()};
            }
            if (zeros.size() < static_cast<std::size_t>(t.numel())) {
                zeros.assign(static_cast<std::size_t>(t.numel()), 0);
            }
            return {zeros.data(), static_cast<std::size_t>(t.numel())};
        },
        state, lr, cfg);
}

} // namespace posr
