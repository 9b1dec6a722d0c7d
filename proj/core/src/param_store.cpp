#include "posr/param_store.hpp"

#include "posr/error.hpp"

namespace posr {

Tensor& ParameterStore::create(const std::string& name, Shape shape) {
    auto [it, inserted] = params_.emplace(name, Tensor(shape));
    if (!inserted) {
        throw ContractError("parameter '" + name + "' already exists");
    }
    it->second.set_requires_grad(!frozen_);
    return it->second;
}

Tensor& ParameterStore::create_normal(const std::string& name, Shape shape, Rng& rng,
                                      real_t stddev) {
    Tensor& t = create(name, shape);
    for (real_t& v : t.mutable_data()) {
        v = static_cast<real_t>(rng.normal()) * stddev;
    }
    return t;
}

bool ParameterStore::has(const std::string& name) const {
    return params_.count(name) != 0;
}

Tensor& ParameterStore::get(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) {
        throw ContractError("unknown parameter '" + name + "'");
    }
    return it->second;
}

const Tensor& ParameterStore::get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) {
        throw ContractError("unknown parameter '" + name + "'");
    }
    return it->second;
}

std::vector<std::string> ParameterStore::names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const auto& [name, t] : params_) {
        out.push_back(name);
    }
    return out;
}

std::int64_t ParameterStore::total_elements() const {
    std::int64_t total = 0;
    for (const auto& [name, t] : params_) {
        total += t.numel();
    }
    return total;
}

void ParameterStore::freeze() {
    frozen_ = true;
    for (auto& [name, t] : params_) {
        t.set_requires_grad(false);
    }
}

std::vector<std::pair<std::string, Tensor*>> ParameterStore::entries() {
    std::vector<std::pair<std::string, Tensor*>> out;
    out.reserve(params_.size());
    for (auto& [name, t] : params_) {
        out.emplace_back(name, &t);
    }
    return out;
}

} // namespace posr
