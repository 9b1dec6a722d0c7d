#pragma once

#include <map>
#include <string>
#include <vector>

#include "posr/rng.hpp"
#include "posr/tensor.hpp"

namespace posr {

// Named trainable parameters. Parameters outlive any single tape; references
// stay valid for the lifetime of the store. Iteration order is the sorted
// name order, which checkpointing and the optimizer rely on.
class ParameterStore {
public:
    // Zero-initialized parameter with requires_grad set.
    Tensor& create(const std::string& name, Shape shape);

    // Gaussian init with the given standard deviation.
    Tensor& create_normal(const std::string& name, Shape shape, Rng& rng, real_t stddev);

    bool has(const std::string& name) const;
    Tensor& get(const std::string& name);
    const Tensor& get(const std::string& name) const;

    std::vector<std::string> names() const;
    std::size_t size() const { return params_.size(); }
    std::int64_t total_elements() const;

    const std::map<std::string, Tensor>& map() const { return params_; }
    std::map<std::string, Tensor>& map() { return params_; }

    // Marks every parameter non-trainable (used for the frozen extractor).
    void freeze();
    bool frozen() const { return frozen_; }

    std::vector<std::pair<std::string, Tensor*>> entries();

private:
    std::map<std::string, Tensor> params_;
    bool frozen_ = false;
};

} // namespace posr
