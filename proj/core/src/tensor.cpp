#include "posr/tensor.hpp"

#include <cmath>
#include <sstream>

#include "posr/error.hpp"
#include "posr/tape.hpp"

namespace posr {

std::string Shape::str() const {
    std::ostringstream os;
    os << '[' << n << ',' << c << ',' << h << ',' << w << ']';
    return os.str();
}

Tensor::Tensor(Shape shape, real_t fill) : shape_(shape) {
    if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
        throw DimensionError("negative tensor extent " + shape.str());
    }
    store_ = std::make_shared<std::vector<real_t>>(static_cast<std::size_t>(shape.numel()), fill);
}

Tensor Tensor::from(Shape shape, std::vector<real_t> values) {
    if (static_cast<std::int64_t>(values.size()) != shape.numel()) {
        throw DimensionError("value count " + std::to_string(values.size()) +
                             " does not fill shape " + shape.str());
    }
    Tensor t;
    t.shape_ = shape;
    t.store_ = std::make_shared<std::vector<real_t>>(std::move(values));
    return t;
}

Tensor Tensor::scalar(real_t value) {
    return from({1, 1, 1, 1}, {value});
}

std::span<const real_t> Tensor::data() const {
    if (!defined()) {
        throw ContractError("access to undefined tensor");
    }
    return {store_->data(), store_->size()};
}

std::span<real_t> Tensor::mutable_data() {
    if (!defined()) {
        throw ContractError("access to undefined tensor");
    }
    return {store_->data(), store_->size()};
}

real_t Tensor::at(std::int64_t n, std::int64_t c, std::int64_t y, std::int64_t x) const {
    return (*store_)[static_cast<std::size_t>(shape_.index(n, c, y, x))];
}

real_t& Tensor::at(std::int64_t n, std::int64_t c, std::int64_t y, std::int64_t x) {
    return (*store_)[static_cast<std::size_t>(shape_.index(n, c, y, x))];
}

real_t Tensor::item() const {
    if (numel() != 1) {
        throw ContractError("item() requires a single-element tensor, got " + shape_.str());
    }
    return (*store_)[0];
}

Tensor Tensor::clone() const {
    if (!defined()) {
        return {};
    }
    Tensor t;
    t.shape_ = shape_;
    t.store_ = std::make_shared<std::vector<real_t>>(*store_);
    return t;
}

Tensor Tensor::detached() const {
    Tensor t;
    t.shape_ = shape_;
    t.store_ = store_;
    return t;
}

bool Tensor::on_tape(const Tape& tape) const {
    return node_ >= 0 && tape_uid_ == tape.uid();
}

bool all_finite(const Tensor& t) {
    if (!t.defined()) {
        return true;
    }
    for (real_t v : t.data()) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

void require_finite(const Tensor& t, const std::string& what) {
    if (!all_finite(t)) {
        throw NumericError("non-finite values in " + what);
    }
}

} // namespace posr
