#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace posr {

#ifdef POSR_REAL_FLOAT
using real_t = float;
#else
using real_t = double;
#endif

class Tape;

// Dense NCHW extents. Scalars are represented as {1,1,1,1}.
struct Shape {
    std::int64_t n = 0;
    std::int64_t c = 0;
    std::int64_t h = 0;
    std::int64_t w = 0;

    std::int64_t numel() const { return n * c * h * w; }
    bool operator==(const Shape&) const = default;
    std::string str() const;

    std::int64_t index(std::int64_t in, std::int64_t ic, std::int64_t iy, std::int64_t ix) const {
        return ((in * c + ic) * h + iy) * w + ix;
    }
};

// Dense batch-channels-height-width tensor of real scalars, row-major.
// Copies alias the same storage; clone() makes a deep copy. A tensor may be
// linked to the autodiff tape of the current forward pass through a node id;
// detached() drops that link.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, real_t fill = 0);
    static Tensor from(Shape shape, std::vector<real_t> values);
    static Tensor scalar(real_t value);

    bool defined() const { return store_ != nullptr; }
    const Shape& shape() const { return shape_; }
    std::int64_t numel() const { return defined() ? shape_.numel() : 0; }

    std::span<const real_t> data() const;
    std::span<real_t> mutable_data();
    const std::shared_ptr<std::vector<real_t>>& storage() const { return store_; }

    real_t at(std::int64_t n, std::int64_t c, std::int64_t y, std::int64_t x) const;
    real_t& at(std::int64_t n, std::int64_t c, std::int64_t y, std::int64_t x);

    // Value of a single-element tensor.
    real_t item() const;

    Tensor clone() const;

    // Trainable-leaf flag. Tapes only register leaves that carry it.
    bool requires_grad() const { return requires_grad_; }
    Tensor& set_requires_grad(bool flag) {
        requires_grad_ = flag;
        return *this;
    }

    // Copy that shares storage but participates in no gradient computation.
    Tensor detached() const;

    // Autodiff linkage, managed by Tape and the ops.
    std::int32_t node() const { return node_; }
    bool on_tape(const Tape& tape) const;

private:
    Shape shape_{};
    std::shared_ptr<std::vector<real_t>> store_;
    bool requires_grad_ = false;
    // Cached registration on the most recent tape that saw this tensor.
    mutable std::int32_t node_ = -1;
    mutable std::uint64_t tape_uid_ = 0;

    friend class Tape;
};

// True when every element is finite (no NaN, no Inf).
bool all_finite(const Tensor& t);

// Throws NumericError naming `what` if any element is NaN or Inf.
void require_finite(const Tensor& t, const std::string& what);

} // namespace posr
