#include "posr/tape.hpp"

#include <atomic>

#include "posr/error.hpp"

namespace posr {

namespace {
std::uint64_t next_tape_uid() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1);
}
} // namespace

Tape::Tape() : uid_(next_tape_uid()) {}

std::int32_t Tape::watch(const Tensor& t) {
    if (!t.defined()) {
        throw ContractError("cannot watch an undefined tensor");
    }
    if (!t.requires_grad()) {
        throw ContractError("watch() requires a tensor with requires_grad set");
    }
    const void* key = t.storage().get();
    if (auto it = watched_.find(key); it != watched_.end()) {
        bind(t, it->second);
        return it->second;
    }
    auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(Node{"leaf", {}, t.numel(), nullptr});
    watched_.emplace(key, id);
    leaves_.push_back(id);
    bind(t, id);
    return id;
}

std::int32_t Tape::record(const char* op, std::vector<std::int32_t> inputs,
                          std::int64_t out_count, BackwardFn fn) {
    auto id = static_cast<std::int32_t>(nodes_.size());
    for (std::int32_t in : inputs) {
        if (in >= id) {
            throw ContractError("tape node input would break topological order");
        }
    }
    nodes_.push_back(Node{op, std::move(inputs), out_count, std::move(fn)});
    return id;
}

void Tape::bind(const Tensor& t, std::int32_t id) const {
    t.node_ = id;
    t.tape_uid_ = uid_;
}

std::int32_t Tape::resolve(const Tensor& t) {
    if (!t.defined()) {
        return -1;
    }
    if (t.on_tape(*this)) {
        return t.node_;
    }
    if (t.requires_grad()) {
        return watch(t);
    }
    if (t.node_ >= 0 && t.tape_uid_ != 0) {
        // Intermediate produced under another tape; silently treating it as a
        // constant would hide missing gradient paths.
        throw ContractError("tensor belongs to a different tape; detach() it first");
    }
    return -1;
}

std::int32_t Tape::find(const Tensor& t) const {
    if (!t.defined()) {
        return -1;
    }
    if (t.on_tape(*this)) {
        return t.node_;
    }
    if (auto it = watched_.find(t.storage().get()); it != watched_.end()) {
        return it->second;
    }
    return -1;
}

void Tape::backward(const Tensor& loss) {
    if (backward_done_) {
        throw ContractError("tape is single-use: backward() already ran");
    }
    if (loss.numel() != 1) {
        throw ContractError("backward() requires a scalar loss, got " + loss.shape().str());
    }
    if (!loss.on_tape(*this)) {
        throw ContractError("loss tensor is not recorded on this tape");
    }
    backward_done_ = true;
    grads_.resize(nodes_.size());
    grad_buffer(loss.node_, 1)[0] = 1;
    for (std::int32_t id = loss.node_; id >= 0; --id) {
        const Node& node = nodes_[static_cast<std::size_t>(id)];
        if (node.fn && !grads_[static_cast<std::size_t>(id)].empty()) {
            node.fn(*this, id);
        }
    }
    // Every watched leaf exposes a full-size (possibly all-zero) gradient.
    for (std::int32_t id : leaves_) {
        grad_buffer(id, nodes_[static_cast<std::size_t>(id)].count);
    }
}

std::span<const real_t> Tape::grad(const Tensor& t) {
    const std::int32_t id = find(t);
    if (id < 0) {
        throw ContractError("tensor is not registered on this tape");
    }
    if (!backward_done_) {
        throw ContractError("grad() is only valid after backward()");
    }
    auto buf = grad_buffer(id, t.numel());
    return {buf.data(), buf.size()};
}

Tensor Tape::grad_tensor(const Tensor& t) {
    auto g = grad(t);
    return Tensor::from(t.shape(), std::vector<real_t>(g.begin(), g.end()));
}

std::span<real_t> Tape::grad_buffer(std::int32_t id, std::int64_t count) {
    if (grads_.size() < nodes_.size()) {
        grads_.resize(nodes_.size());
    }
    auto& buf = grads_.at(static_cast<std::size_t>(id));
    if (buf.empty()) {
        buf.assign(static_cast<std::size_t>(count), 0);
    }
    return {buf.data(), buf.size()};
}

bool Tape::has_grad(std::int32_t id) const {
    return id >= 0 && static_cast<std::size_t>(id) < grads_.size() &&
           !grads_[static_cast<std::size_t>(id)].empty();
}

std::span<const real_t> Tape::grad_view(std::int32_t id) const {
    const auto& buf = grads_.at(static_cast<std::size_t>(id));
    return {buf.data(), buf.size()};
}

} // namespace posr
