#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "posr/tensor.hpp"

namespace posr {

// Reverse-mode autodiff tape: an append-only list of nodes in forward
// (topological) order. Leaves are registered with watch(); every recorded op
// node carries a closure that routes the node's output gradient to its
// inputs. backward() seeds the loss gradient with 1 and sweeps the list once
// in reverse. A tape serves a single forward/backward pass; parameters live
// outside it and are re-registered on the next pass.
class Tape {
public:
    // Invoked with the node's own id; reads the output gradient via
    // grad_view(self) and accumulates into the inputs' grad_buffer()s.
    using BackwardFn = std::function<void(Tape&, std::int32_t self)>;

    Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    std::uint64_t uid() const { return uid_; }

    // Registers a leaf. Idempotent per storage buffer, so aliasing copies of
    // one parameter resolve to one node and their gradient contributions sum.
    std::int32_t watch(const Tensor& t);

    // Appends an op node. `inputs` are node ids (-1 entries allowed and
    // ignored); they must all precede the new node.
    std::int32_t record(const char* op, std::vector<std::int32_t> inputs,
                        std::int64_t out_count, BackwardFn fn);

    // Marks `t` as the output of node `id` on this tape.
    void bind(const Tensor& t, std::int32_t id) const;

    // Resolves an op input: existing node id, fresh leaf id for trainable
    // tensors, or -1 for constants. Throws ContractError for tensors carrying
    // state from another tape.
    std::int32_t resolve(const Tensor& t);

    // Node id of `t` on this tape, or -1. Unlike resolve() this never
    // registers anything; aliasing copies of a watched parameter are found
    // through their shared storage.
    std::int32_t find(const Tensor& t) const;

    // Reverse sweep from a scalar loss. Single use.
    void backward(const Tensor& loss);

    // Gradient of a tensor registered on this tape, valid after backward().
    // Same element count as the tensor; all-zero if the loss never reached it.
    std::span<const real_t> grad(const Tensor& t);
    Tensor grad_tensor(const Tensor& t);

    // Gradient accumulation buffer for node `id`, zero-filled on first use.
    std::span<real_t> grad_buffer(std::int32_t id, std::int64_t count);
    bool has_grad(std::int32_t id) const;
    std::span<const real_t> grad_view(std::int32_t id) const;

    std::size_t node_count() const { return nodes_.size(); }
    const char* op_name(std::int32_t id) const { return nodes_.at(id).op; }
    const std::vector<std::int32_t>& node_inputs(std::int32_t id) const {
        return nodes_.at(id).inputs;
    }
    bool backward_done() const { return backward_done_; }

private:
    struct Node {
        const char* op;
        std::vector<std::int32_t> inputs;
        std::int64_t count;
        BackwardFn fn; // empty for leaves
    };

    std::uint64_t uid_;
    std::vector<Node> nodes_;
    std::vector<std::vector<real_t>> grads_;
    std::unordered_map<const void*, std::int32_t> watched_;
    std::vector<std::int32_t> leaves_;
    bool backward_done_ = false;
};

} // namespace posr
