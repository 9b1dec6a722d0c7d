#pragma once

#include "posr/tape.hpp"
#include "posr/tensor.hpp"

namespace posr {

// Differentiable tensor operations. Every op validates shapes, computes its
// output, and records a backward closure on the tape when any input is
// gradient-tracked. Tensors not linked to the tape act as constants.

enum class ConvAlgo {
    direct, // reference gather loops
    im2col  // GEMM-backed fast path; agrees with direct to ~1e-12 relative
};

// Zero-padded 2-D convolution, weight [Cout,Cin,kh,kw], optional bias [Cout].
// Pass an undefined Tensor{} to omit the bias.
Tensor conv2d(Tape& tape, const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride, int padding, ConvAlgo algo = ConvAlgo::im2col);

// Flattens [N,C,H,W] to N rows and applies weight [F_out, C*H*W] (stored as
// [F_out, C*H*W, 1, 1]) plus bias [F_out]; output [N, F_out, 1, 1].
Tensor fully_connected(Tape& tape, const Tensor& input, const Tensor& weight,
                       const Tensor& bias);

Tensor relu(Tape& tape, const Tensor& x);
Tensor leaky_relu(Tape& tape, const Tensor& x, real_t negative_slope);
Tensor sigmoid(Tape& tape, const Tensor& x);
Tensor elem_sqrt(Tape& tape, const Tensor& x);  // requires x > 0 elementwise
Tensor elem_abs(Tape& tape, const Tensor& x);
Tensor square(Tape& tape, const Tensor& x);
// log(max(x, floor)); gradient is 1/x where x >= floor and 0 where clamped.
Tensor log_clamped(Tape& tape, const Tensor& x, real_t floor);
// scale * x + shift, elementwise.
Tensor affine(Tape& tape, const Tensor& x, real_t scale, real_t shift);

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
// Per-channel gate [N,C,1,1] times feature map [N,C,H,W]; the gate gradient
// sum-reduces over the broadcast extents.
Tensor broadcast_mul(Tape& tape, const Tensor& gate, const Tensor& x);
// a_i - s for a scalar tensor s (the mean-score shift of the relativistic
// criterion); gradient to s is the negated sum.
Tensor sub_scalar(Tape& tape, const Tensor& a, const Tensor& s);

Tensor global_avg_pool(Tape& tape, const Tensor& x);
Tensor pixel_shuffle(Tape& tape, const Tensor& x, int r);
Tensor pixel_unshuffle(Tape& tape, const Tensor& x, int r);
// Mean over every element; scalar output.
Tensor mean_all(Tape& tape, const Tensor& x);

// Output spatial extent of a zero-padded convolution along one axis.
std::int64_t conv_out_extent(std::int64_t in, std::int64_t kernel, int stride, int padding);

} // namespace posr
