#include "posr/ops.hpp"

#include <Eigen/Core>
#include <limits>
#include <cmath>
#include <utility>
#include <vector>

#include "posr/error.hpp"

namespace posr {

namespace {

using ColMat = Eigen::Matrix<real_t, Eigen::Dynamic, Eigen::Dynamic>;
using ColMap = Eigen::Map<ColMat>;
using ConstColMap = Eigen::Map<const ColMat>;

// GEMM helpers over row-major buffers. A row-major matrix seen through a
// column-major map is its transpose, so C = op(A)·op(B) is computed as
// C^T = op(B)^T · op(A)^T with every operand in Eigen's fast layout.

// C[m,n] = A[m,k] · B[k,n]
void gemm_nn(std::int64_t m, std::int64_t k, std::int64_t n, const real_t* a, const real_t* b,
             real_t* c, bool accumulate) {
    ConstColMap at(a, k, m);
    ConstColMap bt(b, n, k);
    ColMap ct(c, n, m);
    if (accumulate) {
        ct.noalias() += bt * at;
    } else {
        ct.noalias() = bt * at;
    }
}

// C[m,n] = A[m,k] · B^T, with B stored as [n,k]
void gemm_nt(std::int64_t m, std::int64_t k, std::int64_t n, const real_t* a, const real_t* b,
             real_t* c, bool accumulate) {
    ConstColMap at(a, k, m);
    ConstColMap bt(b, k, n); // = B^T, used untransposed on the left
    ColMap ct(c, n, m);
    if (accumulate) {
        ct.noalias() += bt.transpose() * at;
    } else {
        ct.noalias() = bt.transpose() * at;
    }
}

// C[m,n] = A^T · B, with A stored as [k,m], B as [k,n]
void gemm_tn(std::int64_t m, std::int64_t k, std::int64_t n, const real_t* a, const real_t* b,
             real_t* c, bool accumulate) {
    ConstColMap at(a, m, k); // = A^T
    ConstColMap bt(b, n, k);
    ColMap ct(c, n, m);
    if (accumulate) {
        ct.noalias() += bt * at.transpose();
    } else {
        ct.noalias() = bt * at.transpose();
    }
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (!(a.shape() == b.shape())) {
        throw DimensionError(std::string(op) + ": shapes " + a.shape().str() + " and " +
                             b.shape().str() + " do not match");
    }
}

// Elementwise op whose derivative is a function of the input value.
template <typename Fwd, typename Drv>
Tensor unary_from_input(Tape& tape, const char* name, const Tensor& x, Fwd fwd, Drv drv) {
    Tensor out(x.shape());
    auto xs = x.data();
    auto os = out.mutable_data();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        os[i] = fwd(xs[i]);
    }
    std::int32_t xid = tape.resolve(x);
    if (xid >= 0) {
        auto id = tape.record(name, {xid}, out.numel(),
                              [xid, x_store = x.storage(), drv](Tape& t, std::int32_t self) {
                                  auto go = t.grad_view(self);
                                  auto gx = t.grad_buffer(xid, static_cast<std::int64_t>(go.size()));
                                  const real_t* xv = x_store->data();
                                  for (std::size_t i = 0; i < go.size(); ++i) {
                                      gx[i] += go[i] * drv(xv[i]);
                                  }
                              });
        tape.bind(out, id);
    }
    return out;
}

// Elementwise op whose derivative is a function of the output value.
template <typename Fwd, typename Drv>
Tensor unary_from_output(Tape& tape, const char* name, const Tensor& x, Fwd fwd, Drv drv) {
    Tensor out(x.shape());
    auto xs = x.data();
    auto os = out.mutable_data();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        os[i] = fwd(xs[i]);
    }
    std::int32_t xid = tape.resolve(x);
    if (xid >= 0) {
        auto id = tape.record(name, {xid}, out.numel(),
                              [xid, o_store = out.storage(), drv](Tape& t, std::int32_t self) {
                                  auto go = t.grad_view(self);
                                  auto gx = t.grad_buffer(xid, static_cast<std::int64_t>(go.size()));
                                  const real_t* ov = o_store->data();
                                  for (std::size_t i = 0; i < go.size(); ++i) {
                                      gx[i] += go[i] * drv(ov[i]);
                                  }
                              });
        tape.bind(out, id);
    }
    return out;
}

real_t stable_sigmoid(real_t v) {
    real_t r;
    if (v >= 0) {
        r = real_t(1) / (real_t(1) + std::exp(-v));
    } else {
        const real_t e = std::exp(v);
        r = e / (real_t(1) + e);
    }
    // keep the output strictly inside (0,1) even under saturation
    if (r >= real_t(1)) {
        r = real_t(1) - std::numeric_limits<real_t>::epsilon() / 2;
    } else if (r <= real_t(0)) {
        r = std::numeric_limits<real_t>::min();
    }
    return r;
}

// Scatter-adds a patch-matrix gradient back onto one input batch item.
void col2im_add(const real_t* cols, std::int64_t cin, std::int64_t h, std::int64_t w,
                std::int64_t kh, std::int64_t kw, int stride, int padding, std::int64_t oh,
                std::int64_t ow, real_t* gin) {
    const std::int64_t ohw = oh * ow;
    for (std::int64_t ci = 0; ci < cin; ++ci) {
        for (std::int64_t ky = 0; ky < kh; ++ky) {
            for (std::int64_t kx = 0; kx < kw; ++kx) {
                const real_t* row = cols + ((ci * kh + ky) * kw + kx) * ohw;
                for (std::int64_t oy = 0; oy < oh; ++oy) {
                    const std::int64_t iy = oy * stride - padding + ky;
                    if (iy < 0 || iy >= h) {
                        continue;
                    }
                    for (std::int64_t ox = 0; ox < ow; ++ox) {
                        const std::int64_t ix = ox * stride - padding + kx;
                        if (ix >= 0 && ix < w) {
                            gin[(ci * h + iy) * w + ix] += row[oy * ow + ox];
                        }
                    }
                }
            }
        }
    }
}

struct ConvDims {
    std::int64_t n, cin, h, w;
    std::int64_t cout, kh, kw;
    std::int64_t oh, ow;
    int stride, padding;
};

void conv_forward_direct(const real_t* in, const real_t* wt, const real_t* bias,
                         const ConvDims& d, real_t* out) {
    for (std::int64_t nn = 0; nn < d.n; ++nn) {
        const real_t* in_n = in + nn * d.cin * d.h * d.w;
        real_t* out_n = out + nn * d.cout * d.oh * d.ow;
        for (std::int64_t co = 0; co < d.cout; ++co) {
            const real_t* w_co = wt + co * d.cin * d.kh * d.kw;
            for (std::int64_t oy = 0; oy < d.oh; ++oy) {
                for (std::int64_t ox = 0; ox < d.ow; ++ox) {
                    real_t acc = bias ? bias[co] : real_t(0);
                    for (std::int64_t ci = 0; ci < d.cin; ++ci) {
                        for (std::int64_t ky = 0; ky < d.kh; ++ky) {
                            const std::int64_t iy = oy * d.stride - d.padding + ky;
                            if (iy < 0 || iy >= d.h) {
                                continue;
                            }
                            for (std::int64_t kx = 0; kx < d.kw; ++kx) {
                                const std::int64_t ix = ox * d.stride - d.padding + kx;
                                if (ix < 0 || ix >= d.w) {
                                    continue;
                                }
                                acc += in_n[(ci * d.h + iy) * d.w + ix] *
                                       w_co[(ci * d.kh + ky) * d.kw + kx];
                            }
                        }
                    }
                    out_n[(co * d.oh + oy) * d.ow + ox] = acc;
                }
            }
        }
    }
}

// Patch gather for the whole batch at once: row r of item nn lands at
// columns [nn*ohw, (nn+1)*ohw), so one large GEMM covers every item and
// Eigen's blocked (and threaded) kernels get matrices worth their overhead.
void im2col_fill_batched(const real_t* in, const ConvDims& d, std::vector<real_t>& cols) {
    const std::int64_t ohw = d.oh * d.ow;
    cols.resize(static_cast<std::size_t>(d.cin * d.kh * d.kw * d.n * ohw));
    for (std::int64_t nn = 0; nn < d.n; ++nn) {
        real_t* base = cols.data() + nn * ohw;
        for (std::int64_t ci = 0; ci < d.cin; ++ci) {
            for (std::int64_t ky = 0; ky < d.kh; ++ky) {
                for (std::int64_t kx = 0; kx < d.kw; ++kx) {
                    const real_t* src = in + (nn * d.cin + ci) * d.h * d.w;
                    real_t* row = base + ((ci * d.kh + ky) * d.kw + kx) * (d.n * ohw);
                    for (std::int64_t oy = 0; oy < d.oh; ++oy) {
                        const std::int64_t iy = oy * d.stride - d.padding + ky;
                        for (std::int64_t ox = 0; ox < d.ow; ++ox) {
                            const std::int64_t ix = ox * d.stride - d.padding + kx;
                            row[oy * d.ow + ox] =
                                (iy >= 0 && iy < d.h && ix >= 0 && ix < d.w)
                                    ? src[iy * d.w + ix]
                                    : real_t(0);
                        }
                    }
                }
            }
        }
    }
}

// Gather-form gradients; deterministic regardless of loop tiling.
void conv_backward_direct(const real_t* in, const real_t* wt, const real_t* go,
                          const ConvDims& d, real_t* gin, real_t* gw, real_t* gb) {
    if (gin) {
        for (std::int64_t nn = 0; nn < d.n; ++nn) {
            const real_t* go_n = go + nn * d.cout * d.oh * d.ow;
            real_t* gin_n = gin + nn * d.cin * d.h * d.w;
            for (std::int64_t ci = 0; ci < d.cin; ++ci) {
                for (std::int64_t iy = 0; iy < d.h; ++iy) {
                    for (std::int64_t ix = 0; ix < d.w; ++ix) {
                        real_t acc = 0;
                        for (std::int64_t co = 0; co < d.cout; ++co) {
                            const real_t* w_co = wt + co * d.cin * d.kh * d.kw;
                            for (std::int64_t ky = 0; ky < d.kh; ++ky) {
                                const std::int64_t num_y = iy + d.padding - ky;
                                if (num_y < 0 || num_y % d.stride != 0) {
                                    continue;
                                }
                                const std::int64_t oy = num_y / d.stride;
                                if (oy >= d.oh) {
                                    continue;
                                }
                                for (std::int64_t kx = 0; kx < d.kw; ++kx) {
                                    const std::int64_t num_x = ix + d.padding - kx;
                                    if (num_x < 0 || num_x % d.stride != 0) {
                                        continue;
                                    }
                                    const std::int64_t ox = num_x / d.stride;
                                    if (ox >= d.ow) {
                                        continue;
                                    }
                                    acc += go_n[(co * d.oh + oy) * d.ow + ox] *
                                           w_co[(ci * d.kh + ky) * d.kw + kx];
                                }
                            }
                        }
                        gin_n[(ci * d.h + iy) * d.w + ix] += acc;
                    }
                }
            }
        }
    }
    if (gw) {
        for (std::int64_t co = 0; co < d.cout; ++co) {
            for (std::int64_t ci = 0; ci < d.cin; ++ci) {
                for (std::int64_t ky = 0; ky < d.kh; ++ky) {
                    for (std::int64_t kx = 0; kx < d.kw; ++kx) {
                        real_t acc = 0;
                        for (std::int64_t nn = 0; nn < d.n; ++nn) {
                            const real_t* in_n = in + nn * d.cin * d.h * d.w;
                            const real_t* go_n = go + nn * d.cout * d.oh * d.ow;
                            for (std::int64_t oy = 0; oy < d.oh; ++oy) {
                                const std::int64_t iy = oy * d.stride - d.padding + ky;
                                if (iy < 0 || iy >= d.h) {
                                    continue;
                                }
                                for (std::int64_t ox = 0; ox < d.ow; ++ox) {
                                    const std::int64_t ix = ox * d.stride - d.padding + kx;
                                    if (ix < 0 || ix >= d.w) {
                                        continue;
                                    }
                                    acc += go_n[(co * d.oh + oy) * d.ow + ox] *
                                           in_n[(ci * d.h + iy) * d.w + ix];
                                }
                            }
                        }
                        gw[((co * d.cin + ci) * d.kh + ky) * d.kw + kx] += acc;
                    }
                }
            }
        }
    }
    if (gb) {
        for (std::int64_t nn = 0; nn < d.n; ++nn) {
            const real_t* go_n = go + nn * d.cout * d.oh * d.ow;
            for (std::int64_t co = 0; co < d.cout; ++co) {
                real_t acc = 0;
                for (std::int64_t k = 0; k < d.oh * d.ow; ++k) {
                    acc += go_n[co * d.oh * d.ow + k];
                }
                gb[co] += acc;
            }
        }
    }
}

void conv_forward_im2col(const real_t* in, const real_t* wt, const real_t* bias,
                         const ConvDims& d, real_t* out) {
    const std::int64_t ckk = d.cin * d.kh * d.kw;
    const std::int64_t ohw = d.oh * d.ow;
    std::vector<real_t> cols;
    im2col_fill_batched(in, d, cols);
    std::vector<real_t> out_mat(static_cast<std::size_t>(d.cout * d.n * ohw));
    gemm_nn(d.cout, ckk, d.n * ohw, wt, cols.data(), out_mat.data(), false);
    // back to NCHW, adding the bias on the way
    for (std::int64_t nn = 0; nn < d.n; ++nn) {
        for (std::int64_t co = 0; co < d.cout; ++co) {
            const real_t* src = out_mat.data() + co * d.n * ohw + nn * ohw;
            real_t* dst = out + (nn * d.cout + co) * ohw;
            const real_t bb = bias ? bias[co] : real_t(0);
            for (std::int64_t k = 0; k < ohw; ++k) {
                dst[k] = src[k] + bb;
            }
        }
    }
}

void conv_backward_im2col(const real_t* in, const real_t* wt, const real_t* go,
                          const ConvDims& d, real_t* gin, real_t* gw, real_t* gb) {
    const std::int64_t ckk = d.cin * d.kh * d.kw;
    const std::int64_t ohw = d.oh * d.ow;

    // output gradient rearranged to [Cout, N*OHOW]
    std::vector<real_t> go_mat(static_cast<std::size_t>(d.cout * d.n * ohw));
    for (std::int64_t nn = 0; nn < d.n; ++nn) {
        for (std::int64_t co = 0; co < d.cout; ++co) {
            const real_t* src = go + (nn * d.cout + co) * ohw;
            real_t* dst = go_mat.data() + co * d.n * ohw + nn * ohw;
            std::copy(src, src + ohw, dst);
        }
    }
    if (gw) {
        std::vector<real_t> cols;
        im2col_fill_batched(in, d, cols);
        // gW[cout,ckk] += go_mat[cout,N*ohw] · cols^T
        gemm_nt(d.cout, d.n * ohw, ckk, go_mat.data(), cols.data(), gw, true);
    }
    if (gin) {
        std::vector<real_t> gcols(static_cast<std::size_t>(ckk * d.n * ohw));
        // gcols[ckk,N*ohw] = W^T · go_mat
        gemm_tn(ckk, d.cout, d.n * ohw, wt, go_mat.data(), gcols.data(), false);
        // per-item col2im over the interleaved column blocks
        std::vector<real_t> item(static_cast<std::size_t>(ckk * ohw));
        for (std::int64_t nn = 0; nn < d.n; ++nn) {
            for (std::int64_t r = 0; r < ckk; ++r) {
                const real_t* src = gcols.data() + r * d.n * ohw + nn * ohw;
                std::copy(src, src + ohw, item.data() + r * ohw);
            }
            col2im_add(item.data(), d.cin, d.h, d.w, d.kh, d.kw, d.stride, d.padding, d.oh,
                       d.ow, gin + nn * d.cin * d.h * d.w);
        }
    }
    if (gb) {
        for (std::int64_t co = 0; co < d.cout; ++co) {
            real_t acc = 0;
            const real_t* row = go_mat.data() + co * d.n * ohw;
            for (std::int64_t k = 0; k < d.n * ohw; ++k) {
                acc += row[k];
            }
            gb[co] += acc;
        }
    }
}

} // namespace

std::int64_t conv_out_extent(std::int64_t in, std::int64_t kernel, int stride, int padding) {
    return (in + 2 * static_cast<std::int64_t>(padding) - kernel) / stride + 1;
}

Tensor conv2d(Tape& tape, const Tensor& input, const Tensor& weight, const Tensor& bias,
              int stride, int padding, ConvAlgo algo) {
    if (stride < 1) {
        throw ContractError("conv2d: stride must be positive");
    }
    if (padding < 0) {
        throw ContractError("conv2d: padding must be nonnegative");
    }
    const Shape& is = input.shape();
    const Shape& ws = weight.shape();
    if (is.c != ws.c) {
        throw DimensionError("conv2d: input " + is.str() + " has " + std::to_string(is.c) +
                             " channels but weight " + ws.str() + " expects " +
                             std::to_string(ws.c));
    }
    ConvDims d{is.n, is.c, is.h, is.w, ws.n, ws.h, ws.w,
               conv_out_extent(is.h, ws.h, stride, padding),
               conv_out_extent(is.w, ws.w, stride, padding), stride, padding};
    if (d.oh < 1 || d.ow < 1) {
        throw DimensionError("conv2d: kernel " + ws.str() + " does not fit input " + is.str() +
                             " with stride " + std::to_string(stride) + ", padding " +
                             std::to_string(padding));
    }
    const bool has_bias = bias.defined();
    if (has_bias) {
        if (bias.shape().n != d.cout || bias.numel() != d.cout) {
            throw DimensionError("conv2d: bias " + bias.shape().str() + " does not match " +
                                 std::to_string(d.cout) + " output channels");
        }
    }

    Tensor out({d.n, d.cout, d.oh, d.ow});
    const real_t* bptr = has_bias ? bias.data().data() : nullptr;
    if (algo == ConvAlgo::direct) {
        conv_forward_direct(input.data().data(), weight.data().data(), bptr, d,
                            out.mutable_data().data());
    } else {
        conv_forward_im2col(input.data().data(), weight.data().data(), bptr, d,
                            out.mutable_data().data());
    }

    std::int32_t in_id = tape.resolve(input);
    std::int32_t w_id = tape.resolve(weight);
    std::int32_t b_id = has_bias ? tape.resolve(bias) : -1;
    if (in_id < 0 && w_id < 0 && b_id < 0) {
        return out;
    }
    auto id = tape.record(
        "conv2d", {in_id, w_id, b_id}, out.numel(),
        [d, algo, in_id, w_id, b_id, in_store = input.storage(),
         w_store = weight.storage()](Tape& t, std::int32_t self) {
            auto go = t.grad_view(self);
            real_t* gin = in_id >= 0
                              ? t.grad_buffer(in_id, d.n * d.cin * d.h * d.w).data()
                              : nullptr;
            real_t* gw = w_id >= 0
                             ? t.grad_buffer(w_id, d.cout * d.cin * d.kh * d.kw).data()
                             : nullptr;
            real_t* gb = b_id >= 0 ? t.grad_buffer(b_id, d.cout).data() : nullptr;
            if (algo == ConvAlgo::direct) {
                conv_backward_direct(in_store->data(), w_store->data(), go.data(), d, gin, gw,
                                     gb);
            } else {
                conv_backward_im2col(in_store->data(), w_store->data(), go.data(), d, gin, gw,
                                     gb);
            }
        });
    tape.bind(out, id);
    return out;
}

Tensor fully_connected(Tape& tape, const Tensor& input, const Tensor& weight,
                       const Tensor& bias) {
    const Shape& is = input.shape();
    const Shape& ws = weight.shape();
    const std::int64_t features = is.c * is.h * is.w;
    if (ws.c != features || ws.h != 1 || ws.w != 1) {
        throw DimensionError("fully_connected: input " + is.str() + " flattens to " +
                             std::to_string(features) + " features but weight is " + ws.str());
    }
    const std::int64_t rows = is.n;
    const std::int64_t out_features = ws.n;
    const bool has_bias = bias.defined();
    if (has_bias && bias.numel() != out_features) {
        throw DimensionError("fully_connected: bias " + bias.shape().str() +
                             " does not match " + std::to_string(out_features) + " outputs");
    }

    Tensor out({rows, out_features, 1, 1});
    {
        // out[rows, F_out] = X[rows, F] · W^T
        gemm_nt(rows, features, out_features, input.data().data(), weight.data().data(),
                out.mutable_data().data(), false);
        if (has_bias) {
            auto bs = bias.data();
            auto om = out.mutable_data();
            for (std::int64_t r = 0; r < rows; ++r) {
                for (std::int64_t o = 0; o < out_features; ++o) {
                    om[static_cast<std::size_t>(r * out_features + o)] +=
                        bs[static_cast<std::size_t>(o)];
                }
            }
        }
    }

    std::int32_t in_id = tape.resolve(input);
    std::int32_t w_id = tape.resolve(weight);
    std::int32_t b_id = has_bias ? tape.resolve(bias) : -1;
    if (in_id < 0 && w_id < 0 && b_id < 0) {
        return out;
    }
    auto id = tape.record(
        "fully_connected", {in_id, w_id, b_id}, out.numel(),
        [rows, features, out_features, in_id, w_id, b_id, in_store = input.storage(),
         w_store = weight.storage()](Tape& t, std::int32_t self) {
            auto go = t.grad_view(self);
            ConstMatMap gom(go.data(), rows, out_features);
            if (in_id >= 0) {
                MatMap gxm(t.grad_buffer(in_id, rows * features).data(), rows, features);
                ConstMatMap wm(w_store->data(), out_features, features);
                gxm.noalias() += gom * wm;
            }
            if (w_id >= 0) {
                MatMap gwm(t.grad_buffer(w_id, out_features * features).data(), out_features,
                           features);
                ConstMatMap xm(in_store->data(), rows, features);
                gwm.noalias() += gom.transpose() * xm;
            }
            if (b_id >= 0) {
                auto gb = t.grad_buffer(b_id, out_features);
                for (std::int64_t r = 0; r < rows; ++r) {
                    for (std::int64_t o = 0; o < out_features; ++o) {
                        gb[static_cast<std::size_t>(o)] += gom(r, o);
                    }
                }
            }
        });
    tape.bind(out, id);
    return out;
}

Tensor relu(Tape& tape, const Tensor& x) {
    return unary_from_input(
        tape, "relu", x, [](real_t v) { return v > 0 ? v : real_t(0); },
        [](real_t v) { return v > 0 ? real_t(1) : real_t(0); });
}

Tensor leaky_relu(Tape& tape, const Tensor& x, real_t negative_slope) {
    return unary_from_input(
        tape, "leaky_relu", x,
        [negative_slope](real_t v) { return v >= 0 ? v : negative_slope * v; },
        [negative_slope](real_t v) { return v >= 0 ? real_t(1) : negative_slope; });
}

Tensor sigmoid(Tape& tape, const Tensor& x) {
    return unary_from_output(
        tape, "sigmoid", x, [](real_t v) { return stable_sigmoid(v); },
        [](real_t o) { return o * (real_t(1) - o); });
}

Tensor elem_sqrt(Tape& tape, const Tensor& x) {
    for (real_t v : x.data()) {
        if (!(v > 0)) {
            throw ContractError("elem_sqrt: domain requires strictly positive values");
        }
    }
    return unary_from_output(
        tape, "elem_sqrt", x, [](real_t v) { return std::sqrt(v); },
        [](real_t o) { return real_t(0.5) / o; });
}

Tensor elem_abs(Tape& tape, const Tensor& x) {
    return unary_from_input(
        tape, "elem_abs", x, [](real_t v) { return std::abs(v); },
        [](real_t v) { return v > 0 ? real_t(1) : (v < 0 ? real_t(-1) : real_t(0)); });
}

Tensor square(Tape& tape, const Tensor& x) {
    return unary_from_input(
        tape, "square", x, [](real_t v) { return v * v; },
        [](real_t v) { return 2 * v; });
}

Tensor log_clamped(Tape& tape, const Tensor& x, real_t floor) {
    if (!(floor > 0)) {
        throw ContractError("log_clamped: floor must be positive");
    }
    return unary_from_input(
        tape, "log_clamped", x,
        [floor](real_t v) { return std::log(v < floor ? floor : v); },
        [floor](real_t v) { return v < floor ? real_t(0) : real_t(1) / v; });
}

Tensor affine(Tape& tape, const Tensor& x, real_t scale, real_t shift) {
    return unary_from_input(
        tape, "affine", x, [scale, shift](real_t v) { return scale * v + shift; },
        [scale](real_t) { return scale; });
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
    check_same_shape("add", a, b);
    Tensor out(a.shape());
    auto as = a.data();
    auto bs = b.data();
    auto os = out.mutable_data();
    for (std::size_t i = 0; i < os.size(); ++i) {
        os[i] = as[i] + bs[i];
    }
    std::int32_t aid = tape.resolve(a);
    std::int32_t bid = tape.resolve(b);
    if (aid < 0 && bid < 0) {
        return out;
    }
    auto id = tape.record("add", {aid, bid}, out.numel(),
                          [aid, bid](Tape& t, std::int32_t self) {
                              auto go = t.grad_view(self);
                              const auto count = static_cast<std::int64_t>(go.size());
                              if (aid >= 0) {
                                  auto ga = t.grad_buffer(aid, count);
                                  for (std::size_t i = 0; i < go.size(); ++i) {
                                      ga[i] += go[i];
                                  }
                              }
                              if (bid >= 0) {
                                  auto gb = t.grad_buffer(bid, count);
                                  for (std::size_t i = 0; i < go.size(); ++i) {
                                      gb[i] += go[i];
                                  }
                              }
                          });
    tape.bind(out, id);
    return out;
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
    check_same_shape("sub", a, b);
    Tensor out(a.shape());
    auto as = a.data();
    auto bs = b.data();
    auto os = out.mutable_data();
    for (std::size_t i = 0; i < os.size(); ++i) {
        os[i] = as[i] - bs[i];
    }
    std::int32_t aid = tape.resolve(a);
    std::int32_t bid = tape.resolve(b);
    if (aid < 0 && bid < 0) {
        return out;
    }
    auto id = tape.record("sub", {aid, bid}, out.numel(),
                          [aid, bid](Tape& t, std::int32_t self) {
                              auto go = t.grad_view(self);
                              const auto count = static_cast<std::int64_t>(go.size());
                              if (aid >= 0) {
                                  auto ga = t.grad_buffer(aid, count);
                                  for (std::size_t i = 0; i < go.size(); ++i) {
                                      ga[i] += go[i];
                                  }
                              }
                              if (bid >= 0) {
                                  auto gb = t.grad_buffer(bid, count);
                                  for (std::size_t i = 0; i < go.size(); ++i) {
                                      gb[i] -= go[i];
                                  }
                              }
                          });
    tape.bind(out, id);
    return out;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
    check_same_shape("mul", a, b);
    Tensor out(a.shape());
    auto as = a.data();
    auto bs = b.data();
    auto os = out.mutable_data();
    for (std::size_t i = 0; i < os.size(); ++i) {
        os[i] = as[i] * bs[i];
    }
    std::int32_t aid = tape.resolve(a);
    std::int32_t bid = tape.resolve(b);
    if (aid < 0 && bid < 0) {
        return out;
    }
    auto id = tape.record(
        "mul", {aid, bid}, out.numel(),
        [aid, bid, a_store = a.storage(), b_store = b.storage()](Tape& t, std::int32_t self) {
            auto go = t.grad_view(self);
            const auto count = static_cast<std::int64_t>(go.size());
            if (aid >= 0) {
                auto ga = t.grad_buffer(aid, count);
                const real_t* bv = b_store->data();
                for (std::size_t i = 0; i < go.size(); ++i) {
                    ga[i] += go[i] * bv[i];
                }
            }
            if (bid >= 0) {
                auto gb = t.grad_buffer(bid, count);
                const real_t* av = a_store->data();
                for (std::size_t i = 0; i < go.size(); ++i) {
                    gb[i] += go[i] * av[i];
                }
            }
        });
    tape.bind(out, id);
    return out;
}

Tensor broadcast_mul(Tape& tape, const Tensor& gate, const Tensor& x) {
    const Shape& gs = gate.shape();
    const Shape& xs = x.shape();
    if (gs.n != xs.n || gs.c != xs.c || gs.h != 1 || gs.w != 1) {
        throw DimensionError("broadcast_mul: gate " + gs.str() + " is not [N,C,1,1] for " +
                             xs.str());
    }
    Tensor out(xs);
    const std::int64_t plane = xs.h * xs.w;
    {
        auto gv = gate.data();
        auto xv = x.data();
        auto ov = out.mutable_data();
        for (std::int64_t nc = 0; nc < xs.n * xs.c; ++nc) {
            const real_t g = gv[static_cast<std::size_t>(nc)];
            for (std::int64_t k = 0; k < plane; ++k) {
                ov[static_cast<std::size_t>(nc * plane + k)] =
                    g * xv[static_cast<std::size_t>(nc * plane + k)];
            }
        }
    }
    std::int32_t gid = tape.resolve(gate);
    std::int32_t xid = tape.resolve(x);
    if (gid < 0 && xid < 0) {
        return out;
    }
    auto id = tape.record(
        "broadcast_mul", {gid, xid}, out.numel(),
        [gid, xid, plane, nc_count = xs.n * xs.c, g_store = gate.storage(),
         x_store = x.storage()](Tape& t, std::int32_t self) {
            auto go = t.grad_view(self);
            if (gid >= 0) {
                auto gg = t.grad_buffer(gid, nc_count);
                const real_t* xv = x_store->data();
                for (std::int64_t nc = 0; nc < nc_count; ++nc) {
                    real_t acc = 0;
                    for (std::int64_t k = 0; k < plane; ++k) {
                        acc += go[static_cast<std::size_t>(nc * plane + k)] *
                               xv[nc * plane + k];
                    }
                    gg[static_cast<std::size_t>(nc)] += acc;
                }
            }
            if (xid >= 0) {
                auto gx = t.grad_buffer(xid, nc_count * plane);
                const real_t* gv = g_store->data();
                for (std::int64_t nc = 0; nc < nc_count; ++nc) {
                    const real_t g = gv[nc];
                    for (std::int64_t k = 0; k < plane; ++k) {
                        gx[static_cast<std::size_t>(nc * plane + k)] +=
                            go[static_cast<std::size_t>(nc * plane + k)] * g;
                    }
                }
            }
        });
    tape.bind(out, id);
    return out;
}

Tensor sub_scalar(Tape& tape, const Tensor& a, const Tensor& s) {
    if (s.numel() != 1) {
        throw DimensionError("sub_scalar: subtrahend must be scalar, got " + s.shape().str());
    }
    Tensor out(a.shape());
    const real_t sv = s.data()[0];
    auto as = a.data();
    auto os = out.mutable_data();
    for (std::size_t i = 0; i < os.size(); ++i) {
        os[i] = as[i] - sv;
    }
    std::int32_t aid = tape.resolve(a);
    std::int32_t sid = tape.resolve(s);
    if (aid < 0 && sid < 0) {
        return out;
    }
    auto id = tape.record("sub_scalar", {aid, sid}, out.numel(),
                          [aid, sid](Tape& t, std::int32_t self) {
                              auto go = t.grad_view(self);
                              if (aid >= 0) {
                                  auto ga = t.grad_buffer(aid,
                                                          static_cast<std::int64_t>(go.size()));
                                  for (std::size_t i = 0; i < go.size(); ++i) {
                                      ga[i] += go[i];
                                  }
                              }
                              if (sid >= 0) {
                                  auto gs = t.grad_buffer(sid, 1);
                                  real_t acc = 0;
                                  for (std::size_t i = 0; i < go.size(); ++i) {
                                      acc += go[i];
                                  }
                                  gs[0] -= acc;
                              }
                          });
    tape.bind(out, id);
    return out;
}

Tensor global_avg_pool(Tape& tape, const Tensor& x) {
    const Shape& xs = x.shape();
    if (xs.h < 1 || xs.w < 1) {
        throw DimensionError("global_avg_pool: zero spatial extent in " + xs.str());
    }
    Tensor out({xs.n, xs.c, 1, 1});
    const std::int64_t plane = xs.h * xs.w;
    {
        auto xv = x.data();
        auto ov = out.mutable_data();
        for (std::int64_t nc = 0; nc < xs.n * xs.c; ++nc) {
            real_t acc = 0;
            for (std::int64_t k = 0; k < plane; ++k) {
                acc += xv[static_cast<std::size_t>(nc * plane + k)];
            }
            ov[static_cast<std::size_t>(nc)] = acc / static_cast<real_t>(plane);
        }
    }
    std::int32_t xid = tape.resolve(x);
    if (xid < 0) {
        return out;
    }
    auto id = tape.record("global_avg_pool", {xid}, out.numel(),
                          [xid, plane, nc_count = xs.n * xs.c](Tape& t, std::int32_t self) {
                              auto go = t.grad_view(self);
                              auto gx = t.grad_buffer(xid, nc_count * plane);
                              const real_t inv = real_t(1) / static_cast<real_t>(plane);
                              for (std::int64_t nc = 0; nc < nc_count; ++nc) {
                                  const real_t g = go[static_cast<std::size_t>(nc)] * inv;
                                  for (std::int64_t k = 0; k < plane; ++k) {
                                      gx[static_cast<std::size_t>(nc * plane + k)] += g;
                                  }
                              }
                          });
    tape.bind(out, id);
    return out;
}

namespace {

// out[n, c, y*r+dy, x*r+dx] = in[n, c*r*r + dy*r + dx, y, x]
void shuffle_values(const real_t* in, std::int64_t n, std::int64_t c_out, std::int64_t h,
                    std::int64_t w, int r, real_t* out) {
    const std::int64_t r64 = r;
    for (std::int64_t nn = 0; nn < n; ++nn) {
        for (std::int64_t co = 0; co < c_out; ++co) {
            for (std::int64_t dy = 0; dy < r64; ++dy) {
                for (std::int64_t dx = 0; dx < r64; ++dx) {
                    const std::int64_t ci = (co * r64 + dy) * r64 + dx;
                    const real_t* src = in + ((nn * c_out * r64 * r64 + ci) * h) * w;
                    for (std::int64_t y = 0; y < h; ++y) {
                        for (std::int64_t x = 0; x < w; ++x) {
                            out[((nn * c_out + co) * h * r64 + y * r64 + dy) * w * r64 +
                                x * r64 + dx] = src[y * w + x];
                        }
                    }
                }
            }
        }
    }
}

void unshuffle_values(const real_t* in, std::int64_t n, std::int64_t c_out, std::int64_t h,
                      std::int64_t w, int r, real_t* out, bool accumulate) {
    const std::int64_t r64 = r;
    for (std::int64_t nn = 0; nn < n; ++nn) {
        for (std::int64_t co = 0; co < c_out; ++co) {
            for (std::int64_t dy = 0; dy < r64; ++dy) {
                for (std::int64_t dx = 0; dx < r64; ++dx) {
                    const std::int64_t ci = (co * r64 + dy) * r64 + dx;
                    real_t* dst = out + ((nn * c_out * r64 * r64 + ci) * h) * w;
                    for (std::int64_t y = 0; y < h; ++y) {
                        for (std::int64_t x = 0; x < w; ++x) {
                            const real_t v =
                                in[((nn * c_out + co) * h * r64 + y * r64 + dy) * w * r64 +
                                   x * r64 + dx];
                            if (accumulate) {
                                dst[y * w + x] += v;
                            } else {
                                dst[y * w + x] = v;
                            }
                        }
                    }
                }
            }
        }
    }
}

} // namespace

Tensor pixel_shuffle(Tape& tape, const Tensor& x, int r) {
    if (r < 1) {
        throw ContractError("pixel_shuffle: factor must be positive");
    }
    const Shape& xs = x.shape();
    const std::int64_t r2 = static_cast<std::int64_t>(r) * r;
    if (xs.c % r2 != 0) {
        throw DimensionError("pixel_shuffle: channels of " + xs.str() +
                             " not divisible by r^2 = " + std::to_string(r2));
    }
    const std::int64_t c_out = xs.c / r2;
    Tensor out({xs.n, c_out, xs.h * r, xs.w * r});
    shuffle_values(x.data().data(), xs.n, c_out, xs.h, xs.w, r, out.mutable_data().data());
    std::int32_t xid = tape.resolve(x);
    if (xid < 0) {
        return out;
    }
    auto id = tape.record("pixel_shuffle", {xid}, out.numel(),
                          [xid, n = xs.n, c_out, h = xs.h, w = xs.w, r](Tape& t,
                                                                        std::int32_t self) {
                              auto go = t.grad_view(self);
                              auto gx = t.grad_buffer(xid, n * c_out * r * r * h * w);
                              unshuffle_values(go.data(), n, c_out, h, w, r, gx.data(), true);
                          });
    tape.bind(out, id);
    return out;
}

Tensor pixel_unshuffle(Tape& tape, const Tensor& x, int r) {
    if (r < 1) {
        throw ContractError("pixel_unshuffle: factor must be positive");
    }
    const Shape& xs = x.shape();
    if (xs.h % r != 0 || xs.w % r != 0) {
        throw DimensionError("pixel_unshuffle: spatial extents of " + xs.str() +
                             " not divisible by r = " + std::to_string(r));
    }
    const std::int64_t h = xs.h / r;
    const std::int64_t w = xs.w / r;
    Tensor out({xs.n, xs.c * r * r, h, w});
    unshuffle_values(x.data().data(), xs.n, xs.c, h, w, r, out.mutable_data().data(), false);
    std::int32_t xid = tape.resolve(x);
    if (xid < 0) {
        return out;
    }
    auto id = tape.record("pixel_unshuffle", {xid}, out.numel(),
                          [xid, n = xs.n, c = xs.c, h, w, r](Tape& t, std::int32_t self) {
                              auto go = t.grad_view(self);
                              auto gx = t.grad_buffer(xid, n * c * h * r * w * r);
                              // Forward unshuffle is a permutation; its adjoint is the
                              // matching shuffle.
                              std::vector<real_t> tmp(go.size());
                              shuffle_values(go.data(), n, c, h, w, r, tmp.data());
                              for (std::size_t i = 0; i < tmp.size(); ++i) {
                                  gx[i] += tmp[i];
                              }
                          });
    tape.bind(out, id);
    return out;
}

Tensor mean_all(Tape& tape, const Tensor& x) {
    const std::int64_t count = x.numel();
    if (count < 1) {
        throw ContractError("mean_all: empty tensor");
    }
    real_t acc = 0;
    for (real_t v : x.data()) {
        acc += v;
    }
    Tensor out = Tensor::scalar(acc / static_cast<real_t>(count));
    std::int32_t xid = tape.resolve(x);
    if (xid < 0) {
        return out;
    }
    auto id = tape.record("mean_all", {xid}, 1,
                          [xid, count](Tape& t, std::int32_t self) {
                              auto go = t.grad_view(self);
                              auto gx = t.grad_buffer(xid, count);
                              const real_t g = go[0] / static_cast<real_t>(count);
                              for (std::int64_t i = 0; i < count; ++i) {
                                  gx[static_cast<std::size_t>(i)] += g;
                              }
                          });
    tape.bind(out, id);
    return out;
}

} // namespace posr
