#pragma once

#include <cstdint>
#include <span>

#include "drpn/tensor.hpp"

namespace drpn {

// Per-thread tallies of the arithmetic the library performs. One MAC is one
// multiply feeding one accumulation. Scalar rescales, exponentials and data
// movement are not counted. Reset explicitly before an instrumented run.
struct OpCounters {
  std::uint64_t conv_calls = 0;
  std::uint64_t conv_macs = 0;
  std::uint64_t matmul_macs = 0;
  std::uint64_t scale_macs = 0;   // channel_scale (branch-output weighting)
  std::uint64_t fold_macs = 0;    // kernel_channel_scale (kernel folding)

  std::uint64_t total_macs() const {
    return conv_macs + matmul_macs + scale_macs + fold_macs;
  }
};

OpCounters& op_counters();
void reset_op_counters();

// Stride-1 zero-padded direct convolution.
// Output shape: (x.n, k.co, x.h + 2*pad_h - k.kh + 1, x.w + 2*pad_w - k.kw + 1).
Tensor4 conv2d(const Tensor4& x, const Kernel4& k, int pad_h, int pad_w);

// Gradient of conv2d w.r.t. its input, given the upstream gradient `gy`.
Tensor4 conv2d_grad_input(const Tensor4& gy, const Kernel4& k, int pad_h, int pad_w,
                          int in_h, int in_w);

// Gradient of conv2d w.r.t. its kernel.
Kernel4 conv2d_grad_kernel(const Tensor4& gy, const Tensor4& x, int pad_h, int pad_w,
                           int kh, int kw);

// Embeds a {3x3, 1x3, 3x1, 1x1} kernel centered into a 3x3 kernel, zeros around.
Kernel4 pad_kernel_to_3x3(const Kernel4& k);

// (c, c, 3, 3) kernel acting as the identity map under pad-1 convolution.
Kernel4 identity_kernel(int c);

// (c, c, 1, 1) identity kernel; the no-pad pointwise form of the same map.
Kernel4 identity_kernel_1x1(int c);

// out[n, c, i, j] = w[c] * x[n, c, i, j].
Tensor4 channel_scale(const Tensor4& x, std::span<const double> w);

// out[o, i, r, s] = w[o] * k[o, i, r, s].
Kernel4 kernel_channel_scale(const Kernel4& k, std::span<const double> w);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

// Column-wise softmax: each column of the result sums to 1. Rows index
// branches, columns output channels. Max-subtracted for overflow safety.
Matrix softmax_over_branches(const Matrix& m);

// (h*w) x c matrix from a batch-1 tensor; row index is i*w + j.
Matrix flatten_spatial(const Tensor4& x);

}  // namespace drpn
