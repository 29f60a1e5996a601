#pragma once

#include <span>

#include "drpn/tensor.hpp"

// Plain serial implementations, written independently of the kernels in
// ops.cpp. Tests use these as the ground truth; the kernel benchmark compares
// against them for speed. They bump no instrumentation counters.
namespace drpn::reference {

Tensor4 conv2d(const Tensor4& x, const Kernel4& k, int pad_h, int pad_w);
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix softmax_over_branches(const Matrix& m);
Tensor4 channel_scale(const Tensor4& x, std::span<const double> w);

// Straight-loop query/key attention: per-pixel inner products accumulated
// into branch-by-channel logits, scaled by 1/(h*w), then column softmax.
Matrix attention_weights(const Tensor4& x, const Kernel4& f1, const Kernel4& f2);

}  // namespace drpn::reference
