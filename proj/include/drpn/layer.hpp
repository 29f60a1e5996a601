#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "drpn/ops.hpp"
#include "drpn/tensor.hpp"

namespace drpn {

// Branch order is fixed everywhere: 3x3, 1x3, 3x1, 1x1, shortcut.
inline constexpr int kBranch3x3 = 0;
inline constexpr int kBranch1x3 = 1;
inline constexpr int kBranch3x1 = 2;
inline constexpr int kBranch1x1 = 3;
inline constexpr int kBranchShortcut = 4;

// Per-output-channel convex combination over branches: a (branches x c_out)
// matrix whose columns sum to 1.
struct BranchWeights {
  Matrix values;

  int branches() const { return values.rows; }
  int channels() const { return values.cols; }
  std::vector<double> row(int b) const;

  // Broadcasts one weight per branch across all output channels.
  static BranchWeights broadcast(std::span<const double> per_branch, int c_out);
};

// One dynamic re-parameterizable convolution layer: two pointwise
// weight-generation convolutions plus four branch kernels. The shortcut
// branch exists exactly when input and output channel counts match.
struct DrpnLayer {
  int c_in = 0;
  int c_out = 0;
  Kernel4 f1;    // c_in -> branches, 1x1
  Kernel4 f2;    // c_in -> c_out, 1x1
  Kernel4 k3x3;
  Kernel4 k1x3;
  Kernel4 k3x1;
  Kernel4 k1x1;
  bool has_shortcut = false;
  std::optional<BranchWeights> fixed_weights;

  int branch_count() const { return has_shortcut ? 5 : 4; }

  // Validates shapes and sets the shortcut flag.
  static DrpnLayer make(Kernel4 f1, Kernel4 f2, Kernel4 k3x3, Kernel4 k1x3,
                        Kernel4 k3x1, Kernel4 k1x1);

  // Seeded gaussian init: branch kernels std sqrt(2/(ci*kh*kw)), f1/f2 std 0.01.
  static DrpnLayer random(int c_in, int c_out, std::uint64_t seed);
};

enum class SpecialCase { vgg, resnet, repvgg, lightweight };

// Fixed-weight layers matching classic architectures: vgg (1,0,0,0,0),
// resnet (1/2,0,0,0,1/2), repvgg (1/3,0,0,1/3,1/3), lightweight (0,0,0,0,1).
DrpnLayer make_special_case(SpecialCase c, Kernel4 k3x3, Kernel4 k1x3, Kernel4 k3x1,
                            Kernel4 k1x1);

// Input-conditioned branch weights for one sample (x.n == 1): column softmax
// of flatten(f1(x))^T * flatten(f2(x)) / (h*w). Fixed weights short-circuit.
BranchWeights generate_weights(const DrpnLayer& layer, const Tensor4& x);

// Multi-branch forward: every branch (the shortcut as a pointwise identity
// convolution) convolves the input, outputs are channel-weighted and summed.
// 2 + branch_count() conv2d calls per sample.
Tensor4 forward_train(const DrpnLayer& layer, const Tensor4& x);

// Folds the branches into one (c_out, c_in, 3, 3) kernel: each branch kernel
// padded to 3x3, scaled along its output channels, summed; the shortcut
// contributes the identity kernel.
Kernel4 fold_kernels(const DrpnLayer& layer, const BranchWeights& w);

// Folded forward: exactly 3 conv2d calls per sample (f1, f2, folded kernel).
// Equal to forward_train up to rounding.
Tensor4 forward_inference(const DrpnLayer& layer, const Tensor4& x);

// Convolve-first baseline: all branches convolve (shortcut included), then
// weights are generated and the outputs combined. branch_count() + 2 conv2d
// calls per sample; same result as forward_train.
Tensor4 forward_unfused(const DrpnLayer& layer, const Tensor4& x);

}  // namespace drpn
