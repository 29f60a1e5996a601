#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "drpn/tensor.hpp"

namespace drpn::ad {

using Value = std::variant<Tensor4, Kernel4, Matrix>;

std::size_t numel(const Value& v);
std::span<double> flat(Value& v);
std::span<const double> flat(const Value& v);
Value zeros_like(const Value& v);
bool same_shape(const Value& a, const Value& b);

// A named trainable value. Gradients accumulate across backward passes;
// zeroing between optimizer steps is the optimizer's job.
struct Parameter {
  std::string name;
  Value value;
  Value grad;

  Parameter() = default;
  Parameter(std::string name_, Value v);
  void zero_grad();
};

// Reverse-mode record over the tensor operation set. Node handles are indices
// into the tape; inputs always precede their consumers. A tape is
// single-threaded; independent tapes are independent.
class Tape {
 public:
  int leaf(Value v);
  int leaf(Parameter& p);  // gradient lands in p.grad after backward()

  int conv2d(int x, int k, int pad_h, int pad_w);
  int matmul(int a, int b);
  int transpose(int a);
  int flatten_spatial(int a);          // batch-1 tensor -> (h*w) x c matrix
  int scale(int a, double s);
  int softmax_over_branches(int a);
  int channel_scale(int x, int w);     // w: 1 x c matrix node
  int row(int m, int r);               // 1 x cols slice of a matrix node
  int add(int a, int b);               // elementwise, same shape and kind
  int mul(int a, int b);
  int relu(int a);
  int avg_pool_2x2(int a);             // stride 2; spatial extents must be even
  int global_avg_pool(int a);          // (n,c,h,w) -> n x c matrix
  int add_row_bias(int m, int bias);   // bias: 1 x cols, broadcast over rows
  int pad_kernel_to_3x3(int k);
  int kernel_channel_scale(int k, int w);  // w: 1 x co matrix node
  int mse_loss(int a, int b);              // mean squared difference, scalar
  int sum(int a);                          // scalar sum of all entries
  // Mean negative log-likelihood of softmax(logits) rows against target
  // class indices; the standard fused classification loss.
  int softmax_cross_entropy(int logits, std::vector<int> targets);

  // Seeds the (scalar) loss gradient with 1 and accumulates gradients into
  // every node reachable from it; bound parameters receive their share.
  void backward(int loss_node);

  const Value& value(int node) const;
  const Value& grad(int node) const;
  std::size_t node_count() const { return nodes_.size(); }

 private:
  enum class Op {
    kLeaf, kConv2d, kMatmul, kTranspose, kFlattenSpatial, kScale, kSoftmaxBranches,
    kChannelScale, kRow, kAdd, kMul, kRelu, kAvgPool2x2, kGlobalAvgPool, kAddRowBias,
    kPadKernel3x3, kKernelChannelScale, kMseLoss, kSum, kSoftmaxXent,
  };

  struct Node {
    Op op;
    std::array<int, 2> in{-1, -1};
    Value value;
    Value grad;
    double scalar = 0.0;  // kScale factor / kRow index
    int pad_h = 0;
    int pad_w = 0;
    std::vector<int> targets;  // kSoftmaxXent
    Parameter* param = nullptr;
  };

  int push(Node n);
  const Value& in_val(const Node& n, int slot) const { return nodes_[n.in[slot]].value; }
  void check(int node) const;

  // Deque keeps value()/grad() references stable while the tape grows.
  std::deque<Node> nodes_;
};

// Central-difference check of the analytic gradients stored in `params`
// against the scalar function `f` of the current parameter values. Returns
// the maximum relative error, with denominator max(|analytic|, |numeric|, 1e-8).
double finite_diff_check(const std::function<double()>& f,
                         std::span<Parameter* const> params, double h);

}  // namespace drpn::ad
