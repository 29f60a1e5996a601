#include "drpn/layer.hpp"

#include <random>
#include <stdexcept>
#include <string>

namespace drpn {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void add_into(Tensor4& acc, const Tensor4& t) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc.data[i] += t.data[i];
}

void add_into(Kernel4& acc, const Kernel4& k) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc.data[i] += k.data[i];
}

void copy_sample_out(Tensor4& batch, const Tensor4& s, int index) {
  const std::size_t stride = s.size();
  std::copy(s.data.begin(), s.data.end(),
            batch.data.begin() + static_cast<std::ptrdiff_t>(stride) * index);
}

Kernel4 gaussian_kernel(int co, int ci, int kh, int kw, double stddev,
                        std::mt19937_64& rng) {
  Kernel4 k(co, ci, kh, kw);
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& v : k.data) v = dist(rng);
  return k;
}

}  // namespace

std::vector<double> BranchWeights::row(int b) const {
  std::vector<double> out(static_cast<std::size_t>(values.cols));
  for (int c = 0; c < values.cols; ++c) out[static_cast<std::size_t>(c)] = values.at(b, c);
  return out;
}

BranchWeights BranchWeights::broadcast(std::span<const double> per_branch, int c_out) {
  Matrix m(static_cast<int>(per_branch.size()), c_out);
  for (int b = 0; b < m.rows; ++b)
    for (int c = 0; c < c_out; ++c) m.at(b, c) = per_branch[static_cast<std::size_t>(b)];
  return BranchWeights{std::move(m)};
}

DrpnLayer DrpnLayer::make(Kernel4 f1, Kernel4 f2, Kernel4 k3x3, Kernel4 k1x3,
                          Kernel4 k3x1, Kernel4 k1x1) {
  DrpnLayer layer;
  layer.c_in = k3x3.ci;
  layer.c_out = k3x3.co;
  layer.has_shortcut = layer.c_in == layer.c_out;

  require(k3x3.kh == 3 && k3x3.kw == 3, "DrpnLayer: k3x3 extent");
  require(k1x3.kh == 1 && k1x3.kw == 3, "DrpnLayer: k1x3 extent");
  require(k3x1.kh == 3 && k3x1.kw == 1, "DrpnLayer: k3x1 extent");
  require(k1x1.kh == 1 && k1x1.kw == 1, "DrpnLayer: k1x1 extent");
  for (const Kernel4* k : {&k1x3, &k3x1, &k1x1})
    require(k->co == layer.c_out && k->ci == layer.c_in,
            "DrpnLayer: branch kernels must share (c_out, c_in)");
  require(f1.kh == 1 && f1.kw == 1 && f2.kh == 1 && f2.kw == 1,
          "DrpnLayer: f1/f2 must be 1x1");
  require(f1.ci == layer.c_in && f2.ci == layer.c_in, "DrpnLayer: f1/f2 input channels");
  require(f1.co == (layer.has_shortcut ? 5 : 4),
          "DrpnLayer: f1 output channels must equal branch count");
  require(f2.co == layer.c_out, "DrpnLayer: f2 output channels");

  layer.f1 = std::move(f1);
  layer.f2 = std::move(f2);
  layer.k3x3 = std::move(k3x3);
  layer.k1x3 = std::move(k1x3);
  layer.k3x1 = std::move(k3x1);
  layer.k1x1 = std::move(k1x1);
  return layer;
}

DrpnLayer DrpnLayer::random(int c_in, int c_out, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int branches = c_in == c_out ? 5 : 4;
  auto he = [](int ci, int kh, int kw) {
    return std::sqrt(2.0 / (static_cast<double>(ci) * kh * kw));
  };
  Kernel4 k3x3 = gaussian_kernel(c_out, c_in, 3, 3, he(c_in, 3, 3), rng);
  Kernel4 k1x3 = gaussian_kernel(c_out, c_in, 1, 3, he(c_in, 1, 3), rng);
  Kernel4 k3x1 = gaussian_kernel(c_out, c_in, 3, 1, he(c_in, 3, 1), rng);
  Kernel4 k1x1 = gaussian_kernel(c_out, c_in, 1, 1, he(c_in, 1, 1), rng);
  Kernel4 f1 = gaussian_kernel(branches, c_in, 1, 1, 0.01, rng);
  Kernel4 f2 = gaussian_kernel(c_out, c_in, 1, 1, 0.01, rng);
  return make(std::move(f1), std::move(f2), std::move(k3x3), std::move(k1x3),
              std::move(k3x1), std::move(k1x1));
}

DrpnLayer make_special_case(SpecialCase c, Kernel4 k3x3, Kernel4 k1x3, Kernel4 k3x1,
                            Kernel4 k1x1) {
  const int c_in = k3x3.ci;
  const int c_out = k3x3.co;
  if (c != SpecialCase::vgg)
    require(c_in == c_out, "make_special_case: this case requires the shortcut branch");

  const bool shortcut = c_in == c_out;
  const int branches = shortcut ? 5 : 4;
  DrpnLayer layer = DrpnLayer::make(Kernel4(branches, c_in, 1, 1), Kernel4(c_out, c_in, 1, 1),
                                    std::move(k3x3), std::move(k1x3), std::move(k3x1),
                                    std::move(k1x1));

  std::vector<double> w(static_cast<std::size_t>(branches), 0.0);
  switch (c) {
    case SpecialCase::vgg:
      w[kBranch3x3] = 1.0;
      break;
    case SpecialCase::resnet:
      w[kBranch3x3] = 0.5;
      w[kBranchShortcut] = 0.5;
      break;
    case SpecialCase::repvgg:
      w[kBranch3x3] = 1.0 / 3.0;
      w[kBranch1x1] = 1.0 / 3.0;
      w[kBranchShortcut] = 1.0 / 3.0;
      break;
    case SpecialCase::lightweight:
      w[kBranchShortcut] = 1.0;
      break;
  }
  layer.fixed_weights = BranchWeights::broadcast(w, c_out);
  return layer;
}

BranchWeights generate_weights(const DrpnLayer& layer, const Tensor4& x) {
  require(x.n == 1, "generate_weights: batch must be 1");
  require(x.c == layer.c_in, "generate_weights: channel mismatch");
  if (layer.fixed_weights) return *layer.fixed_weights;

  const Matrix q = flatten_spatial(conv2d(x, layer.f1, 0, 0));
  const Matrix k = flatten_spatial(conv2d(x, layer.f2, 0, 0));
  Matrix logits = matmul(transpose(q), k);
  // Inner products accumulate over all h*w positions; normalize so the
  // softmax sharpness does not grow with image area.
  const double inv_n = 1.0 / (static_cast<double>(x.h) * x.w);
  for (auto& v : logits.data) v *= inv_n;
  return BranchWeights{softmax_over_branches(logits)};
}

namespace {

Tensor4 forward_train_sample(const DrpnLayer& layer, const Tensor4& x) {
  const BranchWeights w = generate_weights(layer, x);
  Tensor4 out = channel_scale(conv2d(x, layer.k3x3, 1, 1), w.row(kBranch3x3));
  add_into(out, channel_scale(conv2d(x, layer.k1x3, 0, 1), w.row(kBranch1x3)));
  add_into(out, channel_scale(conv2d(x, layer.k3x1, 1, 0), w.row(kBranch3x1)));
  add_into(out, channel_scale(conv2d(x, layer.k1x1, 0, 0), w.row(kBranch1x1)));
  if (layer.has_shortcut) {
    // The shortcut is itself a convolution (pointwise identity kernel), so
    // the multi-branch pass costs exactly branch_count() branch convolutions.
    add_into(out, channel_scale(conv2d(x, identity_kernel_1x1(layer.c_in), 0, 0),
                                w.row(kBranchShortcut)));
  }
  return out;
}

Tensor4 forward_unfused_sample(const DrpnLayer& layer, const Tensor4& x) {
  // Convolve every branch before any weights exist, then weight the outputs.
  std::vector<Tensor4> branch_out;
  branch_out.push_back(conv2d(x, layer.k3x3, 1, 1));
  branch_out.push_back(conv2d(x, layer.k1x3, 0, 1));
  branch_out.push_back(conv2d(x, layer.k3x1, 1, 0));
  branch_out.push_back(conv2d(x, layer.k1x1, 0, 0));
  if (layer.has_shortcut)
    branch_out.push_back(conv2d(x, identity_kernel_1x1(layer.c_in), 0, 0));

  const BranchWeights w = generate_weights(layer, x);
  Tensor4 out = channel_scale(branch_out[0], w.row(0));
  for (int b = 1; b < layer.branch_count(); ++b)
    add_into(out, channel_scale(branch_out[static_cast<std::size_t>(b)], w.row(b)));
  return out;
}

template <typename PerSample>
Tensor4 batched(const DrpnLayer& layer, const Tensor4& x, PerSample&& per_sample) {
  require(x.c == layer.c_in, "drpn forward: channel mismatch");
  if (x.n == 1) return per_sample(layer, x);
  Tensor4 out(x.n, layer.c_out, x.h, x.w);
  for (int i = 0; i < x.n; ++i) copy_sample_out(out, per_sample(layer, x.sample(i)), i);
  return out;
}

}  // namespace

Tensor4 forward_train(const DrpnLayer& layer, const Tensor4& x) {
  return batched(layer, x, forward_train_sample);
}

Tensor4 forward_unfused(const DrpnLayer& layer, const Tensor4& x) {
  return batched(layer, x, forward_unfused_sample);
}

Kernel4 fold_kernels(const DrpnLayer& layer, const BranchWeights& w) {
  require(w.branches() == layer.branch_count(),
          "fold_kernels: weight rows do not match branch count");
  require(w.channels() == layer.c_out, "fold_kernels: weight columns != c_out");

  Kernel4 folded = kernel_channel_scale(pad_kernel_to_3x3(layer.k3x3), w.row(kBranch3x3));
  add_into(folded, kernel_channel_scale(pad_kernel_to_3x3(layer.k1x3), w.row(kBranch1x3)));
  add_into(folded, kernel_channel_scale(pad_kernel_to_3x3(layer.k3x1), w.row(kBranch3x1)));
  add_into(folded, kernel_channel_scale(pad_kernel_to_3x3(layer.k1x1), w.row(kBranch1x1)));
  if (layer.has_shortcut)
    add_into(folded,
             kernel_channel_scale(identity_kernel(layer.c_in), w.row(kBranchShortcut)));
  return folded;
}

Tensor4 forward_inference(const DrpnLayer& layer, const Tensor4& x) {
  return batched(layer, x, [](const DrpnLayer& l, const Tensor4& s) {
    const BranchWeights w = generate_weights(l, s);
    return conv2d(s, fold_kernels(l, w), 1, 1);
  });
}

}  // namespace drpn
