#include "drpn/layer_graph.hpp"

#include <stdexcept>

#include "drpn/ops.hpp"

namespace drpn::ad {

DrpnLayerVars DrpnLayerVars::from_layer(const std::string& prefix, const DrpnLayer& layer) {
  if (layer.fixed_weights)
    throw std::invalid_argument("DrpnLayerVars: fixed-weight layers are not trainable");
  DrpnLayerVars v;
  v.c_in = layer.c_in;
  v.c_out = layer.c_out;
  v.has_shortcut = layer.has_shortcut;
  v.f1 = Parameter(prefix + ".f1", layer.f1);
  v.f2 = Parameter(prefix + ".f2", layer.f2);
  v.k3x3 = Parameter(prefix + ".k3x3", layer.k3x3);
  v.k1x3 = Parameter(prefix + ".k1x3", layer.k1x3);
  v.k3x1 = Parameter(prefix + ".k3x1", layer.k3x1);
  v.k1x1 = Parameter(prefix + ".k1x1", layer.k1x1);
  return v;
}

DrpnLayer DrpnLayerVars::to_layer() const {
  return DrpnLayer::make(std::get<Kernel4>(f1.value), std::get<Kernel4>(f2.value),
                         std::get<Kernel4>(k3x3.value), std::get<Kernel4>(k1x3.value),
                         std::get<Kernel4>(k3x1.value), std::get<Kernel4>(k1x1.value));
}

std::vector<Parameter*> DrpnLayerVars::params() {
  return {&f1, &f2, &k3x3, &k1x3, &k3x1, &k1x1};
}

int build_branch_weights(Tape& t, DrpnLayerVars& v, int x) {
  const Tensor4& xv = std::get<Tensor4>(t.value(x));
  const double inv_positions = 1.0 / (static_cast<double>(xv.h) * xv.w);
  const int q = t.flatten_spatial(t.conv2d(x, t.leaf(v.f1), 0, 0));
  const int k = t.flatten_spatial(t.conv2d(x, t.leaf(v.f2), 0, 0));
  const int logits = t.scale(t.matmul(t.transpose(q), k), inv_positions);
  return t.softmax_over_branches(logits);
}

int build_forward_train(Tape& t, DrpnLayerVars& v, int x) {
  const int w = build_branch_weights(t, v, x);
  int out = t.channel_scale(t.conv2d(x, t.leaf(v.k3x3), 1, 1), t.row(w, kBranch3x3));
  out = t.add(out, t.channel_scale(t.conv2d(x, t.leaf(v.k1x3), 0, 1), t.row(w, kBranch1x3)));
  out = t.add(out, t.channel_scale(t.conv2d(x, t.leaf(v.k3x1), 1, 0), t.row(w, kBranch3x1)));
  out = t.add(out, t.channel_scale(t.conv2d(x, t.leaf(v.k1x1), 0, 0), t.row(w, kBranch1x1)));
  if (v.has_shortcut) out = t.add(out, t.channel_scale(x, t.row(w, kBranchShortcut)));
  return out;
}

int build_forward_inference(Tape& t, DrpnLayerVars& v, int x) {
  const int w = build_branch_weights(t, v, x);
  int folded = t.kernel_channel_scale(t.pad_kernel_to_3x3(t.leaf(v.k3x3)),
                                      t.row(w, kBranch3x3));
  folded = t.add(folded, t.kernel_channel_scale(t.pad_kernel_to_3x3(t.leaf(v.k1x3)),
                                                t.row(w, kBranch1x3)));
  folded = t.add(folded, t.kernel_channel_scale(t.pad_kernel_to_3x3(t.leaf(v.k3x1)),
                                                t.row(w, kBranch3x1)));
  folded = t.add(folded, t.kernel_channel_scale(t.pad_kernel_to_3x3(t.leaf(v.k1x1)),
                                                t.row(w, kBranch1x1)));
  if (v.has_shortcut)
    folded = t.add(folded, t.kernel_channel_scale(t.leaf(Value(identity_kernel(v.c_in))),
                                                  t.row(w, kBranchShortcut)));
  return t.conv2d(x, folded, 1, 1);
}

}  // namespace drpn::ad
