#pragma once

#include <string>
#include <vector>

#include "drpn/autodiff.hpp"
#include "drpn/layer.hpp"

namespace drpn::ad {

// Trainable parameter set of one layer, mirrored from / into a plain
// DrpnLayer. Dynamic weights only; fixed-weight special cases are not trained.
struct DrpnLayerVars {
  int c_in = 0;
  int c_out = 0;
  bool has_shortcut = false;
  Parameter f1, f2, k3x3, k1x3, k3x1, k1x1;

  static DrpnLayerVars from_layer(const std::string& prefix, const DrpnLayer& layer);
  DrpnLayer to_layer() const;
  std::vector<Parameter*> params();

  int branch_count() const { return has_shortcut ? 5 : 4; }
};

// Branch-weight generation subgraph for a batch-1 input node; returns the
// (branches x c_out) weight matrix node. Gradients flow into f1 and f2.
int build_branch_weights(Tape& t, DrpnLayerVars& v, int x);

// Multi-branch forward (convolve, then weight and sum the outputs).
int build_forward_train(Tape& t, DrpnLayerVars& v, int x);

// Folded forward (weight and sum the kernels, then convolve once). Computes
// the same function as build_forward_train; both are differentiable.
int build_forward_inference(Tape& t, DrpnLayerVars& v, int x);

}  // namespace drpn::ad
