#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "drpn/layer.hpp"
#include "drpn/synthetic.hpp"
#include "drpn/tensor.hpp"

namespace drpn::toy {

// Small classification head over two dynamic layers:
//   drpn(1->8), relu, 2x2 avg pool, drpn(8->8), relu, global avg pool, linear.
struct ToyNet {
  DrpnLayer drpn1;  // no shortcut
  DrpnLayer drpn2;  // shortcut (8 == 8)
  Matrix head_w;    // 8 x n_classes
  Matrix head_b;    // 1 x n_classes
  int n_classes = 0;

  static ToyNet init(int n_classes, std::uint64_t seed);

  Matrix logits(const Tensor4& sample) const;  // 1 x n_classes
  int predict(const Tensor4& sample) const;
};

struct TrainConfig {
  int batch_size = 8;
  double lr = 0.01;
  int epochs = 24;
  std::uint64_t seed = 42;

  // Base lr scaled by 0.1 past each of the two decay points (2/3 and 11/12
  // of the schedule; epochs 16 and 22 for the 24-epoch default).
  double lr_at_epoch(int epoch_1based) const;
};

struct TrainResult {
  std::vector<double> epoch_loss;  // mean cross-entropy per epoch
  double train_accuracy = 0.0;
};

// Plain SGD on cross-entropy over size classes. Shuffles per epoch under the
// seed; trained values are written back into `net`. Throws on divergence.
TrainResult train(ToyNet& net, const std::vector<SyntheticScene>& data,
                  const TrainConfig& cfg);

// The canonical 3-class size task (32x32, sizes 3..28, classes split at 8
// and 20).
DatasetConfig default_task(int count, std::uint64_t seed);

struct ProbeRow {
  int target_size = 0;
  // Channel-mean weight per branch: 3x3, 1x3, 3x1, 1x1, shortcut.
  std::array<double, 5> mean_weight{};
};

// Runs weight generation at the last dynamic layer for each frame and
// averages each branch row over output channels. Frames must be sorted by
// target size.
std::vector<ProbeRow> probe_branch_weights(const ToyNet& net,
                                           const std::vector<SyntheticScene>& frames);

// CSV with header s,w_3x3,w_1x3,w_3x1,w_1x1,w_shortcut, 9 significant digits.
void write_probe_csv(std::span<const ProbeRow> rows, std::ostream& out);

// Spearman rank correlation with average ranks on ties.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace drpn::toy
