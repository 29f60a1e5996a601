#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "drpn/toynet.hpp"
#include "test_util.hpp"

using namespace drpn;
using namespace drpn::toy;
using testutil::max_abs_diff;

namespace {

double sample_xent(const ToyNet& net, const SyntheticScene& scene) {
  const Matrix z = net.logits(scene.image);
  double mx = z.at(0, 0);
  for (int c = 1; c < z.cols; ++c) mx = std::max(mx, z.at(0, c));
  double lse = 0.0;
  for (int c = 0; c < z.cols; ++c) lse += std::exp(z.at(0, c) - mx);
  return std::log(lse) - (z.at(0, scene.size_class) - mx);
}

}  // namespace

TEST(TrainConfig, LearningRateSchedule) {
  TrainConfig cfg;
  EXPECT_DOUBLE_EQ(cfg.lr_at_epoch(1), 0.01);
  EXPECT_DOUBLE_EQ(cfg.lr_at_epoch(16), 0.01);
  EXPECT_DOUBLE_EQ(cfg.lr_at_epoch(17), 0.001);
  EXPECT_DOUBLE_EQ(cfg.lr_at_epoch(22), 0.001);
  EXPECT_DOUBLE_EQ(cfg.lr_at_epoch(23), 0.0001);
  EXPECT_DOUBLE_EQ(cfg.lr_at_epoch(24), 0.0001);
}

TEST(Train, ZeroLearningRateLeavesParametersUnchanged) {
  const auto data = generate_dataset(default_task(16, 5));
  ToyNet net = ToyNet::init(3, 5);
  const ToyNet before = net;

  TrainConfig cfg;
  cfg.lr = 0.0;
  cfg.epochs = 2;
  const TrainResult result = train(net, data, cfg);

  EXPECT_EQ(max_abs_diff(net.drpn1.k3x3, before.drpn1.k3x3), 0.0);
  EXPECT_EQ(max_abs_diff(net.drpn1.f1, before.drpn1.f1), 0.0);
  EXPECT_EQ(max_abs_diff(net.drpn2.k1x1, before.drpn2.k1x1), 0.0);
  EXPECT_EQ(max_abs_diff(net.head_w, before.head_w), 0.0);
  ASSERT_EQ(result.epoch_loss.size(), 2u);
  EXPECT_DOUBLE_EQ(result.epoch_loss[0], result.epoch_loss[1]);
}

TEST(Train, MemorizesSingleSample) {
  // One large centered square; step counts calibrated against an overfit run
  // of this implementation (loss ~0.099 at step 200, crosses 0.05 near 320).
  const auto task = default_task(0, 11);
  const std::vector<SyntheticScene> data = {
      make_centered_scene(task.h, task.w, 24, task.bucket_edges)};
  ToyNet net = ToyNet::init(3, 11);

  TrainConfig cfg;
  cfg.batch_size = 1;
  cfg.epochs = 600;  // one SGD step per epoch
  cfg.seed = 11;
  const TrainResult r = train(net, data, cfg);
  EXPECT_LT(r.epoch_loss[199], 0.3);
  EXPECT_LT(sample_xent(net, data[0]), 0.05);
}

TEST(Train, DeterministicUnderSeed) {
  const auto data = generate_dataset(default_task(24, 3));
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.seed = 3;

  ToyNet a = ToyNet::init(3, 3);
  ToyNet b = ToyNet::init(3, 3);
  const TrainResult ra = train(a, data, cfg);
  const TrainResult rb = train(b, data, cfg);
  ASSERT_EQ(ra.epoch_loss, rb.epoch_loss);
  EXPECT_EQ(max_abs_diff(a.drpn2.k3x3, b.drpn2.k3x3), 0.0);
  EXPECT_EQ(ra.train_accuracy, rb.train_accuracy);
}

TEST(Train, RejectsEmptyDataset) {
  ToyNet net = ToyNet::init(3, 1);
  EXPECT_THROW(train(net, {}, TrainConfig{}), std::invalid_argument);
}

TEST(Probe, UniformWeightsForZeroGenerators) {
  ToyNet net = ToyNet::init(3, 21);
  for (double& v : net.drpn2.f1.data) v = 0.0;
  for (double& v : net.drpn2.f2.data) v = 0.0;

  const auto task = default_task(0, 21);
  std::vector<SyntheticScene> frames;
  for (int s : {3, 9, 15, 21, 27})
    frames.push_back(make_centered_scene(task.h, task.w, s, task.bucket_edges));

  const auto rows = probe_branch_weights(net, frames);
  ASSERT_EQ(rows.size(), 5u);
  for (const auto& row : rows)
    for (double w : row.mean_weight) EXPECT_NEAR(w, 0.2, 1e-15);
}

TEST(Probe, MeansFormADistribution) {
  ToyNet net = ToyNet::init(3, 23);
  const auto task = default_task(0, 23);
  std::vector<SyntheticScene> frames;
  for (int s = 3; s <= 28; ++s)
    frames.push_back(make_centered_scene(task.h, task.w, s, task.bucket_edges));

  const auto rows = probe_branch_weights(net, frames);
  ASSERT_EQ(rows.size(), 26u);
  for (const auto& row : rows) {
    double sum = 0.0;
    for (double w : row.mean_weight) sum += w;
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(Probe, RequiresSortedNonEmptySequence) {
  ToyNet net = ToyNet::init(3, 25);
  EXPECT_THROW(probe_branch_weights(net, {}), std::invalid_argument);

  const auto task = default_task(0, 25);
  std::vector<SyntheticScene> frames;
  frames.push_back(make_centered_scene(task.h, task.w, 9, task.bucket_edges));
  frames.push_back(make_centered_scene(task.h, task.w, 3, task.bucket_edges));
  EXPECT_THROW(probe_branch_weights(net, frames), std::invalid_argument);
}

TEST(Probe, TrainedWeightsSeparateBlankFromTarget) {
  const auto data = generate_dataset(default_task(48, 13));
  ToyNet net = ToyNet::init(3, 13);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 13;
  train(net, data, cfg);

  const auto task = default_task(0, 13);
  SyntheticScene blank;
  blank.image = Tensor4(1, 1, task.h, task.w);  // no target, zero noise
  const SyntheticScene target = make_centered_scene(task.h, task.w, 20, task.bucket_edges);

  const auto frames_blank = probe_branch_weights(net, {blank});
  const auto frames_target = probe_branch_weights(net, {target});
  double diff = 0.0;
  for (int b = 0; b < 5; ++b)
    diff = std::max(diff, std::abs(frames_blank[0].mean_weight[static_cast<std::size_t>(b)] -
                                   frames_target[0].mean_weight[static_cast<std::size_t>(b)]));
  EXPECT_GT(diff, 1e-6);
}

TEST(Probe, CsvFormat) {
  std::vector<ProbeRow> rows(2);
  rows[0].target_size = 3;
  rows[0].mean_weight = {0.1, 0.2, 0.3, 0.25, 0.15};
  rows[1].target_size = 28;
  rows[1].mean_weight = {0.123456789123, 0.2, 0.3, 0.2, 0.2};

  std::ostringstream out;
  write_probe_csv(rows, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "s,w_3x3,w_1x3,w_3x1,w_1x1,w_shortcut");
  std::getline(in, line);
  EXPECT_EQ(line, "3,0.1,0.2,0.3,0.25,0.15");
  std::getline(in, line);
  EXPECT_EQ(line.substr(0, 14), "28,0.123456789");
}

TEST(Spearman, KnownValues) {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  const std::vector<double> inc = {10, 20, 30, 40, 50};
  const std::vector<double> dec = {5, 4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(spearman(x, inc), 1.0);
  EXPECT_DOUBLE_EQ(spearman(x, dec), -1.0);

  // Monotone rank relation survives a non-linear map.
  const std::vector<double> curved = {1, 4, 9, 16, 25};
  EXPECT_DOUBLE_EQ(spearman(x, curved), 1.0);

  const std::vector<double> flat = {7, 7, 7, 7, 7};
  EXPECT_DOUBLE_EQ(spearman(x, flat), 0.0);

  EXPECT_THROW(spearman(x, std::vector<double>{1.0}), std::invalid_argument);
}
