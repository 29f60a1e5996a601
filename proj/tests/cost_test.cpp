#include <gtest/gtest.h>

#include <random>

#include "drpn/cost.hpp"
#include "drpn/ops.hpp"
#include "test_util.hpp"

using namespace drpn;
using namespace drpn::bench;
using testutil::random_tensor;

TEST(ConvCount, TableOfModes) {
  std::mt19937_64 rng(81);
  const DrpnLayer with_shortcut = DrpnLayer::random(4, 4, rng());
  const DrpnLayer without = DrpnLayer::random(2, 4, rng());

  EXPECT_EQ(count_convolutions(with_shortcut, Mode::folded_inference), 3);
  EXPECT_EQ(count_convolutions(without, Mode::folded_inference), 3);
  EXPECT_EQ(count_convolutions(with_shortcut, Mode::train_multibranch), 7);
  EXPECT_EQ(count_convolutions(without, Mode::train_multibranch), 6);
  EXPECT_EQ(count_convolutions(with_shortcut, Mode::unfused_baseline), 7);
  EXPECT_EQ(count_convolutions(without, Mode::unfused_baseline), 6);
}

TEST(MacCount, PointwiseConvCostsOneMacPerPixel) {
  reset_op_counters();
  const Tensor4 x(1, 1, 4, 4);
  conv2d(x, Kernel4(1, 1, 1, 1), 0, 0);
  EXPECT_EQ(op_counters().conv_macs, 16u);
  EXPECT_EQ(op_counters().conv_calls, 1u);
}

TEST(MacCount, FoldedCheaperThanMultibranch) {
  std::mt19937_64 rng(82);
  const DrpnLayer layer = DrpnLayer::random(32, 32, rng());
  const MacBreakdown folded = count_macs(layer, 1, 64, 64, Mode::folded_inference);
  const MacBreakdown multi = count_macs(layer, 1, 64, 64, Mode::train_multibranch);
  EXPECT_LT(folded.total(), multi.total());
  EXPECT_GT(folded.fold, 0u);
  EXPECT_EQ(multi.fold, 0u);
}

TEST(MacCount, DoublingExtentQuadruplesConvTerms) {
  std::mt19937_64 rng(83);
  const DrpnLayer layer = DrpnLayer::random(3, 5, rng());
  for (Mode mode :
       {Mode::train_multibranch, Mode::folded_inference, Mode::unfused_baseline}) {
    const MacBreakdown base = count_macs(layer, 1, 10, 12, mode);
    const MacBreakdown big = count_macs(layer, 1, 20, 24, mode);
    EXPECT_EQ(big.conv, 4u * base.conv);
    EXPECT_EQ(big.attention_matmul, 4u * base.attention_matmul);
    EXPECT_EQ(big.weighting, 4u * base.weighting);
    EXPECT_EQ(big.fold, base.fold);  // kernel arithmetic is extent-independent
  }
}

TEST(MacCount, AnalyticEqualsInstrumented) {
  std::mt19937_64 rng(84);
  std::uniform_int_distribution<int> chan(1, 8);
  std::uniform_int_distribution<int> extent(4, 14);
  for (int trial = 0; trial < 20; ++trial) {
    const int c_in = chan(rng);
    const int c_out = trial % 2 == 0 ? c_in : chan(rng);
    const int h = extent(rng);
    const int w = extent(rng);
    const int n = 1 + trial % 3;
    const DrpnLayer layer = DrpnLayer::random(c_in, c_out, rng());
    const Tensor4 x = random_tensor(n, c_in, h, w, rng);

    for (Mode mode :
         {Mode::train_multibranch, Mode::folded_inference, Mode::unfused_baseline}) {
      reset_op_counters();
      run_mode(layer, x, mode);
      const OpCounters& got = op_counters();
      const MacBreakdown want = count_macs(layer, n, h, w, mode);

      ASSERT_EQ(got.conv_macs, want.conv) << mode_name(mode);
      ASSERT_EQ(got.matmul_macs, want.attention_matmul) << mode_name(mode);
      ASSERT_EQ(got.scale_macs, want.weighting) << mode_name(mode);
      ASSERT_EQ(got.fold_macs, want.fold) << mode_name(mode);
      ASSERT_EQ(got.total_macs(), want.total()) << mode_name(mode);
      ASSERT_EQ(got.conv_calls,
                static_cast<std::uint64_t>(count_convolutions(layer, mode)) * n)
          << mode_name(mode);
    }
  }
}

TEST(TimeModes, ValidatesArgumentsAndReports) {
  std::mt19937_64 rng(85);
  const DrpnLayer layer = DrpnLayer::random(2, 2, rng());
  const Tensor4 x = random_tensor(1, 2, 8, 8, rng);

  EXPECT_THROW(time_modes(layer, x, 4), std::invalid_argument);
  EXPECT_THROW(Tensor4(0, 2, 8, 8), std::invalid_argument);  // empty batch unrepresentable

  const auto reports = time_modes(layer, x, 5);
  ASSERT_EQ(reports.size(), 3u);
  for (const auto& r : reports) {
    EXPECT_GT(r.wall_ns_median, 0u);
    EXPECT_GT(r.macs.total(), 0u);
    EXPECT_GT(r.conv_calls, 0u);
  }
}

TEST(TimeModes, CsvAndTableRender) {
  std::mt19937_64 rng(86);
  const DrpnLayer layer = DrpnLayer::random(2, 2, rng());
  const auto reports = time_modes(layer, random_tensor(1, 2, 8, 8, rng), 5);

  std::ostringstream csv;
  write_cost_csv(reports, csv);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("mode,n,c_in,c_out,h,w,conv_calls", 0), 0u);
  int data_lines = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++data_lines;
  EXPECT_EQ(data_lines, 3);

  const std::string table = render_cost_table(reports);
  EXPECT_NE(table.find("folded_inference"), std::string::npos);
  EXPECT_NE(table.find("train_multibranch"), std::string::npos);
  EXPECT_NE(table.find("unfused_baseline"), std::string::npos);
}
