#include <gtest/gtest.h>

#include <sstream>

#include "drpn/annotations.hpp"

using namespace drpn::io;

namespace {

// Endpoint boxes of the scale-variation scatter: a 9x5 speck and a
// near-full-frame 296x292 box, both on 300x300 images.
const char* kFixture = R"([
  {"image_width": 300, "image_height": 300, "boxes": [[10, 20, 9, 5]]},
  {"image_width": 300, "image_height": 300, "boxes": [[2, 4, 296, 292]]}
])";

}  // namespace

TEST(AnnotationStats, FixtureEndpoints) {
  const AnnotationStats stats = annotation_stats_from_text(kFixture);
  EXPECT_EQ(stats.boxes_total, 2u);
  EXPECT_EQ(stats.boxes_kept, 2u);
  EXPECT_EQ(stats.boxes_skipped, 0u);

  EXPECT_DOUBLE_EQ(stats.min_area_proportion, (9.0 / 300.0) * (5.0 / 300.0));
  EXPECT_NEAR(stats.min_area_proportion, 0.0005, 1e-15);  // 0.05% of the image
  EXPECT_DOUBLE_EQ(stats.max_area_proportion, (296.0 / 300.0) * (292.0 / 300.0));
  EXPECT_NEAR(stats.max_area_proportion, 0.960356, 1e-6);  // ~96.0%

  EXPECT_EQ(stats.count_area_below_0_1_percent, 1u);
  EXPECT_EQ(stats.count_extent_above_90_percent, 1u);

  const std::string report = render_stats_report(stats);
  EXPECT_NE(report.find("0.05%"), std::string::npos);
  EXPECT_NE(report.find("96.0"), std::string::npos);
  EXPECT_NE(report.find("< 0.1%: 1"), std::string::npos);
}

TEST(AnnotationStats, CsvRows) {
  const AnnotationStats stats = annotation_stats_from_text(kFixture);
  std::ostringstream out;
  write_ratio_csv(stats, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "w_ratio,h_ratio");
  std::getline(in, line);
  EXPECT_EQ(line, "0.03,0.0166666667");
  std::getline(in, line);
  EXPECT_EQ(line.rfind("0.986666667,", 0), 0u);
}

TEST(AnnotationStats, EmptyBoxList) {
  const AnnotationStats stats =
      annotation_stats_from_text(R"([{"image_width": 100, "image_height": 50, "boxes": []}])");
  EXPECT_EQ(stats.boxes_total, 0u);
  EXPECT_EQ(stats.boxes_kept, 0u);
  EXPECT_EQ(stats.min_area_proportion, 0.0);
  EXPECT_EQ(stats.max_area_proportion, 0.0);
  std::ostringstream out;
  write_ratio_csv(stats, out);
  EXPECT_EQ(out.str(), "w_ratio,h_ratio\n");
}

TEST(AnnotationStats, SkipsOutOfRangeRatios) {
  const AnnotationStats stats = annotation_stats_from_text(R"([
    {"image_width": 100, "image_height": 100,
     "boxes": [[0, 0, 150, 10], [0, 0, -3, 10], [0, 0, 10, 10]]}
  ])");
  EXPECT_EQ(stats.boxes_total, 3u);
  EXPECT_EQ(stats.boxes_kept, 1u);
  EXPECT_EQ(stats.boxes_skipped, 2u);
  ASSERT_EQ(stats.ratios.size(), 1u);
  EXPECT_DOUBLE_EQ(stats.ratios[0][0], 0.1);
}

TEST(AnnotationStats, RejectsMalformedDocuments) {
  EXPECT_THROW(annotation_stats_from_text("not json at all"), std::runtime_error);
  EXPECT_THROW(annotation_stats_from_text("{\"image_width\": 1}"), std::runtime_error);
  EXPECT_THROW(annotation_stats_from_text(R"([{"image_width": 300}])"), std::runtime_error);
  EXPECT_THROW(annotation_stats_from_text(
                   R"([{"image_width": 300, "image_height": 300, "boxes": [[1, 2, 3]]}])"),
               std::runtime_error);
  EXPECT_THROW(annotation_stats_from_text(
                   R"([{"image_width": 0, "image_height": 300, "boxes": []}])"),
               std::runtime_error);
}
