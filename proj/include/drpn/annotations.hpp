#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace drpn::io {

// Box-size statistics over an annotation file: a JSON array of
//   { "image_width": W, "image_height": H, "boxes": [[x, y, w, h], ...] }.
// Ratios are box extent over image extent; records with ratios outside [0, 1]
// are skipped and counted as warnings.
struct AnnotationStats {
  std::size_t boxes_total = 0;
  std::size_t boxes_kept = 0;
  std::size_t boxes_skipped = 0;
  double min_area_proportion = 0.0;
  double max_area_proportion = 0.0;
  std::size_t count_area_below_0_1_percent = 0;  // w/W * h/H < 0.001
  std::size_t count_extent_above_90_percent = 0;  // max(w/W, h/H) > 0.9
  std::vector<std::array<double, 2>> ratios;      // (w_ratio, h_ratio) per kept box
};

// Throws std::runtime_error on a malformed document.
AnnotationStats annotation_stats_from_text(const std::string& json_text);
AnnotationStats annotation_stats_from_file(const std::string& path);

// CSV with header w_ratio,h_ratio, one row per kept box.
void write_ratio_csv(const AnnotationStats& stats, std::ostream& out);

std::string render_stats_report(const AnnotationStats& stats);

}  // namespace drpn::io
