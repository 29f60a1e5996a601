#include "drpn/annotations.hpp"

#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace drpn::io {

AnnotationStats annotation_stats_from_text(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("annotations: malformed document: ") + e.what());
  }
  if (!doc.is_array()) throw std::runtime_error("annotations: top level must be an array");

  AnnotationStats stats;
  stats.min_area_proportion = std::numeric_limits<double>::infinity();
  stats.max_area_proportion = -std::numeric_limits<double>::infinity();

  for (const auto& record : doc) {
    if (!record.is_object() || !record.contains("image_width") ||
        !record.contains("image_height") || !record.contains("boxes") ||
        !record["image_width"].is_number() || !record["image_height"].is_number() ||
        !record["boxes"].is_array())
      throw std::runtime_error("annotations: record missing image_width/image_height/boxes");

    const double img_w = record["image_width"].get<double>();
    const double img_h = record["image_height"].get<double>();
    if (img_w <= 0.0 || img_h <= 0.0)
      throw std::runtime_error("annotations: non-positive image extent");

    for (const auto& box : record["boxes"]) {
      if (!box.is_array() || box.size() != 4 || !box[2].is_number() || !box[3].is_number())
        throw std::runtime_error("annotations: box must be [x, y, w, h]");
      ++stats.boxes_total;
      const double w_ratio = box[2].get<double>() / img_w;
      const double h_ratio = box[3].get<double>() / img_h;
      if (w_ratio < 0.0 || w_ratio > 1.0 || h_ratio < 0.0 || h_ratio > 1.0) {
        ++stats.boxes_skipped;
        continue;
      }
      ++stats.boxes_kept;
      stats.ratios.push_back({w_ratio, h_ratio});
      const double area = w_ratio * h_ratio;
      stats.min_area_proportion = std::min(stats.min_area_proportion, area);
      stats.max_area_proportion = std::max(stats.max_area_proportion, area);
      if (area < 0.001) ++stats.count_area_below_0_1_percent;
      if (std::max(w_ratio, h_ratio) > 0.9) ++stats.count_extent_above_90_percent;
    }
  }

  if (stats.boxes_kept == 0) {
    stats.min_area_proportion = 0.0;
    stats.max_area_proportion = 0.0;
  }
  return stats;
}

AnnotationStats annotation_stats_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("annotations: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return annotation_stats_from_text(buf.str());
}

void write_ratio_csv(const AnnotationStats& stats, std::ostream& out) {
  out << "w_ratio,h_ratio\n";
  char buf[80];
  for (const auto& r : stats.ratios) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g\n", r[0], r[1]);
    out << buf;
  }
}

std::string render_stats_report(const AnnotationStats& stats) {
  char line[160];
  std::string out;
  std::snprintf(line, sizeof line, "boxes: %zu kept, %zu skipped (ratio out of [0,1])\n",
                stats.boxes_kept, stats.boxes_skipped);
  out += line;
  std::snprintf(line, sizeof line, "min area proportion: %.4g%%\n",
                stats.min_area_proportion * 100.0);
  out += line;
  std::snprintf(line, sizeof line, "max area proportion: %.4g%%\n",
                stats.max_area_proportion * 100.0);
  out += line;
  std::snprintf(line, sizeof line, "boxes with area proportion < 0.1%%: %zu\n",
                stats.count_area_below_0_1_percent);
  out += line;
  std::snprintf(line, sizeof line, "boxes with linear extent > 90%%: %zu\n",
                stats.count_extent_above_90_percent);
  out += line;
  return out;
}

}  // namespace drpn::io
