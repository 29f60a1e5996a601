#include "drpn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace drpn::toy {

namespace {

SyntheticScene render_scene(int h, int w, int s, int top, int left, double noise_sigma,
                            std::span<const int> bucket_edges, std::mt19937_64* rng) {
  SyntheticScene scene;
  scene.image = Tensor4(1, 1, h, w);
  scene.target_size = s;
  scene.target_center = {top + (s - 1) / 2.0, left + (s - 1) / 2.0};
  scene.size_class = size_class_of(s, bucket_edges);
  scene.noise_sigma = noise_sigma;

  for (int i = top; i < top + s; ++i)
    for (int j = left; j < left + s; ++j) scene.image.at(0, 0, i, j) = 1.0;

  if (noise_sigma > 0.0 && rng != nullptr) {
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (double& v : scene.image.data) v = std::clamp(v + noise(*rng), 0.0, 1.0);
  }
  return scene;
}

}  // namespace

int size_class_of(int s, std::span<const int> bucket_edges) {
  int cls = 0;
  for (int edge : bucket_edges)
    if (s >= edge) ++cls;
  return cls;
}

std::vector<SyntheticScene> generate_dataset(const DatasetConfig& cfg) {
  if (cfg.count < 0) throw std::invalid_argument("generate_dataset: negative count");
  if (cfg.s_min < 1 || cfg.s_max < cfg.s_min || cfg.s_max > std::min(cfg.h, cfg.w))
    throw std::invalid_argument("generate_dataset: infeasible size range");

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double log_lo = std::log(static_cast<double>(cfg.s_min));
  const double log_hi = std::log(static_cast<double>(cfg.s_max));

  std::vector<SyntheticScene> scenes;
  scenes.reserve(static_cast<std::size_t>(cfg.count));
  for (int i = 0; i < cfg.count; ++i) {
    int s = cfg.s_min;
    if (cfg.s_max > cfg.s_min) {
      const double draw = std::exp(log_lo + (log_hi - log_lo) * unit(rng));
      s = std::clamp(static_cast<int>(std::lround(draw)), cfg.s_min, cfg.s_max);
    }
    std::uniform_int_distribution<int> row_dist(0, cfg.h - s);
    std::uniform_int_distribution<int> col_dist(0, cfg.w - s);
    const int top = row_dist(rng);
    const int left = col_dist(rng);
    scenes.push_back(
        render_scene(cfg.h, cfg.w, s, top, left, cfg.noise_sigma, cfg.bucket_edges, &rng));
  }
  return scenes;
}

SyntheticScene make_centered_scene(int h, int w, int s, std::span<const int> bucket_edges) {
  if (s < 1 || s > std::min(h, w))
    throw std::invalid_argument("make_centered_scene: size does not fit");
  return render_scene(h, w, s, (h - s) / 2, (w - s) / 2, 0.0, bucket_edges, nullptr);
}

double log_uniform_bucket_probability(int s_min, int s_max, int lo, int hi) {
  if (s_min == s_max) return lo <= s_min && s_min < hi ? 1.0 : 0.0;
  // round(e^U) in [lo, hi) iff e^U in [lo - 0.5, hi - 0.5), intersected with
  // the draw's support [s_min, s_max].
  const double support_lo = static_cast<double>(s_min);
  const double support_hi = static_cast<double>(s_max);
  const double a = std::clamp(lo - 0.5, support_lo, support_hi);
  const double b = std::clamp(hi - 0.5, support_lo, support_hi);
  if (b <= a) return 0.0;
  return (std::log(b) - std::log(a)) / (std::log(support_hi) - std::log(support_lo));
}

}  // namespace drpn::toy
