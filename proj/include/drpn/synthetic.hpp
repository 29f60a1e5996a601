#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "drpn/tensor.hpp"

namespace drpn::toy {

// One grayscale frame: a bright square of side `target_size` on a dark noisy
// background, fully contained in the image.
struct SyntheticScene {
  Tensor4 image;  // 1 x 1 x h x w, values in [0, 1]
  int target_size = 0;
  std::pair<double, double> target_center;  // (row, col)
  int size_class = 0;
  double noise_sigma = 0.0;
};

struct DatasetConfig {
  int count = 0;
  int h = 0;
  int w = 0;
  int s_min = 0;
  int s_max = 0;
  std::vector<int> bucket_edges;  // class = number of edges <= target_size
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

int size_class_of(int s, std::span<const int> bucket_edges);

// Sizes are drawn log-uniformly over [s_min, s_max] (continuous draw, rounded
// to the nearest integer); positions uniform subject to containment.
// Deterministic under the seed.
std::vector<SyntheticScene> generate_dataset(const DatasetConfig& cfg);

// Noise-free frame with a centered square of side s.
SyntheticScene make_centered_scene(int h, int w, int s, std::span<const int> bucket_edges);

// Probability that a rounded log-uniform draw from [s_min, s_max] lands in
// the integer range [lo, hi); the closed form behind the sampler.
double log_uniform_bucket_probability(int s_min, int s_max, int lo, int hi);

}  // namespace drpn::toy
