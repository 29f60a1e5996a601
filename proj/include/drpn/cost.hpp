#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "drpn/layer.hpp"

namespace drpn::bench {

enum class Mode { train_multibranch, folded_inference, unfused_baseline };

const char* mode_name(Mode m);

// Analytic MAC model, mirroring exactly what the instrumented kernels count:
// convolutions, the attention matmul, branch-output weighting, and the
// kernel fold (reported separately).
struct MacBreakdown {
  std::uint64_t conv = 0;
  std::uint64_t attention_matmul = 0;
  std::uint64_t weighting = 0;
  std::uint64_t fold = 0;

  std::uint64_t total() const { return conv + attention_matmul + weighting + fold; }
};

struct CostReport {
  Mode mode;
  int n = 0, c_in = 0, c_out = 0, h = 0, w = 0;
  std::uint64_t conv_calls = 0;
  MacBreakdown macs;
  std::uint64_t wall_ns_median = 0;
};

// conv2d invocations per sample: folded 3, multi-branch 2 + B, convolve-first
// baseline B + 2.
int count_convolutions(const DrpnLayer& layer, Mode mode);

// Exact MAC count for a batch of n same-padded forwards of the given spatial
// extent.
MacBreakdown count_macs(const DrpnLayer& layer, int n, int h, int w, Mode mode);

// Executes one forward in the given mode (used for instrumentation and timing).
Tensor4 run_mode(const DrpnLayer& layer, const Tensor4& x, Mode mode);

// Median wall time per mode over `reps` runs after 2 warm-ups, single
// threaded, identical input across modes. Requires reps >= 5 and x.n >= 1.
std::vector<CostReport> time_modes(const DrpnLayer& layer, const Tensor4& x, int reps);

void write_cost_csv(const std::vector<CostReport>& reports, std::ostream& out);
std::string render_cost_table(const std::vector<CostReport>& reports);

}  // namespace drpn::bench
