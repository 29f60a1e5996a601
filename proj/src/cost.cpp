#include "drpn/cost.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace drpn::bench {

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::train_multibranch: return "train_multibranch";
    case Mode::folded_inference: return "folded_inference";
    case Mode::unfused_baseline: return "unfused_baseline";
  }
  return "?";
}

int count_convolutions(const DrpnLayer& layer, Mode mode) {
  const int b = layer.branch_count();
  switch (mode) {
    case Mode::folded_inference: return 3;       // f1, f2, folded kernel
    case Mode::train_multibranch: return 2 + b;  // weights first, then branches
    case Mode::unfused_baseline: return b + 2;   // branches first, then weights
  }
  return 0;
}

MacBreakdown count_macs(const DrpnLayer& layer, int n, int h, int w, Mode mode) {
  if (n < 1 || h < 1 || w < 1) throw std::invalid_argument("count_macs: bad shape");
  const auto spatial = static_cast<std::uint64_t>(h) * w;
  const auto per_pixel_pair =
      static_cast<std::uint64_t>(layer.c_out) * layer.c_in;  // 1x1 conv cost
  const int b = layer.branch_count();

  auto conv = [&](int co, int ci, int kh, int kw) {
    return spatial * static_cast<std::uint64_t>(co) * ci * kh * kw;
  };

  MacBreakdown m;
  // Weight generation: two pointwise convolutions plus the query/key product.
  m.conv = conv(b, layer.c_in, 1, 1) + conv(layer.c_out, layer.c_in, 1, 1);
  m.attention_matmul = static_cast<std::uint64_t>(b) * layer.c_out * spatial;

  const std::uint64_t branch_convs =
      conv(layer.c_out, layer.c_in, 3, 3) + conv(layer.c_out, layer.c_in, 1, 3) +
      conv(layer.c_out, layer.c_in, 3, 1) + conv(layer.c_out, layer.c_in, 1, 1) +
      (layer.has_shortcut ? spatial * per_pixel_pair : 0);  // pointwise identity

  switch (mode) {
    case Mode::train_multibranch:
    case Mode::unfused_baseline:
      m.conv += branch_convs;
      m.weighting = static_cast<std::uint64_t>(b) * layer.c_out * spatial;
      break;
    case Mode::folded_inference:
      m.fold = static_cast<std::uint64_t>(b) * layer.c_out * layer.c_in * 9;
      m.conv += conv(layer.c_out, layer.c_in, 3, 3);
      break;
  }

  m.conv *= n;
  m.attention_matmul *= n;
  m.weighting *= n;
  m.fold *= n;
  return m;
}

Tensor4 run_mode(const DrpnLayer& layer, const Tensor4& x, Mode mode) {
  switch (mode) {
    case Mode::train_multibranch: return forward_train(layer, x);
    case Mode::folded_inference: return forward_inference(layer, x);
    case Mode::unfused_baseline: return forward_unfused(layer, x);
  }
  throw std::invalid_argument("run_mode: bad mode");
}

std::vector<CostReport> time_modes(const DrpnLayer& layer, const Tensor4& x, int reps) {
  if (reps < 5) throw std::invalid_argument("time_modes: reps must be >= 5");
  if (x.n < 1) throw std::invalid_argument("time_modes: empty batch");

#ifdef _OPENMP
  const int saved_threads = omp_get_max_threads();
  omp_set_num_threads(1);  // timing is single-threaded
#endif

  std::vector<CostReport> reports;
  for (Mode mode : {Mode::train_multibranch, Mode::folded_inference, Mode::unfused_baseline}) {
    CostReport rep;
    rep.mode = mode;
    rep.n = x.n;
    rep.c_in = layer.c_in;
    rep.c_out = layer.c_out;
    rep.h = x.h;
    rep.w = x.w;
    rep.conv_calls = static_cast<std::uint64_t>(count_convolutions(layer, mode)) * x.n;
    rep.macs = count_macs(layer, x.n, x.h, x.w, mode);

    for (int i = 0; i < 2; ++i) run_mode(layer, x, mode);  // warm-up
    std::vector<std::uint64_t> times;
    times.reserve(static_cast<std::size_t>(reps));
    for (int i = 0; i < reps; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      run_mode(layer, x, mode);
      const auto t1 = std::chrono::steady_clock::now();
      times.push_back(static_cast<std::uint64_t>(
          std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count()));
    }
    std::sort(times.begin(), times.end());
    rep.wall_ns_median = times[times.size() / 2];
    reports.push_back(rep);
  }

#ifdef _OPENMP
  omp_set_num_threads(saved_threads);
#endif
  return reports;
}

void write_cost_csv(const std::vector<CostReport>& reports, std::ostream& out) {
  out << "mode,n,c_in,c_out,h,w,conv_calls,macs_conv,macs_attention,macs_weighting,"
         "macs_fold,macs_total,wall_ns_median\n";
  for (const CostReport& r : reports) {
    out << mode_name(r.mode) << ',' << r.n << ',' << r.c_in << ',' << r.c_out << ','
        << r.h << ',' << r.w << ',' << r.conv_calls << ',' << r.macs.conv << ','
        << r.macs.attention_matmul << ',' << r.macs.weighting << ',' << r.macs.fold
        << ',' << r.macs.total() << ',' << r.wall_ns_median << "\n";
  }
}

std::string render_cost_table(const std::vector<CostReport>& reports) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-18s %10s %14s %12s %12s\n", "mode", "conv_calls",
                "macs_total", "macs_fold", "wall_ms");
  out += line;
  for (const CostReport& r : reports) {
    std::snprintf(line, sizeof line, "%-18s %10llu %14llu %12llu %12.3f\n",
                  mode_name(r.mode), static_cast<unsigned long long>(r.conv_calls),
                  static_cast<unsigned long long>(r.macs.total()),
                  static_cast<unsigned long long>(r.macs.fold),
                  static_cast<double>(r.wall_ns_median) / 1e6);
    out += line;
  }
  return out;
}

}  // namespace drpn::bench
