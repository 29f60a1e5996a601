// Compares the parallel kernels against the serial reference implementations
// at a few representative shapes. Build target: drpn-kernel-bench.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "drpn/ops.hpp"
#include "drpn/reference.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double median_ms(const std::vector<double>& samples) {
  std::vector<double> s = samples;
  std::sort(s.begin(), s.end());
  return s[s.size() / 2];
}

template <typename F>
double time_ms(F&& f, int reps) {
  f();  // warm-up
  std::vector<double> samples;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = Clock::now();
    f();
    const auto t1 = Clock::now();
    samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return median_ms(samples);
}

double max_abs_diff(const drpn::Tensor4& a, const drpn::Tensor4& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

void bench_conv(int c, int hw, int reps) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  drpn::Tensor4 x(1, c, hw, hw);
  drpn::Kernel4 k(c, c, 3, 3);
  for (double& v : x.data) v = dist(rng);
  for (double& v : k.data) v = dist(rng);

  const drpn::Tensor4 serial = drpn::reference::conv2d(x, k, 1, 1);
  const drpn::Tensor4 parallel = drpn::conv2d(x, k, 1, 1);
  const double serial_ms = time_ms([&] { drpn::reference::conv2d(x, k, 1, 1); }, reps);
  const double parallel_ms = time_ms([&] { drpn::conv2d(x, k, 1, 1); }, reps);

  std::printf("conv2d   c=%-3d hw=%-4d  serial %8.3f ms  parallel %8.3f ms  "
              "speedup %5.2fx  max|diff| %.2e\n",
              c, hw, serial_ms, parallel_ms, serial_ms / parallel_ms,
              max_abs_diff(serial, parallel));
}

void bench_matmul(int n, int reps) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  drpn::Matrix a(n, n), b(n, n);
  for (double& v : a.data) v = dist(rng);
  for (double& v : b.data) v = dist(rng);

  const double serial_ms = time_ms([&] { drpn::reference::matmul(a, b); }, reps);
  const double parallel_ms = time_ms([&] { drpn::matmul(a, b); }, reps);
  std::printf("matmul   n=%-4d           serial %8.3f ms  parallel %8.3f ms  speedup %5.2fx\n",
              n, serial_ms, parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (built without OpenMP)\n");
#endif

  const int reps = 7;
  bench_conv(8, 64, reps);
  bench_conv(16, 128, reps);
  bench_conv(32, 128, reps);
  bench_matmul(256, reps);
  bench_matmul(512, reps);
  return 0;
}
