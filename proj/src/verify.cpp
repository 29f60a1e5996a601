#include "drpn/verify.hpp"

#include <cmath>
#include <limits>
#include <cstdio>
#include <random>

#include "drpn/layer.hpp"
#include "drpn/layer_graph.hpp"
#include "drpn/ops.hpp"

namespace drpn::verify {

namespace {

Tensor4 random_tensor(int n, int c, int h, int w, std::mt19937_64& rng) {
  Tensor4 t(n, c, h, w);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (double& v : t.data) v = dist(rng);
  return t;
}

Kernel4 random_kernel(int co, int ci, int kh, int kw, std::mt19937_64& rng) {
  Kernel4 k(co, ci, kh, kw);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (double& v : k.data) v = dist(rng);
  return k;
}

double max_abs(const Tensor4& t) {
  double m = 0.0;
  for (double v : t.data) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const Tensor4& a, const Tensor4& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

std::string format(const char* fmt, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, fmt, a, b);
  return buf;
}

}  // namespace

CheckResult check_fold_equivalence(std::uint64_t seed, int trials, double tol) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> chan(1, 8);
  std::uniform_int_distribution<int> extent(4, 16);

  double worst_ratio = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const int c_in = chan(rng);
    // Exercise both layer flavors: even trials keep the shortcut, odd drop it.
    int c_out = trial % 2 == 0 ? c_in : chan(rng);
    if (trial % 2 != 0 && c_out == c_in) c_out = c_in % 8 + 1;
    const int h = extent(rng);
    const int w = extent(rng);

    const DrpnLayer layer = DrpnLayer::random(c_in, c_out, rng());
    const Tensor4 x = random_tensor(1 + trial % 2, c_in, h, w, rng);

    const Tensor4 multi = forward_train(layer, x);
    const Tensor4 folded = forward_inference(layer, x);
    const double bound = tol * (1.0 + max_abs(multi));
    worst_ratio = std::max(worst_ratio, max_abs_diff(multi, folded) / bound);
  }

  CheckResult r;
  r.name = "fold-equivalence";
  r.passed = worst_ratio <= 1.0;
  r.detail = format("worst deviation at %.3g of the tol*(1+max|out|) bound over trials"
                    " (tol %.1g)",
                    worst_ratio, tol);
  return r;
}

std::vector<CheckResult> check_special_cases(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int c = 3;
  const int h = 7;
  const int w = 6;
  const Kernel4 k3x3 = random_kernel(c, c, 3, 3, rng);
  const Kernel4 k1x3 = random_kernel(c, c, 1, 3, rng);
  const Kernel4 k3x1 = random_kernel(c, c, 3, 1, rng);
  const Kernel4 k1x1 = random_kernel(c, c, 1, 1, rng);
  const Tensor4 x = random_tensor(1, c, h, w, rng);

  auto layer = [&](SpecialCase sc) {
    return make_special_case(sc, k3x3, k1x3, k3x1, k1x1);
  };

  std::vector<CheckResult> results;
  {
    const Tensor4 got = forward_train(layer(SpecialCase::vgg), x);
    const Tensor4 want = conv2d(x, k3x3, 1, 1);
    const double dev = max_abs_diff(got, want);
    results.push_back({"special-case-vgg", dev <= 1e-12,
                       format("|forward - conv3x3| = %.3g (tol %.1g)", dev, 1e-12)});
  }
  {
    const Tensor4 got = forward_train(layer(SpecialCase::resnet), x);
    Tensor4 want = conv2d(x, k3x3, 1, 1);
    for (std::size_t i = 0; i < want.size(); ++i)
      want.data[i] = 0.5 * want.data[i] + 0.5 * x.data[i];
    const double dev = max_abs_diff(got, want);
    results.push_back({"special-case-resnet", dev <= 1e-12,
                       format("|forward - (conv+x)/2| = %.3g (tol %.1g)", dev, 1e-12)});
  }
  {
    const Tensor4 got = forward_train(layer(SpecialCase::repvgg), x);
    const Tensor4 c3 = conv2d(x, k3x3, 1, 1);
    const Tensor4 c1 = conv2d(x, k1x1, 0, 0);
    Tensor4 want(1, c, h, w);
    for (std::size_t i = 0; i < want.size(); ++i)
      want.data[i] = (c3.data[i] + c1.data[i] + x.data[i]) / 3.0;
    const double dev = max_abs_diff(got, want);
    results.push_back({"special-case-repvgg", dev <= 1e-12,
                       format("|forward - (conv3x3+conv1x1+x)/3| = %.3g (tol %.1g)", dev,
                              1e-12)});
  }
  {
    const Tensor4 got = forward_train(layer(SpecialCase::lightweight), x);
    const double dev = max_abs_diff(got, x);
    results.push_back({"special-case-lightweight", dev == 0.0,
                       format("|forward - x| = %.3g (tol %.1g, exact)", dev, 0.0)});
  }
  return results;
}

CheckResult check_gradients(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CheckResult r;
  r.name = "gradient-vs-finite-difference";

  // Central differences at h = 1e-6 resolve a gradient coordinate only down
  // to roughly eps*|loss|/(2h) ~ 1e-10; an instance where some coordinate
  // lands accidentally near zero says nothing about correctness. Redraw
  // (deterministically) until every coordinate sits above that floor.
  for (int attempt = 0; attempt < 64; ++attempt) {
    // Unit-scale generators keep the attention-path gradients healthy.
    const DrpnLayer layer = DrpnLayer::make(
        random_kernel(5, 2, 1, 1, rng), random_kernel(2, 2, 1, 1, rng),
        random_kernel(2, 2, 3, 3, rng), random_kernel(2, 2, 1, 3, rng),
        random_kernel(2, 2, 3, 1, rng), random_kernel(2, 2, 1, 1, rng));
    const Tensor4 x = random_tensor(1, 2, 6, 6, rng);
    const Tensor4 target = random_tensor(1, 2, 6, 6, rng);

    ad::DrpnLayerVars vars = ad::DrpnLayerVars::from_layer("layer", layer);
    const std::vector<ad::Parameter*> params = vars.params();

    {
      ad::Tape t;
      const int out = ad::build_forward_train(t, vars, t.leaf(ad::Value(x)));
      t.backward(t.mse_loss(out, t.leaf(ad::Value(target))));
    }
    double min_grad = std::numeric_limits<double>::infinity();
    for (const ad::Parameter* p : params)
      for (double g : ad::flat(p->grad)) min_grad = std::min(min_grad, std::abs(g));
    if (min_grad < 3e-4) continue;

    auto loss_value = [&]() {
      ad::Tape t;
      const int out = ad::build_forward_train(t, vars, t.leaf(ad::Value(x)));
      const int loss = t.mse_loss(out, t.leaf(ad::Value(target)));
      return ad::flat(t.value(loss))[0];
    };
    const double max_rel = ad::finite_diff_check(loss_value, params, 1e-6);
    r.passed = max_rel <= 1e-6;
    r.detail = format("max relative error %.3g (tol %.1g)", max_rel, 1e-6);
    return r;
  }

  r.passed = false;
  r.detail = "no well-conditioned instance found";
  return r;
}

std::vector<CheckResult> run_all(std::uint64_t seed, double tol) {
  std::vector<CheckResult> results;
  results.push_back(check_fold_equivalence(seed, 100, tol));
  for (auto& r : check_special_cases(seed)) results.push_back(std::move(r));
  results.push_back(check_gradients(seed));
  return results;
}

}  // namespace drpn::verify
