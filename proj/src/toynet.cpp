#include "drpn/toynet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "drpn/layer_graph.hpp"
#include "drpn/ops.hpp"

namespace drpn::toy {

namespace {

Tensor4 relu(Tensor4 x) {
  for (double& v : x.data) v = std::max(v, 0.0);
  return x;
}

Tensor4 avg_pool_2x2(const Tensor4& x) {
  Tensor4 out(x.n, x.c, x.h / 2, x.w / 2);
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < x.c; ++c)
      for (int i = 0; i < out.h; ++i)
        for (int j = 0; j < out.w; ++j)
          out.at(n, c, i, j) =
              0.25 * (x.at(n, c, 2 * i, 2 * j) + x.at(n, c, 2 * i, 2 * j + 1) +
                      x.at(n, c, 2 * i + 1, 2 * j) + x.at(n, c, 2 * i + 1, 2 * j + 1));
  return out;
}

Matrix global_avg_pool(const Tensor4& x) {
  Matrix out(x.n, x.c);
  const double inv = 1.0 / (static_cast<double>(x.h) * x.w);
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < x.c; ++c) {
      double acc = 0.0;
      for (int i = 0; i < x.h; ++i)
        for (int j = 0; j < x.w; ++j) acc += x.at(n, c, i, j);
      out.at(n, c) = acc * inv;
    }
  return out;
}

// Forward up to the input of the second dynamic layer.
Tensor4 backbone_front(const ToyNet& net, const Tensor4& sample) {
  return avg_pool_2x2(relu(forward_inference(net.drpn1, sample)));
}

struct NetVars {
  ad::DrpnLayerVars drpn1;
  ad::DrpnLayerVars drpn2;
  ad::Parameter head_w;
  ad::Parameter head_b;

  explicit NetVars(const ToyNet& net)
      : drpn1(ad::DrpnLayerVars::from_layer("drpn1", net.drpn1)),
        drpn2(ad::DrpnLayerVars::from_layer("drpn2", net.drpn2)),
        head_w("head.w", net.head_w),
        head_b("head.b", net.head_b) {}

  std::vector<ad::Parameter*> params() {
    std::vector<ad::Parameter*> out = drpn1.params();
    for (ad::Parameter* p : drpn2.params()) out.push_back(p);
    out.push_back(&head_w);
    out.push_back(&head_b);
    return out;
  }

  void write_back(ToyNet& net) {
    net.drpn1 = drpn1.to_layer();
    net.drpn2 = drpn2.to_layer();
    net.head_w = std::get<Matrix>(head_w.value);
    net.head_b = std::get<Matrix>(head_b.value);
  }

  // Returns the scalar cross-entropy node for one labelled sample.
  int build_loss(ad::Tape& t, const Tensor4& image, int label) {
    const int x = t.leaf(ad::Value(image));
    int a = ad::build_forward_train(t, drpn1, x);
    a = t.avg_pool_2x2(t.relu(a));
    a = ad::build_forward_train(t, drpn2, a);
    const int feat = t.global_avg_pool(t.relu(a));
    const int logits = t.add_row_bias(t.matmul(feat, t.leaf(head_w)), t.leaf(head_b));
    return t.softmax_cross_entropy(logits, {label});
  }
};

}  // namespace

ToyNet ToyNet::init(int n_classes, std::uint64_t seed) {
  if (n_classes < 2) throw std::invalid_argument("ToyNet: need at least 2 classes");
  std::mt19937_64 rng(seed);
  ToyNet net;
  net.n_classes = n_classes;
  net.drpn1 = DrpnLayer::random(1, 8, rng());
  net.drpn2 = DrpnLayer::random(8, 8, rng());
  net.head_w = Matrix(8, n_classes);
  net.head_b = Matrix(1, n_classes);
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / 8.0));
  for (double& v : net.head_w.data) v = dist(rng);
  return net;
}

Matrix ToyNet::logits(const Tensor4& sample) const {
  Tensor4 a = backbone_front(*this, sample);
  a = relu(forward_inference(drpn2, a));
  const Matrix feat = global_avg_pool(a);
  Matrix out = matmul(feat, head_w);
  for (int c = 0; c < out.cols; ++c) out.at(0, c) += head_b.at(0, c);
  return out;
}

int ToyNet::predict(const Tensor4& sample) const {
  const Matrix z = logits(sample);
  int best = 0;
  for (int c = 1; c < z.cols; ++c)
    if (z.at(0, c) > z.at(0, best)) best = c;
  return best;
}

double TrainConfig::lr_at_epoch(int epoch_1based) const {
  const int first_decay = 2 * epochs / 3;
  const int second_decay = 11 * epochs / 12;
  double out = lr;
  if (epoch_1based > first_decay) out *= 0.1;
  if (epoch_1based > second_decay) out *= 0.1;
  return out;
}

TrainResult train(ToyNet& net, const std::vector<SyntheticScene>& data,
                  const TrainConfig& cfg) {
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  if (cfg.batch_size < 1 || cfg.epochs < 0 || cfg.lr < 0.0)
    throw std::invalid_argument("train: bad config");

  NetVars vars(net);
  const std::vector<ad::Parameter*> params = vars.params();
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = cfg.lr_at_epoch(epoch);
    double epoch_loss = 0.0;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        const SyntheticScene& scene = data[order[i]];
        ad::Tape tape;
        const int loss = vars.build_loss(tape, scene.image, scene.size_class);
        const double sample_loss = ad::flat(tape.value(loss))[0];
        if (!std::isfinite(sample_loss))
          throw std::runtime_error("train: loss diverged at epoch " +
                                   std::to_string(epoch));
        epoch_loss += sample_loss;
        tape.backward(tape.scale(loss, inv_batch));
      }
      for (ad::Parameter* p : params) {
        auto v = ad::flat(p->value);
        auto g = ad::flat(p->grad);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
        p->zero_grad();
      }
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(data.size()));
  }

  vars.write_back(net);

  std::size_t correct = 0;
  for (const SyntheticScene& scene : data)
    if (net.predict(scene.image) == scene.size_class) ++correct;
  result.train_accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return result;
}

DatasetConfig default_task(int count, std::uint64_t seed) {
  DatasetConfig cfg;
  cfg.count = count;
  cfg.h = 32;
  cfg.w = 32;
  cfg.s_min = 3;
  cfg.s_max = 28;
  cfg.bucket_edges = {8, 20};
  cfg.noise_sigma = 0.02;
  cfg.seed = seed;
  return cfg;
}

std::vector<ProbeRow> probe_branch_weights(const ToyNet& net,
                                           const std::vector<SyntheticScene>& frames) {
  if (frames.empty()) throw std::invalid_argument("probe_branch_weights: empty sequence");
  for (std::size_t i = 1; i < frames.size(); ++i)
    if (frames[i].target_size < frames[i - 1].target_size)
      throw std::invalid_argument("probe_branch_weights: frames must be sorted by size");

  std::vector<ProbeRow> rows;
  rows.reserve(frames.size());
  for (const SyntheticScene& frame : frames) {
    const Tensor4 a = backbone_front(net, frame.image);
    const BranchWeights w = generate_weights(net.drpn2, a);
    ProbeRow row;
    row.target_size = frame.target_size;
    for (int b = 0; b < w.branches(); ++b) {
      double acc = 0.0;
      for (int c = 0; c < w.channels(); ++c) acc += w.values.at(b, c);
      row.mean_weight[static_cast<std::size_t>(b)] = acc / w.channels();
    }
    rows.push_back(row);
  }
  return rows;
}

void write_probe_csv(std::span<const ProbeRow> rows, std::ostream& out) {
  out << "s,w_3x3,w_1x3,w_3x1,w_1x1,w_shortcut\n";
  char buf[64];
  for (const ProbeRow& r : rows) {
    out << r.target_size;
    for (double w : r.mean_weight) {
      std::snprintf(buf, sizeof buf, ",%.9g", w);
      out << buf;
    }
    out << "\n";
  }
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("spearman: need two same-length series");

  auto ranks = [](std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };

  const std::vector<double> ra = ranks(a);
  const std::vector<double> rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

}  // namespace drpn::toy
