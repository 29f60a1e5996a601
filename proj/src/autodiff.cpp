#include "drpn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "drpn/ops.hpp"

namespace drpn::ad {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void accumulate(Value& dst, const Value& src) {
  auto d = flat(dst);
  auto s = flat(src);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

}  // namespace

std::size_t numel(const Value& v) {
  return std::visit([](const auto& t) { return t.data.size(); }, v);
}

std::span<double> flat(Value& v) {
  return std::visit([](auto& t) { return std::span<double>(t.data); }, v);
}

std::span<const double> flat(const Value& v) {
  return std::visit([](const auto& t) { return std::span<const double>(t.data); }, v);
}

Value zeros_like(const Value& v) {
  Value z = v;
  for (double& d : flat(z)) d = 0.0;
  return z;
}

bool same_shape(const Value& a, const Value& b) {
  if (a.index() != b.index()) return false;
  return std::visit(
      [&](const auto& ta) {
        using T = std::decay_t<decltype(ta)>;
        return ta.same_shape(std::get<T>(b));
      },
      a);
}

Parameter::Parameter(std::string name_, Value v)
    : name(std::move(name_)), value(std::move(v)), grad(zeros_like(value)) {}

void Parameter::zero_grad() {
  for (double& d : flat(grad)) d = 0.0;
}

int Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

void Tape::check(int node) const {
  require(node >= 0 && node < static_cast<int>(nodes_.size()), "Tape: dangling node ref");
}

const Value& Tape::value(int node) const {
  check(node);
  return nodes_[static_cast<std::size_t>(node)].value;
}

const Value& Tape::grad(int node) const {
  check(node);
  return nodes_[static_cast<std::size_t>(node)].grad;
}

int Tape::leaf(Value v) {
  Node n;
  n.op = Op::kLeaf;
  n.grad = zeros_like(v);
  n.value = std::move(v);
  return push(std::move(n));
}

int Tape::leaf(Parameter& p) {
  Node n;
  n.op = Op::kLeaf;
  n.value = p.value;
  n.grad = zeros_like(p.value);
  n.param = &p;
  return push(std::move(n));
}

int Tape::conv2d(int x, int k, int pad_h, int pad_w) {
  check(x);
  check(k);
  Node n;
  n.op = Op::kConv2d;
  n.in = {x, k};
  n.pad_h = pad_h;
  n.pad_w = pad_w;
  n.value = drpn::conv2d(std::get<Tensor4>(value(x)), std::get<Kernel4>(value(k)),
                         pad_h, pad_w);
  n.grad = zeros_like(n.value);
  return push(std::move(n));
}

int Tape::matmul(int a, int b) {
  check(a);
  check(b);
  Node n;
  n.op = Op::kMatmul;
  n.in = {a, b};
  n.value = drpn::matmul(std::get<Matrix>(value(a)), std::get<Matrix>(value(b)));
  n.grad = zeros_like(n.value);
  return push(std::move(n));
}

int Tape::transpose(int a) {
  check(a);
  Node n;
  n.op = Op::kTranspose;
  n.in = {a, -1};
  n.value = drpn::transpose(std::get<Matrix>(value(a)));
  n.grad = zeros_like(n.value);
  return push(std::move(n));
}

int Tape::flatten_spatial(int a) {
  check(a);
  Node n;
  n.op = Op::kFlattenSpatial;
  n.in = {a, -1};
  n.value = drpn::flatten_spatial(std::get<Tensor4>(value(a)));
  n.grad = zeros_like(n.value);
  return push(std::move(n));
}

int Tape::scale(int a, double s) {
  check(a);
  Node n;
  n.op = Op::kScale;
  n.in = {a, -1};
  n.scalar = s;
  n.value = value(a);
  for (double& d : flat(n.value)) d *= s;
  n.grad = zeros_like(n.value);
  return push(std::move(n));
}

int Tape::softmax_over_branches(int a) {
  check(a);
  Node n;
  n.op = Op::kSoftmaxBranches;
  n.in = {a, -1};
  n.value = drpn::softmax_over_branches(std::get<Matrix>(value(a)));
  n.grad = zeros_like(n.value);
  return push(std::move(n));
}

int Tape::channel_scale(int x, int w) {
  check(x);
  check(w);
  const auto& wm = std::get<Matrix>(value(w));
  require(wm.rows == 1, "Tape::channel_scale: weight node must be 1 x c");
  Node n;
  n.op = Op::kChannelScale;
  n.in = {x, w};
  n.value = drpn::channel_scale(std::get<Tensor4>(value(x)), wm.data);
  n.grad = zeros_like(n.value);
  return push(std::move(n));
}

int Tape::row(int m, int r) {
  check(m);
  const auto& mm = std::get<Matrix>(value(m));
  require(r >= 0 && r < mm.rows, "Tape::row: index out of range");
  Node n;
  n.op = Op::kRow;
  n.in = {m, -1};
  n.scalar = r;
  Matrix out(1, mm.cols);
  for (int c = 0; c < mm.cols; ++c) out.at(0, c) = mm.at(r, c);
  n.value = std::move(out);
  n.grad = zeros_like(n.value);
  return push(std::move(n));
}

int Tape::add(int a, int b) {
  check(a);
  check(b);
  require(same_shape(value(a), value(b)), "Tape::add: shape mismatch");
  Node n;
  n.op = Op::kAdd;
  n.in = {a, b};
  n.value = value(a);
  accumulate(n.value, value(b));
  n.grad = zeros_like(n.value);
  return push(std::move(n));
}

int Tape::mul(int a, int b) {
  check(a);
  check(b);
  require(same_shape(value(a), value(b)), "Tape::mul: shape mismatch");
  Node n;
  n.op = Op::kMul;
  n.in = {a, b};
  n.value = value(a);
  {
    auto d = flat(n.value);
    auto s = flat(value(b));
    for (std::size_t i = 0; i < d.size(); ++i) d[i] *= s[i];
  }
  n.grad = zeros_like(n.value);
  return push(std::move(n));
}

int Tape::relu(int a) {
  check(a);
  Node n;
  n.op = Op::kRelu;
  n.in = {a, -1};
  n.value = value(a);
  for (double& d : flat(n.value)) d = std::max(d, 0.0);
  n.grad = zeros_like(n.value);
  return push(std::move(n));
}

int Tape::avg_pool_2x2(int a) {
  check(a);
  const auto& x = std::get<Tensor4>(value(a));
  require(x.h % 2 == 0 && x.w % 2 == 0, "Tape::avg_pool_2x2: extents must be even");
  Tensor4 out(x.n, x.c, x.h / 2, x.w / 2);
  for (int in = 0; in < x.n; ++in)
    for (int c = 0; c < x.c; ++c)
      for (int i = 0; i < out.h; ++i)
        for (int j = 0; j < out.w; ++j)
          out.at(in, c, i, j) = 0.25 * (x.at(in, c, 2 * i, 2 * j) +
                                        x.at(in, c, 2 * i, 2 * j + 1) +
                                        x.at(in, c, 2 * i + 1, 2 * j) +
                                        x.at(in, c, 2 * i + 1, 2 * j + 1));
  Node n;
  n.op = Op::kAvgPool2x2;
  n.in = {a, -1};
  n.value = std::move(out);
  n.grad = zeros_like(n.value);
  return push(std::move(n));
}

int Tape::global_avg_pool(int a) {
  check(a);
  const auto& x = std::get<Tensor4>(value(a));
  Matrix out(x.n, x.c);
  const double inv = 1.0 / (static_cast<double>(x.h) * x.w);
  for (int in = 0; in < x.n; ++in)
    for (int c = 0; c < x.c; ++c) {
      double acc = 0.0;
      for (int i = 0; i < x.h; ++i)
        for (int j = 0; j < x.w; ++j) acc += x.at(in, c, i, j);
      out.at(in, c) = acc * inv;
    }
  Node n;
  n.op = Op::kGlobalAvgPool;
  n.in = {a, -1};
  n.value = std::move(out);
  n.grad = zeros_like(n.value);
  return push(std::move(n));
}

int Tape::add_row_bias(int m, int bias) {
  check(m);
  check(bias);
  const auto& mm = std::get<Matrix>(value(m));
  const auto& bb = std::get<Matrix>(value(bias));
  require(bb.rows == 1 && bb.cols == mm.cols, "Tape::add_row_bias: bias must be 1 x cols");
  Matrix out = mm;
  for (int r = 0; r < mm.rows; ++r)
    for (int c = 0; c < mm.cols; ++c) out.at(r, c) += bb.at(0, c);
  Node n;
  n.op = Op::kAddRowBias;
  n.in = {m, bias};
  n.value = std::move(out);
  n.grad = zeros_like(n.value);
  return push(std::move(n));
}

int Tape::pad_kernel_to_3x3(int k) {
  check(k);
  Node n;
  n.op = Op::kPadKernel3x3;
  n.in = {k, -1};
  n.value = drpn::pad_kernel_to_3x3(std::get<Kernel4>(value(k)));
  n.grad = zeros_like(n.value);
  return push(std::move(n));
}

int Tape::kernel_channel_scale(int k, int w) {
  check(k);
  check(w);
  const auto& wm = std::get<Matrix>(value(w));
  require(wm.rows == 1, "Tape::kernel_channel_scale: weight node must be 1 x co");
  Node n;
  n.op = Op::kKernelChannelScale;
  n.in = {k, w};
  n.value = drpn::kernel_channel_scale(std::get<Kernel4>(value(k)), wm.data);
  n.grad = zeros_like(n.value);
  return push(std::move(n));
}

int Tape::mse_loss(int a, int b) {
  check(a);
  check(b);
  require(same_shape(value(a), value(b)), "Tape::mse_loss: shape mismatch");
  auto av = flat(value(a));
  auto bv = flat(value(b));
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - bv[i];
    acc += d * d;
  }
  Matrix out(1, 1);
  out.at(0, 0) = acc / static_cast<double>(av.size());
  Node n;
  n.op = Op::kMseLoss;
  n.in = {a, b};
  n.value = std::move(out);
  n.grad = zeros_like(n.value);
  return push(std::move(n));
}

int Tape::sum(int a) {
  check(a);
  double acc = 0.0;
  for (double d : flat(value(a))) acc += d;
  Matrix out(1, 1);
  out.at(0, 0) = acc;
  Node n;
  n.op = Op::kSum;
  n.in = {a, -1};
  n.value = std::move(out);
  n.grad = zeros_like(n.value);
  return push(std::move(n));
}

int Tape::softmax_cross_entropy(int logits, std::vector<int> targets) {
  check(logits);
  const auto& z = std::get<Matrix>(value(logits));
  require(static_cast<int>(targets.size()) == z.rows,
          "Tape::softmax_cross_entropy: one target per row");
  for (int t : targets)
    require(t >= 0 && t < z.cols, "Tape::softmax_cross_entropy: target out of range");

  double loss = 0.0;
  for (int r = 0; r < z.rows; ++r) {
    double mx = z.at(r, 0);
    for (int c = 1; c < z.cols; ++c) mx = std::max(mx, z.at(r, c));
    double lse = 0.0;
    for (int c = 0; c < z.cols; ++c) lse += std::exp(z.at(r, c) - mx);
    loss += std::log(lse) - (z.at(r, targets[static_cast<std::size_t>(r)]) - mx);
  }
  Matrix out(1, 1);
  out.at(0, 0) = loss / z.rows;
  Node n;
  n.op = Op::kSoftmaxXent;
  n.in = {logits, -1};
  n.targets = std::move(targets);
  n.value = std::move(out);
  n.grad = zeros_like(n.value);
  return push(std::move(n));
}

void Tape::backward(int loss_node) {
  check(loss_node);
  require(numel(nodes_[static_cast<std::size_t>(loss_node)].value) == 1,
          "Tape::backward: loss must be scalar");

  // Reachability from the loss; unreachable nodes keep zero gradients.
  std::vector<char> reachable(nodes_.size(), 0);
  std::vector<int> stack{loss_node};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    if (reachable[static_cast<std::size_t>(id)]) continue;
    reachable[static_cast<std::size_t>(id)] = 1;
    for (int in : nodes_[static_cast<std::size_t>(id)].in)
      if (in >= 0) stack.push_back(in);
  }

  for (auto& n : nodes_)
    for (double& d : flat(n.grad)) d = 0.0;
  flat(nodes_[static_cast<std::size_t>(loss_node)].grad)[0] = 1.0;

  for (int id = loss_node; id >= 0; --id) {
    if (!reachable[static_cast<std::size_t>(id)]) continue;
    Node& n = nodes_[static_cast<std::size_t>(id)];
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kConv2d: {
        const auto& gy = std::get<Tensor4>(n.grad);
        const auto& x = std::get<Tensor4>(in_val(n, 0));
        const auto& k = std::get<Kernel4>(in_val(n, 1));
        accumulate(nodes_[static_cast<std::size_t>(n.in[0])].grad,
                   conv2d_grad_input(gy, k, n.pad_h, n.pad_w, x.h, x.w));
        accumulate(nodes_[static_cast<std::size_t>(n.in[1])].grad,
                   conv2d_grad_kernel(gy, x, n.pad_h, n.pad_w, k.kh, k.kw));
        break;
      }
      case Op::kMatmul: {
        const auto& gy = std::get<Matrix>(n.grad);
        const auto& a = std::get<Matrix>(in_val(n, 0));
        const auto& b = std::get<Matrix>(in_val(n, 1));
        accumulate(nodes_[static_cast<std::size_t>(n.in[0])].grad,
                   drpn::matmul(gy, drpn::transpose(b)));
        accumulate(nodes_[static_cast<std::size_t>(n.in[1])].grad,
                   drpn::matmul(drpn::transpose(a), gy));
        break;
      }
      case Op::kTranspose: {
        accumulate(nodes_[static_cast<std::size_t>(n.in[0])].grad,
                   drpn::transpose(std::get<Matrix>(n.grad)));
        break;
      }
      case Op::kFlattenSpatial: {
        const auto& gy = std::get<Matrix>(n.grad);
        const auto& x = std::get<Tensor4>(in_val(n, 0));
        Tensor4 gx(1, x.c, x.h, x.w);
        for (int c = 0; c < x.c; ++c)
          for (int i = 0; i < x.h; ++i)
            for (int j = 0; j < x.w; ++j) gx.at(0, c, i, j) = gy.at(i * x.w + j, c);
        accumulate(nodes_[static_cast<std::size_t>(n.in[0])].grad, Value(std::move(gx)));
        break;
      }
      case Op::kScale: {
        Value g = n.grad;
        for (double& d : flat(g)) d *= n.scalar;
        accumulate(nodes_[static_cast<std::size_t>(n.in[0])].grad, g);
        break;
      }
      case Op::kSoftmaxBranches: {
        const auto& y = std::get<Matrix>(n.value);
        const auto& gy = std::get<Matrix>(n.grad);
        Matrix gin(y.rows, y.cols);
        for (int c = 0; c < y.cols; ++c) {
          double dot = 0.0;
          for (int b = 0; b < y.rows; ++b) dot += gy.at(b, c) * y.at(b, c);
          for (int b = 0; b < y.rows; ++b)
            gin.at(b, c) = y.at(b, c) * (gy.at(b, c) - dot);
        }
        accumulate(nodes_[static_cast<std::size_t>(n.in[0])].grad, Value(std::move(gin)));
        break;
      }
      case Op::kChannelScale: {
        const auto& gy = std::get<Tensor4>(n.grad);
        const auto& x = std::get<Tensor4>(in_val(n, 0));
        const auto& w = std::get<Matrix>(in_val(n, 1));
        Tensor4 gx(x.n, x.c, x.h, x.w);
        Matrix gw(1, w.cols);
        for (int in = 0; in < x.n; ++in)
          for (int c = 0; c < x.c; ++c) {
            double acc = 0.0;
            for (int i = 0; i < x.h; ++i)
              for (int j = 0; j < x.w; ++j) {
                gx.at(in, c, i, j) = w.at(0, c) * gy.at(in, c, i, j);
                acc += gy.at(in, c, i, j) * x.at(in, c, i, j);
              }
            gw.at(0, c) += acc;
          }
        accumulate(nodes_[static_cast<std::size_t>(n.in[0])].grad, Value(std::move(gx)));
        accumulate(nodes_[static_cast<std::size_t>(n.in[1])].grad, Value(std::move(gw)));
        break;
      }
      case Op::kRow: {
        const auto& gy = std::get<Matrix>(n.grad);
        const auto& m = std::get<Matrix>(in_val(n, 0));
        Matrix gm(m.rows, m.cols);
        const int r = static_cast<int>(n.scalar);
        for (int c = 0; c < m.cols; ++c) gm.at(r, c) = gy.at(0, c);
        accumulate(nodes_[static_cast<std::size_t>(n.in[0])].grad, Value(std::move(gm)));
        break;
      }
      case Op::kAdd: {
        accumulate(nodes_[static_cast<std::size_t>(n.in[0])].grad, n.grad);
        accumulate(nodes_[static_cast<std::size_t>(n.in[1])].grad, n.grad);
        break;
      }
      case Op::kMul: {
        Value ga = n.grad;
        {
          auto d = flat(ga);
          auto s = flat(in_val(n, 1));
          for (std::size_t i = 0; i < d.size(); ++i) d[i] *= s[i];
        }
        Value gb = n.grad;
        {
          auto d = flat(gb);
          auto s = flat(in_val(n, 0));
          for (std::size_t i = 0; i < d.size(); ++i) d[i] *= s[i];
        }
        accumulate(nodes_[static_cast<std::size_t>(n.in[0])].grad, ga);
        accumulate(nodes_[static_cast<std::size_t>(n.in[1])].grad, gb);
        break;
      }
      case Op::kRelu: {
        Value g = n.grad;
        auto d = flat(g);
        auto xv = flat(in_val(n, 0));
        for (std::size_t i = 0; i < d.size(); ++i)
          if (xv[i] <= 0.0) d[i] = 0.0;
        accumulate(nodes_[static_cast<std::size_t>(n.in[0])].grad, g);
        break;
      }
      case Op::kAvgPool2x2: {
        const auto& gy = std::get<Tensor4>(n.grad);
        const auto& x = std::get<Tensor4>(in_val(n, 0));
        Tensor4 gx(x.n, x.c, x.h, x.w);
        for (int in = 0; in < gy.n; ++in)
          for (int c = 0; c < gy.c; ++c)
            for (int i = 0; i < gy.h; ++i)
              for (int j = 0; j < gy.w; ++j) {
                const double g = 0.25 * gy.at(in, c, i, j);
                gx.at(in, c, 2 * i, 2 * j) = g;
                gx.at(in, c, 2 * i, 2 * j + 1) = g;
                gx.at(in, c, 2 * i + 1, 2 * j) = g;
                gx.at(in, c, 2 * i + 1, 2 * j + 1) = g;
              }
        accumulate(nodes_[static_cast<std::size_t>(n.in[0])].grad, Value(std::move(gx)));
        break;
      }
      case Op::kGlobalAvgPool: {
        const auto& gy = std::get<Matrix>(n.grad);
        const auto& x = std::get<Tensor4>(in_val(n, 0));
        Tensor4 gx(x.n, x.c, x.h, x.w);
        const double inv = 1.0 / (static_cast<double>(x.h) * x.w);
        for (int in = 0; in < x.n; ++in)
          for (int c = 0; c < x.c; ++c) {
            const double g = gy.at(in, c) * inv;
            for (int i = 0; i < x.h; ++i)
              for (int j = 0; j < x.w; ++j) gx.at(in, c, i, j) = g;
          }
        accumulate(nodes_[static_cast<std::size_t>(n.in[0])].grad, Value(std::move(gx)));
        break;
      }
      case Op::kAddRowBias: {
        const auto& gy = std::get<Matrix>(n.grad);
        accumulate(nodes_[static_cast<std::size_t>(n.in[0])].grad, n.grad);
        Matrix gb(1, gy.cols);
        for (int r = 0; r < gy.rows; ++r)
          for (int c = 0; c < gy.cols; ++c) gb.at(0, c) += gy.at(r, c);
        accumulate(nodes_[static_cast<std::size_t>(n.in[1])].grad, Value(std::move(gb)));
        break;
      }
      case Op::kPadKernel3x3: {
        const auto& gy = std::get<Kernel4>(n.grad);
        const auto& k = std::get<Kernel4>(in_val(n, 0));
        Kernel4 gk(k.co, k.ci, k.kh, k.kw);
        const int off_r = (3 - k.kh) / 2;
        const int off_s = (3 - k.kw) / 2;
        for (int o = 0; o < k.co; ++o)
          for (int i = 0; i < k.ci; ++i)
            for (int r = 0; r < k.kh; ++r)
              for (int s = 0; s < k.kw; ++s)
                gk.at(o, i, r, s) = gy.at(o, i, r + off_r, s + off_s);
        accumulate(nodes_[static_cast<std::size_t>(n.in[0])].grad, Value(std::move(gk)));
        break;
      }
      case Op::kKernelChannelScale: {
        const auto& gy = std::get<Kernel4>(n.grad);
        const auto& k = std::get<Kernel4>(in_val(n, 0));
        const auto& w = std::get<Matrix>(in_val(n, 1));
        Kernel4 gk(k.co, k.ci, k.kh, k.kw);
        Matrix gw(1, w.cols);
        for (int o = 0; o < k.co; ++o) {
          double acc = 0.0;
          for (int i = 0; i < k.ci; ++i)
            for (int r = 0; r < k.kh; ++r)
              for (int s = 0; s < k.kw; ++s) {
                gk.at(o, i, r, s) = w.at(0, o) * gy.at(o, i, r, s);
                acc += gy.at(o, i, r, s) * k.at(o, i, r, s);
              }
          gw.at(0, o) = acc;
        }
        accumulate(nodes_[static_cast<std::size_t>(n.in[0])].grad, Value(std::move(gk)));
        accumulate(nodes_[static_cast<std::size_t>(n.in[1])].grad, Value(std::move(gw)));
        break;
      }
      case Op::kMseLoss: {
        const double g = flat(n.grad)[0];
        auto av = flat(in_val(n, 0));
        auto bv = flat(in_val(n, 1));
        Value ga = zeros_like(in_val(n, 0));
        Value gb = zeros_like(in_val(n, 1));
        auto gad = flat(ga);
        auto gbd = flat(gb);
        const double scale = 2.0 * g / static_cast<double>(av.size());
        for (std::size_t i = 0; i < av.size(); ++i) {
          const double d = scale * (av[i] - bv[i]);
          gad[i] = d;
          gbd[i] = -d;
        }
        accumulate(nodes_[static_cast<std::size_t>(n.in[0])].grad, ga);
        accumulate(nodes_[static_cast<std::size_t>(n.in[1])].grad, gb);
        break;
      }
      case Op::kSum: {
        const double g = flat(n.grad)[0];
        Value ga = zeros_like(in_val(n, 0));
        for (double& d : flat(ga)) d = g;
        accumulate(nodes_[static_cast<std::size_t>(n.in[0])].grad, ga);
        break;
      }
      case Op::kSoftmaxXent: {
        const double g = flat(n.grad)[0];
        const auto& z = std::get<Matrix>(in_val(n, 0));
        Matrix gz(z.rows, z.cols);
        for (int r = 0; r < z.rows; ++r) {
          double mx = z.at(r, 0);
          for (int c = 1; c < z.cols; ++c) mx = std::max(mx, z.at(r, c));
          double lse = 0.0;
          for (int c = 0; c < z.cols; ++c) lse += std::exp(z.at(r, c) - mx);
          for (int c = 0; c < z.cols; ++c) {
            const double p = std::exp(z.at(r, c) - mx) / lse;
            const double onehot =
                c == n.targets[static_cast<std::size_t>(r)] ? 1.0 : 0.0;
            gz.at(r, c) = g * (p - onehot) / z.rows;
          }
        }
        accumulate(nodes_[static_cast<std::size_t>(n.in[0])].grad, Value(std::move(gz)));
        break;
      }
    }
  }

  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const Node& n = nodes_[id];
    if (n.param != nullptr && reachable[id]) accumulate(n.param->grad, n.grad);
  }
}

double finite_diff_check(const std::function<double()>& f,
                         std::span<Parameter* const> params, double h) {
  require(h > 0.0, "finite_diff_check: step must be positive");
  double max_rel = 0.0;
  for (Parameter* p : params) {
    auto vals = flat(p->value);
    auto grads = flat(p->grad);
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double saved = vals[i];
      vals[i] = saved + h;
      const double fp = f();
      vals[i] = saved - h;
      const double fm = f();
      vals[i] = saved;
      const double numeric = (fp - fm) / (2.0 * h);
      const double analytic = grads[i];
      const double denom =
          std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      max_rel = std::max(max_rel, std::abs(analytic - numeric) / denom);
    }
  }
  return max_rel;
}

}  // namespace drpn::ad
