#include "drpn/reference.hpp"

#include <cmath>
#include <stdexcept>

namespace drpn::reference {

Tensor4 conv2d(const Tensor4& x, const Kernel4& k, int pad_h, int pad_w) {
  if (x.c != k.ci) throw std::invalid_argument("reference::conv2d: channel mismatch");
  const int oh = x.h + 2 * pad_h - k.kh + 1;
  const int ow = x.w + 2 * pad_w - k.kw + 1;
  if (oh < 1 || ow < 1) throw std::invalid_argument("reference::conv2d: output extent < 1");

  Tensor4 out(x.n, k.co, oh, ow);
  for (int n = 0; n < x.n; ++n)
    for (int o = 0; o < k.co; ++o)
      for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j) {
          double acc = 0.0;
          for (int c = 0; c < k.ci; ++c)
            for (int r = 0; r < k.kh; ++r)
              for (int s = 0; s < k.kw; ++s) {
                const int ih = i + r - pad_h;
                const int iw = j + s - pad_w;
                if (ih < 0 || ih >= x.h || iw < 0 || iw >= x.w) continue;  // zero pad
                acc += k.at(o, c, r, s) * x.at(n, c, ih, iw);
              }
          out.at(n, o, i, j) = acc;
        }
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("reference::matmul: shape mismatch");
  Matrix out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < b.cols; ++j) {
      double acc = 0.0;
      for (int k = 0; k < a.cols; ++k) acc += a.at(i, k) * b.at(k, j);
      out.at(i, j) = acc;
    }
  return out;
}

Matrix softmax_over_branches(const Matrix& m) {
  Matrix out(m.rows, m.cols);
  for (int c = 0; c < m.cols; ++c) {
    double mx = m.at(0, c);
    for (int b = 1; b < m.rows; ++b)
      if (m.at(b, c) > mx) mx = m.at(b, c);
    double sum = 0.0;
    for (int b = 0; b < m.rows; ++b) sum += std::exp(m.at(b, c) - mx);
    for (int b = 0; b < m.rows; ++b) out.at(b, c) = std::exp(m.at(b, c) - mx) / sum;
  }
  return out;
}

Tensor4 channel_scale(const Tensor4& x, std::span<const double> w) {
  if (static_cast<int>(w.size()) != x.c)
    throw std::invalid_argument("reference::channel_scale: length mismatch");
  Tensor4 out(x.n, x.c, x.h, x.w);
  for (int n = 0; n < x.n; ++n)
    for (int c = 0; c < x.c; ++c)
      for (int i = 0; i < x.h; ++i)
        for (int j = 0; j < x.w; ++j) out.at(n, c, i, j) = w[c] * x.at(n, c, i, j);
  return out;
}

Matrix attention_weights(const Tensor4& x, const Kernel4& f1, const Kernel4& f2) {
  if (x.n != 1) throw std::invalid_argument("reference::attention_weights: batch must be 1");
  const int branches = f1.co;
  const int c_out = f2.co;

  // Pointwise convolutions written as per-pixel dot products.
  Matrix logits(branches, c_out);
  for (int b = 0; b < branches; ++b)
    for (int o = 0; o < c_out; ++o) {
      double acc = 0.0;
      for (int i = 0; i < x.h; ++i)
        for (int j = 0; j < x.w; ++j) {
          double q = 0.0;
          double k = 0.0;
          for (int c = 0; c < x.c; ++c) {
            q += f1.at(b, c, 0, 0) * x.at(0, c, i, j);
            k += f2.at(o, c, 0, 0) * x.at(0, c, i, j);
          }
          acc += q * k;
        }
      logits.at(b, o) = acc / (static_cast<double>(x.h) * x.w);
    }
  return softmax_over_branches(logits);
}

}  // namespace drpn::reference
