#include "drpn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace drpn {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

Tensor4::Tensor4(int n_, int c_, int h_, int w_) : n(n_), c(c_), h(h_), w(w_) {
  require(n >= 1 && c >= 1 && h >= 1 && w >= 1, "Tensor4: extents must be >= 1");
  data.assign(static_cast<std::size_t>(n) * c * h * w, 0.0);
}

Tensor4 Tensor4::sample(int i) const {
  require(i >= 0 && i < n, "Tensor4::sample: index out of range");
  Tensor4 out(1, c, h, w);
  const std::size_t stride = out.size();
  std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(stride) * i, stride,
              out.data.begin());
  return out;
}

Kernel4::Kernel4(int co_, int ci_, int kh_, int kw_) : co(co_), ci(ci_), kh(kh_), kw(kw_) {
  require(co >= 1 && ci >= 1, "Kernel4: channel counts must be >= 1");
  require((kh == 1 || kh == 3) && (kw == 1 || kw == 3),
          "Kernel4: spatial extents must be 1 or 3");
  data.assign(static_cast<std::size_t>(co) * ci * kh * kw, 0.0);
}

Matrix::Matrix(int r, int c) : rows(r), cols(c) {
  require(rows >= 1 && cols >= 1, "Matrix: extents must be >= 1");
  data.assign(static_cast<std::size_t>(rows) * cols, 0.0);
}

OpCounters& op_counters() {
  thread_local OpCounters counters;
  return counters;
}

void reset_op_counters() { op_counters() = OpCounters{}; }

Tensor4 conv2d(const Tensor4& x, const Kernel4& k, int pad_h, int pad_w) {
  require(x.c == k.ci, "conv2d: input channels do not match kernel");
  require(pad_h >= 0 && pad_w >= 0, "conv2d: padding must be non-negative");
  const int oh = x.h + 2 * pad_h - k.kh + 1;
  const int ow = x.w + 2 * pad_w - k.kw + 1;
  require(oh >= 1 && ow >= 1, "conv2d: output extent < 1");

  Tensor4 out(x.n, k.co, oh, ow);
  auto& ctr = op_counters();
  ctr.conv_calls += 1;
  ctr.conv_macs += static_cast<std::uint64_t>(x.n) * k.co * oh * ow * k.ci * k.kh * k.kw;

  const double* xd = x.data.data();
  const double* kd = k.data.data();
  double* od = out.data.data();

#pragma omp parallel for collapse(3) schedule(static)
  for (int in = 0; in < x.n; ++in) {
    for (int o = 0; o < k.co; ++o) {
      for (int i = 0; i < oh; ++i) {
        const std::size_t out_row = ((static_cast<std::size_t>(in) * k.co + o) * oh + i) *
                                    static_cast<std::size_t>(ow);
        for (int j = 0; j < ow; ++j) {
          double acc = 0.0;
          for (int ci = 0; ci < k.ci; ++ci) {
            for (int r = 0; r < k.kh; ++r) {
              const int ih = i + r - pad_h;
              if (ih < 0 || ih >= x.h) continue;
              const std::size_t x_row =
                  ((static_cast<std::size_t>(in) * x.c + ci) * x.h + ih) *
                  static_cast<std::size_t>(x.w);
              const std::size_t k_row =
                  ((static_cast<std::size_t>(o) * k.ci + ci) * k.kh + r) *
                  static_cast<std::size_t>(k.kw);
              const int s_lo = std::max(0, pad_w - j);
              const int s_hi = std::min(k.kw, x.w + pad_w - j);
              for (int s = s_lo; s < s_hi; ++s) {
                acc += kd[k_row + s] * xd[x_row + (j + s - pad_w)];
              }
            }
          }
          od[out_row + j] = acc;
        }
      }
    }
  }
  return out;
}

Tensor4 conv2d_grad_input(const Tensor4& gy, const Kernel4& k, int pad_h, int pad_w,
                          int in_h, int in_w) {
  require(gy.c == k.co, "conv2d_grad_input: upstream channels do not match kernel");
  Tensor4 gx(gy.n, k.ci, in_h, in_w);
  const double* gyd = gy.data.data();
  const double* kd = k.data.data();

  // gx[n,ci,ih,iw] = sum over (co,r,s) of k[co,ci,r,s] * gy[n,co,ih-r+pad_h,iw-s+pad_w]
#pragma omp parallel for collapse(3) schedule(static)
  for (int in = 0; in < gy.n; ++in) {
    for (int ci = 0; ci < k.ci; ++ci) {
      for (int ih = 0; ih < in_h; ++ih) {
        double* gx_row = gx.data.data() +
                         ((static_cast<std::size_t>(in) * k.ci + ci) * in_h + ih) *
                             static_cast<std::size_t>(in_w);
        for (int iw = 0; iw < in_w; ++iw) {
          double acc = 0.0;
          for (int o = 0; o < k.co; ++o) {
            for (int r = 0; r < k.kh; ++r) {
              const int oi = ih - r + pad_h;
              if (oi < 0 || oi >= gy.h) continue;
              const double* gy_row = gyd + ((static_cast<std::size_t>(in) * gy.c + o) * gy.h +
                                            oi) * static_cast<std::size_t>(gy.w);
              const double* k_row = kd + ((static_cast<std::size_t>(o) * k.ci + ci) * k.kh +
                                          r) * static_cast<std::size_t>(k.kw);
              const int s_lo = std::max(0, iw + pad_w - gy.w + 1);
              const int s_hi = std::min(k.kw, iw + pad_w + 1);
              for (int s = s_lo; s < s_hi; ++s) acc += k_row[s] * gy_row[iw - s + pad_w];
            }
          }
          gx_row[iw] = acc;
        }
      }
    }
  }
  return gx;
}

Kernel4 conv2d_grad_kernel(const Tensor4& gy, const Tensor4& x, int pad_h, int pad_w,
                           int kh, int kw) {
  require(gy.n == x.n, "conv2d_grad_kernel: batch mismatch");
  Kernel4 gk(gy.c, x.c, kh, kw);
  const double* gyd = gy.data.data();
  const double* xd = x.data.data();

#pragma omp parallel for collapse(2) schedule(static)
  for (int o = 0; o < gk.co; ++o) {
    for (int ci = 0; ci < gk.ci; ++ci) {
      for (int r = 0; r < kh; ++r) {
        for (int s = 0; s < kw; ++s) {
          double acc = 0.0;
          const int j_lo = std::max(0, pad_w - s);
          const int j_hi = std::min(gy.w, x.w + pad_w - s);
          for (int in = 0; in < gy.n; ++in) {
            for (int i = 0; i < gy.h; ++i) {
              const int ih = i + r - pad_h;
              if (ih < 0 || ih >= x.h) continue;
              const double* gy_row = gyd + ((static_cast<std::size_t>(in) * gy.c + o) * gy.h +
                                            i) * static_cast<std::size_t>(gy.w);
              const double* x_row = xd + ((static_cast<std::size_t>(in) * x.c + ci) * x.h +
                                          ih) * static_cast<std::size_t>(x.w);
              for (int j = j_lo; j < j_hi; ++j) acc += gy_row[j] * x_row[j + s - pad_w];
            }
          }
          gk.at(o, ci, r, s) = acc;
        }
      }
    }
  }
  return gk;
}

Kernel4 pad_kernel_to_3x3(const Kernel4& k) {
  require((k.kh == 1 || k.kh == 3) && (k.kw == 1 || k.kw == 3),
          "pad_kernel_to_3x3: unsupported kernel extent");
  if (k.kh == 3 && k.kw == 3) return k;
  Kernel4 out(k.co, k.ci, 3, 3);
  const int off_r = (3 - k.kh) / 2;
  const int off_s = (3 - k.kw) / 2;
  for (int o = 0; o < k.co; ++o)
    for (int i = 0; i < k.ci; ++i)
      for (int r = 0; r < k.kh; ++r)
        for (int s = 0; s < k.kw; ++s)
          out.at(o, i, r + off_r, s + off_s) = k.at(o, i, r, s);
  return out;
}

Kernel4 identity_kernel(int c) {
  require(c >= 1, "identity_kernel: channel count must be >= 1");
  Kernel4 k(c, c, 3, 3);
  for (int o = 0; o < c; ++o) k.at(o, o, 1, 1) = 1.0;
  return k;
}

Kernel4 identity_kernel_1x1(int c) {
  require(c >= 1, "identity_kernel_1x1: channel count must be >= 1");
  Kernel4 k(c, c, 1, 1);
  for (int o = 0; o < c; ++o) k.at(o, o, 0, 0) = 1.0;
  return k;
}

Tensor4 channel_scale(const Tensor4& x, std::span<const double> w) {
  require(static_cast<int>(w.size()) == x.c, "channel_scale: weight length != channels");
  Tensor4 out(x.n, x.c, x.h, x.w);
  op_counters().scale_macs += out.size();
  const std::size_t plane = static_cast<std::size_t>(x.h) * x.w;

#pragma omp parallel for collapse(2) schedule(static)
  for (int in = 0; in < x.n; ++in) {
    for (int c = 0; c < x.c; ++c) {
      const std::size_t base = (static_cast<std::size_t>(in) * x.c + c) * plane;
      const double s = w[static_cast<std::size_t>(c)];
      for (std::size_t p = 0; p < plane; ++p) out.data[base + p] = s * x.data[base + p];
    }
  }
  return out;
}

Kernel4 kernel_channel_scale(const Kernel4& k, std::span<const double> w) {
  require(static_cast<int>(w.size()) == k.co,
          "kernel_channel_scale: weight length != output channels");
  Kernel4 out(k.co, k.ci, k.kh, k.kw);
  op_counters().fold_macs += out.size();
  const std::size_t plane = static_cast<std::size_t>(k.ci) * k.kh * k.kw;
  for (int o = 0; o < k.co; ++o) {
    const std::size_t base = o * plane;
    for (std::size_t p = 0; p < plane; ++p) out.data[base + p] = w[o] * k.data[base + p];
  }
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols == b.rows, "matmul: inner extents do not match");
  Matrix out(a.rows, b.cols);
  op_counters().matmul_macs +=
      static_cast<std::uint64_t>(a.rows) * a.cols * b.cols;

  const double* ad = a.data.data();
  const double* bd = b.data.data();
  double* od = out.data.data();
  const int inner = a.cols;
  const int cols = b.cols;

#pragma omp parallel for schedule(static)
  for (int i = 0; i < a.rows; ++i) {
    double* out_row = od + static_cast<std::size_t>(i) * cols;
    for (int kk = 0; kk < inner; ++kk) {
      const double av = ad[static_cast<std::size_t>(i) * inner + kk];
      const double* b_row = bd + static_cast<std::size_t>(kk) * cols;
      for (int j = 0; j < cols; ++j) out_row[j] += av * b_row[j];
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols, m.rows);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) out.at(j, i) = m.at(i, j);
  return out;
}

Matrix softmax_over_branches(const Matrix& m) {
  Matrix out(m.rows, m.cols);
  for (int c = 0; c < m.cols; ++c) {
    double mx = m.at(0, c);
    for (int b = 1; b < m.rows; ++b) mx = std::max(mx, m.at(b, c));
    double sum = 0.0;
    for (int b = 0; b < m.rows; ++b) {
      const double e = std::exp(m.at(b, c) - mx);
      out.at(b, c) = e;
      sum += e;
    }
    for (int b = 0; b < m.rows; ++b) out.at(b, c) /= sum;
  }
  return out;
}

Matrix flatten_spatial(const Tensor4& x) {
  require(x.n == 1, "flatten_spatial: batch must be 1");
  Matrix out(x.h * x.w, x.c);
  for (int c = 0; c < x.c; ++c)
    for (int i = 0; i < x.h; ++i)
      for (int j = 0; j < x.w; ++j) out.at(i * x.w + j, c) = x.at(0, c, i, j);
  return out;
}

}  // namespace drpn
