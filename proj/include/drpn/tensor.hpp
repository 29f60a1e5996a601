#pragma once

#include <cstddef>
#include <vector>

namespace drpn {

// Dense rank-4 activation tensor, f64, row-major in (n, c, h, w) order.
struct Tensor4 {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;
  std::vector<double> data;

  Tensor4() = default;
  Tensor4(int n_, int c_, int h_, int w_);

  std::size_t size() const { return data.size(); }

  std::size_t index(int in, int ic, int ih, int iw) const {
    return ((static_cast<std::size_t>(in) * c + ic) * h + ih) * w + iw;
  }
  double& at(int in, int ic, int ih, int iw) { return data[index(in, ic, ih, iw)]; }
  double at(int in, int ic, int ih, int iw) const { return data[index(in, ic, ih, iw)]; }

  bool same_shape(const Tensor4& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }

  // Copies sample `i` into a batch-1 tensor.
  Tensor4 sample(int i) const;
};

// Dense rank-4 convolution weights, row-major in (co, ci, kh, kw) order.
// Spatial extents are restricted to 1 or 3 per side.
struct Kernel4 {
  int co = 0;
  int ci = 0;
  int kh = 0;
  int kw = 0;
  std::vector<double> data;

  Kernel4() = default;
  Kernel4(int co_, int ci_, int kh_, int kw_);

  std::size_t size() const { return data.size(); }

  std::size_t index(int o, int i, int r, int s) const {
    return ((static_cast<std::size_t>(o) * ci + i) * kh + r) * kw + s;
  }
  double& at(int o, int i, int r, int s) { return data[index(o, i, r, s)]; }
  double at(int o, int i, int r, int s) const { return data[index(o, i, r, s)]; }

  bool same_shape(const Kernel4& o) const {
    return co == o.co && ci == o.ci && kh == o.kh && kw == o.kw;
  }
};

// Row-major dense matrix.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c);

  std::size_t size() const { return data.size(); }

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

}  // namespace drpn
