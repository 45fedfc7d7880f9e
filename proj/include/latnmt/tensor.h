#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace latnmt {

// Dense row-major matrix of doubles. Column vectors are (rows, 1).
struct Tensor {
  int rows = 0, cols = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int r, int c, double fill = 0.0) : rows(r), cols(c), v(static_cast<size_t>(r) * c, fill) {}

  static Tensor vec(std::vector<double> vals) {
    Tensor t;
    t.rows = static_cast<int>(vals.size());
    t.cols = 1;
    t.v = std::move(vals);
    return t;
  }
  static Tensor scalar(double x) {
    Tensor t(1, 1);
    t.v[0] = x;
    return t;
  }

  int size() const { return rows * cols; }
  double& operator()(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
  double& operator[](int i) { return v[i]; }
  double operator[](int i) const { return v[i]; }

  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
  bool is_vector() const { return cols == 1; }
  bool is_scalar() const { return rows == 1 && cols == 1; }
  void zero() { std::fill(v.begin(), v.end(), 0.0); }

  bool all_finite() const {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

// y += W x
inline void matvec_acc(const Tensor& W, const Tensor& x, Tensor& y) {
  assert(W.cols == x.rows && W.rows == y.rows && x.cols == 1);
  const double* w = W.v.data();
  for (int r = 0; r < W.rows; ++r) {
    double acc = 0.0;
    const double* wr = w + static_cast<size_t>(r) * W.cols;
    for (int c = 0; c < W.cols; ++c) acc += wr[c] * x.v[c];
    y.v[r] += acc;
  }
}

// dW += dy x^T
inline void outer_acc(const Tensor& dy, const Tensor& x, Tensor& dW) {
  assert(dW.rows == dy.rows && dW.cols == x.rows);
  for (int r = 0; r < dW.rows; ++r) {
    double g = dy.v[r];
    if (g == 0.0) continue;
    double* wr = dW.v.data() + static_cast<size_t>(r) * dW.cols;
    for (int c = 0; c < dW.cols; ++c) wr[c] += g * x.v[c];
  }
}

// dx += W^T dy
inline void matvec_transpose_acc(const Tensor& W, const Tensor& dy, Tensor& dx) {
  assert(W.rows == dy.rows && W.cols == dx.rows);
  for (int r = 0; r < W.rows; ++r) {
    double g = dy.v[r];
    if (g == 0.0) continue;
    const double* wr = W.v.data() + static_cast<size_t>(r) * W.cols;
    for (int c = 0; c < W.cols; ++c) dx.v[c] += wr[c] * g;
  }
}

}  // namespace latnmt
