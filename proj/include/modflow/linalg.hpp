#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace modflow {

// Dense row-major matrix of doubles. Small sizes throughout the library
// (node count x label count, MLP layers of width 32), so no BLAS.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }

  double* row(int i) { return a.data() + static_cast<std::size_t>(i) * cols; }
  const double* row(int i) const { return a.data() + static_cast<std::size_t>(i) * cols; }

  std::size_t size() const { return a.size(); }
  void fill(double v) { a.assign(a.size(), v); }

  bool same_shape(const Matrix& other) const {
    return rows == other.rows && cols == other.cols;
  }
};

// Per-node score matrix (one row of label scores per graph node).
using ScoreMatrix = Matrix;

inline bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline bool all_finite(const Matrix& m) { return all_finite(std::span<const double>(m.a)); }

// y = W x with W stored row-major as (out x in).
inline void matvec(std::span<const double> w, int out_dim, int in_dim,
                   const double* x, double* y) {
  for (int o = 0; o < out_dim; ++o) {
    const double* wr = w.data() + static_cast<std::size_t>(o) * in_dim;
    double acc = 0.0;
    for (int i = 0; i < in_dim; ++i) acc += wr[i] * x[i];
    y[o] = acc;
  }
}

// y += W^T v for W stored row-major as (out x in).
inline void matvec_transposed_add(std::span<const double> w, int out_dim, int in_dim,
                                  const double* v, double* y) {
  for (int o = 0; o < out_dim; ++o) {
    const double* wr = w.data() + static_cast<std::size_t>(o) * in_dim;
    const double vo = v[o];
    for (int i = 0; i < in_dim; ++i) y[i] += vo * wr[i];
  }
}

// W += alpha * u v^T (outer product accumulation), W row-major (out x in).
inline void outer_add(std::span<double> w, int out_dim, int in_dim,
                      const double* u, const double* v, double alpha = 1.0) {
  for (int o = 0; o < out_dim; ++o) {
    double* wr = w.data() + static_cast<std::size_t>(o) * in_dim;
    const double uo = alpha * u[o];
    for (int i = 0; i < in_dim; ++i) wr[i] += uo * v[i];
  }
}

inline void axpy(std::span<double> y, std::span<const double> x, double alpha) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

inline double dot(std::span<const double> x, std::span<const double> y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

}  // namespace modflow
