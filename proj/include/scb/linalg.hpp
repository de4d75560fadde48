#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "scb/errors.hpp"

namespace scb {

// Dense symmetric matrix, full row-major storage. Dimensions here are tiny
// (feature dimension, in the teens at most), so simplicity beats packing.
class SymMatrix {
 public:
  explicit SymMatrix(int n, double diag = 0.0)
      : n_(n), a_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0) {
    if (n < 1) throw ConstraintViolation("matrix dimension must be positive");
    for (int i = 0; i < n; ++i) at(i, i) = diag;
  }

  int size() const { return n_; }

  double& at(int i, int j) {
    return a_[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) +
              static_cast<std::size_t>(j)];
  }
  double at(int i, int j) const {
    return a_[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) +
              static_cast<std::size_t>(j)];
  }

  // A += w * x * x^T
  void add_outer(const std::vector<double>& x, double w = 1.0) {
    if (x.size() != static_cast<std::size_t>(n_)) {
      throw ConstraintViolation("outer-product vector has wrong dimension");
    }
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) {
        at(i, j) += w * x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(j)];
      }
    }
  }

  void add_diag(double v) {
    for (int i = 0; i < n_; ++i) at(i, i) += v;
  }

 private:
  int n_;
  std::vector<double> a_;
};

// Cholesky factorization A = L L^T of a symmetric positive definite matrix.
// Throws EstimationFailure if a pivot is not strictly positive; callers that
// can re-regularize catch this and retry with a fatter diagonal.
class Cholesky {
 public:
  explicit Cholesky(const SymMatrix& a) : n_(a.size()), l_(a) {
    for (int j = 0; j < n_; ++j) {
      double d = l_.at(j, j);
      for (int k = 0; k < j; ++k) d -= l_.at(j, k) * l_.at(j, k);
      if (!(d > 0.0) || !std::isfinite(d)) {
        throw EstimationFailure("matrix not positive definite in factorization");
      }
      const double root = std::sqrt(d);
      l_.at(j, j) = root;
      for (int i = j + 1; i < n_; ++i) {
        double s = l_.at(i, j);
        for (int k = 0; k < j; ++k) s -= l_.at(i, k) * l_.at(j, k);
        l_.at(i, j) = s / root;
      }
    }
  }

  // Solve A y = b.
  std::vector<double> solve(const std::vector<double>& b) const {
    if (b.size() != static_cast<std::size_t>(n_)) {
      throw ConstraintViolation("right-hand side has wrong dimension");
    }
    std::vector<double> y(b);
    for (int i = 0; i < n_; ++i) {  // forward: L z = b
      double s = y[static_cast<std::size_t>(i)];
      for (int k = 0; k < i; ++k) s -= l_.at(i, k) * y[static_cast<std::size_t>(k)];
      y[static_cast<std::size_t>(i)] = s / l_.at(i, i);
    }
    for (int i = n_ - 1; i >= 0; --i) {  // backward: L^T y = z
      double s = y[static_cast<std::size_t>(i)];
      for (int k = i + 1; k < n_; ++k) s -= l_.at(k, i) * y[static_cast<std::size_t>(k)];
      y[static_cast<std::size_t>(i)] = s / l_.at(i, i);
    }
    return y;
  }

  // x^T A^{-1} x, the squared confidence width. Computed through the factor:
  // with z = L^{-1} x it equals z . z, which is nonnegative by construction.
  double inverse_quadratic(const std::vector<double>& x) const {
    if (x.size() != static_cast<std::size_t>(n_)) {
      throw ConstraintViolation("vector has wrong dimension");
    }
    std::vector<double> z(x);
    double out = 0.0;
    for (int i = 0; i < n_; ++i) {
      double s = z[static_cast<std::size_t>(i)];
      for (int k = 0; k < i; ++k) s -= l_.at(i, k) * z[static_cast<std::size_t>(k)];
      s /= l_.at(i, i);
      z[static_cast<std::size_t>(i)] = s;
      out += s * s;
    }
    return out;
  }

 private:
  int n_;
  SymMatrix l_;
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

}  // namespace scb
