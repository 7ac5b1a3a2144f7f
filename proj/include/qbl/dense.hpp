#pragma once

// Floating-point Cholesky kernel for the Gaussian optimizer. Positive definiteness is certified
// by a successful factorization; nothing here estimates eigenvalues.

#include "qbl/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace qbl {

struct NotPositiveDefinite : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline bool is_symmetric(const RealMatrix& m, double rel_tol = 1e-12) {
  if (m.rows() != m.cols()) return false;
  double scale = 0.0;
  for (double v : m.data()) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > rel_tol * scale) return false;
  return true;
}

/// Lower-triangular L with m = L·Lᵀ. Throws NotPositiveDefinite on a non-positive pivot.
inline RealMatrix cholesky(const RealMatrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("cholesky: matrix is not square");
  const std::size_t n = m.rows();
  RealMatrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = m(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0) || !std::isfinite(d))
      throw NotPositiveDefinite("non-positive pivot at index " + std::to_string(j));
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

inline double logdet_from_cholesky(const RealMatrix& l) {
  double s = 0.0;
  for (std::size_t i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

inline double logdet_spd(const RealMatrix& m) { return logdet_from_cholesky(cholesky(m)); }

/// Inverse of a lower-triangular matrix with nonzero diagonal.
inline RealMatrix lower_triangular_inverse(const RealMatrix& l) {
  const std::size_t n = l.rows();
  RealMatrix inv(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    inv(j, j) = 1.0 / l(j, j);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = j; k < i; ++k) s -= l(i, k) * inv(k, j);
      inv(i, j) = s / l(i, i);
    }
  }
  return inv;
}

/// Inverse of L·Lᵀ given its Cholesky factor L.
inline RealMatrix inverse_from_cholesky(const RealMatrix& l) {
  const RealMatrix li = lower_triangular_inverse(l);
  return li.transpose() * li;
}

inline RealMatrix spd_inverse(const RealMatrix& m) { return inverse_from_cholesky(cholesky(m)); }

inline RealMatrix symmetrize(const RealMatrix& m) {
  RealMatrix s = m;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j) s(i, j) = s(j, i) = 0.5 * (m(i, j) + m(j, i));
  return s;
}

/// Frobenius condition number ‖M‖_F·‖M⁻¹‖_F; bounds the spectral one from above by a factor ≤ dim.
inline double frobenius_condition(const RealMatrix& m) {
  return frobenius_norm(m) * frobenius_norm(spd_inverse(m));
}

/// Symmetric positive-definite matrix, certified at construction.
class SpdMatrix {
 public:
  explicit SpdMatrix(RealMatrix m) : entries_(std::move(m)) {
    if (!is_symmetric(entries_)) throw std::invalid_argument("SpdMatrix: matrix is not symmetric");
    factor_ = cholesky(entries_);
  }

  std::size_t dim() const noexcept { return entries_.rows(); }
  const RealMatrix& entries() const noexcept { return entries_; }
  const RealMatrix& factor() const noexcept { return factor_; }
  double logdet() const { return logdet_from_cholesky(factor_); }

 private:
  RealMatrix entries_;
  RealMatrix factor_;
};

inline double logdet_spd(const SpdMatrix& m) { return m.logdet(); }

}  // namespace qbl
