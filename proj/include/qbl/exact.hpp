#pragma once

// Exact rank, kernel and subspace-lattice operations over the rationals.
// No tolerances anywhere in this file: every dimension is a certificate.

#include "qbl/matrix.hpp"

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qbl {

namespace detail {

// Rows scaled to integers (each row by the lcm of its denominators); row space is unchanged.
inline std::vector<std::vector<Integer>> integer_rows(const RationalMatrix& m) {
  std::vector<std::vector<Integer>> rows(m.rows(), std::vector<Integer>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Integer l = 1;
    for (std::size_t j = 0; j < m.cols(); ++j) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), m(i, j).get_den_mpz_t());
    for (std::size_t j = 0; j < m.cols(); ++j) rows[i][j] = m(i, j).get_num() * (l / m(i, j).get_den());
  }
  return rows;
}

}  // namespace detail

/// Exact rank by Bareiss fraction-free elimination.
inline std::size_t rank(const RationalMatrix& m) {
  auto a = detail::integer_rows(m);
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  std::size_t r = 0;
  Integer prev = 1;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t p = r;
    while (p < rows && a[p][c] == 0) ++p;
    if (p == rows) continue;
    std::swap(a[p], a[r]);
    for (std::size_t i = r + 1; i < rows; ++i) {
      for (std::size_t j = c + 1; j < cols; ++j) {
        a[i][j] = a[r][c] * a[i][j] - a[i][c] * a[r][j];
        mpz_divexact(a[i][j].get_mpz_t(), a[i][j].get_mpz_t(), prev.get_mpz_t());
      }
      a[i][c] = 0;
    }
    prev = a[r][c];
    ++r;
  }
  return r;
}

/// Reduced row echelon form over Q. `pivots` receives the pivot column of each nonzero row.
inline RationalMatrix rref(RationalMatrix m, std::vector<std::size_t>* pivots = nullptr) {
  std::vector<std::size_t> piv;
  std::size_t r = 0;
  for (std::size_t c = 0; c < m.cols() && r < m.rows(); ++c) {
    std::size_t p = r;
    while (p < m.rows() && m(p, c) == 0) ++p;
    if (p == m.rows()) continue;
    if (p != r)
      for (std::size_t j = 0; j < m.cols(); ++j) std::swap(m(p, j), m(r, j));
    const Rational inv = 1 / m(r, c);
    for (std::size_t j = c; j < m.cols(); ++j) m(r, j) *= inv;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      if (i == r || m(i, c) == 0) continue;
      const Rational f = m(i, c);
      for (std::size_t j = c; j < m.cols(); ++j) m(i, j) -= f * m(r, j);
    }
    piv.push_back(c);
    ++r;
  }
  if (pivots) *pivots = std::move(piv);
  return m;
}

/// A linear subspace of Q^n stored by a canonical basis: the columns are the nonzero rows of
/// the reduced row echelon form of the spanning set, so equal subspaces have equal bases.
/// The zero subspace has a basis with zero columns.
class Subspace {
 public:
  Subspace() = default;

  static Subspace zero(std::size_t ambient) { return Subspace(ambient, RationalMatrix(ambient, 0)); }
  static Subspace full(std::size_t ambient) { return span(RationalMatrix::identity(ambient)); }

  /// Column span of `generators` (columns need not be independent).
  static Subspace span(const RationalMatrix& generators) {
    std::vector<std::size_t> piv;
    const RationalMatrix reduced = rref(generators.transpose(), &piv);
    RationalMatrix basis(generators.rows(), piv.size());
    for (std::size_t k = 0; k < piv.size(); ++k)
      for (std::size_t i = 0; i < generators.rows(); ++i) basis(i, k) = reduced(k, i);
    return Subspace(generators.rows(), std::move(basis));
  }

  std::size_t ambient_dim() const noexcept { return ambient_; }
  std::size_t dim() const noexcept { return basis_.cols(); }
  const RationalMatrix& basis() const noexcept { return basis_; }

  bool contains(const RationalMatrix& vectors) const {
    if (vectors.rows() != ambient_) throw std::invalid_argument("ambient dimension mismatch");
    return rank(hstack(basis_, vectors)) == dim();
  }
  bool contains(const Subspace& other) const { return contains(other.basis()); }

  /// Stable textual key of the canonical basis; used for deduplication and ordering.
  std::string key() const {
    std::string k = std::to_string(ambient_) + ":";
    const RationalMatrix rows = basis_.transpose();
    for (const auto& v : rows.data()) {
      k += v.get_str();
      k += ',';
    }
    return k;
  }

  friend bool operator==(const Subspace& a, const Subspace& b) {
    return a.ambient_ == b.ambient_ && a.basis_ == b.basis_;
  }

 private:
  Subspace(std::size_t ambient, RationalMatrix basis) : ambient_(ambient), basis_(std::move(basis)) {}

  std::size_t ambient_ = 0;
  RationalMatrix basis_;
};

/// Null space of `m` (a subspace of Q^{cols}).
inline Subspace kernel_basis(const RationalMatrix& m) {
  std::vector<std::size_t> piv;
  const RationalMatrix reduced = rref(m, &piv);
  std::vector<bool> is_pivot(m.cols(), false);
  for (auto c : piv) is_pivot[c] = true;
  RationalMatrix gens(m.cols(), m.cols() - piv.size());
  std::size_t k = 0;
  for (std::size_t free = 0; free < m.cols(); ++free) {
    if (is_pivot[free]) continue;
    gens(free, k) = 1;
    for (std::size_t r = 0; r < piv.size(); ++r) gens(piv[r], k) = -reduced(r, free);
    ++k;
  }
  return Subspace::span(gens);
}

/// m·V.
inline Subspace subspace_image(const RationalMatrix& m, const Subspace& v) {
  if (m.cols() != v.ambient_dim()) throw std::invalid_argument("subspace_image: ambient dimension mismatch");
  return Subspace::span(m * v.basis());
}

inline Subspace subspace_sum(const Subspace& u, const Subspace& v) {
  if (u.ambient_dim() != v.ambient_dim()) throw std::invalid_argument("subspace_sum: ambient dimension mismatch");
  return Subspace::span(hstack(u.basis(), v.basis()));
}

/// U ∩ V as U·x over the kernel of [U | -V].
inline Subspace subspace_intersection(const Subspace& u, const Subspace& v) {
  if (u.ambient_dim() != v.ambient_dim())
    throw std::invalid_argument("subspace_intersection: ambient dimension mismatch");
  const RationalMatrix stacked = hstack(u.basis(), v.basis() * Rational(-1));
  const Subspace k = kernel_basis(stacked);
  RationalMatrix coeffs(u.dim(), k.dim());
  for (std::size_t i = 0; i < u.dim(); ++i)
    for (std::size_t j = 0; j < k.dim(); ++j) coeffs(i, j) = k.basis()(i, j);
  return Subspace::span(u.basis() * coeffs);
}

inline Subspace orthogonal_complement(const Subspace& v) {
  if (v.dim() == 0) return Subspace::full(v.ambient_dim());
  return kernel_basis(v.basis().transpose());
}

/// {x : m·x ∈ W}.
inline Subspace preimage(const RationalMatrix& m, const Subspace& w) {
  if (m.rows() != w.ambient_dim()) throw std::invalid_argument("preimage: ambient dimension mismatch");
  const Subspace perp = orthogonal_complement(w);
  return kernel_basis(perp.basis().transpose() * m);
}

}  // namespace qbl
