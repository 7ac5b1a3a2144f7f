#include "qbl/dense.hpp"
#include "qbl/exact.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace qbl;

namespace {

// Determinant by cofactor expansion; exponential, fine for the tiny sizes used here.
Rational cofactor_det(const RationalMatrix& m) {
  const std::size_t n = m.rows();
  if (n == 0) return 1;
  if (n == 1) return m(0, 0);
  Rational det;
  for (std::size_t c = 0; c < n; ++c) {
    if (m(0, c) == 0) continue;
    RationalMatrix minor(n - 1, n - 1);
    for (std::size_t r = 1; r < n; ++r)
      for (std::size_t k = 0, kk = 0; k < n; ++k)
        if (k != c) minor(r - 1, kk++) = m(r, k);
    det += (c % 2 ? -1 : 1) * m(0, c) * cofactor_det(minor);
  }
  return det;
}

// Largest k with a nonzero k×k minor.
std::size_t minor_rank(const RationalMatrix& m) {
  std::size_t best = 0;
  const std::size_t rows = m.rows(), cols = m.cols();
  for (std::uint32_t rmask = 1; rmask < (1u << rows); ++rmask)
    for (std::uint32_t cmask = 1; cmask < (1u << cols); ++cmask) {
      const auto k = static_cast<std::size_t>(__builtin_popcount(rmask));
      if (k != static_cast<std::size_t>(__builtin_popcount(cmask)) || k <= best) continue;
      RationalMatrix sub(k, k);
      for (std::size_t r = 0, rr = 0; r < rows; ++r) {
        if (!(rmask >> r & 1u)) continue;
        for (std::size_t c = 0, cc = 0; c < cols; ++c)
          if (cmask >> c & 1u) sub(rr, cc++) = m(r, c);
        ++rr;
      }
      if (cofactor_det(sub) != 0) best = k;
    }
  return best;
}

RationalMatrix random_matrix(std::mt19937& rng, std::size_t rows, std::size_t cols, int lo = -2, int hi = 2) {
  std::uniform_int_distribution<int> dist(lo, hi);
  RationalMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = Rational(dist(rng), 1 + (dist(rng) == 0));
  return m;
}

// Random subspace of Q^n spanned by k random vectors, biased toward low rank.
Subspace random_subspace(std::mt19937& rng, std::size_t n) {
  std::uniform_int_distribution<std::size_t> kdist(0, n);
  const std::size_t k = kdist(rng);
  RationalMatrix g = random_matrix(rng, n, k, -1, 1);
  return Subspace::span(g);
}

bool is_zero(const RationalMatrix& m) {
  for (const auto& v : m.data())
    if (v != 0) return false;
  return true;
}

const RationalMatrix kB1{{1, 0, 0}, {0, 1, 0}};
const RationalMatrix kB2{{0, 1, 0}, {0, 0, 1}};

}  // namespace

TEST(Rational, ParsesFractionsAndDecimalsExactly) {
  EXPECT_EQ(parse_rational("1/3"), Rational(1, 3));
  EXPECT_EQ(parse_rational("-4/6"), Rational(-2, 3));
  EXPECT_EQ(parse_rational("0.75"), Rational(3, 4));
  EXPECT_EQ(parse_rational("1.5e-2"), Rational(3, 200));
  EXPECT_EQ(parse_rational("010"), Rational(10));
  EXPECT_THROW(parse_rational("abc"), std::invalid_argument);
  EXPECT_THROW(parse_rational("1/0"), std::invalid_argument);
  EXPECT_THROW(parse_rational(""), std::invalid_argument);
}

TEST(Rank, HandExamples) {
  EXPECT_EQ(rank(RationalMatrix{{1, 0}, {0, 0}}), 1u);
  EXPECT_EQ(rank(kB1), 2u);
  EXPECT_EQ(rank(RationalMatrix{{1, 2, 3}, {2, 4, 6}, {3, 6, 9}}), 1u);
  EXPECT_EQ(rank(RationalMatrix(0, 3)), 0u);
}

TEST(Rank, MatchesMinorOracleAndTranspose) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t rows = 1 + rng() % 4, cols = 1 + rng() % 4;
    // Low-rank products as well as generic matrices.
    const std::size_t inner = 1 + rng() % 2;
    const RationalMatrix m = trial % 2 ? random_matrix(rng, rows, inner) * random_matrix(rng, inner, cols)
                                       : random_matrix(rng, rows, cols);
    EXPECT_EQ(rank(m), minor_rank(m));
    EXPECT_EQ(rank(m), rank(m.transpose()));
  }
}

TEST(Kernel, HandExamples) {
  const Subspace k2 = kernel_basis(kB2);
  EXPECT_EQ(k2, Subspace::span(RationalMatrix{{1}, {0}, {0}}));
  EXPECT_EQ(kernel_basis(RationalMatrix::identity(3)).dim(), 0u);
  EXPECT_EQ(kernel_basis(RationalMatrix{{1, -1}}), Subspace::span(RationalMatrix{{1}, {1}}));
}

TEST(Kernel, IsExactOnRandomMatrices) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const RationalMatrix m = random_matrix(rng, 1 + rng() % 4, 1 + rng() % 5);
    const Subspace k = kernel_basis(m);
    EXPECT_EQ(k.dim() + rank(m), m.cols());
    EXPECT_TRUE(is_zero(m * k.basis()));
  }
}

TEST(Image, HandExamples) {
  const Subspace e1 = Subspace::span(RationalMatrix{{1}, {0}, {0}});
  EXPECT_EQ(subspace_image(kB1, e1), Subspace::span(RationalMatrix{{1}, {0}}));
  EXPECT_EQ(subspace_image(kB2, e1).dim(), 0u);
  EXPECT_EQ(subspace_image(kB1, Subspace::full(3)), Subspace::full(2));
  EXPECT_THROW(subspace_image(kB1, Subspace::full(2)), std::invalid_argument);
}

TEST(Image, ContainsEveryMappedBasisVector) {
  std::mt19937 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 4;
    const RationalMatrix m = random_matrix(rng, 1 + rng() % 4, n);
    const Subspace v = random_subspace(rng, n);
    const Subspace w = subspace_image(m, v);
    EXPECT_TRUE(w.contains(m * v.basis()));
    EXPECT_EQ(w.dim(), rank(m * v.basis()));
  }
}

TEST(SumIntersection, HandExamples) {
  const Subspace x = Subspace::span(RationalMatrix{{1}, {0}});
  const Subspace y = Subspace::span(RationalMatrix{{0}, {1}});
  EXPECT_EQ(subspace_sum(x, y), Subspace::full(2));
  EXPECT_EQ(subspace_intersection(kernel_basis(kB1), kernel_basis(kB2)).dim(), 0u);
  EXPECT_EQ(subspace_sum(x, x), x);
  EXPECT_EQ(subspace_intersection(x, x), x);
  EXPECT_THROW(subspace_sum(x, Subspace::full(3)), std::invalid_argument);
}

TEST(SumIntersection, GrassmannIdentityOnRandomSubspaces) {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 5;
    const Subspace u = random_subspace(rng, n);
    const Subspace v = random_subspace(rng, n);
    const Subspace s = subspace_sum(u, v);
    const Subspace i = subspace_intersection(u, v);
    EXPECT_EQ(s.dim() + i.dim(), u.dim() + v.dim());
    EXPECT_TRUE(s.contains(u) && s.contains(v));
    EXPECT_TRUE(u.contains(i) && v.contains(i));
  }
}

TEST(Subspace, CanonicalBasisMakesEqualSpansEqual) {
  const Subspace a = Subspace::span(RationalMatrix{{1, 1}, {1, -1}, {0, 0}});
  const Subspace b = Subspace::span(RationalMatrix{{2, 0}, {0, 3}, {0, 0}});
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.key(), b.key());
  EXPECT_EQ(Subspace::zero(3).basis().cols(), 0u);
  EXPECT_EQ(Subspace::zero(3).ambient_dim(), 3u);
}

TEST(Subspace, ComplementAndPreimage) {
  std::mt19937 rng(19);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 4;
    const Subspace v = random_subspace(rng, n);
    const Subspace perp = orthogonal_complement(v);
    EXPECT_EQ(v.dim() + perp.dim(), n);
    EXPECT_TRUE(is_zero(v.basis().transpose() * perp.basis()));

    const RationalMatrix m = random_matrix(rng, 1 + rng() % 3, n);
    const Subspace w = random_subspace(rng, m.rows());
    const Subspace pre = preimage(m, w);
    EXPECT_TRUE(w.contains(m * pre.basis()));
    EXPECT_TRUE(pre.contains(kernel_basis(m)));
  }
}

TEST(Logdet, HandExamples) {
  EXPECT_DOUBLE_EQ(logdet_spd(RealMatrix::identity(4)), 0.0);
  EXPECT_NEAR(logdet_spd(RealMatrix{{2, 0}, {0, 3}}), std::log(6.0), 1e-15);
  EXPECT_THROW(logdet_spd(RealMatrix{{1, 2}, {2, 1}}), NotPositiveDefinite);
  EXPECT_THROW(SpdMatrix(RealMatrix{{1, 2}, {2, 1}}), NotPositiveDefinite);
  EXPECT_THROW(SpdMatrix(RealMatrix{{1, 0.5}, {0, 1}}), std::invalid_argument);
}

TEST(Logdet, MatchesDiagonalProductOfRandomFactors) {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> off(-2.0, 2.0), diag(0.1, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 6;
    RealMatrix l(n, n);
    double prod = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      l(i, i) = diag(rng);
      prod *= l(i, i);
      for (std::size_t k = 0; k < i; ++k) l(i, k) = off(rng);
    }
    const double got = std::exp(logdet_spd(symmetrize(l * l.transpose())));
    EXPECT_NEAR(got / (prod * prod), 1.0, 1e-10);
  }
}

TEST(Inverse, SpdInverseIsTwoSided) {
  const RealMatrix a{{4, 1, 0}, {1, 3, 1}, {0, 1, 2}};
  const RealMatrix inv = spd_inverse(a);
  const RealMatrix prod = a * inv;
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(prod(r, c), r == c ? 1.0 : 0.0, 1e-13);
}
