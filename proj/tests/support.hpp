#pragma once

#include "qbl/core.hpp"
#include "qbl/io.hpp"

#include <random>
#include <string>

namespace qbl::testing {

inline QuiverDatum load_fixture(const std::string& name) { return parse_datum(read_file(std::string(QBL_FIXTURES) + "/" + name)); }

inline std::string fixture_path(const std::string& name) { return std::string(QBL_FIXTURES) + "/" + name; }

struct RandomDatumLimits {
  std::size_t max_sources = 2;
  std::size_t max_targets = 3;
  std::size_t max_dim = 4;
  std::size_t max_arrows = 5;
};

// Random valid datum: every vertex has an arrow, every matrix has full row rank, w_j random in
// [0, 1] with small denominators. Scaling is not enforced.
inline QuiverDatum random_datum(std::mt19937_64& rng, const RandomDatumLimits& lim = {}) {
  auto pick = [&rng](std::size_t lo, std::size_t hi) { return lo + rng() % (hi - lo + 1); };
  for (;;) {
    QuiverDatum d;
    const std::size_t n = pick(1, lim.max_sources);
    const std::size_t m = pick(1, lim.max_targets);
    if (std::max(n, m) > lim.max_arrows) continue;
    for (std::size_t i = 0; i < n; ++i) d.source_dims.push_back(pick(1, lim.max_dim));
    for (std::size_t j = 0; j < m; ++j) d.target_dims.push_back(pick(1, lim.max_dim));
    const std::size_t arrows = pick(std::max(n, m), lim.max_arrows);
    std::vector<std::pair<std::size_t, std::size_t>> ends;
    for (std::size_t k = 0; k < arrows; ++k)
      ends.emplace_back(k < n ? k : rng() % n, k < m ? k : rng() % m);
    bool ok = true;
    for (std::size_t a = 0; a < ends.size() && ok; ++a) {
      const auto [s, t] = ends[a];
      if (d.target_dims[t] > d.source_dims[s]) {
        ok = false;
        break;
      }
      for (int attempt = 0;; ++attempt) {
        RationalMatrix b(d.target_dims[t], d.source_dims[s]);
        for (auto& v : b.data()) v = static_cast<long>(rng() % 5) - 2;
        if (rank(b) == b.rows()) {
          d.arrows.push_back(Arrow{s, t, b, a});
          break;
        }
        if (attempt > 50) {
          ok = false;
          break;
        }
      }
    }
    if (!ok) continue;
    for (std::size_t j = 0; j < m; ++j) d.inv_exponents.emplace_back(static_cast<long>(rng() % 5), 4);
    for (auto& w : d.inv_exponents) w.canonicalize();
    if (validate_datum(d).ok) return d;
  }
}

// Random datum whose exponents are rescaled so that Σ_i d_i = Σ_j α_j w_j e_j exactly.
inline QuiverDatum random_scaled_datum(std::mt19937_64& rng, const RandomDatumLimits& lim = {}) {
  for (;;) {
    QuiverDatum d = random_datum(rng, lim);
    Rational total_source;
    for (auto n : d.source_dims) total_source += n;
    std::vector<Rational> r(d.num_targets());
    Rational weighted;
    for (std::size_t j = 0; j < d.num_targets(); ++j) {
      r[j] = Rational(static_cast<long>(1 + rng() % 4));
      weighted += r[j] * Rational(static_cast<long>(alpha(d, j) * d.target_dims[j]));
    }
    bool ok = true;
    for (std::size_t j = 0; j < d.num_targets(); ++j) {
      d.inv_exponents[j] = total_source * r[j] / weighted;
      d.inv_exponents[j].canonicalize();
      ok = ok && d.inv_exponents[j] <= 1;
    }
    if (ok) return d;
  }
}

// Exact test that every M_i is positive definite: the arrows with w_j > 0 out of each source
// have trivial common kernel.
inline bool objective_defined(const QuiverDatum& d) {
  for (std::size_t i = 0; i < d.num_sources(); ++i) {
    std::vector<std::vector<Rational>> rows;
    for (const auto& a : d.arrows) {
      if (a.source != i || d.inv_exponents[a.target] == 0) continue;
      for (std::size_t r = 0; r < a.matrix.rows(); ++r) {
        rows.emplace_back();
        for (std::size_t c = 0; c < a.matrix.cols(); ++c) rows.back().push_back(a.matrix(r, c));
      }
    }
    RationalMatrix stacked(rows.size(), d.source_dims[i]);
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < d.source_dims[i]; ++c) stacked(r, c) = rows[r][c];
    if (rank(stacked) != d.source_dims[i]) return false;
  }
  return true;
}

}  // namespace qbl::testing
