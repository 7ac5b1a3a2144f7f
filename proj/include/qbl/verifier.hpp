#pragma once

// Numerical probes of the quiver inequality
//
//   Π_i ∫_{H_i} Π_{a: i→j} f_a(B_a x) dx  ≤  C · Π_a ‖f_a‖_{L^{p_j}(H^j)}
//
// for concrete test functions, and the scaling construction that turns a dimension-condition
// witness into a family whose ratio blows up like a power of R.

#include "qbl/conditions.hpp"
#include "qbl/core.hpp"
#include "qbl/dense.hpp"
#include "qbl/exact.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

namespace qbl {

/// x ↦ exp(−π⟨Ax, x⟩).
struct GaussianFunction {
  RealMatrix a;
};

struct Box {
  std::vector<Rational> lo;
  std::vector<Rational> hi;
};

/// Indicator of a finite union of closed axis-aligned boxes.
struct BoxUnion {
  std::vector<Box> boxes;
};

/// One-dimensional x ↦ |x|^{−p/2} for |x| ≥ 1, zero otherwise; square integrable for p > 1.
struct PowerLaw {
  double exponent = 2.0;
};

using TestFunction = std::variant<GaussianFunction, BoxUnion, PowerLaw>;

enum class RatioMethod { ClosedForm, ExactSlice, MonteCarlo };

inline const char* to_string(RatioMethod m) {
  switch (m) {
    case RatioMethod::ClosedForm: return "closed-form";
    case RatioMethod::ExactSlice: return "exact-slice";
    case RatioMethod::MonteCarlo: return "monte-carlo";
  }
  return "?";
}

struct RatioReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  std::optional<double> lhs_stderr;  // Monte Carlo only
  std::optional<double> ratio_stderr;
  RatioMethod method = RatioMethod::ClosedForm;
  bool degenerate = false;  // 0/0
};

namespace detail {

inline void finish_ratio(RatioReport& r) {
  if (r.rhs == 0.0) {
    r.degenerate = r.lhs == 0.0;
    r.ratio = r.degenerate ? std::numeric_limits<double>::quiet_NaN() : std::numeric_limits<double>::infinity();
    return;
  }
  r.ratio = r.lhs / r.rhs;
}

inline void check_box(const Box& b, std::size_t dim) {
  if (b.lo.size() != dim || b.hi.size() != dim) throw std::invalid_argument("box dimension mismatch");
  for (std::size_t k = 0; k < dim; ++k)
    if (!(b.lo[k] < b.hi[k])) throw std::invalid_argument("degenerate box");
}

// Exact measure of a box union by coordinate compression.
inline Rational union_measure(const BoxUnion& u, std::size_t dim) {
  if (u.boxes.empty()) return Rational(0);
  for (const auto& b : u.boxes) check_box(b, dim);
  std::vector<std::vector<Rational>> cuts(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    for (const auto& b : u.boxes) {
      cuts[k].push_back(b.lo[k]);
      cuts[k].push_back(b.hi[k]);
    }
    std::sort(cuts[k].begin(), cuts[k].end());
    cuts[k].erase(std::unique(cuts[k].begin(), cuts[k].end()), cuts[k].end());
  }
  Rational total;
  std::vector<std::size_t> cell(dim, 0);
  while (true) {
    bool inside = false;
    for (const auto& b : u.boxes) {
      bool in = true;
      for (std::size_t k = 0; k < dim && in; ++k) in = b.lo[k] <= cuts[k][cell[k]] && cuts[k][cell[k] + 1] <= b.hi[k];
      if (in) {
        inside = true;
        break;
      }
    }
    if (inside) {
      Rational vol = 1;
      for (std::size_t k = 0; k < dim; ++k) vol *= cuts[k][cell[k] + 1] - cuts[k][cell[k]];
      total += vol;
    }
    std::size_t k = 0;
    while (k < dim && ++cell[k] + 1 >= cuts[k].size()) cell[k++] = 0;
    if (k == dim) break;
  }
  return total;
}

inline double evaluate(const TestFunction& f, const std::vector<double>& y) {
  if (const auto* g = std::get_if<GaussianFunction>(&f)) {
    double q = 0.0;
    for (std::size_t r = 0; r < y.size(); ++r)
      for (std::size_t c = 0; c < y.size(); ++c) q += y[r] * g->a(r, c) * y[c];
    return std::exp(-M_PI * q);
  }
  if (const auto* u = std::get_if<BoxUnion>(&f)) {
    for (const auto& b : u->boxes) {
      bool in = true;
      for (std::size_t k = 0; k < y.size() && in; ++k) in = b.lo[k].get_d() <= y[k] && y[k] <= b.hi[k].get_d();
      if (in) return 1.0;
    }
    return 0.0;
  }
  const auto& pl = std::get<PowerLaw>(f);
  const double ax = std::abs(y.at(0));
  return ax >= 1.0 ? std::pow(ax, -0.5 * pl.exponent) : 0.0;
}

// ‖f‖_{L^p(R^dim)} with w = 1/p, in closed form.
inline double lp_norm(const TestFunction& f, const Rational& w_exact, std::size_t dim) {
  const double w = w_exact.get_d();
  if (const auto* g = std::get_if<GaussianFunction>(&f)) {
    // ∫ exp(−πp⟨Ax,x⟩) = det(pA)^{−1/2}; sup = 1 when p = ∞.
    if (w == 0.0) return 1.0;
    const double logdet = logdet_spd(g->a);
    return std::exp(-0.5 * w * logdet + 0.5 * static_cast<double>(dim) * w * std::log(w));
  }
  if (const auto* u = std::get_if<BoxUnion>(&f)) {
    const Rational m = union_measure(*u, dim);
    if (m == 0) return 0.0;
    return w == 0.0 ? 1.0 : std::pow(m.get_d(), w);
  }
  const auto& pl = std::get<PowerLaw>(f);
  if (dim != 1) throw std::invalid_argument("power-law test functions are one-dimensional");
  if (w == 0.0) return 1.0;
  // ∫_{|x|≥1} |x|^{−(p/2)·q} dx = 2 / ((p/2)q − 1) for q = 1/w.
  const double s = 0.5 * pl.exponent / w;
  if (!(s > 1.0)) return std::numeric_limits<double>::infinity();
  return std::pow(2.0 / (s - 1.0), w);
}

}  // namespace detail

/// Ratio for Gaussian test functions f_a(y) = exp(−π⟨A_a y, y⟩), one matrix per arrow:
///   LHS = Π_i det(Σ_{a: i→·} B_aᵀ A_a B_a)^{−1/2},  ‖f_a‖_p = det(A_a)^{−w/2} w^{e w/2}.
/// Throws NotPositiveDefinite when a source form is singular (LHS = ∞).
inline RatioReport ratio_gaussian(const QuiverDatum& d, const std::vector<RealMatrix>& per_arrow) {
  require_valid(d);
  if (per_arrow.size() != d.arrows.size()) throw std::invalid_argument("ratio_gaussian: one matrix per arrow");
  double log_lhs = 0.0;
  for (std::size_t i = 0; i < d.num_sources(); ++i) {
    RealMatrix m(d.source_dims[i], d.source_dims[i]);
    for (std::size_t a = 0; a < d.arrows.size(); ++a) {
      if (d.arrows[a].source != i) continue;
      const RealMatrix b = d.arrows[a].real_matrix();
      m += b.transpose() * per_arrow[a] * b;
    }
    log_lhs -= 0.5 * logdet_spd(symmetrize(m));
  }
  double log_rhs = 0.0;
  for (std::size_t a = 0; a < d.arrows.size(); ++a) {
    const auto j = d.arrows[a].target;
    log_rhs += std::log(detail::lp_norm(GaussianFunction{per_arrow[a]}, d.inv_exponents[j], d.target_dims[j]));
  }
  RatioReport r;
  r.method = RatioMethod::ClosedForm;
  r.lhs = std::exp(log_lhs);
  r.rhs = std::exp(log_rhs);
  r.ratio = std::exp(log_lhs - log_rhs);
  return r;
}

/// Per-arrow matrices α_j w_j A_j that realize the Gaussian quiver objective at `p`.
inline std::vector<RealMatrix> gaussian_assignment(const QuiverDatum& d, const std::vector<RealMatrix>& per_target) {
  std::vector<RealMatrix> out;
  for (const auto& a : d.arrows) {
    const double c = static_cast<double>(alpha(d, a.target)) * d.inv_exponents[a.target].get_d();
    if (c == 0.0) throw std::invalid_argument("gaussian_assignment: target with p = inf");
    out.push_back(c * per_target.at(a.target));
  }
  return out;
}

struct ChainSlices {
  Rational lhs;      // ∫ 1_S(x1, x2) 1_S(x2, x3) dx
  Rational measure;  // |S|
};

/// Exact slice integration of ∫_{R³} 1_S(x₁,x₂)·1_S(x₂,x₃) dx for a planar box union S: the
/// integrand factors for fixed x₂ into a row length and a column length, both piecewise constant.
inline ChainSlices chain_slice_integral(const BoxUnion& s) {
  for (const auto& b : s.boxes) detail::check_box(b, 2);
  std::vector<Rational> cuts;
  for (const auto& b : s.boxes)
    for (std::size_t k = 0; k < 2; ++k) {
      cuts.push_back(b.lo[k]);
      cuts.push_back(b.hi[k]);
    }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  // Length of the union of [lo, hi] intervals.
  auto covered = [](std::vector<std::pair<Rational, Rational>> iv) {
    std::sort(iv.begin(), iv.end());
    Rational total;
    Rational end;
    bool open = false;
    Rational start;
    for (const auto& [lo, hi] : iv) {
      if (!open || lo > end) {
        if (open) total += end - start;
        start = lo;
        end = hi;
        open = true;
      } else if (hi > end) {
        end = hi;
      }
    }
    if (open) total += end - start;
    return total;
  };

  ChainSlices out;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const Rational mid = (cuts[k] + cuts[k + 1]) / 2;
    std::vector<std::pair<Rational, Rational>> row;  // x₁ with (x₁, mid) ∈ S
    std::vector<std::pair<Rational, Rational>> col;  // x₃ with (mid, x₃) ∈ S
    for (const auto& b : s.boxes) {
      if (b.lo[1] <= mid && mid <= b.hi[1]) row.emplace_back(b.lo[0], b.hi[0]);
      if (b.lo[0] <= mid && mid <= b.hi[0]) col.emplace_back(b.lo[1], b.hi[1]);
    }
    const Rational width = cuts[k + 1] - cuts[k];
    const Rational r = covered(row);
    out.lhs += width * r * covered(col);
    out.measure += width * r;
  }
  return out;
}

/// S = ([0,N]×[0,1]) ∪ ([0,1]×[0,N]).
inline BoxUnion cross_set(const Rational& n) {
  if (n < 1) throw std::invalid_argument("cross_set: N must be at least 1");
  BoxUnion s;
  s.boxes.push_back(Box{{0, 0}, {n, 1}});
  s.boxes.push_back(Box{{0, 0}, {1, n}});
  return s;
}

/// The chain x ↦ (x₁,x₂), (x₂,x₃) with p = 4/3 and f = 1_S on both arrows:
/// LHS exactly, RHS = ‖1_S‖_{4/3}² = |S|^{3/2}.
inline RatioReport ratio_boxes_chain(const Rational& n) {
  if (n < 1) throw std::invalid_argument("ratio_boxes_chain: N must be at least 1");
  const ChainSlices exact = chain_slice_integral(cross_set(n));
  RatioReport r;
  r.method = RatioMethod::ExactSlice;
  r.lhs = exact.lhs.get_d();
  r.rhs = std::pow(exact.measure.get_d(), 1.5);
  detail::finish_ratio(r);
  return r;
}

/// ∫ f(b₁x) f(b₂x) dx / ‖f‖₂² for the power-law f with exponent p, |b₁| ≤ |b₂| after swapping:
/// |b₁b₂|^{−p/2} · |b₁|^{p−1}.
inline RatioReport ratio_powerlaw(double b1, double b2, double p) {
  if (!(p > 1.0)) throw std::invalid_argument("ratio_powerlaw: p must exceed 1 (norm is infinite)");
  if (b1 == 0.0 || b2 == 0.0) throw std::invalid_argument("ratio_powerlaw: coefficients must be nonzero");
  double lo = std::abs(b1);
  double hi = std::abs(b2);
  if (lo > hi) std::swap(lo, hi);
  RatioReport r;
  r.method = RatioMethod::ClosedForm;
  r.rhs = 2.0 / (p - 1.0);
  r.lhs = std::pow(lo * hi, -0.5 * p) * std::pow(lo, p - 1.0) * r.rhs;
  r.ratio = std::pow(lo * hi, -0.5 * p) * std::pow(lo, p - 1.0);
  return r;
}

/// Axis-aligned integration region for one source.
struct Region {
  std::vector<double> lo;
  std::vector<double> hi;
};

struct MonteCarloConfig {
  std::size_t budget = 1'000'000;  // samples per source
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

namespace detail {

inline std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Counter-based uniform in [0, 1): a pure function of (seed, source, sample, coordinate).
inline double counter_uniform(std::uint64_t seed, std::uint64_t source, std::uint64_t sample, std::uint64_t coord) {
  const std::uint64_t h = splitmix(splitmix(splitmix(seed ^ (source * 0xD1B54A32D192ED03ull)) ^ sample) ^ coord);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline double pairwise_sum(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
  if (hi - lo <= 8) {
    double s = 0.0;
    for (std::size_t k = lo; k < hi; ++k) s += v[k];
    return s;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

struct SourceEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
};

// Stratified uniform sampling: s strata per axis, n samples per stratum.
inline SourceEstimate integrate_source(const QuiverDatum& d, std::size_t source,
                                       const std::vector<TestFunction>& functions, const Region& region,
                                       const MonteCarloConfig& config) {
  const std::size_t dim = d.source_dims[source];
  std::size_t per_axis = static_cast<std::size_t>(std::floor(std::pow(config.budget / 16.0, 1.0 / dim)));
  per_axis = std::clamp<std::size_t>(per_axis, 1, 4096);
  std::size_t strata = 1;
  for (std::size_t k = 0; k < dim; ++k) strata *= per_axis;
  const std::size_t per_stratum = std::max<std::size_t>(2, config.budget / strata);

  std::vector<RealMatrix> maps;
  std::vector<std::size_t> incident = d.arrows_from(source);
  for (auto a : incident) maps.push_back(d.arrows[a].real_matrix());

  std::vector<double> mean(strata), var(strata);
  auto work = [&](std::size_t first, std::size_t last) {
    std::vector<double> x(dim);
    std::vector<std::size_t> idx(dim);
    for (std::size_t st = first; st < last; ++st) {
      std::size_t rem = st;
      for (std::size_t k = 0; k < dim; ++k) {
        idx[k] = rem % per_axis;
        rem /= per_axis;
      }
      double sum = 0.0, sumsq = 0.0;
      for (std::size_t s = 0; s < per_stratum; ++s) {
        const std::uint64_t sample = static_cast<std::uint64_t>(st) * per_stratum + s;
        for (std::size_t k = 0; k < dim; ++k) {
          const double width = (region.hi[k] - region.lo[k]) / static_cast<double>(per_axis);
          x[k] = region.lo[k] + width * (static_cast<double>(idx[k]) + counter_uniform(config.seed, source, sample, k));
        }
        double v = 1.0;
        for (std::size_t q = 0; q < incident.size() && v != 0.0; ++q) {
          const RealMatrix& b = maps[q];
          std::vector<double> y(b.rows(), 0.0);
          for (std::size_t r = 0; r < b.rows(); ++r)
            for (std::size_t c = 0; c < b.cols(); ++c) y[r] += b(r, c) * x[c];
          v *= evaluate(functions[incident[q]], y);
        }
        sum += v;
        sumsq += v * v;
      }
      const double n = static_cast<double>(per_stratum);
      mean[st] = sum / n;
      var[st] = std::max(0.0, (sumsq - sum * sum / n) / (n - 1.0));
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(config.workers, 1, strata);
  if (workers == 1) {
    work(0, strata);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back(work, strata * w / workers, strata * (w + 1) / workers);
    for (auto& t : pool) t.join();
  }
  double volume = 1.0;
  for (std::size_t k = 0; k < dim; ++k) volume *= region.hi[k] - region.lo[k];
  const double cell = volume / static_cast<double>(strata);
  for (auto& v : var) v /= static_cast<double>(per_stratum);
  SourceEstimate e;
  e.value = cell * pairwise_sum(mean, 0, strata);
  e.stderr_ = cell * std::sqrt(pairwise_sum(var, 0, strata));
  return e;
}

}  // namespace detail

/// Monte Carlo estimate of the left side over declared per-source regions, closed-form norms on
/// the right. Deterministic in the seed and independent of the worker count.
inline RatioReport ratio_monte_carlo(const QuiverDatum& d, const std::vector<TestFunction>& per_arrow,
                                     const std::vector<Region>& regions, const MonteCarloConfig& config) {
  require_valid(d);
  if (config.budget == 0) throw std::invalid_argument("ratio_monte_carlo: zero sample budget");
  if (per_arrow.size() != d.arrows.size()) throw std::invalid_argument("ratio_monte_carlo: one function per arrow");
  if (regions.size() != d.num_sources())
    throw std::invalid_argument("ratio_monte_carlo: unbounded support without a bounding box per source");
  for (std::size_t i = 0; i < regions.size(); ++i) {
    if (regions[i].lo.size() != d.source_dims[i] || regions[i].hi.size() != d.source_dims[i])
      throw std::invalid_argument("ratio_monte_carlo: bounding box dimension mismatch");
    for (std::size_t k = 0; k < d.source_dims[i]; ++k)
      if (!(regions[i].lo[k] < regions[i].hi[k]) || !std::isfinite(regions[i].hi[k] - regions[i].lo[k]))
        throw std::invalid_argument("ratio_monte_carlo: bounding box must be finite and nondegenerate");
  }
  for (std::size_t a = 0; a < d.arrows.size(); ++a) {
    const std::size_t e = d.target_dims[d.arrows[a].target];
    if (const auto* g = std::get_if<GaussianFunction>(&per_arrow[a])) {
      if (g->a.rows() != e) throw std::invalid_argument("ratio_monte_carlo: Gaussian dimension mismatch");
      SpdMatrix check(g->a);
    } else if (const auto* u = std::get_if<BoxUnion>(&per_arrow[a])) {
      for (const auto& b : u->boxes) detail::check_box(b, e);
    } else if (e != 1 || !(std::get<PowerLaw>(per_arrow[a]).exponent > 1.0)) {
      throw std::invalid_argument("ratio_monte_carlo: power law needs a 1-D target and exponent > 1");
    }
  }

  RatioReport r;
  r.method = RatioMethod::MonteCarlo;
  double rel_var = 0.0;
  r.lhs = 1.0;
  for (std::size_t i = 0; i < d.num_sources(); ++i) {
    const auto e = detail::integrate_source(d, i, per_arrow, regions[i], config);
    r.lhs *= e.value;
    if (e.value > 0.0) rel_var += (e.stderr_ / e.value) * (e.stderr_ / e.value);
  }
  r.lhs_stderr = r.lhs * std::sqrt(rel_var);
  r.rhs = 1.0;
  for (std::size_t a = 0; a < d.arrows.size(); ++a) {
    const auto j = d.arrows[a].target;
    r.rhs *= detail::lp_norm(per_arrow[a], d.inv_exponents[j], d.target_dims[j]);
  }
  detail::finish_ratio(r);
  if (!r.degenerate && r.rhs > 0.0) r.ratio_stderr = *r.lhs_stderr / r.rhs;
  return r;
}

// ---------------------------------------------------------------------------------------------
// Blow-up construction from a dimension-condition witness.

struct CounterexampleParams {
  double big_r = 1.0;    // R ≥ 1
  double small_r = 1.0;  // r ∈ (0, 1]
  double shrink = 0.0;   // c > 0; 0 selects the default
};

enum class SweepAxis { BigR, SmallR };

struct GrowthRow {
  double parameter = 0.0;
  double lhs = 0.0;  // Π_i |S_i|, a lower bound for the left side
  double rhs = 0.0;  // Π_a |2S^a|^{w_j}
  double ratio = 0.0;
};

struct GrowthReport {
  SweepAxis axis = SweepAxis::BigR;
  std::vector<GrowthRow> rows;
  double slope = 0.0;     // fitted d log(ratio) / d log(parameter)
  Rational exponent;      // exact predicted slope
  double shrink = 0.0;    // c actually used
  bool containment_verified = false;
};

/// Geometric grid from `from` to `to` with `per_decade` points per factor of ten (endpoints included).
inline std::vector<double> geometric_grid(double from, double to, std::size_t per_decade = 1) {
  if (!(from > 0.0) || !(to >= from) || per_decade == 0) throw std::invalid_argument("geometric_grid: bad range");
  const double decades = std::log10(to / from);
  const auto steps = static_cast<std::size_t>(std::llround(decades * static_cast<double>(per_decade)));
  std::vector<double> grid;
  for (std::size_t k = 0; k <= steps; ++k)
    grid.push_back(steps == 0 ? from : from * std::pow(to / from, static_cast<double>(k) / static_cast<double>(steps)));
  return grid;
}

namespace detail {

// Orthonormal columns spanning the same space (classical Gram–Schmidt, twice).
inline RealMatrix orthonormal_basis(const Subspace& v) {
  RealMatrix q = to_real(v.basis());
  for (std::size_t k = 0; k < q.cols(); ++k) {
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t prev = 0; prev < k; ++prev) {
        double dot = 0.0;
        for (std::size_t r = 0; r < q.rows(); ++r) dot += q(r, prev) * q(r, k);
        for (std::size_t r = 0; r < q.rows(); ++r) q(r, k) -= dot * q(r, prev);
      }
    double nrm = 0.0;
    for (std::size_t r = 0; r < q.rows(); ++r) nrm += q(r, k) * q(r, k);
    nrm = std::sqrt(nrm);
    for (std::size_t r = 0; r < q.rows(); ++r) q(r, k) /= nrm;
  }
  return q;
}

inline double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  return sxx == 0.0 ? 0.0 : sxy / sxx;
}

}  // namespace detail

/// Default shrink factor: S_i is a box with half-widths cR along an orthonormal basis of V_i and
/// cr along V_i^⊥, so its vertices have norm ≤ c·R·√dim H_i. With c = 1/(2·max‖B_a‖_F·√max dim H_i)
/// every image vertex has norm ≤ R/2 + r/2, which keeps B_a S_i inside 2S^a.
inline double default_shrink(const QuiverDatum& d) {
  double worst = 0.0;
  for (const auto& a : d.arrows) worst = std::max(worst, frobenius_norm(a.real_matrix()));
  std::size_t max_dim = 1;
  for (auto n : d.source_dims) max_dim = std::max(max_dim, n);
  return 1.0 / (2.0 * worst * std::sqrt(static_cast<double>(max_dim)));
}

/// Builds S_i and S^a = {‖w‖ ≤ R on W^a = B_a V_i, ‖w'‖ ≤ r on (W^a)^⊥} (as boxes in orthonormal
/// frames), checks B_a S_i ⊆ 2S^a on every vertex, and reports Π|S_i| against Π|2S^a|^{w_j}.
/// The ratio grows like R^{Σ dim V_i − Σ_a w_j dim W^a} (or r^{Σ codim V_i − Σ_a w_j codim W^a}).
inline GrowthReport counterexample_from_witness(const QuiverDatum& d, const SubspaceFamily& family, SweepAxis axis,
                                                const std::vector<double>& values, double fixed,
                                                double shrink = 0.0) {
  require_valid(d);
  if (family.subspaces.empty()) throw std::invalid_argument("counterexample_from_witness: empty family");
  check_family_dims(d, family);
  if (values.size() < 2) throw std::invalid_argument("counterexample_from_witness: need at least two sweep values");

  GrowthReport report;
  report.axis = axis;
  report.shrink = shrink > 0.0 ? shrink : default_shrink(d);
  const double c = report.shrink;

  // Exact exponent along the swept axis.
  const DimensionTerms dims = evaluate_dimension_inequality(d, family, Variant::PerArrow);
  if (axis == SweepAxis::BigR) {
    report.exponent = dims.lhs - dims.rhs;
  } else {
    Rational codim_lhs;
    Rational codim_rhs;
    for (std::size_t i = 0; i < d.num_sources(); ++i) codim_lhs += d.source_dims[i] - family.subspaces[i].dim();
    for (const auto& a : d.arrows)
      codim_rhs += d.inv_exponents[a.target] *
                   Rational(d.target_dims[a.target] - rank(a.matrix * family.subspaces[a.source].basis()));
    report.exponent = codim_lhs - codim_rhs;
  }

  struct Frames {
    RealMatrix v, v_perp;
  };
  std::vector<Frames> source_frames;
  for (std::size_t i = 0; i < d.num_sources(); ++i)
    source_frames.push_back({detail::orthonormal_basis(family.subspaces[i]),
                             detail::orthonormal_basis(orthogonal_complement(family.subspaces[i]))});
  std::vector<Frames> target_frames;
  std::vector<std::size_t> image_dims;
  for (const auto& a : d.arrows) {
    const Subspace w = subspace_image(a.matrix, family.subspaces[a.source]);
    image_dims.push_back(w.dim());
    target_frames.push_back({detail::orthonormal_basis(w), detail::orthonormal_basis(orthogonal_complement(w))});
  }

  report.containment_verified = true;
  std::vector<double> xs, ys;
  for (double value : values) {
    const double big_r = axis == SweepAxis::BigR ? value : fixed;
    const double small_r = axis == SweepAxis::BigR ? fixed : value;
    if (!(small_r > 0.0) || small_r > 1.0 || big_r < 1.0)
      throw std::invalid_argument("counterexample_from_witness: need 0 < r <= 1 <= R");

    double log_lhs = 0.0;
    for (std::size_t i = 0; i < d.num_sources(); ++i) {
      const double k = static_cast<double>(family.subspaces[i].dim());
      const double codim = static_cast<double>(d.source_dims[i]) - k;
      log_lhs += k * std::log(2.0 * c * big_r) + codim * std::log(2.0 * c * small_r);
    }
    double log_rhs = 0.0;
    for (std::size_t a = 0; a < d.arrows.size(); ++a) {
      const auto j = d.arrows[a].target;
      const double k = static_cast<double>(image_dims[a]);
      const double codim = static_cast<double>(d.target_dims[j]) - k;
      log_rhs += d.inv_exponents[j].get_d() * (k * std::log(4.0 * big_r) + codim * std::log(4.0 * small_r));
    }

    // Vertex check of B_a S_i ⊆ 2S^a.
    for (std::size_t a = 0; a < d.arrows.size() && report.containment_verified; ++a) {
      const auto& arrow = d.arrows[a];
      const std::size_t n = d.source_dims[arrow.source];
      const Frames& sf = source_frames[arrow.source];
      const Frames& tf = target_frames[a];
      const RealMatrix b = arrow.real_matrix();
      const std::uint64_t vertices = n <= 16 ? (std::uint64_t{1} << n) : 65536;
      for (std::uint64_t mask = 0; mask < vertices && report.containment_verified; ++mask) {
        const std::uint64_t bits = n <= 16 ? mask : detail::splitmix(mask);
        std::vector<double> x(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
          const bool along_v = k < sf.v.cols();
          const double half = along_v ? c * big_r : c * small_r;
          const double sign = (bits >> k & 1u) ? 1.0 : -1.0;
          for (std::size_t r = 0; r < n; ++r)
            x[r] += sign * half * (along_v ? sf.v(r, k) : sf.v_perp(r, k - sf.v.cols()));
        }
        std::vector<double> y(b.rows(), 0.0);
        for (std::size_t r = 0; r < b.rows(); ++r)
          for (std::size_t q = 0; q < n; ++q) y[r] += b(r, q) * x[q];
        auto within = [&](const RealMatrix& frame, double limit) {
          for (std::size_t k = 0; k < frame.cols(); ++k) {
            double coord = 0.0;
            for (std::size_t r = 0; r < frame.rows(); ++r) coord += frame(r, k) * y[r];
            if (std::abs(coord) > limit * (1.0 + 1e-9)) return false;
          }
          return true;
        };
        report.containment_verified = within(tf.v, 2.0 * big_r) && within(tf.v_perp, 2.0 * small_r);
      }
    }

    GrowthRow row;
    row.parameter = value;
    row.lhs = std::exp(log_lhs);
    row.rhs = std::exp(log_rhs);
    row.ratio = std::exp(log_lhs - log_rhs);
    report.rows.push_back(row);
    xs.push_back(std::log(value));
    ys.push_back(log_lhs - log_rhs);
  }
  report.slope = detail::least_squares_slope(xs, ys);
  return report;
}

}  // namespace qbl
