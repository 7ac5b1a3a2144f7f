#pragma once

// Bipartite-quiver Brascamp–Lieb data: sources H_1..H_n, targets H^1..H^m, one surjective map per
// arrow, and an inverse exponent w_j = 1/p_j per target (p_j = ∞ is w_j = 0).
//
// Indices are 0-based in the API; the datum file format and the CLI are 1-based.

#include "qbl/exact.hpp"
#include "qbl/matrix.hpp"
#include "qbl/rational.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qbl {

struct Arrow {
  std::size_t source = 0;
  std::size_t target = 0;
  RationalMatrix matrix;  // target_dim × source_dim
  std::size_t id = 0;     // position in the original datum's arrow list

  RealMatrix real_matrix() const { return to_real(matrix); }

  friend bool operator==(const Arrow&, const Arrow&) = default;
};

struct QuiverDatum {
  std::vector<std::size_t> source_dims;
  std::vector<std::size_t> target_dims;
  std::vector<Arrow> arrows;
  std::vector<Rational> inv_exponents;

  std::size_t num_sources() const noexcept { return source_dims.size(); }
  std::size_t num_targets() const noexcept { return target_dims.size(); }

  std::vector<std::size_t> arrows_from(std::size_t source) const {
    std::vector<std::size_t> out;
    for (std::size_t a = 0; a < arrows.size(); ++a)
      if (arrows[a].source == source) out.push_back(a);
    return out;
  }
  std::vector<std::size_t> arrows_to(std::size_t target) const {
    std::vector<std::size_t> out;
    for (std::size_t a = 0; a < arrows.size(); ++a)
      if (arrows[a].target == target) out.push_back(a);
    return out;
  }

  friend bool operator==(const QuiverDatum&, const QuiverDatum&) = default;
};

/// One subspace V_i ≤ H_i per source.
struct SubspaceFamily {
  std::vector<Subspace> subspaces;

  std::size_t total_dim() const {
    std::size_t s = 0;
    for (const auto& v : subspaces) s += v.dim();
    return s;
  }

  static SubspaceFamily zeros(const std::vector<std::size_t>& dims) {
    SubspaceFamily f;
    for (auto d : dims) f.subspaces.push_back(Subspace::zero(d));
    return f;
  }

  friend bool operator==(const SubspaceFamily&, const SubspaceFamily&) = default;
};

inline void check_family_dims(const QuiverDatum& d, const SubspaceFamily& f) {
  if (f.subspaces.size() != d.num_sources())
    throw std::invalid_argument("subspace family has " + std::to_string(f.subspaces.size()) +
                                " members, datum has " + std::to_string(d.num_sources()) + " sources");
  for (std::size_t i = 0; i < f.subspaces.size(); ++i)
    if (f.subspaces[i].ambient_dim() != d.source_dims[i])
      throw std::invalid_argument("subspace " + std::to_string(i + 1) + " has ambient dimension " +
                                  std::to_string(f.subspaces[i].ambient_dim()) + ", expected " +
                                  std::to_string(d.source_dims[i]));
}

struct Violation {
  std::string code;
  std::string message;
  std::string location;
};

struct ValidationReport {
  bool ok = true;
  std::vector<Violation> violations;

  void add(std::string code, std::string message, std::string location) {
    ok = false;
    violations.push_back({std::move(code), std::move(message), std::move(location)});
  }
};

/// Checks every structural invariant; never throws. Locations use 1-based indices.
inline ValidationReport validate_datum(const QuiverDatum& d) {
  ValidationReport report;
  if (d.source_dims.empty()) report.add("no-sources", "datum has no source spaces", "sources");
  if (d.target_dims.empty()) report.add("no-targets", "datum has no target spaces", "targets");
  for (std::size_t i = 0; i < d.source_dims.size(); ++i)
    if (d.source_dims[i] == 0)
      report.add("trivial-space", "source space has dimension 0", "sources[" + std::to_string(i + 1) + "]");
  for (std::size_t j = 0; j < d.target_dims.size(); ++j)
    if (d.target_dims[j] == 0)
      report.add("trivial-space", "target space has dimension 0", "targets[" + std::to_string(j + 1) + "]");
  if (d.inv_exponents.size() != d.target_dims.size())
    report.add("exponent-count", "number of exponents differs from number of targets", "targets");
  for (std::size_t j = 0; j < d.inv_exponents.size(); ++j)
    if (d.inv_exponents[j] < 0 || d.inv_exponents[j] > 1)
      report.add("exponent-out-of-range", "exponent out of range: 1/p = " + to_string(d.inv_exponents[j]) +
                                              " is not in [0, 1] (p must lie in [1, inf])",
                 "targets[" + std::to_string(j + 1) + "]");

  std::vector<bool> source_used(d.source_dims.size(), false);
  std::vector<bool> target_used(d.target_dims.size(), false);
  for (std::size_t a = 0; a < d.arrows.size(); ++a) {
    const Arrow& arrow = d.arrows[a];
    const std::string loc = "arrows[" + std::to_string(a + 1) + "]";
    if (arrow.source >= d.source_dims.size()) {
      report.add("bad-source-index", "arrow source index out of range", loc);
      continue;
    }
    if (arrow.target >= d.target_dims.size()) {
      report.add("bad-target-index", "arrow target index out of range", loc);
      continue;
    }
    source_used[arrow.source] = true;
    target_used[arrow.target] = true;
    const std::size_t e = d.target_dims[arrow.target];
    const std::size_t s = d.source_dims[arrow.source];
    if (arrow.matrix.rows() != e || arrow.matrix.cols() != s) {
      report.add("shape-mismatch",
                 "arrow matrix is " + std::to_string(arrow.matrix.rows()) + "x" +
                     std::to_string(arrow.matrix.cols()) + ", expected " + std::to_string(e) + "x" +
                     std::to_string(s),
                 loc);
      continue;
    }
    if (rank(arrow.matrix) != e) report.add("not-surjective", "arrow not surjective (rank < target dimension)", loc);
  }
  for (std::size_t i = 0; i < source_used.size(); ++i)
    if (!source_used[i])
      report.add("isolated-vertex", "source has no outgoing arrow", "sources[" + std::to_string(i + 1) + "]");
  for (std::size_t j = 0; j < target_used.size(); ++j)
    if (!target_used[j])
      report.add("isolated-vertex", "target has no incoming arrow", "targets[" + std::to_string(j + 1) + "]");
  return report;
}

struct InvalidDatum : std::invalid_argument {
  explicit InvalidDatum(const ValidationReport& r)
      : std::invalid_argument("invalid datum: " +
                              (r.violations.empty() ? std::string("?")
                                                    : r.violations.front().message + " at " +
                                                          r.violations.front().location)) {}
};

inline void require_valid(const QuiverDatum& d) {
  const auto report = validate_datum(d);
  if (!report.ok) throw InvalidDatum(report);
}

/// α_j: number of arrows with target j.
inline std::size_t alpha(const QuiverDatum& d, std::size_t target) {
  if (target >= d.num_targets()) throw std::out_of_range("alpha: target index out of range");
  std::size_t count = 0;
  for (const auto& a : d.arrows) count += a.target == target;
  return count;
}

inline std::vector<std::size_t> alphas(const QuiverDatum& d) {
  std::vector<std::size_t> out(d.num_targets());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = alpha(d, j);
  return out;
}

/// log C_{Q,p} = Σ_j α_j w_j e_j log α_j.
inline double log_c_constant(const QuiverDatum& d) {
  double s = 0.0;
  for (std::size_t j = 0; j < d.num_targets(); ++j) {
    const auto a = alpha(d, j);
    if (a > 1)
      s += static_cast<double>(a) * d.inv_exponents[j].get_d() * static_cast<double>(d.target_dims[j]) *
           std::log(static_cast<double>(a));
  }
  return s;
}

inline double c_constant(const QuiverDatum& d) { return std::exp(log_c_constant(d)); }

/// One subspace quiver per source. Each incident arrow gets its own copy of its target; the
/// copy keeps the original exponent and records where it came from.
struct SplitPart {
  std::size_t source = 0;
  QuiverDatum datum;
  std::vector<std::size_t> origin_target;  // per target of `datum`
  std::vector<std::size_t> origin_arrow;   // per target of `datum` (original arrow id)
};

inline std::vector<SplitPart> split_sources(const QuiverDatum& d) {
  require_valid(d);
  std::vector<SplitPart> parts;
  for (std::size_t i = 0; i < d.num_sources(); ++i) {
    SplitPart part;
    part.source = i;
    part.datum.source_dims = {d.source_dims[i]};
    // Copies are numbered by (original target, arrow order); arrows keep their original order.
    std::vector<std::size_t> incident = d.arrows_from(i);
    std::vector<std::size_t> by_target = incident;
    std::stable_sort(by_target.begin(), by_target.end(),
                     [&](std::size_t x, std::size_t y) { return d.arrows[x].target < d.arrows[y].target; });
    std::vector<std::size_t> copy_of(d.arrows.size());
    for (std::size_t a : by_target) {
      const Arrow& arrow = d.arrows[a];
      copy_of[a] = part.datum.target_dims.size();
      part.datum.target_dims.push_back(d.target_dims[arrow.target]);
      part.datum.inv_exponents.push_back(d.inv_exponents[arrow.target]);
      part.origin_target.push_back(arrow.target);
      part.origin_arrow.push_back(arrow.id);
    }
    for (std::size_t a : incident) {
      const Arrow& arrow = d.arrows[a];
      part.datum.arrows.push_back(Arrow{0, copy_of[a], arrow.matrix, arrow.id});
    }
    parts.push_back(std::move(part));
  }
  return parts;
}

/// A single source with exactly one arrow per target.
inline bool is_subspace_quiver(const QuiverDatum& d) {
  if (d.num_sources() != 1) return false;
  for (std::size_t j = 0; j < d.num_targets(); ++j)
    if (alpha(d, j) != 1) return false;
  return true;
}

}  // namespace qbl
