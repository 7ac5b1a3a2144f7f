#pragma once

// Gaussian Brascamp–Lieb constants.
//
// For a quiver datum with weights c_j = α_j w_j the Gaussian constant is
//
//   BLCD_G = C^{1/2} · sup_{A_j ≻ 0} exp(F(A)),
//   F(A)   = ½ [ Σ_j c_j log det A_j − Σ_i log det M_i ],   M_i = Σ_{a: i→j} c_j B_aᵀ A_j B_a,
//
// with C = Π_j α_j^{α_j w_j dim H^j}. For a subspace quiver α_j = 1 and this is the classical
// Brascamp–Lieb constant. F is maximized by Riemannian gradient ascent on the Cholesky factors or
// by the fixed-point map A_j ← (Σ_{a→j} B_a M_i⁻¹ B_aᵀ)⁻¹; an unbounded supremum shows up as a
// rising objective that crosses `log_cap` or degenerating iterates.

#include "qbl/core.hpp"
#include "qbl/dense.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

namespace qbl {

/// One positive-definite A_j per target, held as its Cholesky factor L_j (A_j = L_j L_jᵀ).
class GaussianPoint {
 public:
  GaussianPoint() = default;

  static GaussianPoint identity(const std::vector<std::size_t>& dims) {
    GaussianPoint p;
    for (auto e : dims) p.factors_.push_back(RealMatrix::identity(e));
    return p;
  }

  static GaussianPoint from_matrices(const std::vector<RealMatrix>& matrices) {
    GaussianPoint p;
    for (const auto& a : matrices) p.factors_.push_back(SpdMatrix(a).factor());
    return p;
  }

  static GaussianPoint from_factors(std::vector<RealMatrix> factors) {
    for (const auto& l : factors) {
      if (l.rows() != l.cols()) throw std::invalid_argument("GaussianPoint: factor is not square");
      for (std::size_t i = 0; i < l.rows(); ++i) {
        if (!(l(i, i) > 0.0)) throw NotPositiveDefinite("GaussianPoint: factor diagonal must be positive");
        for (std::size_t k = i + 1; k < l.cols(); ++k)
          if (l(i, k) != 0.0) throw std::invalid_argument("GaussianPoint: factor is not lower triangular");
      }
    }
    GaussianPoint p;
    p.factors_ = std::move(factors);
    return p;
  }

  /// Unconstrained coordinates: per target, row-major lower triangle with log on the diagonal.
  std::vector<double> parameters() const {
    std::vector<double> theta;
    for (const auto& l : factors_)
      for (std::size_t i = 0; i < l.rows(); ++i)
        for (std::size_t k = 0; k <= i; ++k) theta.push_back(i == k ? std::log(l(i, i)) : l(i, k));
    return theta;
  }

  static GaussianPoint from_parameters(const std::vector<std::size_t>& dims, const std::vector<double>& theta) {
    GaussianPoint p;
    std::size_t pos = 0;
    for (auto e : dims) {
      RealMatrix l(e, e);
      for (std::size_t i = 0; i < e; ++i)
        for (std::size_t k = 0; k <= i; ++k) {
          if (pos >= theta.size()) throw std::invalid_argument("GaussianPoint: too few parameters");
          l(i, k) = i == k ? std::exp(theta[pos]) : theta[pos];
          ++pos;
        }
      p.factors_.push_back(std::move(l));
    }
    if (pos != theta.size()) throw std::invalid_argument("GaussianPoint: too many parameters");
    return p;
  }

  std::size_t size() const noexcept { return factors_.size(); }
  const RealMatrix& factor(std::size_t j) const { return factors_.at(j); }
  RealMatrix matrix(std::size_t j) const { return factors_.at(j) * factors_.at(j).transpose(); }
  std::vector<RealMatrix> matrices() const {
    std::vector<RealMatrix> out;
    for (std::size_t j = 0; j < size(); ++j) out.push_back(matrix(j));
    return out;
  }

 private:
  std::vector<RealMatrix> factors_;
};

enum class Method { GradientAscent, FixedPoint };
enum class Status { Converged, Diverging, MaxIters };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Converged: return "converged";
    case Status::Diverging: return "diverging";
    case Status::MaxIters: return "max-iters";
  }
  return "?";
}

inline const char* to_string(Method m) { return m == Method::GradientAscent ? "gradient-ascent" : "fixed-point"; }

struct OptimizerConfig {
  double tol_grad = 1e-9;
  double tol_obj = 1e-12;
  std::size_t max_iters = 10000;
  std::size_t restarts = 8;
  std::uint64_t seed = 0;
  double log_cap = 60.0;
  double cond_cap = 1e12;
  Method method = Method::GradientAscent;
  std::size_t workers = 1;
};

struct ConstantEstimate {
  double value = 0.0;  // C^{1/2}·exp(best objective); meaningless when `infinite`
  bool infinite = false;
  Status status = Status::MaxIters;
  std::size_t iterations = 0;
  double final_gradient_norm = std::numeric_limits<double>::infinity();
  double log_objective = -std::numeric_limits<double>::infinity();  // best F, without C
  std::vector<double> log_objective_trace;
  std::optional<GaussianPoint> argmax;
  std::size_t restart = 0;
};

namespace detail {

// Floating view of a datum with the objective weights folded in.
struct GaussianModel {
  struct Edge {
    std::size_t source;
    std::size_t target;
    RealMatrix b;
  };
  std::vector<std::size_t> source_dims;
  std::vector<std::size_t> target_dims;
  std::vector<double> weight;  // c_j = α_j w_j
  std::vector<Edge> edges;     // arrows with c_j > 0 only
  double log_c = 0.0;

  explicit GaussianModel(const QuiverDatum& d) : source_dims(d.source_dims), target_dims(d.target_dims) {
    for (std::size_t j = 0; j < d.num_targets(); ++j)
      weight.push_back(static_cast<double>(alpha(d, j)) * d.inv_exponents[j].get_d());
    for (const auto& a : d.arrows)
      if (weight[a.target] > 0.0) edges.push_back({a.source, a.target, a.real_matrix()});
    log_c = log_c_constant(d);
  }

  void check_point(const GaussianPoint& p) const {
    if (p.size() != target_dims.size()) throw std::invalid_argument("GaussianPoint: wrong number of targets");
    for (std::size_t j = 0; j < p.size(); ++j)
      if (p.factor(j).rows() != target_dims[j]) throw std::invalid_argument("GaussianPoint: wrong target dimension");
  }
};

struct Evaluation {
  double value = 0.0;
  std::vector<RealMatrix> m_chol;  // Cholesky factor of M_i per source
};

inline Evaluation evaluate(const GaussianModel& model, const GaussianPoint& p) {
  model.check_point(p);
  Evaluation ev;
  double det_a = 0.0;
  std::vector<RealMatrix> a(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    a[j] = p.matrix(j);
    if (model.weight[j] > 0.0) det_a += model.weight[j] * logdet_from_cholesky(p.factor(j));
  }
  double det_m = 0.0;
  for (std::size_t i = 0; i < model.source_dims.size(); ++i) {
    RealMatrix m(model.source_dims[i], model.source_dims[i]);
    for (const auto& e : model.edges)
      if (e.source == i) m += model.weight[e.target] * (e.b.transpose() * a[e.target] * e.b);
    ev.m_chol.push_back(cholesky(symmetrize(m)));
    det_m += logdet_from_cholesky(ev.m_chol.back());
  }
  ev.value = 0.5 * (det_a - det_m);
  return ev;
}

// T_j = Σ_{a→j} B_a M_i⁻¹ B_aᵀ.
inline std::vector<RealMatrix> pullback(const GaussianModel& model, const Evaluation& ev) {
  std::vector<RealMatrix> m_inv;
  for (const auto& l : ev.m_chol) m_inv.push_back(inverse_from_cholesky(l));
  std::vector<RealMatrix> t;
  for (auto e : model.target_dims) t.emplace_back(e, e);
  for (const auto& e : model.edges) t[e.target] += e.b * m_inv[e.source] * e.b.transpose();
  return t;
}

inline std::vector<RealMatrix> gradient(const GaussianModel& model, const GaussianPoint& p, const Evaluation& ev) {
  auto t = pullback(model, ev);
  std::vector<RealMatrix> g;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double c = model.weight[j];
    if (c == 0.0) {
      g.emplace_back(model.target_dims[j], model.target_dims[j]);
      continue;
    }
    g.push_back(symmetrize((0.5 * c) * (inverse_from_cholesky(p.factor(j)) - t[j])));
  }
  return g;
}

// Lᵀ G L: the gradient in the frame of the current point (scale-free).
inline std::vector<RealMatrix> natural_gradient(const GaussianPoint& p, const std::vector<RealMatrix>& g) {
  std::vector<RealMatrix> s;
  for (std::size_t j = 0; j < p.size(); ++j)
    s.push_back(symmetrize(p.factor(j).transpose() * g[j] * p.factor(j)));
  return s;
}

inline double norm(const std::vector<RealMatrix>& ms) {
  double s = 0.0;
  for (const auto& m : ms)
    for (double v : m.data()) s += v * v;
  return std::sqrt(s);
}

// A ← L (I + X + X²/2) Lᵀ; the middle factor is positive definite for every symmetric X.
inline GaussianPoint retract(const GaussianPoint& p, const std::vector<RealMatrix>& s, double step) {
  std::vector<RealMatrix> factors;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const RealMatrix x = step * s[j];
    const RealMatrix middle = symmetrize(RealMatrix::identity(x.rows()) + x + 0.5 * (x * x));
    factors.push_back(p.factor(j) * cholesky(middle));
  }
  return GaussianPoint::from_factors(std::move(factors));
}

inline GaussianPoint fixed_point(const GaussianModel& model, const GaussianPoint& p, const Evaluation& ev) {
  auto t = pullback(model, ev);
  std::vector<RealMatrix> factors;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (model.weight[j] == 0.0) {
      factors.push_back(p.factor(j));
      continue;
    }
    factors.push_back(cholesky(symmetrize(spd_inverse(symmetrize(t[j])))));
  }
  return GaussianPoint::from_factors(std::move(factors));
}

// Frobenius condition of the block-diagonal iterate diag(A_j). Only a common rescaling is free,
// so drifting apart between targets counts as degeneration too.
inline double max_condition(const GaussianModel& model, const GaussianPoint& p) {
  double norm2 = 0.0;
  double inv_norm2 = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (model.weight[j] <= 0.0) continue;
    const RealMatrix a = p.matrix(j);
    const double f = frobenius_norm(a);
    const double g = frobenius_norm(spd_inverse(a));
    norm2 += f * f;
    inv_norm2 += g * g;
  }
  return norm2 > 0.0 ? std::sqrt(norm2 * inv_norm2) : 1.0;
}

inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double standard_normal(std::mt19937_64& rng) {
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline std::uint64_t restart_seed(std::uint64_t seed, std::uint64_t restart) {
  std::uint64_t z = seed ^ (0x9E3779B97F4A7C15ull * (restart + 0x51ull));
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Restart 0 starts at the identity; restart r > 0 at I + 0.1·G Gᵀ with G standard normal.
inline GaussianPoint starting_point(const GaussianModel& model, std::uint64_t seed, std::size_t restart) {
  if (restart == 0) return GaussianPoint::identity(model.target_dims);
  std::mt19937_64 rng(restart_seed(seed, restart));
  std::vector<RealMatrix> mats;
  for (std::size_t j = 0; j < model.target_dims.size(); ++j) {
    const std::size_t e = model.target_dims[j];
    RealMatrix g(e, e);
    for (std::size_t r = 0; r < e; ++r)
      for (std::size_t c = 0; c < e; ++c) g(r, c) = standard_normal(rng);
    mats.push_back(model.weight[j] > 0.0 ? symmetrize(RealMatrix::identity(e) + 0.1 * (g * g.transpose()))
                                         : RealMatrix::identity(e));
  }
  return GaussianPoint::from_matrices(mats);
}

inline ConstantEstimate run_once(const GaussianModel& model, const OptimizerConfig& config, std::size_t restart) {
  ConstantEstimate est;
  est.restart = restart;
  GaussianPoint p = starting_point(model, config.seed, restart);
  Evaluation ev;
  try {
    ev = evaluate(model, p);
  } catch (const NotPositiveDefinite&) {
    // Some M_i is singular for every A: a nonzero common kernel, so the supremum is infinite.
    est.status = Status::Diverging;
    est.infinite = true;
    return est;
  }
  est.log_objective_trace.push_back(ev.value);
  std::size_t flat_steps = 0;
  for (std::size_t iter = 0;; ++iter) {
    est.iterations = iter;
    const auto g = gradient(model, p, ev);
    const auto s = natural_gradient(p, g);
    const double gnorm = norm(s);
    est.final_gradient_norm = gnorm;
    est.log_objective = ev.value;
    if (gnorm <= config.tol_grad) {
      est.status = Status::Converged;
      est.argmax = p;
      break;
    }
    if (iter >= config.max_iters) {
      est.status = Status::MaxIters;
      break;
    }

    GaussianPoint next;
    Evaluation next_ev;
    bool accepted = false;
    if (config.method == Method::FixedPoint) {
      try {
        next = fixed_point(model, p, ev);
        next_ev = evaluate(model, next);
        accepted = true;
      } catch (const NotPositiveDefinite&) {
        est.status = Status::Diverging;
        est.infinite = true;
        break;
      }
    } else {
      const double slope = gnorm * gnorm;
      for (double step = 1.0; step > 0x1.0p-40; step *= 0.5) {
        try {
          GaussianPoint trial = retract(p, s, step);
          Evaluation trial_ev = evaluate(model, trial);
          if (trial_ev.value >= ev.value + 1e-4 * step * slope) {
            next = std::move(trial);
            next_ev = std::move(trial_ev);
            accepted = true;
            break;
          }
        } catch (const NotPositiveDefinite&) {
        }
      }
    }
    if (!accepted) {
      est.status = Status::MaxIters;  // line search stalled before the gradient vanished
      break;
    }
    const double rise = next_ev.value - ev.value;
    p = std::move(next);
    ev = std::move(next_ev);
    est.log_objective_trace.push_back(ev.value);
    est.log_objective = ev.value;

    if (ev.value > config.log_cap) {
      est.status = Status::Diverging;
      est.infinite = true;
      est.iterations = iter + 1;
      break;
    }
    if (rise > 0.0 && max_condition(model, p) > config.cond_cap) {
      est.status = Status::Diverging;
      est.infinite = true;
      est.iterations = iter + 1;
      break;
    }
    flat_steps = std::abs(rise) <= config.tol_obj * std::max(1.0, std::abs(ev.value)) ? flat_steps + 1 : 0;
    if (flat_steps >= 50) {
      const auto s_final = natural_gradient(p, gradient(model, p, ev));
      est.final_gradient_norm = norm(s_final);
      est.iterations = iter + 1;
      est.status = est.final_gradient_norm <= config.tol_grad ? Status::Converged : Status::MaxIters;
      if (est.status == Status::Converged) est.argmax = p;
      break;
    }
  }
  if (!est.infinite) est.value = std::exp(0.5 * model.log_c + est.log_objective);
  return est;
}

inline int status_rank(Status s) {
  switch (s) {
    case Status::Diverging: return 2;
    case Status::Converged: return 1;
    case Status::MaxIters: return 0;
  }
  return 0;
}

// Total order (status, value, restart index); independent of completion order.
inline bool better(const ConstantEstimate& x, const ConstantEstimate& y) {
  if (status_rank(x.status) != status_rank(y.status)) return status_rank(x.status) > status_rank(y.status);
  if (!x.infinite && x.log_objective != y.log_objective) return x.log_objective > y.log_objective;
  return x.restart < y.restart;
}

}  // namespace detail

/// F(A) = ½[Σ_j α_j w_j log det A_j − Σ_i log det M_i], without the C factor.
inline double log_objective(const QuiverDatum& d, const GaussianPoint& p) {
  const detail::GaussianModel model(d);
  return detail::evaluate(model, p).value;
}

/// ∂F/∂A_j = ½[α_j w_j A_j⁻¹ − Σ_{a→j} α_j w_j B_a M_i⁻¹ B_aᵀ] (Frobenius pairing).
inline std::vector<RealMatrix> gradient_log_objective(const QuiverDatum& d, const GaussianPoint& p) {
  const detail::GaussianModel model(d);
  return detail::gradient(model, p, detail::evaluate(model, p));
}

/// A_j ← (Σ_{a→j} B_a M_i⁻¹ B_aᵀ)⁻¹ for every target with w_j > 0; other targets unchanged.
inline GaussianPoint fixed_point_step(const QuiverDatum& d, const GaussianPoint& p) {
  const detail::GaussianModel model(d);
  return detail::fixed_point(model, p, detail::evaluate(model, p));
}

inline ConstantEstimate optimize_gaussian_constant(const QuiverDatum& d, const OptimizerConfig& config = {}) {
  require_valid(d);
  const detail::GaussianModel model(d);
  const std::size_t runs = std::max<std::size_t>(1, config.restarts);
  std::vector<ConstantEstimate> results(runs);
  const std::size_t workers = std::clamp<std::size_t>(config.workers, 1, runs);
  if (workers == 1) {
    for (std::size_t r = 0; r < runs; ++r) results[r] = detail::run_once(model, config, r);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t r = w; r < runs; r += workers) results[r] = detail::run_once(model, config, r);
      });
    for (auto& t : pool) t.join();
  }
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs; ++r)
    if (detail::better(results[r], results[best])) best = r;
  return std::move(results[best]);
}

/// Classical Brascamp–Lieb constant of a subspace quiver (one source, one arrow per target).
inline ConstantEstimate subspace_bl_constant(const QuiverDatum& d, const OptimizerConfig& config = {}) {
  require_valid(d);
  if (!is_subspace_quiver(d))
    throw std::invalid_argument("subspace_bl_constant: datum is not a subspace quiver");
  return optimize_gaussian_constant(d, config);
}

struct ScalingViolated : std::domain_error {
  using std::domain_error::domain_error;
};

/// Sharp Young constant (Π_j p_j^{1/p_j} / p_j'^{1/p_j'})^{d/2} in terms of w_j = 1/p_j, with
/// 1/∞ = 0 and ∞^{1/∞} = 1. Requires w_1 + w_2 + w_3 = 2; any other exponents give BL = ∞.
inline double young_closed_form(const std::array<Rational, 3>& w, std::size_t d) {
  Rational total;
  for (const auto& x : w) {
    if (x < 0 || x > 1) throw std::invalid_argument("young_closed_form: 1/p outside [0, 1]");
    total += x;
  }
  if (total != 2) throw ScalingViolated("young_closed_form: 1/p1 + 1/p2 + 1/p3 = " + to_string(total) + " != 2");
  auto pow_self = [](double x) { return x == 0.0 ? 1.0 : std::pow(x, x); };  // 0^0 = 1
  double log_product = 0.0;
  for (const auto& x : w) {
    const double v = x.get_d();
    // p^{1/p} / p'^{1/p'} = (1−w)^{1−w} / w^w
    log_product += std::log(pow_self(1.0 - v)) - std::log(pow_self(v));
  }
  return std::exp(0.5 * static_cast<double>(d) * log_product);
}

struct SandwichReport {
  ConstantEstimate bl;                     // per-arrow Gaussian estimate of BL(Q, p)
  std::vector<ConstantEstimate> parts;     // one subspace constant per source
  std::vector<std::size_t> alphas;
  double alpha_product = 1.0;              // Π_j α_j^{α_j}
  double lower = 0.0;                      // BL / Π α_j^{α_j}
  double upper = 0.0;                      // BL
};

/// BL(Q, p) is the product of the subspace constants of the split parts; BLCD(Q, p) then lies in
/// [BL / Π_j α_j^{α_j}, BL].
inline SandwichReport sandwich_bounds(const QuiverDatum& d, const OptimizerConfig& config = {}) {
  require_valid(d);
  SandwichReport r;
  r.alphas = alphas(d);
  for (auto a : r.alphas) r.alpha_product *= std::pow(static_cast<double>(a), static_cast<double>(a));
  r.bl.status = Status::Converged;
  r.bl.final_gradient_norm = 0.0;
  double log_value = 0.0;
  for (const auto& part : split_sources(d)) {
    r.parts.push_back(subspace_bl_constant(part.datum, config));
    const auto& est = r.parts.back();
    r.bl.iterations += est.iterations;
    r.bl.final_gradient_norm = std::max(r.bl.final_gradient_norm, est.final_gradient_norm);
    if (est.status == Status::Diverging) {
      r.bl.status = Status::Diverging;
    } else if (est.status == Status::MaxIters && r.bl.status == Status::Converged) {
      r.bl.status = Status::MaxIters;
    }
    if (!est.infinite) log_value += std::log(est.value);
  }
  r.bl.infinite = r.bl.status == Status::Diverging;
  if (r.bl.infinite) {
    r.lower = r.upper = std::numeric_limits<double>::infinity();
  } else {
    r.bl.value = std::exp(log_value);
    r.bl.log_objective = log_value;
    r.upper = r.bl.value;
    r.lower = r.bl.value / r.alpha_product;
  }
  return r;
}

}  // namespace qbl
