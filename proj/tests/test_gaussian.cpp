#include "qbl/conditions.hpp"
#include "qbl/gaussian.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace qbl;
using qbl::testing::load_fixture;
using qbl::testing::objective_defined;

namespace {

GaussianPoint scalar_point(double a) { return GaussianPoint::from_matrices({RealMatrix{{a}}}); }

RealMatrix random_spd(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g;
  RealMatrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    l(i, i) = std::exp(0.5 * g(rng));
    for (std::size_t k = 0; k < i; ++k) l(i, k) = 0.5 * g(rng);
  }
  return symmetrize(l * l.transpose());
}

GaussianPoint random_point(std::mt19937_64& rng, const QuiverDatum& d) {
  std::vector<RealMatrix> mats;
  for (auto e : d.target_dims) mats.push_back(random_spd(rng, e));
  return GaussianPoint::from_matrices(mats);
}

GaussianPoint scaled(const GaussianPoint& p, double t) {
  std::vector<RealMatrix> mats = p.matrices();
  for (auto& m : mats) m *= t;
  return GaussianPoint::from_matrices(mats);
}

double det3(const RealMatrix& m) {
  return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
         m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

// Fully split datum: every arrow gets its own copy of its target, sources kept.
QuiverDatum split_targets(const QuiverDatum& d) {
  QuiverDatum out;
  out.source_dims = d.source_dims;
  for (std::size_t a = 0; a < d.arrows.size(); ++a) {
    out.target_dims.push_back(d.target_dims[d.arrows[a].target]);
    out.inv_exponents.push_back(d.inv_exponents[d.arrows[a].target]);
    out.arrows.push_back(Arrow{d.arrows[a].source, a, d.arrows[a].matrix, a});
  }
  return out;
}

}  // namespace

TEST(LogObjective, HandValues) {
  const QuiverDatum d34 = load_fixture("line_pair.qbl");
  EXPECT_NEAR(log_objective(d34, scalar_point(1.0)), -0.5 * std::log(5.0), 1e-14);
  for (double t : {0.01, 0.5, 7.0, 1e3}) EXPECT_NEAR(log_objective(d34, scalar_point(t)), -0.5 * std::log(5.0), 1e-12);

  const QuiverDatum id = load_fixture("coordinates.qbl");
  EXPECT_NEAR(log_objective(id, scalar_point(1.0)), -std::log(2.0), 1e-14);
  EXPECT_NEAR(std::sqrt(c_constant(id)) * std::exp(log_objective(id, scalar_point(1.0))), 1.0, 1e-14);
}

TEST(LogObjective, ScaleInvarianceUnderScaling) {
  std::mt19937_64 rng(61);
  int checked = 0;
  while (checked < 30) {
    const QuiverDatum d = qbl::testing::random_scaled_datum(rng);
    if (!objective_defined(d)) continue;
    ++checked;
    const GaussianPoint p = random_point(rng, d);
    const double base = log_objective(d, p);
    for (double t : {1e-3, 0.3, 4.0, 250.0}) EXPECT_NEAR(log_objective(d, scaled(p, t)), base, 1e-10);
  }
}

TEST(LogObjective, DriftsLinearlyWithoutScaling) {
  std::mt19937_64 rng(67);
  int checked = 0;
  while (checked < 30) {
    const QuiverDatum d = qbl::testing::random_datum(rng);
    if (!objective_defined(d)) continue;
    ++checked;
    const auto s = check_scaling(d);
    const GaussianPoint p = random_point(rng, d);
    const double t = 3.0;
    const double drift = 0.5 * std::log(t) * Rational(s.rhs - s.lhs).get_d();
    EXPECT_NEAR(log_objective(d, scaled(p, t)) - log_objective(d, p), drift, 1e-10);
  }
}

TEST(Gradient, StationaryAtFixedPoint) {
  const auto g = gradient_log_objective(load_fixture("line_pair.qbl"), scalar_point(1.0));
  EXPECT_NEAR(g[0](0, 0), 0.0, 1e-15);
  const QuiverDatum young = load_fixture("young_d1.qbl");
  for (const auto& gj : gradient_log_objective(young, GaussianPoint::identity(young.target_dims)))
    EXPECT_NEAR(gj(0, 0), 0.0, 1e-14);
}

TEST(Gradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(71);
  int checked = 0;
  while (checked < 10) {
    const QuiverDatum d = qbl::testing::random_scaled_datum(rng);
    if (!objective_defined(d)) continue;
    ++checked;
    const GaussianPoint p = random_point(rng, d);
    const auto g = gradient_log_objective(d, p);
    const auto base = p.matrices();
    double diff2 = 0.0, norm2 = 0.0;
    for (std::size_t j = 0; j < base.size(); ++j)
      for (std::size_t r = 0; r < base[j].rows(); ++r)
        for (std::size_t c = 0; c <= r; ++c) {
          const double h = 1e-5;
          auto at = [&](double step) {
            auto mats = base;
            mats[j](r, c) += step;
            if (r != c) mats[j](c, r) += step;
            return log_objective(d, GaussianPoint::from_matrices(mats));
          };
          const double fd = (at(h) - at(-h)) / (2 * h);
          const double an = r == c ? g[j](r, c) : 2.0 * g[j](r, c);
          diff2 += (fd - an) * (fd - an);
          norm2 += an * an;
        }
    EXPECT_LE(std::sqrt(diff2), 1e-5 * std::max(std::sqrt(norm2), 1.0)) << serialize_datum(d);
  }
}

TEST(FixedPoint, HandSteps) {
  const auto p = fixed_point_step(load_fixture("line_pair.qbl"), scalar_point(1.0));
  EXPECT_NEAR(p.matrix(0)(0, 0), 1.0, 1e-14);

  // Two identity arrows, w = 1/2: M = 2A, so Σ B M⁻¹ Bᵀ = 1/A and the step fixes A.
  const QuiverDatum cs = load_fixture("cauchy_schwarz.qbl");
  for (double a : {1.0, 0.25, 9.0}) {
    const auto q = fixed_point_step(cs, scalar_point(a));
    EXPECT_NEAR(q.matrix(0)(0, 0), a, 1e-12 * a);
    EXPECT_NEAR(log_objective(cs, q), log_objective(cs, scalar_point(a)), 1e-14);
  }

  const QuiverDatum chain = load_fixture("projection_chain.qbl");
  const auto r = fixed_point_step(chain, GaussianPoint::identity(chain.target_dims));
  const RealMatrix a = r.matrix(0);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(a(i, k), i == k ? 1.0 : 0.0, 1e-14);
}

TEST(FixedPoint, ObjectiveNonDecreasingOnFixtures) {
  std::mt19937_64 rng(73);
  for (const char* name : {"projection_chain.qbl", "scaled_coordinates.qbl", "line_pair.qbl", "young_d1.qbl",
                           "loomis_whitney.qbl", "two_sources.qbl", "cauchy_schwarz.qbl"}) {
    const QuiverDatum d = load_fixture(name);
    GaussianPoint p = random_point(rng, d);
    double prev = log_objective(d, p);
    for (int k = 0; k < 50; ++k) {
      p = fixed_point_step(d, p);
      const double next = log_objective(d, p);
      EXPECT_GE(next, prev - 1e-12) << name << " step " << k;
      prev = next;
    }
  }
}

TEST(Optimize, ClosedFormExamples) {
  const auto e34 = optimize_gaussian_constant(load_fixture("line_pair.qbl"));
  EXPECT_EQ(e34.status, Status::Converged);
  EXPECT_NEAR(e34.value, std::sqrt(2.0 / 5.0), 1e-4);

  const auto e33 = optimize_gaussian_constant(load_fixture("scaled_coordinates.qbl"));
  EXPECT_EQ(e33.status, Status::Converged);
  EXPECT_NEAR(e33.value, 1.0 / 6.0, 1e-4);
}

TEST(Optimize, ChainConvergesToGridOracle) {
  const QuiverDatum d = load_fixture("projection_chain.qbl");
  const auto est = optimize_gaussian_constant(d);
  ASSERT_EQ(est.status, Status::Converged);
  EXPECT_FALSE(est.infinite);
  EXPECT_LE(est.final_gradient_norm, 1e-9);

  // Independent oracle: grid over det-1 matrices [[x, y], [y, (1+y²)/x]] (the objective is
  // scale invariant), F = ½[(3/2)·2·log det A − log det M], M = (3/2)(B₁ᵀAB₁ + B₂ᵀAB₂).
  double best = -1e300;
  for (int ix = -60; ix <= 60; ++ix)
    for (int iy = -60; iy <= 60; ++iy) {
      const double x = std::exp(ix / 30.0), y = iy / 30.0;
      const double z = (1 + y * y) / x;
      RealMatrix m{{x, y, 0}, {y, x + z, y}, {0, y, z}};
      m *= 1.5;
      best = std::max(best, -0.5 * std::log(det3(m)));
    }
  const double oracle = std::sqrt(8.0) * std::exp(best);
  EXPECT_NEAR(est.value, oracle, 1e-6);
  EXPECT_NEAR(est.value, 4.0 * std::sqrt(6.0) / 9.0, 1e-6);
}

TEST(Optimize, MethodsAgreeOnConvergentFixtures) {
  for (const char* name : {"projection_chain.qbl", "scaled_coordinates.qbl", "line_pair.qbl", "young_d1.qbl",
                           "loomis_whitney.qbl", "two_sources.qbl", "cauchy_schwarz.qbl"}) {
    const QuiverDatum d = load_fixture(name);
    OptimizerConfig grad;
    OptimizerConfig fp;
    fp.method = Method::FixedPoint;
    const auto a = optimize_gaussian_constant(d, grad);
    const auto b = optimize_gaussian_constant(d, fp);
    ASSERT_EQ(a.status, Status::Converged) << name;
    ASSERT_EQ(b.status, Status::Converged) << name;
    EXPECT_NEAR(a.log_objective, b.log_objective, 1e-6) << name;
  }
}

TEST(Optimize, RandomStartsReachTheSameValue) {
  const QuiverDatum d = load_fixture("two_sources.qbl");
  OptimizerConfig c;
  c.restarts = 1;
  const double first = optimize_gaussian_constant(d, c).value;
  for (std::uint64_t seed = 1; seed < 5; ++seed) {
    c.seed = seed;
    c.restarts = 4;
    EXPECT_NEAR(optimize_gaussian_constant(d, c).value, first, 1e-8);
  }
}

TEST(Optimize, ScalingViolationDiverges) {
  QuiverDatum d = load_fixture("projection_chain.qbl");
  d.inv_exponents = {Rational(1, 2)};
  const auto est = optimize_gaussian_constant(d);
  EXPECT_EQ(est.status, Status::Diverging);
  EXPECT_TRUE(est.infinite);
}

TEST(Optimize, CommonKernelDiverges) {
  // Both arrows kill e₃, so every M is singular.
  QuiverDatum d;
  d.source_dims = {3};
  d.target_dims = {1, 1};
  d.inv_exponents = {1, 1};
  d.arrows = {Arrow{0, 0, RationalMatrix{{1, 0, 0}}, 0}, Arrow{0, 1, RationalMatrix{{0, 1, 0}}, 1}};
  EXPECT_EQ(optimize_gaussian_constant(d).status, Status::Diverging);
}

TEST(Optimize, DriftBetweenTargetsDiverges) {
  // Each A_j stays well conditioned while their scales separate; the dimension condition fails
  // for V = (0, span e₄).
  const QuiverDatum d = parse_datum(R"({
    "sources": [1, 4],
    "targets": [{"dim": 1, "p": "23/20"}, {"dim": 2, "p": "23/20"}, {"dim": 1, "p": "23/15"}],
    "arrows": [
      {"source": 1, "target": 1, "matrix": [["2"]]},
      {"source": 2, "target": 2, "matrix": [["2", "2", "2", "0"], ["1", "0", "1", "-1"]]},
      {"source": 1, "target": 3, "matrix": [["-1"]]},
      {"source": 2, "target": 1, "matrix": [["-2", "2", "0", "0"]]},
      {"source": 2, "target": 1, "matrix": [["0", "0", "2", "0"]]}
    ]
  })");
  OptimizerConfig fp;
  fp.method = Method::FixedPoint;
  for (const auto& c : {OptimizerConfig{}, fp}) {
    const auto est = optimize_gaussian_constant(d, c);
    EXPECT_EQ(est.status, Status::Diverging) << to_string(c.method);
    EXPECT_TRUE(est.infinite);
  }
}

TEST(Optimize, DeterministicAcrossRunsAndWorkers) {
  const QuiverDatum d = load_fixture("young_d1.qbl");
  OptimizerConfig one;
  one.seed = 5;
  OptimizerConfig four = one;
  four.workers = 4;
  const auto a = optimize_gaussian_constant(d, one);
  const auto b = optimize_gaussian_constant(d, one);
  const auto c = optimize_gaussian_constant(d, four);
  EXPECT_EQ(a.log_objective_trace, b.log_objective_trace);
  EXPECT_EQ(a.log_objective_trace, c.log_objective_trace);
  EXPECT_EQ(a.restart, c.restart);
}

TEST(Optimize, StatusInvariants) {
  std::mt19937_64 rng(79);
  for (int trial = 0; trial < 20; ++trial) {
    const QuiverDatum d = qbl::testing::random_scaled_datum(rng);
    OptimizerConfig c;
    c.restarts = 2;
    const auto est = optimize_gaussian_constant(d, c);
    if (est.status == Status::Converged) {
      EXPECT_LE(est.final_gradient_norm, c.tol_grad);
      EXPECT_TRUE(est.argmax.has_value());
      EXPECT_GT(est.value, 0.0);
    }
    if (est.status == Status::Diverging) {
      EXPECT_TRUE(est.infinite);
    }
  }
}

TEST(SubspaceConstant, ClassicalExamples) {
  EXPECT_NEAR(subspace_bl_constant(load_fixture("loomis_whitney.qbl")).value, 1.0, 1e-6);
  const auto young = subspace_bl_constant(load_fixture("young_d1.qbl"));
  EXPECT_NEAR(young.value, young_closed_form({Rational(2, 3), Rational(2, 3), Rational(2, 3)}, 1), 1e-6);

  // Hölder: identity maps R² → R², w = (1/3, 2/3).
  QuiverDatum holder;
  holder.source_dims = {2};
  holder.target_dims = {2, 2};
  holder.inv_exponents = {Rational(1, 3), Rational(2, 3)};
  holder.arrows = {Arrow{0, 0, RationalMatrix::identity(2), 0}, Arrow{0, 1, RationalMatrix::identity(2), 1}};
  EXPECT_NEAR(subspace_bl_constant(holder).value, 1.0, 1e-6);

  EXPECT_THROW(subspace_bl_constant(load_fixture("cauchy_schwarz.qbl")), std::invalid_argument);
}

TEST(YoungClosedForm, Values) {
  EXPECT_NEAR(young_closed_form({Rational(2, 3), Rational(2, 3), Rational(2, 3)}, 1), std::sqrt(3.0) / 2.0, 1e-12);
  EXPECT_NEAR(young_closed_form({Rational(1), Rational(1), Rational(0)}, 1), 1.0, 1e-15);
  EXPECT_NEAR(young_closed_form({Rational(2, 3), Rational(2, 3), Rational(2, 3)}, 3), std::pow(0.75, 1.5), 1e-12);
  EXPECT_THROW(young_closed_form({Rational(1, 2), Rational(1, 2), Rational(1, 2)}, 1), ScalingViolated);
}

TEST(Sandwich, CauchySchwarz) {
  const auto s = sandwich_bounds(load_fixture("cauchy_schwarz.qbl"));
  EXPECT_NEAR(s.bl.value, 1.0, 1e-6);
  EXPECT_EQ(s.alphas, (std::vector<std::size_t>{2}));
  EXPECT_NEAR(s.lower, 0.25, 1e-6);
  EXPECT_NEAR(s.upper, 1.0, 1e-6);
}

TEST(Sandwich, ChainDiverges) {
  const auto s = sandwich_bounds(load_fixture("projection_chain.qbl"));
  EXPECT_EQ(s.bl.status, Status::Diverging);
  EXPECT_TRUE(s.bl.infinite);
}

TEST(Sandwich, SubspaceQuiverBracketCollapses) {
  const auto s = sandwich_bounds(load_fixture("young_d1.qbl"));
  EXPECT_DOUBLE_EQ(s.alpha_product, 1.0);
  EXPECT_DOUBLE_EQ(s.lower, s.upper);
}

TEST(Sandwich, ProductOfPartsMatchesJointOptimization) {
  // The per-arrow constant of a datum is the Gaussian constant of the datum with every target
  // duplicated per arrow; optimizing that jointly must reproduce the product of the parts.
  std::mt19937_64 rng(83);
  int checked = 0;
  for (int trial = 0; trial < 40 && checked < 8; ++trial) {
    const QuiverDatum d = qbl::testing::random_scaled_datum(rng);
    const auto s = sandwich_bounds(d);
    if (s.bl.status != Status::Converged) continue;
    const auto joint = optimize_gaussian_constant(split_targets(d));
    if (joint.status != Status::Converged) continue;
    ++checked;
    EXPECT_NEAR(joint.value / s.bl.value, 1.0, 1e-6) << serialize_datum(d);
  }
  EXPECT_GT(checked, 0);
}

TEST(GaussianPoint, ParameterRoundTrip) {
  std::mt19937_64 rng(89);
  const GaussianPoint p = random_point(rng, load_fixture("projection_chain.qbl"));
  const GaussianPoint q = GaussianPoint::from_parameters({2}, p.parameters());
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(q.matrix(0)(r, c), p.matrix(0)(r, c), 1e-12);
  EXPECT_THROW(GaussianPoint::from_parameters({2}, {0.0}), std::invalid_argument);
  EXPECT_THROW(GaussianPoint::from_factors({RealMatrix{{-1.0}}}), NotPositiveDefinite);
}
