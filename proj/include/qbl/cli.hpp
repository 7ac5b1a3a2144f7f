#pragma once

// Command-line front end. Exit codes: 0 success, 1 finding (infinite constant, violated
// condition, no convergence), 2 usage or input error.

#include "qbl/conditions.hpp"
#include "qbl/core.hpp"
#include "qbl/gaussian.hpp"
#include "qbl/io.hpp"
#include "qbl/verifier.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace qbl::cli {

struct CommandOutcome {
  int exit_code = 0;
  std::optional<std::string> report_path;
  std::string summary;
};

enum class Format { Text, Csv };

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct Report {
  std::vector<std::pair<std::string, std::string>> fields;
  std::optional<Table> table;

  void add(std::string key, std::string value) { fields.emplace_back(std::move(key), std::move(value)); }
};

inline std::string fixed(double x, int digits = 6) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

inline std::string sci(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6e", x);
  return buf;
}

inline std::string general(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

/// span{(1,0,0),(0,1,1)}; the zero subspace prints as {0}.
inline std::string describe(const Subspace& v) {
  if (v.dim() == 0) return "{0}";
  std::string s = "span{";
  const auto& b = v.basis();
  for (std::size_t c = 0; c < b.cols(); ++c) {
    s += c ? ",(" : "(";
    for (std::size_t r = 0; r < b.rows(); ++r) s += (r ? "," : "") + to_string(b(r, c));
    s += ')';
  }
  return s + '}';
}

inline std::string describe(const SubspaceFamily& f) {
  std::string s;
  for (std::size_t i = 0; i < f.subspaces.size(); ++i)
    s += (i ? " " : "") + std::string("V") + std::to_string(i + 1) + "=" + describe(f.subspaces[i]);
  return s;
}

inline std::string render(const Report& r, Format format) {
  std::ostringstream out;
  if (format == Format::Csv) {
    if (r.table) {
      for (std::size_t c = 0; c < r.table->columns.size(); ++c) out << (c ? "," : "") << r.table->columns[c];
      out << '\n';
      for (const auto& row : r.table->rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
        out << '\n';
      }
    } else {
      out << "key,value\n";
      for (const auto& [k, v] : r.fields) {
        const bool quote = v.find_first_of(",\"") != std::string::npos;
        if (!quote) {
          out << k << ',' << v << '\n';
          continue;
        }
        out << k << ",\"";
        for (char ch : v) out << (ch == '"' ? "\"\"" : std::string(1, ch));
        out << "\"\n";
      }
    }
    return out.str();
  }
  std::size_t width = 0;
  for (const auto& [k, v] : r.fields) width = std::max(width, k.size());
  for (const auto& [k, v] : r.fields) out << k << ':' << std::string(width - k.size() + 1, ' ') << v << '\n';
  if (r.table) {
    std::vector<std::size_t> w(r.table->columns.size());
    for (std::size_t c = 0; c < w.size(); ++c) w[c] = r.table->columns[c].size();
    for (const auto& row : r.table->rows)
      for (std::size_t c = 0; c < row.size(); ++c) w[c] = std::max(w[c], row[c].size());
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t c = 0; c < cells.size(); ++c) {
        out << (c ? "  " : "") << cells[c];
        if (c + 1 < cells.size()) out << std::string(w[c] - cells[c].size(), ' ');
      }
      out << '\n';
    };
    line(r.table->columns);
    for (const auto& row : r.table->rows) line(row);
  }
  return out.str();
}

namespace detail {

struct Options {
  std::string datum_path;
  std::uint64_t seed = 0;
  double tol = 1e-9;
  std::size_t max_iters = 10000;
  std::size_t restarts = 8;
  std::size_t workers = 1;
  std::string out;
  std::string format = "text";

  std::string variant;
  std::size_t lattice_max = 512;
  std::string method = "grad";
  std::string functions;
  std::string param;
  std::size_t budget = 1'000'000;
  std::string witness;
  std::string big_r;
  double small_r = 1.0;
};

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Result {
  int exit_code = 0;
  std::string summary;
  Report report;
};

inline OptimizerConfig optimizer_config(const Options& o) {
  OptimizerConfig c;
  c.tol_grad = o.tol;
  c.max_iters = o.max_iters;
  c.restarts = o.restarts;
  c.seed = o.seed;
  c.workers = o.workers;
  c.method = o.method == "fp" ? Method::FixedPoint : Method::GradientAscent;
  return c;
}

// "X" or "A:B" (geometric sweep, `per_decade` points per factor of ten).
inline std::vector<double> parse_range(const std::string& text, std::size_t per_decade) {
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw UsageError("not a number: '" + s + "'");
    }
  };
  const auto colon = text.find(':');
  if (colon == std::string::npos) return {number(text)};
  const double a = number(text.substr(0, colon));
  const double b = number(text.substr(colon + 1));
  if (!(a > 0.0) || !(b > a)) throw UsageError("range A:B needs 0 < A < B");
  return geometric_grid(a, b, per_decade);
}

inline Result run_check(const QuiverDatum& d, const Options& o) {
  LatticeConfig config;
  config.seed = o.seed;
  config.max_lattice_size = o.lattice_max;
  const Variant variant = o.variant == "cd" ? Variant::ChindrisDerksen : Variant::PerArrow;
  const ConditionReport c = check_dimension(d, variant, config);

  Result r;
  r.report.add("command", "check");
  r.report.add("variant", to_string(variant));
  r.report.add("scaling", std::string(c.scaling.ok ? "holds" : "fails") + " (sources " + to_string(c.scaling.lhs) +
                              ", targets " + to_string(c.scaling.rhs) + ")");
  r.report.add("dimension", to_string(c.dimension));
  if (c.witness) {
    r.report.add("witness", describe(*c.witness));
    r.report.add("witness_lhs", to_string(c.witness_terms->lhs));
    r.report.add("witness_rhs", to_string(c.witness_terms->rhs));
  }
  r.report.add("lattice_size", std::to_string(c.lattice_size));
  r.report.add("truncated", c.truncated ? "yes" : "no");
  r.report.add("families_evaluated", std::to_string(c.families_evaluated));
  r.report.add("feasible", c.feasible() ? "yes" : "no");
  r.exit_code = c.feasible() ? 0 : 1;
  if (!c.scaling.ok)
    r.summary = "scaling condition fails: " + to_string(c.scaling.lhs) + " != " + to_string(c.scaling.rhs);
  else if (c.witness)
    r.summary = std::string(to_string(variant)) + " dimension condition violated by " + describe(*c.witness);
  else
    r.summary = std::string(to_string(variant)) + " dimension condition: " + to_string(c.dimension);
  return r;
}

inline void add_estimate(Report& report, const ConstantEstimate& e, const std::string& prefix = "") {
  report.add(prefix + "constant", e.infinite ? "inf" : fixed(e.value));
  report.add(prefix + "status", to_string(e.status));
  report.add(prefix + "iterations", std::to_string(e.iterations));
  report.add(prefix + "gradient_norm", sci(e.final_gradient_norm));
  report.add(prefix + "log_objective", e.infinite ? "inf" : fixed(e.log_objective, 9));
  report.add(prefix + "restart", std::to_string(e.restart));
}

inline int estimate_exit(const ConstantEstimate& e) { return e.status == Status::Converged ? 0 : 1; }

inline Result run_gaussian(const QuiverDatum& d, const Options& o) {
  const OptimizerConfig config = optimizer_config(o);
  const ConstantEstimate e = optimize_gaussian_constant(d, config);
  Result r;
  r.report.add("command", "gaussian");
  r.report.add("method", to_string(config.method));
  add_estimate(r.report, e);
  Table trace;
  trace.columns = {"iteration", "log_objective"};
  for (std::size_t k = 0; k < e.log_objective_trace.size(); ++k)
    trace.rows.push_back({std::to_string(k), fixed(e.log_objective_trace[k], 12)});
  r.report.table = std::move(trace);
  r.exit_code = estimate_exit(e);
  r.summary = "gaussian constant " + (e.infinite ? std::string("inf") : fixed(e.value)) + " (" + to_string(e.status) + ")";
  return r;
}

// x ↦ (x₁, x₂) and x ↦ (x₂, x₃) into one R² target with p = 4/3.
inline bool is_box_chain(const QuiverDatum& d) {
  if (d.source_dims != std::vector<std::size_t>{3} || d.target_dims != std::vector<std::size_t>{2}) return false;
  if (d.inv_exponents[0] != Rational(3, 4) || d.arrows.size() != 2) return false;
  const RationalMatrix first{{1, 0, 0}, {0, 1, 0}};
  const RationalMatrix second{{0, 1, 0}, {0, 0, 1}};
  return d.arrows[0].matrix == first && d.arrows[1].matrix == second;
}

// Two 1-D arrows x ↦ b₁x, b₂x into one R¹ target with p = 2.
inline std::optional<std::pair<double, double>> power_law_pair(const QuiverDatum& d) {
  if (d.source_dims != std::vector<std::size_t>{1} || d.target_dims != std::vector<std::size_t>{1}) return {};
  if (d.inv_exponents[0] != Rational(1, 2) || d.arrows.size() != 2) return {};
  return std::make_pair(d.arrows[0].matrix(0, 0).get_d(), d.arrows[1].matrix(0, 0).get_d());
}

// diag(t, 1/t, t, ...) on every arrow.
inline std::vector<RealMatrix> gaussian_family(const QuiverDatum& d, double t) {
  std::vector<RealMatrix> out;
  for (const auto& a : d.arrows) {
    const std::size_t e = d.target_dims[a.target];
    RealMatrix m(e, e);
    for (std::size_t k = 0; k < e; ++k) m(k, k) = k % 2 == 0 ? t : 1.0 / t;
    out.push_back(m);
  }
  return out;
}

// Gaussian A = I per arrow; the region is a box where the source integrand is below e^{−25π}.
inline std::vector<Region> gaussian_regions(const QuiverDatum& d) {
  std::vector<Region> regions;
  for (std::size_t i = 0; i < d.num_sources(); ++i) {
    RealMatrix m(d.source_dims[i], d.source_dims[i]);
    for (auto a : d.arrows_from(i)) {
      const RealMatrix b = d.arrows[a].real_matrix();
      m += b.transpose() * b;
    }
    // λ_min(M) ≥ 1 / ‖M⁻¹‖_F
    const double lambda = 1.0 / frobenius_norm(spd_inverse(symmetrize(m)));
    const double half = 5.0 / std::sqrt(lambda);
    regions.push_back(Region{std::vector<double>(d.source_dims[i], -half), std::vector<double>(d.source_dims[i], half)});
  }
  return regions;
}

inline std::vector<std::string> ratio_row(double parameter, const RatioReport& rr) {
  return {general(parameter), general(rr.lhs), general(rr.rhs), general(rr.ratio)};
}

inline Result run_verify(const QuiverDatum& d, const Options& o) {
  require_valid(d);
  const std::string& kind = o.functions;
  std::vector<double> params;
  if (!o.param.empty()) params = parse_range(o.param, kind == "powerlaw" ? 3 : 1);

  std::function<RatioReport(double)> probe;
  double fallback = 1.0;
  std::string parameter_name;
  if (kind == "gaussian") {
    parameter_name = "t";
    probe = [&](double t) {
      if (!(t > 0.0)) throw UsageError("gaussian family parameter must be positive");
      return ratio_gaussian(d, gaussian_family(d, t));
    };
  } else if (kind == "boxes") {
    if (!is_box_chain(d)) throw UsageError("--functions boxes needs the two-projection chain datum");
    parameter_name = "N";
    fallback = 10.0;
    probe = [](double n) {
      if (!(n >= 1.0)) throw UsageError("box chain parameter N must be at least 1");
      return ratio_boxes_chain(Rational(n));
    };
  } else if (kind == "powerlaw") {
    const auto pair = power_law_pair(d);
    if (!pair) throw UsageError("--functions powerlaw needs two scalar arrows R -> R with p = 2");
    parameter_name = "p";
    fallback = 1.001;
    probe = [pair](double p) {
      if (!(p > 1.0)) throw UsageError("power-law exponent must exceed 1");
      return ratio_powerlaw(pair->first, pair->second, p);
    };
  } else {
    MonteCarloConfig mc;
    mc.budget = o.budget;
    mc.seed = o.seed;
    mc.workers = o.workers;
    if (mc.budget == 0) throw UsageError("--budget must be positive");
    if (is_box_chain(d)) {
      parameter_name = "N";
      fallback = 10.0;
      probe = [&d, mc](double n) {
        if (!(n >= 1.0)) throw UsageError("box chain parameter N must be at least 1");
        const BoxUnion s = cross_set(Rational(n));
        const std::vector<TestFunction> fs{s, s};
        return ratio_monte_carlo(d, fs, {Region{{0, 0, 0}, {n, n, n}}}, mc);
      };
    } else {
      parameter_name = "t";
      probe = [&d, mc](double t) {
        if (!(t > 0.0)) throw UsageError("gaussian family parameter must be positive");
        std::vector<TestFunction> fs;
        for (auto& m : gaussian_family(d, t)) fs.emplace_back(GaussianFunction{m});
        auto regions = gaussian_regions(d);
        // A = diag(t, 1/t, ...) narrows the integrand by at most max(t, 1/t); widen accordingly.
        const double widen = std::sqrt(std::max(t, 1.0 / t));
        for (auto& reg : regions)
          for (std::size_t k = 0; k < reg.lo.size(); ++k) {
            reg.lo[k] *= widen;
            reg.hi[k] *= widen;
          }
        return ratio_monte_carlo(d, fs, regions, mc);
      };
    }
  }
  if (params.empty()) params = {fallback};

  Result r;
  r.report.add("command", "verify");
  r.report.add("functions", kind);
  if (params.size() == 1) {
    const RatioReport rr = probe(params[0]);
    r.report.add(parameter_name, general(params[0]));
    r.report.add("method", to_string(rr.method));
    r.report.add("lhs", general(rr.lhs));
    if (rr.lhs_stderr) r.report.add("lhs_stderr", general(*rr.lhs_stderr));
    r.report.add("rhs", general(rr.rhs));
    r.report.add("ratio", rr.degenerate ? "degenerate (0/0)" : fixed(rr.ratio));
    if (rr.ratio_stderr) r.report.add("ratio_stderr", general(*rr.ratio_stderr));
    r.summary = "ratio " + (rr.degenerate ? std::string("degenerate") : fixed(rr.ratio)) + " (" +
                to_string(rr.method) + ", " + parameter_name + "=" + general(params[0]) + ")";
  } else {
    Table t;
    t.columns = {"parameter", "lhs", "rhs", "ratio"};
    double last = 0.0;
    for (double p : params) {
      const RatioReport rr = probe(p);
      t.rows.push_back(ratio_row(p, rr));
      last = rr.ratio;
    }
    r.report.add("parameter", parameter_name);
    r.report.add("points", std::to_string(params.size()));
    r.report.table = std::move(t);
    r.summary = "ratio sweep over " + std::to_string(params.size()) + " values of " + parameter_name +
                ", last ratio " + fixed(last);
  }
  return r;
}

inline Result run_split(const QuiverDatum& d, const Options&) {
  const auto parts = split_sources(d);
  Result r;
  r.report.add("command", "split");
  r.report.add("parts", std::to_string(parts.size()));
  for (const auto& part : parts) {
    const std::string prefix = "part" + std::to_string(part.source + 1);
    std::string origins;
    for (std::size_t k = 0; k < part.origin_target.size(); ++k)
      origins += (k ? " " : "") + std::to_string(part.origin_target[k] + 1) + "<-a" +
                 std::to_string(part.origin_arrow[k] + 1);
    r.report.add(prefix + ".targets", origins);
    // One line: newlines and the indentation after them dropped.
    std::string json;
    bool line_start = false;
    for (char ch : serialize_datum(part.datum)) {
      if (ch == '\n') {
        line_start = true;
        continue;
      }
      if (line_start && ch == ' ') continue;
      line_start = false;
      json += ch;
    }
    r.report.add(prefix + ".datum", json);
  }
  r.summary = "split into " + std::to_string(parts.size()) + " subspace quivers";
  return r;
}

inline Result run_counterexample(const QuiverDatum& d, const Options& o) {
  const SubspaceFamily family = parse_witness(read_file(o.witness));
  check_family_dims(d, family);
  const auto grid = parse_range(o.big_r, 1);
  if (grid.size() < 2) throw UsageError("--R needs a range A:B");
  if (grid.front() < 1.0) throw UsageError("--R range must start at 1 or above");
  if (!(o.small_r > 0.0) || o.small_r > 1.0) throw UsageError("--r must lie in (0, 1]");
  const GrowthReport g = counterexample_from_witness(d, family, SweepAxis::BigR, grid, o.small_r);
  const DimensionTerms terms = evaluate_dimension_inequality(d, family, Variant::PerArrow);

  Result r;
  r.report.add("command", "counterexample");
  r.report.add("witness", describe(family));
  r.report.add("witness_violates", terms.violated() ? "yes" : "no");
  r.report.add("exponent", to_string(g.exponent));
  r.report.add("slope", fixed(g.slope));
  r.report.add("shrink", general(g.shrink));
  r.report.add("containment", g.containment_verified ? "verified" : "failed");
  Table t;
  t.columns = {"parameter", "lhs", "rhs", "ratio"};
  for (const auto& row : g.rows) t.rows.push_back({general(row.parameter), general(row.lhs), general(row.rhs), general(row.ratio)});
  r.report.table = std::move(t);
  const bool grows = g.containment_verified && g.slope > 0.01;
  r.exit_code = grows ? 1 : 0;
  r.summary = std::string(grows ? "ratio grows" : "no growth") + ", slope " + fixed(g.slope, 4) + " (exact " +
              to_string(g.exponent) + ")";
  if (!g.containment_verified) r.summary += ", containment failed";
  return r;
}

inline Result run_sandwich(const QuiverDatum& d, const Options& o) {
  const SandwichReport s = sandwich_bounds(d, optimizer_config(o));
  std::string alpha_list = "[";
  for (std::size_t j = 0; j < s.alphas.size(); ++j) alpha_list += (j ? "," : "") + std::to_string(s.alphas[j]);
  alpha_list += "]";
  Result r;
  const std::string bounds = "BL=" + (s.bl.infinite ? std::string("inf") : fixed(s.bl.value)) + ", alpha=" + alpha_list + ", bracket=[" + fixed(s.lower) +
                             "," + fixed(s.upper) + "]";
  r.report.add("command", "sandwich");
  r.report.add("bounds", bounds);
  r.report.add("status", to_string(s.bl.status));
  r.report.add("alpha_product", general(s.alpha_product));
  for (std::size_t k = 0; k < s.parts.size(); ++k)
    add_estimate(r.report, s.parts[k], "part" + std::to_string(k + 1) + ".");
  r.exit_code = estimate_exit(s.bl);
  r.summary = bounds;
  return r;
}

}  // namespace detail

/// `args` excludes the program name. The report goes to `out` (or to --out, in which case `out`
/// gets the one-line summary); diagnostics go to `err`.
inline CommandOutcome run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  detail::Options o;
  CLI::App app{"Brascamp-Lieb constants for bipartite quivers", "qbl"};
  app.require_subcommand(1);

  auto shared = [&o](CLI::App* sub) {
    sub->add_option("datum", o.datum_path, "datum file (JSON)")->required();
    sub->add_option("--seed", o.seed, "random seed")->capture_default_str();
    sub->add_option("--tol", o.tol, "gradient tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--max-iters", o.max_iters, "iteration cap per restart");
    sub->add_option("--restarts", o.restarts, "optimizer restarts")->check(CLI::Range(1, 1 << 16));
    sub->add_option("--workers", o.workers, "worker threads")->check(CLI::Range(1, 256));
    sub->add_option("--out", o.out, "write the report to this file");
    sub->add_option("--format", o.format, "report format")->check(CLI::IsMember({"text", "csv"}));
  };

  auto* check = app.add_subcommand("check", "check the scaling and dimension conditions");
  shared(check);
  check->add_option("--variant", o.variant, "dimension condition")->required()->check(CLI::IsMember({"per-arrow", "cd"}));
  check->add_option("--lattice-max", o.lattice_max, "subspace lattice size cap per source")->check(CLI::PositiveNumber);

  auto* gaussian = app.add_subcommand("gaussian", "optimize the Gaussian constant");
  shared(gaussian);
  gaussian->add_option("--method", o.method, "optimizer")->check(CLI::IsMember({"grad", "fp"}));

  auto* verify = app.add_subcommand("verify", "evaluate the inequality ratio on test functions");
  shared(verify);
  verify->add_option("--functions", o.functions, "test-function family")
      ->required()
      ->check(CLI::IsMember({"gaussian", "boxes", "powerlaw", "mc"}));
  verify->add_option("--param", o.param, "family parameter X, or a geometric sweep A:B");
  verify->add_option("--budget", o.budget, "Monte Carlo samples per source");

  auto* split = app.add_subcommand("split", "split into subspace quivers, one per source");
  shared(split);

  auto* counter = app.add_subcommand("counterexample", "blow-up family from a witness");
  shared(counter);
  counter->add_option("--witness", o.witness, "witness file")->required();
  counter->add_option("--R", o.big_r, "range A:B for the large radius")->required();
  counter->add_option("--r", o.small_r, "small radius in (0, 1]");

  auto* sandwich = app.add_subcommand("sandwich", "bracket the shared-function constant");
  shared(sandwich);

  CommandOutcome outcome;
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return outcome;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    outcome.exit_code = 2;
    outcome.summary = e.what();
    return outcome;
  }

  detail::Result result;
  try {
    const QuiverDatum d = parse_datum(read_file(o.datum_path));
    if (check->parsed())
      result = detail::run_check(d, o);
    else if (gaussian->parsed())
      result = detail::run_gaussian(d, o);
    else if (verify->parsed())
      result = detail::run_verify(d, o);
    else if (split->parsed())
      result = detail::run_split(d, o);
    else if (counter->parsed())
      result = detail::run_counterexample(d, o);
    else
      result = detail::run_sandwich(d, o);
  } catch (const detail::UsageError& e) {
    err << "error: " << e.what() << "\n";
    return {2, std::nullopt, e.what()};
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return {2, std::nullopt, e.what()};
  }

  result.report.fields.insert(result.report.fields.begin(), {"summary", result.summary});
  const std::string text = render(result.report, o.format == "csv" ? Format::Csv : Format::Text);
  outcome.exit_code = result.exit_code;
  outcome.summary = result.summary;
  if (o.out.empty()) {
    out << text;
    return outcome;
  }
  std::ofstream file(o.out, std::ios::binary);
  file << text;
  file.close();
  if (!file) {
    err << "error: cannot write '" << o.out << "'\n";
    return {2, std::nullopt, "cannot write '" + o.out + "'"};
  }
  outcome.report_path = o.out;
  out << result.summary << '\n';
  return outcome;
}

}  // namespace qbl::cli
