#pragma once

/**
 * @file experiments.hpp
 * @brief Scripted reproductions: the zero-diagonal family with
 *        A_{j+1,j} = A_{j,j+1} = (j+1)E, invariance scenarios over z-grids,
 *        and floating-versus-exact oracle scenarios.
 */

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "hellinger/complex_io.hpp"
#include "hellinger/error.hpp"
#include "hellinger/exact.hpp"
#include "hellinger/lp_analysis.hpp"
#include "hellinger/operator_model.hpp"
#include "hellinger/parallel.hpp"
#include "hellinger/recurrence.hpp"

namespace hellinger {

inline constexpr int kFixtureVersion = 1;

// ---------------------------------------------------------------------------
// Counterexample

struct CounterexampleOptions {
  int n = 2;
  int J_exponent = 10000;
  int J_bounded = 1000;
  int J_verdict = 2000;
  std::vector<double> p_list{2.0, 2.1};
  double exponent_target = -0.5;
  double exponent_tol = 0.05;
  double witness_ratio = 0.1;      ///< required trailing inf / sup
  double trailing_fraction = 0.1;  ///< trailing window as a fraction of J_bounded
  int theta_steps = 9;             ///< a = cos(theta), theta in [0, pi/2]
  int phi_steps = 12;              ///< b = sin(theta) e^{i phi}
};

struct ExponentFit {
  Fundamental sequence = Fundamental::P;
  GrowthClass growth;
  bool pass = false;
};

struct MembershipRow {
  double p = 2.0;
  Membership expected = Membership::inconclusive;
  SideVerdict right;
  bool pass = false;
};

/// u_j = cos(theta) Q_j e_c + sin(theta) e^{i phi} P_j e_c.
struct Witness {
  Complex z;
  int column = 0;
  double theta = 0.0;
  double phi = 0.0;
  double sup = 0.0;
  double trailing_inf = 0.0;
  double score = 0.0;  ///< trailing_inf / sup
  bool bounded = false;
  std::vector<double> norms;  ///< ||u_j||, j = 0..J_bounded
};

struct CounterexampleReport {
  CounterexampleOptions options;
  std::vector<ExponentFit> fits;
  std::vector<MembershipRow> verdicts;
  std::vector<Witness> witnesses;  ///< best per (z, column)
  std::vector<double> P_norms;     ///< ||P_j(0)||, j = -1..J_exponent
  std::vector<double> Q_norms;
  bool pass_exponents = false;
  bool pass_verdicts = false;
  bool pass_witnesses = false;
  std::string note;

  bool pass() const { return pass_exponents && pass_verdicts && pass_witnesses; }
};

namespace detail {

inline Witness score_witness(const FundamentalSystem& fs, int column, double theta, double phi, int J,
                             double trailing_fraction) {
  Witness w;
  w.z = fs.z();
  w.column = column;
  w.theta = theta;
  w.phi = phi;
  const Complex a = std::cos(theta);
  const Complex b = std::polar(std::sin(theta), phi);
  w.norms.reserve(static_cast<std::size_t>(J) + 1);
  double first_half = 0.0, second_half = 0.0;
  const int trailing_start = J - static_cast<int>(std::floor(trailing_fraction * J));
  w.trailing_inf = kInf;
  for (int j = 0; j <= J; ++j) {
    const VectorC u = a * fs.Q(j).col(column) + b * fs.P(j).col(column);
    const double v = u.norm();
    w.norms.push_back(v);
    (j < J / 2 ? first_half : second_half) = std::max(j < J / 2 ? first_half : second_half, v);
    if (j >= trailing_start) w.trailing_inf = std::min(w.trailing_inf, v);
  }
  w.sup = std::max(first_half, second_half);
  w.bounded = std::isfinite(w.sup) && second_half <= kBoundedGrowthFactor * first_half;
  w.score = w.sup > 0.0 ? w.trailing_inf / w.sup : 0.0;
  return w;
}

}  // namespace detail

/// (a) decay exponents of ||P_j(0)||, ||Q_j(0)|| on [J/10, J];
/// (b) membership at z = 0 for each p, expected all-in-lp iff p > 2;
/// (c) bounded solutions at z = +-i that do not tend to zero, searched over
///     the initial-condition pairs of each block column.
inline CounterexampleReport run_counterexample(const CounterexampleOptions& opt = {}) {
  if (opt.J_exponent < 10000) throw ConfigError("counterexample: J_exponent must be >= 10000");
  if (opt.J_bounded < 1000) throw ConfigError("counterexample: J_bounded must be >= 1000");
  if (opt.p_list.empty()) throw ConfigError("counterexample: p_list must be non-empty");
  for (double p : opt.p_list) check_exponent(p);
  CounterexampleReport r;
  r.options = opt;
  const auto family = counterexample_family(opt.n);

  const auto fs0 = fundamental_system(family, 0.0, opt.J_exponent);
  if (fs0.truncation()) throw NumericalError("counterexample recursion truncated: " + fs0.truncation()->detail);
  r.P_norms = fs0.norms(Fundamental::P);
  r.Q_norms = fs0.norms(Fundamental::Q);
  const std::pair<int, int> window{opt.J_exponent / 10, opt.J_exponent};
  r.pass_exponents = true;
  for (Fundamental f : {Fundamental::P, Fundamental::Q}) {
    ExponentFit fit;
    fit.sequence = f;
    fit.growth = growth_classify(f == Fundamental::P ? r.P_norms : r.Q_norms, -1, window);
    fit.pass = fit.growth.kind == GrowthKind::decay_power &&
               std::abs(fit.growth.exponent - opt.exponent_target) <= opt.exponent_tol;
    r.pass_exponents = r.pass_exponents && fit.pass;
    if (fit.growth.kind == GrowthKind::inconclusive) r.note += std::string(to_string(f)) + " fit: " + fit.growth.note + "; ";
    r.fits.push_back(std::move(fit));
  }

  const auto mem_fs = fundamental_system(family, 0.0, opt.J_verdict, Scaling::rescaled);
  r.pass_verdicts = true;
  for (double p : opt.p_list) {
    MembershipRow row;
    row.p = p;
    row.expected = p > 2.0 ? Membership::all_in : Membership::not_all_in;
    row.right = side_membership(mem_fs, Side::right, p, opt.J_verdict);
    row.pass = row.right.verdict == row.expected;
    r.pass_verdicts = r.pass_verdicts && row.pass;
    r.verdicts.push_back(std::move(row));
  }

  r.pass_witnesses = true;
  for (Complex z : {Complex(0.0, 1.0), Complex(0.0, -1.0)}) {
    const auto fs = fundamental_system(family, z, opt.J_bounded);
    if (fs.truncation()) throw NumericalError("counterexample recursion truncated at z = " + format_complex(z));
    for (int c = 0; c < opt.n; ++c) {
      Witness best;
      best.score = -1.0;
      for (int t = 0; t < opt.theta_steps; ++t) {
        const double theta = opt.theta_steps == 1 ? 0.0 : (std::numbers::pi / 2.0) * t / (opt.theta_steps - 1);
        const int phis = (t == 0) ? 1 : opt.phi_steps;
        for (int f = 0; f < phis; ++f) {
          const double phi = 2.0 * std::numbers::pi * f / opt.phi_steps;
          auto w = detail::score_witness(fs, c, theta, phi, opt.J_bounded, opt.trailing_fraction);
          if (w.bounded && w.score > best.score) best = std::move(w);
        }
      }
      if (best.score < opt.witness_ratio) r.pass_witnesses = false;
      r.witnesses.push_back(std::move(best));
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Invariance scenarios

struct Scenario {
  std::string name;
  json family;
  Complex z0;
  double p = 2.0;
  int J = 200;
  std::vector<Complex> grid;  ///< empty: default 64-point grid around z0
  std::string expect = "pass";
  bool symmetric_shortcut = false;
};

struct ScenarioResult {
  Scenario scenario;
  HellingerReport report;
  bool matches = false;
};

struct ScenarioReport {
  std::vector<ScenarioResult> results;
  bool pass() const {
    for (const auto& r : results) {
      if (!r.matches) return false;
    }
    return true;
  }
};

inline double exponent_from_json(const json& j) {
  const double p = json_to_double(j);
  check_exponent(p);
  return p;
}

inline void check_fixture_version(const json& fixture) {
  if (!fixture.is_object() || !fixture.contains("version")) throw ConfigError("fixture needs a 'version' field");
  if (fixture.at("version").get<int>() != kFixtureVersion) {
    throw ConfigError("unsupported fixture version " + fixture.at("version").dump());
  }
}

inline std::vector<Scenario> load_scenarios(const json& fixture) {
  check_fixture_version(fixture);
  std::vector<Scenario> out;
  for (const auto& s : fixture.at("scenarios")) {
    Scenario sc;
    sc.name = s.at("name").get<std::string>();
    sc.family = s.at("family");
    sc.z0 = s.contains("z0") ? complex_from_json(s.at("z0")) : Complex(0.0);
    sc.p = exponent_from_json(s.at("p"));
    sc.J = s.value("J", 200);
    if (s.contains("grid") && s.at("grid").is_array()) {
      for (const auto& z : s.at("grid")) sc.grid.push_back(complex_from_json(z));
    } else if (s.contains("grid") && s.at("grid") != "default") {
      throw ConfigError("grid must be \"default\" or a list of points");
    }
    sc.expect = s.value("expect", std::string("pass"));
    if (sc.expect != "pass" && sc.expect != "fail" && sc.expect != "vacuous") {
      throw ConfigError("scenario expect must be pass|fail|vacuous");
    }
    sc.symmetric_shortcut = s.value("symmetric_shortcut", false);
    out.push_back(std::move(sc));
  }
  return out;
}

inline ScenarioReport run_invariance_scenarios(const std::vector<Scenario>& scenarios, int threads = 0) {
  ScenarioReport out;
  for (const auto& sc : scenarios) {
    HellingerOptions opt;
    opt.J = sc.J;
    opt.symmetric_shortcut = sc.symmetric_shortcut;
    opt.threads = threads;
    const auto family = build_family(sc.family);
    const auto grid = sc.grid.empty() ? default_grid(sc.z0) : sc.grid;
    ScenarioResult r{sc, hellinger_check(family, sc.z0, sc.p, grid, opt), false};
    r.matches = r.report.status == sc.expect;
    out.results.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Oracle scenarios

struct OracleScenario {
  std::string name;
  json family;
  std::string z;  ///< Gaussian rational text
  int J = 200;
};

struct OracleResult {
  OracleScenario scenario;
  OracleComparison comparison;
  bool pass = false;
};

inline constexpr double kOracleTolerance = 1e-12;

inline std::vector<OracleScenario> load_oracle_scenarios(const json& fixture) {
  check_fixture_version(fixture);
  std::vector<OracleScenario> out;
  for (const auto& s : fixture.at("oracle")) {
    OracleScenario sc;
    sc.name = s.at("name").get<std::string>();
    sc.family = s.at("family");
    sc.z = s.at("z").get<std::string>();
    sc.J = s.value("J", 200);
    out.push_back(std::move(sc));
  }
  return out;
}

inline std::vector<OracleResult> run_oracle_scenarios(const std::vector<OracleScenario>& scenarios,
                                                      double tol = kOracleTolerance, int threads = 0) {
  return parallel_map(
      scenarios.size(),
      [&](std::size_t i) {
        const auto& sc = scenarios[i];
        const auto family = build_family(sc.family);
        const auto zq = parse_gaussian_rational(sc.z);
        const Complex z = zq.to_complex();
        if (!(GaussianRational::from_complex(z) == zq)) {
          throw ConfigError("oracle point " + sc.z + " is not exactly representable in double precision");
        }
        const auto exact = exact_fundamental_at_rational(family, zq, sc.J);
        const auto fs = fundamental_system(family, z, sc.J);
        OracleResult r{sc, compare_with_oracle(fs, exact), false};
        r.pass = r.comparison.J == sc.J && r.comparison.max_relative_error <= tol;
        return r;
      },
      threads);
}

}  // namespace hellinger
