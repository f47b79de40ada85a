// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hellinger/cli.hpp"
#include "hellinger/hellinger.hpp"
#include "support/oracles.hpp"

using namespace hellinger;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kIdentityTol = 1e-9;
constexpr double kVocTol = 1e-9;
constexpr double kRepresentationTol = 1e-8;
constexpr double kOracleTol = 1e-12;
constexpr double kExponent = -0.5;
constexpr double kExponentTol = 0.05;
constexpr double kWitnessRatio = 0.1;
constexpr double kBoundSlack = 1.05;
constexpr double kProductThreshold = 0.25;
constexpr double kAc1Seconds = 10.0;
constexpr double kAc5Seconds = 60.0;
constexpr double kAc6Seconds = 60.0;

struct Line {
  std::string id;
  bool pass = false;
  std::string detail;
};

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Line guarded(const std::string& id, const std::function<Line()>& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    return {id, false, std::string("aborted: ") + e.what()};
  }
}

json fixture() { return cli::read_json_file(std::string(HELLINGER_TEST_DATA) + "/scenarios.json"); }

Line ac1() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cases = oracle::random_cases(20, 5, 101);
  double worst = 0.0;
  int checked = 0;
  for (const auto& rc : cases) {
    for (Complex z : rc.z) {
      const auto fsys = fundamental_system(rc.family, z, 51);
      if (fsys.truncation()) return {"AC1", false, "recursion truncated on a random family"};
      worst = std::max(worst, check_identities(fsys, rc.family, 0, 50).max_defect());
      ++checked;
    }
  }
  const double t = seconds_since(t0);
  const bool ok = checked == 100 && worst <= kIdentityTol && t < kAc1Seconds;
  return {"AC1", ok,
          "identities on 20 random families x 5 z, j <= 50: max scaled defect " + sci(worst) + " (tol " +
              sci(kIdentityTol) + "), " + sci(t) + " s (limit " + sci(kAc1Seconds) + " s)"};
}

Line ac2() {
  std::mt19937_64 gen(202);
  const auto cases = oracle::random_cases(20, 5, 101);
  double residual = 0.0, delta = 0.0;
  for (const auto& rc : cases) {
    for (Complex z : rc.z) {
      for (Side side : {Side::right, Side::left}) {
        const int rows = side == Side::right ? rc.n : 1;
        const int cols = side == Side::right ? 1 : rc.n;
        std::vector<MatrixC> forcing;
        for (int j = 0; j < 50; ++j) forcing.push_back(oracle::random_matrix(rows, cols, gen));
        InhomogeneousProblem problem{rc.family, z, forcing, side, oracle::random_matrix(rows, cols, gen),
                                     oracle::random_matrix(rows, cols, gen), 50};
        const auto seq = solve_inhomogeneous(problem, {}, 1.0);
        residual = std::max(residual, seq.max_residual);
        const auto fsys = fundamental_system(rc.family, z, 50);
        const auto c = voc_coefficients(fsys, forcing, 0, 50, problem.base1, problem.base2, side);
        const auto d = delta_system_defect(fsys, rc.family, c, forcing);
        delta = std::max({delta, d.homogeneous, d.forcing});
      }
    }
  }
  return {"AC2", residual <= kVocTol && delta <= kVocTol,
          "forced solutions on the AC1 set, both sides, J = 50: max scaled residual " + sci(residual) +
              ", max delta-system defect " + sci(delta) + " (tol " + sci(kVocTol) + ")"};
}

Line ac3() {
  std::mt19937_64 gen(303);
  std::uniform_real_distribution<double> radius(0.0, 2.0), angle(0.0, 2.0 * std::numbers::pi), unit(-1.0, 1.0);
  std::vector<OperatorFamily> families{counterexample_family(2), free_jacobi_family(2), geometric_family(1, 2.0),
                                       geometric_family(2, 2.0), diag_geometric_family({2.0, 3.0})};
  for (const auto& rc : oracle::random_cases(12, 1, 33)) families.push_back(rc.family);
  double worst = 0.0;
  int count = 0;
  for (const auto& family : families) {
    for (int trial = 0; trial < 3; ++trial) {
      const Complex z0(unit(gen), unit(gen));
      const Complex z = z0 + std::polar(radius(gen), angle(gen));
      const auto fs0 = fundamental_system(family, z0, 100);
      const auto fsz = fundamental_system(family, z, 100);
      if (fs0.truncation() || fsz.truncation()) return {"AC3", false, "recursion truncated below J = 100"};
      for (Fundamental f : {Fundamental::P, Fundamental::Q, Fundamental::P_plus, Fundamental::Q_plus}) {
        for (int k : {0, 3, 40}) {
          worst = std::max(worst, hellinger_representation(fs0, family, as_solution(fsz, f), k).max_defect);
          ++count;
        }
      }
    }
  }
  return {"AC3", worst <= kRepresentationTol,
          std::to_string(count) + " two-path representations (5 builtin + 12 random families, |z-z0| <= 2, J = 100): "
          "max scaled defect " + sci(worst) + " (tol " + sci(kRepresentationTol) + ")"};
}

Line ac4() {
  const auto results = run_oracle_scenarios(load_oracle_scenarios(fixture()), kOracleTol);
  double worst = 0.0;
  bool ok = !results.empty();
  std::string failing;
  for (const auto& r : results) {
    worst = std::max(worst, r.comparison.max_relative_error);
    if (!(r.pass && r.comparison.J == 200)) {
      ok = false;
      failing += " " + r.scenario.name;
    }
  }
  return {"AC4", ok,
          std::to_string(results.size()) + " exact-oracle scenarios, j <= 200: max relative error " + sci(worst) +
              " (tol " + sci(kOracleTol) + ")" + (failing.empty() ? "" : "; failing:" + failing)};
}

Line ac5() {
  const auto t0 = std::chrono::steady_clock::now();
  CounterexampleOptions opt;
  opt.J_exponent = 10000;
  opt.J_bounded = 1000;
  opt.J_verdict = 2000;
  opt.p_list = {2.0, 2.1};
  const auto r = run_counterexample(opt);
  const double t = seconds_since(t0);
  bool ok = t < kAc5Seconds;
  std::string detail = "exponents";
  for (const auto& f : r.fits) {
    const bool in = f.growth.kind == GrowthKind::decay_power && f.growth.window_lo == 1000 &&
                    f.growth.window_hi == 10000 && std::abs(f.growth.exponent - kExponent) <= kExponentTol;
    ok = ok && in;
    detail += std::string(" ") + to_string(f.sequence) + " " + sci(f.growth.exponent);
  }
  for (const auto& v : r.verdicts) {
    const Membership want = v.p > 2.0 ? Membership::all_in : Membership::not_all_in;
    ok = ok && v.right.verdict == want;
    detail += "; p = " + format_exponent(v.p) + " " + to_string(v.right.verdict);
  }
  for (Complex z : {Complex(0.0, 1.0), Complex(0.0, -1.0)}) {
    double best = 0.0;
    for (const auto& w : r.witnesses) {
      if (w.z == z && w.bounded && std::isfinite(w.sup)) best = std::max(best, w.trailing_inf / w.sup);
    }
    ok = ok && best >= kWitnessRatio;
    detail += "; z = " + format_complex(z) + " witness inf/sup " + sci(best);
  }
  detail += "; " + sci(t) + " s (limit " + sci(kAc5Seconds) + " s)";
  return {"AC5", ok, detail};
}

Line ac6() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<Scenario> chosen;
  for (const auto& s : load_scenarios(fixture())) {
    const std::string name = s.family.at("name");
    if ((name == "geometric" || name == "diag_geometric") && s.z0 == Complex(0.0) && (s.p == 1.0 || s.p == 2.0) &&
        s.grid.empty() && !s.symmetric_shortcut && s.expect == "pass") {
      chosen.push_back(s);
    }
  }
  const auto report = run_invariance_scenarios(chosen);
  const double t = seconds_since(t0);
  bool ok = chosen.size() == 4 && t < kAc6Seconds;
  std::string detail;
  for (const auto& r : report.results) {
    const auto& h = r.report;
    bool scenario_ok = h.status == "pass" && h.points.size() == 64;
    for (const auto& g : h.points) {
      scenario_ok = scenario_ok && g.k0 && g.product <= kProductThreshold && g.bounds.size() == 4 &&
                    g.right.verdict == Membership::all_in && g.left && g.left->verdict == Membership::all_in;
      for (const auto& b : g.bounds) scenario_ok = scenario_ok && b.N <= 4.0 * b.C * b.M * kBoundSlack;
    }
    ok = ok && scenario_ok;
    detail += (detail.empty() ? "" : ", ") + r.scenario.name + " " + (scenario_ok ? "pass" : h.status);
  }
  return {"AC6", ok,
          std::to_string(chosen.size()) + " scenarios on the 64-point grid: " + detail + "; " + sci(t) + " s (limit " +
              sci(kAc6Seconds) + " s)"};
}

Line ac7() {
  const auto family = geometric_family(1, 2.0);
  const json sin_spec{{"kind", "sin"}}, lin_spec{{"kind", "linear"}};
  const auto sin_f = scalar_perturbation(sin_spec, 1);
  const auto lin_f = scalar_perturbation(lin_spec, 1);
  bool ok = true;
  std::string detail;
  for (double p : {1.0, 2.0}) {
    const auto r = perturbation_check(family, sin_f, sin_spec, sin_f, sin_spec, p, 400);
    ok = ok && r.pass();
    detail += "sin j at p = " + format_exponent(p) + ": " + (r.pass() ? "all-in-lp kept" : "not kept") + "; ";
  }
  const auto lin = perturbation_check(family, lin_f, lin_spec, lin_f, lin_spec, 1.0, 400);
  ok = ok && !lin.precondition_ok && !lin.right && !lin.left;
  detail += std::string("F_j = j E: ") + (lin.precondition_ok ? "accepted" : "rejected at the gate");
  return {"AC7", ok, detail};
}

Line ac8() {
  const int m_max = 500;
  const auto seq = exact_fundamental_at_rational(counterexample_family(2), GaussianRational(0), 2 * m_max);
  bool ok = true;
  int first_bad = -1;
  for (int m = 0; m <= m_max && ok; ++m) {
    mpz_class odd(1), even(1);
    for (int i = 1; i <= m; ++i) {
      odd *= 2 * i - 1;
      even *= 2 * i;
    }
    mpq_class ratio(odd, even);
    ratio.canonicalize();
    const auto& q = seq.at(Fundamental::Q, 2 * m);
    const bool scalar = q(0, 1) == GaussianRational(0) && q(1, 0) == GaussianRational(0) && q(0, 0) == q(1, 1);
    if (!scalar || !q(0, 0).is_real() || abs(q(0, 0).re) != ratio) {
      ok = false;
      first_bad = m;
    }
  }
  return {"AC8", ok,
          ok ? "||Q_2m(0)|| = (2m-1)!!/(2m)!! exactly for m = 0.." + std::to_string(m_max)
             : "mismatch at m = " + std::to_string(first_bad)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string without_timestamp(const std::string& text) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.find("\"timestamp\":") == std::string::npos) out += line + "\n";
  }
  return out;
}

Line ac9() {
  const std::string exe = HELLINGER_KIT_EXE;
  const std::string data = HELLINGER_SAMPLE_DATA;
  const auto dir = fs::temp_directory_path() / "hellinger_acceptance_determinism";
  const std::vector<std::string> runs{
      "recur --family " + data + "/counterexample.json --z 0 --J 100",
      "identities --family " + data + "/random2.json --z 1+0.5i --J 50",
      "hellinger --family " + data + "/geometric.json --z0 0 --p 2 --grid default --J 2000",
      "lp-scan --family " + data + "/diag_geometric.json --p 2 --J 400",
      "oracle --family " + data + "/counterexample.json --z 1/2+i --J 30",
  };
  int identical = 0;
  std::string detail;
  for (const auto& args : runs) {
    fs::remove_all(dir);
    const std::string cmd = "\"" + exe + "\" " + args + " --out " + dir.string() + " > /dev/null 2>&1";
    std::vector<std::string> reports;
    std::vector<std::string> csvs;
    for (int rep = 0; rep < 2; ++rep) {
      if (std::system(cmd.c_str()) != 0) return {"AC9", false, "command failed: " + args};
      reports.push_back(without_timestamp(slurp(dir / "report.json")));
      std::string all;
      for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".csv") all += e.path().filename().string() + slurp(e.path());
      }
      csvs.push_back(all);
    }
    if (reports[0] == reports[1] && csvs[0] == csvs[1] && !reports[0].empty()) {
      ++identical;
    } else {
      detail += " differs: " + args.substr(0, args.find(' '));
    }
  }
  fs::remove_all(dir);
  return {"AC9", identical == static_cast<int>(runs.size()),
          std::to_string(identical) + "/" + std::to_string(runs.size()) +
              " repeated CLI runs byte-identical apart from the timestamp" + detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Line()>>> criteria{
      {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4}, {"AC5", ac5},
      {"AC6", ac6}, {"AC7", ac7}, {"AC8", ac8}, {"AC9", ac9},
  };
  int failed = 0;
  for (const auto& [id, fn] : criteria) {
    const Line l = guarded(id, fn);
    std::cout << l.id << (l.pass ? " PASS " : " FAIL ") << l.detail << std::endl;
    if (!l.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
