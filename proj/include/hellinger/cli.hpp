#pragma once

/**
 * @file cli.hpp
 * @brief The hellinger-kit command line: subcommand dispatch, config merging,
 *        report bundles and exit codes.
 *
 * Every subcommand reads a JSON config (--config) whose keys are the flag
 * names with '-' replaced by '_'; flags given on the command line override
 * the file. The merged config is echoed in the report.
 *
 * Exit codes: 0 success, 1 a verdict or acceptance check failed, 2 config
 * error, 3 numerical abort. Errors are also written to stderr as JSON.
 */

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <gmp.h>

#include "hellinger/complex_io.hpp"
#include "hellinger/error.hpp"
#include "hellinger/exact.hpp"
#include "hellinger/experiments.hpp"
#include "hellinger/lp_analysis.hpp"
#include "hellinger/operator_model.hpp"
#include "hellinger/parallel.hpp"
#include "hellinger/recurrence.hpp"
#include "hellinger/report.hpp"
#include "hellinger/voc.hpp"

namespace hellinger::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode { kExitOk = 0, kExitVerdict = 1, kExitConfig = 2, kExitNumerical = 3 };

namespace fs = std::filesystem;

struct CsvFile {
  std::string name;  ///< written as series_<name>.csv
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct Outcome {
  json result;
  bool verdict_ok = true;
  std::string verdict = "ok";
  std::optional<std::string> numerical_abort;  ///< report is written, then exit 3
  std::vector<CsvFile> series;
};

enum class FlagKind { integer, number, complex, text, json_value, boolean };

struct Flag {
  std::string key;
  FlagKind kind;
  std::string help;
};

struct Context {
  std::string command;
  json config;
  fs::path base_dir;
};

// ---------------------------------------------------------------------------
// Config access

inline json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

inline bool has(const Context& c, const std::string& key) { return c.config.contains(key) && !c.config[key].is_null(); }

inline int get_int(const Context& c, const std::string& key, int fallback) {
  if (!has(c, key)) return fallback;
  const auto& v = c.config[key];
  if (!v.is_number_integer()) throw ConfigError("'" + key + "' must be an integer");
  return v.get<int>();
}

inline int get_positive(const Context& c, const std::string& key, int fallback) {
  const int v = get_int(c, key, fallback);
  if (v < 1) throw ConfigError("'" + key + "' must be positive");
  return v;
}

inline double get_double(const Context& c, const std::string& key, double fallback) {
  return has(c, key) ? json_to_double(c.config[key]) : fallback;
}

inline double get_exponent(const Context& c, const std::string& key, double fallback) {
  const double p = get_double(c, key, fallback);
  check_exponent(p);
  return p;
}

inline Complex get_complex(const Context& c, const std::string& key, Complex fallback) {
  return has(c, key) ? complex_from_json(c.config[key]) : fallback;
}

inline std::string get_text(const Context& c, const std::string& key, const std::string& fallback) {
  if (!has(c, key)) return fallback;
  if (!c.config[key].is_string()) throw ConfigError("'" + key + "' must be a string");
  return c.config[key].get<std::string>();
}

inline bool get_bool(const Context& c, const std::string& key, bool fallback) {
  if (!has(c, key)) return fallback;
  if (!c.config[key].is_boolean()) throw ConfigError("'" + key + "' must be true or false");
  return c.config[key].get<bool>();
}

/// A JSON value given inline or as a path to a JSON file, resolved against
/// the config file's directory.
inline json get_document(const Context& c, const std::string& key) {
  const json& v = c.config.at(key);
  if (!v.is_string()) return v;
  const std::string s = v.get<std::string>();
  if (s == "default") return v;
  fs::path p(s);
  if (p.is_relative() && !c.base_dir.empty() && !fs::exists(p)) p = c.base_dir / p;
  return read_json_file(p);
}

inline OperatorFamily load_family(const Context& c) {
  if (!has(c, "family")) throw ConfigError("a family spec is required (--family or config key 'family')");
  json spec = get_document(c, "family");
  if (spec.is_object() && spec.contains("family") && !spec.contains("kind") && !spec.contains("name")) {
    spec = spec.at("family");
  }
  return build_family(spec);
}

inline NormKind get_norm(const Context& c) {
  const std::string n = get_text(c, "norm", "spectral");
  if (n == "spectral") return NormKind::spectral;
  if (n == "frobenius") return NormKind::frobenius;
  throw ConfigError("norm must be spectral|frobenius");
}

inline std::vector<Complex> get_grid(const Context& c, Complex z0) {
  if (!has(c, "grid")) return default_grid(z0);
  const json g = get_document(c, "grid");
  if (g.is_string() && g.get<std::string>() == "default") return default_grid(z0);
  if (!g.is_array() || g.empty()) throw ConfigError("grid must be \"default\" or a non-empty list of points");
  std::vector<Complex> out;
  for (const auto& z : g) out.push_back(complex_from_json(z));
  return out;
}

/// A block given as a vector (n complex values) or an n x n matrix. Rows of
/// a matrix are arrays of complex values; a two-element numeric array is
/// always read as one complex value [re, im].
inline MatrixC block_from_json(const json& j, int n, Side side, const std::string& what) {
  const bool matrix = j.is_array() && !j.empty() && j[0].is_array() &&
                      (j[0].size() != 2 || j[0][0].is_array() || j[0][0].is_string());
  if (matrix) return matrix_from_json(j, n);
  if (!j.is_array() || j.size() != static_cast<std::size_t>(n)) {
    throw ConfigError("dimension mismatch: " + what + " needs " + std::to_string(n) + " entries");
  }
  VectorC v(n);
  for (int i = 0; i < n; ++i) v(i) = complex_from_json(j[static_cast<std::size_t>(i)]);
  return side == Side::right ? MatrixC(v) : MatrixC(v.transpose());
}

// ---------------------------------------------------------------------------
// Formatting

inline std::string cell(double x) { return format_double(x); }

inline std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_csv(const fs::path& path, const CsvFile& csv) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  for (std::size_t i = 0; i < csv.header.size(); ++i) out << (i ? "," : "") << csv.header[i];
  out << '\n';
  for (const auto& row : csv.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

// ---------------------------------------------------------------------------
// Subcommands

inline const std::vector<Flag>& common_flags() {
  static const std::vector<Flag> flags{
      {"family", FlagKind::json_value, "family spec: JSON text or path to a JSON file"},
      {"out", FlagKind::text, "output directory for report.json, series_*.csv and run_meta.json"},
      {"threads", FlagKind::integer, "worker threads (0: HELLINGER_KIT_THREADS or all cores)"},
      {"norm", FlagKind::text, "matrix norm: spectral|frobenius"},
  };
  return flags;
}

inline CsvFile norm_series(const FundamentalSystem& fsys, double p, NormKind kind) {
  CsvFile csv{"fundamental",
              {"j", "norm_P", "norm_Q", "norm_P_plus", "norm_Q_plus", "partial_P", "partial_Q", "partial_P_plus",
               "partial_Q_plus"},
              {}};
  const std::array<Fundamental, 4> all{Fundamental::P, Fundamental::Q, Fundamental::P_plus, Fundamental::Q_plus};
  std::array<double, 4> acc{};
  for (int j = -1; j <= fsys.horizon(); ++j) {
    std::vector<std::string> row{std::to_string(j)};
    std::array<double, 4> v{};
    for (std::size_t s = 0; s < 4; ++s) {
      v[s] = fsys.norm(all[s], j, kind);
      row.push_back(cell(v[s]));
    }
    for (std::size_t s = 0; s < 4; ++s) {
      if (j >= 0) acc[s] = std::isinf(p) ? std::max(acc[s], v[s]) : acc[s] + std::pow(v[s], p);
      row.push_back(cell(std::isinf(p) ? acc[s] : std::pow(acc[s], 1.0 / p)));
    }
    csv.rows.push_back(std::move(row));
  }
  return csv;
}

inline Outcome cmd_recur(const Context& c) {
  const auto family = load_family(c);
  const Complex z = get_complex(c, "z", 0.0);
  const int J = get_positive(c, "J", 100);
  const double p = get_exponent(c, "p", 2.0);
  const std::string scaling = get_text(c, "scaling", "raw");
  if (scaling != "raw" && scaling != "rescaled") throw ConfigError("scaling must be raw|rescaled");
  const NormKind kind = get_norm(c);
  const auto fsys = fundamental_system(family, z, J, scaling == "raw" ? Scaling::raw : Scaling::rescaled);
  Outcome o;
  json growth = json::object();
  json last = json::object();
  for (Fundamental f : {Fundamental::P, Fundamental::Q, Fundamental::P_plus, Fundamental::Q_plus}) {
    growth[to_string(f)] = growth_classify(fsys.norms(f, kind), -1);
    last[to_string(f)] = json_number(fsys.norm(f, fsys.horizon(), kind));
  }
  o.result = {{"z", complex_to_json(z)},
              {"J", J},
              {"reached", fsys.horizon()},
              {"scaling", scaling},
              {"truncation", optional_truncation(fsys.truncation())},
              {"norms_at_reached", last},
              {"growth", growth}};
  o.series.push_back(norm_series(fsys, p, kind));
  if (fsys.truncation()) {
    o.numerical_abort = "recursion truncated at j = " + std::to_string(fsys.truncation()->index) + ": " +
                        fsys.truncation()->detail;
  }
  return o;
}

inline CsvFile solution_series(const SolutionSeq& seq) {
  CsvFile csv{"solution", {"j", "norm"}, {}};
  const auto& first = seq.at(-1);
  for (Eigen::Index r = 0; r < first.rows(); ++r) {
    for (Eigen::Index k = 0; k < first.cols(); ++k) {
      const std::string tag = "u_" + std::to_string(r) + "_" + std::to_string(k);
      csv.header.push_back(tag + "_re");
      csv.header.push_back(tag + "_im");
    }
  }
  for (int j = -1; j <= seq.horizon(); ++j) {
    const auto& m = seq.at(j);
    std::vector<std::string> row{std::to_string(j), cell(operator_norm(m))};
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index k = 0; k < m.cols(); ++k) {
        row.push_back(cell(m(r, k).real()));
        row.push_back(cell(m(r, k).imag()));
      }
    }
    csv.rows.push_back(std::move(row));
  }
  return csv;
}

inline Outcome cmd_solve(const Context& c) {
  const auto family = load_family(c);
  const int n = family.dim();
  const Complex z = get_complex(c, "z", 0.0);
  const int J = get_positive(c, "J", 100);
  const double tol = get_double(c, "tol", kTolRec);
  const std::string side_text = get_text(c, "side", "right");
  if (side_text != "right" && side_text != "left") throw ConfigError("side must be right|left");
  const Side side = side_text == "right" ? Side::right : Side::left;

  MatrixC u_m1, u_0;
  if (has(c, "init")) {
    const json init = get_document(c, "init");
    if (!init.is_object() || !init.contains("u_m1") || !init.contains("u_0")) {
      throw ConfigError("init needs keys u_m1 and u_0");
    }
    u_m1 = block_from_json(init.at("u_m1"), n, side, "init.u_m1");
    u_0 = block_from_json(init.at("u_0"), n, side, "init.u_0");
  } else {
    VectorC e = VectorC::Zero(n);
    e(0) = 1.0;
    u_m1 = side == Side::right ? MatrixC(VectorC::Zero(n)) : MatrixC(VectorC::Zero(n).transpose());
    u_0 = side == Side::right ? MatrixC(e) : MatrixC(e.transpose());
  }
  if (u_m1.rows() != u_0.rows() || u_m1.cols() != u_0.cols()) throw ConfigError("dimension mismatch in init");

  Outcome o;
  SolutionSeq seq;
  const bool forced = has(c, "forcing");
  if (forced) {
    const json f = get_document(c, "forcing");
    if (!f.is_array() || f.size() != static_cast<std::size_t>(J)) {
      throw ConfigError("forcing must list exactly J = " + std::to_string(J) + " entries F_0..F_{J-1}");
    }
    InhomogeneousProblem prob{family, z, {}, side, u_0, u_m1, J};
    for (std::size_t i = 0; i < f.size(); ++i) {
      prob.forcing.push_back(block_from_json(f[i], n, side, "forcing[" + std::to_string(i) + "]"));
    }
    seq = solve_inhomogeneous(prob, {get_bool(c, "compensated", false), get_norm(c)}, tol);
  } else {
    seq = solve_homogeneous(family, z, side, u_m1, u_0, J);
  }
  o.result = {{"z", complex_to_json(z)},
              {"J", J},
              {"side", side_text},
              {"inhomogeneous", forced},
              {"reached", seq.horizon()},
              {"max_residual", json_number(seq.max_residual)},
              {"superposition_defect", json_number(seq.superposition_defect)},
              {"tol", tol},
              {"truncation", optional_truncation(seq.truncation)}};
  o.verdict_ok = seq.max_residual <= tol;
  o.verdict = o.verdict_ok ? "pass" : "fail";
  o.series.push_back(solution_series(seq));
  if (seq.truncation) o.numerical_abort = "recursion truncated at j = " + std::to_string(seq.truncation->index);
  return o;
}

inline Outcome cmd_identities(const Context& c) {
  const auto family = load_family(c);
  const Complex z = get_complex(c, "z", 0.0);
  const int J = get_positive(c, "J", 50);
  const int j_lo = get_int(c, "j_lo", 0);
  const double tol = get_double(c, "tol", 1e-9);
  const auto fsys = fundamental_system(family, z, J + 1);
  Outcome o;
  if (fsys.truncation()) {
    throw NumericalError("recursion truncated at j = " + std::to_string(fsys.truncation()->index) + ": " +
                         fsys.truncation()->detail);
  }
  const auto rep = check_identities(fsys, family, j_lo, J, get_norm(c));
  o.result = {{"z", complex_to_json(z)}, {"J", J}, {"tol", tol}, {"identities", rep}};
  o.verdict_ok = rep.max_defect() <= tol;
  o.verdict = o.verdict_ok ? "pass" : "fail";
  CsvFile csv{"identities", {"identity", "max_defect", "worst_index"}, {}};
  for (const auto& d : rep.defects) csv.rows.push_back({to_string(d.id), cell(d.max_defect), std::to_string(d.worst_index)});
  o.series.push_back(std::move(csv));
  return o;
}

inline Outcome cmd_voc_check(const Context& c) {
  const auto family = load_family(c);
  const Complex z0 = get_complex(c, "z0", 0.0);
  const Complex z = get_complex(c, "z", Complex(0.5, 0.5));
  const int J = get_positive(c, "J", 100);
  const int k = get_int(c, "k", 0);
  const double tol = get_double(c, "tol", 1e-8);
  const VocOptions opt{get_bool(c, "compensated", false), get_norm(c)};
  const auto fs0 = fundamental_system(family, z0, J);
  const auto fsz = fundamental_system(family, z, J);
  for (const auto* f : {&fs0, &fsz}) {
    if (f->truncation()) {
      throw NumericalError("recursion truncated at j = " + std::to_string(f->truncation()->index) + ": " +
                           f->truncation()->detail);
    }
  }
  Outcome o;
  json reps = json::array();
  double worst = 0.0;
  CsvFile csv{"voc", {"sequence", "k", "max_defect", "worst_index", "anchor_condition"}, {}};
  for (Fundamental f : {Fundamental::P, Fundamental::Q, Fundamental::P_plus, Fundamental::Q_plus}) {
    const auto r = hellinger_representation(fs0, family, as_solution(fsz, f), k, opt);
    json entry = r;
    entry["sequence"] = to_string(f);
    reps.push_back(std::move(entry));
    worst = std::max(worst, r.max_defect);
    csv.rows.push_back({to_string(f), std::to_string(k), cell(r.max_defect), std::to_string(r.worst_index),
                        cell(r.anchor.condition)});
  }
  o.result = {{"z0", complex_to_json(z0)},
              {"z", complex_to_json(z)},
              {"J", J},
              {"k", k},
              {"tol", tol},
              {"max_defect", json_number(worst)},
              {"representations", reps}};
  o.verdict_ok = worst <= tol;
  o.verdict = o.verdict_ok ? "pass" : "fail";
  o.series.push_back(std::move(csv));
  return o;
}

struct ScanPoint {
  MembershipReport membership;
  double M_right = std::numeric_limits<double>::quiet_NaN();  ///< M_0^p
  double M_left = std::numeric_limits<double>::quiet_NaN();   ///< M_0^{p,+}
};

inline Outcome cmd_lp_scan(const Context& c) {
  const auto family = load_family(c);
  const double p = get_exponent(c, "p", 2.0);
  const int J = get_positive(c, "J", 2000);
  const NormKind kind = get_norm(c);
  std::vector<Complex> zs;
  if (has(c, "z")) {
    zs.push_back(get_complex(c, "z", 0.0));
  } else {
    zs = get_grid(c, get_complex(c, "z0", 0.0));
  }
  const auto points = parallel_map(
      zs.size(),
      [&](std::size_t i) {
        ScanPoint s;
        s.membership = membership_verdict(family, zs[i], p, J, std::nullopt, kind);
        const int h = s.membership.horizon;
        if (!s.membership.truncation && h >= 2 * kMinWindow) {
          const auto fsys = fundamental_system(family, zs[i], h, Scaling::rescaled);
          s.M_right = tail_profile(fsys, p, h, false, std::nullopt, kind).extrapolated.front();
          s.M_left = tail_profile(fsys, p, h, true, std::nullopt, kind).extrapolated.front();
        }
        return s;
      },
      get_int(c, "threads", 0));
  Outcome o;
  json list = json::array();
  CsvFile csv{"lp_scan",
              {"z_re", "z_im", "right", "left", "P_kind", "P_exponent", "Q_kind", "Q_exponent", "M_right", "M_left"},
              {}};
  for (const auto& s : points) {
    json e = s.membership;
    e["M_right"] = json_number(s.M_right);
    e["M_left"] = json_number(s.M_left);
    list.push_back(std::move(e));
    const auto& r = s.membership.right;
    csv.rows.push_back({cell(s.membership.z.real()), cell(s.membership.z.imag()), to_string(r.verdict),
                        to_string(s.membership.left.verdict), to_string(r.sequences[0].growth.kind),
                        cell(r.sequences[0].growth.exponent), to_string(r.sequences[1].growth.kind),
                        cell(r.sequences[1].growth.exponent), cell(s.M_right), cell(s.M_left)});
  }
  o.result = {{"p", exponent_json(p)}, {"J", J}, {"points", list}};
  o.series.push_back(std::move(csv));
  return o;
}

inline Outcome cmd_hellinger(const Context& c) {
  const auto family = load_family(c);
  const Complex z0 = get_complex(c, "z0", 0.0);
  const double p = get_exponent(c, "p", 2.0);
  HellingerOptions opt;
  opt.J = get_positive(c, "J", opt.J);
  opt.threshold = get_double(c, "threshold", opt.threshold);
  opt.tol_bound = get_double(c, "tol_bound", opt.tol_bound);
  opt.symmetric_shortcut = get_bool(c, "symmetric_shortcut", false);
  opt.norm = get_norm(c);
  opt.threads = get_int(c, "threads", 0);
  const auto grid = get_grid(c, z0);
  const auto r = hellinger_check(family, z0, p, grid, opt);
  Outcome o;
  o.result = r;
  o.verdict = r.status;
  o.verdict_ok = r.pass();
  CsvFile profile{"hellinger_profile", {"k", "M_p", "M_q_plus"}, {}};
  for (std::size_t k = 0; k < r.M_p.size(); ++k) {
    profile.rows.push_back({std::to_string(k), cell(r.M_p[k]), cell(r.M_q_plus[k])});
  }
  CsvFile points{"hellinger_grid", {"z_re", "z_im", "distance", "k0", "product", "right", "left", "pass"}, {}};
  for (const auto& g : r.points) {
    points.rows.push_back({cell(g.z.real()), cell(g.z.imag()), cell(g.distance), g.k0 ? std::to_string(*g.k0) : "",
                           cell(g.product), to_string(g.right.verdict), g.left ? to_string(g.left->verdict) : "",
                           g.pass ? "true" : "false"});
  }
  o.series.push_back(std::move(profile));
  o.series.push_back(std::move(points));
  return o;
}

inline Outcome cmd_perturb(const Context& c) {
  const auto family = load_family(c);
  const double p = get_exponent(c, "p", 2.0);
  const int J = get_positive(c, "J", 400);
  const json F = has(c, "F") ? get_document(c, "F") : json{{"kind", "zero"}};
  const json G = has(c, "G") ? get_document(c, "G") : F;
  const auto f = scalar_perturbation(F, family.dim());
  const auto g = scalar_perturbation(G, family.dim());
  const auto r = perturbation_check(family, f, F, g, G, p, J, std::nullopt, get_norm(c));
  Outcome o;
  o.result = r;
  o.verdict_ok = r.pass();
  o.verdict = !r.precondition_ok ? "rejected" : (r.pass() ? "pass" : "fail");
  CsvFile csv{"perturbation", {"j", "norm_F", "norm_G"}, {}};
  for (int j = 0; j <= J; ++j) {
    csv.rows.push_back({std::to_string(j), cell(operator_norm(f(j))), cell(operator_norm(g(j)))});
  }
  o.series.push_back(std::move(csv));
  return o;
}

inline Outcome cmd_counterexample(const Context& c) {
  CounterexampleOptions opt;
  opt.n = get_positive(c, "n", opt.n);
  opt.J_exponent = get_positive(c, "J_exponent", opt.J_exponent);
  opt.J_bounded = get_positive(c, "J_bounded", opt.J_bounded);
  opt.J_verdict = get_positive(c, "J_verdict", opt.J_verdict);
  if (has(c, "p_list")) {
    const json list = get_document(c, "p_list");
    if (!list.is_array()) throw ConfigError("p_list must be a list of exponents");
    opt.p_list.clear();
    for (const auto& p : list) opt.p_list.push_back(json_to_double(p));
  }
  const auto r = run_counterexample(opt);
  Outcome o;
  o.result = r;
  o.verdict_ok = r.pass();
  o.verdict = o.verdict_ok ? "pass" : "fail";
  CsvFile norms{"counterexample_norms", {"j", "norm_P", "norm_Q"}, {}};
  for (std::size_t i = 0; i < r.P_norms.size(); ++i) {
    norms.rows.push_back({std::to_string(static_cast<int>(i) - 1), cell(r.P_norms[i]), cell(r.Q_norms[i])});
  }
  CsvFile witnesses{"witnesses", {"j"}, {}};
  for (const auto& w : r.witnesses) {
    witnesses.header.push_back("z" + format_complex(w.z) + "_col" + std::to_string(w.column));
  }
  const std::size_t rows = r.witnesses.empty() ? 0 : r.witnesses.front().norms.size();
  for (std::size_t j = 0; j < rows; ++j) {
    std::vector<std::string> row{std::to_string(j)};
    for (const auto& w : r.witnesses) row.push_back(j < w.norms.size() ? cell(w.norms[j]) : "");
    witnesses.rows.push_back(std::move(row));
  }
  o.series.push_back(std::move(norms));
  o.series.push_back(std::move(witnesses));
  return o;
}

inline Outcome cmd_oracle(const Context& c) {
  const double tol = get_double(c, "tol", kOracleTolerance);
  Outcome o;
  if (has(c, "fixture")) {
    const auto results = run_oracle_scenarios(load_oracle_scenarios(get_document(c, "fixture")), tol,
                                              get_int(c, "threads", 0));
    json list = json::array();
    CsvFile csv{"oracle_scenarios", {"name", "J", "max_relative_error", "worst_index", "pass"}, {}};
    for (const auto& r : results) {
      list.push_back({{"name", r.scenario.name},
                      {"family", r.scenario.family},
                      {"z", r.scenario.z},
                      {"comparison", r.comparison},
                      {"pass", r.pass}});
      o.verdict_ok = o.verdict_ok && r.pass;
      csv.rows.push_back({r.scenario.name, std::to_string(r.comparison.J), cell(r.comparison.max_relative_error),
                          std::to_string(r.comparison.worst_index), r.pass ? "true" : "false"});
    }
    o.result = {{"tol", tol}, {"scenarios", list}};
    o.series.push_back(std::move(csv));
  } else {
    const auto family = load_family(c);
    const auto zq = parse_gaussian_rational(get_text(c, "z", "0"));
    const int J = get_positive(c, "J", 20);
    const auto exact = exact_fundamental_at_rational(family, zq, J);
    json result = {{"z", zq.to_string()}, {"J", J}, {"tol", tol}};
    const Complex z = zq.to_complex();
    if (GaussianRational::from_complex(z) == zq) {
      const auto cmp = compare_with_oracle(fundamental_system(family, z, J), exact);
      result["comparison"] = cmp;
      o.verdict_ok = cmp.J == J && cmp.max_relative_error <= tol;
    } else {
      result["comparison"] = nullptr;
      result["note"] = "z is not exactly representable in double precision; no floating comparison";
    }
    o.result = std::move(result);
    CsvFile csv{"oracle", {"j", "sequence", "row", "col", "re", "im"}, {}};
    for (int j = -1; j <= J; ++j) {
      for (Fundamental f : {Fundamental::P, Fundamental::Q, Fundamental::P_plus, Fundamental::Q_plus}) {
        const auto& m = exact.at(f, j);
        for (int r = 0; r < family.dim(); ++r) {
          for (int k = 0; k < family.dim(); ++k) {
            csv.rows.push_back({std::to_string(j), to_string(f), std::to_string(r), std::to_string(k),
                                m(r, k).re.get_str(), m(r, k).im.get_str()});
          }
        }
      }
    }
    o.series.push_back(std::move(csv));
  }
  o.verdict = o.verdict_ok ? "pass" : "fail";
  return o;
}

struct Command {
  std::string name;
  std::string help;
  std::vector<Flag> flags;
  std::function<Outcome(const Context&)> run;
  bool needs_family = true;
};

inline const std::vector<Command>& commands() {
  using K = FlagKind;
  static const std::vector<Command> list{
      {"recur", "fundamental systems P, Q, P+, Q+ and their norms",
       {{"z", K::complex, "spectral parameter"},
        {"J", K::integer, "horizon"},
        {"p", K::number, "exponent for the partial-sum columns"},
        {"scaling", K::text, "raw|rescaled"}},
       cmd_recur},
      {"solve", "homogeneous or forced solutions from initial data",
       {{"z", K::complex, "spectral parameter"},
        {"J", K::integer, "horizon"},
        {"side", K::text, "right|left"},
        {"init", K::json_value, "{\"u_m1\": ..., \"u_0\": ...}, vectors or n x n blocks"},
        {"forcing", K::json_value, "list of J forcing entries, or a file"},
        {"tol", K::number, "scaled residual tolerance"},
        {"compensated", K::boolean, "compensated summation of the coefficient sums"}},
       cmd_solve},
      {"identities", "Wronskian-type identities of the fundamental system",
       {{"z", K::complex, "spectral parameter"},
        {"J", K::integer, "last index checked"},
        {"j_lo", K::integer, "first index checked"},
        {"tol", K::number, "scaled defect tolerance"}},
       cmd_identities},
      {"voc-check", "representation of the solutions at z through the system at z0",
       {{"z0", K::complex, "base point"},
        {"z", K::complex, "spectral parameter"},
        {"J", K::integer, "horizon"},
        {"k", K::integer, "anchor index"},
        {"tol", K::number, "scaled defect tolerance"},
        {"compensated", K::boolean, "compensated summation"}},
       cmd_voc_check},
      {"lp-scan", "tail norms, growth and membership over a z-grid",
       {{"p", K::number, "exponent (inf allowed)"},
        {"J", K::integer, "horizon"},
        {"z", K::complex, "single point instead of a grid"},
        {"z0", K::complex, "grid centre"},
        {"grid", K::json_value, "default or a list of points"}},
       cmd_lp_scan},
      {"hellinger", "invariance check of lp membership around z0",
       {{"z0", K::complex, "base point"},
        {"p", K::number, "exponent (inf allowed)"},
        {"J", K::integer, "horizon"},
        {"grid", K::json_value, "default or a list of points"},
        {"threshold", K::number, "k0 threshold on |z-z0| M+ M"},
        {"tol_bound", K::number, "relative slack on N <= 4 C M"},
        {"symmetric_shortcut", K::boolean, "infer the left side for symmetric families"}},
       cmd_hellinger},
      {"perturb", "bounded perturbations of the equation at z = 0",
       {{"p", K::number, "exponent"},
        {"J", K::integer, "horizon"},
        {"F", K::json_value, "right perturbation, e.g. {\"kind\": \"sin\"}"},
        {"G", K::json_value, "left perturbation (default: F)"}},
       cmd_perturb},
      {"counterexample", "decay, membership and bounded witnesses of the zero-diagonal family",
       {{"n", K::integer, "block size"},
        {"J_exponent", K::integer, "horizon of the exponent fits"},
        {"J_bounded", K::integer, "horizon of the witness search"},
        {"J_verdict", K::integer, "horizon of the membership verdicts"},
        {"p_list", K::json_value, "exponents, e.g. [2, 2.1]"}},
       cmd_counterexample, false},
      {"oracle", "exact Gaussian-rational fundamental systems",
       {{"z", K::text, "Gaussian rational, e.g. 1/2+i"},
        {"J", K::integer, "horizon"},
        {"tol", K::number, "relative tolerance of the floating comparison"},
        {"fixture", K::json_value, "oracle scenario fixture instead of a single family"}},
       cmd_oracle, false},
  };
  return list;
}

inline std::string flag_name(const std::string& key) {
  std::string s = key;
  for (auto& ch : s) {
    if (ch == '_') ch = '-';
  }
  return "--" + s;
}

inline json convert_flag(const Flag& f, const std::string& text) {
  switch (f.kind) {
    case FlagKind::integer: {
      std::size_t used = 0;
      int v = 0;
      try {
        v = std::stoi(text, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != text.size()) throw ConfigError(flag_name(f.key) + " expects an integer, got '" + text + "'");
      return v;
    }
    case FlagKind::number:
      return json_number(json_to_double(json(text)));
    case FlagKind::complex:
      parse_complex(text);
      return text;
    case FlagKind::text:
      return text;
    case FlagKind::json_value:
      if (!text.empty() && (text[0] == '{' || text[0] == '[')) {
        try {
          return json::parse(text);
        } catch (const json::parse_error& e) {
          throw ConfigError(flag_name(f.key) + ": invalid JSON: " + e.what());
        }
      }
      return text;
    case FlagKind::boolean:
      return text != "false";
  }
  return text;
}

inline json error_json(const std::string& command, const char* kind, const std::string& message, int code) {
  return {{"schema", kReportSchema},
          {"command", command},
          {"error", {{"kind", kind}, {"message", message}}},
          {"exit_code", code}};
}

inline json run_meta(const std::string& command, double seconds, int threads) {
  return {{"schema", kReportSchema},
          {"command", command},
          {"version", kVersion},
          {"wall_time_seconds", seconds},
          {"threads", threads > 0 ? threads : thread_count()},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"gmp", gmp_version},
          {"cli11", CLI11_VERSION},
          {"compiler", __VERSION__}};
}

/// Runs one subcommand; argv[0] is the program name.
inline int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Second-order difference equations with matrix coefficients", "hellinger-kit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  struct Bound {
    const Command* command;
    CLI::App* sub;
    std::string config;
    std::map<std::string, std::string> text;
    std::map<std::string, bool> flags;
  };
  std::vector<std::unique_ptr<Bound>> bound;
  for (const auto& cmd : commands()) {
    auto b = std::make_unique<Bound>();
    b->command = &cmd;
    b->sub = app.add_subcommand(cmd.name, cmd.help);
    b->sub->add_option("--config", b->config, "JSON config; flags override its keys");
    std::vector<Flag> flags = common_flags();
    flags.insert(flags.end(), cmd.flags.begin(), cmd.flags.end());
    for (const auto& f : flags) {
      if (f.kind == FlagKind::boolean) {
        b->sub->add_flag(flag_name(f.key), b->flags[f.key], f.help);
      } else {
        b->sub->add_option(flag_name(f.key), b->text[f.key], f.help);
      }
    }
    bound.push_back(std::move(b));
  }

  std::vector<const char*> raw;
  for (const auto& a : argv) raw.push_back(a.c_str());
  if (raw.empty()) raw.push_back("hellinger-kit");
  std::string command;
  try {
    app.parse(static_cast<int>(raw.size()), raw.data());
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << error_json(command, "config", e.what(), kExitConfig).dump() << '\n';
    return kExitConfig;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    const Bound* active = nullptr;
    for (const auto& b : bound) {
      if (b->sub->parsed()) active = b.get();
    }
    command = active->command->name;
    Context ctx;
    ctx.command = command;
    ctx.config = json::object();
    if (!active->config.empty()) {
      ctx.config = read_json_file(active->config);
      if (!ctx.config.is_object()) throw ConfigError("config must be a JSON object");
      ctx.base_dir = fs::path(active->config).parent_path();
    }
    std::vector<Flag> flags = common_flags();
    flags.insert(flags.end(), active->command->flags.begin(), active->command->flags.end());
    for (auto it = ctx.config.begin(); it != ctx.config.end(); ++it) {
      const bool known = std::any_of(flags.begin(), flags.end(), [&](const Flag& f) { return f.key == it.key(); });
      if (!known) throw ConfigError("unknown config key '" + it.key() + "' for " + command);
    }
    for (const auto& f : flags) {
      const auto* opt = active->sub->get_option_no_throw(flag_name(f.key));
      if (opt == nullptr || opt->count() == 0) continue;
      if (f.kind == FlagKind::boolean) {
        ctx.config[f.key] = true;
      } else {
        ctx.config[f.key] = convert_flag(f, active->text.at(f.key));
      }
    }

    Outcome o = active->command->run(ctx);

    json report = {{"schema", kReportSchema},
                   {"command", command},
                   {"version", kVersion},
                   {"timestamp", iso_timestamp()},
                   {"config", ctx.config},
                   {"verdict", o.verdict},
                   {"result", o.result}};
    if (active->command->needs_family || has(ctx, "family")) {
      report["family"] = load_family(ctx).spec();
    } else if (command == "counterexample") {
      report["family"] = counterexample_family(get_positive(ctx, "n", 2)).spec();
    }
    const std::string text = report.dump(2) + "\n";
    out << text;
    if (has(ctx, "out")) {
      const fs::path dir = get_text(ctx, "out", ".");
      std::error_code ec;
      fs::create_directories(dir, ec);
      if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
      write_text(dir / "report.json", text);
      for (const auto& s : o.series) write_csv(dir / ("series_" + s.name + ".csv"), s);
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      write_text(dir / "run_meta.json", run_meta(command, seconds, get_int(ctx, "threads", 0)).dump(2) + "\n");
    }
    if (o.numerical_abort) {
      err << error_json(command, "numerical", *o.numerical_abort, kExitNumerical).dump() << '\n';
      return kExitNumerical;
    }
    return o.verdict_ok ? kExitOk : kExitVerdict;
  } catch (const ConfigError& e) {
    err << error_json(command, "config", e.what(), kExitConfig).dump() << '\n';
    return kExitConfig;
  } catch (const json::exception& e) {
    err << error_json(command, "config", e.what(), kExitConfig).dump() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << error_json(command, "numerical", e.what(), kExitNumerical).dump() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << error_json(command, "numerical", e.what(), kExitNumerical).dump() << '\n';
    return kExitNumerical;
  }
}

inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace hellinger::cli
