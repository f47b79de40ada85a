#pragma once

/**
 * @file operator_model.hpp
 * @brief The infinite block tridiagonal matrix A and its coefficient families.
 *
 * A family produces, for every row j >= 0, the blocks
 *
 *     lower(j-1) = A_{j,j-1},   diag(j) = A_{j,j},   upper(j) = A_{j,j+1}
 *
 * with the boundary convention A_{0,-1} = A_{-1,0} = -E. Families are
 * immutable and cheap to copy; block generation is pure.
 */

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hellinger/complex_io.hpp"
#include "hellinger/error.hpp"
#include "hellinger/linalg.hpp"

namespace hellinger {

class OperatorFamily {
 public:
  /// Generator for one block diagonal; receives the row index j >= 0.
  using BlockFn = std::function<MatrixC(int)>;

  struct Parts {
    int n = 1;
    json spec;               ///< normalized config record, echoed in reports
    BlockFn diag;            ///< j -> A_{j,j}
    BlockFn upper;           ///< j -> A_{j,j+1}
    BlockFn lower;           ///< j -> A_{j+1,j}
    std::optional<int> horizon;  ///< stored block count for explicit data
    double cond_cap = kDefaultCondCap;
  };

  explicit OperatorFamily(Parts parts) : impl_(std::make_shared<const Parts>(std::move(parts))) {
    if (impl_->n <= 0) throw ConfigError("block dimension must be positive");
  }

  int dim() const { return impl_->n; }
  const json& spec() const { return impl_->spec; }
  double cond_cap() const { return impl_->cond_cap; }

  /// Number of rows for which all three blocks are stored (explicit data);
  /// recursion can then reach index horizon(). nullopt for closed-form
  /// families.
  std::optional<int> horizon() const { return impl_->horizon; }

  MatrixC diag(int j) const {
    if (j < 0) throw ConfigError("diag block index must be >= 0");
    check_horizon(j);
    return checked(impl_->diag(j));
  }

  MatrixC upper(int j) const {
    if (j == -1) return -identity(dim());
    if (j < -1) throw ConfigError("block index below -1");
    check_horizon(j);
    return checked(impl_->upper(j));
  }

  MatrixC lower(int j) const {
    if (j == -1) return -identity(dim());
    if (j < -1) throw ConfigError("block index below -1");
    check_horizon(j);
    return checked(impl_->lower(j));
  }

  /// A_{row,col}; O outside the tridiagonal band.
  MatrixC block(int row, int col) const {
    if (row < -1 || col < -1) throw ConfigError("block indices must be >= -1");
    if (row == col) return row == -1 ? zero(dim()) : diag(row);
    if (col == row + 1) return upper(row);
    if (row == col + 1) return lower(col);
    return zero(dim());
  }

 private:
  void check_horizon(int j) const {
    if (impl_->horizon && j >= *impl_->horizon) {
      throw ConfigError("horizon exceeded: block index " + std::to_string(j) +
                        " beyond stored horizon " + std::to_string(*impl_->horizon));
    }
  }

  MatrixC checked(MatrixC m) const {
    if (m.rows() != dim() || m.cols() != dim()) {
      throw ConfigError("dimension mismatch in generated block");
    }
    return m;
  }

  std::shared_ptr<const Parts> impl_;
};

// ---------------------------------------------------------------------------
// Builtin catalog

inline OperatorFamily counterexample_family(int n = 2) {
  OperatorFamily::Parts parts;
  parts.n = n;
  parts.spec = {{"kind", "builtin"}, {"name", "hellinger_counterexample"}, {"n", n}, {"params", json::object()}};
  parts.diag = [n](int) { return zero(n); };
  parts.upper = [n](int j) { return MatrixC(double(j + 1) * identity(n)); };
  parts.lower = parts.upper;
  return OperatorFamily(std::move(parts));
}

inline OperatorFamily free_jacobi_family(int n = 1, Complex a = 1.0, Complex b = 0.0) {
  OperatorFamily::Parts parts;
  parts.n = n;
  parts.spec = {{"kind", "builtin"}, {"name", "free_jacobi"}, {"n", n},
                {"params", {{"a", complex_to_json(a)}, {"b", complex_to_json(b)}}}};
  parts.diag = [n, b](int) { return MatrixC(b * identity(n)); };
  parts.upper = [n, a](int) { return MatrixC(a * identity(n)); };
  parts.lower = parts.upper;
  return OperatorFamily(std::move(parts));
}

/// a_j = ratio^{j+1} on both off-diagonals, zero diagonal.
inline OperatorFamily geometric_family(int n = 1, double ratio = 2.0) {
  if (!(ratio > 0.0)) throw ConfigError("geometric: ratio must be positive");
  OperatorFamily::Parts parts;
  parts.n = n;
  parts.spec = {{"kind", "builtin"}, {"name", "geometric"}, {"n", n}, {"params", {{"ratio", ratio}}}};
  parts.diag = [n](int) { return zero(n); };
  parts.upper = [n, ratio](int j) { return MatrixC(std::pow(ratio, j + 1) * identity(n)); };
  parts.lower = parts.upper;
  return OperatorFamily(std::move(parts));
}

/// A_{j,j+1} = A_{j+1,j} = diag(r_1^{j+1}, ..., r_n^{j+1}), A_{j,j} = O.
/// Diagonal blocks invert exactly, so the condition cap is lifted.
inline OperatorFamily diag_geometric_family(std::vector<double> ratios) {
  if (ratios.empty()) throw ConfigError("diag_geometric: ratios must be non-empty");
  for (double r : ratios) {
    if (!(r > 0.0)) throw ConfigError("diag_geometric: ratios must be positive");
  }
  const int n = static_cast<int>(ratios.size());
  OperatorFamily::Parts parts;
  parts.n = n;
  parts.spec = {{"kind", "builtin"}, {"name", "diag_geometric"}, {"n", n}, {"params", {{"ratios", ratios}}}};
  parts.diag = [n](int) { return zero(n); };
  parts.upper = [ratios, n](int j) {
    MatrixC m = zero(n);
    for (int i = 0; i < n; ++i) m(i, i) = std::pow(ratios[static_cast<std::size_t>(i)], j + 1);
    return m;
  };
  parts.lower = parts.upper;
  parts.cond_cap = std::numeric_limits<double>::infinity();
  return OperatorFamily(std::move(parts));
}

/// Scalar sequences a_j (A_{j,j+1}), b_j (A_{j,j}) and c_j (A_{j+1,j},
/// defaults to a) tensored with E_n. Finite horizon = shortest sequence.
inline OperatorFamily scalar_embed_family(int n, std::vector<Complex> a, std::vector<Complex> b,
                                          std::optional<std::vector<Complex>> c = std::nullopt) {
  const bool symmetric_default = !c.has_value();
  std::vector<Complex> sub = c ? std::move(*c) : a;
  const std::size_t len = std::min({a.size(), b.size(), sub.size()});
  if (len == 0) throw ConfigError("scalar_embed: sequences must be non-empty");
  auto encode = [](const std::vector<Complex>& v) {
    json out = json::array();
    for (auto x : v) out.push_back(complex_to_json(x));
    return out;
  };
  OperatorFamily::Parts parts;
  parts.n = n;
  parts.spec = {{"kind", "builtin"}, {"name", "scalar_embed"}, {"n", n},
                {"params", {{"a", encode(a)}, {"b", encode(b)}}}};
  if (!symmetric_default) parts.spec["params"]["c"] = encode(sub);
  parts.diag = [n, b](int j) { return MatrixC(b[static_cast<std::size_t>(j)] * identity(n)); };
  parts.upper = [n, a](int j) { return MatrixC(a[static_cast<std::size_t>(j)] * identity(n)); };
  parts.lower = [n, sub](int j) { return MatrixC(sub[static_cast<std::size_t>(j)] * identity(n)); };
  parts.horizon = static_cast<int>(len);
  return OperatorFamily(std::move(parts));
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic n x n block with entries uniform in [-1,1] + i[-1,1],
/// keyed by (seed, row, which). Platform independent.
inline MatrixC hashed_block(int n, std::uint64_t seed, int row, int which) {
  std::uint64_t state = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(row) * 4 + static_cast<std::uint64_t>(which)));
  auto uniform = [&state]() {
    state = splitmix64(state);
    return static_cast<double>(state >> 11) * 0x1.0p-53 * 2.0 - 1.0;
  };
  MatrixC m(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const double re = uniform();
      const double im = uniform();
      m(r, c) = {re, im};
    }
  }
  return m;
}

}  // namespace detail

/// Pseudo-random complex family: off-diagonal blocks E + scale * G with
/// ||scale * G|| <= scale (so cond <= (1+scale)/(1-scale)); diagonal blocks
/// diag_scale * H. Blocks depend only on (seed, j).
inline OperatorFamily random_family(int n, std::uint64_t seed, double scale = 0.4, double diag_scale = 1.0) {
  if (!(scale >= 0.0 && scale < 1.0)) throw ConfigError("random: scale must lie in [0, 1)");
  OperatorFamily::Parts parts;
  parts.n = n;
  parts.spec = {{"kind", "builtin"}, {"name", "random"}, {"n", n},
                {"params", {{"seed", seed}, {"scale", scale}, {"diag_scale", diag_scale}}}};
  const double off = scale / (std::sqrt(2.0) * n);
  parts.diag = [=](int j) { return MatrixC(diag_scale * detail::hashed_block(n, seed, j, 0)); };
  parts.upper = [=](int j) { return MatrixC(identity(n) + off * detail::hashed_block(n, seed, j, 1)); };
  parts.lower = [=](int j) { return MatrixC(identity(n) + off * detail::hashed_block(n, seed, j, 2)); };
  return OperatorFamily(std::move(parts));
}

/// Explicit block lists: sub[j] = A_{j+1,j}, diag[j] = A_{j,j}, super[j] = A_{j,j+1}.
inline OperatorFamily explicit_family(int n, std::vector<MatrixC> sub, std::vector<MatrixC> diag,
                                      std::vector<MatrixC> super, double cond_cap = kDefaultCondCap) {
  for (const auto* list : {&sub, &diag, &super}) {
    for (const auto& m : *list) {
      if (m.rows() != n || m.cols() != n) throw ConfigError("dimension mismatch in explicit family");
    }
  }
  const std::size_t len = std::min({sub.size(), diag.size(), super.size()});
  if (len == 0) throw ConfigError("explicit family needs at least one block per list");
  auto encode = [](const std::vector<MatrixC>& v) {
    json out = json::array();
    for (const auto& m : v) out.push_back(matrix_to_json(m));
    return out;
  };
  OperatorFamily::Parts parts;
  parts.n = n;
  parts.spec = {{"kind", "explicit"}, {"n", n}, {"sub", encode(sub)}, {"diag", encode(diag)},
                {"super", encode(super)}};
  if (cond_cap != kDefaultCondCap) parts.spec["cond_cap"] = json_number(cond_cap);
  parts.diag = [diag](int j) { return diag[static_cast<std::size_t>(j)]; };
  parts.upper = [super](int j) { return super[static_cast<std::size_t>(j)]; };
  parts.lower = [sub](int j) { return sub[static_cast<std::size_t>(j)]; };
  parts.horizon = static_cast<int>(len);
  parts.cond_cap = cond_cap;
  return OperatorFamily(std::move(parts));
}

/// Family with diagonal blocks A_{j,j} - shift(j). Used for the perturbed
/// equations l(u)_j = F_j u_j.
inline OperatorFamily with_diagonal_shift(const OperatorFamily& base, OperatorFamily::BlockFn shift,
                                          json description) {
  OperatorFamily::Parts parts;
  parts.n = base.dim();
  parts.spec = {{"kind", "perturbed"}, {"base", base.spec()}, {"perturbation", std::move(description)}};
  parts.diag = [base, shift](int j) { return MatrixC(base.diag(j) - shift(j)); };
  parts.upper = [base](int j) { return base.upper(j); };
  parts.lower = [base](int j) { return base.lower(j); };
  parts.horizon = base.horizon();
  parts.cond_cap = base.cond_cap();
  return OperatorFamily(std::move(parts));
}

// ---------------------------------------------------------------------------
// Config records

namespace detail {

inline std::vector<Complex> complex_list(const json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array");
  std::vector<Complex> out;
  out.reserve(j.size());
  for (const auto& x : j) out.push_back(complex_from_json(x));
  return out;
}

inline std::vector<MatrixC> block_list(const json& j, int n, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array of blocks");
  std::vector<MatrixC> out;
  out.reserve(j.size());
  for (const auto& b : j) out.push_back(matrix_from_json(b, n));
  return out;
}

inline void reject_unknown_keys(const json& params, std::initializer_list<const char*> allowed,
                                const std::string& name) {
  for (auto it = params.begin(); it != params.end(); ++it) {
    bool ok = false;
    for (const char* key : allowed) ok = ok || it.key() == key;
    if (!ok) throw ConfigError("unknown parameter '" + it.key() + "' for family " + name);
  }
}

}  // namespace detail

/// Builds a family from its config record:
///
///     {"kind": "builtin", "name": ..., "n": ..., "params": {...}}
///     {"kind": "explicit", "n": ..., "sub": [...], "diag": [...], "super": [...]}
///
/// Builtin names: hellinger_counterexample, free_jacobi, geometric,
/// diag_geometric, scalar_embed, random.
inline OperatorFamily build_family(const json& spec) {
  if (!spec.is_object()) throw ConfigError("family spec must be a JSON object");
  const std::string kind = spec.value("kind", std::string("builtin"));
  if (kind == "explicit") {
    if (!spec.contains("n")) throw ConfigError("explicit family needs 'n'");
    const int n = spec.at("n").get<int>();
    const double cap = spec.contains("cond_cap") ? json_to_double(spec.at("cond_cap")) : kDefaultCondCap;
    for (const char* key : {"sub", "diag", "super"}) {
      if (!spec.contains(key)) throw ConfigError(std::string("explicit family needs '") + key + "'");
    }
    return explicit_family(n, detail::block_list(spec.at("sub"), n, "sub"),
                           detail::block_list(spec.at("diag"), n, "diag"),
                           detail::block_list(spec.at("super"), n, "super"), cap);
  }
  if (kind != "builtin") throw ConfigError("unknown family kind '" + kind + "'");
  if (!spec.contains("name")) throw ConfigError("builtin family needs 'name'");
  const std::string name = spec.at("name").get<std::string>();
  const json params = spec.value("params", json::object());
  if (!params.is_object()) throw ConfigError("'params' must be an object");
  auto dim_or = [&](int fallback) {
    const int n = spec.contains("n") ? spec.at("n").get<int>() : fallback;
    if (n <= 0) throw ConfigError("block dimension must be positive");
    return n;
  };

  if (name == "hellinger_counterexample") {
    detail::reject_unknown_keys(params, {}, name);
    return counterexample_family(dim_or(2));
  }
  if (name == "free_jacobi") {
    detail::reject_unknown_keys(params, {"a", "b"}, name);
    const Complex a = params.contains("a") ? complex_from_json(params.at("a")) : Complex(1.0);
    const Complex b = params.contains("b") ? complex_from_json(params.at("b")) : Complex(0.0);
    return free_jacobi_family(dim_or(1), a, b);
  }
  if (name == "geometric") {
    detail::reject_unknown_keys(params, {"ratio"}, name);
    return geometric_family(dim_or(1), params.contains("ratio") ? json_to_double(params.at("ratio")) : 2.0);
  }
  if (name == "diag_geometric") {
    detail::reject_unknown_keys(params, {"ratios"}, name);
    if (!params.contains("ratios")) throw ConfigError("diag_geometric needs params.ratios");
    std::vector<double> ratios;
    for (const auto& r : params.at("ratios")) ratios.push_back(json_to_double(r));
    if (spec.contains("n") && spec.at("n").get<int>() != static_cast<int>(ratios.size())) {
      throw ConfigError("dimension mismatch: n differs from number of ratios");
    }
    return diag_geometric_family(std::move(ratios));
  }
  if (name == "scalar_embed") {
    detail::reject_unknown_keys(params, {"a", "b", "c"}, name);
    if (!params.contains("a") || !params.contains("b")) throw ConfigError("scalar_embed needs params.a and params.b");
    std::optional<std::vector<Complex>> c;
    if (params.contains("c")) c = detail::complex_list(params.at("c"), "c");
    return scalar_embed_family(dim_or(1), detail::complex_list(params.at("a"), "a"),
                               detail::complex_list(params.at("b"), "b"), std::move(c));
  }
  if (name == "random") {
    detail::reject_unknown_keys(params, {"seed", "scale", "diag_scale"}, name);
    return random_family(dim_or(2), params.value("seed", std::uint64_t{1}), params.value("scale", 0.4),
                         params.value("diag_scale", 1.0));
  }
  throw ConfigError("unknown builtin family '" + name + "'");
}

// ---------------------------------------------------------------------------
// Symmetric (block Jacobi) structure

struct SymmetryViolation {
  int index = 0;
  double defect = 0.0;
  std::string what;
};

struct SymmetryReport {
  int j_min = 0;
  int j_max = 0;  ///< last row actually checked
  bool is_symmetric = true;
  std::optional<SymmetryViolation> violation;
};

/// Checks A_{j,j} = A_{j,j}^* and A_{j+1,j} = A_{j,j+1} > 0 for 0 <= j <= j_max
/// (clamped to the stored horizon). Stops at the first violation.
inline SymmetryReport check_symmetry(const OperatorFamily& family, int j_max, double tol = 1e-12) {
  SymmetryReport report;
  if (family.horizon()) j_max = std::min(j_max, *family.horizon() - 1);
  report.j_max = j_max;
  for (int j = 0; j <= j_max; ++j) {
    const MatrixC d = family.diag(j);
    const double d_scale = std::max(operator_norm(d), 1.0);
    const double d_defect = operator_norm(d - d.adjoint()) / d_scale;
    if (d_defect > tol) {
      report.is_symmetric = false;
      report.violation = SymmetryViolation{j, d_defect, "diagonal block not Hermitian"};
      return report;
    }
    const MatrixC up = family.upper(j);
    const MatrixC lo = family.lower(j);
    const double off_scale = std::max(operator_norm(up), operator_norm(lo));
    const double off_defect = off_scale > 0 ? operator_norm(up - lo) / off_scale : 0.0;
    if (off_defect > tol) {
      report.is_symmetric = false;
      report.violation = SymmetryViolation{j, off_defect, "A_{j+1,j} differs from A_{j,j+1}"};
      return report;
    }
    const auto herm = is_hermitian_positive(up, tol);
    if (!herm.positive_definite) {
      report.is_symmetric = false;
      report.violation = SymmetryViolation{j, operator_norm(up - up.adjoint()) / std::max(off_scale, 1e-300),
                                           "off-diagonal block not positive definite"};
      return report;
    }
  }
  return report;
}

}  // namespace hellinger
