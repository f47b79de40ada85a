#pragma once

/**
 * @file recurrence.hpp
 * @brief Fundamental matrix solutions of the right and left three-term
 *        equations, general solutions, and the Wronskian-type identities.
 *
 * Right equation (matrices act from the left):
 *
 *     A_{j,j-1} Y_{j-1} + A_{j,j} Y_j + A_{j,j+1} Y_{j+1} = z Y_j,     j >= 0
 *
 * Left equation (matrices act from the right):
 *
 *     Y+_{j-1} A_{j-1,j} + Y+_j A_{j,j} + Y+_{j+1} A_{j+1,j} = z Y+_j, j >= 0
 *
 * P, P+ start from (Y_{-1}, Y_0) = (E, O); Q, Q+ from (O, E).
 */

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hellinger/error.hpp"
#include "hellinger/linalg.hpp"
#include "hellinger/operator_model.hpp"

namespace hellinger {

enum class Side { right, left };

inline const char* to_string(Side side) { return side == Side::right ? "right" : "left"; }

enum class Fundamental { P, Q, P_plus, Q_plus };

inline const char* to_string(Fundamental f) {
  switch (f) {
    case Fundamental::P: return "P";
    case Fundamental::Q: return "Q";
    case Fundamental::P_plus: return "P+";
    case Fundamental::Q_plus: return "Q+";
  }
  return "?";
}

inline Side side_of(Fundamental f) {
  return (f == Fundamental::P || f == Fundamental::Q) ? Side::right : Side::left;
}

/// raw: matrices are stored as computed and recursion stops at overflow.
/// rescaled: each sequence carries a running log-scale so that very large
/// or very small solutions stay representable (true = stored * exp(scale)).
enum class Scaling { raw, rescaled };

enum class TruncationReason { overflow, ill_conditioned, non_finite_block };

inline const char* to_string(TruncationReason r) {
  switch (r) {
    case TruncationReason::overflow: return "overflow";
    case TruncationReason::ill_conditioned: return "ill_conditioned";
    case TruncationReason::non_finite_block: return "non_finite_block";
  }
  return "?";
}

struct Truncation {
  int index = 0;  ///< last index with valid values
  TruncationReason reason = TruncationReason::overflow;
  std::string detail;
};

inline constexpr double kOverflowLimit = 1e300;
inline constexpr double kTolRec = 1e-9;

class FundamentalSystem {
 public:
  Complex z() const { return z_; }
  int dim() const { return n_; }
  int requested_horizon() const { return requested_; }
  /// Last index j for which all four sequences are available.
  int horizon() const { return static_cast<int>(values_[0].size()) - 2; }
  Scaling scaling() const { return scaling_; }
  const std::optional<Truncation>& truncation() const { return truncation_; }

  /// Stored matrix; equals the true value only in raw mode.
  const MatrixC& stored(Fundamental f, int j) const { return values_[idx(f)][slot(j)]; }
  double log_scale(Fundamental f, int j) const { return log_scales_[idx(f)][slot(j)]; }

  MatrixC value(Fundamental f, int j) const {
    const double s = log_scale(f, j);
    return s == 0.0 ? stored(f, j) : MatrixC(stored(f, j) * std::exp(s));
  }

  /// log ||Y_j||; -inf for an exactly zero matrix.
  double log_norm(Fundamental f, int j, NormKind kind = NormKind::spectral) const {
    const double nrm = operator_norm(stored(f, j), kind);
    return nrm == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(nrm) + log_scale(f, j);
  }

  double norm(Fundamental f, int j, NormKind kind = NormKind::spectral) const {
    if (log_scale(f, j) == 0.0) return operator_norm(stored(f, j), kind);
    return std::exp(log_norm(f, j, kind));
  }

  /// ||Y_j|| for j = -1..horizon().
  std::vector<double> norms(Fundamental f, NormKind kind = NormKind::spectral) const {
    std::vector<double> out;
    out.reserve(values_[idx(f)].size());
    for (int j = -1; j <= horizon(); ++j) out.push_back(norm(f, j, kind));
    return out;
  }

  // Raw-mode accessors.
  const MatrixC& P(int j) const { return raw(Fundamental::P, j); }
  const MatrixC& Q(int j) const { return raw(Fundamental::Q, j); }
  const MatrixC& P_plus(int j) const { return raw(Fundamental::P_plus, j); }
  const MatrixC& Q_plus(int j) const { return raw(Fundamental::Q_plus, j); }

  /// A_{j,j+1}^{-1}, cached from the recursion, j = -1..horizon()-1.
  const MatrixC& upper_inverse(int j) const { return upper_inv_.at(static_cast<std::size_t>(j + 1)); }
  /// A_{j+1,j}^{-1}, j = -1..horizon()-1.
  const MatrixC& lower_inverse(int j) const { return lower_inv_.at(static_cast<std::size_t>(j + 1)); }
  /// Larger condition number of the two off-diagonal blocks used at step j.
  double condition(int j) const { return conditions_.at(static_cast<std::size_t>(j + 1)); }

 private:
  friend FundamentalSystem fundamental_system(const OperatorFamily&, Complex, int, Scaling);

  static std::size_t idx(Fundamental f) { return static_cast<std::size_t>(f); }
  std::size_t slot(int j) const {
    if (j < -1 || j > horizon()) {
      throw ConfigError("index " + std::to_string(j) + " outside fundamental system range [-1, " +
                        std::to_string(horizon()) + "]");
    }
    return static_cast<std::size_t>(j + 1);
  }
  const MatrixC& raw(Fundamental f, int j) const {
    if (scaling_ != Scaling::raw) throw std::logic_error("raw accessor used on a rescaled fundamental system");
    return stored(f, j);
  }

  Complex z_;
  int n_ = 0;
  int requested_ = 0;
  Scaling scaling_ = Scaling::raw;
  std::array<std::vector<MatrixC>, 4> values_;
  std::array<std::vector<double>, 4> log_scales_;
  std::vector<MatrixC> upper_inv_;
  std::vector<MatrixC> lower_inv_;
  std::vector<double> conditions_;
  std::optional<Truncation> truncation_;
};

/// Forward recursion for P, Q, P+, Q+ on j = -1..J.
///
/// Y_{j+1}  = A_{j,j+1}^{-1} ((z - A_{j,j}) Y_j - A_{j,j-1} Y_{j-1})
/// Y+_{j+1} = (Y+_j (z - A_{j,j}) - Y+_{j-1} A_{j-1,j}) A_{j+1,j}^{-1}
///
/// Ill-conditioned or non-finite blocks, and (raw mode) entries above
/// kOverflowLimit, stop the recursion; the result keeps the valid prefix and
/// records a Truncation.
inline FundamentalSystem fundamental_system(const OperatorFamily& family, Complex z, int J,
                                            Scaling scaling = Scaling::raw) {
  if (J < 1) throw ConfigError("horizon J must be >= 1");
  if (family.horizon() && J > *family.horizon()) {
    throw ConfigError("horizon exceeded: J = " + std::to_string(J) + " but family stores " +
                      std::to_string(*family.horizon()) + " rows");
  }
  const int n = family.dim();
  FundamentalSystem fs;
  fs.z_ = z;
  fs.n_ = n;
  fs.requested_ = J;
  fs.scaling_ = scaling;

  const MatrixC E = identity(n);
  const MatrixC O = zero(n);
  for (auto& v : fs.values_) v.reserve(static_cast<std::size_t>(J) + 2);
  // (Y_{-1}, Y_0) for P, Q, P+, Q+
  fs.values_[0] = {E, O};
  fs.values_[1] = {O, E};
  fs.values_[2] = {E, O};
  fs.values_[3] = {O, E};
  for (auto& s : fs.log_scales_) s = {0.0, 0.0};
  fs.upper_inv_.push_back(-E);
  fs.lower_inv_.push_back(-E);
  fs.conditions_.push_back(1.0);

  // Working pairs (previous, current) per sequence, with a shared log-scale.
  std::array<MatrixC, 4> prev{E, O, E, O};
  std::array<MatrixC, 4> curr{O, E, O, E};
  std::array<double, 4> scale{0.0, 0.0, 0.0, 0.0};

  MatrixC upper_prev = family.upper(-1);  // A_{j-1,j} at j = 0
  MatrixC lower_prev = family.lower(-1);  // A_{j,j-1} at j = 0

  for (int j = 0; j < J; ++j) {
    MatrixC diag, upper, lower;
    Inverse up_inv, lo_inv;
    try {
      diag = family.diag(j);
      upper = family.upper(j);
      lower = family.lower(j);
      if (!diag.allFinite() || !upper.allFinite() || !lower.allFinite()) {
        fs.truncation_ = Truncation{j, TruncationReason::non_finite_block,
                                    "non-finite block in row " + std::to_string(j)};
        break;
      }
      up_inv = invert(upper, family.cond_cap());
      lo_inv = invert(lower, family.cond_cap());
    } catch (const NumericalError& e) {
      fs.truncation_ = Truncation{j, TruncationReason::ill_conditioned, e.what()};
      break;
    }
    const MatrixC shifted = z * E - diag;

    std::array<MatrixC, 4> next;
    for (std::size_t s = 0; s < 2; ++s) {
      next[s] = up_inv.matrix * (shifted * curr[s] - lower_prev * prev[s]);
    }
    for (std::size_t s = 2; s < 4; ++s) {
      next[s] = (curr[s] * shifted - prev[s] * upper_prev) * lo_inv.matrix;
    }

    bool overflow = false;
    for (std::size_t s = 0; s < 4; ++s) {
      const double big = max_abs(next[s]);
      if (!std::isfinite(big) || (scaling == Scaling::raw && big > kOverflowLimit)) overflow = true;
    }
    if (overflow) {
      fs.truncation_ = Truncation{j, TruncationReason::overflow,
                                  "solution entries exceed " + std::to_string(kOverflowLimit) +
                                      " at index " + std::to_string(j + 1)};
      break;
    }

    for (std::size_t s = 0; s < 4; ++s) {
      if (scaling == Scaling::rescaled) {
        const double m = std::max(max_abs(curr[s]), max_abs(next[s]));
        if (m > 1e100 || (m > 0.0 && m < 1e-100)) {
          curr[s] /= m;
          next[s] /= m;
          scale[s] += std::log(m);
        }
      }
      fs.values_[s].push_back(next[s]);
      fs.log_scales_[s].push_back(scale[s]);
      prev[s] = std::move(curr[s]);
      curr[s] = std::move(next[s]);
    }
    fs.upper_inv_.push_back(std::move(up_inv.matrix));
    fs.lower_inv_.push_back(std::move(lo_inv.matrix));
    fs.conditions_.push_back(std::max(up_inv.condition, lo_inv.condition));
    upper_prev = std::move(upper);
    lower_prev = std::move(lower);
  }
  return fs;
}

/// Largest J' <= J whose rows 0..J'-1 have finite blocks: the furthest index
/// any recursion on this family can reach in double precision.
inline int representable_horizon(const OperatorFamily& family, int J) {
  for (int j = 0; j < J; ++j) {
    if (!family.diag(j).allFinite() || !family.upper(j).allFinite() || !family.lower(j).allFinite()) return j;
  }
  return J;
}

// ---------------------------------------------------------------------------
// Solution sequences

/// A vector- or matrix-valued solution on j = -1..horizon(). Right-side
/// values are n x m (columns u_j); left-side values are m x n (rows v_j^*).
struct SolutionSeq {
  Complex z;
  Side side = Side::right;
  std::vector<MatrixC> values;
  double max_residual = 0.0;  ///< max scaled residual of the defining equation
  double superposition_defect = std::numeric_limits<double>::quiet_NaN();
  std::optional<Truncation> truncation;

  int horizon() const { return static_cast<int>(values.size()) - 2; }
  const MatrixC& at(int j) const {
    if (j < -1 || j > horizon()) throw ConfigError("index out of range: " + std::to_string(j));
    return values[static_cast<std::size_t>(j + 1)];
  }
};

/// Copies one fundamental sequence (raw mode) into a SolutionSeq.
inline SolutionSeq as_solution(const FundamentalSystem& fs, Fundamental f) {
  SolutionSeq seq;
  seq.z = fs.z();
  seq.side = side_of(f);
  seq.truncation = fs.truncation();
  seq.values.reserve(static_cast<std::size_t>(fs.horizon()) + 2);
  for (int j = -1; j <= fs.horizon(); ++j) seq.values.push_back(fs.value(f, j));
  return seq;
}

/// l(u)_j - z u_j for the right side, or the left analog
/// u_{j-1} A_{j-1,j} + u_j (A_{j,j} - z) + u_{j+1} A_{j+1,j}.
inline MatrixC apply_l(const OperatorFamily& family, const SolutionSeq& seq, int j) {
  if (j < 0 || j + 1 > seq.horizon()) {
    throw ConfigError("index out of range: apply_l at " + std::to_string(j) + " needs 0 <= j <= " +
                      std::to_string(seq.horizon() - 1));
  }
  const MatrixC shifted = family.diag(j) - seq.z * identity(family.dim());
  if (seq.side == Side::right) {
    return family.lower(j - 1) * seq.at(j - 1) + shifted * seq.at(j) + family.upper(j) * seq.at(j + 1);
  }
  return seq.at(j - 1) * family.upper(j - 1) + seq.at(j) * shifted + seq.at(j + 1) * family.lower(j);
}

/// Magnitude of the three terms of row j; residuals are measured relative
/// to this sum.
inline double residual_scale(const OperatorFamily& family, const SolutionSeq& seq, int j,
                             NormKind kind = NormKind::spectral) {
  const MatrixC shifted = family.diag(j) - seq.z * identity(family.dim());
  const MatrixC& before = seq.side == Side::right ? family.lower(j - 1) : family.upper(j - 1);
  const MatrixC& after = seq.side == Side::right ? family.upper(j) : family.lower(j);
  return operator_norm(before, kind) * operator_norm(seq.at(j - 1), kind) +
         operator_norm(shifted, kind) * operator_norm(seq.at(j), kind) +
         operator_norm(after, kind) * operator_norm(seq.at(j + 1), kind);
}

inline double scaled_residual(const OperatorFamily& family, const SolutionSeq& seq, int j,
                              NormKind kind = NormKind::spectral) {
  const double r = operator_norm(apply_l(family, seq, j), kind);
  const double scale = residual_scale(family, seq, j, kind);
  return scale > 0.0 ? r / scale : r;
}

/// Forward solution of the homogeneous equation from (u_{-1}, u_0).
///
/// For the left side the initial data are the rows v_{-1}^*, v_0^*. The
/// result carries its max scaled residual and the superposition defect
/// against u_j = Q_j u_0 + P_j u_{-1} (right) or u_0 Q+_j + u_{-1} P+_j (left).
inline SolutionSeq solve_homogeneous(const OperatorFamily& family, Complex z, Side side, const MatrixC& init_m1,
                                     const MatrixC& init_0, int J) {
  const int n = family.dim();
  const bool shape_ok = side == Side::right
                            ? (init_m1.rows() == n && init_0.rows() == n && init_m1.cols() == init_0.cols())
                            : (init_m1.cols() == n && init_0.cols() == n && init_m1.rows() == init_0.rows());
  if (!shape_ok) throw ConfigError("dimension mismatch in initial data");
  const FundamentalSystem fs = fundamental_system(family, z, J);

  SolutionSeq seq;
  seq.z = z;
  seq.side = side;
  seq.truncation = fs.truncation();
  seq.values.reserve(static_cast<std::size_t>(fs.horizon()) + 2);
  seq.values.push_back(init_m1);
  seq.values.push_back(init_0);
  const MatrixC E = identity(n);
  for (int j = 0; j < fs.horizon(); ++j) {
    const MatrixC shifted = z * E - family.diag(j);
    const MatrixC& a = seq.values[static_cast<std::size_t>(j)];
    const MatrixC& b = seq.values[static_cast<std::size_t>(j + 1)];
    MatrixC next = side == Side::right ? MatrixC(fs.upper_inverse(j) * (shifted * b - family.lower(j - 1) * a))
                                       : MatrixC((b * shifted - a * family.upper(j - 1)) * fs.lower_inverse(j));
    seq.values.push_back(std::move(next));
  }

  double worst_residual = 0.0;
  for (int j = 0; j + 1 <= seq.horizon(); ++j) {
    worst_residual = std::max(worst_residual, scaled_residual(family, seq, j));
  }
  seq.max_residual = worst_residual;

  double worst_super = 0.0;
  for (int j = -1; j <= seq.horizon(); ++j) {
    MatrixC combo;
    double scale;
    if (side == Side::right) {
      combo = fs.Q(j) * init_0 + fs.P(j) * init_m1;
      scale = operator_norm(fs.Q(j)) * operator_norm(init_0) + operator_norm(fs.P(j)) * operator_norm(init_m1);
    } else {
      combo = init_0 * fs.Q_plus(j) + init_m1 * fs.P_plus(j);
      scale = operator_norm(fs.Q_plus(j)) * operator_norm(init_0) +
              operator_norm(fs.P_plus(j)) * operator_norm(init_m1);
    }
    const double diff = operator_norm(seq.at(j) - combo);
    worst_super = std::max(worst_super, scale > 0.0 ? diff / scale : diff);
  }
  seq.superposition_defect = worst_super;
  return seq;
}

/// Vector overload; on the left side the vectors hold the row entries.
inline SolutionSeq solve_homogeneous(const OperatorFamily& family, Complex z, Side side, const VectorC& init_m1,
                                     const VectorC& init_0, int J) {
  if (side == Side::right) return solve_homogeneous(family, z, side, MatrixC(init_m1), MatrixC(init_0), J);
  return solve_homogeneous(family, z, side, MatrixC(init_m1.transpose()), MatrixC(init_0.transpose()), J);
}

// ---------------------------------------------------------------------------
// Wronskian-type identities

enum class Identity {
  commutator,        ///< P_j Q+_j - Q_j P+_j = O
  upper_inverse,     ///< P_{j+1} Q+_j - Q_{j+1} P+_j = A_{j,j+1}^{-1}
  lower_inverse,     ///< Q_j P+_{j+1} - P_j Q+_{j+1} = A_{j+1,j}^{-1}
  qq_wronskian,      ///< Q+_{j+1} A_{j+1,j} Q_j - Q+_j A_{j,j+1} Q_{j+1} = O
  pp_wronskian,      ///< P+_{j+1} A_{j+1,j} P_j - P+_j A_{j,j+1} P_{j+1} = O
  pq_wronskian,      ///< P+_{j+1} A_{j+1,j} Q_j - P+_j A_{j,j+1} Q_{j+1} = E
  qp_wronskian,      ///< Q+_j A_{j,j+1} P_{j+1} - Q+_{j+1} A_{j+1,j} P_j = E
};

inline constexpr std::array<Identity, 7> kAllIdentities{
    Identity::commutator,   Identity::upper_inverse, Identity::lower_inverse, Identity::qq_wronskian,
    Identity::pp_wronskian, Identity::pq_wronskian,  Identity::qp_wronskian};

inline const char* to_string(Identity id) {
  switch (id) {
    case Identity::commutator: return "P_j Q+_j - Q_j P+_j = O";
    case Identity::upper_inverse: return "P_{j+1} Q+_j - Q_{j+1} P+_j = A_{j,j+1}^-1";
    case Identity::lower_inverse: return "Q_j P+_{j+1} - P_j Q+_{j+1} = A_{j+1,j}^-1";
    case Identity::qq_wronskian: return "Q+_{j+1} A_{j+1,j} Q_j - Q+_j A_{j,j+1} Q_{j+1} = O";
    case Identity::pp_wronskian: return "P+_{j+1} A_{j+1,j} P_j - P+_j A_{j,j+1} P_{j+1} = O";
    case Identity::pq_wronskian: return "P+_{j+1} A_{j+1,j} Q_j - P+_j A_{j,j+1} Q_{j+1} = E";
    case Identity::qp_wronskian: return "Q+_j A_{j,j+1} P_{j+1} - Q+_{j+1} A_{j+1,j} P_j = E";
  }
  return "?";
}

struct IdentityDefect {
  Identity id = Identity::commutator;
  double max_defect = 0.0;
  int worst_index = 0;
};

struct IdentityReport {
  int j_lo = 0;
  int j_hi = 0;
  std::array<IdentityDefect, 7> defects{};

  double max_defect() const {
    double m = 0.0;
    for (const auto& d : defects) m = std::max(m, d.max_defect);
    return m;
  }
};

/// Evaluates every identity at each j in [j_lo, j_hi] (j_lo >= -1,
/// j_hi + 1 <= fs.horizon()). Defects are ||lhs - rhs|| divided by
/// 1 + sum over terms of the product of the factor norms.
inline IdentityReport check_identities(const FundamentalSystem& fs, const OperatorFamily& family, int j_lo, int j_hi,
                                       NormKind kind = NormKind::spectral) {
  if (j_lo < -1 || j_hi + 1 > fs.horizon() || j_lo > j_hi) {
    throw ConfigError("identity range [" + std::to_string(j_lo) + ", " + std::to_string(j_hi) +
                      "] outside fundamental system horizon " + std::to_string(fs.horizon()));
  }
  IdentityReport report;
  report.j_lo = j_lo;
  report.j_hi = j_hi;
  for (std::size_t i = 0; i < kAllIdentities.size(); ++i) {
    report.defects[i].id = kAllIdentities[i];
    report.defects[i].worst_index = j_lo;
  }

  const MatrixC E = identity(fs.dim());
  auto nrm = [kind](const MatrixC& m) { return operator_norm(m, kind); };
  auto record = [&](std::size_t i, int j, const MatrixC& diff, double scale) {
    const double d = nrm(diff) / (1.0 + scale);
    if (!(d <= report.defects[i].max_defect)) {
      report.defects[i].max_defect = d;
      report.defects[i].worst_index = j;
    }
  };

  for (int j = j_lo; j <= j_hi; ++j) {
    const MatrixC& P0 = fs.P(j);
    const MatrixC& P1 = fs.P(j + 1);
    const MatrixC& Q0 = fs.Q(j);
    const MatrixC& Q1 = fs.Q(j + 1);
    const MatrixC& Pp0 = fs.P_plus(j);
    const MatrixC& Pp1 = fs.P_plus(j + 1);
    const MatrixC& Qp0 = fs.Q_plus(j);
    const MatrixC& Qp1 = fs.Q_plus(j + 1);
    const MatrixC up = family.upper(j);
    const MatrixC lo = family.lower(j);
    const double nP0 = nrm(P0), nP1 = nrm(P1), nQ0 = nrm(Q0), nQ1 = nrm(Q1);
    const double nPp0 = nrm(Pp0), nPp1 = nrm(Pp1), nQp0 = nrm(Qp0), nQp1 = nrm(Qp1);
    const double nUp = nrm(up), nLo = nrm(lo);

    record(0, j, P0 * Qp0 - Q0 * Pp0, nP0 * nQp0 + nQ0 * nPp0);
    record(1, j, P1 * Qp0 - Q1 * Pp0 - fs.upper_inverse(j), nP1 * nQp0 + nQ1 * nPp0);
    record(2, j, Q0 * Pp1 - P0 * Qp1 - fs.lower_inverse(j), nQ0 * nPp1 + nP0 * nQp1);
    record(3, j, Qp1 * lo * Q0 - Qp0 * up * Q1, nQp1 * nLo * nQ0 + nQp0 * nUp * nQ1);
    record(4, j, Pp1 * lo * P0 - Pp0 * up * P1, nPp1 * nLo * nP0 + nPp0 * nUp * nP1);
    record(5, j, Pp1 * lo * Q0 - Pp0 * up * Q1 - E, nPp1 * nLo * nQ0 + nPp0 * nUp * nQ1);
    record(6, j, Qp0 * up * P1 - Qp1 * lo * P0 - E, nQp0 * nUp * nP1 + nQp1 * nLo * nP0);
  }
  return report;
}

}  // namespace hellinger
