#pragma once

/**
 * @file voc.hpp
 * @brief Variation of constants for the inhomogeneous equations
 *
 *     l(U)_j - z U_j = F_j            (right)
 *     l+(U+)_j - z U+_j = F_j         (left)
 *
 * with U_j = Q_j C1_j + P_j C2_j and U+_j = C1+_j Q+_j + C2+_j P+_j, and the
 * representation of a solution at z through the fundamental system at z0
 * (forcing (z - z0) Y).
 */

#include <cmath>
#include <limits>
#include <vector>

#include "hellinger/error.hpp"
#include "hellinger/linalg.hpp"
#include "hellinger/operator_model.hpp"
#include "hellinger/recurrence.hpp"

namespace hellinger {

struct VocOptions {
  bool compensated = false;  ///< Kahan summation of the cumulative sums
  NormKind norm = NormKind::spectral;
};

/// C1_j, C2_j (right) or C1+_j, C2+_j (left) for j = k..J.
struct VocCoefficients {
  Side side = Side::right;
  int k = 0;
  int J = 0;
  std::vector<MatrixC> c1;
  std::vector<MatrixC> c2;
  /// ||C_k|| plus the accumulated term norms; the non-cancelling size of C_j.
  std::vector<double> c1_magnitude;
  std::vector<double> c2_magnitude;

  const MatrixC& first(int j) const { return c1.at(slot(j)); }
  const MatrixC& second(int j) const { return c2.at(slot(j)); }
  std::size_t slot(int j) const {
    if (j < k || j > J) throw ConfigError("coefficient index " + std::to_string(j) + " outside [k, J]");
    return static_cast<std::size_t>(j - k);
  }
};

/// Cumulative sums
///
///     C1_j = C1_k - sum_{i=k}^{j-1} P+_i F_i,   C2_j = C2_k + sum Q+_i F_i
///     C1+_j = C1+_k - sum F_i P_i,              C2+_j = C2+_k + sum F_i Q_i
///
/// forcing[i] holds F_i; entries i in [k, J-1] are used.
inline VocCoefficients voc_coefficients(const FundamentalSystem& fs, const std::vector<MatrixC>& forcing, int k,
                                        int J, const MatrixC& base1, const MatrixC& base2, Side side,
                                        const VocOptions& opt = {}) {
  if (k < 0 || J < k) throw ConfigError("voc: need 0 <= k <= J");
  if (fs.horizon() < J) {
    throw ConfigError("horizon mismatch: fundamental system reaches " + std::to_string(fs.horizon()) +
                      ", coefficients requested up to " + std::to_string(J));
  }
  if (static_cast<int>(forcing.size()) < J) {
    throw ConfigError("horizon mismatch: forcing has " + std::to_string(forcing.size()) + " entries, need " +
                      std::to_string(J));
  }
  VocCoefficients out;
  out.side = side;
  out.k = k;
  out.J = J;
  out.c1.reserve(static_cast<std::size_t>(J - k + 1));
  out.c2.reserve(static_cast<std::size_t>(J - k + 1));

  MatrixC sum1 = base1, sum2 = base2;
  MatrixC comp1 = MatrixC::Zero(base1.rows(), base1.cols());
  MatrixC comp2 = MatrixC::Zero(base2.rows(), base2.cols());
  double mag1 = operator_norm(base1, opt.norm);
  double mag2 = operator_norm(base2, opt.norm);
  auto accumulate = [&opt](MatrixC& sum, MatrixC& comp, const MatrixC& term) {
    if (!opt.compensated) {
      sum += term;
      return;
    }
    const MatrixC y = term - comp;
    const MatrixC t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  };

  out.c1.push_back(sum1);
  out.c2.push_back(sum2);
  out.c1_magnitude.push_back(mag1);
  out.c2_magnitude.push_back(mag2);
  for (int i = k; i < J; ++i) {
    const MatrixC& F = forcing[static_cast<std::size_t>(i)];
    MatrixC d1, d2;
    if (side == Side::right) {
      d1 = -(fs.P_plus(i) * F);
      d2 = fs.Q_plus(i) * F;
    } else {
      d1 = -(F * fs.P(i));
      d2 = F * fs.Q(i);
    }
    if (d1.rows() != sum1.rows() || d1.cols() != sum1.cols()) {
      throw ConfigError("dimension mismatch between forcing and base coefficients");
    }
    mag1 += operator_norm(d1, opt.norm);
    mag2 += operator_norm(d2, opt.norm);
    accumulate(sum1, comp1, d1);
    accumulate(sum2, comp2, d2);
    out.c1.push_back(sum1);
    out.c2.push_back(sum2);
    out.c1_magnitude.push_back(mag1);
    out.c2_magnitude.push_back(mag2);
  }
  return out;
}

/// U_j from the ansatz at fundamental-system index j using coefficients at
/// index `at` (normally at == j).
inline MatrixC voc_assemble(const FundamentalSystem& fs, const VocCoefficients& c, int j, int at) {
  if (c.side == Side::right) return fs.Q(j) * c.first(at) + fs.P(j) * c.second(at);
  return c.first(at) * fs.Q_plus(j) + c.second(at) * fs.P_plus(j);
}

struct DeltaSystemDefect {
  double homogeneous = 0.0;  ///< first equation, Q_j dC1 + P_j dC2 = 0
  double forcing = 0.0;      ///< second equation, A_{j,j+1}(Q_{j+1} dC1 + P_{j+1} dC2) = F_j
  int worst_index = 0;
};

/// Checks the two-equation system satisfied by the increments
/// dC_{j+1} = C_{j+1} - C_j at every step, independently of the closed forms.
inline DeltaSystemDefect delta_system_defect(const FundamentalSystem& fs, const OperatorFamily& family,
                                             const VocCoefficients& c, const std::vector<MatrixC>& forcing,
                                             NormKind kind = NormKind::spectral) {
  DeltaSystemDefect out;
  out.worst_index = c.k;
  auto nrm = [kind](const MatrixC& m) { return operator_norm(m, kind); };
  auto rel = [](double value, double scale) { return scale > 0.0 ? value / scale : value; };
  for (int j = c.k; j < c.J; ++j) {
    const MatrixC d1 = c.first(j + 1) - c.first(j);
    const MatrixC d2 = c.second(j + 1) - c.second(j);
    const MatrixC& F = forcing[static_cast<std::size_t>(j)];
    double e1, e2;
    if (c.side == Side::right) {
      const MatrixC up = family.upper(j);
      e1 = rel(nrm(fs.Q(j) * d1 + fs.P(j) * d2), nrm(fs.Q(j)) * nrm(d1) + nrm(fs.P(j)) * nrm(d2));
      e2 = rel(nrm(up * (fs.Q(j + 1) * d1 + fs.P(j + 1) * d2) - F),
               nrm(up) * (nrm(fs.Q(j + 1)) * nrm(d1) + nrm(fs.P(j + 1)) * nrm(d2)) + nrm(F));
    } else {
      const MatrixC lo = family.lower(j);
      e1 = rel(nrm(d1 * fs.Q_plus(j) + d2 * fs.P_plus(j)),
               nrm(fs.Q_plus(j)) * nrm(d1) + nrm(fs.P_plus(j)) * nrm(d2));
      e2 = rel(nrm((d1 * fs.Q_plus(j + 1) + d2 * fs.P_plus(j + 1)) * lo - F),
               nrm(lo) * (nrm(fs.Q_plus(j + 1)) * nrm(d1) + nrm(fs.P_plus(j + 1)) * nrm(d2)) + nrm(F));
    }
    if (std::max(e1, e2) > std::max(out.homogeneous, out.forcing)) out.worst_index = j;
    out.homogeneous = std::max(out.homogeneous, e1);
    out.forcing = std::max(out.forcing, e2);
  }
  return out;
}

struct InhomogeneousProblem {
  OperatorFamily family;
  Complex z;
  std::vector<MatrixC> forcing;  ///< F_0..F_{J-1}
  Side side = Side::right;
  MatrixC base1;  ///< C1_0 (or C1+_0)
  MatrixC base2;  ///< C2_0 (or C2+_0)
  int J = 1;
};

/// Solves the inhomogeneous problem by variation of constants with k = 0.
/// U_{-1}, U_0 come from the base constants. The defining equation is
/// re-checked at every row; a residual above tol_rec means the
/// implementation is inconsistent and raises NumericalError.
inline SolutionSeq solve_inhomogeneous(const InhomogeneousProblem& problem, const VocOptions& opt = {},
                                       double tol_rec = kTolRec) {
  const auto& family = problem.family;
  const int n = family.dim();
  const bool right = problem.side == Side::right;
  for (const auto* base : {&problem.base1, &problem.base2}) {
    if ((right && base->rows() != n) || (!right && base->cols() != n)) {
      throw ConfigError("dimension mismatch: base constants do not match block size");
    }
  }
  for (const auto& F : problem.forcing) {
    if (F.rows() != problem.base1.rows() || F.cols() != problem.base1.cols()) {
      throw ConfigError("dimension mismatch: forcing entry shape differs from base constants");
    }
  }
  const FundamentalSystem fs = fundamental_system(family, problem.z, problem.J);
  if (fs.truncation()) {
    throw NumericalError("fundamental system truncated at " + std::to_string(fs.truncation()->index) + ": " +
                         fs.truncation()->detail);
  }
  const VocCoefficients c =
      voc_coefficients(fs, problem.forcing, 0, problem.J, problem.base1, problem.base2, problem.side, opt);

  SolutionSeq seq;
  seq.z = problem.z;
  seq.side = problem.side;
  std::vector<double> assembly;  // ||Q_j|| ||C1|| + ||P_j|| ||C2|| magnitudes
  auto magnitude = [&](int j, int at) {
    const auto slot = c.slot(at);
    if (right) {
      return operator_norm(fs.Q(j), opt.norm) * c.c1_magnitude[slot] +
             operator_norm(fs.P(j), opt.norm) * c.c2_magnitude[slot];
    }
    return operator_norm(fs.Q_plus(j), opt.norm) * c.c1_magnitude[slot] +
           operator_norm(fs.P_plus(j), opt.norm) * c.c2_magnitude[slot];
  };
  seq.values.push_back(voc_assemble(fs, c, -1, 0));
  assembly.push_back(magnitude(-1, 0));
  for (int j = 0; j <= problem.J; ++j) {
    seq.values.push_back(voc_assemble(fs, c, j, j));
    assembly.push_back(magnitude(j, j));
  }

  double worst = 0.0;
  const MatrixC E = identity(n);
  for (int j = 0; j < problem.J; ++j) {
    const MatrixC& F = problem.forcing[static_cast<std::size_t>(j)];
    const MatrixC r = apply_l(family, seq, j) - F;
    const MatrixC shifted = family.diag(j) - problem.z * E;
    auto size_at = [&](int i) {
      return std::max(operator_norm(seq.at(i), opt.norm), assembly[static_cast<std::size_t>(i + 1)]);
    };
    const MatrixC before = right ? family.lower(j - 1) : family.upper(j - 1);
    const MatrixC after = right ? family.upper(j) : family.lower(j);
    const double scale = operator_norm(before, opt.norm) * size_at(j - 1) +
                         operator_norm(shifted, opt.norm) * size_at(j) +
                         operator_norm(after, opt.norm) * size_at(j + 1) + operator_norm(F, opt.norm);
    const double rn = operator_norm(r, opt.norm);
    worst = std::max(worst, scale > 0.0 ? rn / scale : rn);
  }
  seq.max_residual = worst;
  if (!(worst <= tol_rec)) {
    throw NumericalError("variation-of-constants inconsistency: scaled residual " + std::to_string(worst));
  }
  return seq;
}

// ---------------------------------------------------------------------------
// Representation of a solution at z through the fundamental system at z0

struct Anchor {
  MatrixC c1;
  MatrixC c2;
  double condition = 0.0;       ///< ||W|| ||W^-1|| of the matching system
  double inverse_defect = 0.0;  ///< ||W^-1 W - I|| / (||W^-1|| ||W||)
};

/// C_k from exact matching at j = k-1, k. The inverse of the 2x2 block
/// matching system is read off the Wronskian identities at j = k-1, so no
/// factorization is involved. Raises "degenerate anchor" when that inverse
/// does not invert the system.
inline Anchor anchor_coefficients(const FundamentalSystem& fs0, const OperatorFamily& family, const SolutionSeq& Y,
                                  int k, NormKind kind = NormKind::spectral) {
  if (k < 0 || k > std::min(fs0.horizon(), Y.horizon())) throw ConfigError("anchor index out of range");
  const Eigen::Index n = fs0.dim();
  const MatrixC up = family.upper(k - 1);  // A_{k-1,k}
  const MatrixC lo = family.lower(k - 1);  // A_{k,k-1}
  MatrixC W(2 * n, 2 * n), Winv(2 * n, 2 * n);
  Anchor a;
  if (Y.side == Side::right) {
    W << fs0.Q(k - 1), fs0.P(k - 1), fs0.Q(k), fs0.P(k);
    Winv << fs0.P_plus(k) * lo, -(fs0.P_plus(k - 1) * up), -(fs0.Q_plus(k) * lo), fs0.Q_plus(k - 1) * up;
    a.c1 = fs0.P_plus(k) * lo * Y.at(k - 1) - fs0.P_plus(k - 1) * up * Y.at(k);
    a.c2 = fs0.Q_plus(k - 1) * up * Y.at(k) - fs0.Q_plus(k) * lo * Y.at(k - 1);
  } else {
    W << fs0.Q_plus(k - 1), fs0.Q_plus(k), fs0.P_plus(k - 1), fs0.P_plus(k);
    Winv << up * fs0.P(k), -(up * fs0.Q(k)), -(lo * fs0.P(k - 1)), lo * fs0.Q(k - 1);
    a.c1 = Y.at(k - 1) * up * fs0.P(k) - Y.at(k) * lo * fs0.P(k - 1);
    a.c2 = Y.at(k) * lo * fs0.Q(k - 1) - Y.at(k - 1) * up * fs0.Q(k);
  }
  const double nw = operator_norm(W, kind);
  const double nwi = operator_norm(Winv, kind);
  a.condition = nw * nwi;
  const MatrixC check = Y.side == Side::right ? MatrixC(Winv * W) : MatrixC(W * Winv);
  a.inverse_defect = operator_norm(check - identity(2 * n), kind) / std::max(a.condition, 1.0);
  if (!std::isfinite(a.condition) || !(a.inverse_defect <= 1e-6)) {
    throw NumericalError("degenerate anchor at k = " + std::to_string(k) + ": condition " +
                         std::to_string(a.condition) + ", inverse defect " + std::to_string(a.inverse_defect));
  }
  return a;
}

struct RepresentationResult {
  Side side = Side::right;
  int k = 0;
  int J = 0;
  Anchor anchor;
  VocCoefficients coefficients;
  std::vector<MatrixC> reconstruction;  ///< j = k-1..J
  double max_defect = 0.0;
  int worst_index = 0;
};

/// Rebuilds Y (a solution at z) from the fundamental system at z0:
///
///     Y_j = Q_j(z0) C1_k + P_j(z0) C2_k
///           + (z - z0) sum_{i=k}^{j-1} (P_j(z0) Q+_i(z0) - Q_j(z0) P+_i(z0)) Y_i
///
/// (and the mirrored left form), evaluated through the cumulative
/// coefficients with F_i = (z - z0) Y_i. Defects are relative to the
/// non-cancelling magnitude of the right-hand side.
inline RepresentationResult hellinger_representation(const FundamentalSystem& fs0, const OperatorFamily& family,
                                                     const SolutionSeq& Y, int k, const VocOptions& opt = {}) {
  const int J = std::min(fs0.horizon(), Y.horizon());
  if (k < 0 || k > J - 1) throw ConfigError("representation: need 0 <= k <= J-1");
  RepresentationResult out;
  out.side = Y.side;
  out.k = k;
  out.J = J;
  out.anchor = anchor_coefficients(fs0, family, Y, k, opt.norm);

  const Complex dz = Y.z - fs0.z();
  std::vector<MatrixC> forcing(static_cast<std::size_t>(J));
  for (int i = 0; i < J; ++i) {
    forcing[static_cast<std::size_t>(i)] = i >= k ? MatrixC(dz * Y.at(i)) : MatrixC::Zero(Y.at(i).rows(), Y.at(i).cols());
  }
  out.coefficients = voc_coefficients(fs0, forcing, k, J, out.anchor.c1, out.anchor.c2, Y.side, opt);
  const auto& c = out.coefficients;

  out.worst_index = k - 1;
  for (int j = k - 1; j <= J; ++j) {
    const int at = std::max(j, k);
    MatrixC recon = voc_assemble(fs0, c, j, at);
    const auto slot = c.slot(at);
    const double nQ = operator_norm(Y.side == Side::right ? fs0.Q(j) : fs0.Q_plus(j), opt.norm);
    const double nP = operator_norm(Y.side == Side::right ? fs0.P(j) : fs0.P_plus(j), opt.norm);
    const double scale =
        operator_norm(Y.at(j), opt.norm) + nQ * c.c1_magnitude[slot] + nP * c.c2_magnitude[slot];
    const double diff = operator_norm(recon - Y.at(j), opt.norm);
    const double d = scale > 0.0 ? diff / scale : diff;
    if (d > out.max_defect) {
      out.max_defect = d;
      out.worst_index = j;
    }
    out.reconstruction.push_back(std::move(recon));
  }
  return out;
}

}  // namespace hellinger
