#pragma once

/**
 * @file linalg.hpp
 * @brief Dense complex matrix helpers shared by every module.
 *
 * Storage and factorizations come from Eigen. This header only fixes the
 * conventions the rest of the library relies on: which norm is meant by
 * ||.||, how inversion reports conditioning, and how Hermitian/positive
 * structure is tested.
 */

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "hellinger/error.hpp"

namespace hellinger {

using Complex = std::complex<double>;
using MatrixC = Eigen::MatrixXcd;
using VectorC = Eigen::VectorXcd;

/// Matrix norm used wherever a block norm is needed.
enum class NormKind {
  spectral,   ///< operator norm induced by the Euclidean vector norm
  frobenius,
};

inline constexpr double kDefaultTolInv = 1e-10;
inline constexpr double kDefaultCondCap = 1e12;

inline const char* to_string(NormKind kind) {
  return kind == NormKind::spectral ? "spectral" : "frobenius";
}

inline NormKind norm_kind_from_string(const std::string& name) {
  if (name == "spectral" || name == "2") return NormKind::spectral;
  if (name == "frobenius" || name == "fro") return NormKind::frobenius;
  throw ConfigError("unknown norm '" + name + "' (expected spectral|frobenius)");
}

inline MatrixC identity(Eigen::Index n) { return MatrixC::Identity(n, n); }
inline MatrixC zero(Eigen::Index n) { return MatrixC::Zero(n, n); }

/// Largest entry modulus; cheap overflow probe.
inline double max_abs(const MatrixC& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// ||m|| in the requested norm. Works for rectangular input (vectors give
/// their Euclidean length under both norms).
inline double operator_norm(const MatrixC& m, NormKind kind = NormKind::spectral) {
  if (!m.allFinite()) throw NumericalError("non-finite matrix");
  if (m.size() == 0) return 0.0;
  if (kind == NormKind::frobenius || m.rows() == 1 || m.cols() == 1) return m.stableNorm();
  Eigen::JacobiSVD<MatrixC> svd(m);
  return svd.singularValues()(0);
}

struct Inverse {
  MatrixC matrix;
  double condition;  ///< spectral condition number sigma_max / sigma_min
};

/// Inverts a square block. Fails with "ill-conditioned block" when the
/// matrix is singular to working precision, when its condition number
/// exceeds cond_cap, or when ||M * M^-1 - E|| > tol_inv.
inline Inverse invert(const MatrixC& m, double cond_cap = kDefaultCondCap,
                      double tol_inv = kDefaultTolInv) {
  if (m.rows() != m.cols()) throw ConfigError("invert: matrix is not square");
  if (!m.allFinite()) throw NumericalError("non-finite matrix");
  const auto n = m.rows();
  Eigen::JacobiSVD<MatrixC> svd(m);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(n - 1);
  if (!(smin > 0.0)) throw NumericalError("ill-conditioned block: singular");
  const double cond = smax / smin;
  if (!(cond <= cond_cap)) {
    throw NumericalError("ill-conditioned block: condition estimate " + std::to_string(cond) +
                         " exceeds cap " + std::to_string(cond_cap));
  }
  MatrixC inv = m.partialPivLu().inverse();
  const double residual = operator_norm(m * inv - identity(n));
  if (!(residual <= tol_inv)) {
    throw NumericalError("ill-conditioned block: inversion residual " + std::to_string(residual));
  }
  return {std::move(inv), cond};
}

struct HermitianCheck {
  bool hermitian = false;
  bool positive_definite = false;
};

/// hermitian iff ||M - M*|| <= tol ||M||; positive-definite iff hermitian and
/// the smallest eigenvalue of the Hermitian part exceeds tol ||M||.
inline HermitianCheck is_hermitian_positive(const MatrixC& m, double tol = 1e-12) {
  HermitianCheck out;
  if (m.rows() != m.cols() || !m.allFinite()) return out;
  const double scale = operator_norm(m);
  out.hermitian = operator_norm(m - m.adjoint()) <= tol * scale;
  if (!out.hermitian || scale == 0.0) return out;
  const MatrixC herm = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<MatrixC> eig(herm, Eigen::EigenvaluesOnly);
  out.positive_definite = eig.eigenvalues()(0) > tol * scale;
  return out;
}

}  // namespace hellinger
