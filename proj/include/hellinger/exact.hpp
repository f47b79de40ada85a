#pragma once

/**
 * @file exact.hpp
 * @brief Exact Gaussian-rational arithmetic and the exact fundamental
 *        system used as the oracle for floating-point results.
 *
 * Every finite double is a dyadic rational, so family blocks convert to
 * rationals without loss and the recursion runs with no rounding at all.
 */

#include <gmpxx.h>

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hellinger/complex_io.hpp"
#include "hellinger/error.hpp"
#include "hellinger/linalg.hpp"
#include "hellinger/operator_model.hpp"
#include "hellinger/recurrence.hpp"

namespace hellinger {

struct GaussianRational {
  mpq_class re;
  mpq_class im;

  GaussianRational() : re(0), im(0) {}
  GaussianRational(mpq_class r, mpq_class i = 0) : re(std::move(r)), im(std::move(i)) {
    re.canonicalize();
    im.canonicalize();
  }

  /// Exact value of a double-precision complex number.
  static GaussianRational from_complex(Complex z) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw ConfigError("non-finite value has no exact form");
    return {mpq_class(z.real()), mpq_class(z.imag())};
  }

  Complex to_complex() const { return {re.get_d(), im.get_d()}; }
  bool is_zero() const { return re == 0 && im == 0; }
  bool is_real() const { return im == 0; }

  /// Bits held by numerators and denominators.
  std::size_t bits() const {
    return mpz_sizeinbase(re.get_num_mpz_t(), 2) + mpz_sizeinbase(re.get_den_mpz_t(), 2) +
           mpz_sizeinbase(im.get_num_mpz_t(), 2) + mpz_sizeinbase(im.get_den_mpz_t(), 2);
  }

  friend GaussianRational operator+(const GaussianRational& a, const GaussianRational& b) {
    return {a.re + b.re, a.im + b.im};
  }
  friend GaussianRational operator-(const GaussianRational& a, const GaussianRational& b) {
    return {a.re - b.re, a.im - b.im};
  }
  friend GaussianRational operator-(const GaussianRational& a) { return {-a.re, -a.im}; }
  friend GaussianRational operator*(const GaussianRational& a, const GaussianRational& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  friend GaussianRational operator/(const GaussianRational& a, const GaussianRational& b) {
    const mpq_class d = b.re * b.re + b.im * b.im;
    if (d == 0) throw NumericalError("exact division by zero");
    return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
  }
  friend bool operator==(const GaussianRational& a, const GaussianRational& b) { return a.re == b.re && a.im == b.im; }

  std::string to_string() const { return re.get_str() + (im >= 0 ? "+" : "") + im.get_str() + "i"; }
};

namespace detail {

inline mpq_class parse_rational_unchecked(const std::string& text) {
  const auto slash = text.find('/');
  if (slash != std::string::npos) {
    std::string num = text.substr(0, slash);
    if (!num.empty() && num[0] == '+') num.erase(0, 1);
    mpq_class q(mpz_class(num), mpz_class(text.substr(slash + 1)));
    if (q.get_den() == 0) throw ConfigError("zero denominator in '" + text + "'");
    q.canonicalize();
    return q;
  }
  std::string mantissa = text;
  long exponent = 0;
  const auto e = mantissa.find_first_of("eE");
  if (e != std::string::npos) {
    exponent = std::stol(mantissa.substr(e + 1));
    mantissa.resize(e);
  }
  bool negative = false;
  if (!mantissa.empty() && (mantissa[0] == '+' || mantissa[0] == '-')) {
    negative = mantissa[0] == '-';
    mantissa.erase(0, 1);
  }
  const auto dot = mantissa.find('.');
  if (dot != std::string::npos) {
    exponent -= static_cast<long>(mantissa.size() - dot - 1);
    mantissa.erase(dot, 1);
  }
  if (mantissa.empty()) mantissa = "0";
  mpq_class q{mpz_class(mantissa)};
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exponent)));
  if (exponent >= 0) {
    q *= scale;
  } else {
    q /= scale;
  }
  q.canonicalize();
  return negative ? mpq_class(-q) : q;
}

}  // namespace detail

/// Exact rational value of number text ("3", "-1/4", "2.5e-3").
inline mpq_class parse_rational_text(const std::string& text) {
  try {
    return detail::parse_rational_unchecked(text);
  } catch (const std::invalid_argument&) {
  } catch (const std::out_of_range&) {
  }
  throw ConfigError("not a rational number: '" + text + "'");
}

/// Parses a Gaussian rational with the complex flag grammar, e.g. "1/2+i".
inline GaussianRational parse_gaussian_rational(std::string_view text) {
  const auto parts = split_complex(text);
  return {parse_rational_text(parts.re), parse_rational_text(parts.im)};
}

class RationalMatrix {
 public:
  RationalMatrix() = default;
  explicit RationalMatrix(int n) : n_(n), a_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n)) {}

  static RationalMatrix identity(int n) {
    RationalMatrix m(n);
    for (int i = 0; i < n; ++i) m(i, i) = GaussianRational(1);
    return m;
  }

  static RationalMatrix from_matrix(const MatrixC& m) {
    if (m.rows() != m.cols()) throw ConfigError("exact matrices must be square");
    RationalMatrix out(static_cast<int>(m.rows()));
    for (int r = 0; r < out.n_; ++r) {
      for (int c = 0; c < out.n_; ++c) out(r, c) = GaussianRational::from_complex(m(r, c));
    }
    return out;
  }

  int dim() const { return n_; }
  GaussianRational& operator()(int r, int c) { return a_[static_cast<std::size_t>(r * n_ + c)]; }
  const GaussianRational& operator()(int r, int c) const { return a_[static_cast<std::size_t>(r * n_ + c)]; }

  MatrixC to_matrix() const {
    MatrixC m(n_, n_);
    for (int r = 0; r < n_; ++r) {
      for (int c = 0; c < n_; ++c) m(r, c) = (*this)(r, c).to_complex();
    }
    return m;
  }

  std::size_t bits() const {
    std::size_t b = 0;
    for (const auto& x : a_) b += x.bits();
    return b;
  }

  /// c when this matrix equals c E exactly.
  std::optional<GaussianRational> scalar_multiple() const {
    for (int r = 0; r < n_; ++r) {
      for (int c = 0; c < n_; ++c) {
        if (r != c && !(*this)(r, c).is_zero()) return std::nullopt;
        if (r == c && !((*this)(r, c) == (*this)(0, 0))) return std::nullopt;
      }
    }
    return (*this)(0, 0);
  }

  friend RationalMatrix operator+(const RationalMatrix& a, const RationalMatrix& b) {
    RationalMatrix m(a.n_);
    for (std::size_t i = 0; i < m.a_.size(); ++i) m.a_[i] = a.a_[i] + b.a_[i];
    return m;
  }
  friend RationalMatrix operator-(const RationalMatrix& a, const RationalMatrix& b) {
    RationalMatrix m(a.n_);
    for (std::size_t i = 0; i < m.a_.size(); ++i) m.a_[i] = a.a_[i] - b.a_[i];
    return m;
  }
  friend RationalMatrix operator*(const RationalMatrix& a, const RationalMatrix& b) {
    RationalMatrix m(a.n_);
    for (int r = 0; r < a.n_; ++r) {
      for (int c = 0; c < a.n_; ++c) {
        GaussianRational s;
        for (int k = 0; k < a.n_; ++k) {
          if (!a(r, k).is_zero() && !b(k, c).is_zero()) s = s + a(r, k) * b(k, c);
        }
        m(r, c) = std::move(s);
      }
    }
    return m;
  }
  friend RationalMatrix operator*(const GaussianRational& s, const RationalMatrix& b) {
    RationalMatrix m(b.n_);
    for (std::size_t i = 0; i < m.a_.size(); ++i) m.a_[i] = s * b.a_[i];
    return m;
  }
  friend bool operator==(const RationalMatrix& a, const RationalMatrix& b) { return a.n_ == b.n_ && a.a_ == b.a_; }

  /// Gauss-Jordan elimination with nonzero pivots.
  RationalMatrix inverse() const {
    RationalMatrix work = *this;
    RationalMatrix inv = identity(n_);
    for (int col = 0; col < n_; ++col) {
      int pivot = col;
      while (pivot < n_ && work(pivot, col).is_zero()) ++pivot;
      if (pivot == n_) throw NumericalError("exact inverse: singular block");
      if (pivot != col) {
        for (int c = 0; c < n_; ++c) {
          std::swap(work(pivot, c), work(col, c));
          std::swap(inv(pivot, c), inv(col, c));
        }
      }
      const GaussianRational d = work(col, col);
      for (int c = 0; c < n_; ++c) {
        work(col, c) = work(col, c) / d;
        inv(col, c) = inv(col, c) / d;
      }
      for (int r = 0; r < n_; ++r) {
        if (r == col || work(r, col).is_zero()) continue;
        const GaussianRational f = work(r, col);
        for (int c = 0; c < n_; ++c) {
          work(r, c) = work(r, c) - f * work(col, c);
          inv(r, c) = inv(r, c) - f * inv(col, c);
        }
      }
    }
    return inv;
  }

 private:
  int n_ = 0;
  std::vector<GaussianRational> a_;
};

/// Exact P, Q, P+, Q+ on j = -1..J.
struct RationalMatrixSeq {
  int n = 1;
  GaussianRational z;
  int J = 0;
  std::array<std::vector<RationalMatrix>, 4> values;

  const RationalMatrix& at(Fundamental f, int j) const {
    if (j < -1 || j > J) throw ConfigError("exact index out of range: " + std::to_string(j));
    return values[static_cast<std::size_t>(f)][static_cast<std::size_t>(j + 1)];
  }
};

inline constexpr std::size_t kDefaultExactBitCap = std::size_t{1} << 30;

/// Exact forward recursion. Raises "horizon memory cap exceeded" when the
/// stored numerators and denominators exceed max_bits in total.
inline RationalMatrixSeq exact_fundamental_at_rational(const OperatorFamily& family, const GaussianRational& z, int J,
                                                       std::size_t max_bits = kDefaultExactBitCap) {
  if (J < 1) throw ConfigError("horizon J must be >= 1");
  if (family.horizon() && J > *family.horizon()) throw ConfigError("horizon exceeded for exact recursion");
  const int n = family.dim();
  RationalMatrixSeq out;
  out.n = n;
  out.z = z;
  out.J = J;
  const RationalMatrix E = RationalMatrix::identity(n);
  const RationalMatrix O(n);
  out.values[0] = {E, O};
  out.values[1] = {O, E};
  out.values[2] = {E, O};
  out.values[3] = {O, E};
  std::size_t total = 0;
  RationalMatrix upper_prev = RationalMatrix::from_matrix(family.upper(-1));
  RationalMatrix lower_prev = RationalMatrix::from_matrix(family.lower(-1));
  for (int j = 0; j < J; ++j) {
    const RationalMatrix diag = RationalMatrix::from_matrix(family.diag(j));
    const RationalMatrix upper = RationalMatrix::from_matrix(family.upper(j));
    const RationalMatrix lower = RationalMatrix::from_matrix(family.lower(j));
    const RationalMatrix shifted = z * E - diag;
    const RationalMatrix up_inv = upper.inverse();
    const RationalMatrix lo_inv = lower.inverse();
    for (std::size_t s = 0; s < 4; ++s) {
      auto& v = out.values[s];
      const RationalMatrix& prev = v[v.size() - 2];
      const RationalMatrix& curr = v[v.size() - 1];
      RationalMatrix next = s < 2 ? up_inv * (shifted * curr - lower_prev * prev)
                                  : (curr * shifted - prev * upper_prev) * lo_inv;
      total += next.bits();
      v.push_back(std::move(next));
    }
    if (total > max_bits) {
      throw NumericalError("horizon memory cap exceeded at j = " + std::to_string(j + 1) + " (" +
                           std::to_string(total) + " bits)");
    }
    upper_prev = upper;
    lower_prev = lower;
  }
  return out;
}

struct OracleComparison {
  int J = 0;
  double max_relative_error = 0.0;
  int worst_index = -1;
  Fundamental worst_sequence = Fundamental::P;
};

/// max over sequences and j of ||F_j - X_j|| / max(||X_j||, ||X_{j-1}||),
/// F floating, X exact. The neighbour term keeps the measure meaningful at
/// indices where X_j vanishes exactly.
inline OracleComparison compare_with_oracle(const FundamentalSystem& fs, const RationalMatrixSeq& exact,
                                            NormKind kind = NormKind::spectral) {
  OracleComparison out;
  out.J = std::min(fs.horizon(), exact.J);
  for (Fundamental f : {Fundamental::P, Fundamental::Q, Fundamental::P_plus, Fundamental::Q_plus}) {
    double prev_norm = 0.0;
    for (int j = -1; j <= out.J; ++j) {
      const MatrixC X = exact.at(f, j).to_matrix();
      const double xn = operator_norm(X, kind);
      const double scale = std::max(xn, prev_norm);
      const double diff = operator_norm(fs.value(f, j) - X, kind);
      const double err = scale > 0.0 ? diff / scale : diff;
      if (err > out.max_relative_error) {
        out.max_relative_error = err;
        out.worst_index = j;
        out.worst_sequence = f;
      }
      prev_norm = xn;
    }
  }
  return out;
}

}  // namespace hellinger
