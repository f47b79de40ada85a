#pragma once

/**
 * @file lp_analysis.hpp
 * @brief l^p tail norms of fundamental systems, growth classification of
 *        norm sequences, membership verdicts, and the numerical checks of
 *        the invariance and perturbation statements.
 *
 * Tail norm of the right system at exponent p:
 *
 *     M_k^p(z) = max{ (sum_{j>=k} ||P_j(z)||^p)^{1/p}, (sum_{j>=k} ||Q_j(z)||^p)^{1/p} }
 *
 * and M_k^{q,+} likewise with P+, Q+. For p = inf the sums are replaced by
 * sup_{j>=k}. Only j <= J is ever computed; the part beyond J is estimated
 * from the fitted decay of the last window and reported separately.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hellinger/error.hpp"
#include "hellinger/linalg.hpp"
#include "hellinger/operator_model.hpp"
#include "hellinger/parallel.hpp"
#include "hellinger/recurrence.hpp"
#include "hellinger/voc.hpp"

namespace hellinger {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Fits whose RMS log-residual exceeds this are inconclusive.
inline constexpr double kMaxFitResidual = 0.25;
/// |alpha| below this (power model) or |log rate| below kBoundedSlope
/// (geometric model) counts as bounded.
inline constexpr double kBoundedExponent = 0.02;
inline constexpr double kBoundedSlope = 1e-4;
/// Power decay j^alpha is p-summable only when p*alpha < -1 - kCriticalMargin.
inline constexpr double kCriticalMargin = 0.01;
inline constexpr int kMinWindow = 20;

inline void check_exponent(double p) {
  if (!(p >= 1.0)) throw ConfigError("exponent p must lie in [1, inf]");
}

/// q with 1/p + 1/q = 1.
inline double conjugate_exponent(double p) {
  check_exponent(p);
  if (p == 1.0) return kInf;
  if (std::isinf(p)) return 1.0;
  return p / (p - 1.0);
}

inline std::string format_exponent(double p) { return std::isinf(p) ? "inf" : format_double(p); }

// ---------------------------------------------------------------------------
// Tail sums of plain arrays

/// (sum_{j=k}^{J} y_j^p)^{1/p} for y indexed from first_index, or the max for
/// p = inf. Zero for an empty range.
inline double lp_tail(const std::vector<double>& y, int first_index, double p, int k, int J) {
  check_exponent(p);
  const int last = first_index + static_cast<int>(y.size()) - 1;
  k = std::max(k, first_index);
  J = std::min(J, last);
  if (k > J) return 0.0;
  double acc = 0.0;
  for (int j = J; j >= k; --j) {
    const double v = y[static_cast<std::size_t>(j - first_index)];
    acc = std::isinf(p) ? std::max(acc, v) : acc + std::pow(v, p);
  }
  return std::isinf(p) ? acc : std::pow(acc, 1.0 / p);
}

/// S_k = sum_{j=k}^{J} y_j^p (or max for p = inf) for every k = first..J,
/// accumulated backwards so that S_k >= S_{k+1} holds exactly.
inline std::vector<double> suffix_sums(const std::vector<double>& y, double p) {
  std::vector<double> s(y.size() + 1, 0.0);
  for (std::size_t i = y.size(); i-- > 0;) {
    s[i] = std::isinf(p) ? std::max(s[i + 1], y[i]) : s[i + 1] + std::pow(y[i], p);
  }
  s.pop_back();
  return s;
}

// ---------------------------------------------------------------------------
// Growth classification

enum class GrowthKind { decay_power, decay_geometric, bounded, growth_power, growth_geometric, inconclusive };

inline const char* to_string(GrowthKind k) {
  switch (k) {
    case GrowthKind::decay_power: return "decay-power";
    case GrowthKind::decay_geometric: return "decay-geometric";
    case GrowthKind::bounded: return "bounded";
    case GrowthKind::growth_power: return "growth-power";
    case GrowthKind::growth_geometric: return "growth-geometric";
    case GrowthKind::inconclusive: return "inconclusive";
  }
  return "?";
}

inline bool is_decay(GrowthKind k) { return k == GrowthKind::decay_power || k == GrowthKind::decay_geometric; }
inline bool is_growth(GrowthKind k) { return k == GrowthKind::growth_power || k == GrowthKind::growth_geometric; }

struct GrowthClass {
  GrowthKind kind = GrowthKind::inconclusive;
  /// alpha for the power models, rate rho or lambda per index for the
  /// geometric ones, 0 for bounded, NaN when inconclusive.
  double exponent = std::numeric_limits<double>::quiet_NaN();
  double ci_low = std::numeric_limits<double>::quiet_NaN();  ///< 95% interval on exponent
  double ci_high = std::numeric_limits<double>::quiet_NaN();
  bool power_model = false;  ///< which fit was selected

  double alpha = std::numeric_limits<double>::quiet_NaN();  ///< slope of log y against log j
  double alpha_stderr = std::numeric_limits<double>::quiet_NaN();
  double power_rms = std::numeric_limits<double>::quiet_NaN();
  double log_rate = std::numeric_limits<double>::quiet_NaN();  ///< slope of log y against j
  double log_rate_stderr = std::numeric_limits<double>::quiet_NaN();
  double geometric_rms = std::numeric_limits<double>::quiet_NaN();
  /// max of y_j^{1/j} over the last quarter of the window
  double root_limsup = std::numeric_limits<double>::quiet_NaN();

  int window_lo = 0;
  int window_hi = 0;
  int samples = 0;
  int zeros_excluded = 0;
  std::string note;
};

namespace detail {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double rms = 0.0;
};

inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ssr += r * r;
  }
  f.rms = std::sqrt(ssr / n);
  f.slope_stderr = (x.size() > 2 && sxx > 0.0) ? std::sqrt(ssr / (n - 2.0) / sxx) : 0.0;
  return f;
}

/// Core classifier on (j, log y_j) samples; -inf entries are zeros.
inline GrowthClass classify_log_samples(const std::vector<int>& index, const std::vector<double>& logs, int lo, int hi,
                                        std::size_t min_samples) {
  GrowthClass g;
  g.window_lo = lo;
  g.window_hi = hi;
  std::vector<double> xj, xlog, yj, ylog;
  for (std::size_t i = 0; i < index.size(); ++i) {
    const int j = index[i];
    if (j < lo || j > hi) continue;
    if (!std::isfinite(logs[i])) {
      if (logs[i] < 0) ++g.zeros_excluded;
      continue;
    }
    xj.push_back(j);
    yj.push_back(logs[i]);
    if (j >= 1) {
      xlog.push_back(std::log(static_cast<double>(j)));
      ylog.push_back(logs[i]);
    }
  }
  g.samples = static_cast<int>(xj.size());
  if (g.zeros_excluded > 0) g.note = std::to_string(g.zeros_excluded) + " zero entries excluded";
  if (hi - lo + 1 < kMinWindow) {
    g.note = "window too short";
    return g;
  }
  if (xj.size() < min_samples || xlog.size() < 3) {
    g.note = xj.empty() ? "all entries zero" : "too few nonzero samples";
    return g;
  }
  const LineFit geo = least_squares(xj, yj);
  const LineFit pow = least_squares(xlog, ylog);
  g.log_rate = geo.slope;
  g.log_rate_stderr = geo.slope_stderr;
  g.geometric_rms = geo.rms;
  g.alpha = pow.slope;
  g.alpha_stderr = pow.slope_stderr;
  g.power_rms = pow.rms;

  const int tail_start = hi - (hi - lo + 1) / 4;
  double root = -kInf;
  for (std::size_t i = 0; i < xj.size(); ++i) {
    if (xj[i] >= tail_start && xj[i] >= 1) root = std::max(root, yj[i] / xj[i]);
  }
  g.root_limsup = std::exp(root);

  g.power_model = pow.rms <= geo.rms;
  const double best = std::min(pow.rms, geo.rms);
  if (!(best <= kMaxFitResidual)) {
    g.note = "fit residual " + format_double(best) + " exceeds " + format_double(kMaxFitResidual);
    return g;
  }
  constexpr double z95 = 1.96;
  if (g.power_model) {
    g.exponent = pow.slope;
    g.ci_low = pow.slope - z95 * pow.slope_stderr;
    g.ci_high = pow.slope + z95 * pow.slope_stderr;
    if (std::abs(pow.slope) < kBoundedExponent) {
      g.kind = GrowthKind::bounded;
    } else {
      g.kind = pow.slope < 0 ? GrowthKind::decay_power : GrowthKind::growth_power;
    }
  } else {
    g.exponent = std::exp(geo.slope);
    g.ci_low = std::exp(geo.slope - z95 * geo.slope_stderr);
    g.ci_high = std::exp(geo.slope + z95 * geo.slope_stderr);
    if (std::abs(geo.slope) < kBoundedSlope) {
      g.kind = GrowthKind::bounded;
    } else {
      g.kind = geo.slope < 0 ? GrowthKind::decay_geometric : GrowthKind::growth_geometric;
    }
  }
  if (g.kind == GrowthKind::bounded) g.exponent = 0.0;
  return g;
}

inline std::pair<int, int> default_window(int last) { return {last / 2, last}; }

}  // namespace detail

/// Classifies a nonnegative sequence y_j, j = first_index.., on the window
/// [lo, hi] (default [J/2, J] with J the last index) by least-squares fits
/// of log y_j against j and against log j. Zeros are excluded and counted.
inline GrowthClass growth_classify(const std::vector<double>& norms, int first_index,
                                   std::optional<std::pair<int, int>> window = std::nullopt) {
  const int last = first_index + static_cast<int>(norms.size()) - 1;
  const auto [lo, hi] = window ? *window : detail::default_window(last);
  if (lo > hi || lo < first_index || hi > last) throw ConfigError("growth window outside the sequence");
  std::vector<int> index;
  std::vector<double> logs;
  for (int j = lo; j <= hi; ++j) {
    const double v = norms[static_cast<std::size_t>(j - first_index)];
    if (v < 0.0 || std::isnan(v)) throw ConfigError("growth_classify needs nonnegative values");
    index.push_back(j);
    logs.push_back(v == 0.0 ? -kInf : std::log(v));
  }
  return detail::classify_log_samples(index, logs, lo, hi, kMinWindow);
}

/// Log norms of one fundamental sequence for j = -1..horizon.
inline std::vector<double> log_norms(const FundamentalSystem& fs, Fundamental f, NormKind kind = NormKind::spectral) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(fs.horizon()) + 2);
  for (int j = -1; j <= fs.horizon(); ++j) out.push_back(fs.log_norm(f, j, kind));
  return out;
}

/// Classification of the pair maxima b_j = max(||Y_j||, ||Y_{j+1}||) taken
/// at even j. Sequences that vanish on every other index (zero-diagonal
/// families) become smooth under this sampling; summability is unchanged
/// since b_j^p <= y_j^p + y_{j+1}^p <= 2 b_j^p.
inline GrowthClass block_growth_classify(const std::vector<double>& logs, int first_index, int lo, int hi) {
  std::vector<int> index;
  std::vector<double> values;
  const int last = first_index + static_cast<int>(logs.size()) - 1;
  for (int j = lo + (lo % 2 != 0 ? 1 : 0); j + 1 <= std::min(hi, last); j += 2) {
    index.push_back(j);
    values.push_back(std::max(logs[static_cast<std::size_t>(j - first_index)],
                              logs[static_cast<std::size_t>(j + 1 - first_index)]));
  }
  return detail::classify_log_samples(index, values, lo, hi, kMinWindow / 2);
}

// ---------------------------------------------------------------------------
// Tail remainders and tail norms

/// Estimate of sum_{j>J} y_j^p (or sup_{j>J} y_j for p = inf) from the growth
/// class, extrapolating the last even block of L indices of the window.
/// +inf for non-summable classes, NaN when the class is inconclusive.
inline double tail_remainder(const std::vector<double>& logs, int first_index, int J, int L, double p,
                             const GrowthClass& g) {
  if (g.kind == GrowthKind::inconclusive) return std::numeric_limits<double>::quiet_NaN();
  L = std::max(2, L - L % 2);
  double block = 0.0;
  double block_log_max = -kInf;
  for (int j = J - L + 1; j <= J; ++j) {
    const double lg = logs[static_cast<std::size_t>(j - first_index)];
    block_log_max = std::max(block_log_max, lg);
    if (!std::isinf(p)) block += std::exp(p * lg);
  }
  if (std::isinf(p)) {
    if (is_decay(g.kind)) return 0.0;
    if (g.kind == GrowthKind::bounded) return std::exp(block_log_max);
    return kInf;
  }
  switch (g.kind) {
    case GrowthKind::decay_geometric: {
      const double r = std::exp(p * g.log_rate * L);
      return block * r / (1.0 - r);
    }
    case GrowthKind::decay_power: {
      const double beta = p * g.alpha + 1.0;
      if (!(beta < -kCriticalMargin)) return kInf;
      const double Jd = J;
      return block * std::pow(Jd, beta) / (std::pow(Jd - L, beta) - std::pow(Jd, beta));
    }
    default: return kInf;
  }
}

/// M_k for every k = 0..J of one side of a fundamental system.
struct TailProfile {
  double p = 2.0;
  bool plus = false;  ///< built from P+, Q+
  int J = 0;
  int window_lo = 0;
  std::array<GrowthClass, 2> growth;    ///< P-family, Q-family
  std::array<double, 2> remainder{};     ///< per family, see tail_remainder
  std::vector<double> truncated;         ///< max over families of the sum over k..J
  std::vector<double> extrapolated;      ///< same with the remainder added
  std::array<std::vector<double>, 2> partial;  ///< per family, S_k^{1/p}

  bool converged() const { return std::isfinite(remainder[0]) && std::isfinite(remainder[1]); }
};

inline TailProfile tail_profile(const FundamentalSystem& fs, double p, int J, bool plus,
                                std::optional<std::pair<int, int>> window = std::nullopt,
                                NormKind kind = NormKind::spectral) {
  check_exponent(p);
  if (J < 1 || J > fs.horizon()) throw ConfigError("tail profile horizon outside the fundamental system");
  const auto [lo, hi] = window ? *window : detail::default_window(J);
  if (hi != J || lo < 0 || lo >= hi) throw ConfigError("tail window must end at J");
  TailProfile t;
  t.p = p;
  t.plus = plus;
  t.J = J;
  t.window_lo = lo;
  const std::array<Fundamental, 2> families =
      plus ? std::array{Fundamental::P_plus, Fundamental::Q_plus} : std::array{Fundamental::P, Fundamental::Q};
  t.truncated.assign(static_cast<std::size_t>(J) + 1, 0.0);
  t.extrapolated.assign(static_cast<std::size_t>(J) + 1, 0.0);
  const int L = (hi - lo + 1) / 2;
  for (std::size_t s = 0; s < 2; ++s) {
    const auto logs = log_norms(fs, families[s], kind);
    t.growth[s] = block_growth_classify(logs, -1, lo, hi);
    t.remainder[s] = tail_remainder(logs, -1, J, L, p, t.growth[s]);
    std::vector<double> y;
    y.reserve(static_cast<std::size_t>(J) + 1);
    for (int j = 0; j <= J; ++j) y.push_back(std::exp(logs[static_cast<std::size_t>(j + 1)]));
    const auto sums = suffix_sums(y, p);
    const double R = std::isnan(t.remainder[s]) ? 0.0 : t.remainder[s];
    t.partial[s].resize(sums.size());
    for (std::size_t k = 0; k < sums.size(); ++k) {
      const double tr = std::isinf(p) ? sums[k] : std::pow(sums[k], 1.0 / p);
      const double ex = std::isinf(p) ? std::max(sums[k], R) : std::pow(sums[k] + R, 1.0 / p);
      t.partial[s][k] = tr;
      t.truncated[k] = std::max(t.truncated[k], tr);
      t.extrapolated[k] = std::max(t.extrapolated[k], ex);
    }
  }
  return t;
}

struct LpTail {
  double p = 2.0;
  int k = 0;
  int J = 0;
  bool plus = false;
  double value = 0.0;         ///< max over the two families of the sum over k..J
  double extrapolated = 0.0;  ///< value with the estimated remainder beyond J
  std::array<double, 2> remainder{};
  bool converged = false;
};

/// M_k^p (plus = false) or M_k^{q,+} (plus = true) truncated at J, with
/// the remainder estimate; p = inf gives the sup variant.
inline LpTail tail_norm(const FundamentalSystem& fs, double p, int k, int J, bool plus,
                        NormKind kind = NormKind::spectral) {
  if (k < 0 || k > J) throw ConfigError("tail_norm needs 0 <= k <= J");
  const auto t = tail_profile(fs, p, J, plus, std::nullopt, kind);
  LpTail out;
  out.p = p;
  out.k = k;
  out.J = J;
  out.plus = plus;
  out.value = t.truncated[static_cast<std::size_t>(k)];
  out.extrapolated = t.extrapolated[static_cast<std::size_t>(k)];
  out.remainder = t.remainder;
  out.converged = t.converged();
  return out;
}

// ---------------------------------------------------------------------------
// Membership

enum class Membership { all_in, not_all_in, inconclusive };

inline const char* to_string(Membership m) {
  switch (m) {
    case Membership::all_in: return "all-in-lp";
    case Membership::not_all_in: return "not-all-in-lp";
    case Membership::inconclusive: return "inconclusive";
  }
  return "?";
}

struct SequenceVerdict {
  Fundamental sequence = Fundamental::P;
  GrowthClass growth;
  double remainder = 0.0;
  Membership verdict = Membership::inconclusive;
  std::string reason;
};

struct SideVerdict {
  Side side = Side::right;
  double p = 2.0;
  Membership verdict = Membership::inconclusive;
  std::array<SequenceVerdict, 2> sequences;
  std::string note;
};

inline Membership sequence_membership(const GrowthClass& g, double p, double remainder, std::string& reason) {
  if (g.kind == GrowthKind::inconclusive) {
    reason = g.note.empty() ? "growth fit inconclusive" : g.note;
    return Membership::inconclusive;
  }
  if (std::isinf(p)) {
    if (is_growth(g.kind)) {
      reason = std::string(to_string(g.kind)) + " is unbounded";
      return Membership::not_all_in;
    }
    reason = std::string(to_string(g.kind)) + " is bounded";
    return Membership::all_in;
  }
  if (g.kind == GrowthKind::decay_geometric) {
    reason = "geometric decay is p-summable";
  } else if (g.kind == GrowthKind::decay_power) {
    if (!(p * g.alpha < -1.0 - kCriticalMargin)) {
      reason = "p*alpha = " + format_double(p * g.alpha) + " not below -1";
      return Membership::not_all_in;
    }
    reason = "p*alpha = " + format_double(p * g.alpha) + " below -1";
  } else {
    reason = std::string(to_string(g.kind)) + " is not p-summable";
    return Membership::not_all_in;
  }
  if (!std::isfinite(remainder)) {
    reason += "; tail remainder did not converge";
    return Membership::inconclusive;
  }
  return Membership::all_in;
}

/// Verdict for the right (P, Q) or left (P+, Q+) solution space at exponent
/// p from the fitted growth of the pair-maxima sequences on [lo, J].
inline SideVerdict side_membership(const FundamentalSystem& fs, Side side, double p, int J,
                                   std::optional<std::pair<int, int>> window = std::nullopt,
                                   NormKind kind = NormKind::spectral) {
  check_exponent(p);
  SideVerdict out;
  out.side = side;
  out.p = p;
  const std::array<Fundamental, 2> families = side == Side::right
                                                  ? std::array{Fundamental::P, Fundamental::Q}
                                                  : std::array{Fundamental::P_plus, Fundamental::Q_plus};
  out.sequences[0].sequence = families[0];
  out.sequences[1].sequence = families[1];
  if (fs.horizon() < J) {
    out.note = "recursion stopped at j = " + std::to_string(fs.horizon()) + " before the window filled";
    if (fs.truncation()) out.note += " (" + std::string(to_string(fs.truncation()->reason)) + ")";
    for (auto& s : out.sequences) s.reason = out.note;
    return out;
  }
  const auto [lo, hi] = window ? *window : detail::default_window(J);
  if (hi != J) throw ConfigError("membership window must end at J");
  bool any_out = false, all_in = true;
  for (auto& s : out.sequences) {
    const auto logs = log_norms(fs, s.sequence, kind);
    s.growth = block_growth_classify(logs, -1, lo, hi);
    s.remainder = tail_remainder(logs, -1, J, (hi - lo + 1) / 2, p, s.growth);
    s.verdict = sequence_membership(s.growth, p, s.remainder, s.reason);
    any_out = any_out || s.verdict == Membership::not_all_in;
    all_in = all_in && s.verdict == Membership::all_in;
  }
  out.verdict = any_out ? Membership::not_all_in : (all_in ? Membership::all_in : Membership::inconclusive);
  return out;
}

struct MembershipReport {
  Complex z;
  double p = 2.0;
  int J = 0;
  int horizon = 0;  ///< J clamped to the rows with finite blocks
  int reached = 0;
  std::optional<Truncation> truncation;
  SideVerdict right;
  SideVerdict left;
};

/// Right and left verdicts at the same exponent p, from a log-rescaled
/// fundamental system so that fast growth does not truncate the window.
inline MembershipReport membership_verdict(const OperatorFamily& family, Complex z, double p, int J,
                                           std::optional<std::pair<int, int>> window = std::nullopt,
                                           NormKind kind = NormKind::spectral) {
  check_exponent(p);
  MembershipReport r;
  r.z = z;
  r.p = p;
  r.J = J;
  r.horizon = representable_horizon(family, J);
  const auto fs = fundamental_system(family, z, r.horizon, Scaling::rescaled);
  r.reached = fs.horizon();
  r.truncation = fs.truncation();
  r.right = side_membership(fs, Side::right, p, r.horizon, window, kind);
  r.left = side_membership(fs, Side::left, p, r.horizon, window, kind);
  return r;
}

// ---------------------------------------------------------------------------
// Invariance check

inline std::vector<Complex> default_grid(Complex z0, int angles = 16, std::vector<double> radii = {0.5, 1.0, 2.0, 5.0}) {
  std::vector<Complex> out;
  for (double r : radii) {
    for (int a = 0; a < angles; ++a) out.push_back(z0 + std::polar(r, 2.0 * std::numbers::pi * a / angles));
  }
  return out;
}

struct HellingerOptions {
  int J = 2000;
  std::optional<std::pair<int, int>> window;
  double threshold = 0.25;
  double tol_bound = 0.05;
  bool symmetric_shortcut = false;
  NormKind norm = NormKind::spectral;
  int threads = 0;
};

struct BoundCheck {
  Fundamental sequence = Fundamental::P;
  double N = 0.0;         ///< (sum_{i=k0}^{J-1} ||Y_i(z)||^p)^{1/p}, q on the left
  double C = 0.0;         ///< max(||C1_k0||, ||C2_k0||)
  double M = 0.0;         ///< M_k0^p(z0) on the right, M_k0^{q,+}(z0) on the left
  double bound = 0.0;     ///< 4 C M
  double anchor_condition = 0.0;
  bool ok = false;
};

struct GridPoint {
  Complex z;
  double distance = 0.0;
  std::optional<int> k0;
  double product = 0.0;  ///< at k0, or the smallest achieved when none exists
  std::vector<BoundCheck> bounds;
  SideVerdict right;
  std::optional<SideVerdict> left;  ///< absent under the symmetric shortcut
  bool pass = false;
  std::string failure;
};

struct HellingerReport {
  Complex z0;
  double p = 2.0;
  double q = 2.0;
  HellingerOptions options;
  int horizon = 0;     ///< J actually used; below options.J when the blocks overflow
  std::string status;  ///< "pass", "fail" or "vacuous"
  std::string note;
  SideVerdict right_at_z0;  ///< at p
  SideVerdict left_at_z0;   ///< at q
  bool symmetric_shortcut_used = false;
  std::vector<double> M_p;       ///< M_k^p(z0), k = 0..J
  std::vector<double> M_q_plus;  ///< M_k^{q,+}(z0), k = 0..J
  std::vector<GridPoint> points;

  bool pass() const { return status == "pass"; }
};

namespace detail {

inline GridPoint evaluate_grid_point(const OperatorFamily& family, const FundamentalSystem& fs0, const HellingerReport& r,
                                     Complex z) {
  const auto& opt = r.options;
  const int J = r.horizon;
  GridPoint g;
  g.z = z;
  g.distance = std::abs(z - r.z0);
  g.product = kInf;
  for (int k = 0; k < J; ++k) {
    const double prod = g.distance * r.M_q_plus[static_cast<std::size_t>(k)] * r.M_p[static_cast<std::size_t>(k)];
    if (prod <= opt.threshold) {
      g.k0 = k;
      g.product = prod;
      break;
    }
    g.product = std::min(g.product, prod);
  }

  const auto mem = fundamental_system(family, z, J, Scaling::rescaled);
  g.right = side_membership(mem, Side::right, r.p, J, opt.window, opt.norm);
  if (!r.symmetric_shortcut_used) g.left = side_membership(mem, Side::left, r.q, J, opt.window, opt.norm);

  if (!g.k0) {
    g.failure = "threshold not reached below J; smallest product " + format_double(g.product);
    return g;
  }
  const int k0 = *g.k0;
  const auto fs = fundamental_system(family, z, J);
  if (fs.truncation()) {
    g.failure = "fundamental system at z truncated at j = " + std::to_string(fs.truncation()->index);
    return g;
  }
  std::vector<Fundamental> sequences{Fundamental::P, Fundamental::Q};
  if (!r.symmetric_shortcut_used) {
    sequences.push_back(Fundamental::P_plus);
    sequences.push_back(Fundamental::Q_plus);
  }
  bool bounds_ok = true;
  for (Fundamental f : sequences) {
    const bool right = side_of(f) == Side::right;
    const double e = right ? r.p : r.q;
    const auto Y = as_solution(fs, f);
    Anchor anchor;
    try {
      anchor = anchor_coefficients(fs0, family, Y, k0, opt.norm);
    } catch (const NumericalError& err) {
      g.failure = err.what();
      return g;
    }
    BoundCheck b;
    b.sequence = f;
    b.C = std::max(operator_norm(anchor.c1, opt.norm), operator_norm(anchor.c2, opt.norm));
    b.anchor_condition = anchor.condition;
    std::vector<double> y;
    for (int i = k0; i <= J - 1; ++i) y.push_back(operator_norm(Y.at(i), opt.norm));
    b.N = lp_tail(y, k0, e, k0, J - 1);
    b.M = right ? r.M_p[static_cast<std::size_t>(k0)] : r.M_q_plus[static_cast<std::size_t>(k0)];
    b.bound = 4.0 * b.C * b.M;
    b.ok = b.N <= b.bound * (1.0 + opt.tol_bound);
    bounds_ok = bounds_ok && b.ok;
    g.bounds.push_back(b);
  }
  const bool verdicts_ok =
      g.right.verdict == Membership::all_in && (!g.left || g.left->verdict == Membership::all_in);
  if (!bounds_ok) {
    g.failure = "bound N <= 4 C_k M_k violated";
  } else if (!verdicts_ok) {
    g.failure = "membership at z is not all-in-lp";
  }
  g.pass = bounds_ok && verdicts_ok;
  return g;
}

}  // namespace detail

/// Numerical check of the invariance statement at z0: verifies the
/// hypotheses at z0, then for every z finds k0 with
/// |z - z0| M_k0^{q,+}(z0) M_k0^p(z0) <= 1/4, checks N <= 4 C_k0 M_k0 for each
/// fundamental solution at z, and classifies membership at z.
inline HellingerReport hellinger_check(const OperatorFamily& family, Complex z0, double p,
                                       const std::vector<Complex>& z_list, const HellingerOptions& opt = {}) {
  check_exponent(p);
  if (opt.J < 2 * kMinWindow) throw ConfigError("hellinger: J must be at least " + std::to_string(2 * kMinWindow));
  HellingerReport r;
  r.z0 = z0;
  r.p = p;
  r.q = conjugate_exponent(p);
  r.options = opt;
  const int J = representable_horizon(family, opt.J);
  r.horizon = J;
  if (J < 2 * kMinWindow) {
    throw NumericalError("hellinger: blocks are non-finite from row " + std::to_string(J));
  }
  if (J < opt.J) r.note = "horizon clamped to J = " + std::to_string(J) + " where the blocks stop being finite";

  const auto mem0 = fundamental_system(family, z0, J, Scaling::rescaled);
  r.right_at_z0 = side_membership(mem0, Side::right, r.p, J, opt.window, opt.norm);

  if (opt.symmetric_shortcut && z0.imag() == 0.0 && p <= 2.0 && check_symmetry(family, J).is_symmetric &&
      r.right_at_z0.verdict == Membership::all_in) {
    // P+ = P*, Q+ = Q* at real z0; q >= 2 >= p carries the left side.
    r.symmetric_shortcut_used = true;
    r.left_at_z0 = r.right_at_z0;
    r.left_at_z0.side = Side::left;
    r.left_at_z0.p = r.q;
    r.left_at_z0.sequences[0].sequence = Fundamental::P_plus;
    r.left_at_z0.sequences[1].sequence = Fundamental::Q_plus;
    r.left_at_z0.note = "inferred from the symmetric structure";
  } else {
    r.left_at_z0 = side_membership(mem0, Side::left, r.q, J, opt.window, opt.norm);
  }

  if (r.right_at_z0.verdict != Membership::all_in || r.left_at_z0.verdict != Membership::all_in) {
    r.status = "vacuous";
    r.note += std::string(r.note.empty() ? "" : "; ") + "hypothesis fails at z0: right side " + to_string(r.right_at_z0.verdict) + " at p = " +
             format_exponent(r.p) + ", left side " + to_string(r.left_at_z0.verdict) + " at q = " +
             format_exponent(r.q);
    return r;
  }

  const auto fs0 = fundamental_system(family, z0, J);
  if (fs0.truncation()) {
    throw NumericalError("fundamental system at z0 truncated at j = " + std::to_string(fs0.truncation()->index) +
                         ": " + fs0.truncation()->detail);
  }
  r.M_p = tail_profile(fs0, r.p, J, false, opt.window, opt.norm).extrapolated;
  r.M_q_plus = tail_profile(fs0, r.q, J, !r.symmetric_shortcut_used, opt.window, opt.norm).extrapolated;

  r.points = parallel_map(
      z_list.size(), [&](std::size_t i) { return detail::evaluate_grid_point(family, fs0, r, z_list[i]); },
      opt.threads);
  const bool all = std::all_of(r.points.begin(), r.points.end(), [](const GridPoint& g) { return g.pass; });
  r.status = all ? "pass" : "fail";
  return r;
}

// ---------------------------------------------------------------------------
// Perturbations

struct PerturbationReport {
  double p = 2.0;
  double q = 2.0;
  int J = 0;
  int horizon = 0;  ///< recursion horizon, J clamped to the rows with finite blocks
  json perturbation_right;
  json perturbation_left;
  double sup_F = 0.0;
  double sup_G = 0.0;
  bool precondition_ok = false;
  std::string note;
  SideVerdict unperturbed_right;  ///< at p
  SideVerdict unperturbed_left;   ///< at q
  std::optional<SideVerdict> right;  ///< perturbed, at p
  std::optional<SideVerdict> left;   ///< perturbed, at q

  bool pass() const {
    return precondition_ok && right && left && right->verdict == Membership::all_in &&
           left->verdict == Membership::all_in;
  }
};

/// The sequence passes when its sup over [J/2, J] stays within this factor
/// of its sup over [0, J/2).
inline constexpr double kBoundedGrowthFactor = 1.25;

/// Solves l(u)_j = F_j u_j and u+_j A... = u+_j G_j at z = 0 as the families
/// with diagonal blocks A_{j,j} - F_j (right) and A_{j,j} - G_j (left).
inline PerturbationReport perturbation_check(const OperatorFamily& family, const OperatorFamily::BlockFn& F,
                                             const json& f_description, const OperatorFamily::BlockFn& G,
                                             const json& g_description, double p, int J,
                                             std::optional<std::pair<int, int>> window = std::nullopt,
                                             NormKind kind = NormKind::spectral) {
  check_exponent(p);
  PerturbationReport r;
  r.p = p;
  r.q = conjugate_exponent(p);
  r.J = J;
  r.perturbation_right = f_description;
  r.perturbation_left = g_description;

  auto sup_check = [&](const OperatorFamily::BlockFn& fn, double& sup, const char* name) {
    double first = 0.0, second = 0.0;
    for (int j = 0; j <= J; ++j) {
      const MatrixC m = fn(j);
      if (m.rows() != family.dim() || m.cols() != family.dim()) {
        throw ConfigError(std::string("dimension mismatch in perturbation ") + name);
      }
      const double v = m.allFinite() ? operator_norm(m, kind) : kInf;
      (j < J / 2 ? first : second) = std::max(j < J / 2 ? first : second, v);
    }
    sup = std::max(first, second);
    if (!std::isfinite(sup) || second > kBoundedGrowthFactor * first) {
      r.note += std::string(r.note.empty() ? "" : "; ") + name + " is not bounded: sup over [J/2, J] = " +
                format_double(second) + " against " + format_double(first) + " over [0, J/2)";
      return false;
    }
    return true;
  };
  const bool f_ok = sup_check(F, r.sup_F, "F");
  const bool g_ok = sup_check(G, r.sup_G, "G");

  const auto right_family = with_diagonal_shift(family, F, f_description);
  const auto left_family = with_diagonal_shift(family, G, g_description);
  r.horizon = std::min({representable_horizon(family, J), representable_horizon(right_family, J),
                        representable_horizon(left_family, J)});
  if (r.horizon < J) {
    r.note += std::string(r.note.empty() ? "" : "; ") + "horizon clamped to J = " + std::to_string(r.horizon) +
              " where the blocks stop being finite";
  }
  const int Jr = r.horizon;
  const auto base = fundamental_system(family, 0.0, Jr, Scaling::rescaled);
  r.unperturbed_right = side_membership(base, Side::right, r.p, Jr, window, kind);
  r.unperturbed_left = side_membership(base, Side::left, r.q, Jr, window, kind);
  const bool hyp = r.unperturbed_right.verdict == Membership::all_in &&
                   r.unperturbed_left.verdict == Membership::all_in;
  if (!hyp) {
    r.note += std::string(r.note.empty() ? "" : "; ") + "unperturbed equation is not all-in-lp at z = 0";
  }
  r.precondition_ok = f_ok && g_ok && hyp;
  if (!r.precondition_ok) return r;

  r.right = side_membership(fundamental_system(right_family, 0.0, Jr, Scaling::rescaled), Side::right, r.p, Jr,
                            window, kind);
  r.left = side_membership(fundamental_system(left_family, 0.0, Jr, Scaling::rescaled), Side::left, r.q, Jr, window,
                           kind);
  return r;
}

/// Scalar perturbation sequences f(j) E used by the CLI and the scenarios:
/// "zero", "sin" (sin j), "cos" (cos j), "linear" (j), "constant" (value).
inline OperatorFamily::BlockFn scalar_perturbation(const json& spec, int n) {
  const std::string kind = spec.value("kind", std::string("zero"));
  const double scale = spec.contains("scale") ? json_to_double(spec.at("scale")) : 1.0;
  std::function<double(int)> f;
  if (kind == "zero") {
    f = [](int) { return 0.0; };
  } else if (kind == "sin") {
    f = [](int j) { return std::sin(static_cast<double>(j)); };
  } else if (kind == "cos") {
    f = [](int j) { return std::cos(static_cast<double>(j)); };
  } else if (kind == "linear") {
    f = [](int j) { return static_cast<double>(j); };
  } else if (kind == "constant") {
    f = [](int) { return 1.0; };
  } else {
    throw ConfigError("unknown perturbation kind '" + kind + "' (expected zero|sin|cos|linear|constant)");
  }
  for (auto it = spec.begin(); it != spec.end(); ++it) {
    if (it.key() != "kind" && it.key() != "scale") throw ConfigError("unknown perturbation key '" + it.key() + "'");
  }
  return [f, scale, n](int j) { return MatrixC(scale * f(j) * identity(n)); };
}

}  // namespace hellinger
