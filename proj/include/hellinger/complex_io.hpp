#pragma once

/**
 * @file complex_io.hpp
 * @brief Text and JSON encodings of complex numbers and matrices.
 *
 * Flag grammar (whitespace ignored):
 *
 *     complex := real | imag | real ('+'|'-') imag
 *     real    := [sign] number
 *     imag    := [sign] [number] 'i'
 *     number  := decimal with optional exponent, or p/q
 *
 * Examples: "0", "-2.5", "i", "-i", "3i", "1+0.5i", "1e-3-2e2i", "1/2+1/3i".
 *
 * JSON: a complex value is [re, im] or a bare real number; a matrix is an
 * array of rows of complex values (a bare value is accepted for n = 1).
 */

#include <charconv>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <utility>

#include <json.hpp>

#include "hellinger/error.hpp"
#include "hellinger/linalg.hpp"

namespace hellinger {

using json = nlohmann::json;

namespace detail {

inline std::string strip_spaces(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (c != ' ' && c != '\t' && c != '\n' && c != '\r') out.push_back(c);
  }
  return out;
}

inline bool valid_number_text(std::string_view s) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  if (s[0] == '+' || s[0] == '-') pos = 1;
  if (pos >= s.size()) return false;
  const auto slash = s.find('/');
  auto digits_only = [](std::string_view t) {
    if (t.empty()) return false;
    for (char c : t) {
      if (c < '0' || c > '9') return false;
    }
    return true;
  };
  if (slash != std::string_view::npos) {
    return digits_only(s.substr(pos, slash - pos)) && digits_only(s.substr(slash + 1));
  }
  bool seen_digit = false, seen_dot = false, seen_exp = false;
  for (std::size_t i = pos; i < s.size(); ++i) {
    const char c = s[i];
    if (c >= '0' && c <= '9') {
      seen_digit = true;
    } else if (c == '.' && !seen_dot && !seen_exp) {
      seen_dot = true;
    } else if ((c == 'e' || c == 'E') && seen_digit && !seen_exp) {
      seen_exp = true;
      if (i + 1 < s.size() && (s[i + 1] == '+' || s[i + 1] == '-')) ++i;
      if (i + 1 >= s.size()) return false;
    } else {
      return false;
    }
  }
  return seen_digit;
}

}  // namespace detail

/// Real and imaginary parts of a complex literal as validated number texts.
struct ComplexText {
  std::string re = "0";
  std::string im = "0";
};

inline ComplexText split_complex(std::string_view input) {
  const std::string s = detail::strip_spaces(input);
  if (s.empty()) throw ConfigError("empty complex literal");
  auto fail = [&]() -> ComplexText {
    throw ConfigError("malformed complex literal '" + std::string(input) + "'");
  };
  ComplexText out;
  if (s.back() != 'i') {
    if (!detail::valid_number_text(s)) fail();
    out.re = s;
    return out;
  }
  // Split before the last sign that is not the leading one and not part of
  // an exponent.
  std::size_t split = std::string::npos;
  for (std::size_t i = s.size() - 1; i > 0; --i) {
    if ((s[i] == '+' || s[i] == '-') && s[i - 1] != 'e' && s[i - 1] != 'E') {
      split = i;
      break;
    }
  }
  std::string real_part, imag_part;
  if (split == std::string::npos) {
    imag_part = s.substr(0, s.size() - 1);
  } else {
    real_part = s.substr(0, split);
    imag_part = s.substr(split, s.size() - 1 - split);
  }
  if (imag_part.empty() || imag_part == "+") imag_part = "1";
  if (imag_part == "-") imag_part = "-1";
  if (!real_part.empty()) {
    if (!detail::valid_number_text(real_part)) fail();
    out.re = real_part;
  }
  if (!detail::valid_number_text(imag_part)) fail();
  out.im = imag_part;
  return out;
}

/// Converts validated number text ("1.5", "-3/4", "2e-3") to double.
inline double number_text_to_double(const std::string& text) {
  const auto slash = text.find('/');
  if (slash != std::string::npos) {
    return std::stod(text.substr(0, slash)) / std::stod(text.substr(slash + 1));
  }
  double value = 0.0;
  const char* first = text.data();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ConfigError("malformed number '" + text + "'");
  }
  return value;
}

inline Complex parse_complex(std::string_view text) {
  const auto parts = split_complex(text);
  return {number_text_to_double(parts.re), number_text_to_double(parts.im)};
}

/// Shortest round-trip representation; used for flags echoed in reports.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline std::string format_complex(Complex z) {
  std::string out = format_double(z.real());
  if (z.imag() >= 0 || std::isnan(z.imag())) out += '+';
  return out + format_double(z.imag()) + "i";
}

/// JSON number that survives non-finite values ("inf", "-inf", "nan").
inline json json_number(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

inline double json_to_double(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    return number_text_to_double(s);
  }
  throw ConfigError("expected a number, got " + j.dump());
}

inline json complex_to_json(Complex z) {
  return json::array({json_number(z.real()), json_number(z.imag())});
}

inline Complex complex_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_string()) return parse_complex(j.get<std::string>());
  if (j.is_array() && j.size() == 2) return {json_to_double(j[0]), json_to_double(j[1])};
  throw ConfigError("expected complex value as [re, im], got " + j.dump());
}

inline json matrix_to_json(const MatrixC& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Parses an n x n block. A bare complex value is accepted when n == 1.
inline MatrixC matrix_from_json(const json& j, Eigen::Index n) {
  if (n == 1 && (j.is_number() || j.is_string() || (j.is_array() && j.size() == 2 && !j[0].is_array()))) {
    MatrixC m(1, 1);
    m(0, 0) = complex_from_json(j);
    return m;
  }
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) {
    throw ConfigError("dimension mismatch: expected " + std::to_string(n) + " rows in block " + j.dump());
  }
  MatrixC m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      throw ConfigError("non-square block: row " + std::to_string(r) + " has wrong length");
    }
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = complex_from_json(row[static_cast<std::size_t>(c)]);
  }
  return m;
}

}  // namespace hellinger
