#pragma once

// Exact rational scalars backed by GMP.

#include <gmpxx.h>

#include <cctype>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qbl {

using Rational = mpq_class;
using Integer = mpz_class;

/// Parses "a", "a/b", or a decimal such as "-0.75" / "1.5e-3" into an exact rational.
/// Decimal input is converted digit by digit, so "0.1" is exactly 1/10.
inline Rational parse_rational(std::string_view text) {
  auto fail = [&](const char* why) {
    throw std::invalid_argument("invalid rational '" + std::string(text) + "': " + why);
  };
  std::size_t pos = 0;
  while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  std::size_t end = text.size();
  while (end > pos && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  std::string_view s = text.substr(pos, end - pos);
  if (s.empty()) fail("empty");

  bool negative = false;
  std::size_t i = 0;
  if (s[i] == '+' || s[i] == '-') {
    negative = s[i] == '-';
    ++i;
  }
  auto read_digits = [&](std::string& out) {
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) out.push_back(s[i++]);
  };

  std::string whole;
  read_digits(whole);
  Rational value;
  if (i < s.size() && s[i] == '/') {
    if (whole.empty()) fail("missing numerator");
    ++i;
    std::string den;
    read_digits(den);
    if (den.empty() || i != s.size()) fail("malformed denominator");
    Integer d(den, 10);
    if (d == 0) fail("zero denominator");
    value = Rational(Integer(whole, 10), d);
  } else {
    std::string frac;
    if (i < s.size() && s[i] == '.') {
      ++i;
      read_digits(frac);
    }
    if (whole.empty() && frac.empty()) fail("no digits");
    long exponent = 0;
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
      ++i;
      bool exp_negative = false;
      if (i < s.size() && (s[i] == '+' || s[i] == '-')) exp_negative = s[i++] == '-';
      std::string exp_digits;
      read_digits(exp_digits);
      if (exp_digits.empty() || exp_digits.size() > 6) fail("malformed exponent");
      exponent = std::stol(exp_digits);
      if (exp_negative) exponent = -exponent;
    }
    if (i != s.size()) fail("trailing characters");
    const std::string digits = whole + frac;
    Integer num(digits, 10);
    exponent -= static_cast<long>(frac.size());
    Integer scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(exponent < 0 ? -exponent : exponent));
    value = exponent < 0 ? Rational(num, scale) : Rational(num * scale);
  }
  value.canonicalize();
  return negative ? Rational(-value) : value;
}

/// Canonical text form: "a" for integers, "a/b" otherwise.
inline std::string to_string(const Rational& q) { return q.get_str(); }

inline double to_double(const Rational& q) { return q.get_d(); }

}  // namespace qbl
