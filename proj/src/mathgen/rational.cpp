#include "dataforge/mathgen/rational.hpp"

#include <cctype>

#include "dataforge/error.hpp"

namespace dataforge::mathgen {

namespace {

Rational parse_unsigned_decimal(std::string_view s, std::string_view whole) {
  if (s.empty()) throw ValidationError("empty number in '" + std::string(whole) + "'");
  const auto dot = s.find('.');
  const auto int_part = s.substr(0, dot);
  const auto frac_part = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
  if (int_part.empty() || (dot != std::string_view::npos && frac_part.empty())) {
    throw ValidationError("malformed number '" + std::string(whole) + "'");
  }
  BigInt num = 0;
  BigInt den = 1;
  for (char c : int_part) {
    if (!std::isdigit(static_cast<unsigned char>(c))) throw ValidationError("malformed number '" + std::string(whole) + "'");
    num = num * 10 + (c - '0');
  }
  for (char c : frac_part) {
    if (!std::isdigit(static_cast<unsigned char>(c))) throw ValidationError("malformed number '" + std::string(whole) + "'");
    num = num * 10 + (c - '0');
    den *= 10;
  }
  return Rational(num, den);
}

}  // namespace

Rational parse_rational(std::string_view text) {
  std::string_view s = text;
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  bool neg = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    neg = s.front() == '-';
    s.remove_prefix(1);
  }
  const auto slash = s.find('/');
  Rational value;
  if (slash == std::string_view::npos) {
    value = parse_unsigned_decimal(s, text);
  } else {
    const Rational den = parse_unsigned_decimal(s.substr(slash + 1), text);
    if (den == 0) throw ValidationError("zero denominator in '" + std::string(text) + "'");
    value = parse_unsigned_decimal(s.substr(0, slash), text) / den;
  }
  return neg ? Rational(-value) : value;
}

bool is_integer(const Rational& r) { return boost::multiprecision::denominator(r) == 1; }

std::string to_fraction_string(const Rational& r) {
  const BigInt& num = boost::multiprecision::numerator(r);
  const BigInt& den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

std::string to_exact_decimal(const Rational& r) {
  BigInt num = boost::multiprecision::numerator(r);
  const BigInt den = boost::multiprecision::denominator(r);
  BigInt d = den;
  int twos = 0;
  int fives = 0;
  while (d % 2 == 0) {
    d /= 2;
    ++twos;
  }
  while (d % 5 == 0) {
    d /= 5;
    ++fives;
  }
  if (d != 1) return {};
  const int digits = std::max(twos, fives);
  const bool neg = num < 0;
  if (neg) num = -num;
  BigInt scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  const BigInt scaled = num * scale / den;
  std::string s = scaled.str();
  if (digits > 0) {
    if (s.size() <= static_cast<std::size_t>(digits)) s.insert(0, static_cast<std::size_t>(digits) - s.size() + 1, '0');
    s.insert(s.size() - static_cast<std::size_t>(digits), ".");
  }
  return neg ? "-" + s : s;
}

std::string to_display_string(const Rational& r) {
  auto dec = to_exact_decimal(r);
  return dec.empty() ? to_fraction_string(r) : dec;
}

BigInt floor_div(const BigInt& a, const BigInt& b) {
  BigInt q = a / b;  // truncates toward zero
  if ((a % b != 0) && ((a < 0) != (b < 0))) q -= 1;
  return q;
}

BigInt floor_mod(const BigInt& a, const BigInt& b) { return a - b * floor_div(a, b); }

}  // namespace dataforge::mathgen
