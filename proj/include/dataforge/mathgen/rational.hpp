#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <string>
#include <string_view>

namespace dataforge::mathgen {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Accepts "12", "-3", "1.25", "-7/4", "0.5/3". Throws ValidationError.
Rational parse_rational(std::string_view text);

bool is_integer(const Rational& r);

/// "n" for integers, "n/d" otherwise.
std::string to_fraction_string(const Rational& r);

/// Exact decimal ("1.25") when the denominator is 2^a·5^b, else "n/d".
std::string to_display_string(const Rational& r);

/// Exact decimal expansion, or empty when the value does not terminate.
std::string to_exact_decimal(const Rational& r);

/// Python-style floor division and modulo on integers (mod takes the sign of the divisor).
BigInt floor_div(const BigInt& a, const BigInt& b);
BigInt floor_mod(const BigInt& a, const BigInt& b);

}  // namespace dataforge::mathgen
