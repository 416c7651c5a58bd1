#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>
#include <string_view>

namespace structlim {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// "3/4" for proper fractions, "3" when the denominator is 1.
std::string rational_string(const Rational& q);

/// Accepts "num/den", integers, and plain decimals ("0.25"). Exact conversion.
Rational parse_rational(std::string_view text);

double to_double(const Rational& q);

/// 2^e for e >= 0.
BigInt pow2(unsigned e);

}  // namespace structlim
