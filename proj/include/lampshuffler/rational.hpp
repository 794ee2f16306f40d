#pragma once

#include <cstdint>
#include <string>

#include <boost/rational.hpp>

namespace lampshuffler {

using Rational = boost::rational<std::int64_t>;

// Accepts "a/b", integers and plain decimals such as "0.125".
Rational parse_rational(const std::string& text);
std::string to_string(const Rational& r);
inline long double to_long_double(const Rational& r) {
  return static_cast<long double>(r.numerator()) / static_cast<long double>(r.denominator());
}

}  // namespace lampshuffler
