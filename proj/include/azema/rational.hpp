#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <string>

namespace azema {

// Exact rational scalar used everywhere outside the Monte Carlo module.
using Rat = boost::multiprecision::cpp_rational;
using Int = boost::multiprecision::cpp_int;

inline Rat rat(long long num, long long den = 1) { return Rat(Int(num), Int(den)); }

inline Rat rat_abs(const Rat& x) { return x < 0 ? Rat(-x) : x; }

inline double to_double(const Rat& x) { return x.convert_to<double>(); }

inline std::string rat_str(const Rat& x) {
  const Int num = numerator(x);
  const Int den = denominator(x);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

}  // namespace azema
