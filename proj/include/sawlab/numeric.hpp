#pragma once

#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace sawlab {

using BigCount = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline std::string to_decimal(const BigCount& v) { return v.str(); }

inline BigCount from_decimal(const std::string& s) { return BigCount(s); }

inline double to_double(const Rational& r) {
  return static_cast<double>(r);
}

inline double to_double(const BigCount& v) { return static_cast<double>(v); }

}  // namespace sawlab
