#pragma once

#include <string>

namespace fpq {

// Shortest round-trip decimal forms; parse is exact (from_chars), so values
// survive serialization bit-for-bit. NaN prints "nan", infinities "inf"/"-inf".
std::string to_decimal(float v);
std::string to_decimal(double v);
float float_from_decimal(const std::string& s);
double double_from_decimal(const std::string& s);

}  // namespace fpq
