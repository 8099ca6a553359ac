#include "fpq/decimal.hpp"

#include "fpq/error.hpp"

#include <charconv>
#include <cmath>

namespace fpq {

namespace {

template <typename T>
std::string to_decimal_impl(T v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

template <typename T>
T from_decimal_impl(const std::string& s) {
    if (s == "inf") return std::numeric_limits<T>::infinity();
    if (s == "-inf") return -std::numeric_limits<T>::infinity();
    if (s == "nan") return std::numeric_limits<T>::quiet_NaN();
    T value{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw DataError("malformed decimal value '" + s + "'");
    }
    return value;
}

}  // namespace

std::string to_decimal(float v) { return to_decimal_impl(v); }
std::string to_decimal(double v) { return to_decimal_impl(v); }
float float_from_decimal(const std::string& s) { return from_decimal_impl<float>(s); }
double double_from_decimal(const std::string& s) { return from_decimal_impl<double>(s); }

}  // namespace fpq
