#include "fpq/fp8.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace fpq {

namespace {

Fp8Format make_format(int exponent_bits, int mantissa_bits, int bias, SpecialRule specials,
                      const char* name) {
    Fp8Format fmt{exponent_bits, mantissa_bits, bias, specials, 0.0f, name};
    for (int code = 0; code < 256; ++code) {
        const float v = decode(static_cast<uint8_t>(code), fmt);
        if (std::isfinite(v)) fmt.max_finite = std::max(fmt.max_finite, std::fabs(v));
    }
    return fmt;
}

}  // namespace

const Fp8Format& Fp8Format::e4m3() {
    static const Fp8Format fmt = make_format(4, 3, 7, SpecialRule::NoInf, "e4m3");
    return fmt;
}

const Fp8Format& Fp8Format::e5m2() {
    static const Fp8Format fmt = make_format(5, 2, 15, SpecialRule::Ieee, "e5m2");
    return fmt;
}

const Fp8Format* Fp8Format::by_name(const std::string& name) {
    if (name == "e4m3") return &e4m3();
    if (name == "e5m2") return &e5m2();
    return nullptr;
}

uint8_t Fp8Format::max_finite_code_magnitude() const {
    const uint8_t all = static_cast<uint8_t>((1u << (exponent_bits + mantissa_bits)) - 1u);
    if (specials == SpecialRule::NoInf) return static_cast<uint8_t>(all - 1);  // mantissa lsb off
    return static_cast<uint8_t>(all - (1u << mantissa_bits));  // exponent one below all-ones
}

uint8_t Fp8Format::canonical_nan_bits() const {
    const uint8_t all = static_cast<uint8_t>((1u << (exponent_bits + mantissa_bits)) - 1u);
    if (specials == SpecialRule::NoInf) return all;  // S.1111.111 with sign 0
    // all-ones exponent, quiet bit (mantissa msb) set
    return static_cast<uint8_t>((exponent_field_mask()) | (1u << (mantissa_bits - 1)));
}

float decode(uint8_t bits, const Fp8Format& format) {
    const int mb = format.mantissa_bits;
    const uint32_t exp_all_ones = (1u << format.exponent_bits) - 1u;
    const uint32_t exp_field = (bits >> mb) & exp_all_ones;
    const uint32_t mant_field = bits & format.mantissa_field_mask();
    const bool negative = (bits & 0x80u) != 0;

    if (exp_field == exp_all_ones) {
        if (format.specials == SpecialRule::Ieee) {
            if (mant_field == 0) {
                return negative ? -std::numeric_limits<float>::infinity()
                                : std::numeric_limits<float>::infinity();
            }
            return std::numeric_limits<float>::quiet_NaN();
        }
        if (mant_field == format.mantissa_field_mask()) {
            return std::numeric_limits<float>::quiet_NaN();
        }
        // NoInf: remaining all-ones-exponent patterns are ordinary normals
    }

    float magnitude;
    if (exp_field == 0) {
        // subnormal: mant * 2^(1 - bias - mb); zero when mant == 0
        magnitude = std::ldexp(static_cast<float>(mant_field), 1 - format.bias - mb);
    } else {
        // (1 + mant/2^mb) * 2^(exp - bias)
        magnitude = std::ldexp(static_cast<float>((1u << mb) | mant_field),
                               static_cast<int>(exp_field) - format.bias - mb);
    }
    return negative ? -magnitude : magnitude;
}

uint8_t encode_nearest_bits(float x, const Fp8Format& format) {
    const uint32_t fbits = std::bit_cast<uint32_t>(x);
    const uint8_t sign = static_cast<uint8_t>((fbits >> 31) << 7);
    const uint32_t abs_bits = fbits & 0x7FFFFFFFu;

    if (abs_bits > 0x7F800000u) return format.canonical_nan_bits();
    if (abs_bits == 0x7F800000u) {
        if (format.specials == SpecialRule::Ieee) {
            return static_cast<uint8_t>(sign | format.exponent_field_mask());
        }
        return static_cast<uint8_t>(sign | format.max_finite_code_magnitude());
    }
    if (abs_bits == 0) return sign;

    // |x| = sig * 2^(e - 23)
    int e;
    uint32_t sig;
    if ((abs_bits >> 23) == 0) {
        e = -126;
        sig = abs_bits;
    } else {
        e = static_cast<int>(abs_bits >> 23) - 127;
        sig = (abs_bits & 0x007FFFFFu) | 0x00800000u;
    }

    const int mb = format.mantissa_bits;
    const int min_normal = format.min_normal_exp();
    const bool subnormal_range = e < min_normal;
    // level spacing at this magnitude is 2^quantum
    int quantum = (subnormal_range ? min_normal : e) - mb;

    // k = RNE(|x| / 2^quantum) via guard/sticky on the discarded fp32 bits;
    // the shift is always positive because quantum > e - 23 for 8-bit formats
    const int shift = quantum - e + 23;
    uint32_t k;
    if (shift > 25) {
        k = 0;
    } else {
        const uint32_t truncated = sig >> shift;
        const uint32_t guard = (sig >> (shift - 1)) & 1u;
        const uint32_t sticky = (sig & ((1u << (shift - 1)) - 1u)) != 0 ? 1u : 0u;
        k = truncated + (guard & (sticky | (truncated & 1u)));
    }

    uint32_t magnitude_code;
    if (subnormal_range) {
        // |x| < 2^min_normal, so k <= 2^mb; k == 2^mb is the smallest normal
        if (k == 0) return sign;
        magnitude_code = k;  // exponent field 0 (or 1 with mantissa 0 when k == 2^mb)
    } else {
        if (k == (1u << (mb + 1))) {  // rounding carried into the next binade
            k >>= 1;
            e += 1;
        }
        const uint32_t exp_field = static_cast<uint32_t>(e + format.bias);
        magnitude_code = (exp_field << mb) | (k & ((1u << mb) - 1u));
    }

    const uint32_t max_magnitude = format.max_finite_code_magnitude();
    if (magnitude_code > max_magnitude) magnitude_code = max_magnitude;
    return static_cast<uint8_t>(sign | magnitude_code);
}

float round_to_fp8(float x, const Fp8Format& format) {
    return decode(encode_nearest_bits(x, format), format);
}

float round_to_bf16(float x) {
    uint32_t bits = std::bit_cast<uint32_t>(x);
    if ((bits & 0x7F800000u) == 0x7F800000u) return x;  // inf/NaN pass through
    const uint32_t lsb = (bits >> 16) & 1u;
    bits += 0x7FFFu + lsb;
    bits &= 0xFFFF0000u;
    return std::bit_cast<float>(bits);
}

std::vector<float> enumerate_levels(const Fp8Format& format) {
    std::vector<float> levels;
    levels.reserve(256);
    for (int code = 0; code < 256; ++code) {
        const float v = decode(static_cast<uint8_t>(code), format);
        if (std::isfinite(v)) levels.push_back(v);
    }
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());  // merges +/-0
    return levels;
}

}  // namespace fpq
