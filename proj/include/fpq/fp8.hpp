#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fpq {

// How the all-ones exponent field is interpreted.
enum class SpecialRule {
    NoInf,  // no infinities; all-ones exponent with all-ones mantissa is NaN,
            // every other all-ones-exponent pattern is a normal number (E4M3)
    Ieee,   // all-ones exponent encodes inf (zero mantissa) / NaN (E5M2)
};

// Minifloat format descriptor. Immutable after construction.
struct Fp8Format {
    int exponent_bits;
    int mantissa_bits;
    int bias;
    SpecialRule specials;
    float max_finite;  // largest finite decodable magnitude, derived
    const char* name;

    static const Fp8Format& e4m3();
    static const Fp8Format& e5m2();

    // nullptr when the name is not a known fp8 format.
    static const Fp8Format* by_name(const std::string& name);

    int min_normal_exp() const { return 1 - bias; }
    uint8_t exponent_field_mask() const {
        return static_cast<uint8_t>(((1u << exponent_bits) - 1u) << mantissa_bits);
    }
    uint8_t mantissa_field_mask() const { return static_cast<uint8_t>((1u << mantissa_bits) - 1u); }
    // Largest code magnitude (bits without sign) that decodes to a finite value.
    uint8_t max_finite_code_magnitude() const;
    uint8_t canonical_nan_bits() const;
};

struct Fp8Code {
    uint8_t bits = 0;
    const Fp8Format* format = nullptr;
};

// Exact value of an 8-bit pattern under the format's field layout.
// Total over all 256 patterns; NaN/inf returned as float specials.
float decode(uint8_t bits, const Fp8Format& format);
inline float decode(Fp8Code code) { return decode(code.bits, *code.format); }

// Nearest finite level, ties to even mantissa field, saturating at
// +/-max_finite. NaN maps to the canonical NaN code; +/-inf saturates under
// NoInf and maps to the inf codes under Ieee; -0.0 keeps its sign.
uint8_t encode_nearest_bits(float x, const Fp8Format& format);
inline Fp8Code encode_nearest(float x, const Fp8Format& format) {
    return Fp8Code{encode_nearest_bits(x, format), &format};
}

// decode(encode_nearest(x)): the fake-quantize primitive.
float round_to_fp8(float x, const Fp8Format& format);

// Round to 8-bit-exponent / 7-bit-mantissa precision, ties to even.
// Inf and NaN pass through unchanged.
float round_to_bf16(float x);

// All distinct finite decodable values, strictly increasing (+0 and -0
// collapse to a single zero).
std::vector<float> enumerate_levels(const Fp8Format& format);

}  // namespace fpq
