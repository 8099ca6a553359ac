#pragma once

#include "fpq/fp8.hpp"
#include "fpq/tensor.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace fpq {

// Quantization destination: INT8 or one of the fp8 formats.
struct QuantTarget {
    enum class Kind { Int8, Fp8 };
    Kind kind = Kind::Fp8;
    const Fp8Format* format = nullptr;  // set iff kind == Fp8

    static QuantTarget int8() { return {Kind::Int8, nullptr}; }
    static QuantTarget fp8(const Fp8Format& fmt) { return {Kind::Fp8, &fmt}; }
    // Accepts "int8", "e4m3", "e5m2"; throws DataError otherwise.
    static QuantTarget parse(const std::string& name);

    bool is_int8() const { return kind == Kind::Int8; }
    // Max_fp8 of the scale equation; 127 for the symmetric INT8 baseline.
    float max_level() const { return is_int8() ? 127.0f : format->max_finite; }
    std::string name() const { return is_int8() ? "int8" : format->name; }
};

enum class Granularity { PerTensor, PerChannel };

// Running [alpha, beta] clipping-range observation.
struct CalibRange {
    float alpha = std::numeric_limits<float>::infinity();
    float beta = -std::numeric_limits<float>::infinity();
    int64_t count = 0;

    bool empty() const { return count == 0; }
};

// Folds t's elements into the running min/max. Throws NumericError on
// non-finite elements.
CalibRange observe(CalibRange range, const Tensor& t);
CalibRange merge(CalibRange a, CalibRange b);

struct QuantParams {
    QuantTarget target;
    Granularity granularity = Granularity::PerTensor;
    int axis = -1;                // meaningful for PerChannel
    std::vector<float> scales;    // one entry for PerTensor, one per channel otherwise
    float zero_point = 0.0f;      // always 0: symmetric quantization

    float scale() const { return scales[0]; }
    void validate_for(const std::vector<int64_t>& shape) const;
};

// S = max(|alpha|, |beta|) / max_level; all-zero ranges get S = 1 so the
// (all-zero) output is untouched. Throws DataError when the range is empty.
QuantParams scale_from_range(const CalibRange& range, QuantTarget target);

// One scale per slice along `axis`, each from that slice's own min/max.
QuantParams per_channel_params(const Tensor& w, int axis, QuantTarget target);
// Convenience: observe t and derive per-tensor params.
QuantParams per_tensor_params(const Tensor& t, QuantTarget target);

// Stored 8-bit codes plus everything needed to dequantize them.
struct QTensor {
    std::vector<uint8_t> codes;  // fp8 bit patterns, or int8 values via static_cast
    QuantParams params;
    std::vector<int64_t> shape;
};

QTensor quantize_fp8(const Tensor& t, const QuantParams& params);
QTensor quantize_int8(const Tensor& t, const QuantParams& params);
QTensor quantize(const Tensor& t, const QuantParams& params);  // dispatch on target
Tensor dequantize(const QTensor& q);

// quantize-then-dequantize without materializing the code array.
Tensor fake_quant(const Tensor& t, const QuantParams& params);

}  // namespace fpq
