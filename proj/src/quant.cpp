#include "fpq/quant.hpp"

#include "fpq/error.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fpq {

namespace {

// Per-element scale resolver; channel index = (flat / inner) % extent.
struct ScaleLookup {
    const float* scales;
    int64_t inner = 1;
    int64_t extent = 1;
    bool per_channel = false;

    static ScaleLookup make(const QuantParams& params, const std::vector<int64_t>& shape) {
        ScaleLookup lut{params.scales.data(), 1, 1, params.granularity == Granularity::PerChannel};
        if (lut.per_channel) {
            const int axis = params.axis < 0 ? params.axis + static_cast<int>(shape.size())
                                             : params.axis;
            lut.extent = shape[static_cast<size_t>(axis)];
            for (size_t i = static_cast<size_t>(axis) + 1; i < shape.size(); ++i) {
                lut.inner *= shape[i];
            }
        }
        return lut;
    }

    float operator()(int64_t flat) const {
        return per_channel ? scales[(flat / inner) % extent] : scales[0];
    }
};

float rne_to_integer(float x) {
    // nearbyint under the default FE_TONEAREST mode: ties to even
    return std::nearbyint(x);
}

float checked_element(float r) {
    if (std::isnan(r)) throw NumericError("NaN element in quantization input");
    return r;
}

// r/S with fp32 division overflow clamped back into the finite range, so an
// E5M2 code can never come out as an infinity.
float scaled_value(float r, float s, float max_level) {
    const float v = r / s;
    if (std::isinf(v)) return std::copysign(max_level, v);
    return v;
}

}  // namespace

QuantTarget QuantTarget::parse(const std::string& name) {
    if (name == "int8") return int8();
    if (const Fp8Format* fmt = Fp8Format::by_name(name)) return fp8(*fmt);
    throw DataError("unknown quantization target '" + name + "'");
}

CalibRange observe(CalibRange range, const Tensor& t) {
    for (int64_t i = 0; i < t.numel(); ++i) {
        const float v = t[i];
        if (!std::isfinite(v)) throw NumericError("non-finite value in calibration data");
        range.alpha = std::min(range.alpha, v);
        range.beta = std::max(range.beta, v);
    }
    range.count += t.numel();
    return range;
}

CalibRange merge(CalibRange a, CalibRange b) {
    CalibRange out;
    out.alpha = std::min(a.alpha, b.alpha);
    out.beta = std::max(a.beta, b.beta);
    out.count = a.count + b.count;
    return out;
}

void QuantParams::validate_for(const std::vector<int64_t>& shape) const {
    for (float s : scales) {
        if (!(s > 0.0f) || !std::isfinite(s)) {
            throw std::invalid_argument("quantization scales must be positive and finite");
        }
    }
    if (granularity == Granularity::PerTensor) {
        if (scales.size() != 1) {
            throw std::invalid_argument("per-tensor params must carry exactly one scale");
        }
        return;
    }
    const int rank = static_cast<int>(shape.size());
    const int a = axis < 0 ? axis + rank : axis;
    if (a < 0 || a >= rank) throw std::invalid_argument("per-channel axis out of range");
    if (static_cast<int64_t>(scales.size()) != shape[static_cast<size_t>(a)]) {
        throw std::invalid_argument("per-channel scale count must match the axis extent");
    }
}

QuantParams scale_from_range(const CalibRange& range, QuantTarget target) {
    if (range.empty()) throw DataError("no calibration data");
    const float bound = std::max(std::fabs(range.alpha), std::fabs(range.beta));
    QuantParams params;
    params.target = target;
    params.granularity = Granularity::PerTensor;
    params.scales = {bound == 0.0f ? 1.0f : bound / target.max_level()};
    return params;
}

QuantParams per_channel_params(const Tensor& w, int axis, QuantTarget target) {
    if (w.numel() == 0 || w.dim() < 1) throw std::invalid_argument("cannot calibrate an empty tensor");
    const int rank = static_cast<int>(w.dim());
    const int a = axis < 0 ? axis + rank : axis;
    if (a < 0 || a >= rank) throw std::invalid_argument("per-channel axis out of range");

    const int64_t extent = w.shape()[static_cast<size_t>(a)];
    int64_t inner = 1;
    for (size_t i = static_cast<size_t>(a) + 1; i < w.shape().size(); ++i) inner *= w.shape()[i];

    std::vector<CalibRange> ranges(static_cast<size_t>(extent));
    for (int64_t i = 0; i < w.numel(); ++i) {
        const float v = w[i];
        if (!std::isfinite(v)) throw NumericError("non-finite value in calibration data");
        CalibRange& r = ranges[static_cast<size_t>((i / inner) % extent)];
        r.alpha = std::min(r.alpha, v);
        r.beta = std::max(r.beta, v);
        r.count += 1;
    }

    QuantParams params;
    params.target = target;
    params.granularity = Granularity::PerChannel;
    params.axis = a;
    params.scales.reserve(static_cast<size_t>(extent));
    for (const CalibRange& r : ranges) {
        const float bound = std::max(std::fabs(r.alpha), std::fabs(r.beta));
        params.scales.push_back(bound == 0.0f ? 1.0f : bound / target.max_level());
    }
    return params;
}

QuantParams per_tensor_params(const Tensor& t, QuantTarget target) {
    return scale_from_range(observe(CalibRange{}, t), target);
}

QTensor quantize_fp8(const Tensor& t, const QuantParams& params) {
    if (params.target.is_int8()) throw std::invalid_argument("quantize_fp8 requires an fp8 target");
    params.validate_for(t.shape());
    const Fp8Format& fmt = *params.target.format;
    const ScaleLookup lut = ScaleLookup::make(params, t.shape());

    QTensor q{std::vector<uint8_t>(static_cast<size_t>(t.numel())), params, t.shape()};
    for (int64_t i = 0; i < t.numel(); ++i) {
        const float scaled = scaled_value(checked_element(t[i]), lut(i), fmt.max_finite);
        q.codes[static_cast<size_t>(i)] = encode_nearest_bits(scaled, fmt);
    }
    return q;
}

QTensor quantize_int8(const Tensor& t, const QuantParams& params) {
    if (!params.target.is_int8()) throw std::invalid_argument("quantize_int8 requires the int8 target");
    params.validate_for(t.shape());
    const ScaleLookup lut = ScaleLookup::make(params, t.shape());

    QTensor q{std::vector<uint8_t>(static_cast<size_t>(t.numel())), params, t.shape()};
    for (int64_t i = 0; i < t.numel(); ++i) {
        const float scaled = checked_element(t[i]) / lut(i);
        const float clamped = std::clamp(rne_to_integer(scaled), -127.0f, 127.0f);
        q.codes[static_cast<size_t>(i)] =
            static_cast<uint8_t>(static_cast<int8_t>(clamped));
    }
    return q;
}

QTensor quantize(const Tensor& t, const QuantParams& params) {
    return params.target.is_int8() ? quantize_int8(t, params) : quantize_fp8(t, params);
}

Tensor dequantize(const QTensor& q) {
    QuantParams params = q.params;
    const ScaleLookup lut = ScaleLookup::make(params, q.shape);
    Tensor out(q.shape);
    if (params.target.is_int8()) {
        for (int64_t i = 0; i < out.numel(); ++i) {
            out[i] = static_cast<float>(static_cast<int8_t>(q.codes[static_cast<size_t>(i)])) *
                     lut(i);
        }
    } else {
        const Fp8Format& fmt = *params.target.format;
        for (int64_t i = 0; i < out.numel(); ++i) {
            out[i] = decode(q.codes[static_cast<size_t>(i)], fmt) * lut(i);
        }
    }
    return out;
}

Tensor fake_quant(const Tensor& t, const QuantParams& params) {
    params.validate_for(t.shape());
    const ScaleLookup lut = ScaleLookup::make(params, t.shape());
    Tensor out(t.shape());
    if (params.target.is_int8()) {
        for (int64_t i = 0; i < t.numel(); ++i) {
            const float s = lut(i);
            const float scaled = checked_element(t[i]) / s;
            out[i] = std::clamp(rne_to_integer(scaled), -127.0f, 127.0f) * s;
        }
    } else {
        const Fp8Format& fmt = *params.target.format;
        for (int64_t i = 0; i < t.numel(); ++i) {
            const float s = lut(i);
            const float scaled = scaled_value(checked_element(t[i]), s, fmt.max_finite);
            out[i] = round_to_fp8(scaled, fmt) * s;
        }
    }
    return out;
}

}  // namespace fpq
