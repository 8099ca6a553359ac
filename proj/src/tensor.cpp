#include "fpq/tensor.hpp"

#include "fpq/fp8.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace fpq {

namespace {

int64_t checked_numel(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t e : shape) {
        if (e <= 0) throw std::invalid_argument("tensor extents must be positive");
        n *= e;
    }
    return n;
}

int normalize_axis(int axis, int64_t dim) {
    int a = axis < 0 ? axis + static_cast<int>(dim) : axis;
    if (a < 0 || a >= dim) {
        throw std::invalid_argument("axis " + std::to_string(axis) + " out of range for rank " +
                                    std::to_string(dim));
    }
    return a;
}

struct SliceLayout {
    int64_t outer;
    int64_t extent;
    int64_t inner;
};

SliceLayout slice_layout(const Tensor& t, int axis) {
    const int a = normalize_axis(axis, t.dim());
    SliceLayout s{1, t.shape()[static_cast<size_t>(a)], 1};
    for (int i = 0; i < a; ++i) s.outer *= t.shape()[static_cast<size_t>(i)];
    for (int64_t i = a + 1; i < t.dim(); ++i) s.inner *= t.shape()[static_cast<size_t>(i)];
    return s;
}

Tensor bf16_rounded(const Tensor& t) {
    Tensor out(t.shape());
    for (int64_t i = 0; i < t.numel(); ++i) out[i] = round_to_bf16(t[i]);
    return out;
}

}  // namespace

Tensor::Tensor(std::vector<int64_t> shape) {
    const int64_t n = checked_numel(shape);
    shape_ = std::move(shape);
    data_.assign(static_cast<size_t>(n), 0.0f);
}

Tensor::Tensor(std::vector<int64_t> shape, std::vector<float> data) {
    const int64_t n = checked_numel(shape);
    if (n != static_cast<int64_t>(data.size())) {
        throw std::invalid_argument("tensor data length does not match shape");
    }
    shape_ = std::move(shape);
    data_ = std::move(data);
}

int64_t Tensor::extent(int axis) const {
    return shape_[static_cast<size_t>(normalize_axis(axis, dim()))];
}

int64_t Tensor::rows() const {
    if (dim() != 2) throw std::invalid_argument("rows() requires a rank-2 tensor");
    return shape_[0];
}

int64_t Tensor::cols() const {
    if (dim() != 2) throw std::invalid_argument("cols() requires a rank-2 tensor");
    return shape_[1];
}

bool Tensor::all_finite() const {
    for (float v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Tensor gemm(const Tensor& a, const Tensor& b, const Tensor* bias) {
    if (a.dim() != 2 || b.dim() != 2 || a.cols() != b.rows()) {
        throw std::invalid_argument("gemm shape mismatch");
    }
    const int64_t m = a.rows();
    const int64_t k = a.cols();
    const int64_t n = b.cols();
    if (bias != nullptr && (bias->dim() != 1 || bias->numel() != n)) {
        throw std::invalid_argument("gemm bias length must equal the output width");
    }

    Tensor out({m, n});
    for (int64_t i = 0; i < m; ++i) {
        float* out_row = out.data() + i * n;
        if (bias != nullptr) {
            for (int64_t j = 0; j < n; ++j) out_row[j] = (*bias)[j];
        }
        for (int64_t kk = 0; kk < k; ++kk) {
            const float aik = a.at(i, kk);
            const float* b_row = b.data() + kk * n;
            for (int64_t j = 0; j < n; ++j) out_row[j] += aik * b_row[j];
        }
    }
    return out;
}

Tensor transpose(const Tensor& a) {
    const int64_t m = a.rows();
    const int64_t n = a.cols();
    Tensor out({n, m});
    for (int64_t i = 0; i < m; ++i) {
        for (int64_t j = 0; j < n; ++j) out.at(j, i) = a.at(i, j);
    }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("add shape mismatch");
    Tensor out(a.shape());
    for (int64_t i = 0; i < a.numel(); ++i) out[i] = a[i] + b[i];
    return out;
}

Tensor scale(const Tensor& a, float factor) {
    Tensor out(a.shape());
    for (int64_t i = 0; i < a.numel(); ++i) out[i] = a[i] * factor;
    return out;
}

Tensor softmax(const Tensor& t, int axis) {
    const SliceLayout s = slice_layout(t, axis);
    Tensor out(t.shape());
    for (int64_t o = 0; o < s.outer; ++o) {
        for (int64_t in = 0; in < s.inner; ++in) {
            const int64_t base = o * s.extent * s.inner + in;
            float max_v = -std::numeric_limits<float>::infinity();
            for (int64_t j = 0; j < s.extent; ++j) max_v = std::max(max_v, t[base + j * s.inner]);
            float sum = 0.0f;
            for (int64_t j = 0; j < s.extent; ++j) {
                const float e = std::exp(t[base + j * s.inner] - max_v);
                out[base + j * s.inner] = e;
                sum += e;
            }
            for (int64_t j = 0; j < s.extent; ++j) out[base + j * s.inner] /= sum;
        }
    }
    return out;
}

Tensor gelu(const Tensor& t) {
    Tensor out(t.shape());
    for (int64_t i = 0; i < t.numel(); ++i) {
        const float x = t[i];
        // x * Phi(x) with Phi via the error function
        out[i] = x * 0.5f * (1.0f + std::erf(x * 0.70710678118654752440f));
    }
    return out;
}

Tensor layernorm(const Tensor& t, const Tensor& gamma, const Tensor& beta, int axis,
                 float epsilon) {
    const SliceLayout s = slice_layout(t, axis);
    if (gamma.numel() != s.extent || beta.numel() != s.extent) {
        throw std::invalid_argument("layernorm gamma/beta length must match the normalized extent");
    }
    if (epsilon <= 0.0f) throw std::invalid_argument("layernorm epsilon must be positive");

    Tensor out(t.shape());
    for (int64_t o = 0; o < s.outer; ++o) {
        for (int64_t in = 0; in < s.inner; ++in) {
            const int64_t base = o * s.extent * s.inner + in;
            float mean = 0.0f;
            for (int64_t j = 0; j < s.extent; ++j) mean += t[base + j * s.inner];
            mean /= static_cast<float>(s.extent);
            float var = 0.0f;
            for (int64_t j = 0; j < s.extent; ++j) {
                const float d = t[base + j * s.inner] - mean;
                var += d * d;
            }
            var /= static_cast<float>(s.extent);
            const float inv_std = 1.0f / std::sqrt(var + epsilon);
            for (int64_t j = 0; j < s.extent; ++j) {
                const float normalized = (t[base + j * s.inner] - mean) * inv_std;
                out[base + j * s.inner] = normalized * gamma[j] + beta[j];
            }
        }
    }
    return out;
}

Tensor softmax_bf16(const Tensor& t, int axis) {
    return bf16_rounded(softmax(bf16_rounded(t), axis));
}

Tensor gelu_bf16(const Tensor& t) { return bf16_rounded(gelu(bf16_rounded(t))); }

Tensor layernorm_bf16(const Tensor& t, const Tensor& gamma, const Tensor& beta, int axis,
                      float epsilon) {
    return bf16_rounded(
        layernorm(bf16_rounded(t), bf16_rounded(gamma), bf16_rounded(beta), axis, epsilon));
}

ErrorMetrics metrics(const Tensor& reference, const Tensor& test) {
    if (!reference.same_shape(test)) throw std::invalid_argument("metrics shape mismatch");
    double err_power = 0.0;
    double ref_power = 0.0;
    double test_power = 0.0;
    double dot = 0.0;
    double max_abs = 0.0;
    for (int64_t i = 0; i < reference.numel(); ++i) {
        const double r = reference[i];
        const double t = test[i];
        const double d = r - t;
        err_power += d * d;
        ref_power += r * r;
        test_power += t * t;
        dot += r * t;
        max_abs = std::max(max_abs, std::fabs(d));
    }

    ErrorMetrics m;
    m.mse = err_power / static_cast<double>(reference.numel());
    m.max_abs_err = max_abs;
    const double undefined = std::numeric_limits<double>::quiet_NaN();
    if (ref_power == 0.0) {
        m.sqnr_db = undefined;
    } else if (err_power == 0.0) {
        m.sqnr_db = std::numeric_limits<double>::infinity();
    } else {
        m.sqnr_db = 10.0 * std::log10(ref_power / err_power);
    }
    m.cosine = (ref_power == 0.0 || test_power == 0.0)
                   ? undefined
                   : dot / (std::sqrt(ref_power) * std::sqrt(test_power));
    return m;
}

}  // namespace fpq
