#pragma once

#include <cstdint>
#include <vector>

namespace fpq {

// Dense row-major FP32 n-d array; the universal value carrier.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int64_t> shape);
    Tensor(std::vector<int64_t> shape, std::vector<float> data);

    const std::vector<int64_t>& shape() const { return shape_; }
    int64_t dim() const { return static_cast<int64_t>(shape_.size()); }
    int64_t numel() const { return static_cast<int64_t>(data_.size()); }
    int64_t extent(int axis) const;  // negative axis counts from the back

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    float& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    float operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }
    std::vector<float>& storage() { return data_; }
    const std::vector<float>& storage() const { return data_; }

    // 2-d conveniences; throw unless dim() == 2.
    int64_t rows() const;
    int64_t cols() const;
    float& at(int64_t r, int64_t c) { return data_[static_cast<size_t>(r * shape_[1] + c)]; }
    float at(int64_t r, int64_t c) const { return data_[static_cast<size_t>(r * shape_[1] + c)]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

private:
    std::vector<int64_t> shape_;
    std::vector<float> data_;
};

// a[m x k] * b[k x n] (+ bias[n]), FP32 accumulation in ascending-k order per
// output element; bit-identical across runs and thread counts.
Tensor gemm(const Tensor& a, const Tensor& b, const Tensor* bias = nullptr);

Tensor transpose(const Tensor& a);            // 2-d
Tensor add(const Tensor& a, const Tensor& b);  // elementwise, equal shapes
Tensor scale(const Tensor& a, float factor);

// FP32 reference nonlinears (used by the FP32 execution mode and the trainer).
Tensor softmax(const Tensor& t, int axis);
Tensor gelu(const Tensor& t);
Tensor layernorm(const Tensor& t, const Tensor& gamma, const Tensor& beta, int axis,
                 float epsilon);

// BF16-simulated variants: inputs and outputs rounded through round_to_bf16,
// internal reductions in FP32.
Tensor softmax_bf16(const Tensor& t, int axis);
Tensor gelu_bf16(const Tensor& t);
Tensor layernorm_bf16(const Tensor& t, const Tensor& gamma, const Tensor& beta, int axis,
                      float epsilon);

struct ErrorMetrics {
    double mse = 0.0;
    double sqnr_db = 0.0;   // +inf when reference == test; NaN when reference is all-zero
    double cosine = 0.0;    // NaN when either vector is all-zero
    double max_abs_err = 0.0;
};

// Error of `test` against `reference`; accumulations in double.
ErrorMetrics metrics(const Tensor& reference, const Tensor& test);

}  // namespace fpq
