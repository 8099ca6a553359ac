#pragma once

#include "fpq/quant.hpp"
#include "fpq/tensor.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fpq {

enum class LayerKind { Gemm, Softmax, Gelu, LayerNorm, ResidualAdd, AttentionBlock };

struct GemmQuant {
    QuantParams weight;
    QuantParams activation;
};

// Activation params for a matmul whose two operands are both activations
// (the QK^T and P*V products inside attention).
struct MatmulQuant {
    QuantParams lhs;
    QuantParams rhs;
};

struct AttentionQuant {
    GemmQuant q, k, v, o;
    std::optional<MatmulQuant> qk;  // absent when internal matmuls are left unquantized
    std::optional<MatmulQuant> pv;
};

// One step of the (single-path) dataflow. Field groups are used per kind;
// empty tensor names mean "absent" (e.g. a gemm without bias).
struct LayerSpec {
    LayerKind kind = LayerKind::Gemm;

    std::string weight, bias;  // gemm
    std::string gamma, beta;   // layernorm
    float epsilon = 1e-5f;     // layernorm
    int axis = -1;             // softmax / layernorm

    // residual_add: index of the earlier layer whose output is added;
    // -1 addresses the graph input
    int source = -1;

    // attention_block
    std::string wq, bq, wk, bk, wv, bv, wo, bo;
    int heads = 1;

    std::optional<GemmQuant> quant;            // gemm layers only
    std::optional<AttentionQuant> attn_quant;  // attention_block only
};

struct ModelContainer {
    std::map<std::string, Tensor> tensors;
    std::vector<LayerSpec> graph;
    std::map<std::string, std::string> metadata;
};

// Structural checks: referenced tensors exist, residual sources point
// backwards, quant annotations sit on the right layer kinds.
void validate(const ModelContainer& m);

// On-disk format: "FPQ1" | u32 LE header length | JSON header | raw LE f32
// payloads at header-stated offsets (relative to the end of the header).
// Writes are atomic (temp file + rename).
void save_model(const ModelContainer& m, const std::string& path);
ModelContainer load_model(const std::string& path);

const char* layer_kind_name(LayerKind kind);

}  // namespace fpq
