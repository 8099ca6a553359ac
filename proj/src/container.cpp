#include "fpq/container.hpp"

#include "fpq/decimal.hpp"
#include "fpq/error.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace fpq {

static_assert(std::endian::native == std::endian::little,
              "container payload I/O assumes a little-endian host");

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr char kMagic[4] = {'F', 'P', 'Q', '1'};
constexpr int kVersion = 1;

ordered_json quant_params_to_json(const QuantParams& p) {
    ordered_json j;
    j["target"] = p.target.name();
    j["granularity"] = p.granularity == Granularity::PerChannel ? "per-channel" : "per-tensor";
    if (p.granularity == Granularity::PerChannel) j["axis"] = p.axis;
    ordered_json scales = ordered_json::array();
    for (float s : p.scales) scales.push_back(to_decimal(s));
    j["scales"] = std::move(scales);
    j["zero_point"] = to_decimal(p.zero_point);
    return j;
}

QuantParams quant_params_from_json(const ordered_json& j) {
    QuantParams p;
    p.target = QuantTarget::parse(j.at("target").get<std::string>());
    const std::string gran = j.at("granularity").get<std::string>();
    if (gran == "per-channel") {
        p.granularity = Granularity::PerChannel;
        p.axis = j.at("axis").get<int>();
    } else if (gran == "per-tensor") {
        p.granularity = Granularity::PerTensor;
    } else {
        throw DataError("malformed container header: bad granularity '" + gran + "'");
    }
    for (const auto& s : j.at("scales")) p.scales.push_back(float_from_decimal(s.get<std::string>()));
    p.zero_point = float_from_decimal(j.at("zero_point").get<std::string>());
    return p;
}

ordered_json gemm_quant_to_json(const GemmQuant& q) {
    ordered_json j;
    j["weight"] = quant_params_to_json(q.weight);
    j["activation"] = quant_params_to_json(q.activation);
    return j;
}

GemmQuant gemm_quant_from_json(const ordered_json& j) {
    return GemmQuant{quant_params_from_json(j.at("weight")),
                     quant_params_from_json(j.at("activation"))};
}

ordered_json matmul_quant_to_json(const MatmulQuant& q) {
    ordered_json j;
    j["lhs"] = quant_params_to_json(q.lhs);
    j["rhs"] = quant_params_to_json(q.rhs);
    return j;
}

MatmulQuant matmul_quant_from_json(const ordered_json& j) {
    return MatmulQuant{quant_params_from_json(j.at("lhs")), quant_params_from_json(j.at("rhs"))};
}

ordered_json layer_to_json(const LayerSpec& layer) {
    ordered_json j;
    j["kind"] = layer_kind_name(layer.kind);
    switch (layer.kind) {
        case LayerKind::Gemm:
            j["weight"] = layer.weight;
            if (!layer.bias.empty()) j["bias"] = layer.bias;
            if (layer.quant) j["quant"] = gemm_quant_to_json(*layer.quant);
            break;
        case LayerKind::Softmax:
            j["axis"] = layer.axis;
            break;
        case LayerKind::Gelu:
            break;
        case LayerKind::LayerNorm:
            j["gamma"] = layer.gamma;
            j["beta"] = layer.beta;
            j["axis"] = layer.axis;
            j["epsilon"] = to_decimal(layer.epsilon);
            break;
        case LayerKind::ResidualAdd:
            j["source"] = layer.source;
            break;
        case LayerKind::AttentionBlock: {
            j["heads"] = layer.heads;
            j["wq"] = layer.wq;
            if (!layer.bq.empty()) j["bq"] = layer.bq;
            j["wk"] = layer.wk;
            if (!layer.bk.empty()) j["bk"] = layer.bk;
            j["wv"] = layer.wv;
            if (!layer.bv.empty()) j["bv"] = layer.bv;
            j["wo"] = layer.wo;
            if (!layer.bo.empty()) j["bo"] = layer.bo;
            if (layer.attn_quant) {
                ordered_json q;
                q["q"] = gemm_quant_to_json(layer.attn_quant->q);
                q["k"] = gemm_quant_to_json(layer.attn_quant->k);
                q["v"] = gemm_quant_to_json(layer.attn_quant->v);
                q["o"] = gemm_quant_to_json(layer.attn_quant->o);
                if (layer.attn_quant->qk) q["qk"] = matmul_quant_to_json(*layer.attn_quant->qk);
                if (layer.attn_quant->pv) q["pv"] = matmul_quant_to_json(*layer.attn_quant->pv);
                j["quant"] = std::move(q);
            }
            break;
        }
    }
    return j;
}

LayerSpec layer_from_json(const ordered_json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    LayerSpec layer;
    if (kind == "gemm") {
        layer.kind = LayerKind::Gemm;
        layer.weight = j.at("weight").get<std::string>();
        if (j.contains("bias")) layer.bias = j.at("bias").get<std::string>();
        if (j.contains("quant")) layer.quant = gemm_quant_from_json(j.at("quant"));
    } else if (kind == "softmax") {
        layer.kind = LayerKind::Softmax;
        layer.axis = j.at("axis").get<int>();
    } else if (kind == "gelu") {
        layer.kind = LayerKind::Gelu;
    } else if (kind == "layernorm") {
        layer.kind = LayerKind::LayerNorm;
        layer.gamma = j.at("gamma").get<std::string>();
        layer.beta = j.at("beta").get<std::string>();
        layer.axis = j.at("axis").get<int>();
        layer.epsilon = float_from_decimal(j.at("epsilon").get<std::string>());
    } else if (kind == "residual_add") {
        layer.kind = LayerKind::ResidualAdd;
        layer.source = j.at("source").get<int>();
    } else if (kind == "attention_block") {
        layer.kind = LayerKind::AttentionBlock;
        layer.heads = j.at("heads").get<int>();
        layer.wq = j.at("wq").get<std::string>();
        if (j.contains("bq")) layer.bq = j.at("bq").get<std::string>();
        layer.wk = j.at("wk").get<std::string>();
        if (j.contains("bk")) layer.bk = j.at("bk").get<std::string>();
        layer.wv = j.at("wv").get<std::string>();
        if (j.contains("bv")) layer.bv = j.at("bv").get<std::string>();
        layer.wo = j.at("wo").get<std::string>();
        if (j.contains("bo")) layer.bo = j.at("bo").get<std::string>();
        if (j.contains("quant")) {
            const ordered_json& q = j.at("quant");
            AttentionQuant aq;
            aq.q = gemm_quant_from_json(q.at("q"));
            aq.k = gemm_quant_from_json(q.at("k"));
            aq.v = gemm_quant_from_json(q.at("v"));
            aq.o = gemm_quant_from_json(q.at("o"));
            if (q.contains("qk")) aq.qk = matmul_quant_from_json(q.at("qk"));
            if (q.contains("pv")) aq.pv = matmul_quant_from_json(q.at("pv"));
            layer.attn_quant = std::move(aq);
        }
    } else {
        throw DataError("unknown layer kind '" + kind + "'");
    }
    return layer;
}

void require_tensor(const ModelContainer& m, const std::string& name) {
    if (!name.empty() && m.tensors.find(name) == m.tensors.end()) {
        throw DataError("dangling tensor reference '" + name + "'");
    }
}

void write_file_atomic(const std::string& path, const std::string& bytes) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write '" + tmp + "'");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw DataError("failed writing '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

const char* layer_kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::Gemm: return "gemm";
        case LayerKind::Softmax: return "softmax";
        case LayerKind::Gelu: return "gelu";
        case LayerKind::LayerNorm: return "layernorm";
        case LayerKind::ResidualAdd: return "residual_add";
        case LayerKind::AttentionBlock: return "attention_block";
    }
    return "?";
}

void validate(const ModelContainer& m) {
    for (size_t i = 0; i < m.graph.size(); ++i) {
        const LayerSpec& layer = m.graph[i];
        switch (layer.kind) {
            case LayerKind::Gemm:
                require_tensor(m, layer.weight);
                require_tensor(m, layer.bias);
                if (layer.weight.empty()) throw DataError("gemm layer without a weight tensor");
                break;
            case LayerKind::LayerNorm:
                require_tensor(m, layer.gamma);
                require_tensor(m, layer.beta);
                break;
            case LayerKind::ResidualAdd:
                if (layer.source < -1 || layer.source >= static_cast<int>(i)) {
                    throw DataError("residual_add source must reference an earlier layer");
                }
                break;
            case LayerKind::AttentionBlock:
                for (const std::string* name :
                     {&layer.wq, &layer.bq, &layer.wk, &layer.bk, &layer.wv, &layer.bv, &layer.wo,
                      &layer.bo}) {
                    require_tensor(m, *name);
                }
                if (layer.heads < 1) throw DataError("attention_block needs at least one head");
                break;
            default:
                break;
        }
    }
}

void save_model(const ModelContainer& m, const std::string& path) {
    validate(m);

    ordered_json header;
    header["version"] = kVersion;
    ordered_json graph = ordered_json::array();
    for (const LayerSpec& layer : m.graph) graph.push_back(layer_to_json(layer));
    header["graph"] = std::move(graph);

    ordered_json tensors;
    uint64_t offset = 0;
    for (const auto& [name, tensor] : m.tensors) {
        const uint64_t nbytes = static_cast<uint64_t>(tensor.numel()) * sizeof(float);
        ordered_json rec;
        rec["dtype"] = "f32";
        rec["shape"] = tensor.shape();
        rec["offset"] = offset;
        rec["nbytes"] = nbytes;
        tensors[name] = std::move(rec);
        offset += nbytes;
    }
    header["tensors"] = std::move(tensors);
    header["metadata"] = m.metadata;

    const std::string header_text = header.dump();
    std::string bytes;
    bytes.reserve(8 + header_text.size() + offset);
    bytes.append(kMagic, 4);
    const uint32_t header_len = static_cast<uint32_t>(header_text.size());
    bytes.append(reinterpret_cast<const char*>(&header_len), 4);
    bytes.append(header_text);
    for (const auto& [name, tensor] : m.tensors) {
        bytes.append(reinterpret_cast<const char*>(tensor.data()),
                     static_cast<size_t>(tensor.numel()) * sizeof(float));
    }
    write_file_atomic(path, bytes);
}

ModelContainer load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw DataError("bad magic in '" + path + "'");
    }
    if (bytes.size() < 8) throw DataError("truncated payload in '" + path + "'");
    uint32_t header_len = 0;
    std::memcpy(&header_len, bytes.data() + 4, 4);
    if (bytes.size() < 8 + static_cast<size_t>(header_len)) {
        throw DataError("truncated payload in '" + path + "'");
    }

    ordered_json header;
    try {
        header = ordered_json::parse(bytes.substr(8, header_len));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed container header: ") + e.what());
    }

    ModelContainer m;
    try {
        const size_t payload_base = 8 + header_len;
        const size_t payload_size = bytes.size() - payload_base;
        for (const auto& [name, rec] : header.at("tensors").items()) {
            if (rec.at("dtype").get<std::string>() != "f32") {
                throw DataError("unsupported tensor dtype for '" + name + "'");
            }
            const std::vector<int64_t> shape = rec.at("shape").get<std::vector<int64_t>>();
            const uint64_t offset = rec.at("offset").get<uint64_t>();
            const uint64_t nbytes = rec.at("nbytes").get<uint64_t>();
            if (offset + nbytes > payload_size) throw DataError("truncated payload in '" + path + "'");
            std::vector<float> data(nbytes / sizeof(float));
            if (nbytes % sizeof(float) != 0) {
                throw DataError("malformed container header: tensor nbytes not a multiple of 4");
            }
            std::memcpy(data.data(), bytes.data() + payload_base + offset, nbytes);
            m.tensors.emplace(name, Tensor(shape, std::move(data)));
        }
        for (const auto& rec : header.at("graph")) m.graph.push_back(layer_from_json(rec));
        if (header.contains("metadata")) {
            m.metadata = header.at("metadata").get<std::map<std::string, std::string>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed container header: ") + e.what());
    }

    validate(m);
    return m;
}

}  // namespace fpq
