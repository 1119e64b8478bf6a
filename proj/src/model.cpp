#include "hydronet/model.hpp"

#include "hydronet/io.hpp"

#include <json.hpp>

#include <cmath>

namespace hydronet {

using nlohmann::json;

const char* to_string(AttentionMode mode) {
    return mode == AttentionMode::Learned ? "learned" : "uniform";
}
const char* to_string(TemporalMode mode) {
    return mode == TemporalMode::BiLstm ? "bilstm" : "mean_pool";
}
const char* to_string(FusionMode mode) {
    switch (mode) {
        case FusionMode::Adaptive: return "adaptive";
        case FusionMode::MicroOnly: return "micro_only";
        case FusionMode::EqualWeights: return "equal";
    }
    return "?";
}

AttentionMode parse_attention_mode(const std::string& text) {
    if (text == "learned") return AttentionMode::Learned;
    if (text == "uniform") return AttentionMode::Uniform;
    throw ParseError("unknown attention mode '" + text + "'");
}
TemporalMode parse_temporal_mode(const std::string& text) {
    if (text == "bilstm") return TemporalMode::BiLstm;
    if (text == "mean_pool") return TemporalMode::MeanPool;
    throw ParseError("unknown temporal mode '" + text + "'");
}
FusionMode parse_fusion_mode(const std::string& text) {
    if (text == "adaptive") return FusionMode::Adaptive;
    if (text == "micro_only") return FusionMode::MicroOnly;
    if (text == "equal") return FusionMode::EqualWeights;
    throw ParseError("unknown fusion mode '" + text + "'");
}

namespace {

void glorot(Matrix& m, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            m(r, c) = rng.uniform(-bound, bound);
        }
    }
}

void glorot(Vector& v, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(v.size() + 1));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(-bound, bound);
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed) {
    if (config.temporal == TemporalMode::MeanPool &&
        config.embed_dim != config.lstm_hidden) {
        throw std::invalid_argument(
            "mean-pool temporal mode requires embed_dim == lstm_hidden");
    }
    Rng rng(mix_seed({seed, 0x6d6f64656cULL}));
    ModelParams p;
    p.config = config;

    p.gat.resize(config.gat_layers);
    for (int l = 0; l < config.gat_layers; ++l) {
        const int d_in = l == 0 ? config.feature_dim : config.embed_dim;
        p.gat[l].heads.resize(config.heads);
        for (GatHead& head : p.gat[l].heads) {
            head.W.resize(config.embed_dim, d_in);
            glorot(head.W, rng);
            head.a.resize(2 * config.embed_dim);
            glorot(head.a, rng);
        }
    }

    const int h = config.lstm_hidden;
    for (LstmParams* lstm : {&p.lstm_fwd, &p.lstm_bwd}) {
        lstm->Wx.resize(4 * h, config.embed_dim);
        glorot(lstm->Wx, rng);
        lstm->Wh.resize(4 * h, h);
        glorot(lstm->Wh, rng);
        lstm->b = Vector::Zero(4 * h);
        lstm->b.segment(h, h).setOnes();  // forget-gate bias
    }

    p.mlp.W1.resize(config.mlp_hidden, 2 * h);
    glorot(p.mlp.W1, rng);
    p.mlp.b1 = Vector::Zero(config.mlp_hidden);
    p.mlp.W2.resize(1, config.mlp_hidden);
    glorot(p.mlp.W2, rng);
    p.mlp.b2 = Vector::Zero(1);

    p.fusion.W_pool.resize(config.pool_dim, 2 * h);
    glorot(p.fusion.W_pool, rng);
    p.fusion.v.resize(config.pool_dim);
    glorot(p.fusion.v, rng);
    p.fusion.W_lambda.resize(3, 3);
    glorot(p.fusion.W_lambda, rng);
    return p;
}

ModelParams ModelParams::zeros_like(const ModelParams& other) {
    ModelParams p = other;
    p.visit([](const std::string&, double* data, Eigen::Index size) {
        for (Eigen::Index i = 0; i < size; ++i) data[i] = 0.0;
    });
    return p;
}

void ModelParams::visit(
    const std::function<void(const std::string&, double*, Eigen::Index)>& fn) {
    for (std::size_t l = 0; l < gat.size(); ++l) {
        for (std::size_t k = 0; k < gat[l].heads.size(); ++k) {
            const std::string prefix =
                "gat." + std::to_string(l) + ".head." + std::to_string(k);
            fn(prefix + ".W", gat[l].heads[k].W.data(), gat[l].heads[k].W.size());
            fn(prefix + ".a", gat[l].heads[k].a.data(), gat[l].heads[k].a.size());
        }
    }
    const char* dirs[2] = {"lstm_fwd", "lstm_bwd"};
    LstmParams* lstms[2] = {&lstm_fwd, &lstm_bwd};
    for (int d = 0; d < 2; ++d) {
        fn(std::string(dirs[d]) + ".Wx", lstms[d]->Wx.data(), lstms[d]->Wx.size());
        fn(std::string(dirs[d]) + ".Wh", lstms[d]->Wh.data(), lstms[d]->Wh.size());
        fn(std::string(dirs[d]) + ".b", lstms[d]->b.data(), lstms[d]->b.size());
    }
    fn("mlp.W1", mlp.W1.data(), mlp.W1.size());
    fn("mlp.b1", mlp.b1.data(), mlp.b1.size());
    fn("mlp.W2", mlp.W2.data(), mlp.W2.size());
    fn("mlp.b2", mlp.b2.data(), mlp.b2.size());
    fn("fusion.W_pool", fusion.W_pool.data(), fusion.W_pool.size());
    fn("fusion.v", fusion.v.data(), fusion.v.size());
    fn("fusion.W_lambda", fusion.W_lambda.data(), fusion.W_lambda.size());
}

void ModelParams::visit(
    const std::function<void(const std::string&, const double*, Eigen::Index)>& fn) const {
    const_cast<ModelParams*>(this)->visit(
        [&fn](const std::string& name, double* data, Eigen::Index size) {
            fn(name, data, size);
        });
}

Eigen::Index ModelParams::parameter_count() const {
    Eigen::Index total = 0;
    visit([&](const std::string&, const double*, Eigen::Index size) { total += size; });
    return total;
}

Vector ModelParams::flatten() const {
    Vector flat(parameter_count());
    Eigen::Index offset = 0;
    visit([&](const std::string&, const double* data, Eigen::Index size) {
        for (Eigen::Index i = 0; i < size; ++i) flat[offset + i] = data[i];
        offset += size;
    });
    return flat;
}

void ModelParams::unflatten(const Vector& flat) {
    if (flat.size() != parameter_count()) {
        throw std::invalid_argument("unflatten: size mismatch");
    }
    Eigen::Index offset = 0;
    visit([&](const std::string&, double* data, Eigen::Index size) {
        for (Eigen::Index i = 0; i < size; ++i) data[i] = flat[offset + i];
        offset += size;
    });
}

// ----------------------------------------------------------------------------
// Checkpoint I/O
// ----------------------------------------------------------------------------

namespace {

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

Matrix matrix_from_json(const json& j) {
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

json vector_to_json(const Vector& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Vector vector_from_json(const json& j) {
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j[i].get<double>();
    return v;
}

json lstm_to_json(const LstmParams& p) {
    return {{"Wx", matrix_to_json(p.Wx)}, {"Wh", matrix_to_json(p.Wh)},
            {"b", vector_to_json(p.b)}};
}

LstmParams lstm_from_json(const json& j) {
    LstmParams p;
    p.Wx = matrix_from_json(j["Wx"]);
    p.Wh = matrix_from_json(j["Wh"]);
    p.b = vector_from_json(j["b"]);
    return p;
}

}  // namespace

void ModelParams::save(const std::filesystem::path& path) const {
    json root;
    root["format"] = "hydronet-checkpoint-v1";
    root["tool_version"] = kToolVersion;
    json cfg;
    cfg["feature_dim"] = config.feature_dim;
    cfg["gat_layers"] = config.gat_layers;
    cfg["heads"] = config.heads;
    cfg["embed_dim"] = config.embed_dim;
    cfg["lstm_hidden"] = config.lstm_hidden;
    cfg["mlp_hidden"] = config.mlp_hidden;
    cfg["pool_dim"] = config.pool_dim;
    cfg["window"] = config.window;
    cfg["leaky_slope"] = config.leaky_slope;
    cfg["score_clamp"] = config.score_clamp;
    cfg["attention"] = to_string(config.attention);
    cfg["temporal"] = to_string(config.temporal);
    cfg["fusion"] = to_string(config.fusion);
    root["config"] = cfg;

    json layers = json::array();
    for (const GatLayerParams& layer : gat) {
        json heads = json::array();
        for (const GatHead& head : layer.heads) {
            heads.push_back({{"W", matrix_to_json(head.W)}, {"a", vector_to_json(head.a)}});
        }
        layers.push_back(heads);
    }
    root["params"]["gat"] = layers;
    root["params"]["lstm_fwd"] = lstm_to_json(lstm_fwd);
    root["params"]["lstm_bwd"] = lstm_to_json(lstm_bwd);
    root["params"]["mlp"] = {{"W1", matrix_to_json(mlp.W1)},
                             {"b1", vector_to_json(mlp.b1)},
                             {"W2", matrix_to_json(mlp.W2)},
                             {"b2", vector_to_json(mlp.b2)}};
    root["params"]["fusion"] = {{"W_pool", matrix_to_json(fusion.W_pool)},
                                {"v", vector_to_json(fusion.v)},
                                {"W_lambda", matrix_to_json(fusion.W_lambda)}};
    atomic_write(path, root.dump(2) + "\n");
}

ModelParams ModelParams::load(const std::filesystem::path& path) {
    json root = json::parse(read_file(path));
    if (root.value("format", std::string()) != "hydronet-checkpoint-v1") {
        throw ParseError(path.string() + ": unexpected checkpoint format tag");
    }
    ModelParams p;
    const json& cfg = root["config"];
    p.config.feature_dim = cfg["feature_dim"].get<int>();
    p.config.gat_layers = cfg["gat_layers"].get<int>();
    p.config.heads = cfg["heads"].get<int>();
    p.config.embed_dim = cfg["embed_dim"].get<int>();
    p.config.lstm_hidden = cfg["lstm_hidden"].get<int>();
    p.config.mlp_hidden = cfg["mlp_hidden"].get<int>();
    p.config.pool_dim = cfg["pool_dim"].get<int>();
    p.config.window = cfg["window"].get<int>();
    p.config.leaky_slope = cfg["leaky_slope"].get<double>();
    p.config.score_clamp = cfg["score_clamp"].get<double>();
    p.config.attention = parse_attention_mode(cfg["attention"].get<std::string>());
    p.config.temporal = parse_temporal_mode(cfg["temporal"].get<std::string>());
    p.config.fusion = parse_fusion_mode(cfg["fusion"].get<std::string>());

    for (const json& layer : root["params"]["gat"]) {
        GatLayerParams lp;
        for (const json& head : layer) {
            GatHead h;
            h.W = matrix_from_json(head["W"]);
            h.a = vector_from_json(head["a"]);
            lp.heads.push_back(std::move(h));
        }
        p.gat.push_back(std::move(lp));
    }
    p.lstm_fwd = lstm_from_json(root["params"]["lstm_fwd"]);
    p.lstm_bwd = lstm_from_json(root["params"]["lstm_bwd"]);
    p.mlp.W1 = matrix_from_json(root["params"]["mlp"]["W1"]);
    p.mlp.b1 = vector_from_json(root["params"]["mlp"]["b1"]);
    p.mlp.W2 = matrix_from_json(root["params"]["mlp"]["W2"]);
    p.mlp.b2 = vector_from_json(root["params"]["mlp"]["b2"]);
    p.fusion.W_pool = matrix_from_json(root["params"]["fusion"]["W_pool"]);
    p.fusion.v = vector_from_json(root["params"]["fusion"]["v"]);
    p.fusion.W_lambda = matrix_from_json(root["params"]["fusion"]["W_lambda"]);
    return p;
}

}  // namespace hydronet
