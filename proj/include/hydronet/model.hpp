// Model parameters and configuration: multi-head GAT stack, bidirectional
// LSTM, scoring MLP, attention pooling and adaptive fusion weights, plus
// JSON checkpoint I/O.
//
// All learnable arrays are visitable by name (stable canonical order), which
// the optimizer, the gradient checker, and the checkpoint format rely on.

#pragma once

#include "hydronet/core.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace hydronet {

struct GatHead {
    Matrix W;  // d_out x d_in
    Vector a;  // 2 * d_out (source half, then destination half)
};

struct GatLayerParams {
    std::vector<GatHead> heads;
};

struct LstmParams {
    // Gate order within the stacked rows: input, forget, cell, output.
    Matrix Wx;  // 4h x input_dim
    Matrix Wh;  // 4h x h
    Vector b;   // 4h
};

struct MlpParams {
    Matrix W1;  // hidden x input
    Vector b1;  // hidden
    Matrix W2;  // 1 x hidden
    Vector b2;  // 1
};

struct FusionParams {
    Matrix W_pool;    // pool_dim x 2h
    Vector v;         // pool_dim
    Matrix W_lambda;  // 3 x 3
};

enum class AttentionMode { Learned, Uniform };   // Uniform = GCN-style ablation
enum class TemporalMode { BiLstm, MeanPool };    // MeanPool = no-BiLSTM ablation
enum class FusionMode { Adaptive, MicroOnly, EqualWeights };

struct ModelConfig {
    int feature_dim = 8;   // F
    int gat_layers = 3;    // L
    int heads = 8;         // K
    int embed_dim = 16;    // d (paper default 128; desk default 16)
    int lstm_hidden = 16;  // h
    int mlp_hidden = 64;
    int pool_dim = 16;
    int window = 24;       // w
    double leaky_slope = 0.2;
    double score_clamp = 1e-7;
    AttentionMode attention = AttentionMode::Learned;
    TemporalMode temporal = TemporalMode::BiLstm;
    FusionMode fusion = FusionMode::Adaptive;
};

struct ModelParams {
    ModelConfig config;
    std::vector<GatLayerParams> gat;
    LstmParams lstm_fwd, lstm_bwd;
    MlpParams mlp;
    FusionParams fusion;

    /// Glorot-uniform matrices, zero biases, LSTM forget-gate bias +1.
    static ModelParams init(const ModelConfig& config, std::uint64_t seed);

    /// Same shapes, every entry zero. Used for gradients and Adam moments.
    static ModelParams zeros_like(const ModelParams& other);

    /// Visit every parameter array as a flat span, canonical order.
    void visit(const std::function<void(const std::string&, double*, Eigen::Index)>& fn);
    void visit(const std::function<void(const std::string&, const double*, Eigen::Index)>& fn)
        const;

    Eigen::Index parameter_count() const;
    Vector flatten() const;
    void unflatten(const Vector& flat);

    void save(const std::filesystem::path& path) const;
    static ModelParams load(const std::filesystem::path& path);
};

const char* to_string(AttentionMode mode);
const char* to_string(TemporalMode mode);
const char* to_string(FusionMode mode);
AttentionMode parse_attention_mode(const std::string& text);
TemporalMode parse_temporal_mode(const std::string& text);
FusionMode parse_fusion_mode(const std::string& text);

}  // namespace hydronet
