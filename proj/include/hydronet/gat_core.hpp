// Spatio-temporal core kernels: multi-head graph-attention layers, LSTM
// recurrence, and the scoring MLP. Each kernel has a forward pass that fills
// a cache and an exact reverse-mode backward pass that consumes it.
//
// Attention per node i runs over the support set N(i) u {i}. Head outputs are
// averaged (not concatenated) and passed through ELU.

#pragma once

#include "hydronet/model.hpp"
#include "hydronet/network.hpp"

namespace hydronet {

// ----------------------------------------------------------------------------
// Graph topology in CSR form (supports: self + neighbors, ascending)
// ----------------------------------------------------------------------------

struct GraphTopology {
    int n = 0;
    std::vector<int> offsets;  // n + 1
    std::vector<int> targets;  // concatenated supports

    int nnz() const { return static_cast<int>(targets.size()); }
    int degree(int i) const { return offsets[i + 1] - offsets[i]; }

    static GraphTopology build(const NetworkGraph& g);
    /// From an undirected edge list (tests, synthetic scaling graphs).
    static GraphTopology from_edges(int n, const std::vector<std::pair<int, int>>& edges);
};

// ----------------------------------------------------------------------------
// GAT layer
// ----------------------------------------------------------------------------

struct GatLayerCache {
    Matrix input;                       // N x d_in
    std::vector<Matrix> U;              // per head: N x d_out
    std::vector<Vector> s, t;           // per head: N (logit halves)
    std::vector<std::vector<double>> pre;    // per head: nnz pre-LeakyReLU logits
    std::vector<std::vector<double>> alpha;  // per head: nnz attention weights
    Matrix M;                           // N x d_out pre-ELU aggregate
    Matrix output;                      // N x d_out
};

/// Forward pass of one GAT layer over one frame.
GatLayerCache gat_layer_forward(const Matrix& input, const GraphTopology& topo,
                                const GatLayerParams& params, double leaky_slope,
                                AttentionMode mode);

/// Backward: accumulate parameter gradients and return d(input).
Matrix gat_layer_backward(const GatLayerCache& cache, const GraphTopology& topo,
                          const GatLayerParams& params, double leaky_slope,
                          AttentionMode mode, const Matrix& d_output,
                          GatLayerParams& grads);

struct FrameCache {
    std::vector<GatLayerCache> layers;
    const Matrix& output() const { return layers.back().output; }
};

/// Full L-layer stack on one frame (one timestep's N x F feature matrix).
FrameCache gat_forward_frame(const Matrix& features, const GraphTopology& topo,
                             const ModelParams& params);

/// Backward through the stack; returns d(features) when requested.
void gat_backward_frame(const FrameCache& cache, const GraphTopology& topo,
                        const ModelParams& params, const Matrix& d_embedding,
                        ModelParams& grads, Matrix* d_features);

// ----------------------------------------------------------------------------
// LSTM
// ----------------------------------------------------------------------------

struct LstmCache {
    Matrix x;                  // w x input_dim
    Matrix gate_i, gate_f, gate_g, gate_o;  // w x h, post-activation
    Matrix c, h, tanh_c;       // w x h
};

/// Run the recurrence over the rows of x_seq; returns the final hidden state.
Vector lstm_forward(const Matrix& x_seq, const LstmParams& params, LstmCache& cache);

/// BPTT from a gradient on the final hidden state. d_x_seq may be null.
void lstm_backward(const LstmCache& cache, const LstmParams& params,
                   const Vector& d_h_final, LstmParams& grads, Matrix* d_x_seq);

// ----------------------------------------------------------------------------
// Scoring MLP
// ----------------------------------------------------------------------------

struct MlpCache {
    Vector input;
    Vector hidden_pre, hidden;
    double out_pre = 0.0;
    double score = 0.0;
    bool clamped = false;
};

/// sigmoid(W2 relu(W1 f + b1) + b2), clamped to [clamp, 1-clamp].
double mlp_score(const Vector& input, const MlpParams& params, double clamp,
                 MlpCache& cache);

void mlp_backward(const MlpCache& cache, const MlpParams& params, double d_score,
                  MlpParams& grads, Vector* d_input);

}  // namespace hydronet
