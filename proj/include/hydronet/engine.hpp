// Full-model orchestration: per-frame GAT encoding, per-window BiLSTM fusion
// and scoring, multi-scale fusion, series inference with attention records,
// and exact reverse-mode backward through the whole stack.
//
// Frame embeddings depend only on that frame's features, so batch and series
// paths encode each distinct frame once and share it across windows.

#pragma once

#include "hydronet/features.hpp"
#include "hydronet/gat_core.hpp"
#include "hydronet/multiscale.hpp"

namespace hydronet {

struct WindowCache {
    std::vector<LstmCache> lstm_fwd, lstm_bwd;  // per node (BiLstm mode)
    Matrix fused;                               // N x 2h
    std::vector<MlpCache> mlp;                  // per node
    FusionCache fusion;
    ScoreBundle bundle;
};

/// Per-frame attention snapshot: one K x nnz matrix per retained layer (CSR
/// layout of GraphTopology). Rows sum to 1 per node segment.
struct FrameAttention {
    std::vector<Matrix> layers;
};

struct ScoreSeries {
    int first_scored = 0;              // = window - 1
    std::vector<ScoreBundle> bundles;  // bundles[k] scores timestep first_scored + k
    std::vector<FrameAttention> attention;  // per frame when requested

    int scored_steps() const { return static_cast<int>(bundles.size()); }
};

struct InferenceOptions {
    bool keep_attention = false;
    bool keep_all_layers = false;  // default keeps only the last GAT layer
};

class ModelEngine {
public:
    ModelEngine(const NetworkGraph& g, const ModelParams& params,
                const Clustering& clustering);

    const GraphTopology& topology() const { return topo_; }
    const ModelParams& params() const { return *params_; }
    const Clustering& clustering() const { return *clustering_; }
    const NetworkGraph& network() const { return *graph_; }

    FrameCache encode_frame(const Matrix& features) const;

    /// Score one window given pointers to its frame embeddings (N x d each).
    WindowCache score_window(const std::vector<const Matrix*>& embeddings) const;

    /// Backward from d(final scores); adds embedding gradients into the
    /// matrices pointed to by d_frames (one N x d accumulator per position).
    void backward_window(const WindowCache& cache,
                         const std::vector<const Matrix*>& embeddings,
                         const Vector& d_final, ModelParams& grads,
                         const std::vector<Matrix*>& d_frames) const;

    void backward_frame(const FrameCache& cache, const Matrix& d_embedding,
                        ModelParams& grads, Matrix* d_features = nullptr) const;

    /// Slide the model over a full feature tensor.
    ScoreSeries score_series(const FeatureTensor& tensor,
                             const InferenceOptions& options = {}) const;

    /// d(micro score of target node at one window) / d(input features).
    /// Returns one N x F matrix per window position.
    std::vector<Matrix> input_gradient(const std::vector<Matrix>& window_features,
                                       int target_node) const;

    /// Micro score of one node for one window of raw features.
    double window_micro_score(const std::vector<Matrix>& window_features,
                              int target_node) const;

private:
    const NetworkGraph* graph_;
    const ModelParams* params_;
    const Clustering* clustering_;
    GraphTopology topo_;
};

}  // namespace hydronet
