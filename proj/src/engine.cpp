#include "hydronet/engine.hpp"

#include <cmath>

namespace hydronet {

ModelEngine::ModelEngine(const NetworkGraph& g, const ModelParams& params,
                         const Clustering& clustering)
    : graph_(&g), params_(&params), clustering_(&clustering),
      topo_(GraphTopology::build(g)) {
    if (static_cast<int>(clustering.assignment.size()) != g.node_count()) {
        throw std::invalid_argument("clustering does not match network size");
    }
}

FrameCache ModelEngine::encode_frame(const Matrix& features) const {
    return gat_forward_frame(features, topo_, *params_);
}

WindowCache ModelEngine::score_window(
    const std::vector<const Matrix*>& embeddings) const {
    const ModelConfig& cfg = params_->config;
    const int n = topo_.n;
    const int w = static_cast<int>(embeddings.size());
    const int h = cfg.lstm_hidden;

    WindowCache cache;
    cache.fused.resize(n, 2 * h);

    if (cfg.temporal == TemporalMode::BiLstm) {
        cache.lstm_fwd.resize(n);
        cache.lstm_bwd.resize(n);
        Matrix seq(w, cfg.embed_dim), seq_rev(w, cfg.embed_dim);
        for (int i = 0; i < n; ++i) {
            for (int tau = 0; tau < w; ++tau) {
                seq.row(tau) = embeddings[tau]->row(i);
                seq_rev.row(tau) = embeddings[w - 1 - tau]->row(i);
            }
            cache.fused.row(i).head(h) =
                lstm_forward(seq, params_->lstm_fwd, cache.lstm_fwd[i]).transpose();
            cache.fused.row(i).tail(h) =
                lstm_forward(seq_rev, params_->lstm_bwd, cache.lstm_bwd[i]).transpose();
        }
    } else {
        // Temporal mean pooling (no-BiLSTM ablation); requires d == h.
        for (int i = 0; i < n; ++i) {
            Vector mean = Vector::Zero(cfg.embed_dim);
            for (int tau = 0; tau < w; ++tau) mean += embeddings[tau]->row(i).transpose();
            mean /= static_cast<double>(w);
            cache.fused.row(i).head(h) = mean.transpose();
            cache.fused.row(i).tail(h) = mean.transpose();
        }
    }

    cache.mlp.resize(n);
    Vector micro(n);
    for (int i = 0; i < n; ++i) {
        micro[i] = mlp_score(cache.fused.row(i).transpose(), params_->mlp,
                             cfg.score_clamp, cache.mlp[i]);
    }

    cache.bundle = fuse_scores(micro, cache.fused, *clustering_, params_->fusion,
                               cfg.fusion, cache.fusion);
    return cache;
}

void ModelEngine::backward_window(const WindowCache& cache,
                                  const std::vector<const Matrix*>& embeddings,
                                  const Vector& d_final, ModelParams& grads,
                                  const std::vector<Matrix*>& d_frames) const {
    const ModelConfig& cfg = params_->config;
    const int n = topo_.n;
    const int w = static_cast<int>(embeddings.size());
    const int h = cfg.lstm_hidden;

    Vector d_micro;
    Matrix d_fused;
    fuse_backward(cache.bundle, cache.fusion, *clustering_, params_->fusion, cfg.fusion,
                  d_final, d_micro, d_fused, grads.fusion);

    Vector d_row;
    for (int i = 0; i < n; ++i) {
        mlp_backward(cache.mlp[i], params_->mlp, d_micro[i], grads.mlp, &d_row);
        d_fused.row(i) += d_row.transpose();
    }

    if (cfg.temporal == TemporalMode::BiLstm) {
        Matrix d_seq;
        for (int i = 0; i < n; ++i) {
            lstm_backward(cache.lstm_fwd[i], params_->lstm_fwd,
                          d_fused.row(i).head(h).transpose(), grads.lstm_fwd, &d_seq);
            for (int tau = 0; tau < w; ++tau) d_frames[tau]->row(i) += d_seq.row(tau);
            lstm_backward(cache.lstm_bwd[i], params_->lstm_bwd,
                          d_fused.row(i).tail(h).transpose(), grads.lstm_bwd, &d_seq);
            for (int tau = 0; tau < w; ++tau) {
                d_frames[w - 1 - tau]->row(i) += d_seq.row(tau);
            }
        }
    } else {
        for (int i = 0; i < n; ++i) {
            const Vector d_mean = (d_fused.row(i).head(h) + d_fused.row(i).tail(h))
                                      .transpose() /
                                  static_cast<double>(w);
            for (int tau = 0; tau < w; ++tau) d_frames[tau]->row(i) += d_mean.transpose();
        }
    }
}

void ModelEngine::backward_frame(const FrameCache& cache, const Matrix& d_embedding,
                                 ModelParams& grads, Matrix* d_features) const {
    gat_backward_frame(cache, topo_, *params_, d_embedding, grads, d_features);
}

ScoreSeries ModelEngine::score_series(const FeatureTensor& tensor,
                                      const InferenceOptions& options) const {
    const int T = tensor.steps();
    const int w = params_->config.window;
    if (T < w) throw std::invalid_argument("series shorter than the model window");

    ScoreSeries series;
    series.first_scored = w - 1;

    // Encode every frame once; retain embeddings (and attention if asked).
    std::vector<Matrix> embeddings(T);
    if (options.keep_attention) series.attention.resize(T);
    for (int t = 0; t < T; ++t) {
        FrameCache frame = encode_frame(tensor.frames[t]);
        embeddings[t] = frame.output();
        if (options.keep_attention) {
            const std::size_t first_layer =
                options.keep_all_layers ? 0 : frame.layers.size() - 1;
            for (std::size_t l = first_layer; l < frame.layers.size(); ++l) {
                const auto& alpha = frame.layers[l].alpha;
                Matrix snapshot(static_cast<Eigen::Index>(alpha.size()), topo_.nnz());
                for (std::size_t k = 0; k < alpha.size(); ++k) {
                    for (int idx = 0; idx < topo_.nnz(); ++idx) {
                        snapshot(static_cast<Eigen::Index>(k), idx) = alpha[k][idx];
                    }
                }
                series.attention[t].layers.push_back(std::move(snapshot));
            }
        }
    }

    std::vector<const Matrix*> window(w);
    for (int t = w - 1; t < T; ++t) {
        for (int tau = 0; tau < w; ++tau) window[tau] = &embeddings[t - w + 1 + tau];
        series.bundles.push_back(score_window(window).bundle);
    }
    return series;
}

double ModelEngine::window_micro_score(const std::vector<Matrix>& window_features,
                                       int target_node) const {
    std::vector<FrameCache> frames;
    frames.reserve(window_features.size());
    for (const Matrix& x : window_features) frames.push_back(encode_frame(x));
    std::vector<const Matrix*> embeddings;
    for (const FrameCache& f : frames) embeddings.push_back(&f.output());
    return score_window(embeddings).bundle.micro[target_node];
}

std::vector<Matrix> ModelEngine::input_gradient(
    const std::vector<Matrix>& window_features, int target_node) const {
    const int w = static_cast<int>(window_features.size());
    std::vector<FrameCache> frames;
    frames.reserve(window_features.size());
    for (const Matrix& x : window_features) frames.push_back(encode_frame(x));
    std::vector<const Matrix*> embeddings;
    for (const FrameCache& f : frames) embeddings.push_back(&f.output());

    WindowCache cache = score_window(embeddings);

    // Gradient of the target node's micro score (pre-fusion detection score).
    ModelParams grads = ModelParams::zeros_like(*params_);
    const int n = topo_.n;
    Vector d_fused_row;
    Matrix d_fused = Matrix::Zero(n, cache.fused.cols());
    mlp_backward(cache.mlp[target_node], params_->mlp, 1.0, grads.mlp, &d_fused_row);
    d_fused.row(target_node) = d_fused_row.transpose();

    const ModelConfig& cfg = params_->config;
    const int h = cfg.lstm_hidden;
    std::vector<Matrix> d_frames(w, Matrix::Zero(n, cfg.embed_dim));
    if (cfg.temporal == TemporalMode::BiLstm) {
        Matrix d_seq;
        lstm_backward(cache.lstm_fwd[target_node], params_->lstm_fwd,
                      d_fused.row(target_node).head(h).transpose(), grads.lstm_fwd,
                      &d_seq);
        for (int tau = 0; tau < w; ++tau) {
            d_frames[tau].row(target_node) += d_seq.row(tau);
        }
        lstm_backward(cache.lstm_bwd[target_node], params_->lstm_bwd,
                      d_fused.row(target_node).tail(h).transpose(), grads.lstm_bwd,
                      &d_seq);
        for (int tau = 0; tau < w; ++tau) {
            d_frames[w - 1 - tau].row(target_node) += d_seq.row(tau);
        }
    } else {
        const Vector d_mean = (d_fused.row(target_node).head(h) +
                               d_fused.row(target_node).tail(h))
                                  .transpose() /
                              static_cast<double>(w);
        for (int tau = 0; tau < w; ++tau) {
            d_frames[tau].row(target_node) += d_mean.transpose();
        }
    }

    std::vector<Matrix> d_inputs(w);
    for (int tau = 0; tau < w; ++tau) {
        backward_frame(frames[tau], d_frames[tau], grads, &d_inputs[tau]);
    }
    return d_inputs;
}

}  // namespace hydronet
