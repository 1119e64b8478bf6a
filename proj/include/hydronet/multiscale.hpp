// Hierarchical scoring: attention pooling of micro scores to cluster (meso)
// scores, macro averaging, and adaptive softmax fusion into final per-node
// anomaly scores.

#pragma once

#include "hydronet/clustering.hpp"
#include "hydronet/model.hpp"

namespace hydronet {

struct ScoreBundle {
    Vector micro;             // per node, (0,1)
    Vector meso;              // per cluster, (0,1)
    double macro = 0.0;
    Eigen::Vector3d s;        // [std(micro), max_k meso, macro]
    Eigen::Vector3d lambda;   // simplex weights
    Vector final;             // per node
};

struct FusionCache {
    Matrix fused;                          // N x 2h inputs (row per node)
    std::vector<std::vector<double>> beta; // per cluster, aligned with members
    std::vector<Matrix> pooled_tanh;       // per cluster: members x pool_dim
    int argmax_cluster = 0;
    double micro_mean = 0.0;
    double micro_std = 0.0;
};

/// Members of each cluster, ascending node index.
std::vector<std::vector<int>> cluster_members(const Clustering& clustering);

/// Attention-pool one cluster: beta softmax over members, meso = sum beta*micro.
double attention_pool(const std::vector<int>& members, const Vector& micro,
                      const Matrix& fused, const FusionParams& params,
                      std::vector<double>* beta_out = nullptr,
                      Matrix* tanh_out = nullptr);

/// Full fusion for one timestep.
ScoreBundle fuse_scores(const Vector& micro, const Matrix& fused,
                        const Clustering& clustering, const FusionParams& params,
                        FusionMode mode, FusionCache& cache);

/// Reverse-mode pass: accumulates d(micro), d(fused rows), and fusion-param
/// gradients from a gradient on the final scores.
void fuse_backward(const ScoreBundle& bundle, const FusionCache& cache,
                   const Clustering& clustering, const FusionParams& params,
                   FusionMode mode, const Vector& d_final, Vector& d_micro,
                   Matrix& d_fused, FusionParams& grads);

}  // namespace hydronet
