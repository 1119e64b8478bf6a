#include "hydronet/multiscale.hpp"

#include <algorithm>
#include <cmath>

namespace hydronet {

std::vector<std::vector<int>> cluster_members(const Clustering& clustering) {
    std::vector<std::vector<int>> members(clustering.count);
    for (std::size_t i = 0; i < clustering.assignment.size(); ++i) {
        members[clustering.assignment[i]].push_back(static_cast<int>(i));
    }
    return members;
}

double attention_pool(const std::vector<int>& members, const Vector& micro,
                      const Matrix& fused, const FusionParams& params,
                      std::vector<double>* beta_out, Matrix* tanh_out) {
    if (members.empty()) throw std::invalid_argument("attention_pool: empty cluster");
    const Eigen::Index pool_dim = params.W_pool.rows();
    Matrix q(static_cast<Eigen::Index>(members.size()), pool_dim);
    std::vector<double> logits(members.size());
    for (std::size_t m = 0; m < members.size(); ++m) {
        Vector pre = params.W_pool * fused.row(members[m]).transpose();
        q.row(static_cast<Eigen::Index>(m)) = pre.array().tanh().matrix().transpose();
        logits[m] = params.v.dot(q.row(static_cast<Eigen::Index>(m)).transpose());
    }
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    std::vector<double> beta(members.size());
    double total = 0.0;
    for (std::size_t m = 0; m < members.size(); ++m) {
        beta[m] = std::exp(logits[m] - max_logit);
        total += beta[m];
    }
    double meso = 0.0;
    for (std::size_t m = 0; m < members.size(); ++m) {
        beta[m] /= total;
        meso += beta[m] * micro[members[m]];
    }
    if (beta_out != nullptr) *beta_out = std::move(beta);
    if (tanh_out != nullptr) *tanh_out = std::move(q);
    return meso;
}

ScoreBundle fuse_scores(const Vector& micro, const Matrix& fused,
                        const Clustering& clustering, const FusionParams& params,
                        FusionMode mode, FusionCache& cache) {
    const int n = static_cast<int>(micro.size());
    const auto members = cluster_members(clustering);

    ScoreBundle bundle;
    bundle.micro = micro;
    bundle.meso.resize(clustering.count);
    cache.fused = fused;
    cache.beta.resize(clustering.count);
    cache.pooled_tanh.resize(clustering.count);

    for (int c = 0; c < clustering.count; ++c) {
        bundle.meso[c] = attention_pool(members[c], micro, fused, params,
                                        &cache.beta[c], &cache.pooled_tanh[c]);
    }

    bundle.macro = micro.mean();
    cache.micro_mean = bundle.macro;
    cache.micro_std = std::sqrt((micro.array() - cache.micro_mean).square().mean());

    cache.argmax_cluster = 0;
    for (int c = 1; c < clustering.count; ++c) {
        if (bundle.meso[c] > bundle.meso[cache.argmax_cluster]) cache.argmax_cluster = c;
    }

    bundle.s << cache.micro_std, bundle.meso[cache.argmax_cluster], bundle.macro;

    switch (mode) {
        case FusionMode::Adaptive: {
            Eigen::Vector3d z = params.W_lambda * bundle.s;
            const double zmax = z.maxCoeff();
            Eigen::Vector3d e = (z.array() - zmax).exp();
            bundle.lambda = e / e.sum();
            break;
        }
        case FusionMode::MicroOnly:
            bundle.lambda << 1.0, 0.0, 0.0;
            break;
        case FusionMode::EqualWeights:
            bundle.lambda.setConstant(1.0 / 3.0);
            break;
    }

    bundle.final.resize(n);
    for (int i = 0; i < n; ++i) {
        bundle.final[i] = bundle.lambda[0] * micro[i] +
                          bundle.lambda[1] * bundle.meso[clustering.assignment[i]] +
                          bundle.lambda[2] * bundle.macro;
    }
    return bundle;
}

void fuse_backward(const ScoreBundle& bundle, const FusionCache& cache,
                   const Clustering& clustering, const FusionParams& params,
                   FusionMode mode, const Vector& d_final, Vector& d_micro,
                   Matrix& d_fused, FusionParams& grads) {
    const int n = static_cast<int>(bundle.micro.size());
    const auto members = cluster_members(clustering);

    d_micro.setZero(n);
    d_fused.setZero(cache.fused.rows(), cache.fused.cols());
    Vector d_meso = Vector::Zero(clustering.count);
    double d_macro = 0.0;
    Eigen::Vector3d d_lambda = Eigen::Vector3d::Zero();

    // Through the convex combination.
    for (int i = 0; i < n; ++i) {
        const int c = clustering.assignment[i];
        d_micro[i] += bundle.lambda[0] * d_final[i];
        d_meso[c] += bundle.lambda[1] * d_final[i];
        d_macro += bundle.lambda[2] * d_final[i];
        d_lambda[0] += d_final[i] * bundle.micro[i];
        d_lambda[1] += d_final[i] * bundle.meso[c];
        d_lambda[2] += d_final[i] * bundle.macro;
    }

    // Through the adaptive softmax and the scale summary s.
    if (mode == FusionMode::Adaptive) {
        const double inner = bundle.lambda.dot(d_lambda);
        Eigen::Vector3d d_z = bundle.lambda.array() * (d_lambda.array() - inner);
        grads.W_lambda.noalias() += d_z * bundle.s.transpose();
        const Eigen::Vector3d d_s = params.W_lambda.transpose() * d_z;

        if (cache.micro_std > 0.0) {
            for (int i = 0; i < n; ++i) {
                d_micro[i] += d_s[0] * (bundle.micro[i] - cache.micro_mean) /
                              (static_cast<double>(n) * cache.micro_std);
            }
        }
        d_meso[cache.argmax_cluster] += d_s[1];
        d_macro += d_s[2];
    }

    // macro = mean(micro)
    d_micro.array() += d_macro / static_cast<double>(n);

    // Attention pooling per cluster.
    for (int c = 0; c < clustering.count; ++c) {
        const auto& mem = members[c];
        const auto& beta = cache.beta[c];
        const Matrix& q = cache.pooled_tanh[c];

        std::vector<double> d_beta(mem.size());
        double inner = 0.0;
        for (std::size_t m = 0; m < mem.size(); ++m) {
            d_micro[mem[m]] += d_meso[c] * beta[m];
            d_beta[m] = d_meso[c] * bundle.micro[mem[m]];
            inner += beta[m] * d_beta[m];
        }
        for (std::size_t m = 0; m < mem.size(); ++m) {
            const double d_u = beta[m] * (d_beta[m] - inner);
            const Vector q_row = q.row(static_cast<Eigen::Index>(m)).transpose();
            grads.v.noalias() += d_u * q_row;
            const Vector d_pre =
                (d_u * params.v.array() * (1.0 - q_row.array().square())).matrix();
            grads.W_pool.noalias() += d_pre * cache.fused.row(mem[m]);
            d_fused.row(mem[m]) += (params.W_pool.transpose() * d_pre).transpose();
        }
    }
}

}  // namespace hydronet
