#include "hydronet/gat_core.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace hydronet {

GraphTopology GraphTopology::build(const NetworkGraph& g) {
    GraphTopology topo;
    topo.n = g.node_count();
    topo.offsets.resize(topo.n + 1, 0);
    for (int i = 0; i < topo.n; ++i) {
        const auto& support = g.support(i);
        topo.offsets[i + 1] = topo.offsets[i] + static_cast<int>(support.size());
        topo.targets.insert(topo.targets.end(), support.begin(), support.end());
    }
    return topo;
}

GraphTopology GraphTopology::from_edges(int n,
                                        const std::vector<std::pair<int, int>>& edges) {
    std::vector<std::set<int>> support(n);
    for (int i = 0; i < n; ++i) support[i].insert(i);
    for (const auto& [a, b] : edges) {
        support[a].insert(b);
        support[b].insert(a);
    }
    GraphTopology topo;
    topo.n = n;
    topo.offsets.resize(n + 1, 0);
    for (int i = 0; i < n; ++i) {
        topo.offsets[i + 1] = topo.offsets[i] + static_cast<int>(support[i].size());
        topo.targets.insert(topo.targets.end(), support[i].begin(), support[i].end());
    }
    return topo;
}

namespace {

inline double leaky_relu(double x, double slope) { return x > 0.0 ? x : slope * x; }
inline double leaky_relu_grad(double x, double slope) { return x > 0.0 ? 1.0 : slope; }
inline double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
inline double elu_grad(double x) { return x > 0.0 ? 1.0 : std::exp(x); }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

// ----------------------------------------------------------------------------
// GAT layer
// ----------------------------------------------------------------------------

GatLayerCache gat_layer_forward(const Matrix& input, const GraphTopology& topo,
                                const GatLayerParams& params, double leaky_slope,
                                AttentionMode mode) {
    const int n = topo.n;
    const int heads = static_cast<int>(params.heads.size());
    const Eigen::Index d_out = params.heads.front().W.rows();
    if (input.rows() != n) throw std::invalid_argument("gat: node count mismatch");
    if (input.cols() != params.heads.front().W.cols()) {
        throw std::invalid_argument("gat: feature dimension mismatch");
    }
    if (!input.allFinite()) throw NumericalError("gat: non-finite input");

    GatLayerCache cache;
    cache.input = input;
    cache.U.resize(heads);
    cache.s.resize(heads);
    cache.t.resize(heads);
    cache.pre.resize(heads);
    cache.alpha.resize(heads);
    cache.M = Matrix::Zero(n, d_out);

    for (int k = 0; k < heads; ++k) {
        const GatHead& head = params.heads[k];
        Matrix& U = cache.U[k];
        U.noalias() = input * head.W.transpose();

        std::vector<double>& alpha = cache.alpha[k];
        alpha.resize(topo.nnz());

        if (mode == AttentionMode::Learned) {
            const auto a_src = head.a.head(d_out);
            const auto a_dst = head.a.tail(d_out);
            cache.s[k].noalias() = U * a_src;
            cache.t[k].noalias() = U * a_dst;
            std::vector<double>& pre = cache.pre[k];
            pre.resize(topo.nnz());
            for (int i = 0; i < n; ++i) {
                const int lo = topo.offsets[i], hi = topo.offsets[i + 1];
                double max_e = -std::numeric_limits<double>::infinity();
                for (int idx = lo; idx < hi; ++idx) {
                    pre[idx] = cache.s[k][i] + cache.t[k][topo.targets[idx]];
                    max_e = std::max(max_e, leaky_relu(pre[idx], leaky_slope));
                }
                double total = 0.0;
                for (int idx = lo; idx < hi; ++idx) {
                    alpha[idx] = std::exp(leaky_relu(pre[idx], leaky_slope) - max_e);
                    total += alpha[idx];
                }
                for (int idx = lo; idx < hi; ++idx) alpha[idx] /= total;
            }
        } else {
            for (int i = 0; i < n; ++i) {
                const int lo = topo.offsets[i], hi = topo.offsets[i + 1];
                const double w = 1.0 / static_cast<double>(hi - lo);
                for (int idx = lo; idx < hi; ++idx) alpha[idx] = w;
            }
        }

        for (int i = 0; i < n; ++i) {
            const int lo = topo.offsets[i], hi = topo.offsets[i + 1];
            for (int idx = lo; idx < hi; ++idx) {
                cache.M.row(i) += alpha[idx] * U.row(topo.targets[idx]);
            }
        }
    }
    cache.M /= static_cast<double>(heads);

    cache.output.resize(n, d_out);
    for (Eigen::Index c = 0; c < d_out; ++c) {
        for (int i = 0; i < n; ++i) cache.output(i, c) = elu(cache.M(i, c));
    }
    return cache;
}

Matrix gat_layer_backward(const GatLayerCache& cache, const GraphTopology& topo,
                          const GatLayerParams& params, double leaky_slope,
                          AttentionMode mode, const Matrix& d_output,
                          GatLayerParams& grads) {
    const int n = topo.n;
    const int heads = static_cast<int>(params.heads.size());
    const Eigen::Index d_out = params.heads.front().W.rows();

    // Through the ELU and the 1/K head average.
    Matrix dM(n, d_out);
    for (Eigen::Index c = 0; c < d_out; ++c) {
        for (int i = 0; i < n; ++i) {
            dM(i, c) = d_output(i, c) * elu_grad(cache.M(i, c));
        }
    }
    dM /= static_cast<double>(heads);

    Matrix d_input = Matrix::Zero(cache.input.rows(), cache.input.cols());

    std::vector<double> d_alpha(topo.nnz());
    for (int k = 0; k < heads; ++k) {
        const GatHead& head = params.heads[k];
        const Matrix& U = cache.U[k];
        const std::vector<double>& alpha = cache.alpha[k];

        Matrix dU = Matrix::Zero(n, d_out);
        for (int i = 0; i < n; ++i) {
            const int lo = topo.offsets[i], hi = topo.offsets[i + 1];
            for (int idx = lo; idx < hi; ++idx) {
                const int j = topo.targets[idx];
                d_alpha[idx] = dM.row(i).dot(U.row(j));
                dU.row(j) += alpha[idx] * dM.row(i);
            }
        }

        if (mode == AttentionMode::Learned) {
            const std::vector<double>& pre = cache.pre[k];
            const auto a_src = head.a.head(d_out);
            const auto a_dst = head.a.tail(d_out);
            Vector ds = Vector::Zero(n);
            Vector dt = Vector::Zero(n);
            for (int i = 0; i < n; ++i) {
                const int lo = topo.offsets[i], hi = topo.offsets[i + 1];
                double inner = 0.0;
                for (int idx = lo; idx < hi; ++idx) inner += alpha[idx] * d_alpha[idx];
                for (int idx = lo; idx < hi; ++idx) {
                    const double de = alpha[idx] * (d_alpha[idx] - inner);
                    const double dpre = de * leaky_relu_grad(pre[idx], leaky_slope);
                    ds[i] += dpre;
                    dt[topo.targets[idx]] += dpre;
                }
            }
            GatHead& g = grads.heads[k];
            g.a.head(d_out).noalias() += U.transpose() * ds;
            g.a.tail(d_out).noalias() += U.transpose() * dt;
            dU.noalias() += ds * a_src.transpose();
            dU.noalias() += dt * a_dst.transpose();
        }

        grads.heads[k].W.noalias() += dU.transpose() * cache.input;
        d_input.noalias() += dU * head.W;
    }
    return d_input;
}

FrameCache gat_forward_frame(const Matrix& features, const GraphTopology& topo,
                             const ModelParams& params) {
    FrameCache cache;
    cache.layers.reserve(params.gat.size());
    const Matrix* current = &features;
    for (const GatLayerParams& layer : params.gat) {
        cache.layers.push_back(gat_layer_forward(*current, topo, layer,
                                                 params.config.leaky_slope,
                                                 params.config.attention));
        current = &cache.layers.back().output;
    }
    return cache;
}

void gat_backward_frame(const FrameCache& cache, const GraphTopology& topo,
                        const ModelParams& params, const Matrix& d_embedding,
                        ModelParams& grads, Matrix* d_features) {
    Matrix d = d_embedding;
    for (int l = static_cast<int>(params.gat.size()) - 1; l >= 0; --l) {
        d = gat_layer_backward(cache.layers[l], topo, params.gat[l],
                               params.config.leaky_slope, params.config.attention, d,
                               grads.gat[l]);
    }
    if (d_features != nullptr) *d_features = std::move(d);
}

// ----------------------------------------------------------------------------
// LSTM
// ----------------------------------------------------------------------------

Vector lstm_forward(const Matrix& x_seq, const LstmParams& params, LstmCache& cache) {
    const Eigen::Index steps = x_seq.rows();
    const Eigen::Index h = params.Wh.cols();
    cache.x = x_seq;
    cache.gate_i.resize(steps, h);
    cache.gate_f.resize(steps, h);
    cache.gate_g.resize(steps, h);
    cache.gate_o.resize(steps, h);
    cache.c.resize(steps, h);
    cache.h.resize(steps, h);
    cache.tanh_c.resize(steps, h);

    Vector h_prev = Vector::Zero(h);
    Vector c_prev = Vector::Zero(h);
    Vector z(4 * h);
    for (Eigen::Index t = 0; t < steps; ++t) {
        z.noalias() = params.Wx * x_seq.row(t).transpose();
        z.noalias() += params.Wh * h_prev;
        z += params.b;
        for (Eigen::Index u = 0; u < h; ++u) {
            const double gi = sigmoid(z[u]);
            const double gf = sigmoid(z[h + u]);
            const double gg = std::tanh(z[2 * h + u]);
            const double go = sigmoid(z[3 * h + u]);
            const double c = gf * c_prev[u] + gi * gg;
            const double tc = std::tanh(c);
            cache.gate_i(t, u) = gi;
            cache.gate_f(t, u) = gf;
            cache.gate_g(t, u) = gg;
            cache.gate_o(t, u) = go;
            cache.c(t, u) = c;
            cache.tanh_c(t, u) = tc;
            cache.h(t, u) = go * tc;
        }
        h_prev = cache.h.row(t).transpose();
        c_prev = cache.c.row(t).transpose();
    }
    return h_prev;
}

void lstm_backward(const LstmCache& cache, const LstmParams& params,
                   const Vector& d_h_final, LstmParams& grads, Matrix* d_x_seq) {
    const Eigen::Index steps = cache.x.rows();
    const Eigen::Index h = params.Wh.cols();
    if (d_x_seq != nullptr) d_x_seq->setZero(steps, cache.x.cols());

    Vector dh = d_h_final;
    Vector dc = Vector::Zero(h);
    Vector dz(4 * h);
    for (Eigen::Index t = steps - 1; t >= 0; --t) {
        for (Eigen::Index u = 0; u < h; ++u) {
            const double gi = cache.gate_i(t, u);
            const double gf = cache.gate_f(t, u);
            const double gg = cache.gate_g(t, u);
            const double go = cache.gate_o(t, u);
            const double tc = cache.tanh_c(t, u);
            const double c_prev = t > 0 ? cache.c(t - 1, u) : 0.0;

            const double d_go = dh[u] * tc;
            const double d_c = dc[u] + dh[u] * go * (1.0 - tc * tc);
            const double d_gi = d_c * gg;
            const double d_gg = d_c * gi;
            const double d_gf = d_c * c_prev;

            dz[u] = d_gi * gi * (1.0 - gi);
            dz[h + u] = d_gf * gf * (1.0 - gf);
            dz[2 * h + u] = d_gg * (1.0 - gg * gg);
            dz[3 * h + u] = d_go * go * (1.0 - go);
            dc[u] = d_c * gf;
        }
        grads.Wx.noalias() += dz * cache.x.row(t);
        if (t > 0) grads.Wh.noalias() += dz * cache.h.row(t - 1);
        grads.b += dz;
        if (d_x_seq != nullptr) d_x_seq->row(t) = (params.Wx.transpose() * dz).transpose();
        dh.noalias() = params.Wh.transpose() * dz;
    }
}

// ----------------------------------------------------------------------------
// Scoring MLP
// ----------------------------------------------------------------------------

double mlp_score(const Vector& input, const MlpParams& params, double clamp,
                 MlpCache& cache) {
    cache.input = input;
    cache.hidden_pre.noalias() = params.W1 * input;
    cache.hidden_pre += params.b1;
    cache.hidden = cache.hidden_pre.cwiseMax(0.0);
    cache.out_pre = (params.W2 * cache.hidden)(0) + params.b2[0];
    const double raw = sigmoid(cache.out_pre);
    cache.score = std::clamp(raw, clamp, 1.0 - clamp);
    cache.clamped = raw != cache.score;
    return cache.score;
}

void mlp_backward(const MlpCache& cache, const MlpParams& params, double d_score,
                  MlpParams& grads, Vector* d_input) {
    if (cache.clamped) {
        if (d_input != nullptr) d_input->setZero(cache.input.size());
        return;
    }
    const double d_out = d_score * cache.score * (1.0 - cache.score);
    grads.W2.noalias() += d_out * cache.hidden.transpose();
    grads.b2[0] += d_out;
    Vector d_hidden = params.W2.transpose() * d_out;
    for (Eigen::Index u = 0; u < d_hidden.size(); ++u) {
        if (cache.hidden_pre[u] <= 0.0) d_hidden[u] = 0.0;
    }
    grads.W1.noalias() += d_hidden * cache.input.transpose();
    grads.b1 += d_hidden;
    if (d_input != nullptr) d_input->noalias() = params.W1.transpose() * d_hidden;
}

}  // namespace hydronet
