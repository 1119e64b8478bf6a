#include "hydronet/training.hpp"

#include "hydronet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace hydronet {

// ----------------------------------------------------------------------------
// Losses
// ----------------------------------------------------------------------------

double bce_loss(const Matrix& scores, const Eigen::MatrixXi& labels) {
    if (scores.rows() != labels.rows() || scores.cols() != labels.cols()) {
        throw std::invalid_argument("bce_loss: shape mismatch");
    }
    double total = 0.0;
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
        for (Eigen::Index c = 0; c < scores.cols(); ++c) {
            const double s = scores(r, c);
            total += labels(r, c) ? -std::log(s) : -std::log1p(-s);
        }
    }
    return total / static_cast<double>(scores.size());
}

double physics_loss(const Matrix& phi_max, const Eigen::MatrixXi& labels) {
    if (phi_max.rows() != labels.rows() || phi_max.cols() != labels.cols()) {
        throw std::invalid_argument("physics_loss: shape mismatch");
    }
    double total = 0.0;
    for (Eigen::Index r = 0; r < phi_max.rows(); ++r) {
        for (Eigen::Index c = 0; c < phi_max.cols(); ++c) {
            if (labels(r, c) == 0) total += phi_max(r, c);
        }
    }
    return total / static_cast<double>(phi_max.size());
}

double consistency_loss(const Matrix& scores, const NetworkGraph& g) {
    if (g.edge_count() == 0) return 0.0;
    double total = 0.0;
    for (Eigen::Index b = 0; b < scores.rows(); ++b) {
        for (int e = 0; e < g.edge_count(); ++e) {
            const double diff = scores(b, g.edge_from(e)) - scores(b, g.edge_to(e));
            total += diff * diff;
        }
    }
    return total / (static_cast<double>(scores.rows()) *
                    static_cast<double>(g.edge_count()));
}

// ----------------------------------------------------------------------------
// Optimizer
// ----------------------------------------------------------------------------

AdamState AdamState::init(const ModelParams& params) {
    AdamState state;
    state.m = Vector::Zero(params.parameter_count());
    state.v = Vector::Zero(params.parameter_count());
    return state;
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               double eta) {
    Vector p = params.flatten();
    const Vector g = grads.flatten();
    if (p.size() != g.size() || p.size() != state.m.size()) {
        throw std::invalid_argument("adam_step: shape mismatch");
    }
    state.step += 1;
    const double b1 = state.config.beta1, b2 = state.config.beta2;
    state.m = b1 * state.m + (1.0 - b1) * g;
    state.v = b2 * state.v.array().matrix() + (1.0 - b2) * g.cwiseProduct(g);
    const double bc1 = 1.0 - std::pow(b1, state.step);
    const double bc2 = 1.0 - std::pow(b2, state.step);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        p[i] -= eta * mhat / (std::sqrt(vhat) + state.config.epsilon);
    }
    params.unflatten(p);
}

double cosine_anneal(int epoch, int total_epochs, double eta0, double eta_min) {
    if (total_epochs <= 0) return eta0;
    const double phase = M_PI * static_cast<double>(epoch) /
                         static_cast<double>(total_epochs);
    return eta_min + 0.5 * (eta0 - eta_min) * (1.0 + std::cos(phase));
}

// ----------------------------------------------------------------------------
// Batches
// ----------------------------------------------------------------------------

Dataset Dataset::over(const FeatureTensor& features, const Eigen::MatrixXi& labels,
                      int window, int stride) {
    Dataset d;
    d.features = &features;
    d.labels = &labels;
    for (int t = window - 1; t < features.steps(); t += stride) {
        d.window_ends.push_back(t);
    }
    return d;
}

LossBreakdown compute_batch(const ModelEngine& engine, const Dataset& data,
                            const std::vector<int>& batch_ends,
                            const LossWeights& weights, ModelParams* grads) {
    const FeatureTensor& tensor = *data.features;
    const Eigen::MatrixXi& labels = *data.labels;
    const NetworkGraph& g = engine.network();
    const ModelConfig& cfg = engine.params().config;
    const int w = cfg.window;
    const int n = tensor.node_count();
    const int batch = static_cast<int>(batch_ends.size());
    if (batch == 0) throw std::invalid_argument("compute_batch: empty batch");

    // Distinct frames across the batch, encoded once.
    std::vector<int> frame_ids;
    for (int t : batch_ends) {
        if (t < w - 1 || t >= tensor.steps()) {
            throw std::invalid_argument("compute_batch: window end out of range");
        }
        for (int tau = t - w + 1; tau <= t; ++tau) frame_ids.push_back(tau);
    }
    std::sort(frame_ids.begin(), frame_ids.end());
    frame_ids.erase(std::unique(frame_ids.begin(), frame_ids.end()), frame_ids.end());
    std::unordered_map<int, int> frame_pos;
    for (std::size_t k = 0; k < frame_ids.size(); ++k) {
        frame_pos[frame_ids[k]] = static_cast<int>(k);
    }
    std::vector<FrameCache> frames;
    frames.reserve(frame_ids.size());
    for (int id : frame_ids) frames.push_back(engine.encode_frame(tensor.frames[id]));

    // Window forwards.
    std::vector<WindowCache> caches(batch);
    Matrix scores(batch, n);
    Matrix phi_max(batch, n);
    Eigen::MatrixXi batch_labels(batch, n);
    std::vector<std::vector<const Matrix*>> windows(batch);
    for (int b = 0; b < batch; ++b) {
        const int end = batch_ends[b];
        windows[b].resize(w);
        for (int tau = 0; tau < w; ++tau) {
            windows[b][tau] = &frames[frame_pos.at(end - w + 1 + tau)].output();
        }
        caches[b] = engine.score_window(windows[b]);
        scores.row(b) = caches[b].bundle.final.transpose();
        batch_labels.row(b) = labels.row(end);
        const Matrix& frame = tensor.frames[end];
        for (int i = 0; i < n; ++i) {
            phi_max(b, i) = std::max(frame(i, kFeatPhiMass), frame(i, kFeatPhiEnergy));
        }
    }

    LossBreakdown loss;
    loss.bce = bce_loss(scores, batch_labels);
    loss.physics = physics_loss(phi_max, batch_labels);
    loss.consist = consistency_loss(scores, g);
    loss.total = loss.bce + weights.lambda_p * loss.physics +
                 weights.lambda_c * loss.consist;

    if (grads == nullptr) return loss;

    // d(total)/d(final scores); the physics term carries no parameter
    // gradient (phi values are inputs, not functions of the parameters).
    const double bce_norm = 1.0 / static_cast<double>(scores.size());
    const double consist_norm =
        g.edge_count() > 0
            ? weights.lambda_c * 2.0 /
                  (static_cast<double>(batch) * static_cast<double>(g.edge_count()))
            : 0.0;

    std::vector<Matrix> d_frame_acc(frames.size(),
                                    Matrix::Zero(n, cfg.embed_dim));
    std::vector<Matrix*> d_ptrs(w);
    for (int b = 0; b < batch; ++b) {
        Vector d_final(n);
        for (int i = 0; i < n; ++i) {
            const double s = scores(b, i);
            d_final[i] = bce_norm * (batch_labels(b, i) ? -1.0 / s : 1.0 / (1.0 - s));
        }
        if (weights.lambda_c != 0.0) {
            for (int e = 0; e < g.edge_count(); ++e) {
                const int i = g.edge_from(e), j = g.edge_to(e);
                const double diff = scores(b, i) - scores(b, j);
                d_final[i] += consist_norm * diff;
                d_final[j] -= consist_norm * diff;
            }
        }
        const int end = batch_ends[b];
        for (int tau = 0; tau < w; ++tau) {
            d_ptrs[tau] = &d_frame_acc[frame_pos.at(end - w + 1 + tau)];
        }
        engine.backward_window(caches[b], windows[b], d_final, *grads, d_ptrs);
    }
    for (std::size_t k = 0; k < frames.size(); ++k) {
        engine.backward_frame(frames[k], d_frame_acc[k], *grads);
    }
    return loss;
}

// ----------------------------------------------------------------------------
// Training loop
// ----------------------------------------------------------------------------

namespace {

struct ValidationOutcome {
    double f1 = 0.0;
    double ttd = std::numeric_limits<double>::quiet_NaN();
};

ValidationOutcome run_validation(const ModelEngine& engine, const Dataset& val,
                                 const TrainConfig& cfg) {
    const ScoreSeries series = engine.score_series(*val.features);
    const std::vector<int> alarms = network_alarm(series.bundles, cfg.alarm_tau);
    const std::vector<int> truth = network_truth(*val.labels, series.first_scored);
    ValidationOutcome out;
    out.f1 = f1_score(alarms, truth).f1;
    const TtdResult ttd = time_to_detection(alarms, series.first_scored,
                                            val.attack_onsets, cfg.sustain_k);
    if (ttd.mean_hours.has_value()) out.ttd = *ttd.mean_hours;
    return out;
}

}  // namespace

TrainResult train(const NetworkGraph& g, const Clustering& clustering,
                  const ModelConfig& model_config, const Dataset& train_data,
                  const Dataset& val_data, const TrainConfig& config) {
    if (train_data.window_ends.empty()) {
        throw std::invalid_argument("train: empty training set");
    }

    ModelParams params = ModelParams::init(model_config, config.seed);
    ModelEngine engine(g, params, clustering);
    AdamState opt = AdamState::init(params);

    if (config.grad_mode == "check") {
        const std::vector<int> probe(train_data.window_ends.begin(),
                                     train_data.window_ends.begin() +
                                         std::min<std::size_t>(
                                             2, train_data.window_ends.size()));
        const GradCheckReport report = gradient_check(g, clustering, params, train_data,
                                                      probe, config.weights);
        if (report.worst >= 1e-4) {
            throw NumericalError("gradient check failed: worst group error " +
                                 format_double(report.worst));
        }
    } else if (config.grad_mode != "analytic") {
        throw std::invalid_argument("unknown grad_mode '" + config.grad_mode + "'");
    }

    TrainResult result;
    ModelParams best = params;
    int stale_validations = 0;
    bool stopped = false;

    std::vector<int> order = train_data.window_ends;
    for (int epoch = 0; epoch < config.epochs && !stopped; ++epoch) {
        const double eta = cosine_anneal(epoch, config.epochs, config.eta0,
                                         config.eta_min);
        Rng shuffle_rng(mix_seed({config.seed, static_cast<std::uint64_t>(epoch),
                                  0x73687566ULL}));
        order = train_data.window_ends;
        shuffle_rng.shuffle(order);

        EpochStats stats;
        stats.epoch = epoch;
        stats.eta = eta;
        int batches = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch));
            const std::vector<int> batch_ends(order.begin() + start, order.begin() + stop);
            ModelParams grads = ModelParams::zeros_like(params);
            const LossBreakdown loss =
                compute_batch(engine, train_data, batch_ends, config.weights, &grads);
            adam_step(params, grads, opt, eta);
            stats.bce += loss.bce;
            stats.physics += loss.physics;
            stats.consist += loss.consist;
            stats.total += loss.total;
            ++batches;
        }
        stats.bce /= batches;
        stats.physics /= batches;
        stats.consist /= batches;
        stats.total /= batches;

        if ((epoch + 1) % config.validate_every == 0) {
            const ValidationOutcome val = run_validation(engine, val_data, config);
            stats.val_f1 = val.f1;
            stats.val_ttd = val.ttd;
            const bool strictly_better =
                val.f1 > result.best_val_f1 + 1e-12 || result.best_epoch < 0;
            if (strictly_better || val.f1 >= result.best_val_f1 - 1e-12) {
                // Ties keep the later checkpoint but still count toward patience.
                result.best_val_f1 = std::max(result.best_val_f1, val.f1);
                result.best_epoch = epoch;
                best = params;
            }
            if (strictly_better) {
                stale_validations = 0;
            } else {
                ++stale_validations;
                if (stale_validations >= config.patience) stopped = true;
            }
        }
        result.history.push_back(stats);
    }

    if (result.best_epoch < 0) {
        best = params;
        result.best_epoch = static_cast<int>(result.history.size()) - 1;
    }
    result.params = std::move(best);
    return result;
}

std::string history_csv(const std::vector<EpochStats>& history) {
    std::string csv = "epoch,bce,physics,consist,total,eta,val_f1,val_ttd\n";
    for (const EpochStats& row : history) {
        csv += std::to_string(row.epoch);
        for (double v : {row.bce, row.physics, row.consist, row.total, row.eta}) {
            csv += "," + format_double(v);
        }
        csv += "," + (std::isnan(row.val_f1) ? std::string() : format_double(row.val_f1));
        csv += "," + (std::isnan(row.val_ttd) ? std::string() : format_double(row.val_ttd));
        csv += "\n";
    }
    return csv;
}

// ----------------------------------------------------------------------------
// Gradient verification
// ----------------------------------------------------------------------------

GradCheckReport gradient_check(const NetworkGraph& g, const Clustering& clustering,
                               ModelParams params, const Dataset& data,
                               const std::vector<int>& batch_ends,
                               const LossWeights& weights, double fd_step) {
    ModelEngine engine(g, params, clustering);

    ModelParams analytic = ModelParams::zeros_like(params);
    compute_batch(engine, data, batch_ends, weights, &analytic);

    GradCheckReport report;
    params.visit([&](const std::string& name, double* values, Eigen::Index size) {
        // Locate the matching analytic array.
        const double* exact = nullptr;
        analytic.visit([&](const std::string& gname, const double* gvalues,
                           Eigen::Index) {
            if (gname == name) exact = gvalues;
        });

        double diff_sq = 0.0, exact_sq = 0.0, fd_sq = 0.0;
        for (Eigen::Index i = 0; i < size; ++i) {
            const double saved = values[i];
            values[i] = saved + fd_step;
            const double above =
                compute_batch(engine, data, batch_ends, weights, nullptr).total;
            values[i] = saved - fd_step;
            const double below =
                compute_batch(engine, data, batch_ends, weights, nullptr).total;
            values[i] = saved;
            const double fd = (above - below) / (2.0 * fd_step);
            diff_sq += (exact[i] - fd) * (exact[i] - fd);
            exact_sq += exact[i] * exact[i];
            fd_sq += fd * fd;
        }
        GradCheckGroup group;
        group.name = name;
        group.rel_error = std::sqrt(diff_sq) /
                          std::max(std::sqrt(exact_sq) + std::sqrt(fd_sq), 1e-12);
        report.worst = std::max(report.worst, group.rel_error);
        report.groups.push_back(std::move(group));
    });
    return report;
}

}  // namespace hydronet
