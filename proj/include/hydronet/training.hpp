// Composite loss (BCE + physics regularizer + spatio-temporal consistency),
// exact reverse-mode gradients through the full model, Adam with cosine
// annealing, early stopping on validation F1, and finite-difference gradient
// verification.

#pragma once

#include "hydronet/engine.hpp"

namespace hydronet {

// ----------------------------------------------------------------------------
// Losses
// ----------------------------------------------------------------------------

struct LossWeights {
    double lambda_p = 0.1;
    double lambda_c = 0.05;
};

struct LossBreakdown {
    double bce = 0.0;
    double physics = 0.0;
    double consist = 0.0;
    double total = 0.0;
};

/// Mean negative log-likelihood over all (sample, node) entries.
/// Rows are batch samples, columns nodes; scores must be clamped away from 0/1.
double bce_loss(const Matrix& scores, const Eigen::MatrixXi& labels);

/// Mean over (sample, node) of 1(y=0) * max(phi_mass, phi_energy).
/// phi_max holds the per-node max of the two violation columns.
double physics_loss(const Matrix& phi_max, const Eigen::MatrixXi& labels);

/// Mean squared score difference over edges, averaged over batch samples.
double consistency_loss(const Matrix& scores, const NetworkGraph& g);

// ----------------------------------------------------------------------------
// Optimizer
// ----------------------------------------------------------------------------

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    Vector m, v;
    int step = 0;
    AdamConfig config;

    static AdamState init(const ModelParams& params);
};

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               double eta);

/// eta_e = eta_min + (eta0 - eta_min) (1 + cos(pi e / E)) / 2.
double cosine_anneal(int epoch, int total_epochs, double eta0, double eta_min);

// ----------------------------------------------------------------------------
// Datasets and batches
// ----------------------------------------------------------------------------

struct Dataset {
    const FeatureTensor* features = nullptr;
    const Eigen::MatrixXi* labels = nullptr;  // T x N, aligned with features
    std::vector<int> window_ends;             // scored timesteps (each >= window-1)
    std::vector<int> attack_onsets;           // absolute t, for validation TTD

    static Dataset over(const FeatureTensor& features, const Eigen::MatrixXi& labels,
                        int window, int stride = 1);
};

/// Forward (and optionally backward) over one mini-batch of window samples.
/// Frame embeddings shared across windows are encoded once.
LossBreakdown compute_batch(const ModelEngine& engine, const Dataset& data,
                            const std::vector<int>& batch_ends,
                            const LossWeights& weights, ModelParams* grads);

// ----------------------------------------------------------------------------
// Training loop
// ----------------------------------------------------------------------------

struct TrainConfig {
    double eta0 = 1e-3;
    double eta_min = 1e-5;
    int batch = 32;
    int epochs = 60;
    int validate_every = 5;  // epochs
    int patience = 2;        // validations without F1 improvement
    std::uint64_t seed = 0;
    LossWeights weights;
    double alarm_tau = 0.5;
    int sustain_k = 2;
    std::string grad_mode = "analytic";  // or "check"
};

struct EpochStats {
    int epoch = 0;
    double bce = 0.0, physics = 0.0, consist = 0.0, total = 0.0;
    double eta = 0.0;
    double val_f1 = std::numeric_limits<double>::quiet_NaN();
    double val_ttd = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochStats> history;
    int best_epoch = -1;
    double best_val_f1 = 0.0;
};

TrainResult train(const NetworkGraph& g, const Clustering& clustering,
                  const ModelConfig& model_config, const Dataset& train_data,
                  const Dataset& val_data, const TrainConfig& config);

/// Training history as CSV (epoch, bce, physics, consist, total, eta, val_f1,
/// val_ttd).
std::string history_csv(const std::vector<EpochStats>& history);

// ----------------------------------------------------------------------------
// Gradient verification
// ----------------------------------------------------------------------------

struct GradCheckGroup {
    std::string name;
    double rel_error = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckGroup> groups;
    double worst = 0.0;
};

/// Analytic gradients vs central finite differences on one batch.
/// Group error = ||g_a - g_fd|| / max(||g_a|| + ||g_fd||, 1e-12).
GradCheckReport gradient_check(const NetworkGraph& g, const Clustering& clustering,
                               ModelParams params, const Dataset& data,
                               const std::vector<int>& batch_ends,
                               const LossWeights& weights, double fd_step = 1e-4);

}  // namespace hydronet
