// Detection metrics and statistical machinery: network-level alarms, F1,
// time-to-detection, percentile bootstrap, Cohen's d, and Spearman rank
// correlation with tie correction.

#pragma once

#include "hydronet/core.hpp"
#include "hydronet/multiscale.hpp"

#include <functional>
#include <optional>

namespace hydronet {

struct Metrics {
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    std::optional<double> ttd_hours;  // absent when no attack was detected
    int undetected = 0;
    double alarm_threshold_tau = 0.5;
    int sustain_k = 2;
};

/// alarm_t = 1 iff max_i final_t(v_i) > tau (strict).
std::vector<int> network_alarm(const std::vector<ScoreBundle>& bundles, double tau);

/// Network-level truth: OR over node labels, for rows first_t .. T-1.
std::vector<int> network_truth(const Eigen::MatrixXi& labels, int first_t);

/// Timestep-wise precision/recall/F1; F1 = 0 when TP = 0.
Metrics f1_score(const std::vector<int>& pred, const std::vector<int>& truth);

struct TtdResult {
    std::optional<double> mean_hours;  // over detected attacks only
    int undetected = 0;
    std::vector<std::optional<double>> per_attack;
};

/// Per attack: hours from onset to the start of the first run of sustain_k
/// consecutive alarms at or after the onset. alarms[k] covers timestep
/// first_t + k.
TtdResult time_to_detection(const std::vector<int>& alarms, int first_t,
                            const std::vector<int>& attack_onsets, int sustain_k);

struct BootstrapCI {
    double point = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    int n_resamples = 1000;
    std::uint64_t seed = 0;
    int skipped = 0;  // resamples where the metric was undefined
};

/// Percentile bootstrap (2.5 / 97.5) over resampled sample indices.
/// `metric` receives an index multiset into the underlying samples and may
/// return nullopt (resample skipped and counted).
BootstrapCI bootstrap_ci(
    const std::function<std::optional<double>(const std::vector<int>&)>& metric,
    int sample_count, int n_resamples, std::uint64_t seed);

/// (mean a - mean b) / pooled sample std. Throws on zero pooled std.
double cohens_d(const std::vector<double>& a, const std::vector<double>& b);

/// Spearman rank correlation with average ranks for ties.
/// Throws when either side has zero rank variance.
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace hydronet
