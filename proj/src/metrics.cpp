#include "hydronet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hydronet {

std::vector<int> network_alarm(const std::vector<ScoreBundle>& bundles, double tau) {
    std::vector<int> alarms(bundles.size(), 0);
    for (std::size_t k = 0; k < bundles.size(); ++k) {
        alarms[k] = bundles[k].final.maxCoeff() > tau ? 1 : 0;
    }
    return alarms;
}

std::vector<int> network_truth(const Eigen::MatrixXi& labels, int first_t) {
    std::vector<int> truth;
    for (Eigen::Index t = first_t; t < labels.rows(); ++t) {
        truth.push_back(labels.row(t).maxCoeff() > 0 ? 1 : 0);
    }
    return truth;
}

Metrics f1_score(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size()) {
        throw std::invalid_argument("f1_score: length mismatch");
    }
    int tp = 0, fp = 0, fn = 0;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        if (pred[k] && truth[k]) ++tp;
        else if (pred[k] && !truth[k]) ++fp;
        else if (!pred[k] && truth[k]) ++fn;
    }
    Metrics m;
    m.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    m.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    m.f1 = tp > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

TtdResult time_to_detection(const std::vector<int>& alarms, int first_t,
                            const std::vector<int>& attack_onsets, int sustain_k) {
    TtdResult result;
    const int last_t = first_t + static_cast<int>(alarms.size()) - 1;
    double sum = 0.0;
    int detected = 0;
    for (int onset : attack_onsets) {
        std::optional<double> ttd;
        for (int t = std::max(onset, first_t); t + sustain_k - 1 <= last_t; ++t) {
            bool sustained = true;
            for (int k = 0; k < sustain_k; ++k) {
                if (!alarms[t + k - first_t]) {
                    sustained = false;
                    break;
                }
            }
            if (sustained) {
                ttd = static_cast<double>(t - onset);
                break;
            }
        }
        result.per_attack.push_back(ttd);
        if (ttd.has_value()) {
            sum += *ttd;
            ++detected;
        } else {
            ++result.undetected;
        }
    }
    if (detected > 0) result.mean_hours = sum / detected;
    return result;
}

namespace {

double percentile(std::vector<double> sorted, double q) {
    // Linear interpolation between order statistics (type 7).
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

BootstrapCI bootstrap_ci(
    const std::function<std::optional<double>(const std::vector<int>&)>& metric,
    int sample_count, int n_resamples, std::uint64_t seed) {
    if (sample_count < 2) {
        throw std::invalid_argument("bootstrap_ci requires at least 2 samples");
    }
    BootstrapCI ci;
    ci.n_resamples = n_resamples;
    ci.seed = seed;

    std::vector<int> identity(sample_count);
    std::iota(identity.begin(), identity.end(), 0);
    const auto point = metric(identity);
    if (!point.has_value()) {
        throw NumericalError("bootstrap_ci: metric undefined on the full sample");
    }
    ci.point = *point;

    Rng rng(mix_seed({seed, 0x626f6f74ULL}));
    std::vector<double> values;
    values.reserve(n_resamples);
    std::vector<int> indices(sample_count);
    for (int r = 0; r < n_resamples; ++r) {
        for (int k = 0; k < sample_count; ++k) {
            indices[k] = static_cast<int>(rng.index(sample_count));
        }
        const auto value = metric(indices);
        if (value.has_value()) values.push_back(*value);
        else ++ci.skipped;
    }
    if (values.empty()) {
        throw NumericalError("bootstrap_ci: metric undefined on every resample");
    }
    std::sort(values.begin(), values.end());
    ci.lo = percentile(values, 0.025);
    ci.hi = percentile(values, 0.975);
    return ci;
}

double cohens_d(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("cohens_d: empty sample");
    auto mean = [](const std::vector<double>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    auto ssq = [&](const std::vector<double>& v, double m) {
        double s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        return s;
    };
    const double ma = mean(a), mb = mean(b);
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double dof = na + nb - 2.0;
    if (dof <= 0.0) throw NumericalError("cohens_d: not enough samples");
    const double pooled = std::sqrt((ssq(a, ma) + ssq(b, mb)) / dof);
    if (pooled == 0.0) {
        if (ma == mb) return 0.0;  // identical constant samples
        throw NumericalError("cohens_d: zero pooled standard deviation");
    }
    return (ma - mb) / pooled;
}

namespace {

std::vector<double> midranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("spearman_rho: need two equal-length samples");
    }
    const std::vector<double> rx = midranks(x);
    const std::vector<double> ry = midranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += (rx[k] - mx) * (ry[k] - my);
        sxx += (rx[k] - mx) * (rx[k] - mx);
        syy += (ry[k] - my) * (ry[k] - my);
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw NumericalError("spearman_rho: zero rank variance");
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace hydronet
