// Physics-informed feature extraction: normalized mass- and energy-balance
// violations, temporal descriptors, and distance-weighted interpolation for
// unmeasured nodes.
//
// Feature layout (F = 8, fixed across all ablation toggles):
//   0 pressure        recorded pressure head p_i, m
//   1 net_flow        signed net inflow from recorded flows, m^3/s
//   2 tank_level      recorded level, m (0 for non-tanks)
//   3 roll_mean       rolling mean of pressure over the trailing window
//   4 roll_std        rolling population std of pressure
//   5 lag_diff        lag-1 pressure difference
//   6 phi_mass        mass-balance violation (junctions; 0 elsewhere)
//   7 phi_energy      max energy-gradient violation over incident open pipes

#pragma once

#include "hydronet/scada.hpp"

#include <array>
#include <filesystem>

namespace hydronet {

inline constexpr int kFeatureDim = 8;

enum FeatureIndex {
    kFeatPressure = 0,
    kFeatNetFlow = 1,
    kFeatTankLevel = 2,
    kFeatRollMean = 3,
    kFeatRollStd = 4,
    kFeatLagDiff = 5,
    kFeatPhiMass = 6,
    kFeatPhiEnergy = 7,
};

extern const std::array<const char*, kFeatureDim> kFeatureNames;

struct FeatureToggles {
    bool phi_mass = true;
    bool phi_energy = true;
    bool normalize = true;  // off: Eq. denominators replaced by 1 (raw residuals)
};

struct FeatureConfig {
    int window = 24;
    double epsilon = 1e-6;        // m^3/s, mass-violation denominator guard
    double sigma = 2.0;           // m, interpolation smoothing
    double roughness_delta = 0.0; // relative perturbation applied to C_ij
    double demand_error = 0.0;    // relative error of the demand estimate
    FeatureToggles toggles;
};

struct FeatureTensor {
    std::vector<Matrix> frames;      // T entries, each N x kFeatureDim
    std::vector<std::uint8_t> measured;  // per node
    std::vector<std::string> node_ids;
    FeatureConfig config;
    std::vector<double> pattern;     // carried through for provenance
    std::uint64_t source_seed = 0;
    std::int64_t start_epoch = kSeriesEpoch;
    int timestep_seconds = 3600;

    int steps() const { return static_cast<int>(frames.size()); }
    int node_count() const {
        return frames.empty() ? 0 : static_cast<int>(frames.front().rows());
    }

    void save(const std::filesystem::path& csv_path) const;
    static FeatureTensor load(const std::filesystem::path& csv_path);
};

// ----------------------------------------------------------------------------
// Per-quantity operations
// ----------------------------------------------------------------------------

/// Signed Hazen-Williams head loss, h_L = 10.67 L |Q|^1.852 / (C^1.852 D^4.87).
double head_loss(double flow, double length, double diameter, double roughness);

/// Mass-balance violation at a junction from signed edge flows and a demand
/// estimate. In/out sets are resolved by flow sign. Returns 0 for tanks and
/// reservoirs (storage absorbs the balance).
double mass_violation(const NetworkGraph& g, const Vector& edge_flows,
                      double demand_estimate, int node, double epsilon,
                      bool normalize = true);

/// Energy-gradient violation on an open pipe given per-node heads and the
/// pipe's signed flow; endpoints are ordered along the flow direction.
/// Throws NumericalError when both endpoint heads are <= 0.
double energy_violation(const NetworkGraph& g, const Vector& heads,
                        const Vector& edge_flows, int edge,
                        double roughness_scale = 1.0, bool normalize = true);

/// Max energy violation over a node's incident open pipes; 0 with none.
double node_energy_violation(const NetworkGraph& g, const Vector& heads,
                             const Vector& edge_flows, int node,
                             double roughness_scale = 1.0, bool normalize = true);

/// Softmax weights exp(-d_ij/sigma) over measured nodes reachable from `node`.
/// Throws NumericalError when no measured node is reachable.
std::vector<std::pair<int, double>> interpolation_weights(
    const NetworkGraph& g, int node, const std::vector<std::uint8_t>& measured,
    double sigma);

/// Interpolated feature vector of an unmeasured node at step t.
Vector interpolate_unmeasured(const FeatureTensor& tensor, const NetworkGraph& g,
                              int t, int node);

/// Assemble the full tensor from recorded SCADA data. Unmeasured nodes are
/// filled with the interpolation formula applied to measured nodes' vectors.
FeatureTensor assemble_features(const ScadaSeries& series, const NetworkGraph& g,
                                const FeatureConfig& config);

}  // namespace hydronet
