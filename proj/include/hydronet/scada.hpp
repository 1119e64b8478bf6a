// Synthetic SCADA time series: hourly steady-state simulation with quasi-static
// tank dynamics, attack injection, sensor masking, and CSV persistence.
//
// The series keeps both ground truth (heads, flows, tank levels) and recorded
// sensor values. Sensor noise is keyed per (seed, step, channel) so that
// re-simulated attack windows reuse exactly the clean run's noise draws.

#pragma once

#include "hydronet/hydrosim.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hydronet {

enum class AttackKind { SensorOffset, SensorReplay, PumpShutdown, FlowManipulation };

struct AttackSpec {
    AttackKind kind = AttackKind::SensorOffset;
    std::string target;   // node id or edge id, depending on kind
    int start = 0;        // time index
    int duration = 0;     // steps
    double magnitude = 0.0;  // offset fraction / demand multiplier
};

const char* to_string(AttackKind kind);
AttackKind parse_attack_kind(const std::string& text);

struct ScadaSeries {
    int timestep_seconds = 3600;
    std::int64_t start_epoch = kSeriesEpoch;

    std::vector<std::string> node_ids;      // all nodes, network order
    std::vector<std::string> pressure_ids;  // measured nodes (pressure sensors)
    std::vector<std::string> flow_ids;      // all edges
    std::vector<std::string> tank_ids;
    std::vector<std::string> pump_ids;

    // Recorded sensor channels (rows = time).
    Matrix pressures;     // T x |pressure_ids|, m (head - elevation)
    Matrix flows;         // T x |flow_ids|, m^3/s
    Matrix tank_levels;   // T x |tank_ids|, m
    Matrix pump_status;   // T x |pump_ids|, 0/1

    // Ground truth (rows = time).
    Matrix true_heads;        // T x N, m
    Matrix true_flows;        // T x |edges|, m^3/s
    Matrix true_tank_levels;  // T x |tank_ids|, m

    Eigen::MatrixXi labels;   // T x N, y_{i,t}

    std::vector<AttackSpec> attack_log;
    std::vector<std::string> masked_sensors;

    // Generation metadata, needed to re-simulate attack windows.
    std::vector<double> pattern;  // 24 hourly demand multipliers
    double noise_std = 0.0;
    std::uint64_t seed = 0;
    double initial_tank_level = 5.0;

    int steps() const { return static_cast<int>(true_heads.rows()); }
    int pressure_column(const std::string& node_id) const;  // -1 if unmeasured

    void save(const std::filesystem::path& dir) const;
    static ScadaSeries load(const std::filesystem::path& dir);
};

struct GenerateOptions {
    double initial_tank_level = 5.0;
    SolveOptions solver;
};

/// Simulate `days` of hourly operation. `pattern` holds 24 positive demand
/// multipliers; relative Gaussian noise (std `noise_std`, in [0, 0.1]) is
/// applied to recorded sensors only.
ScadaSeries generate_series(const NetworkGraph& g, const std::vector<double>& pattern,
                            int days, double noise_std, std::uint64_t seed,
                            const GenerateOptions& options = {});

/// Apply one attack, returning a new series. Sensor attacks touch recorded
/// values only; pump_shutdown and flow_manipulation re-simulate the window
/// and relabel nodes whose true head moves by more than 0.01 m.
ScadaSeries inject_attack(const ScadaSeries& series, const NetworkGraph& g,
                          const AttackSpec& spec);

/// Mark floor(fraction * #sensors) pressure sensors as unmeasured for the
/// whole series (their columns are dropped). fraction in [0, 0.5].
ScadaSeries mask_sensors(const ScadaSeries& series, double fraction, std::uint64_t seed);

/// Default double-peak residential demand pattern (24 entries, mean ~1).
std::vector<double> default_demand_pattern();

}  // namespace hydronet
