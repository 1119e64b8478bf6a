#include "hydronet/scada.hpp"

#include "hydronet/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>

namespace hydronet {

using nlohmann::json;

const char* to_string(AttackKind kind) {
    switch (kind) {
        case AttackKind::SensorOffset: return "sensor_offset";
        case AttackKind::SensorReplay: return "sensor_replay";
        case AttackKind::PumpShutdown: return "pump_shutdown";
        case AttackKind::FlowManipulation: return "flow_manipulation";
    }
    return "?";
}

AttackKind parse_attack_kind(const std::string& text) {
    if (text == "sensor_offset") return AttackKind::SensorOffset;
    if (text == "sensor_replay") return AttackKind::SensorReplay;
    if (text == "pump_shutdown") return AttackKind::PumpShutdown;
    if (text == "flow_manipulation") return AttackKind::FlowManipulation;
    throw ParseError("unknown attack kind '" + text + "'");
}

int ScadaSeries::pressure_column(const std::string& node_id) const {
    auto it = std::find(pressure_ids.begin(), pressure_ids.end(), node_id);
    return it == pressure_ids.end() ? -1 : static_cast<int>(it - pressure_ids.begin());
}

std::vector<double> default_demand_pattern() {
    // Double-peak residential curve; morning and evening maxima.
    return {0.55, 0.50, 0.48, 0.48, 0.52, 0.65, 0.95, 1.30, 1.45, 1.30, 1.15, 1.05,
            1.00, 0.95, 0.90, 0.95, 1.05, 1.25, 1.50, 1.40, 1.20, 0.95, 0.75, 0.62};
}

namespace {

enum NoiseChannel { kNoisePressure = 0, kNoiseFlow = 1, kNoiseTank = 2 };

double noisy(double truth, double noise_std, std::uint64_t seed, int t, int channel,
             int index) {
    if (noise_std == 0.0) return truth;
    return truth * (1.0 + noise_std * keyed_gaussian(seed, static_cast<std::uint64_t>(t),
                                                     static_cast<std::uint64_t>(channel),
                                                     static_cast<std::uint64_t>(index)));
}

/// Signed net flow into node v under the edge orientation convention.
double net_inflow(const NetworkGraph& g, const Vector& flows, int v) {
    double total = 0.0;
    for (int e : g.incident_edges(v)) {
        if (g.edge_to(e) == v) total += flows[e];
        else total -= flows[e];
    }
    return total;
}

void record_step(ScadaSeries& s, const NetworkGraph& g, const HydraulicState& state,
                 const Vector& tank_level, int t) {
    s.true_heads.row(t) = state.head.transpose();
    s.true_flows.row(t) = state.flow.transpose();
    for (std::size_t c = 0; c < s.tank_ids.size(); ++c) {
        const int v = g.node_index(s.tank_ids[c]);
        s.true_tank_levels(t, static_cast<Eigen::Index>(c)) = tank_level[v];
        s.tank_levels(t, static_cast<Eigen::Index>(c)) =
            noisy(tank_level[v], s.noise_std, s.seed, t, kNoiseTank, v);
    }
    for (std::size_t c = 0; c < s.pressure_ids.size(); ++c) {
        const int v = g.node_index(s.pressure_ids[c]);
        const double pressure = state.head[v] - g.nodes()[v].elevation_z;
        s.pressures(t, static_cast<Eigen::Index>(c)) =
            noisy(pressure, s.noise_std, s.seed, t, kNoisePressure, v);
    }
    for (int e = 0; e < g.edge_count(); ++e) {
        s.flows(t, e) = noisy(state.flow[e], s.noise_std, s.seed, t, kNoiseFlow, e);
    }
}

}  // namespace

ScadaSeries generate_series(const NetworkGraph& g, const std::vector<double>& pattern,
                            int days, double noise_std, std::uint64_t seed,
                            const GenerateOptions& options) {
    if (pattern.size() != 24) {
        throw std::invalid_argument("demand pattern must have 24 entries");
    }
    for (double p : pattern) {
        if (!(p > 0.0)) throw std::invalid_argument("demand pattern entries must be > 0");
    }
    if (noise_std < 0.0 || noise_std > 0.1) {
        throw std::invalid_argument("noise_std must lie in [0, 0.1]");
    }
    if (days < 1) throw std::invalid_argument("days must be >= 1");

    const int T = days * 24;
    const int n = g.node_count();

    ScadaSeries s;
    s.pattern = pattern;
    s.noise_std = noise_std;
    s.seed = seed;
    s.initial_tank_level = options.initial_tank_level;
    for (const Node& node : g.nodes()) {
        s.node_ids.push_back(node.id);
        if (node.measured) s.pressure_ids.push_back(node.id);
        if (node.kind == NodeKind::Tank) s.tank_ids.push_back(node.id);
    }
    for (const Edge& edge : g.edges()) {
        s.flow_ids.push_back(edge.id);
        if (edge.kind == EdgeKind::Pump) s.pump_ids.push_back(edge.id);
    }

    s.pressures.setZero(T, static_cast<Eigen::Index>(s.pressure_ids.size()));
    s.flows.setZero(T, g.edge_count());
    s.tank_levels.setZero(T, static_cast<Eigen::Index>(s.tank_ids.size()));
    s.pump_status.setOnes(T, static_cast<Eigen::Index>(s.pump_ids.size()));
    s.true_heads.setZero(T, n);
    s.true_flows.setZero(T, g.edge_count());
    s.true_tank_levels.setZero(T, static_cast<Eigen::Index>(s.tank_ids.size()));
    s.labels.setZero(T, n);

    BoundaryConditions bc = BoundaryConditions::defaults(g, options.initial_tank_level);
    Vector level = bc.tank_level;

    for (int t = 0; t < T; ++t) {
        const double mult = pattern[t % 24];
        for (int i = 0; i < n; ++i) {
            if (g.nodes()[i].kind == NodeKind::Junction) {
                bc.demand[i] = g.nodes()[i].base_demand * mult;
            }
        }
        bc.tank_level = level;
        HydraulicState state;
        try {
            state = solve_steady_state(g, bc, options.solver);
        } catch (const NumericalError& e) {
            throw NumericalError("timestep " + std::to_string(t) + ": " + e.what());
        }
        record_step(s, g, state, level, t);

        for (const std::string& tank_id : s.tank_ids) {
            const int v = g.node_index(tank_id);
            const double next =
                level[v] + net_inflow(g, state.flow, v) * s.timestep_seconds /
                               g.nodes()[v].tank_area;
            if (next > 10.0) {
                std::cerr << "warning: tank " << tank_id << " overflow at step " << t
                          << " (level clamped to 10 m)\n";
            }
            level[v] = std::clamp(next, 0.0, 10.0);
        }
    }
    return s;
}

// ----------------------------------------------------------------------------
// Attacks
// ----------------------------------------------------------------------------

namespace {

void resimulate_window(ScadaSeries& out, const NetworkGraph& g, const AttackSpec& spec,
                       const ScadaSeries& clean) {
    const int start = spec.start;
    const int stop = spec.start + spec.duration;
    const int n = g.node_count();

    BoundaryConditions bc = BoundaryConditions::defaults(g, clean.initial_tank_level);

    // Tank state entering the window comes from the unattacked trajectory.
    Vector level = Vector::Zero(n);
    for (std::size_t c = 0; c < clean.tank_ids.size(); ++c) {
        level[g.node_index(clean.tank_ids[c])] =
            clean.true_tank_levels(start, static_cast<Eigen::Index>(c));
    }

    const int target_edge =
        spec.kind == AttackKind::PumpShutdown ? g.edge_index(spec.target) : -1;
    const int target_node =
        spec.kind == AttackKind::FlowManipulation ? g.node_index(spec.target) : -1;

    for (int t = start; t < stop; ++t) {
        const double mult = out.pattern[t % 24];
        for (int i = 0; i < n; ++i) {
            if (g.nodes()[i].kind == NodeKind::Junction) {
                bc.demand[i] = g.nodes()[i].base_demand * mult;
            }
        }
        if (target_node >= 0) bc.demand[target_node] *= spec.magnitude;

        for (std::size_t c = 0; c < out.pump_ids.size(); ++c) {
            const int e = g.edge_index(out.pump_ids[c]);
            bc.pump_open[e] = out.pump_status(t, static_cast<Eigen::Index>(c)) > 0.5;
        }
        if (target_edge >= 0) {
            bc.pump_open[target_edge] = 0;
            for (std::size_t c = 0; c < out.pump_ids.size(); ++c) {
                if (out.pump_ids[c] == spec.target) {
                    out.pump_status(t, static_cast<Eigen::Index>(c)) = 0.0;
                }
            }
        }
        bc.tank_level = level;

        HydraulicState state;
        try {
            state = solve_steady_state(g, bc);
        } catch (const NumericalError& e) {
            throw NumericalError("attack re-simulation, timestep " + std::to_string(t) +
                                 ": " + e.what());
        }
        record_step(out, g, state, level, t);

        for (int i = 0; i < n; ++i) {
            if (std::abs(state.head[i] - clean.true_heads(t, i)) > 0.01) {
                out.labels(t, i) = 1;
            }
        }
        if (target_node >= 0) out.labels(t, target_node) = 1;

        for (const std::string& tank_id : out.tank_ids) {
            const int v = g.node_index(tank_id);
            level[v] = std::clamp(level[v] + net_inflow(g, state.flow, v) *
                                                 out.timestep_seconds /
                                                 g.nodes()[v].tank_area,
                                  0.0, 10.0);
        }
    }
}

}  // namespace

ScadaSeries inject_attack(const ScadaSeries& series, const NetworkGraph& g,
                          const AttackSpec& spec) {
    const int T = series.steps();
    if (spec.start < 0 || spec.duration < 0 || spec.start + spec.duration > T) {
        throw ValidationError("attack window [" + std::to_string(spec.start) + ", " +
                              std::to_string(spec.start + spec.duration) +
                              ") outside series of length " + std::to_string(T));
    }
    switch (spec.kind) {
        case AttackKind::SensorOffset:
            if (!(spec.magnitude > 0.0)) {
                throw ValidationError("sensor_offset magnitude must be > 0");
            }
            [[fallthrough]];
        case AttackKind::SensorReplay:
            if (!g.has_node(spec.target) && !g.has_edge(spec.target)) {
                throw ValidationError("attack target '" + spec.target +
                                      "' is neither a node nor an edge");
            }
            if (g.has_node(spec.target) && series.pressure_column(spec.target) < 0) {
                throw ValidationError("attack target node '" + spec.target +
                                      "' has no pressure sensor");
            }
            break;
        case AttackKind::PumpShutdown: {
            if (!g.has_edge(spec.target) ||
                g.edges()[g.edge_index(spec.target)].kind != EdgeKind::Pump) {
                throw ValidationError("pump_shutdown target '" + spec.target +
                                      "' is not a pump");
            }
            break;
        }
        case AttackKind::FlowManipulation: {
            if (!(spec.magnitude > 0.0)) {
                throw ValidationError("flow_manipulation magnitude must be > 0");
            }
            if (!g.has_node(spec.target) ||
                g.nodes()[g.node_index(spec.target)].kind != NodeKind::Junction) {
                throw ValidationError("flow_manipulation target '" + spec.target +
                                      "' is not a junction");
            }
            break;
        }
    }
    if (spec.kind == AttackKind::SensorReplay && spec.start - spec.duration < 0) {
        throw ValidationError("replay window would read before t=0");
    }

    if (spec.duration == 0) return series;

    ScadaSeries out = series;
    const int start = spec.start;
    const int stop = spec.start + spec.duration;

    switch (spec.kind) {
        case AttackKind::SensorOffset:
        case AttackKind::SensorReplay: {
            std::vector<std::pair<Matrix*, int>> channels;
            std::vector<int> label_nodes;
            if (g.has_node(spec.target)) {
                channels.emplace_back(&out.pressures, out.pressure_column(spec.target));
                auto tank_it =
                    std::find(out.tank_ids.begin(), out.tank_ids.end(), spec.target);
                if (tank_it != out.tank_ids.end()) {
                    channels.emplace_back(&out.tank_levels,
                                          static_cast<int>(tank_it - out.tank_ids.begin()));
                }
                label_nodes.push_back(g.node_index(spec.target));
            } else {
                const int e = g.edge_index(spec.target);
                channels.emplace_back(&out.flows, e);
                label_nodes.push_back(g.edge_from(e));
                label_nodes.push_back(g.edge_to(e));
            }
            for (auto [mat, col] : channels) {
                for (int t = start; t < stop; ++t) {
                    if (spec.kind == AttackKind::SensorOffset) {
                        (*mat)(t, col) *= 1.0 + spec.magnitude;
                    } else {
                        (*mat)(t, col) = (*mat)(t - spec.duration, col);
                    }
                }
            }
            for (int t = start; t < stop; ++t) {
                for (int v : label_nodes) out.labels(t, v) = 1;
            }
            break;
        }
        case AttackKind::PumpShutdown:
        case AttackKind::FlowManipulation:
            resimulate_window(out, g, spec, series);
            break;
    }

    out.attack_log.push_back(spec);
    return out;
}

ScadaSeries mask_sensors(const ScadaSeries& series, double fraction, std::uint64_t seed) {
    if (fraction < 0.0 || fraction > 0.5) {
        throw std::invalid_argument("mask fraction must lie in [0, 0.5]");
    }
    const int count =
        static_cast<int>(std::floor(fraction * static_cast<double>(series.pressure_ids.size())));
    if (count == 0) return series;

    std::vector<std::string> candidates = series.pressure_ids;
    std::sort(candidates.begin(), candidates.end());
    Rng rng(mix_seed({seed, 0x6d61736bULL}));
    rng.shuffle(candidates);
    std::vector<std::string> masked(candidates.begin(), candidates.begin() + count);

    ScadaSeries out = series;
    out.pressure_ids.clear();
    std::vector<int> keep_cols;
    for (std::size_t c = 0; c < series.pressure_ids.size(); ++c) {
        if (std::find(masked.begin(), masked.end(), series.pressure_ids[c]) == masked.end()) {
            out.pressure_ids.push_back(series.pressure_ids[c]);
            keep_cols.push_back(static_cast<int>(c));
        }
    }
    out.pressures.resize(series.pressures.rows(),
                         static_cast<Eigen::Index>(keep_cols.size()));
    for (std::size_t c = 0; c < keep_cols.size(); ++c) {
        out.pressures.col(static_cast<Eigen::Index>(c)) = series.pressures.col(keep_cols[c]);
    }
    for (const std::string& id : masked) out.masked_sensors.push_back(id);
    std::sort(out.masked_sensors.begin(), out.masked_sensors.end());
    return out;
}

// ----------------------------------------------------------------------------
// Persistence
// ----------------------------------------------------------------------------

namespace fs = std::filesystem;

void ScadaSeries::save(const fs::path& dir) const {
    fs::create_directories(dir);
    auto dump = [&](const char* name, const std::vector<std::string>& ids, const Matrix& m) {
        atomic_write(dir / name, timeseries_csv(ids, m, start_epoch, timestep_seconds));
    };
    dump("pressures.csv", pressure_ids, pressures);
    dump("flows.csv", flow_ids, flows);
    dump("tank_levels.csv", tank_ids, tank_levels);
    dump("pump_status.csv", pump_ids, pump_status);
    dump("labels.csv", node_ids, labels.cast<double>());
    dump("true_heads.csv", node_ids, true_heads);
    dump("true_flows.csv", flow_ids, true_flows);
    dump("true_tank_levels.csv", tank_ids, true_tank_levels);

    json log = json::array();
    for (const AttackSpec& a : attack_log) {
        log.push_back({{"kind", to_string(a.kind)},
                       {"target", a.target},
                       {"start", a.start},
                       {"duration", a.duration},
                       {"magnitude", a.magnitude}});
    }
    atomic_write(dir / "attack_log.json", log.dump(2) + "\n");

    json meta;
    meta["format"] = "hydronet-scada-v1";
    meta["tool_version"] = kToolVersion;
    meta["seed"] = seed;
    meta["noise_std"] = noise_std;
    meta["pattern"] = pattern;
    meta["timestep_seconds"] = timestep_seconds;
    meta["start_epoch"] = start_epoch;
    meta["initial_tank_level"] = initial_tank_level;
    meta["masked_sensors"] = masked_sensors;
    meta["node_ids"] = node_ids;
    atomic_write(dir / "meta.json", meta.dump(2) + "\n");
}

ScadaSeries ScadaSeries::load(const fs::path& dir) {
    ScadaSeries s;
    json meta = json::parse(read_file(dir / "meta.json"));
    if (meta.value("format", std::string()) != "hydronet-scada-v1") {
        throw ParseError(dir.string() + "/meta.json: unexpected format tag");
    }
    s.seed = meta["seed"].get<std::uint64_t>();
    s.noise_std = meta["noise_std"].get<double>();
    s.pattern = meta["pattern"].get<std::vector<double>>();
    s.timestep_seconds = meta["timestep_seconds"].get<int>();
    s.start_epoch = meta["start_epoch"].get<std::int64_t>();
    s.initial_tank_level = meta["initial_tank_level"].get<double>();
    s.masked_sensors = meta["masked_sensors"].get<std::vector<std::string>>();

    auto read = [&](const char* name, std::vector<std::string>& ids, Matrix& m) {
        TimeseriesData data =
            parse_timeseries_csv(read_file(dir / name), (dir / name).string());
        ids = std::move(data.ids);
        m = std::move(data.values);
    };
    read("pressures.csv", s.pressure_ids, s.pressures);
    read("flows.csv", s.flow_ids, s.flows);
    read("tank_levels.csv", s.tank_ids, s.tank_levels);
    read("pump_status.csv", s.pump_ids, s.pump_status);
    read("true_flows.csv", s.flow_ids, s.true_flows);
    read("true_tank_levels.csv", s.tank_ids, s.true_tank_levels);
    read("true_heads.csv", s.node_ids, s.true_heads);
    std::vector<std::string> label_ids;
    Matrix label_values;
    read("labels.csv", label_ids, label_values);
    s.labels = label_values.cast<int>();
    s.node_ids = label_ids;

    json log = json::parse(read_file(dir / "attack_log.json"));
    for (const json& ja : log) {
        AttackSpec a;
        a.kind = parse_attack_kind(ja["kind"].get<std::string>());
        a.target = ja["target"].get<std::string>();
        a.start = ja["start"].get<int>();
        a.duration = ja["duration"].get<int>();
        a.magnitude = ja["magnitude"].get<double>();
        s.attack_log.push_back(a);
    }
    return s;
}

}  // namespace hydronet
