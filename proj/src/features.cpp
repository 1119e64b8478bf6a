#include "hydronet/features.hpp"

#include "hydronet/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace hydronet {

using nlohmann::json;

const std::array<const char*, kFeatureDim> kFeatureNames = {
    "pressure", "net_flow", "tank_level", "roll_mean",
    "roll_std", "lag_diff", "phi_mass",   "phi_energy"};

double head_loss(double flow, double length, double diameter, double roughness) {
    return hw_head_loss(flow, length, diameter, roughness);
}

double mass_violation(const NetworkGraph& g, const Vector& edge_flows,
                      double demand_estimate, int node, double epsilon, bool normalize) {
    if (g.nodes()[node].kind != NodeKind::Junction) return 0.0;
    double inflow = 0.0, outflow = 0.0;
    for (int e : g.incident_edges(node)) {
        const double q = edge_flows[e];
        const double into = g.edge_to(e) == node ? q : -q;
        if (into >= 0.0) inflow += into;
        else outflow += -into;
    }
    const double numerator = std::abs(inflow - outflow - demand_estimate);
    const double denominator = normalize ? inflow + epsilon : 1.0;
    return numerator / denominator;
}

double energy_violation(const NetworkGraph& g, const Vector& heads,
                        const Vector& edge_flows, int edge, double roughness_scale,
                        bool normalize) {
    const Edge& e = g.edges()[edge];
    if (e.kind != EdgeKind::Pipe || e.status != EdgeStatus::Open) {
        throw std::invalid_argument("energy_violation requires an open pipe");
    }
    const double q = edge_flows[edge];
    // Order endpoints so flow runs i -> j; at zero flow keep file orientation.
    int i = g.edge_from(edge), j = g.edge_to(edge);
    if (q < 0.0) std::swap(i, j);
    const double head_i = heads[i];
    const double head_j = heads[j];
    const double loss = head_loss(std::abs(q), e.length_L, e.diameter_D,
                                  e.roughness_C * roughness_scale);
    const double numerator = std::abs(head_i - head_j - loss);
    if (!normalize) return numerator;
    const double denominator = std::max(head_i, head_j);
    if (denominator <= 0.0) {
        throw NumericalError("non-physical state: both heads <= 0 on pipe " + e.id);
    }
    return numerator / denominator;
}

double node_energy_violation(const NetworkGraph& g, const Vector& heads,
                             const Vector& edge_flows, int node, double roughness_scale,
                             bool normalize) {
    double worst = 0.0;
    for (int e : g.incident_edges(node)) {
        const Edge& edge = g.edges()[e];
        if (edge.kind != EdgeKind::Pipe || edge.status != EdgeStatus::Open) continue;
        worst = std::max(worst,
                         energy_violation(g, heads, edge_flows, e, roughness_scale,
                                          normalize));
    }
    return worst;
}

std::vector<std::pair<int, double>> interpolation_weights(
    const NetworkGraph& g, int node, const std::vector<std::uint8_t>& measured,
    double sigma) {
    const std::vector<double> dist = g.distances_from(node);
    double dmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < g.node_count(); ++i) {
        if (i != node && measured[i] && std::isfinite(dist[i])) {
            dmin = std::min(dmin, dist[i]);
        }
    }
    if (!std::isfinite(dmin)) {
        throw NumericalError("no measured node reachable from " + g.nodes()[node].id);
    }
    std::vector<std::pair<int, double>> weights;
    double total = 0.0;
    for (int i = 0; i < g.node_count(); ++i) {
        if (i == node || !measured[i] || !std::isfinite(dist[i])) continue;
        // Shift by dmin for numerical stability; cancels in the softmax.
        const double w = std::exp(-(dist[i] - dmin) / sigma);
        weights.emplace_back(i, w);
        total += w;
    }
    for (auto& [i, w] : weights) w /= total;
    return weights;
}

Vector interpolate_unmeasured(const FeatureTensor& tensor, const NetworkGraph& g,
                              int t, int node) {
    const auto weights =
        interpolation_weights(g, node, tensor.measured, tensor.config.sigma);
    Vector out = Vector::Zero(kFeatureDim);
    for (const auto& [i, w] : weights) {
        out += w * tensor.frames[t].row(i).transpose();
    }
    return out;
}

// ----------------------------------------------------------------------------
// Assembly
// ----------------------------------------------------------------------------

FeatureTensor assemble_features(const ScadaSeries& series, const NetworkGraph& g,
                                const FeatureConfig& config) {
    const int T = series.steps();
    const int n = g.node_count();
    const int w = config.window;
    if (T < w) {
        throw std::invalid_argument("series length " + std::to_string(T) +
                                    " shorter than window " + std::to_string(w));
    }

    FeatureTensor tensor;
    tensor.config = config;
    tensor.node_ids = series.node_ids;
    tensor.pattern = series.pattern;
    tensor.source_seed = series.seed;
    tensor.start_epoch = series.start_epoch;
    tensor.timestep_seconds = series.timestep_seconds;
    tensor.measured.assign(n, 0);
    for (const std::string& id : series.pressure_ids) {
        tensor.measured[g.node_index(id)] = 1;
    }

    // Interpolation weights per unmeasured node, reused across timesteps.
    std::vector<std::vector<std::pair<int, double>>> interp(n);
    for (int i = 0; i < n; ++i) {
        if (!tensor.measured[i]) {
            interp[i] = interpolation_weights(g, i, tensor.measured, config.sigma);
        }
    }

    // Per-node recorded pressure; unmeasured nodes get the interpolated value
    // (same weights as the vector-level formula, so the final tensor is exact).
    Matrix pressure(T, n);
    for (int i = 0; i < n; ++i) {
        const int col = series.pressure_column(g.nodes()[i].id);
        if (col >= 0) {
            pressure.col(i) = series.pressures.col(col);
        }
    }
    for (int i = 0; i < n; ++i) {
        if (tensor.measured[i]) continue;
        pressure.col(i).setZero();
        for (const auto& [j, wgt] : interp[i]) {
            pressure.col(i) += wgt * pressure.col(j);
        }
    }

    std::vector<int> tank_col(n, -1);
    for (std::size_t c = 0; c < series.tank_ids.size(); ++c) {
        tank_col[g.node_index(series.tank_ids[c])] = static_cast<int>(c);
    }

    const double roughness_scale = 1.0 + config.roughness_delta;
    tensor.frames.assign(T, Matrix::Zero(n, kFeatureDim));

    Vector heads(n), flows(g.edge_count());
    for (int t = 0; t < T; ++t) {
        Matrix& frame = tensor.frames[t];
        flows = series.flows.row(t).transpose();
        for (int i = 0; i < n; ++i) heads[i] = pressure(t, i) + g.nodes()[i].elevation_z;

        const double mult = series.pattern.empty()
                                ? 1.0
                                : series.pattern[static_cast<std::size_t>(t % 24)];
        const int lo = std::max(0, t - w + 1);
        const int len = t - lo + 1;

        for (int i = 0; i < n; ++i) {
            if (!tensor.measured[i]) continue;
            frame(i, kFeatPressure) = pressure(t, i);

            double net = 0.0;
            for (int e : g.incident_edges(i)) {
                net += g.edge_to(e) == i ? flows[e] : -flows[e];
            }
            frame(i, kFeatNetFlow) = net;
            frame(i, kFeatTankLevel) =
                tank_col[i] >= 0 ? series.tank_levels(t, tank_col[i]) : 0.0;

            const auto window_block = pressure.col(i).segment(lo, len);
            const double mean = window_block.mean();
            frame(i, kFeatRollMean) = mean;
            frame(i, kFeatRollStd) =
                std::sqrt((window_block.array() - mean).square().mean());
            frame(i, kFeatLagDiff) = t > 0 ? pressure(t, i) - pressure(t - 1, i) : 0.0;

            if (config.toggles.phi_mass) {
                const double estimate = g.nodes()[i].base_demand * mult *
                                        (1.0 + config.demand_error);
                frame(i, kFeatPhiMass) =
                    mass_violation(g, flows, estimate, i, config.epsilon,
                                   config.toggles.normalize);
            }
            if (config.toggles.phi_energy) {
                frame(i, kFeatPhiEnergy) = node_energy_violation(
                    g, heads, flows, i, roughness_scale, config.toggles.normalize);
            }
        }
        for (int i = 0; i < n; ++i) {
            if (tensor.measured[i]) continue;
            Vector row = Vector::Zero(kFeatureDim);
            for (const auto& [j, wgt] : interp[i]) row += wgt * frame.row(j).transpose();
            frame.row(i) = row.transpose();
        }
    }
    return tensor;
}

// ----------------------------------------------------------------------------
// Persistence
// ----------------------------------------------------------------------------

namespace fs = std::filesystem;

void FeatureTensor::save(const fs::path& csv_path) const {
    std::string csv = "time,node";
    for (const char* name : kFeatureNames) csv += std::string(",") + name;
    csv += "\n";
    for (int t = 0; t < steps(); ++t) {
        const std::string stamp =
            iso8601_utc(start_epoch + static_cast<std::int64_t>(t) * timestep_seconds);
        for (int i = 0; i < node_count(); ++i) {
            csv += stamp + "," + node_ids[i];
            for (int f = 0; f < kFeatureDim; ++f) {
                csv += "," + format_double(frames[t](i, f));
            }
            csv += "\n";
        }
    }
    atomic_write(csv_path, csv);

    json meta;
    meta["format"] = "hydronet-features-v1";
    meta["tool_version"] = kToolVersion;
    meta["layout"] = json::array();
    for (const char* name : kFeatureNames) meta["layout"].push_back(name);
    meta["window"] = config.window;
    meta["epsilon"] = config.epsilon;
    meta["sigma"] = config.sigma;
    meta["roughness_delta"] = config.roughness_delta;
    meta["demand_error"] = config.demand_error;
    meta["toggles"] = {{"phi_mass", config.toggles.phi_mass},
                       {"phi_energy", config.toggles.phi_energy},
                       {"normalize", config.toggles.normalize}};
    meta["node_ids"] = node_ids;
    meta["measured"] = json::array();
    for (std::uint8_t m : measured) meta["measured"].push_back(m != 0);
    meta["pattern"] = pattern;
    meta["source_seed"] = source_seed;
    meta["start_epoch"] = start_epoch;
    meta["timestep_seconds"] = timestep_seconds;
    fs::path meta_path = csv_path;
    meta_path.replace_extension(".meta.json");
    atomic_write(meta_path, meta.dump(2) + "\n");
}

FeatureTensor FeatureTensor::load(const fs::path& csv_path) {
    fs::path meta_path = csv_path;
    meta_path.replace_extension(".meta.json");
    json meta = json::parse(read_file(meta_path));
    if (meta.value("format", std::string()) != "hydronet-features-v1") {
        throw ParseError(meta_path.string() + ": unexpected format tag");
    }

    FeatureTensor tensor;
    tensor.config.window = meta["window"].get<int>();
    tensor.config.epsilon = meta["epsilon"].get<double>();
    tensor.config.sigma = meta["sigma"].get<double>();
    tensor.config.roughness_delta = meta["roughness_delta"].get<double>();
    tensor.config.demand_error = meta["demand_error"].get<double>();
    tensor.config.toggles.phi_mass = meta["toggles"]["phi_mass"].get<bool>();
    tensor.config.toggles.phi_energy = meta["toggles"]["phi_energy"].get<bool>();
    tensor.config.toggles.normalize = meta["toggles"]["normalize"].get<bool>();
    tensor.node_ids = meta["node_ids"].get<std::vector<std::string>>();
    for (bool m : meta["measured"].get<std::vector<bool>>()) {
        tensor.measured.push_back(m ? 1 : 0);
    }
    tensor.pattern = meta["pattern"].get<std::vector<double>>();
    tensor.source_seed = meta["source_seed"].get<std::uint64_t>();
    tensor.start_epoch = meta["start_epoch"].get<std::int64_t>();
    tensor.timestep_seconds = meta["timestep_seconds"].get<int>();

    const int n = static_cast<int>(tensor.node_ids.size());
    CsvTable table = CsvTable::parse(read_file(csv_path), csv_path.string());
    if (table.rows.size() % n != 0) {
        throw ParseError(csv_path.string() + ": row count not divisible by node count");
    }
    const int T = static_cast<int>(table.rows.size()) / n;
    tensor.frames.assign(T, Matrix::Zero(n, kFeatureDim));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const int t = static_cast<int>(r) / n;
        const int i = static_cast<int>(r) % n;
        if (table.rows[r][1] != tensor.node_ids[i]) {
            throw ParseError(csv_path.string() + ": unexpected node order at row " +
                             std::to_string(r + 2));
        }
        for (int f = 0; f < kFeatureDim; ++f) {
            tensor.frames[t](i, f) = std::stod(table.rows[r][2 + f]);
        }
    }
    return tensor;
}

}  // namespace hydronet
