#include "hydronet/network.hpp"

#include "hydronet/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>

namespace hydronet {

using nlohmann::json;

const char* to_string(NodeKind kind) {
    switch (kind) {
        case NodeKind::Junction: return "junction";
        case NodeKind::Tank: return "tank";
        case NodeKind::Reservoir: return "reservoir";
    }
    return "?";
}

const char* to_string(EdgeKind kind) {
    return kind == EdgeKind::Pipe ? "pipe" : "pump";
}

const char* to_string(EdgeStatus status) {
    return status == EdgeStatus::Open ? "open" : "closed";
}

namespace {

NodeKind parse_node_kind(const std::string& s, const std::string& ctx) {
    if (s == "junction") return NodeKind::Junction;
    if (s == "tank") return NodeKind::Tank;
    if (s == "reservoir") return NodeKind::Reservoir;
    throw ParseError(ctx + ": unknown node kind '" + s + "'");
}

EdgeKind parse_edge_kind(const std::string& s, const std::string& ctx) {
    if (s == "pipe") return EdgeKind::Pipe;
    if (s == "pump") return EdgeKind::Pump;
    throw ParseError(ctx + ": unknown edge kind '" + s + "'");
}

EdgeStatus parse_edge_status(const std::string& s, const std::string& ctx) {
    if (s == "open") return EdgeStatus::Open;
    if (s == "closed") return EdgeStatus::Closed;
    throw ParseError(ctx + ": unknown edge status '" + s + "'");
}

double require_number(const json& obj, const char* key, const std::string& ctx) {
    if (!obj.contains(key) || !obj[key].is_number()) {
        throw ParseError(ctx + ": missing or non-numeric field '" + std::string(key) + "'");
    }
    return obj[key].get<double>();
}

std::string require_string(const json& obj, const char* key, const std::string& ctx) {
    if (!obj.contains(key) || !obj[key].is_string()) {
        throw ParseError(ctx + ": missing or non-string field '" + std::string(key) + "'");
    }
    return obj[key].get<std::string>();
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& ctx) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (allowed.count(it.key()) == 0) {
            throw ParseError(ctx + ": unknown key '" + it.key() + "'");
        }
    }
}

}  // namespace

NetworkGraph::NetworkGraph(std::vector<Node> nodes, std::vector<Edge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
    for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
        if (!node_by_id_.emplace(nodes_[i].id, i).second) {
            throw ValidationError("duplicate node id '" + nodes_[i].id + "'");
        }
    }
    for (int e = 0; e < static_cast<int>(edges_.size()); ++e) {
        if (!edge_by_id_.emplace(edges_[e].id, e).second) {
            throw ValidationError("duplicate edge id '" + edges_[e].id + "'");
        }
    }
    validate();
    build_adjacency();

    // Connectivity (undirected) is required; report one offending component.
    if (!nodes_.empty()) {
        std::vector<char> seen(nodes_.size(), 0);
        std::queue<int> q;
        q.push(0);
        seen[0] = 1;
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int v : neighbors_[u]) {
                if (!seen[v]) {
                    seen[v] = 1;
                    q.push(v);
                }
            }
        }
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            if (!seen[i]) {
                throw ValidationError("disconnected component containing node " + nodes_[i].id);
            }
        }
    }
}

void NetworkGraph::validate() const {
    for (const Node& n : nodes_) {
        const std::string ctx = "node " + n.id;
        if (!std::isfinite(n.elevation_z)) throw ValidationError(ctx + ": elevation not finite");
        if (n.kind == NodeKind::Junction && n.base_demand < 0.0) {
            throw ValidationError(ctx + ": base_demand must be >= 0");
        }
        if (n.kind == NodeKind::Tank && !(n.tank_area > 0.0)) {
            throw ValidationError(ctx + ": tank_area must be > 0");
        }
        if (n.kind == NodeKind::Reservoir && !std::isfinite(n.fixed_head)) {
            throw ValidationError(ctx + ": fixed_head not finite");
        }
    }
    for (const Edge& e : edges_) {
        const std::string ctx = "edge " + e.id;
        if (node_by_id_.count(e.from) == 0) {
            throw ValidationError(ctx + ": endpoint '" + e.from + "' not in node set");
        }
        if (node_by_id_.count(e.to) == 0) {
            throw ValidationError(ctx + ": endpoint '" + e.to + "' not in node set");
        }
        if (e.from == e.to) throw ValidationError(ctx + ": self-loop (from == to)");
        if (e.kind == EdgeKind::Pipe) {
            if (!(e.length_L > 0.0)) throw ValidationError(ctx + ": length_L must be > 0");
            if (!(e.diameter_D > 0.0)) throw ValidationError(ctx + ": diameter_D must be > 0");
            if (e.roughness_C < 50.0 || e.roughness_C > 160.0) {
                throw ValidationError(ctx + ": roughness_C must lie in [50, 160]");
            }
        } else {
            if (!(e.pump_shutoff_head_h0 > 0.0)) {
                throw ValidationError(ctx + ": pump_shutoff_head_h0 must be > 0");
            }
            if (!(e.pump_curve_coeff_r > 0.0)) {
                throw ValidationError(ctx + ": pump_curve_coeff_r must be > 0");
            }
        }
    }
}

void NetworkGraph::build_adjacency() {
    const int n = node_count();
    edge_from_.resize(edges_.size());
    edge_to_.resize(edges_.size());
    incident_.assign(n, {});
    neighbors_.assign(n, {});
    support_.assign(n, {});
    std::vector<std::set<int>> nbr(n);
    for (int e = 0; e < edge_count(); ++e) {
        edge_from_[e] = node_by_id_.at(edges_[e].from);
        edge_to_[e] = node_by_id_.at(edges_[e].to);
        incident_[edge_from_[e]].push_back(e);
        incident_[edge_to_[e]].push_back(e);
        nbr[edge_from_[e]].insert(edge_to_[e]);
        nbr[edge_to_[e]].insert(edge_from_[e]);
    }
    for (int v = 0; v < n; ++v) {
        neighbors_[v].assign(nbr[v].begin(), nbr[v].end());
        nbr[v].insert(v);
        support_[v].assign(nbr[v].begin(), nbr[v].end());
    }
}

int NetworkGraph::node_index(const std::string& id) const {
    auto it = node_by_id_.find(id);
    if (it == node_by_id_.end()) throw ValidationError("unknown node id '" + id + "'");
    return it->second;
}

int NetworkGraph::edge_index(const std::string& id) const {
    auto it = edge_by_id_.find(id);
    if (it == edge_by_id_.end()) throw ValidationError("unknown edge id '" + id + "'");
    return it->second;
}

std::vector<int> NetworkGraph::node_indices_of_kind(NodeKind kind) const {
    std::vector<int> out;
    for (int i = 0; i < node_count(); ++i) {
        if (nodes_[i].kind == kind) out.push_back(i);
    }
    return out;
}

std::vector<int> NetworkGraph::edge_indices_of_kind(EdgeKind kind) const {
    std::vector<int> out;
    for (int e = 0; e < edge_count(); ++e) {
        if (edges_[e].kind == kind) out.push_back(e);
    }
    return out;
}

// ----------------------------------------------------------------------------
// Distances (Dijkstra over edge lengths; pumps weigh 0 m)
// ----------------------------------------------------------------------------

namespace {
double edge_weight(const Edge& e) {
    return e.kind == EdgeKind::Pipe ? e.length_L : 0.0;
}
}  // namespace

std::vector<double> NetworkGraph::distances_from(int source) const {
    const int n = node_count();
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    dist[source] = 0.0;
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    pq.emplace(0.0, source);
    while (!pq.empty()) {
        auto [d, u] = pq.top();
        pq.pop();
        if (d > dist[u]) continue;
        for (int e : incident_[u]) {
            const int v = edge_from_[e] == u ? edge_to_[e] : edge_from_[e];
            const double nd = d + edge_weight(edges_[e]);
            if (nd < dist[v]) {
                dist[v] = nd;
                pq.emplace(nd, v);
            }
        }
    }
    return dist;
}

double NetworkGraph::hydraulic_distance(int i, int j) const {
    const double d = distances_from(i)[j];
    if (!std::isfinite(d)) {
        throw NumericalError("nodes " + nodes_[i].id + " and " + nodes_[j].id +
                             " are mutually unreachable");
    }
    return d;
}

double NetworkGraph::hydraulic_distance(const std::string& i, const std::string& j) const {
    return hydraulic_distance(node_index(i), node_index(j));
}

std::vector<std::string> NetworkGraph::shortest_hydraulic_path(const std::string& i,
                                                               const std::string& j) const {
    const int s = node_index(i);
    const int t = node_index(j);
    if (s == t) return {nodes_[s].id};

    const std::vector<double> ds = distances_from(s);
    const std::vector<double> dt = distances_from(t);
    if (!std::isfinite(ds[t])) {
        throw NumericalError("nodes " + i + " and " + j + " are mutually unreachable");
    }
    const double total = ds[t];

    // Greedy walk over the shortest-path DAG; choosing the lexicographically
    // smallest admissible next id yields the lexicographically smallest path.
    std::vector<std::string> path = {nodes_[s].id};
    int u = s;
    const double eps = 1e-9 * std::max(1.0, total);
    while (u != t) {
        int best = -1;
        for (int e : incident_[u]) {
            const int v = edge_from_[e] == u ? edge_to_[e] : edge_from_[e];
            const double w = edge_weight(edges_[e]);
            const bool tight = std::abs(ds[u] + w - ds[v]) <= eps;
            const bool on_path = std::abs(ds[v] + dt[v] - total) <= eps;
            if (tight && on_path && (best < 0 || nodes_[v].id < nodes_[best].id)) {
                best = v;
            }
        }
        if (best < 0) throw NumericalError("path reconstruction failed");  // unreachable
        path.push_back(nodes_[best].id);
        u = best;
    }
    return path;
}

// ----------------------------------------------------------------------------
// JSON I/O
// ----------------------------------------------------------------------------

NetworkGraph NetworkGraph::from_json_text(const std::string& text, const std::string& context) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(context + ": " + e.what());
    }
    if (!root.is_object() || !root.contains("nodes") || !root.contains("edges")) {
        throw ParseError(context + ": expected object with 'nodes' and 'edges' arrays");
    }
    reject_unknown_keys(root, {"nodes", "edges"}, context);

    std::vector<Node> nodes;
    for (const json& jn : root["nodes"]) {
        const std::string ctx = context + ", node '" + jn.value("id", std::string("?")) + "'";
        reject_unknown_keys(jn,
                            {"id", "kind", "elevation_z", "base_demand", "measured",
                             "tank_area", "fixed_head"},
                            ctx);
        Node n;
        n.id = require_string(jn, "id", ctx);
        n.kind = parse_node_kind(require_string(jn, "kind", ctx), ctx);
        n.elevation_z = require_number(jn, "elevation_z", ctx);
        n.measured = jn.value("measured", true);
        if (n.kind == NodeKind::Junction) {
            n.base_demand = jn.value("base_demand", 0.0);
        }
        if (n.kind == NodeKind::Tank) n.tank_area = require_number(jn, "tank_area", ctx);
        if (n.kind == NodeKind::Reservoir) n.fixed_head = require_number(jn, "fixed_head", ctx);
        nodes.push_back(std::move(n));
    }

    std::vector<Edge> edges;
    for (const json& je : root["edges"]) {
        const std::string ctx = context + ", edge '" + je.value("id", std::string("?")) + "'";
        reject_unknown_keys(je,
                            {"id", "from", "to", "kind", "length_L", "diameter_D",
                             "roughness_C", "pump_shutoff_head_h0", "pump_curve_coeff_r",
                             "status"},
                            ctx);
        Edge e;
        e.id = require_string(je, "id", ctx);
        e.from = require_string(je, "from", ctx);
        e.to = require_string(je, "to", ctx);
        e.kind = parse_edge_kind(require_string(je, "kind", ctx), ctx);
        e.status = parse_edge_status(je.value("status", std::string("open")), ctx);
        if (e.kind == EdgeKind::Pipe) {
            e.length_L = require_number(je, "length_L", ctx);
            e.diameter_D = require_number(je, "diameter_D", ctx);
            e.roughness_C = require_number(je, "roughness_C", ctx);
        } else {
            e.pump_shutoff_head_h0 = require_number(je, "pump_shutoff_head_h0", ctx);
            e.pump_curve_coeff_r = require_number(je, "pump_curve_coeff_r", ctx);
        }
        edges.push_back(std::move(e));
    }

    return NetworkGraph(std::move(nodes), std::move(edges));
}

NetworkGraph NetworkGraph::load(const std::filesystem::path& path) {
    return from_json_text(read_file(path), path.string());
}

std::string NetworkGraph::to_json_text() const {
    json root;
    root["nodes"] = json::array();
    for (const Node& n : nodes_) {
        json jn;
        jn["id"] = n.id;
        jn["kind"] = to_string(n.kind);
        jn["elevation_z"] = n.elevation_z;
        jn["measured"] = n.measured;
        if (n.kind == NodeKind::Junction) jn["base_demand"] = n.base_demand;
        if (n.kind == NodeKind::Tank) jn["tank_area"] = n.tank_area;
        if (n.kind == NodeKind::Reservoir) jn["fixed_head"] = n.fixed_head;
        root["nodes"].push_back(jn);
    }
    root["edges"] = json::array();
    for (const Edge& e : edges_) {
        json je;
        je["id"] = e.id;
        je["from"] = e.from;
        je["to"] = e.to;
        je["kind"] = to_string(e.kind);
        je["status"] = to_string(e.status);
        if (e.kind == EdgeKind::Pipe) {
            je["length_L"] = e.length_L;
            je["diameter_D"] = e.diameter_D;
            je["roughness_C"] = e.roughness_C;
        } else {
            je["pump_shutoff_head_h0"] = e.pump_shutoff_head_h0;
            je["pump_curve_coeff_r"] = e.pump_curve_coeff_r;
        }
        root["edges"].push_back(je);
    }
    return root.dump(2) + "\n";
}

void NetworkGraph::save(const std::filesystem::path& path) const {
    atomic_write(path, to_json_text());
}

}  // namespace hydronet
