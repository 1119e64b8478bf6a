// Water-network graph model: nodes (junctions, tanks, reservoirs), edges
// (pipes, pumps), strict JSON I/O, validation, and hydraulic-distance queries.
//
// NetworkGraph is immutable after construction and safe to share across
// threads. Hydraulic distance is shortest-path length over pipe lengths with
// pump edges contributing zero meters; ties everywhere break toward the
// lexicographically smaller node-id sequence.

#pragma once

#include "hydronet/core.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace hydronet {

enum class NodeKind { Junction, Tank, Reservoir };
enum class EdgeKind { Pipe, Pump };
enum class EdgeStatus { Open, Closed };

struct Node {
    std::string id;
    NodeKind kind = NodeKind::Junction;
    double elevation_z = 0.0;     // m
    double base_demand = 0.0;     // m^3/s, junctions only
    bool measured = true;
    double tank_area = 0.0;       // m^2, tanks only
    double fixed_head = 0.0;      // m, reservoirs only
};

struct Edge {
    std::string id;
    std::string from;
    std::string to;
    EdgeKind kind = EdgeKind::Pipe;
    double length_L = 0.0;               // m, pipes
    double diameter_D = 0.0;             // m, pipes
    double roughness_C = 0.0;            // Hazen-Williams C, pipes
    double pump_shutoff_head_h0 = 0.0;   // m, pumps
    double pump_curve_coeff_r = 0.0;     // s^2/m^5, pumps
    EdgeStatus status = EdgeStatus::Open;
};

class NetworkGraph {
public:
    NetworkGraph(std::vector<Node> nodes, std::vector<Edge> edges);

    static NetworkGraph load(const std::filesystem::path& path);
    static NetworkGraph from_json_text(const std::string& text, const std::string& context);
    void save(const std::filesystem::path& path) const;
    std::string to_json_text() const;

    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }
    int node_count() const { return static_cast<int>(nodes_.size()); }
    int edge_count() const { return static_cast<int>(edges_.size()); }

    int node_index(const std::string& id) const;
    int edge_index(const std::string& id) const;
    bool has_node(const std::string& id) const { return node_by_id_.count(id) > 0; }
    bool has_edge(const std::string& id) const { return edge_by_id_.count(id) > 0; }

    /// Edge endpoints as node indices.
    int edge_from(int e) const { return edge_from_[e]; }
    int edge_to(int e) const { return edge_to_[e]; }

    /// Incident edge indices of a node (both orientations).
    const std::vector<int>& incident_edges(int v) const { return incident_[v]; }

    /// Unique undirected neighbor node indices, ascending.
    const std::vector<int>& neighbors(int v) const { return neighbors_[v]; }

    /// Attention support set: node itself plus neighbors, ascending indices.
    const std::vector<int>& support(int v) const { return support_[v]; }

    std::vector<int> node_indices_of_kind(NodeKind kind) const;
    std::vector<int> edge_indices_of_kind(EdgeKind kind) const;

    /// Shortest-path length in meters; pipes weigh length_L, pumps 0.
    double hydraulic_distance(int i, int j) const;
    double hydraulic_distance(const std::string& i, const std::string& j) const;

    /// Node sequence realizing hydraulic_distance; lexicographic tie-break.
    std::vector<std::string> shortest_hydraulic_path(const std::string& i,
                                                     const std::string& j) const;

    /// Distances from `source` to every node (meters).
    std::vector<double> distances_from(int source) const;

private:
    void validate() const;
    void build_adjacency();

    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    std::unordered_map<std::string, int> node_by_id_;
    std::unordered_map<std::string, int> edge_by_id_;
    std::vector<int> edge_from_, edge_to_;
    std::vector<std::vector<int>> incident_;
    std::vector<std::vector<int>> neighbors_;
    std::vector<std::vector<int>> support_;
};

const char* to_string(NodeKind kind);
const char* to_string(EdgeKind kind);
const char* to_string(EdgeStatus status);

}  // namespace hydronet
