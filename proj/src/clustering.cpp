#include "hydronet/clustering.hpp"

#include "hydronet/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <numeric>
#include <queue>

namespace hydronet {

double modularity(const NetworkGraph& g, const std::vector<int>& assignment) {
    const double m = static_cast<double>(g.edge_count());
    if (m == 0.0) return 0.0;
    const int clusters = *std::max_element(assignment.begin(), assignment.end()) + 1;
    std::vector<double> internal(clusters, 0.0), degree(clusters, 0.0);
    for (int e = 0; e < g.edge_count(); ++e) {
        const int a = assignment[g.edge_from(e)];
        const int b = assignment[g.edge_to(e)];
        if (a == b) internal[a] += 1.0;
        degree[a] += 1.0;
        degree[b] += 1.0;
    }
    double q = 0.0;
    for (int c = 0; c < clusters; ++c) {
        q += internal[c] / m - (degree[c] / (2.0 * m)) * (degree[c] / (2.0 * m));
    }
    return q;
}

namespace {

// Weighted multigraph for the aggregation levels. Self-loop weight counts
// once toward total weight and twice toward a node's degree.
struct LevelGraph {
    int n = 0;
    std::vector<std::map<int, double>> nbr;  // off-diagonal weights
    std::vector<double> self;
    std::vector<int> repr;  // smallest original node index in the supernode
    double total_weight = 0.0;

    double degree(int i) const {
        double d = 2.0 * self[i];
        for (const auto& [j, w] : nbr[i]) d += w;
        return d;
    }
};

/// One sweep phase: move nodes (visit order by repr) greedily until stable.
/// Returns true when at least one node moved.
bool local_moves(const LevelGraph& lg, std::vector<int>& community) {
    std::vector<int> order(lg.n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return lg.repr[a] < lg.repr[b]; });

    const double m = lg.total_weight;
    std::vector<double> community_degree(lg.n, 0.0);
    for (int i = 0; i < lg.n; ++i) community_degree[community[i]] += lg.degree(i);

    bool any_move = false;
    bool improved = true;
    while (improved) {
        improved = false;
        for (int i : order) {
            const int current = community[i];
            const double ki = lg.degree(i);

            // Weight from i into each candidate community.
            std::map<int, double> links;
            links[current] += 0.0;
            for (const auto& [j, w] : lg.nbr[i]) links[community[j]] += w;

            community_degree[current] -= ki;
            const double base_gain =
                links[current] / m - community_degree[current] * ki / (2.0 * m * m);

            int best = current;
            double best_gain = base_gain;
            int best_repr = std::numeric_limits<int>::max();
            for (const auto& [c, w] : links) {
                if (c == current) continue;
                const double gain = w / m - community_degree[c] * ki / (2.0 * m * m);
                const bool strictly_better = gain > best_gain + 1e-12;
                const bool tie_break = best != current &&
                                       std::abs(gain - best_gain) <= 1e-12 &&
                                       lg.repr[c] < best_repr;
                if (strictly_better || tie_break) {
                    best = c;
                    best_gain = gain;
                    best_repr = lg.repr[c];
                }
            }
            community_degree[best] += ki;
            if (best != current) {
                community[i] = best;
                improved = true;
                any_move = true;
            }
        }
    }
    return any_move;
}

LevelGraph aggregate(const LevelGraph& lg, const std::vector<int>& community,
                     std::vector<int>& relabel) {
    // Renumber communities by smallest representative for determinism.
    std::map<int, int> repr_of;
    for (int i = 0; i < lg.n; ++i) {
        auto it = repr_of.find(community[i]);
        if (it == repr_of.end() || lg.repr[i] < it->second) {
            repr_of[community[i]] = lg.repr[i];
        }
    }
    std::vector<std::pair<int, int>> ordered;  // (repr, old community)
    for (const auto& [c, r] : repr_of) ordered.emplace_back(r, c);
    std::sort(ordered.begin(), ordered.end());
    std::map<int, int> new_id;
    for (std::size_t idx = 0; idx < ordered.size(); ++idx) {
        new_id[ordered[idx].second] = static_cast<int>(idx);
    }

    relabel.resize(lg.n);
    for (int i = 0; i < lg.n; ++i) relabel[i] = new_id[community[i]];

    LevelGraph next;
    next.n = static_cast<int>(ordered.size());
    next.nbr.resize(next.n);
    next.self.assign(next.n, 0.0);
    next.repr.assign(next.n, std::numeric_limits<int>::max());
    next.total_weight = lg.total_weight;
    for (int i = 0; i < lg.n; ++i) {
        const int ci = relabel[i];
        next.repr[ci] = std::min(next.repr[ci], lg.repr[i]);
        next.self[ci] += lg.self[i];
        for (const auto& [j, w] : lg.nbr[i]) {
            if (j < i) continue;  // visit each undirected pair once
            const int cj = relabel[j];
            if (ci == cj) next.self[ci] += w;
            else {
                next.nbr[ci][cj] += w;
                next.nbr[cj][ci] += w;
            }
        }
    }
    return next;
}

}  // namespace

Clustering louvain(const NetworkGraph& g) {
    const int n = g.node_count();
    Clustering result;
    result.assignment.assign(n, 0);
    if (n == 0) return result;

    // Visit order is lexicographic by node id: rank nodes accordingly.
    std::vector<int> rank(n);
    {
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return g.nodes()[a].id < g.nodes()[b].id;
        });
        for (int pos = 0; pos < n; ++pos) rank[order[pos]] = pos;
    }

    LevelGraph lg;
    lg.n = n;
    lg.nbr.resize(n);
    lg.self.assign(n, 0.0);
    lg.repr = rank;
    lg.total_weight = static_cast<double>(g.edge_count());
    for (int e = 0; e < g.edge_count(); ++e) {
        lg.nbr[g.edge_from(e)][g.edge_to(e)] += 1.0;
        lg.nbr[g.edge_to(e)][g.edge_from(e)] += 1.0;
    }

    // node -> community at the original level, refined across levels.
    std::vector<int> flat(n);
    std::iota(flat.begin(), flat.end(), 0);

    if (lg.total_weight > 0.0) {
        while (true) {
            std::vector<int> community(lg.n);
            std::iota(community.begin(), community.end(), 0);
            const bool moved = local_moves(lg, community);
            std::vector<int> relabel;
            LevelGraph next = aggregate(lg, community, relabel);
            for (int i = 0; i < n; ++i) flat[i] = relabel[flat[i]];
            if (!moved || next.n == lg.n) break;
            lg = std::move(next);
        }
    }

    // Split any disconnected cluster into its connected components; removing
    // absent inter-component edges can only raise modularity.
    std::vector<int> component(n, -1);
    int next_component = 0;
    for (int i = 0; i < n; ++i) {
        if (component[i] >= 0) continue;
        std::queue<int> q;
        q.push(i);
        component[i] = next_component;
        while (!q.empty()) {
            const int u = q.front();
            q.pop();
            for (int v : g.neighbors(u)) {
                if (component[v] < 0 && flat[v] == flat[u]) {
                    component[v] = next_component;
                    q.push(v);
                }
            }
        }
        ++next_component;
    }

    // Renumber by smallest member node index.
    std::vector<int> first_member(next_component, n);
    for (int i = 0; i < n; ++i) {
        first_member[component[i]] = std::min(first_member[component[i]], i);
    }
    std::vector<int> by_first(next_component);
    std::iota(by_first.begin(), by_first.end(), 0);
    std::sort(by_first.begin(), by_first.end(),
              [&](int a, int b) { return first_member[a] < first_member[b]; });
    std::vector<int> new_id(next_component);
    for (int idx = 0; idx < next_component; ++idx) new_id[by_first[idx]] = idx;

    result.assignment.resize(n);
    for (int i = 0; i < n; ++i) result.assignment[i] = new_id[component[i]];
    result.count = next_component;
    result.modularity = modularity(g, result.assignment);
    return result;
}

void Clustering::save(const std::filesystem::path& path,
                      const std::vector<std::string>& node_ids) const {
    nlohmann::json root;
    for (std::size_t i = 0; i < node_ids.size(); ++i) {
        root[node_ids[i]] = assignment[i];
    }
    root["modularity"] = modularity;
    atomic_write(path, root.dump(2) + "\n");
}

}  // namespace hydronet
