// Louvain community detection (greedy modularity maximization) over the
// unweighted network topology, with deterministic lexicographic visit order.

#pragma once

#include "hydronet/network.hpp"

#include <filesystem>
#include <vector>

namespace hydronet {

struct Clustering {
    std::vector<int> assignment;  // node index -> cluster index
    int count = 0;
    double modularity = 0.0;

    void save(const std::filesystem::path& path,
              const std::vector<std::string>& node_ids) const;
};

/// Newman-Girvan modularity of a partition on the (multi)graph; parallel
/// edges accumulate weight.
double modularity(const NetworkGraph& g, const std::vector<int>& assignment);

/// Greedy local moves + aggregation until no improvement; node visit order is
/// lexicographic by id, so the result is deterministic. Final clusters are
/// split into connected components (a strict modularity improvement whenever
/// Louvain leaves a disconnected cluster) and renumbered by smallest member.
Clustering louvain(const NetworkGraph& g);

}  // namespace hydronet
