#include "hydronet/network.hpp"
#include "hydronet/io.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <limits>

using namespace hydronet;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& content) {
    fs::path path = fs::temp_directory_path() / name;
    atomic_write(path, content);
    return path;
}

// Brute-force oracle: minimum path weight over all simple paths (DFS).
double brute_force_distance(const NetworkGraph& g, int s, int t) {
    std::vector<char> used(g.node_count(), 0);
    double best = std::numeric_limits<double>::infinity();
    auto dfs = [&](auto&& self, int u, double acc) -> void {
        if (u == t) {
            best = std::min(best, acc);
            return;
        }
        used[u] = 1;
        for (int e : g.incident_edges(u)) {
            const int v = g.edge_from(e) == u ? g.edge_to(e) : g.edge_from(e);
            if (used[v]) continue;
            const double w =
                g.edges()[e].kind == EdgeKind::Pipe ? g.edges()[e].length_L : 0.0;
            self(self, v, acc + w);
        }
        used[u] = 0;
    };
    dfs(dfs, s, 0.0);
    return best;
}

const char* kThreeNodeJson = R"({
  "nodes": [
    {"id": "R1", "kind": "reservoir", "elevation_z": 45.0, "fixed_head": 50.0},
    {"id": "J1", "kind": "junction", "elevation_z": 10.0, "base_demand": 0.01},
    {"id": "T1", "kind": "tank", "elevation_z": 38.0, "tank_area": 200.0}
  ],
  "edges": [
    {"id": "P1", "from": "R1", "to": "J1", "kind": "pipe",
     "length_L": 600.0, "diameter_D": 0.3, "roughness_C": 110.0},
    {"id": "P2", "from": "J1", "to": "T1", "kind": "pipe",
     "length_L": 400.0, "diameter_D": 0.25, "roughness_C": 100.0}
  ]
})";

}  // namespace

TEST_CASE("load_network parses the 3-node fixture") {
    auto path = write_temp("hydronet_net3.json", kThreeNodeJson);
    NetworkGraph g = NetworkGraph::load(path);
    CHECK(g.node_count() == 3);
    CHECK(g.edge_count() == 2);
    CHECK(g.nodes()[g.node_index("T1")].tank_area == doctest::Approx(200.0));
    CHECK(g.nodes()[g.node_index("R1")].fixed_head == doctest::Approx(50.0));
}

TEST_CASE("load_network rejects duplicate node ids") {
    const char* bad = R"({
      "nodes": [
        {"id": "J1", "kind": "junction", "elevation_z": 0.0},
        {"id": "J1", "kind": "junction", "elevation_z": 1.0}
      ],
      "edges": []
    })";
    auto path = write_temp("hydronet_dup.json", bad);
    CHECK_THROWS_WITH_AS(NetworkGraph::load(path), doctest::Contains("duplicate node id"),
                         ValidationError);
}

TEST_CASE("load_network names a missing endpoint") {
    const char* bad = R"({
      "nodes": [{"id": "J1", "kind": "junction", "elevation_z": 0.0}],
      "edges": [{"id": "P1", "from": "J1", "to": "X", "kind": "pipe",
                 "length_L": 10.0, "diameter_D": 0.1, "roughness_C": 100.0}]
    })";
    auto path = write_temp("hydronet_missing.json", bad);
    CHECK_THROWS_WITH_AS(NetworkGraph::load(path), doctest::Contains("'X'"),
                         ValidationError);
}

TEST_CASE("load_network rejects unknown keys") {
    const char* bad = R"({
      "nodes": [{"id": "J1", "kind": "junction", "elevation_z": 0.0, "color": "red"}],
      "edges": []
    })";
    auto path = write_temp("hydronet_unknown.json", bad);
    CHECK_THROWS_AS(NetworkGraph::load(path), ParseError);
}

TEST_CASE("load_network rejects disconnected graphs") {
    const char* bad = R"({
      "nodes": [
        {"id": "A", "kind": "junction", "elevation_z": 0.0},
        {"id": "B", "kind": "junction", "elevation_z": 0.0},
        {"id": "J7", "kind": "junction", "elevation_z": 0.0}
      ],
      "edges": [{"id": "P1", "from": "A", "to": "B", "kind": "pipe",
                 "length_L": 10.0, "diameter_D": 0.1, "roughness_C": 100.0}]
    })";
    auto path = write_temp("hydronet_disc.json", bad);
    CHECK_THROWS_WITH_AS(NetworkGraph::load(path), doctest::Contains("J7"),
                         ValidationError);
}

TEST_CASE("save/load round-trip preserves the canonical field set") {
    NetworkGraph g = testing::three_node_fixture();
    auto path = fs::temp_directory_path() / "hydronet_roundtrip.json";
    g.save(path);
    NetworkGraph back = NetworkGraph::load(path);
    REQUIRE(back.node_count() == g.node_count());
    REQUIRE(back.edge_count() == g.edge_count());
    for (int i = 0; i < g.node_count(); ++i) {
        CHECK(back.nodes()[i].id == g.nodes()[i].id);
        CHECK(back.nodes()[i].kind == g.nodes()[i].kind);
        CHECK(back.nodes()[i].elevation_z == g.nodes()[i].elevation_z);
        CHECK(back.nodes()[i].base_demand == g.nodes()[i].base_demand);
        CHECK(back.nodes()[i].measured == g.nodes()[i].measured);
        CHECK(back.nodes()[i].tank_area == g.nodes()[i].tank_area);
        CHECK(back.nodes()[i].fixed_head == g.nodes()[i].fixed_head);
    }
    for (int e = 0; e < g.edge_count(); ++e) {
        CHECK(back.edges()[e].id == g.edges()[e].id);
        CHECK(back.edges()[e].from == g.edges()[e].from);
        CHECK(back.edges()[e].to == g.edges()[e].to);
        CHECK(back.edges()[e].length_L == g.edges()[e].length_L);
        CHECK(back.edges()[e].status == g.edges()[e].status);
    }
}

TEST_CASE("hydraulic_distance on a path graph sums pipe lengths") {
    NetworkGraph g = testing::path_fixture();
    CHECK(g.hydraulic_distance("A", "C") == doctest::Approx(300.0));
    CHECK(g.hydraulic_distance("A", "A") == 0.0);
}

TEST_CASE("hydraulic_distance prefers the two-hop route on the triangle") {
    NetworkGraph g = testing::triangle_fixture();
    const double d = g.hydraulic_distance("A", "C");
    CHECK(d == doctest::Approx(200.0));
    CHECK(d == doctest::Approx(brute_force_distance(g, g.node_index("A"),
                                                    g.node_index("C"))));
}

TEST_CASE("hydraulic_distance is symmetric and satisfies the triangle inequality") {
    NetworkGraph g = testing::triangle_fixture();
    for (int i = 0; i < g.node_count(); ++i) {
        for (int j = 0; j < g.node_count(); ++j) {
            CHECK(g.hydraulic_distance(i, j) == doctest::Approx(g.hydraulic_distance(j, i)));
            for (int k = 0; k < g.node_count(); ++k) {
                CHECK(g.hydraulic_distance(i, k) <=
                      g.hydraulic_distance(i, j) + g.hydraulic_distance(j, k) + 1e-9);
            }
        }
    }
}

TEST_CASE("shortest_hydraulic_path basics") {
    NetworkGraph g = testing::path_fixture();
    CHECK(g.shortest_hydraulic_path("A", "C") ==
          std::vector<std::string>{"A", "B", "C"});
    CHECK(g.shortest_hydraulic_path("B", "B") == std::vector<std::string>{"B"});
}

TEST_CASE("shortest_hydraulic_path breaks ties lexicographically") {
    // Two equal-length routes S -> B -> T and S -> C -> T; B wins.
    std::vector<Node> nodes(4);
    nodes[0] = {"S", NodeKind::Reservoir, 0.0, 0.0, true, 0.0, 50.0};
    nodes[1] = {"B", NodeKind::Junction, 0.0, 0.0, true, 0.0, 0.0};
    nodes[2] = {"C", NodeKind::Junction, 0.0, 0.0, true, 0.0, 0.0};
    nodes[3] = {"T", NodeKind::Junction, 0.0, 0.01, true, 0.0, 0.0};
    std::vector<Edge> edges(4);
    edges[0] = {"E1", "S", "B", EdgeKind::Pipe, 100.0, 0.3, 100.0, 0.0, 0.0,
                EdgeStatus::Open};
    edges[1] = {"E2", "B", "T", EdgeKind::Pipe, 100.0, 0.3, 100.0, 0.0, 0.0,
                EdgeStatus::Open};
    edges[2] = {"E3", "S", "C", EdgeKind::Pipe, 100.0, 0.3, 100.0, 0.0, 0.0,
                EdgeStatus::Open};
    edges[3] = {"E4", "C", "T", EdgeKind::Pipe, 100.0, 0.3, 100.0, 0.0, 0.0,
                EdgeStatus::Open};
    NetworkGraph g(std::move(nodes), std::move(edges));

    // Oracle: both routes have length 200; "B" < "C" lexicographically.
    CHECK(g.hydraulic_distance("S", "T") == doctest::Approx(200.0));
    CHECK(g.shortest_hydraulic_path("S", "T") ==
          std::vector<std::string>{"S", "B", "T"});
}

TEST_CASE("pump edges contribute zero hydraulic distance") {
    std::vector<Node> nodes(2);
    nodes[0] = {"R", NodeKind::Reservoir, 0.0, 0.0, true, 0.0, 50.0};
    nodes[1] = {"J", NodeKind::Junction, 0.0, 0.0, true, 0.0, 0.0};
    std::vector<Edge> edges(1);
    edges[0] = {"PU", "R", "J", EdgeKind::Pump, 0.0, 0.0, 0.0, 40.0, 500.0,
                EdgeStatus::Open};
    NetworkGraph g(std::move(nodes), std::move(edges));
    CHECK(g.hydraulic_distance("R", "J") == 0.0);
}
