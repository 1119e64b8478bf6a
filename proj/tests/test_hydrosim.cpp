#include "hydronet/hydrosim.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace hydronet;

namespace {

// ----------------------------------------------------------------------------
// Independent oracle for tree networks (no loops): flows follow from mass
// balance alone (leaf elimination), heads from walking away from the single
// fixed-head node. No Newton iteration, no Jacobian.
// ----------------------------------------------------------------------------
struct TreeOracle {
    std::map<std::string, double> head;
    std::map<std::string, double> flow;  // signed by edge orientation
};

TreeOracle solve_tree(const NetworkGraph& g, const Vector& demand, int root) {
    TreeOracle result;
    const int n = g.node_count();

    // Accumulate downstream demand via DFS from the root.
    std::vector<double> subtree(n, 0.0);
    std::vector<int> parent_edge(n, -1);
    std::vector<int> order;
    std::vector<char> seen(n, 0);
    auto dfs = [&](auto&& self, int u) -> void {
        seen[u] = 1;
        order.push_back(u);
        subtree[u] = demand[u];
        for (int e : g.incident_edges(u)) {
            const int v = g.edge_from(e) == u ? g.edge_to(e) : g.edge_from(e);
            if (seen[v]) continue;
            parent_edge[v] = e;
            self(self, v);
            subtree[u] += subtree[v];
        }
    };
    dfs(dfs, root);

    // Each edge carries its far-side subtree demand, signed toward the leaf.
    for (int v : order) {
        if (parent_edge[v] < 0) continue;
        const int e = parent_edge[v];
        const double q = subtree[v];
        result.flow[g.edges()[e].id] = g.edge_to(e) == v ? q : -q;
    }

    // Heads: walk from the root, subtracting head loss along flow direction.
    std::vector<double> head(n, 0.0);
    head[root] = g.nodes()[root].kind == NodeKind::Reservoir
                     ? g.nodes()[root].fixed_head
                     : g.nodes()[root].elevation_z;
    for (int v : order) {
        if (parent_edge[v] < 0) continue;
        const int e = parent_edge[v];
        const Edge& edge = g.edges()[e];
        const int u = g.edge_from(e) == v ? g.edge_to(e) : g.edge_from(e);
        const double q = result.flow[edge.id];
        const double drop = hw_head_loss(q, edge.length_L, edge.diameter_D,
                                         edge.roughness_C);
        head[v] = g.edge_to(e) == v ? head[u] - drop : head[u] + drop;
    }
    for (int i = 0; i < n; ++i) result.head[g.nodes()[i].id] = head[i];
    return result;
}

NetworkGraph y_network() {
    // R -> J1, then J1 branches to J2 and J3 (demands at all three junctions).
    std::vector<Node> nodes(4);
    nodes[0] = {"R", NodeKind::Reservoir, 40.0, 0.0, true, 0.0, 50.0};
    nodes[1] = {"J1", NodeKind::Junction, 10.0, 0.004, true, 0.0, 0.0};
    nodes[2] = {"J2", NodeKind::Junction, 8.0, 0.010, true, 0.0, 0.0};
    nodes[3] = {"J3", NodeKind::Junction, 12.0, 0.006, true, 0.0, 0.0};
    std::vector<Edge> edges(3);
    edges[0] = {"P1", "R", "J1", EdgeKind::Pipe, 800.0, 0.3, 110.0, 0.0, 0.0,
                EdgeStatus::Open};
    edges[1] = {"P2", "J1", "J2", EdgeKind::Pipe, 500.0, 0.2, 100.0, 0.0, 0.0,
                EdgeStatus::Open};
    edges[2] = {"P3", "J1", "J3", EdgeKind::Pipe, 650.0, 0.15, 120.0, 0.0, 0.0,
                EdgeStatus::Open};
    return NetworkGraph(std::move(nodes), std::move(edges));
}

}  // namespace

TEST_CASE("zero demand, closed pumps: flows vanish and heads equal the reservoir") {
    std::vector<Node> nodes(3);
    nodes[0] = {"R", NodeKind::Reservoir, 40.0, 0.0, true, 0.0, 50.0};
    nodes[1] = {"J1", NodeKind::Junction, 10.0, 0.0, true, 0.0, 0.0};
    nodes[2] = {"J2", NodeKind::Junction, 10.0, 0.0, true, 0.0, 0.0};
    std::vector<Edge> edges(3);
    edges[0] = {"P1", "R", "J1", EdgeKind::Pipe, 500.0, 0.3, 100.0, 0.0, 0.0,
                EdgeStatus::Open};
    edges[1] = {"P2", "J1", "J2", EdgeKind::Pipe, 500.0, 0.3, 100.0, 0.0, 0.0,
                EdgeStatus::Open};
    edges[2] = {"PU", "R", "J2", EdgeKind::Pump, 0.0, 0.0, 0.0, 40.0, 500.0,
                EdgeStatus::Open};
    NetworkGraph g(std::move(nodes), std::move(edges));

    BoundaryConditions bc = BoundaryConditions::defaults(g);
    bc.pump_open[2] = 0;
    HydraulicState state = solve_steady_state(g, bc);
    for (int e = 0; e < g.edge_count(); ++e) CHECK(std::abs(state.flow[e]) < 1e-9);
    CHECK(state.head[g.node_index("J1")] == doctest::Approx(50.0).epsilon(1e-9));
    CHECK(state.head[g.node_index("J2")] == doctest::Approx(50.0).epsilon(1e-9));
}

TEST_CASE("single pipe: mass balance forces the flow, head from the loss formula") {
    std::vector<Node> nodes(2);
    nodes[0] = {"R", NodeKind::Reservoir, 40.0, 0.0, true, 0.0, 50.0};
    nodes[1] = {"J", NodeKind::Junction, 10.0, 0.02, true, 0.0, 0.0};
    std::vector<Edge> edges(1);
    edges[0] = {"P1", "R", "J", EdgeKind::Pipe, 700.0, 0.25, 105.0, 0.0, 0.0,
                EdgeStatus::Open};
    NetworkGraph g(std::move(nodes), std::move(edges));

    HydraulicState state = solve_steady_state(g, BoundaryConditions::defaults(g));
    CHECK(state.flow[0] == doctest::Approx(0.02).epsilon(1e-8));
    const double expected_head = 50.0 - hw_head_loss(0.02, 700.0, 0.25, 105.0);
    CHECK(state.head[1] == doctest::Approx(expected_head).epsilon(1e-8));
}

TEST_CASE("two identical parallel pipes split the demand evenly") {
    std::vector<Node> nodes(2);
    nodes[0] = {"R", NodeKind::Reservoir, 40.0, 0.0, true, 0.0, 50.0};
    nodes[1] = {"J", NodeKind::Junction, 10.0, 0.03, true, 0.0, 0.0};
    std::vector<Edge> edges(2);
    edges[0] = {"P1", "R", "J", EdgeKind::Pipe, 500.0, 0.2, 100.0, 0.0, 0.0,
                EdgeStatus::Open};
    edges[1] = {"P2", "R", "J", EdgeKind::Pipe, 500.0, 0.2, 100.0, 0.0, 0.0,
                EdgeStatus::Open};
    NetworkGraph g(std::move(nodes), std::move(edges));

    HydraulicState state = solve_steady_state(g, BoundaryConditions::defaults(g));
    CHECK(state.flow[0] == doctest::Approx(0.015).epsilon(1e-8));
    CHECK(state.flow[1] == doctest::Approx(0.015).epsilon(1e-8));
}

TEST_CASE("Y-network matches the tree oracle to 1e-5") {
    NetworkGraph g = y_network();
    BoundaryConditions bc = BoundaryConditions::defaults(g);
    TreeOracle oracle = solve_tree(g, bc.demand, g.node_index("R"));
    HydraulicState state = solve_steady_state(g, bc);

    for (int i = 0; i < g.node_count(); ++i) {
        CHECK(state.head[i] ==
              doctest::Approx(oracle.head.at(g.nodes()[i].id)).epsilon(1e-5));
    }
    for (int e = 0; e < g.edge_count(); ++e) {
        CHECK(state.flow[e] ==
              doctest::Approx(oracle.flow.at(g.edges()[e].id)).epsilon(1e-5));
    }
}

TEST_CASE("junction mass residuals sit below the solver tolerance") {
    NetworkGraph g = y_network();
    BoundaryConditions bc = BoundaryConditions::defaults(g);
    HydraulicState state = solve_steady_state(g, bc);
    for (int i = 0; i < g.node_count(); ++i) {
        if (g.nodes()[i].kind != NodeKind::Junction) continue;
        double balance = -bc.demand[i];
        for (int e : g.incident_edges(i)) {
            balance += g.edge_to(e) == i ? state.flow[e] : -state.flow[e];
        }
        CHECK(std::abs(balance) < 1e-6);
    }
}

TEST_CASE("pump obeys its curve and a closed pump isolates nothing reachable") {
    std::vector<Node> nodes(2);
    nodes[0] = {"R", NodeKind::Reservoir, 5.0, 0.0, true, 0.0, 10.0};
    nodes[1] = {"J", NodeKind::Junction, 5.0, 0.05, true, 0.0, 0.0};
    std::vector<Edge> edges(2);
    edges[0] = {"PU", "R", "J", EdgeKind::Pump, 0.0, 0.0, 0.0, 40.0, 600.0,
                EdgeStatus::Open};
    edges[1] = {"P1", "R", "J", EdgeKind::Pipe, 400.0, 0.2, 100.0, 0.0, 0.0,
                EdgeStatus::Open};
    NetworkGraph g(std::move(nodes), std::move(edges));

    HydraulicState state = solve_steady_state(g, BoundaryConditions::defaults(g));
    // Pump gain equals the head rise it produces.
    const double rise = state.head[1] - state.head[0];
    const double q = state.flow[0];
    CHECK(rise == doctest::Approx(40.0 - 600.0 * q * q).epsilon(1e-7));
    // Mass balance across both elements.
    CHECK(state.flow[0] + state.flow[1] == doctest::Approx(0.05).epsilon(1e-8));
}

TEST_CASE("closed pump isolating a junction names the node set") {
    std::vector<Node> nodes(2);
    nodes[0] = {"R", NodeKind::Reservoir, 5.0, 0.0, true, 0.0, 10.0};
    nodes[1] = {"J9", NodeKind::Junction, 5.0, 0.01, true, 0.0, 0.0};
    std::vector<Edge> edges(1);
    edges[0] = {"PU", "R", "J9", EdgeKind::Pump, 0.0, 0.0, 0.0, 40.0, 600.0,
                EdgeStatus::Open};
    NetworkGraph g(std::move(nodes), std::move(edges));

    BoundaryConditions bc = BoundaryConditions::defaults(g);
    bc.pump_open[0] = 0;
    CHECK_THROWS_WITH_AS(solve_steady_state(g, bc), doctest::Contains("J9"),
                         NumericalError);
}

TEST_CASE("raising one junction demand never raises its head") {
    NetworkGraph g = y_network();
    BoundaryConditions bc = BoundaryConditions::defaults(g);
    const int j2 = g.node_index("J2");
    double previous = std::numeric_limits<double>::infinity();
    for (double d = 0.002; d <= 0.03; d += 0.004) {
        bc.demand[j2] = d;
        HydraulicState state = solve_steady_state(g, bc);
        CHECK(state.head[j2] <= previous + 1e-9);
        previous = state.head[j2];
    }
}
