#include "hydronet/scada.hpp"
#include "hydronet/features.hpp"
#include "hydronet/io.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <filesystem>

using namespace hydronet;
namespace fs = std::filesystem;

namespace {

// Reservoir feeding through a pump, with a floating tank on the far side.
NetworkGraph pumped_fixture() {
    std::vector<Node> nodes(4);
    nodes[0] = {"R1", NodeKind::Reservoir, 5.0, 0.0, true, 0.0, 10.0};
    nodes[1] = {"J1", NodeKind::Junction, 8.0, 0.012, true, 0.0, 0.0};
    nodes[2] = {"J2", NodeKind::Junction, 6.0, 0.008, true, 0.0, 0.0};
    nodes[3] = {"T1", NodeKind::Tank, 30.0, 0.0, true, 4000.0, 0.0};
    std::vector<Edge> edges(4);
    edges[0] = {"PU1", "R1", "J1", EdgeKind::Pump, 0.0, 0.0, 0.0, 45.0, 900.0,
                EdgeStatus::Open};
    edges[1] = {"P1", "J1", "J2", EdgeKind::Pipe, 500.0, 0.25, 110.0, 0.0, 0.0,
                EdgeStatus::Open};
    edges[2] = {"P2", "J2", "T1", EdgeKind::Pipe, 400.0, 0.25, 110.0, 0.0, 0.0,
                EdgeStatus::Open};
    edges[3] = {"P3", "J1", "T1", EdgeKind::Pipe, 700.0, 0.2, 100.0, 0.0, 0.0,
                EdgeStatus::Open};
    return NetworkGraph(std::move(nodes), std::move(edges));
}

std::vector<double> flat_pattern() { return std::vector<double>(24, 1.0); }

}  // namespace

TEST_CASE("noise-free recordings satisfy junction mass balance") {
    NetworkGraph g = pumped_fixture();
    ScadaSeries s = generate_series(g, default_demand_pattern(), 2, 0.0, 7);
    for (int t = 0; t < s.steps(); ++t) {
        const Vector flows = s.flows.row(t).transpose();
        for (int i = 0; i < g.node_count(); ++i) {
            if (g.nodes()[i].kind != NodeKind::Junction) continue;
            const double mult = s.pattern[t % 24];
            const double demand = g.nodes()[i].base_demand * mult;
            CHECK(mass_violation(g, flows, demand, i, 1e-6, false) < 1e-6);
        }
    }
}

TEST_CASE("generation is deterministic under a fixed seed") {
    NetworkGraph g = pumped_fixture();
    ScadaSeries a = generate_series(g, default_demand_pattern(), 1, 0.02, 99);
    ScadaSeries b = generate_series(g, default_demand_pattern(), 1, 0.02, 99);
    CHECK(a.pressures == b.pressures);
    CHECK(a.flows == b.flows);
    CHECK(a.tank_levels == b.tank_levels);
    CHECK(a.true_heads == b.true_heads);
}

TEST_CASE("flat pattern without tanks repeats every timestep") {
    std::vector<Node> nodes(2);
    nodes[0] = {"R", NodeKind::Reservoir, 40.0, 0.0, true, 0.0, 50.0};
    nodes[1] = {"J", NodeKind::Junction, 10.0, 0.02, true, 0.0, 0.0};
    std::vector<Edge> edges(1);
    edges[0] = {"P1", "R", "J", EdgeKind::Pipe, 700.0, 0.25, 105.0, 0.0, 0.0,
                EdgeStatus::Open};
    NetworkGraph g(std::move(nodes), std::move(edges));

    ScadaSeries s = generate_series(g, flat_pattern(), 1, 0.0, 3);
    for (int t = 1; t < s.steps(); ++t) {
        CHECK(s.true_heads.row(t) == s.true_heads.row(0));
        CHECK(s.flows.row(t) == s.flows.row(0));
    }
}

TEST_CASE("sensor_offset scales only the target column inside the window") {
    NetworkGraph g = pumped_fixture();
    ScadaSeries clean = generate_series(g, default_demand_pattern(), 2, 0.01, 5);
    AttackSpec spec{AttackKind::SensorOffset, "J2", 10, 5, 0.1};
    ScadaSeries attacked = inject_attack(clean, g, spec);

    const int col = clean.pressure_column("J2");
    for (int t = 0; t < clean.steps(); ++t) {
        for (int c = 0; c < clean.pressures.cols(); ++c) {
            const double expect = (c == col && t >= 10 && t < 15)
                                      ? clean.pressures(t, c) * 1.1
                                      : clean.pressures(t, c);
            CHECK(attacked.pressures(t, c) == doctest::Approx(expect).epsilon(1e-12));
        }
    }
    // Sensor attacks never move ground truth.
    CHECK(attacked.true_heads == clean.true_heads);
    CHECK(attacked.true_flows == clean.true_flows);
    // Labels confined to the target node and window.
    for (int t = 0; t < clean.steps(); ++t) {
        for (int i = 0; i < g.node_count(); ++i) {
            const bool expect = i == g.node_index("J2") && t >= 10 && t < 15;
            CHECK(attacked.labels(t, i) == (expect ? 1 : 0));
        }
    }
}

TEST_CASE("pump_shutdown relabels nodes whose heads shift against the clean run") {
    NetworkGraph g = pumped_fixture();
    ScadaSeries clean = generate_series(g, default_demand_pattern(), 2, 0.0, 5);
    AttackSpec spec{AttackKind::PumpShutdown, "PU1", 20, 4, 0.0};
    ScadaSeries attacked = inject_attack(clean, g, spec);

    // Oracle: diff the attacked truth against the clean truth.
    bool any_label = false;
    for (int t = 20; t < 24; ++t) {
        for (int i = 0; i < g.node_count(); ++i) {
            const bool shifted =
                std::abs(attacked.true_heads(t, i) - clean.true_heads(t, i)) > 0.01;
            CHECK(attacked.labels(t, i) == (shifted ? 1 : 0));
            any_label |= shifted;
        }
    }
    CHECK(any_label);
    // Downstream junctions lose the pump head and must shift.
    CHECK(attacked.labels(21, g.node_index("J1")) == 1);
    // Outside the window nothing changes.
    CHECK(attacked.labels.topRows(20).sum() == 0);
    CHECK(attacked.true_heads.topRows(20) == clean.true_heads.topRows(20));
    // Recorded pump status reflects the shutdown.
    CHECK(attacked.pump_status(21, 0) == 0.0);
    CHECK(attacked.pump_status(19, 0) == 1.0);
}

TEST_CASE("zero-duration attacks leave the series unchanged") {
    NetworkGraph g = pumped_fixture();
    ScadaSeries clean = generate_series(g, default_demand_pattern(), 1, 0.01, 5);
    AttackSpec spec{AttackKind::SensorOffset, "J1", 4, 0, 0.3};
    ScadaSeries attacked = inject_attack(clean, g, spec);
    CHECK(attacked.pressures == clean.pressures);
    CHECK(attacked.labels.sum() == 0);
    CHECK(attacked.attack_log.empty());
}

TEST_CASE("attack validation errors") {
    NetworkGraph g = pumped_fixture();
    ScadaSeries clean = generate_series(g, default_demand_pattern(), 1, 0.0, 5);

    AttackSpec replay{AttackKind::SensorReplay, "J1", 3, 6, 0.0};
    CHECK_THROWS_AS(inject_attack(clean, g, replay), ValidationError);

    AttackSpec on_pipe{AttackKind::PumpShutdown, "P1", 4, 2, 0.0};
    CHECK_THROWS_WITH_AS(inject_attack(clean, g, on_pipe),
                         doctest::Contains("not a pump"), ValidationError);

    AttackSpec overrun{AttackKind::SensorOffset, "J1", 20, 10, 0.1};
    CHECK_THROWS_AS(inject_attack(clean, g, overrun), ValidationError);
}

TEST_CASE("sensor_replay copies the preceding window") {
    NetworkGraph g = pumped_fixture();
    ScadaSeries clean = generate_series(g, default_demand_pattern(), 2, 0.01, 5);
    AttackSpec spec{AttackKind::SensorReplay, "J1", 12, 6, 0.0};
    ScadaSeries attacked = inject_attack(clean, g, spec);
    const int col = clean.pressure_column("J1");
    for (int t = 12; t < 18; ++t) {
        CHECK(attacked.pressures(t, col) == clean.pressures(t - 6, col));
    }
}

TEST_CASE("mask_sensors floor arithmetic and determinism") {
    NetworkGraph g = pumped_fixture();
    ScadaSeries s = generate_series(g, default_demand_pattern(), 1, 0.0, 5);
    REQUIRE(s.pressure_ids.size() == 4);

    CHECK(mask_sensors(s, 0.0, 1).pressure_ids == s.pressure_ids);

    ScadaSeries masked = mask_sensors(s, 0.5, 1);
    CHECK(masked.pressure_ids.size() == 2);
    CHECK(masked.masked_sensors.size() == 2);

    ScadaSeries again = mask_sensors(s, 0.5, 1);
    CHECK(again.masked_sensors == masked.masked_sensors);

    ScadaSeries other = mask_sensors(s, 0.5, 2);
    // A different seed may pick a different set; sizes still match.
    CHECK(other.masked_sensors.size() == 2);
}

TEST_CASE("series persistence round-trips and is byte-identical") {
    NetworkGraph g = pumped_fixture();
    ScadaSeries s = generate_series(g, default_demand_pattern(), 1, 0.02, 11);
    s = inject_attack(s, g, {AttackKind::SensorOffset, "J1", 5, 3, 0.2});

    const fs::path dir = fs::temp_directory_path() / "hydronet_scada_rt";
    fs::remove_all(dir);
    s.save(dir);
    ScadaSeries back = ScadaSeries::load(dir);
    CHECK(back.pressures == s.pressures);
    CHECK(back.flows == s.flows);
    CHECK(back.labels == s.labels);
    CHECK(back.attack_log.size() == 1);
    CHECK(back.attack_log[0].target == "J1");
    CHECK(back.seed == s.seed);

    const std::string first = read_file(dir / "pressures.csv");
    s.save(dir);
    CHECK(read_file(dir / "pressures.csv") == first);
}
