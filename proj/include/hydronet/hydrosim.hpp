// Demand-driven steady-state hydraulic solver.
//
// Newton-Raphson on unknown junction heads. Pipes follow the Hazen-Williams
// head-loss law in SI form; open pumps follow the quadratic curve
// h_gain = h0 - r Q^2 with a check valve (no reverse flow). Reservoirs and
// tanks act as fixed-head nodes within a single solve; tank levels evolve
// between solves (see scada.hpp).

#pragma once

#include "hydronet/network.hpp"

#include <vector>

namespace hydronet {

// ----------------------------------------------------------------------------
// Hazen-Williams primitives (SI, k = 10.67)
// ----------------------------------------------------------------------------

inline constexpr double kHazenWilliamsK = 10.67;
inline constexpr double kHazenWilliamsExp = 1.852;

/// Resistance r with h_L = r * |Q|^0.852 * Q.
inline double hw_resistance(double length, double diameter, double roughness) {
    return kHazenWilliamsK * length /
           (std::pow(roughness, kHazenWilliamsExp) * std::pow(diameter, 4.87));
}

/// Signed head loss along a pipe for signed flow Q.
inline double hw_head_loss(double flow, double length, double diameter, double roughness) {
    const double r = hw_resistance(length, diameter, roughness);
    return r * std::pow(std::abs(flow), kHazenWilliamsExp - 1.0) * flow;
}

/// Signed flow producing a signed head drop `dh` across resistance `r`.
inline double hw_flow_from_drop(double dh, double r) {
    const double mag = std::pow(std::abs(dh) / r, 1.0 / kHazenWilliamsExp);
    return dh >= 0.0 ? mag : -mag;
}

// ----------------------------------------------------------------------------
// Steady-state solve
// ----------------------------------------------------------------------------

struct HydraulicState {
    Vector head;    // per node, m
    Vector flow;    // per edge, m^3/s, signed by edge orientation (from -> to)
    Vector demand;  // per node, m^3/s
    int iterations = 0;
    double residual = 0.0;  // max junction mass residual, m^3/s
};

struct SolveOptions {
    double tolerance = 1e-9;   // max junction mass residual, m^3/s
    int max_iterations = 200;
    double flow_floor = 1e-6;  // floor on |Q|^0.852 in the Jacobian
};

struct BoundaryConditions {
    Vector demand;                  // per node; junction entries used
    std::vector<std::uint8_t> pump_open;  // per edge; pump entries used
    Vector tank_level;              // per node; tank entries used, m above tank base

    static BoundaryConditions defaults(const NetworkGraph& g, double tank_level = 5.0);
};

/// Solve for heads and flows. Throws NumericalError on non-convergence
/// (message carries the final residual) or when closed elements isolate
/// junctions from every fixed-head node (message names the isolated set).
HydraulicState solve_steady_state(const NetworkGraph& g, const BoundaryConditions& bc,
                                  const SolveOptions& options = {});

}  // namespace hydronet
