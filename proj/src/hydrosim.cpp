#include "hydronet/hydrosim.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace hydronet {

BoundaryConditions BoundaryConditions::defaults(const NetworkGraph& g, double tank_level) {
    BoundaryConditions bc;
    bc.demand = Vector::Zero(g.node_count());
    bc.tank_level = Vector::Zero(g.node_count());
    bc.pump_open.assign(g.edge_count(), 1);
    for (int i = 0; i < g.node_count(); ++i) {
        const Node& n = g.nodes()[i];
        if (n.kind == NodeKind::Junction) bc.demand[i] = n.base_demand;
        if (n.kind == NodeKind::Tank) bc.tank_level[i] = tank_level;
    }
    return bc;
}

namespace {

struct EdgeModel {
    bool open = true;
    bool is_pump = false;
    double resistance = 0.0;  // pipes
    double h0 = 0.0, rp = 0.0;  // pumps

    // Flow and dQ/d(dh) for dh = head(from) - head(to).
    void evaluate(double dh, double flow_floor, double& q, double& g) const {
        if (!open) {
            q = 0.0;
            g = 0.0;
            return;
        }
        if (!is_pump) {
            q = hw_flow_from_drop(dh, resistance);
            const double lin = std::max(std::pow(std::abs(q), kHazenWilliamsExp - 1.0),
                                        flow_floor);
            g = 1.0 / (kHazenWilliamsExp * resistance * lin);
        } else {
            // Pump drives from -> to with gain h0 - rp q^2, so
            // head(to) - head(from) = h0 - rp q^2, i.e. q = sqrt((h0 + dh)/rp).
            const double avail = h0 + dh;
            if (avail <= 0.0) {
                q = 0.0;
                g = 1e-8;  // check valve shut; tiny slope keeps Newton regular
            } else {
                q = std::sqrt(avail / rp);
                g = 1.0 / (2.0 * rp * std::max(q, flow_floor));
            }
        }
    }
};

}  // namespace

HydraulicState solve_steady_state(const NetworkGraph& g, const BoundaryConditions& bc,
                                  const SolveOptions& options) {
    const int n = g.node_count();
    const int m = g.edge_count();
    if (bc.demand.size() != n || bc.tank_level.size() != n ||
        static_cast<int>(bc.pump_open.size()) != m) {
        throw std::invalid_argument("solve_steady_state: boundary condition size mismatch");
    }
    for (int i = 0; i < n; ++i) {
        if (g.nodes()[i].kind == NodeKind::Junction && bc.demand[i] < 0.0) {
            throw std::invalid_argument("solve_steady_state: negative demand at node " +
                                        g.nodes()[i].id);
        }
    }

    std::vector<EdgeModel> models(m);
    for (int e = 0; e < m; ++e) {
        const Edge& edge = g.edges()[e];
        EdgeModel& em = models[e];
        em.is_pump = edge.kind == EdgeKind::Pump;
        em.open = edge.status == EdgeStatus::Open && (!em.is_pump || bc.pump_open[e]);
        if (em.is_pump) {
            em.h0 = edge.pump_shutoff_head_h0;
            em.rp = edge.pump_curve_coeff_r;
        } else {
            em.resistance = hw_resistance(edge.length_L, edge.diameter_D, edge.roughness_C);
        }
    }

    // Fixed heads: reservoirs and tanks (tank head = base elevation + level).
    std::vector<int> fixed;
    Vector head = Vector::Zero(n);
    for (int i = 0; i < n; ++i) {
        const Node& node = g.nodes()[i];
        if (node.kind == NodeKind::Reservoir) {
            head[i] = node.fixed_head;
            fixed.push_back(i);
        } else if (node.kind == NodeKind::Tank) {
            head[i] = node.elevation_z + bc.tank_level[i];
            fixed.push_back(i);
        }
    }
    if (fixed.empty()) {
        throw NumericalError("solve_steady_state: no fixed-head node (reservoir or tank)");
    }

    // Junctions must reach a fixed-head node through open elements, otherwise
    // the Jacobian is singular.
    {
        std::vector<char> reached(n, 0);
        std::queue<int> q;
        for (int i : fixed) {
            reached[i] = 1;
            q.push(i);
        }
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int e : g.incident_edges(u)) {
                if (!models[e].open) continue;
                int v = g.edge_from(e) == u ? g.edge_to(e) : g.edge_from(e);
                if (!reached[v]) {
                    reached[v] = 1;
                    q.push(v);
                }
            }
        }
        std::vector<std::string> isolated;
        for (int i = 0; i < n; ++i) {
            if (!reached[i]) isolated.push_back(g.nodes()[i].id);
        }
        if (!isolated.empty()) {
            throw NumericalError("isolated subnetwork (no open path to a fixed head): {" +
                                 join(isolated, ", ") + "}");
        }
    }

    // Unknown index per junction.
    std::vector<int> unknown(n, -1);
    int nu = 0;
    for (int i = 0; i < n; ++i) {
        if (g.nodes()[i].kind == NodeKind::Junction) unknown[i] = nu++;
    }

    // Flat start: junctions at the mean fixed head.
    double mean_fixed = 0.0;
    for (int i : fixed) mean_fixed += head[i];
    mean_fixed /= static_cast<double>(fixed.size());
    for (int i = 0; i < n; ++i) {
        if (unknown[i] >= 0) head[i] = mean_fixed;
    }

    Vector flow = Vector::Zero(m);
    Vector grad = Vector::Zero(m);

    auto eval_residual = [&](const Vector& h, Vector& res) {
        res.setZero(nu);
        for (int e = 0; e < m; ++e) {
            const double dh = h[g.edge_from(e)] - h[g.edge_to(e)];
            models[e].evaluate(dh, options.flow_floor, flow[e], grad[e]);
            const int uf = unknown[g.edge_from(e)];
            const int ut = unknown[g.edge_to(e)];
            if (ut >= 0) res[ut] += flow[e];
            if (uf >= 0) res[uf] -= flow[e];
        }
        for (int i = 0; i < n; ++i) {
            if (unknown[i] >= 0) res[unknown[i]] -= bc.demand[i];
        }
    };

    Vector res(nu);
    eval_residual(head, res);
    double res_norm = nu > 0 ? res.cwiseAbs().maxCoeff() : 0.0;

    int iter = 0;
    while (res_norm > options.tolerance) {
        if (iter >= options.max_iterations) {
            throw NumericalError("steady-state solve did not converge after " +
                                 std::to_string(options.max_iterations) +
                                 " iterations; residual " + format_double(res_norm) + " m^3/s");
        }
        Matrix jac = Matrix::Zero(nu, nu);
        for (int e = 0; e < m; ++e) {
            const int uf = unknown[g.edge_from(e)];
            const int ut = unknown[g.edge_to(e)];
            const double ge = grad[e];
            if (ut >= 0) {
                jac(ut, ut) -= ge;
                if (uf >= 0) jac(ut, uf) += ge;
            }
            if (uf >= 0) {
                jac(uf, uf) -= ge;
                if (ut >= 0) jac(uf, ut) += ge;
            }
        }

        Eigen::FullPivLU<Matrix> lu(jac);
        if (!lu.isInvertible()) {
            throw NumericalError("singular Jacobian in steady-state solve (iteration " +
                                 std::to_string(iter) + ")");
        }
        const Vector step = lu.solve(-res);

        // Damped update: halve the step while the residual norm worsens.
        double lambda = 1.0;
        Vector trial = head;
        for (int halvings = 0; halvings < 40; ++halvings) {
            for (int i = 0; i < n; ++i) {
                if (unknown[i] >= 0) trial[i] = head[i] + lambda * step[unknown[i]];
            }
            Vector trial_res(nu);
            eval_residual(trial, trial_res);
            const double trial_norm = trial_res.cwiseAbs().maxCoeff();
            if (trial_norm < res_norm || lambda < 1e-8) {
                head = trial;
                res = trial_res;
                res_norm = trial_norm;
                break;
            }
            lambda *= 0.5;
        }
        ++iter;
    }

    // Final flows consistent with the converged heads.
    for (int e = 0; e < m; ++e) {
        const double dh = head[g.edge_from(e)] - head[g.edge_to(e)];
        models[e].evaluate(dh, options.flow_floor, flow[e], grad[e]);
    }

    HydraulicState state;
    state.head = head;
    state.flow = flow;
    state.demand = bc.demand;
    state.iterations = iter;
    state.residual = res_norm;
    return state;
}

}  // namespace hydronet
