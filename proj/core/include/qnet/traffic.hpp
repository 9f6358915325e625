// Traffic-equation solver: per-node (and per-class) throughput, visit
// ratios, and utilizations for an open routing network.
#pragma once

#include <cstddef>
#include <vector>

#include "qnet/model.hpp"

namespace qnet {

/// Steady-state flow through the network for one class at one node.
struct ClassFlow {
    double arrival_rate = 0.0; ///< lambda_{i,l}: class-l job rate into node i
    double visit_ratio = 0.0;  ///< v_{i,l} = lambda_{i,l} / lambda
    double utilization = 0.0;  ///< class share of the node's utilization
};

/// Steady-state flow through one node, aggregated over classes.
struct NodeFlow {
    std::string id;
    double arrival_rate = 0.0; ///< lambda_i: total job rate into node i
    double visit_ratio = 0.0;  ///< v_i = lambda_i / lambda (mean visits per request)
    double utilization = 0.0;  ///< rho_i, discipline-aware (see TrafficSolution)
    bool stable = false;       ///< rho_i < 1 - 1e-9
    std::vector<ClassFlow> per_class;
};

/// Solution of the traffic (flow balance) equations.
///
/// Utilization is computed per the node's discipline:
///  - fcfs: rho_i = lambda_i / (m_i * c_i * mu_i)
///  - ps with per-class rates: rho_i = sum_l lambda_{i,l} / (m_i * c_i * mu_{i,l})
/// Both reduce to lambda_i / (m_i * c_i * mu_i) when every class sees the
/// same rate.
struct TrafficSolution {
    std::vector<NodeFlow> nodes;
    double request_rate = 0.0; ///< external request rate (event rate times mean batch size)
    double residual = 0.0;     ///< max |A x - b| of the solved linear system
    bool all_stable = false;   ///< every node stable

    const NodeFlow& at(const std::string& id) const;
};

/// Solves the flow balance equations
///   lambda_{i,l} = lambda * entry_i * entryclass_l + sum_{j,r} lambda_{j,r} * P[(j,r) -> (i,l)]
/// via dense LU. The network must be open: throws SingularRoutingError when
/// the routing traps jobs (system singular or residual above 1e-10 * lambda).
///
/// With bulk arrivals the driving rate is the request rate (event rate times
/// mean batch size); downstream flows scale linearly with it.
TrafficSolution solve_traffic(const NetworkSpec& spec);

} // namespace qnet
