// Service-capacity allocation under a total budget: closed-form optimum
// of the convex delay-sum objective, numerical optimality verification,
// and rounding of rate allocations to instance counts.
#pragma once

#include <cstdint>
#include <vector>

namespace qnet {

/// One allocation instance: per-node arrival rates, per-node capacity
/// weights, and the total weighted-rate budget to distribute.
struct AllocationProblem {
    std::vector<double> arrival_rates;    ///< lambda_i, requests/second
    std::vector<double> capacity_factors; ///< c_i > 0, dimensionless weights
    double budget = 0.0;                  ///< C: constraint on sum of c_i mu_i
};

/// Optimal service rates and the objective they achieve.
struct AllocationSolution {
    std::vector<double> service_rates; ///< mu_i, requests/second
    double objective = 0.0;            ///< sum of 1/(c_i mu_i - lambda_i), seconds
    /// Surplus weighted capacity each node receives beyond its arrival
    /// rate: (C - sum lambda) / N. Equal across nodes at the optimum.
    double surplus_per_node = 0.0;
};

/// Outcome of the numerical optimality check.
struct VerificationReport {
    double min_gap = 0.0;      ///< smallest (perturbed - optimal) objective seen
    std::size_t samples = 0;   ///< perturbations evaluated
    std::uint64_t seed = 0;    ///< generator seed, echoed for reproducibility
    bool ok = false;           ///< no perturbation beat the solution
};

/// Minimizes sum_i 1/(c_i mu_i - lambda_i) subject to sum_i c_i mu_i = C:
///   mu_i = lambda_i / c_i + (C - sum_j lambda_j) / (c_i N).
/// Every node keeps its load and receives an equal share of the surplus
/// budget. Throws InfeasibleError unless C > sum lambda (with a 1e-9
/// relative margin); the message states the minimum feasible budget.
AllocationSolution solve_allocation(const AllocationProblem& p);

/// Samples random directions in the null space of the budget constraint
/// and perturbs the solution along them with magnitudes from the largest
/// feasible step down to grid_step, checking that no feasible point
/// improves the objective by more than 1e-12. Throws OracleViolationError
/// if one does (which would mean solve_allocation is wrong).
VerificationReport verify_allocation(const AllocationProblem& p, const AllocationSolution& s,
                                     double grid_step = 1e-6, std::size_t samples = 10000,
                                     std::uint64_t seed = 20240901);

/// Per-node instance plan realizing an allocation with identical replicas.
struct InstancePlan {
    std::vector<int> counts;        ///< smallest k with k * base_rate >= c_i mu_i (>= 1)
    std::vector<double> slack;      ///< over-provisioned rate: counts * base - c_i mu_i
};

/// Rounds the weighted optimal rates up to whole instances of the given
/// base per-instance rates.
InstancePlan allocation_to_instances(const AllocationSolution& s,
                                     const std::vector<double>& capacity_factors,
                                     const std::vector<double>& base_rates);

} // namespace qnet
