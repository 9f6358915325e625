#include "qnet/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qnet/errors.hpp"
#include "qnet/rng.hpp"

namespace qnet {

namespace {

constexpr double kFeasibilityMargin = 1e-9; // require C >= sum(lambda) * (1 + margin)
constexpr double kOracleTolerance = 1e-12;  // objective improvements below this are noise

void check_problem(const AllocationProblem& p) {
    if (p.arrival_rates.empty()) throw Error("allocation problem has no nodes");
    if (p.capacity_factors.size() != p.arrival_rates.size())
        throw Error("capacity factor count does not match node count");
    for (double c : p.capacity_factors)
        if (!(c > 0.0)) throw Error("capacity factors must be > 0");
    for (double l : p.arrival_rates)
        if (!(l >= 0.0)) throw Error("arrival rates must be >= 0");
}

double total_arrivals(const AllocationProblem& p) {
    double s = 0.0;
    for (double l : p.arrival_rates) s += l;
    return s;
}

// Objective in weighted-rate coordinates y_i = c_i mu_i.
double objective_of(const std::vector<double>& y, const std::vector<double>& lambda) {
    double obj = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) obj += 1.0 / (y[i] - lambda[i]);
    return obj;
}

} // namespace

AllocationSolution solve_allocation(const AllocationProblem& p) {
    check_problem(p);
    const double sum_lambda = total_arrivals(p);
    if (!(p.budget >= sum_lambda * (1.0 + kFeasibilityMargin)) || !(p.budget > 0.0)) {
        std::ostringstream os;
        os << "budget " << p.budget << " cannot cover the offered load: the minimum "
           << "feasible budget requires C > " << sum_lambda;
        throw InfeasibleError(os.str());
    }

    const std::size_t n = p.arrival_rates.size();
    const double surplus = (p.budget - sum_lambda) / static_cast<double>(n);

    AllocationSolution s;
    s.surplus_per_node = surplus;
    s.service_rates.resize(n);
    s.objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s.service_rates[i] =
            p.arrival_rates[i] / p.capacity_factors[i] + surplus / p.capacity_factors[i];
        s.objective += 1.0 / surplus;
    }
    return s;
}

VerificationReport verify_allocation(const AllocationProblem& p, const AllocationSolution& s,
                                     double grid_step, std::size_t samples,
                                     std::uint64_t seed) {
    check_problem(p);
    const std::size_t n = p.arrival_rates.size();

    VerificationReport report;
    report.seed = seed;
    report.min_gap = 0.0;
    if (n < 2) { // the constraint surface is a single point
        report.ok = true;
        return report;
    }

    // Work in weighted rates y_i = c_i mu_i, where the constraint is the
    // plane sum(y) = C and its null space is {d : sum(d) = 0}.
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = p.capacity_factors[i] * s.service_rates[i];
    const double base_obj = objective_of(y, p.arrival_rates);

    // Smallest surplus bounds the largest feasible step.
    double min_surplus = y[0] - p.arrival_rates[0];
    for (std::size_t i = 1; i < n; ++i)
        min_surplus = std::min(min_surplus, y[i] - p.arrival_rates[i]);

    RandomStream rng(stream_seed(seed, 0xa110c));
    std::vector<double> d(n);
    std::vector<double> yp(n);
    double min_gap = std::numeric_limits<double>::infinity();

    for (std::size_t k = 0; k < samples; ++k) {
        // Gaussian direction projected onto the constraint plane.
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d[i] = rng.normal();
            mean += d[i];
        }
        mean /= static_cast<double>(n);
        double max_abs = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d[i] -= mean;
            max_abs = std::max(max_abs, std::abs(d[i]));
        }
        if (max_abs == 0.0) continue; // degenerate draw

        // Log-uniform magnitude between grid_step and the largest step
        // that keeps every node strictly loaded below capacity.
        const double t_max = 0.9 * min_surplus / max_abs;
        const double t_min = std::min(grid_step, t_max);
        const double t = t_min * std::pow(t_max / t_min, rng.uniform01());

        for (std::size_t i = 0; i < n; ++i) yp[i] = y[i] + t * d[i];
        const double gap = objective_of(yp, p.arrival_rates) - base_obj;
        min_gap = std::min(min_gap, gap);
        ++report.samples;
    }

    report.min_gap = report.samples > 0 ? min_gap : 0.0;
    report.ok = report.min_gap >= -kOracleTolerance;
    if (!report.ok) {
        std::ostringstream os;
        os << "a feasible perturbation improved the objective by " << -report.min_gap
           << " (tolerance " << kOracleTolerance << ", seed " << seed << ")";
        throw OracleViolationError(os.str());
    }
    return report;
}

InstancePlan allocation_to_instances(const AllocationSolution& s,
                                     const std::vector<double>& capacity_factors,
                                     const std::vector<double>& base_rates) {
    if (base_rates.size() != s.service_rates.size() ||
        capacity_factors.size() != s.service_rates.size())
        throw Error("instance rounding: size mismatch between solution and base rates");

    InstancePlan plan;
    plan.counts.resize(s.service_rates.size());
    plan.slack.resize(s.service_rates.size());
    for (std::size_t i = 0; i < s.service_rates.size(); ++i) {
        if (!(base_rates[i] > 0.0)) throw Error("base rates must be > 0");
        const double needed = capacity_factors[i] * s.service_rates[i];
        const int k = std::max(1, static_cast<int>(std::ceil(needed / base_rates[i])));
        plan.counts[i] = k;
        plan.slack[i] = static_cast<double>(k) * base_rates[i] - needed;
    }
    return plan;
}

} // namespace qnet
