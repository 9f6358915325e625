#include "qnet/traffic.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include "qnet/errors.hpp"
#include "lu.hpp"

namespace qnet {

namespace {

constexpr double kStabilityMargin = 1e-9; // rho >= 1 - margin counts as saturated
constexpr double kResidualScale = 1e-10;  // residual tolerance is this times lambda

// Effective per-(node,class) routing probability P[(j,r) -> (i,l)].
double hop_prob(const NetworkSpec& spec, std::size_t j, std::size_t r, std::size_t i,
                std::size_t l) {
    const std::size_t L = spec.class_count();
    if (!spec.routing.class_hop.empty())
        return spec.routing.class_hop[j * L + r][i * L + l];
    // Class-preserving routing: hop matrix applies within each class.
    return r == l ? spec.routing.hop[j][i] : 0.0;
}

struct RawSolve {
    std::vector<double> lambda; // flattened (node, class), length n*L
    double residual = 0.0;
    bool singular = false;
};

// Assembles and solves (I - P^T) x = b for the flattened per-class flows.
RawSolve solve_flows(const NetworkSpec& spec) {
    const std::size_t n = spec.node_count();
    const std::size_t L = spec.class_count();
    const std::size_t dim = n * L;
    const double lambda = spec.request_rate();

    std::vector<double> a(dim * dim, 0.0);
    std::vector<double> b(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t l = 0; l < L; ++l) {
            const std::size_t row = i * L + l;
            b[row] = lambda * spec.routing.entry[i] * spec.classes[l].entry_probability;
            a[row * dim + row] = 1.0;
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t r = 0; r < L; ++r)
                    a[row * dim + j * L + r] -= hop_prob(spec, j, r, i, l);
        }

    // Keep copies for the residual check; LU destroys its inputs.
    std::vector<double> a0 = a;
    std::vector<double> b0 = b;

    RawSolve out;
    const auto lu = detail::lu_solve(a, b, dim);
    if (lu.singular) {
        out.singular = true;
        return out;
    }
    out.lambda = b;

    double max_resid = 0.0;
    for (std::size_t row = 0; row < dim; ++row) {
        double acc = -b0[row];
        for (std::size_t col = 0; col < dim; ++col) acc += a0[row * dim + col] * out.lambda[col];
        max_resid = std::max(max_resid, std::abs(acc));
    }
    out.residual = max_resid;
    return out;
}

} // namespace

// Used by validate(): true when the flow system has a clean solution.
bool traffic_system_is_open(const NetworkSpec& spec) {
    const auto raw = solve_flows(spec);
    if (raw.singular) return false;
    if (!(raw.residual <= kResidualScale * std::max(spec.request_rate(), 1.0))) return false;
    for (double v : raw.lambda)
        if (!(v >= -1e-9) || !std::isfinite(v)) return false;
    return true;
}

const NodeFlow& TrafficSolution::at(const std::string& id) const {
    for (const auto& nf : nodes)
        if (nf.id == id) return nf;
    throw Error("no node named '" + id + "' in traffic solution");
}

TrafficSolution solve_traffic(const NetworkSpec& spec) {
    const std::size_t n = spec.node_count();
    const std::size_t L = spec.class_count();
    const double lambda = spec.request_rate();

    const auto raw = solve_flows(spec);
    if (raw.singular)
        throw SingularRoutingError("routing matrix is singular: the network is not open");
    if (!(raw.residual <= kResidualScale * std::max(lambda, 1.0)))
        throw SingularRoutingError("traffic equations solved with residual " +
                                   std::to_string(raw.residual) +
                                   ": the network is not open");

    TrafficSolution sol;
    sol.request_rate = lambda;
    sol.residual = raw.residual;
    sol.nodes.resize(n);
    sol.all_stable = true;

    for (std::size_t i = 0; i < n; ++i) {
        NodeFlow& nf = sol.nodes[i];
        const NodeSpec& nd = spec.nodes[i];
        nf.id = nd.id;
        nf.per_class.resize(L);
        const double pool = static_cast<double>(nd.servers) * nd.capacity_factor;

        double total = 0.0;
        double rho = 0.0;
        for (std::size_t l = 0; l < L; ++l) {
            const double lam_il = std::max(raw.lambda[i * L + l], 0.0);
            ClassFlow& cf = nf.per_class[l];
            cf.arrival_rate = lam_il;
            cf.visit_ratio = lambda > 0.0 ? lam_il / lambda : 0.0;
            const double mu_il = nd.class_rate(spec.classes[l].id);
            cf.utilization = lam_il / (pool * mu_il);
            total += lam_il;
            rho += cf.utilization;
        }
        nf.arrival_rate = total;
        nf.visit_ratio = lambda > 0.0 ? total / lambda : 0.0;
        nf.utilization = rho;
        nf.stable = rho < 1.0 - kStabilityMargin;
        if (!nf.stable) sol.all_stable = false;
    }
    return sol;
}

} // namespace qnet
