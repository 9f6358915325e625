#include "qnet/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qnet/errors.hpp"

namespace qnet {

namespace {

constexpr double kStabilityMargin = 1e-9;
constexpr double kPmfTailMass = 1e-10;
constexpr std::size_t kPmfMaxTerms = 1000000;

const double kInf = std::numeric_limits<double>::infinity();

void check_rates(double lambda, double mu) {
    if (!(mu > 0.0))
        throw NonPositiveServiceRateError("service rate must be > 0, got " + std::to_string(mu));
    if (!(lambda >= 0.0))
        throw Error("arrival rate must be >= 0, got " + std::to_string(lambda));
}

// Fills metrics with the saturated-queue sentinel values.
void mark_unstable(NodeMetrics& m) {
    m.stable = false;
    m.mean_queue = kInf;
    m.mean_waiting = kInf;
    m.mean_response = kInf;
    m.marginal_pmf.clear();
}

// Erlang-C: probability an arriving job must wait in an m-server
// exponential queue with offered load a = lambda/mu. Uses the stable
// blocking-probability recursion B_k = a B_{k-1} / (k + a B_{k-1}).
double erlang_c(double a, int m, double rho) {
    double b = 1.0;
    for (int k = 1; k <= m; ++k) b = a * b / (static_cast<double>(k) + a * b);
    return b / (1.0 - rho * (1.0 - b));
}

} // namespace

const NodeMetrics& ChainMetrics::at(const std::string& id) const {
    for (const auto& nm : per_node)
        if (nm.id == id) return nm;
    throw Error("no node named '" + id + "' in chain metrics");
}

NodeMetrics mm1_metrics(double lambda, double mu) {
    check_rates(lambda, mu);
    NodeMetrics m;
    m.arrival_rate = lambda;
    const double rho = lambda / mu;
    m.utilization = rho;
    if (rho >= 1.0 - kStabilityMargin) {
        mark_unstable(m);
        return m;
    }
    m.stable = true;
    m.mean_waiting = rho / (mu * (1.0 - rho));
    m.mean_queue = rho * rho / (1.0 - rho);
    m.mean_response = 1.0 / (mu - lambda);

    // Geometric marginal pi(k) = (1 - rho) rho^k.
    double term = 1.0 - rho;
    double cum = 0.0;
    m.marginal_pmf.reserve(64);
    for (std::size_t k = 0; k < kPmfMaxTerms; ++k) {
        m.marginal_pmf.push_back(term);
        cum += term;
        if (cum >= 1.0 - kPmfTailMass) break;
        term *= rho;
    }
    return m;
}

NodeMetrics mmm_metrics(double lambda, double mu, int m) {
    check_rates(lambda, mu);
    if (m < 1) throw Error("server count must be >= 1, got " + std::to_string(m));
    if (m == 1) return mm1_metrics(lambda, mu);

    NodeMetrics out;
    out.arrival_rate = lambda;
    const double a = lambda / mu; // offered load in server units
    const double rho = a / static_cast<double>(m);
    out.utilization = rho;
    if (rho >= 1.0 - kStabilityMargin) {
        mark_unstable(out);
        return out;
    }
    out.stable = true;
    if (lambda == 0.0) {
        out.mean_response = 1.0 / mu;
        out.marginal_pmf = {1.0};
        return out;
    }

    const double c = erlang_c(a, m, rho); // P(arriving job waits)
    out.mean_waiting = c / (static_cast<double>(m) * mu - lambda);
    out.mean_queue = c * rho / (1.0 - rho);
    out.mean_response = out.mean_waiting + 1.0 / mu;

    // Two-branch pmf: pi(k) ~ a^k/k! up to m servers, geometric beyond.
    // Anchor at pi(m) = C (1 - rho), which the Erlang-C value gives
    // directly, and extend downward (pi(k-1) = pi(k) k / a) and upward
    // (pi(k+1) = pi(k) rho) — no factorials, no overflow.
    std::vector<double> head(static_cast<std::size_t>(m) + 1, 0.0);
    head[static_cast<std::size_t>(m)] = c * (1.0 - rho);
    for (int k = m; k >= 1; --k)
        head[static_cast<std::size_t>(k - 1)] =
            head[static_cast<std::size_t>(k)] * static_cast<double>(k) / a;
    double cum = 0.0;
    out.marginal_pmf.reserve(static_cast<std::size_t>(m) + 64);
    for (int k = 0; k <= m; ++k) {
        out.marginal_pmf.push_back(head[static_cast<std::size_t>(k)]);
        cum += head[static_cast<std::size_t>(k)];
        if (cum >= 1.0 - kPmfTailMass) return out;
    }
    double term = head[static_cast<std::size_t>(m)];
    for (std::size_t k = static_cast<std::size_t>(m) + 1; k < kPmfMaxTerms; ++k) {
        term *= rho;
        out.marginal_pmf.push_back(term);
        cum += term;
        if (cum >= 1.0 - kPmfTailMass) break;
    }
    return out;
}

double bulk_moment_ratio(const BulkSpec& b) {
    return b.second_moment() / b.mean() - 1.0;
}

double bulk_waiting(double bulk_rate, double mu, const BulkSpec& b) {
    check_rates(bulk_rate, mu);
    const double rho = bulk_rate * b.mean() / mu;
    if (rho >= 1.0 - kStabilityMargin)
        throw UnstableError("offered load " + std::to_string(rho) +
                            " is at or beyond capacity");
    return rho / (mu * (1.0 - rho)) + bulk_moment_ratio(b) / (2.0 * mu * (1.0 - rho));
}

double pk_waiting(double lambda, double mean_service, double second_moment_service) {
    if (!(mean_service > 0.0))
        throw NonPositiveServiceRateError("mean service time must be > 0");
    if (!(lambda >= 0.0)) throw Error("arrival rate must be >= 0");
    const double rho = lambda * mean_service;
    if (rho >= 1.0 - kStabilityMargin)
        throw UnstableError("offered load " + std::to_string(rho) +
                            " is at or beyond capacity");
    return lambda * second_moment_service / (2.0 * (1.0 - rho));
}

namespace {

// Shared by the single-class and multi-class entry points: assemble
// chain-level aggregates from finished per-node metrics.
// Kahan-compensated accumulator: the chain sums add a handful of terms
// spanning several orders of magnitude, and compensation keeps the total
// correctly rounded (the zero-load bound must reproduce reference values
// to the last bit).
struct CompensatedSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

void finish_chain(const NetworkSpec& spec, const TrafficSolution& traffic, ChainMetrics& cm) {
    cm.stable = true;
    CompensatedSum bound;
    CompensatedSum response;
    bool finite_response = true;
    double max_rho = -1.0;
    for (std::size_t i = 0; i < cm.per_node.size(); ++i) {
        const NodeMetrics& nm = cm.per_node[i];
        const NodeSpec& nd = spec.nodes[i];
        const NodeFlow& nf = traffic.nodes[i];
        if (!nm.stable) cm.stable = false;
        // Zero-load limit of the per-visit response: one service time at
        // an effective-rate instance, visit-weighted. Class-dependent PS
        // rates enter through the class mix.
        double service_per_visit = 0.0;
        if (nd.per_class_service_rates.empty()) {
            service_per_visit = nf.visit_ratio / nd.effective_rate();
        } else {
            for (std::size_t l = 0; l < spec.classes.size(); ++l)
                service_per_visit += nf.per_class[l].visit_ratio /
                                     (nd.capacity_factor * nd.class_rate(spec.classes[l].id));
        }
        bound.add(service_per_visit);
        if (nm.stable)
            response.add(nf.visit_ratio * nm.mean_response);
        else
            finite_response = false;
        if (nm.utilization > max_rho) {
            max_rho = nm.utilization;
            cm.bottleneck = nm.id;
        }
    }
    cm.response_lower_bound = bound.sum;
    cm.chain_response = finite_response ? response.sum : kInf;
}

} // namespace

ChainMetrics jackson_chain_metrics(const NetworkSpec& spec, const TrafficSolution& traffic) {
    if (spec.class_count() > 1)
        throw MultiClassNotSupportedError(
            "single-class analysis invoked on a spec with " +
            std::to_string(spec.class_count()) + " classes");

    ChainMetrics cm;
    cm.per_node.reserve(spec.node_count());
    for (std::size_t i = 0; i < spec.node_count(); ++i) {
        const NodeSpec& nd = spec.nodes[i];
        const NodeFlow& nf = traffic.nodes[i];
        NodeMetrics nm = mmm_metrics(nf.arrival_rate, nd.effective_rate(), nd.servers);
        nm.id = nd.id;
        cm.per_node.push_back(std::move(nm));
    }
    finish_chain(spec, traffic, cm);
    cm.per_class = {{spec.classes.front().id, cm.chain_response}};
    return cm;
}

ChainMetrics bcmp_chain_metrics(const NetworkSpec& spec, const TrafficSolution& traffic) {
    const std::size_t n = spec.node_count();
    const std::size_t L = spec.class_count();

    ChainMetrics cm;
    cm.per_node.reserve(n);

    for (std::size_t i = 0; i < n; ++i) {
        const NodeSpec& nd = spec.nodes[i];
        const NodeFlow& nf = traffic.nodes[i];
        const double pool = static_cast<double>(nd.servers) * nd.capacity_factor;

        NodeMetrics nm;
        nm.id = nd.id;
        nm.arrival_rate = nf.arrival_rate;
        nm.utilization = nf.utilization;
        nm.per_class.resize(L);
        for (std::size_t l = 0; l < L; ++l) {
            nm.per_class[l].class_id = spec.classes[l].id;
            nm.per_class[l].arrival_rate = nf.per_class[l].arrival_rate;
            nm.per_class[l].utilization = nf.per_class[l].utilization;
        }

        if (nd.discipline == Discipline::fcfs) {
            if (!nd.per_class_service_rates.empty())
                throw ClassMismatchError("node '" + nd.id +
                                         "': FCFS stations require class-independent "
                                         "service rates");
            // Aggregate queue is a plain multi-server exponential queue;
            // every class sees the same waiting time (arrival order is
            // class-blind), so the per-class split is proportional.
            NodeMetrics agg = mmm_metrics(nf.arrival_rate, nd.effective_rate(), nd.servers);
            nm.stable = agg.stable;
            nm.mean_queue = agg.mean_queue;
            nm.mean_waiting = agg.mean_waiting;
            nm.mean_response = agg.mean_response;
            nm.marginal_pmf = std::move(agg.marginal_pmf);
            for (std::size_t l = 0; l < L; ++l) {
                ClassNodeMetrics& c = nm.per_class[l];
                c.mean_waiting = nm.mean_waiting;
                c.mean_response = nm.mean_response;
                c.mean_queue = c.arrival_rate * c.mean_waiting;
                c.mean_in_system = c.arrival_rate * c.mean_response;
            }
        } else {
            // PS: m instances pool into one egalitarian sharing server of
            // capacity pool * mu_l per class. Mean per-class counts follow
            // E[K_l] = rho_l / (1 - rho); waiting is response minus the
            // full-capacity service time.
            const double rho = nf.utilization;
            nm.stable = rho < 1.0 - kStabilityMargin;
            if (!nm.stable) {
                mark_unstable(nm);
                for (auto& c : nm.per_class) {
                    c.mean_in_system = kInf;
                    c.mean_queue = kInf;
                    c.mean_waiting = kInf;
                    c.mean_response = kInf;
                }
            } else {
                double q_total = 0.0;
                double resp_weighted = 0.0;
                for (std::size_t l = 0; l < L; ++l) {
                    ClassNodeMetrics& c = nm.per_class[l];
                    const double mu_l = pool * nd.class_rate(spec.classes[l].id);
                    c.mean_in_system = c.utilization / (1.0 - rho);
                    if (c.arrival_rate > 0.0) {
                        c.mean_response = c.mean_in_system / c.arrival_rate;
                        c.mean_waiting = c.mean_response - 1.0 / mu_l;
                    } else {
                        c.mean_response = 1.0 / mu_l; // zero-load limit
                        c.mean_waiting = 0.0;
                    }
                    c.mean_queue = c.arrival_rate * c.mean_waiting;
                    q_total += c.mean_queue;
                    resp_weighted += c.arrival_rate * c.mean_response;
                }
                nm.mean_queue = q_total;
                nm.mean_waiting = nf.arrival_rate > 0.0 ? q_total / nf.arrival_rate : 0.0;
                nm.mean_response = nf.arrival_rate > 0.0 ? resp_weighted / nf.arrival_rate
                                                         : 1.0 / nd.effective_rate();
                // Aggregate count is geometric in rho regardless of the
                // class mix.
                double term = 1.0 - rho;
                double cum = 0.0;
                for (std::size_t k = 0; k < kPmfMaxTerms; ++k) {
                    nm.marginal_pmf.push_back(term);
                    cum += term;
                    if (cum >= 1.0 - kPmfTailMass) break;
                    term *= rho;
                }
            }
        }
        cm.per_node.push_back(std::move(nm));
    }

    finish_chain(spec, traffic, cm);

    // Per-class chain aggregates: per-visit responses weighted by
    // per-class visit ratios. Entering classes are normalized to
    // per-request-of-that-class; derived classes (reachable only through
    // class switching) report time per external request.
    cm.per_class.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
        cm.per_class[l].class_id = spec.classes[l].id;
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& c = cm.per_node[i].per_class[l];
            const double v_il = traffic.nodes[i].per_class[l].visit_ratio;
            if (v_il > 0.0) acc += cm.per_node[i].stable ? v_il * c.mean_response : kInf;
        }
        const double p0l = spec.classes[l].entry_probability;
        cm.per_class[l].chain_response = p0l > 0.0 ? acc / p0l : acc;
    }
    return cm;
}

ChainMetrics jackson_chain_metrics(const NetworkSpec& spec) {
    return jackson_chain_metrics(spec, solve_traffic(spec));
}

ChainMetrics bcmp_chain_metrics(const NetworkSpec& spec) {
    return bcmp_chain_metrics(spec, solve_traffic(spec));
}

ChainMetrics chain_metrics(const NetworkSpec& spec) {
    bool any_ps = false;
    for (const auto& nd : spec.nodes) any_ps = any_ps || nd.discipline == Discipline::ps;
    if (spec.class_count() > 1 || any_ps) return bcmp_chain_metrics(spec);
    return jackson_chain_metrics(spec);
}

} // namespace qnet
