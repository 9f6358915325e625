// Closed-form performance metrics: single-node exponential queues
// (single- and multi-server), batch-arrival waiting times, and
// whole-network product-form metrics for single-class and multi-class
// networks under FCFS and PS disciplines.
#pragma once

#include <string>
#include <vector>

#include "qnet/model.hpp"
#include "qnet/traffic.hpp"

namespace qnet {

/// Per-class slice of one node's steady-state metrics.
struct ClassNodeMetrics {
    std::string class_id;
    double arrival_rate = 0.0;   ///< lambda_{i,l}
    double utilization = 0.0;    ///< rho_{i,l}: this class's share of rho_i
    double mean_in_system = 0.0; ///< E[K_{i,l}] = rho_{i,l} / (1 - rho_i)
    double mean_queue = 0.0;     ///< E[Q_{i,l}] = lambda_{i,l} * E[W_{i,l}]
    double mean_waiting = 0.0;   ///< E[W_{i,l}] seconds
    double mean_response = 0.0;  ///< E[T_{i,l}] seconds per visit
};

/// Steady-state metrics of a single service station.
///
/// mean_queue counts jobs not currently receiving full service:
/// for FCFS the jobs in the waiting line; for PS the Little-law image
/// of the sharing delay (E[Q] = lambda * E[W] always holds).
/// mean_response = mean_waiting + mean service time per visit.
struct NodeMetrics {
    std::string id;
    double arrival_rate = 0.0;
    double utilization = 0.0;
    double mean_queue = 0.0;    ///< E[Q], jobs
    double mean_waiting = 0.0;  ///< E[W], seconds
    double mean_response = 0.0; ///< E[T], seconds
    bool stable = false;
    /// Stationary distribution of the number of jobs at the node,
    /// materialized from k = 0 until the cumulative mass reaches
    /// 1 - 1e-10 (at most 1e6 terms). Empty when the node is unstable.
    std::vector<double> marginal_pmf;
    std::vector<ClassNodeMetrics> per_class; ///< populated by multi-class analysis
};

/// Chain-level aggregate for one class.
///
/// For classes that enter from outside (entry_probability > 0) this is
/// the expected end-to-end response time of one such request. For
/// classes that only arise through class switching it is the expected
/// time per external request spent being served as this class.
struct ChainClassMetrics {
    std::string class_id;
    double chain_response = 0.0; ///< seconds
};

/// Whole-network metrics under product form.
struct ChainMetrics {
    std::vector<NodeMetrics> per_node;
    double chain_response = 0.0;       ///< E[T]: visit-weighted sum of per-visit responses
    double response_lower_bound = 0.0; ///< zero-load limit: sum of v_i / (c_i mu_i)
    std::string bottleneck;            ///< node id with the highest utilization
    bool stable = false;               ///< every node stable
    std::vector<ChainClassMetrics> per_class;

    const NodeMetrics& at(const std::string& id) const;
};

/// Single-server exponential queue. Unstable loads (rho >= 1 - 1e-9)
/// yield +infinity sentinels with an empty pmf, never an exception.
/// Throws NonPositiveServiceRateError when mu <= 0.
NodeMetrics mm1_metrics(double lambda, double mu);

/// Multi-server exponential queue (m identical servers, shared line);
/// waiting probability via the Erlang-C formula, pmf from the standard
/// two-branch form. Reduces exactly to mm1_metrics when m = 1.
NodeMetrics mmm_metrics(double lambda, double mu, int m);

/// E[b^2]/E[b] - 1 for a batch-size distribution: the excess factor the
/// batch structure adds to the mean waiting time.
double bulk_moment_ratio(const BulkSpec& b);

/// Mean waiting time of an arbitrary request when arrivals come in
/// batches of size b at event rate bulk_rate and service is exponential
/// with rate mu:
///   E[W] = rho / (mu (1 - rho)) + (E[b^2]/E[b] - 1) / (2 mu (1 - rho)),
/// with rho = bulk_rate * E[b] / mu. Throws UnstableError when rho >= 1.
double bulk_waiting(double bulk_rate, double mu, const BulkSpec& b);

/// Classic single-server general-service mean waiting time
/// lambda * E[S^2] / (2 (1 - rho)) with rho = lambda * E[S].
/// Throws UnstableError when rho >= 1.
double pk_waiting(double lambda, double mean_service, double second_moment_service);

/// Product-form metrics for a single-class network of exponential FCFS
/// nodes. Per-node metrics come from mm1_metrics / mmm_metrics at the
/// node's effective rate c_i * mu_i; the chain response is the
/// visit-weighted sum of per-visit response times, and the lower bound
/// is its zero-load limit. Unstable nodes propagate +infinity.
/// Throws MultiClassNotSupportedError for multi-class specs.
ChainMetrics jackson_chain_metrics(const NetworkSpec& spec, const TrafficSolution& traffic);

/// Product-form metrics for multi-class networks with FCFS and PS
/// stations. FCFS stations require class-independent service rates
/// (ClassMismatchError otherwise); PS stations may serve each class at
/// its own rate. Single-class, all-FCFS input reproduces
/// jackson_chain_metrics exactly.
ChainMetrics bcmp_chain_metrics(const NetworkSpec& spec, const TrafficSolution& traffic);

/// Convenience overloads that solve the traffic equations internally.
ChainMetrics jackson_chain_metrics(const NetworkSpec& spec);
ChainMetrics bcmp_chain_metrics(const NetworkSpec& spec);

/// Dispatches on the network's shape: multi-class or any-PS specs go through
/// bcmp_chain_metrics, plain single-class FCFS specs through
/// jackson_chain_metrics (identical results where both apply).
ChainMetrics chain_metrics(const NetworkSpec& spec);

} // namespace qnet
