// Deterministic seeded discrete-event simulator of the full network:
// Poisson or batch arrivals, exponential / deterministic / resampled
// service, FCFS and egalitarian PS disciplines, multi-server stations,
// multi-class probabilistic routing with class switching. Identical
// configuration (including seed) yields bit-identical results.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qnet/analytic.hpp"
#include "qnet/model.hpp"

namespace qnet {

/// Replaces a node's exponential service sampling.
struct ServiceOverride {
    enum class Kind { exponential, deterministic, empirical };
    Kind kind = Kind::exponential;
    /// empirical only: service-time samples (seconds at nominal rate),
    /// redrawn uniformly at random.
    std::vector<double> samples;
};

struct SimConfig {
    NetworkSpec spec;
    /// Exactly one horizon must be set: simulated seconds, or completed
    /// requests (network departures) per replication.
    double time_horizon = 0.0;
    long long job_horizon = 0;
    double warmup_fraction = 0.2; ///< leading fraction of the horizon discarded
    int replications = 10;
    std::uint64_t seed = 12345;
    std::map<std::string, ServiceOverride> service_overrides; ///< node id -> override
    std::string trace_path; ///< when nonempty, replication 0 writes an event trace here
    int threads = 1;        ///< replications run on up to this many threads
};

/// Point estimate with a 95% confidence half-width computed across
/// replication means (Student-t). half_width is 0 when replications < 2.
struct Estimate {
    double mean = 0.0;
    double half_width = 0.0;

    bool covers(double value, double allowance = 0.0) const {
        const double slack = half_width + allowance;
        return value >= mean - slack && value <= mean + slack;
    }
};

struct ClassStats {
    std::string class_id;
    Estimate waiting;
    Estimate response;
    long long departures = 0; ///< summed over replications, after warmup
};

struct NodeStats {
    std::string id;
    Estimate waiting;      ///< mean time not in (full-capacity) service, seconds
    Estimate queue_length; ///< time-average backlog, jobs
    Estimate response;     ///< mean node residence per visit, seconds
    Estimate utilization;  ///< busy fraction in [0, 1]
    Estimate arrival_rate; ///< observed arrivals per second
    long long arrivals = 0;   ///< summed over replications, after warmup
    long long departures = 0;
    std::vector<ClassStats> per_class; ///< populated for multi-class specs
};

struct SimResult {
    std::vector<NodeStats> nodes;
    Estimate chain_response; ///< end-to-end time per completed request, seconds
    std::uint64_t seed = 0;  ///< echo of the configured seed
    int replications = 0;
    double warmup_fraction = 0.0;
    long long total_arrivals = 0;   ///< external requests, after warmup, all reps
    long long total_departures = 0; ///< completed requests, after warmup, all reps
    double mean_sim_time = 0.0;     ///< simulated seconds per replication

    const NodeStats& at(const std::string& id) const;
};

/// Runs the configured number of replications and aggregates their
/// post-warmup statistics. Replications are independent (separate
/// substreams) and may execute in parallel; results are identical for
/// every thread count. Unstable networks are simulated honestly (queues
/// grow; statistics describe the truncated horizon).
SimResult simulate(const SimConfig& cfg);

/// One analytic-vs-simulated metric comparison.
struct MetricComparison {
    std::string node;   ///< node id, or "chain"
    std::string metric; ///< "EW", "EQ", "ET", "rho"
    double analytic = 0.0;
    double simulated = 0.0;
    double half_width = 0.0;
    double rel_error = 0.0; ///< |analytic - simulated| / max(|analytic|, tiny)
    bool pass = false;
};

struct ComparisonReport {
    std::vector<MetricComparison> rows;
    bool all_pass = false;
};

/// Simulates cfg and checks every per-node E[W], E[Q], E[T], rho and the
/// chain response against the analytic values: pass iff the analytic
/// value lies within the 95% CI widened by a 1% systematic allowance.
/// Throws SpecMismatchError when the metrics' node set differs from the
/// config's.
ComparisonReport compare(const SimConfig& cfg, const ChainMetrics& analytic);

} // namespace qnet
