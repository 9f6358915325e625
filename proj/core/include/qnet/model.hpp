#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qnet {

enum class Discipline { fcfs, ps };

std::string to_string(Discipline d);

/// One service station: a softwarized network function backed by one or
/// more identical instances.
struct NodeSpec {
    std::string id;
    double service_rate = 0.0;   ///< per-instance rate, requests/second
    int servers = 1;             ///< instance count m
    Discipline discipline = Discipline::fcfs;
    double capacity_factor = 1.0;
    /// PS only: class id -> per-class service rate. Empty means every
    /// class is served at service_rate.
    std::map<std::string, double> per_class_service_rates;

    double service_time() const { return 1.0 / service_rate; }
    /// Effective per-instance rate after the capacity factor.
    double effective_rate() const { return capacity_factor * service_rate; }
    /// Per-instance rate a given class sees, before the capacity factor.
    double class_rate(const std::string& class_id) const {
        if (per_class_service_rates.empty()) return service_rate;
        auto it = per_class_service_rates.find(class_id);
        return it != per_class_service_rates.end() ? it->second : service_rate;
    }

    bool operator==(const NodeSpec&) const = default;
};

/// Probabilistic routing between nodes. Entries are indexed by node
/// position in NetworkSpec::nodes. Row sums may be below 1; the remainder
/// is the probability of leaving the network after service at that node.
///
/// For multi-class networks a class-switching form over the flattened
/// (node, class) index may be given in class_hop; when it is empty,
/// routing is class-preserving and hop applies to every class.
struct RoutingMatrix {
    std::vector<std::vector<double>> hop;   ///< hop[j][i] = P(j -> i)
    std::vector<double> entry;              ///< entry[i] = P(external arrival enters at i)
    /// class_hop[j*L + l][i*L + r] = P(leave j as class l -> enter i as class r).
    std::vector<std::vector<double>> class_hop;

    bool operator==(const RoutingMatrix&) const = default;
};

struct ClassSpec {
    std::string id;
    double entry_probability = 1.0;  ///< P(external arrival belongs to this class)

    bool operator==(const ClassSpec&) const = default;
};

/// Size distribution of one arrival batch. Support is {1, 2, ...}.
struct BulkSpec {
    enum class Kind { deterministic, uniform, geometric, empirical };

    Kind kind = Kind::deterministic;
    long long size = 1;            ///< deterministic batch size, or uniform maximum
    double p = 1.0;                ///< geometric success probability
    std::map<long long, double> pmf;  ///< empirical: batch size -> probability

    /// E[b], from the exact closed form of the distribution.
    double mean() const;
    /// E[b^2], likewise exact.
    double second_moment() const;

    bool operator==(const BulkSpec&) const = default;
};

std::string to_string(BulkSpec::Kind k);

/// Full declarative description of an open queueing network.
///
/// arrival_rate is the rate of external arrival events. Without a
/// BulkSpec every event is one request; with one, each event carries a
/// whole batch and the offered request rate is arrival_rate * E[b]
/// (bulks are attached to the entry nodes).
struct NetworkSpec {
    std::vector<NodeSpec> nodes;
    RoutingMatrix routing;
    std::vector<ClassSpec> classes = {{"default", 1.0}};
    double arrival_rate = 0.0;
    std::optional<BulkSpec> bulk;

    std::size_t node_count() const { return nodes.size(); }
    std::size_t class_count() const { return classes.size(); }

    /// Mean external request rate: arrival_rate scaled by E[b] when bulk.
    double request_rate() const;

    /// Index of a node id, or -1 if absent.
    int node_index(const std::string& id) const;
    int class_index(const std::string& id) const;

    /// Rescale routing rows whose sum lies in (1, 1 + 1e-9] back to 1.
    /// Larger excesses are left for validate() to flag.
    void normalize_routing();

    bool operator==(const NetworkSpec&) const = default;
};

struct Violation {
    std::string where;    ///< offending element, e.g. "nodes[2].service_rate"
    std::string message;

    bool operator==(const Violation&) const = default;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    std::string to_string() const;
};

/// Check every structural invariant of a NetworkSpec. Violations are data,
/// not failures: the report lists all of them with element identification.
ValidationReport validate(const NetworkSpec& spec);

/// The containerized IMS reference chain:
/// P-CSCF -> S/I-CSCF -> SLF -> {HSS1 (0.2), HSS2 (0.3), HSS3 (0.5)},
/// with measured mean service times 4/6/3/9 ms, one instance per node,
/// unit capacity factors, a single job class.
NetworkSpec preset_cims(double arrival_rate = 1.0);

} // namespace qnet
