#include "qnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qnet {

namespace {

constexpr double kRowSumSlack = 1e-9;
constexpr double kProbTol = 1e-9;

std::string node_ref(const NetworkSpec& spec, std::size_t i) {
    std::ostringstream os;
    os << "nodes[" << i << "]";
    if (i < spec.nodes.size() && !spec.nodes[i].id.empty()) os << " (" << spec.nodes[i].id << ")";
    return os.str();
}

} // namespace

std::string to_string(Discipline d) {
    return d == Discipline::fcfs ? "fcfs" : "ps";
}

std::string to_string(BulkSpec::Kind k) {
    switch (k) {
        case BulkSpec::Kind::deterministic: return "deterministic";
        case BulkSpec::Kind::uniform: return "uniform";
        case BulkSpec::Kind::geometric: return "geometric";
        case BulkSpec::Kind::empirical: return "empirical";
    }
    return "?";
}

double BulkSpec::mean() const {
    switch (kind) {
        case Kind::deterministic:
            return static_cast<double>(size);
        case Kind::uniform:
            // uniform on 1..size
            return (static_cast<double>(size) + 1.0) / 2.0;
        case Kind::geometric:
            return 1.0 / p;
        case Kind::empirical: {
            double m = 0.0;
            for (const auto& [k, q] : pmf) m += static_cast<double>(k) * q;
            return m;
        }
    }
    return 1.0;
}

double BulkSpec::second_moment() const {
    switch (kind) {
        case Kind::deterministic:
            return static_cast<double>(size) * static_cast<double>(size);
        case Kind::uniform: {
            // sum of k^2 for k=1..B over B
            const double b = static_cast<double>(size);
            return (b + 1.0) * (2.0 * b + 1.0) / 6.0;
        }
        case Kind::geometric:
            return (2.0 - p) / (p * p);
        case Kind::empirical: {
            double m2 = 0.0;
            for (const auto& [k, q] : pmf) m2 += static_cast<double>(k) * static_cast<double>(k) * q;
            return m2;
        }
    }
    return 1.0;
}

double NetworkSpec::request_rate() const {
    return bulk ? arrival_rate * bulk->mean() : arrival_rate;
}

int NetworkSpec::node_index(const std::string& id) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].id == id) return static_cast<int>(i);
    return -1;
}

int NetworkSpec::class_index(const std::string& id) const {
    for (std::size_t i = 0; i < classes.size(); ++i)
        if (classes[i].id == id) return static_cast<int>(i);
    return -1;
}

void NetworkSpec::normalize_routing() {
    auto fix_row = [](std::vector<double>& row) {
        double sum = 0.0;
        for (double v : row) sum += v;
        if (sum > 1.0 && sum <= 1.0 + kRowSumSlack) {
            for (double& v : row) v /= sum;
        }
    };
    for (auto& row : routing.hop) fix_row(row);
    for (auto& row : routing.class_hop) fix_row(row);
}

std::string ValidationReport::to_string() const {
    std::ostringstream os;
    for (const auto& v : violations) os << v.where << ": " << v.message << "\n";
    return os.str();
}

namespace {

void validate_bulk(const BulkSpec& b, std::vector<Violation>& out) {
    switch (b.kind) {
        case BulkSpec::Kind::deterministic:
        case BulkSpec::Kind::uniform:
            if (b.size < 1)
                out.push_back({"arrival.bulk.size", "batch size must be a positive integer"});
            break;
        case BulkSpec::Kind::geometric:
            if (!(b.p > 0.0) || b.p > 1.0)
                out.push_back({"arrival.bulk.p", "geometric parameter must lie in (0, 1]"});
            break;
        case BulkSpec::Kind::empirical: {
            if (b.pmf.empty()) {
                out.push_back({"arrival.bulk.pmf", "empirical pmf is empty"});
                break;
            }
            double sum = 0.0;
            for (const auto& [k, q] : b.pmf) {
                if (k < 1)
                    out.push_back({"arrival.bulk.pmf", "support must be positive integers, got " + std::to_string(k)});
                if (q < 0.0 || q > 1.0)
                    out.push_back({"arrival.bulk.pmf", "probability out of [0,1] at size " + std::to_string(k)});
                sum += q;
            }
            if (std::abs(sum - 1.0) > kProbTol)
                out.push_back({"arrival.bulk.pmf", "pmf sums to " + std::to_string(sum) + ", expected 1"});
            break;
        }
    }
}

// Openness probe: forward-declared here, implemented in traffic.cpp, so
// the check is literally "the traffic linear system solves with a small
// residual" rather than a separate eigenvalue computation.
} // namespace

bool traffic_system_is_open(const NetworkSpec& spec); // defined in traffic.cpp

ValidationReport validate(const NetworkSpec& spec) {
    std::vector<Violation> out;
    const std::size_t n = spec.node_count();
    const std::size_t L = spec.class_count();

    if (n == 0) out.push_back({"nodes", "network has no nodes"});
    if (spec.classes.empty()) out.push_back({"classes", "at least one class is required"});
    if (!(spec.arrival_rate > 0.0))
        out.push_back({"arrival.rate", "external arrival rate must be > 0"});

    // Node invariants.
    for (std::size_t i = 0; i < n; ++i) {
        const NodeSpec& nd = spec.nodes[i];
        const std::string ref = node_ref(spec, i);
        if (!(nd.service_rate > 0.0))
            out.push_back({ref + ".service_rate", "service rate must be > 0"});
        if (nd.servers < 1)
            out.push_back({ref + ".servers", "server count must be >= 1"});
        if (!(nd.capacity_factor > 0.0))
            out.push_back({ref + ".capacity", "capacity factor must be > 0"});
        if (!nd.per_class_service_rates.empty()) {
            if (nd.discipline != Discipline::ps)
                out.push_back({ref + ".per_class_service_rates",
                               "per-class service rates require the ps discipline"});
            for (const auto& [cls, rate] : nd.per_class_service_rates) {
                if (spec.class_index(cls) < 0)
                    out.push_back({ref + ".per_class_service_rates", "unknown class '" + cls + "'"});
                if (!(rate > 0.0))
                    out.push_back({ref + ".per_class_service_rates",
                                   "rate for class '" + cls + "' must be > 0"});
            }
        }
        for (std::size_t j = i + 1; j < n; ++j)
            if (spec.nodes[j].id == nd.id)
                out.push_back({node_ref(spec, j) + ".id", "duplicate node id '" + nd.id + "'"});
    }

    // Class invariants.
    double entry_class_sum = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
        const ClassSpec& c = spec.classes[l];
        if (c.entry_probability < 0.0 || c.entry_probability > 1.0)
            out.push_back({"classes[" + std::to_string(l) + "].entry_probability",
                           "must lie in [0, 1]"});
        entry_class_sum += c.entry_probability;
        for (std::size_t r = l + 1; r < L; ++r)
            if (spec.classes[r].id == c.id)
                out.push_back({"classes[" + std::to_string(r) + "].id",
                               "duplicate class id '" + c.id + "'"});
    }
    if (L > 0 && std::abs(entry_class_sum - 1.0) > kProbTol)
        out.push_back({"classes", "entry probabilities sum to " + std::to_string(entry_class_sum) +
                                  ", expected 1"});

    // Routing dimensions.
    const auto& R = spec.routing;
    if (R.entry.size() != n)
        out.push_back({"routing.entry", "expected " + std::to_string(n) + " entries, got " +
                                        std::to_string(R.entry.size())});
    if (R.hop.size() != n && !(R.hop.empty() && !R.class_hop.empty()))
        out.push_back({"routing", "expected " + std::to_string(n) + " rows, got " +
                                  std::to_string(R.hop.size())});
    if (!R.class_hop.empty()) {
        if (L < 2)
            out.push_back({"routing.class", "class-switching routing given for a single-class network"});
        if (R.class_hop.size() != n * L)
            out.push_back({"routing.class", "expected " + std::to_string(n * L) + " rows, got " +
                                            std::to_string(R.class_hop.size())});
    }

    // Element names below mirror the document format (routing.<from>.<to>)
    // so errors can be anchored back to config file lines.
    auto check_row = [&out](const std::string& row_ref, const std::vector<double>& row,
                            std::size_t want, auto col_ref) {
        if (row.size() != want) {
            out.push_back({row_ref, "expected " + std::to_string(want) + " columns, got " +
                                    std::to_string(row.size())});
            return;
        }
        double sum = 0.0;
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (row[i] < 0.0 || row[i] > 1.0)
                out.push_back({col_ref(i), "probability out of [0, 1]"});
            sum += row[i];
        }
        if (sum > 1.0 + kRowSumSlack) {
            std::ostringstream os;
            os << "row sum > 1 (got " << sum << ")";
            out.push_back({row_ref, os.str()});
        }
    };

    if (R.hop.size() == n)
        for (std::size_t j = 0; j < n; ++j) {
            const std::string from = j < spec.nodes.size() ? spec.nodes[j].id : std::to_string(j);
            check_row("routing." + from, R.hop[j], n, [&](std::size_t i) {
                return "routing." + from + "." + spec.nodes[i].id;
            });
        }
    if (!R.class_hop.empty() && R.class_hop.size() == n * L)
        for (std::size_t j = 0; j < n * L; ++j) {
            const std::string from = spec.nodes[j / L].id + "/" + spec.classes[j % L].id;
            check_row("class_routing", R.class_hop[j], n * L, [&](std::size_t i) {
                return "class_routing (" + from + " -> " + spec.nodes[i / L].id + "/" +
                       spec.classes[i % L].id + ")";
            });
        }

    if (R.entry.size() == n) {
        double esum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (R.entry[i] < 0.0 || R.entry[i] > 1.0)
                out.push_back({"routing.entry." + spec.nodes[i].id, "probability out of [0, 1]"});
            esum += R.entry[i];
        }
        if (std::abs(esum - 1.0) > kProbTol)
            out.push_back({"routing.entry", "entry probabilities sum to " + std::to_string(esum) +
                                            ", expected 1"});
    }

    if (spec.bulk) validate_bulk(*spec.bulk, out);

    // Openness: defer to the traffic solver, but only when the structural
    // checks above left us with a well-formed system.
    if (out.empty() && !traffic_system_is_open(spec))
        out.push_back({"routing", "network not open (routing keeps jobs circulating forever)"});

    return ValidationReport{std::move(out)};
}

NetworkSpec preset_cims(double arrival_rate) {
    NetworkSpec spec;
    auto mk = [](std::string id, double mean_service_time) {
        NodeSpec nd;
        nd.id = std::move(id);
        nd.service_rate = 1.0 / mean_service_time;
        return nd;
    };
    spec.nodes = {mk("P-CSCF", 4e-3), mk("S/I-CSCF", 6e-3), mk("SLF", 3e-3),
                  mk("HSS1", 9e-3), mk("HSS2", 9e-3), mk("HSS3", 9e-3)};

    const std::size_t n = spec.nodes.size();
    spec.routing.hop.assign(n, std::vector<double>(n, 0.0));
    spec.routing.entry.assign(n, 0.0);
    spec.routing.entry[0] = 1.0;          // external requests arrive at P-CSCF
    spec.routing.hop[0][1] = 1.0;         // P-CSCF -> S/I-CSCF
    spec.routing.hop[1][2] = 1.0;         // S/I-CSCF -> SLF
    spec.routing.hop[2][3] = 0.2;         // SLF -> HSS1
    spec.routing.hop[2][4] = 0.3;         // SLF -> HSS2
    spec.routing.hop[2][5] = 0.5;         // SLF -> HSS3
    // HSS rows are all zero: requests depart after the HSS lookup.

    spec.classes = {{"default", 1.0}};
    spec.arrival_rate = arrival_rate;
    return spec;
}

} // namespace qnet
