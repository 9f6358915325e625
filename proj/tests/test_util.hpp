// Shared helpers for the unit tests: tiny network builders and
// violation-report probes.
#pragma once

#include <string>
#include <vector>

#include <qnet/model.hpp>

namespace qnet::test {

/// Serial chain: external arrivals enter node 0, every job visits each
/// node once in order, then leaves.
inline NetworkSpec make_tandem(const std::vector<double>& service_rates,
                               double arrival_rate) {
    NetworkSpec spec;
    const std::size_t n = service_rates.size();
    for (std::size_t i = 0; i < n; ++i) {
        NodeSpec nd;
        nd.id = "n" + std::to_string(i);
        nd.service_rate = service_rates[i];
        spec.nodes.push_back(nd);
    }
    spec.routing.hop.assign(n, std::vector<double>(n, 0.0));
    spec.routing.entry.assign(n, 0.0);
    spec.routing.entry[0] = 1.0;
    for (std::size_t i = 0; i + 1 < n; ++i) spec.routing.hop[i][i + 1] = 1.0;
    spec.arrival_rate = arrival_rate;
    return spec;
}

/// Single station with optional feedback-to-self probability.
inline NetworkSpec make_single(double service_rate, double arrival_rate,
                               double feedback = 0.0) {
    NetworkSpec spec = make_tandem({service_rate}, arrival_rate);
    spec.routing.hop[0][0] = feedback;
    return spec;
}

inline bool has_violation(const ValidationReport& rep, const std::string& token) {
    for (const auto& v : rep.violations)
        if (v.where.find(token) != std::string::npos ||
            v.message.find(token) != std::string::npos)
            return true;
    return false;
}

} // namespace qnet::test
