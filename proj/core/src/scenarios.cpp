#include "qnet/scenarios.hpp"

#include "qnet/errors.hpp"

namespace qnet {

namespace {

void check_probs(double p1, double p2) {
    if (!(p1 >= 0.0) || !(p2 >= 0.0) || p1 + p2 > 1.0 + 1e-9)
        throw Error("database routing probabilities must be nonnegative with p1 + p2 <= 1");
}

NodeSpec front_node(std::string id, double mean_service_time) {
    NodeSpec nd;
    nd.id = std::move(id);
    nd.service_rate = 1.0 / mean_service_time;
    return nd;
}

} // namespace

NetworkSpec make_dedicated_hss_chain(double p1, double p2, double arrival_rate) {
    check_probs(p1, p2);
    NetworkSpec spec;
    spec.nodes = {front_node("P-CSCF", 4e-3), front_node("S/I-CSCF", 6e-3),
                  front_node("SLF", 3e-3), front_node("HSS1", 9e-3), front_node("HSS2", 9e-3)};
    const std::size_t n = spec.nodes.size();
    spec.routing.hop.assign(n, std::vector<double>(n, 0.0));
    spec.routing.entry.assign(n, 0.0);
    spec.routing.entry[0] = 1.0;
    spec.routing.hop[0][1] = 1.0;
    spec.routing.hop[1][2] = 1.0;
    spec.routing.hop[2][3] = p1;
    spec.routing.hop[2][4] = p2;
    spec.classes = {{"default", 1.0}};
    spec.arrival_rate = arrival_rate;
    return spec;
}

NetworkSpec make_shared_hss_chain(double p1, double p2, Discipline hss_discipline,
                                  double service_time_1, double service_time_2,
                                  double arrival_rate) {
    check_probs(p1, p2);
    if (!(service_time_1 > 0.0) || !(service_time_2 > 0.0))
        throw Error("per-class database service times must be > 0");
    if (hss_discipline == Discipline::fcfs && service_time_1 != service_time_2)
        throw ClassMismatchError(
            "a FCFS database cannot serve the two lookup classes at different rates");

    NetworkSpec spec;
    spec.nodes = {front_node("P-CSCF", 4e-3), front_node("S/I-CSCF", 6e-3),
                  front_node("SLF", 3e-3), front_node("HSS", 9e-3)};
    NodeSpec& hss = spec.nodes[3];
    hss.discipline = hss_discipline;
    if (hss_discipline == Discipline::ps) {
        hss.per_class_service_rates = {{"lookup1", 1.0 / service_time_1},
                                       {"lookup2", 1.0 / service_time_2}};
    } else {
        hss.service_rate = 1.0 / service_time_1;
    }

    spec.classes = {{"ingress", 1.0}, {"lookup1", 0.0}, {"lookup2", 0.0}};

    const std::size_t n = spec.nodes.size();
    const std::size_t L = spec.classes.size();
    spec.routing.hop.assign(n, std::vector<double>(n, 0.0));
    spec.routing.entry.assign(n, 0.0);
    spec.routing.entry[0] = 1.0;
    spec.routing.hop[0][1] = 1.0; // P-CSCF -> S/I-CSCF
    spec.routing.hop[1][2] = 1.0; // S/I-CSCF -> SLF

    // Class-switching: a request leaving SLF as the ingress class turns
    // into one of the two lookup classes at the shared database.
    spec.routing.class_hop.assign(n * L, std::vector<double>(n * L, 0.0));
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t l = 0; l < L; ++l)
            for (std::size_t i = 0; i < n; ++i)
                spec.routing.class_hop[j * L + l][i * L + l] = spec.routing.hop[j][i];
    const std::size_t slf_in = 2 * L + 0;
    const std::size_t hss_l1 = 3 * L + 1;
    const std::size_t hss_l2 = 3 * L + 2;
    spec.routing.class_hop[slf_in][hss_l1] = p1;
    spec.routing.class_hop[slf_in][hss_l2] = p2;

    spec.arrival_rate = arrival_rate;
    return spec;
}

} // namespace qnet
