// Reference topologies for the subscriber-database sharing study:
// the same ingress chain terminated either by per-flow dedicated
// database nodes (single class) or by one shared multi-class database
// node (FCFS or PS).
#pragma once

#include "qnet/model.hpp"

namespace qnet {

/// Ingress chain with dedicated database nodes:
/// P-CSCF -> S/I-CSCF -> SLF -> {HSS1 w.p. p1, HSS2 w.p. p2, depart}.
/// Single class; every node FCFS with the reference service times
/// (4/6/3 ms front chain, 9 ms databases).
NetworkSpec make_dedicated_hss_chain(double p1, double p2, double arrival_rate = 1.0);

/// Ingress chain with one shared database node:
/// P-CSCF -> S/I-CSCF -> SLF -> HSS, where a request leaving SLF becomes
/// lookup class 1 w.p. p1, lookup class 2 w.p. p2, or departs. Requests
/// enter (and traverse the front chain) as a single ingress class.
///
/// hss_discipline selects the database queueing policy. Under FCFS the
/// database serves every class at 1/0.009 per second (class-independent
/// rates, as that policy requires); under PS the two lookup classes may
/// be given distinct mean service times t1 and t2 (the reference study
/// splits a 9 ms total between them).
NetworkSpec make_shared_hss_chain(double p1, double p2, Discipline hss_discipline,
                                  double service_time_1 = 9e-3, double service_time_2 = 9e-3,
                                  double arrival_rate = 1.0);

} // namespace qnet
