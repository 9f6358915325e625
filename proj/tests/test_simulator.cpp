#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <qnet/analytic.hpp>
#include <qnet/errors.hpp>
#include <qnet/model.hpp>
#include <qnet/scenarios.hpp>
#include <qnet/simulator.hpp>
#include <qnet/traffic.hpp>

#include "test_util.hpp"

using namespace qnet;
using qnet::test::make_single;
using qnet::test::make_tandem;

namespace {

SimConfig quick_config(NetworkSpec spec, double horizon_s, int reps, std::uint64_t seed) {
    SimConfig cfg;
    cfg.spec = std::move(spec);
    cfg.time_horizon = horizon_s;
    cfg.replications = reps;
    cfg.seed = seed;
    return cfg;
}

bool same_estimate(const Estimate& a, const Estimate& b) {
    return a.mean == b.mean && a.half_width == b.half_width;
}

bool same_result(const SimResult& a, const SimResult& b) {
    if (a.nodes.size() != b.nodes.size()) return false;
    if (!same_estimate(a.chain_response, b.chain_response)) return false;
    if (a.total_arrivals != b.total_arrivals || a.total_departures != b.total_departures)
        return false;
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
        const NodeStats& x = a.nodes[i];
        const NodeStats& y = b.nodes[i];
        if (x.id != y.id || x.arrivals != y.arrivals || x.departures != y.departures)
            return false;
        if (!same_estimate(x.waiting, y.waiting) || !same_estimate(x.queue_length, y.queue_length) ||
            !same_estimate(x.response, y.response) || !same_estimate(x.utilization, y.utilization))
            return false;
        if (x.per_class.size() != y.per_class.size()) return false;
        for (std::size_t c = 0; c < x.per_class.size(); ++c)
            if (!same_estimate(x.per_class[c].waiting, y.per_class[c].waiting) ||
                x.per_class[c].departures != y.per_class[c].departures)
                return false;
    }
    return true;
}

} // namespace

TEST_CASE("confidence interval helper") {
    Estimate e{10.0, 0.5};
    CHECK(e.covers(10.4));
    CHECK(e.covers(9.6));
    CHECK(!e.covers(10.6));
    CHECK(e.covers(10.6, 0.2));
    CHECK(!e.covers(11.0, 0.2));
}

TEST_CASE("identical seeds give identical results") {
    const SimConfig cfg = quick_config(preset_cims(50.0), 60.0, 3, 20240801);
    const SimResult a = simulate(cfg);
    const SimResult b = simulate(cfg);
    CHECK(same_result(a, b));
    CHECK(a.seed == 20240801);
}

TEST_CASE("thread count never changes the numbers") {
    SimConfig cfg = quick_config(make_shared_hss_chain(0.3, 0.6, Discipline::ps, 3e-3, 6e-3, 50.0),
                                 80.0, 4, 7);
    cfg.threads = 1;
    const SimResult a = simulate(cfg);
    cfg.threads = 4;
    const SimResult b = simulate(cfg);
    CHECK(same_result(a, b));
}

TEST_CASE("different seeds give different samples") {
    SimConfig cfg = quick_config(preset_cims(50.0), 40.0, 2, 1);
    const SimResult a = simulate(cfg);
    cfg.seed = 2;
    const SimResult b = simulate(cfg);
    CHECK(a.nodes[0].waiting.mean != b.nodes[0].waiting.mean);
}

TEST_CASE("job-count horizon stops after the requested completions") {
    SimConfig cfg;
    cfg.spec = preset_cims(50.0);
    cfg.job_horizon = 2000;
    cfg.replications = 2;
    cfg.seed = 99;
    const SimResult r = simulate(cfg);
    // after-warmup completed requests per replication: (1 - 0.2) * 2000
    CHECK(r.total_departures == 2 * 1600);
    CHECK(r.total_arrivals >= r.total_departures);
}

TEST_CASE("single station estimates cover the exact values") {
    // M/M/1 at rho = 0.5
    SimConfig cfg = quick_config(make_single(10.0, 5.0), 4000.0, 5, 424242);
    const SimResult r = simulate(cfg);
    const NodeMetrics exact = mm1_metrics(5.0, 10.0);
    const NodeStats& ns = r.nodes[0];
    CHECK(ns.waiting.covers(exact.mean_waiting, 0.01 * exact.mean_waiting));
    CHECK(ns.queue_length.covers(exact.mean_queue, 0.01 * exact.mean_queue));
    CHECK(ns.response.covers(exact.mean_response, 0.01 * exact.mean_response));
    CHECK(ns.utilization.covers(exact.utilization, 0.01 * exact.utilization));
    CHECK(ns.arrival_rate.covers(5.0, 0.05));
}

TEST_CASE("multi-server station estimates cover the Erlang forms") {
    NetworkSpec s = make_single(1.0, 2.0);
    s.nodes[0].servers = 3;
    SimConfig cfg = quick_config(std::move(s), 4000.0, 5, 31337);
    const SimResult r = simulate(cfg);
    const NodeMetrics exact = mmm_metrics(2.0, 1.0, 3);
    CHECK(r.nodes[0].waiting.covers(exact.mean_waiting, 0.01 * exact.mean_waiting));
    CHECK(r.nodes[0].queue_length.covers(exact.mean_queue, 0.01 * exact.mean_queue));
    // busy fraction, not delay probability
    CHECK(r.nodes[0].utilization.covers(exact.utilization, 0.01 * exact.utilization));
}

TEST_CASE("capacity factors speed up service in the simulator") {
    NetworkSpec s = make_single(10.0, 5.0);
    s.nodes[0].capacity_factor = 2.0; // effective rate 20
    SimConfig cfg = quick_config(std::move(s), 3000.0, 5, 5150);
    const SimResult r = simulate(cfg);
    const NodeMetrics exact = mm1_metrics(5.0, 20.0);
    CHECK(r.nodes[0].response.covers(exact.mean_response, 0.01 * exact.mean_response));
    CHECK(r.nodes[0].utilization.covers(0.25, 0.01));
}

TEST_CASE("processor sharing with equal split treats classes fairly") {
    const NetworkSpec s = make_shared_hss_chain(0.3, 0.3, Discipline::ps, 4.5e-3, 4.5e-3, 50.0);
    SimConfig cfg = quick_config(s, 600.0, 5, 777);
    const SimResult r = simulate(cfg);
    const NodeStats& db = r.at("HSS");
    REQUIRE(db.per_class.size() == 3);
    const Estimate& w1 = db.per_class[1].waiting;
    const Estimate& w2 = db.per_class[2].waiting;
    // same arrival rate, same service rate: waits agree within CIs
    CHECK(std::abs(w1.mean - w2.mean) <= w1.half_width + w2.half_width + 0.01 * w1.mean);
}

TEST_CASE("bulk arrivals inject whole batches") {
    NetworkSpec s = make_single(101.0, 1.0);
    BulkSpec b;
    b.kind = BulkSpec::Kind::uniform;
    b.size = 9; // E[b] = 5 requests per event
    s.bulk = b;
    SimConfig cfg = quick_config(std::move(s), 4000.0, 5, 11);
    const SimResult r = simulate(cfg);
    CHECK(r.nodes[0].arrival_rate.covers(5.0, 0.05));
    const double exact = bulk_waiting(1.0, 101.0, b);
    CHECK(r.nodes[0].waiting.covers(exact, 0.03 * exact));
}

TEST_CASE("event traces are chronological and balanced") {
    SimConfig cfg = quick_config(preset_cims(50.0), 30.0, 2, 31415);
    cfg.trace_path = "trace_test.csv";
    const SimResult r = simulate(cfg);
    CHECK(r.total_departures > 0);

    std::ifstream in(cfg.trace_path);
    REQUIRE(in.good());
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "time,node,job,class,kind");
    double prev_t = 0.0;
    long long arrives = 0, starts = 0, departs = 0, rows = 0;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string t_s, node, job, cls, kind;
        REQUIRE(std::getline(ss, t_s, ','));
        REQUIRE(std::getline(ss, node, ','));
        REQUIRE(std::getline(ss, job, ','));
        REQUIRE(std::getline(ss, cls, ','));
        REQUIRE(std::getline(ss, kind, ','));
        const double t = std::stod(t_s);
        CHECK(t >= prev_t);
        prev_t = t;
        if (kind == "arrive") ++arrives;
        else if (kind == "start") ++starts;
        else if (kind == "depart") ++departs;
        else FAIL(("unknown trace kind: " + kind).c_str());
        ++rows;
    }
    CHECK(rows > 100);
    CHECK(arrives >= departs);
    CHECK(starts >= departs);
    CHECK(arrives >= starts);
    std::remove(cfg.trace_path.c_str());
}

TEST_CASE("comparison endorses exact analytics and flags corrupted ones") {
    SimConfig cfg = quick_config(preset_cims(50.0), 400.0, 5, 12345);
    const ChainMetrics cm = chain_metrics(cfg.spec);

    const ComparisonReport good = compare(cfg, cm);
    CHECK(good.all_pass);
    CHECK(good.rows.size() == 4 * 6 + 1); // EW/EQ/ET/rho per node + chain

    ChainMetrics bad = cm;
    bad.per_node[1].mean_waiting *= 2.0; // inject a wrong value
    const ComparisonReport r = compare(cfg, bad);
    CHECK(!r.all_pass);
    int failed = 0;
    for (const auto& row : r.rows)
        if (!row.pass) {
            ++failed;
            CHECK(row.node == "S/I-CSCF");
            CHECK(row.metric == "EW");
        }
    CHECK(failed == 1);
}

TEST_CASE("comparison refuses mismatched node sets") {
    SimConfig cfg = quick_config(preset_cims(50.0), 10.0, 1, 1);
    const ChainMetrics other = chain_metrics(make_dedicated_hss_chain(0.2, 0.3, 50.0));
    CHECK_THROWS_AS(compare(cfg, other), SpecMismatchError);
}

TEST_CASE("configuration errors are rejected up front") {
    SimConfig cfg;
    cfg.spec = preset_cims(50.0);
    SUBCASE("no horizon") { CHECK_THROWS_AS(simulate(cfg), Error); }
    SUBCASE("two horizons") {
        cfg.time_horizon = 10.0;
        cfg.job_horizon = 10;
        CHECK_THROWS_AS(simulate(cfg), Error);
    }
    SUBCASE("bad warmup") {
        cfg.time_horizon = 10.0;
        cfg.warmup_fraction = 0.9;
        CHECK_THROWS_AS(simulate(cfg), Error);
    }
    SUBCASE("no replications") {
        cfg.time_horizon = 10.0;
        cfg.replications = 0;
        CHECK_THROWS_AS(simulate(cfg), Error);
    }
    SUBCASE("override for unknown node") {
        cfg.time_horizon = 10.0;
        cfg.service_overrides["ghost"] = ServiceOverride{};
        CHECK_THROWS_AS(simulate(cfg), Error);
    }
}

TEST_CASE("deterministic service override changes the distribution, not the mean") {
    // M/D/1 waits are half the M/M/1 waits at the same utilization.
    NetworkSpec s = make_single(10.0, 5.0);
    SimConfig cfg = quick_config(std::move(s), 4000.0, 5, 606);
    ServiceOverride ov;
    ov.kind = ServiceOverride::Kind::deterministic;
    cfg.service_overrides["n0"] = ov;
    const SimResult r = simulate(cfg);
    const double md1 = 0.5 * mm1_metrics(5.0, 10.0).mean_waiting;
    CHECK(r.nodes[0].waiting.covers(md1, 0.02 * md1));
    CHECK(r.nodes[0].utilization.covers(0.5, 0.01));
}

TEST_CASE("chain response matches the analytic sum on the reference chain") {
    SimConfig cfg = quick_config(preset_cims(50.0), 500.0, 5, 2718);
    const SimResult r = simulate(cfg);
    const double exact = chain_metrics(preset_cims(50.0)).chain_response;
    CHECK(r.chain_response.covers(exact, 0.01 * exact));
}
