#include <doctest.h>

#include <cmath>

#include <qnet/model.hpp>
#include <qnet/scenarios.hpp>

#include "test_util.hpp"

using namespace qnet;
using qnet::test::has_violation;
using qnet::test::make_single;
using qnet::test::make_tandem;

TEST_CASE("bulk moments: deterministic") {
    BulkSpec b;
    b.kind = BulkSpec::Kind::deterministic;
    b.size = 7;
    CHECK(b.mean() == 7.0);
    CHECK(b.second_moment() == 49.0);
}

TEST_CASE("bulk moments: uniform on 1..B") {
    BulkSpec b;
    b.kind = BulkSpec::Kind::uniform;
    b.size = 100;
    CHECK(b.mean() == doctest::Approx(50.5).epsilon(1e-15));
    // E[b^2] = (B+1)(2B+1)/6
    CHECK(b.second_moment() == doctest::Approx(101.0 * 201.0 / 6.0).epsilon(1e-15));

    b.size = 1; // degenerates to the constant batch 1
    CHECK(b.mean() == 1.0);
    CHECK(b.second_moment() == 1.0);
}

TEST_CASE("bulk moments: geometric on {1,2,...}") {
    BulkSpec b;
    b.kind = BulkSpec::Kind::geometric;
    b.p = 0.25;
    CHECK(b.mean() == doctest::Approx(4.0).epsilon(1e-15));
    // E[b^2] = (2 - p) / p^2
    CHECK(b.second_moment() == doctest::Approx(1.75 / 0.0625).epsilon(1e-15));

    b.p = 1.0; // always a single request
    CHECK(b.mean() == 1.0);
    CHECK(b.second_moment() == 1.0);
}

TEST_CASE("bulk moments: empirical pmf") {
    BulkSpec b;
    b.kind = BulkSpec::Kind::empirical;
    b.pmf = {{1, 0.5}, {3, 0.5}};
    CHECK(b.mean() == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(b.second_moment() == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("reference chain preset: shape and rates") {
    const NetworkSpec s = preset_cims(1.0);
    REQUIRE(s.node_count() == 6);
    CHECK(s.nodes[0].id == "P-CSCF");
    CHECK(s.nodes[1].id == "S/I-CSCF");
    CHECK(s.nodes[2].id == "SLF");
    CHECK(s.nodes[3].id == "HSS1");
    CHECK(s.nodes[5].id == "HSS3");
    CHECK(s.nodes[0].service_rate == doctest::Approx(250.0).epsilon(1e-15));
    CHECK(s.nodes[1].service_rate == doctest::Approx(1000.0 / 6.0).epsilon(1e-15));
    CHECK(s.nodes[2].service_rate == doctest::Approx(1000.0 / 3.0).epsilon(1e-15));
    for (int i = 3; i < 6; ++i)
        CHECK(s.nodes[i].service_rate == doctest::Approx(1000.0 / 9.0).epsilon(1e-15));
    for (const auto& nd : s.nodes) {
        CHECK(nd.servers == 1);
        CHECK(nd.capacity_factor == 1.0);
        CHECK(nd.discipline == Discipline::fcfs);
    }
    CHECK(s.routing.entry[0] == 1.0);
    CHECK(s.routing.hop[2][3] == 0.2);
    CHECK(s.routing.hop[2][4] == 0.3);
    CHECK(s.routing.hop[2][5] == 0.5);
    // HSS lookups leave the network: empty rows
    for (int j = 3; j < 6; ++j)
        for (int i = 0; i < 6; ++i) CHECK(s.routing.hop[j][i] == 0.0);
    CHECK(s.class_count() == 1);
    CHECK(validate(s).ok());
}

TEST_CASE("validation accepts all built-in topologies") {
    CHECK(validate(preset_cims(2.0)).ok());
    CHECK(validate(make_dedicated_hss_chain(0.2, 0.3, 5.0)).ok());
    CHECK(validate(make_shared_hss_chain(0.3, 0.6, Discipline::fcfs)).ok());
    CHECK(validate(make_shared_hss_chain(0.3, 0.6, Discipline::ps, 3e-3, 6e-3)).ok());
}

TEST_CASE("validation flags broken specs with element identification") {
    NetworkSpec s = preset_cims(1.0);

    SUBCASE("non-positive service rate") {
        s.nodes[2].service_rate = 0.0;
        const auto rep = validate(s);
        CHECK(!rep.ok());
        CHECK(has_violation(rep, "service_rate"));
        CHECK(has_violation(rep, "SLF"));
    }
    SUBCASE("zero arrival rate") {
        s.arrival_rate = 0.0;
        CHECK(has_violation(validate(s), "arrival.rate"));
    }
    SUBCASE("bad server count") {
        s.nodes[0].servers = 0;
        CHECK(has_violation(validate(s), "servers"));
    }
    SUBCASE("bad capacity factor") {
        s.nodes[4].capacity_factor = -1.0;
        CHECK(has_violation(validate(s), "capacity"));
    }
    SUBCASE("routing row above one") {
        s.routing.hop[2][3] = 0.9; // 0.9 + 0.3 + 0.5 > 1
        CHECK(has_violation(validate(s), "routing.SLF"));
    }
    SUBCASE("negative routing probability") {
        s.routing.hop[0][1] = -0.1;
        CHECK(has_violation(validate(s), "routing.P-CSCF"));
    }
    SUBCASE("entry does not sum to one") {
        s.routing.entry[0] = 0.25;
        CHECK(has_violation(validate(s), "routing.entry"));
    }
    SUBCASE("duplicate node ids") {
        s.nodes[1].id = "P-CSCF";
        CHECK(has_violation(validate(s), "duplicate"));
    }
    SUBCASE("per-class rates on a fcfs node") {
        s.nodes[3].per_class_service_rates["default"] = 100.0;
        CHECK(has_violation(validate(s), "per_class_service_rates"));
    }
    SUBCASE("per-class rate for an unknown class") {
        s.nodes[3].discipline = Discipline::ps;
        s.nodes[3].per_class_service_rates["ghost"] = 100.0;
        CHECK(has_violation(validate(s), "ghost"));
    }
    SUBCASE("closed routing loop is rejected as non-open") {
        s.routing.hop[3].assign(6, 0.0);
        s.routing.hop[3][3] = 1.0; // HSS1 feeds itself forever
        const auto rep = validate(s);
        CHECK(!rep.ok());
        CHECK(has_violation(rep, "open"));
    }
    SUBCASE("empirical bulk pmf must sum to one") {
        BulkSpec b;
        b.kind = BulkSpec::Kind::empirical;
        b.pmf = {{1, 0.4}, {2, 0.4}};
        s.bulk = b;
        CHECK(has_violation(validate(s), "pmf"));
    }
    SUBCASE("geometric bulk parameter range") {
        BulkSpec b;
        b.kind = BulkSpec::Kind::geometric;
        b.p = 0.0;
        s.bulk = b;
        CHECK(has_violation(validate(s), "bulk"));
    }
}

TEST_CASE("multiple violations reported together") {
    NetworkSpec s = preset_cims(1.0);
    s.nodes[0].service_rate = -1.0;
    s.nodes[1].servers = -2;
    s.arrival_rate = 0.0;
    const auto rep = validate(s);
    CHECK(rep.violations.size() >= 3);
    CHECK(rep.to_string().find("service_rate") != std::string::npos);
}

TEST_CASE("routing row sums just above one are normalized") {
    NetworkSpec s = preset_cims(1.0);
    s.routing.hop[2][3] = 0.2 + 5e-10;
    s.normalize_routing();
    double sum = 0.0;
    for (double p : s.routing.hop[2]) sum += p;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(validate(s).ok());
}

TEST_CASE("helper builders wire up open serial chains") {
    const NetworkSpec t = make_tandem({10.0, 20.0}, 1.0);
    CHECK(validate(t).ok());
    const NetworkSpec f = make_single(10.0, 1.0, 0.5);
    CHECK(validate(f).ok());
}

TEST_CASE("request rate scales with the batch mean") {
    NetworkSpec s = make_single(101.0, 1.0);
    CHECK(s.request_rate() == 1.0);
    BulkSpec b;
    b.kind = BulkSpec::Kind::uniform;
    b.size = 100;
    s.bulk = b;
    CHECK(s.request_rate() == doctest::Approx(50.5).epsilon(1e-15));
}

TEST_CASE("shared chain scenario: class switching and entry mix") {
    const NetworkSpec s = make_shared_hss_chain(0.3, 0.6, Discipline::ps, 3e-3, 6e-3);
    REQUIRE(s.class_count() == 3);
    CHECK(s.classes[0].entry_probability == 1.0);
    CHECK(s.classes[1].entry_probability == 0.0);
    CHECK(s.classes[2].entry_probability == 0.0);
    REQUIRE(!s.routing.class_hop.empty());
    const int slf = s.node_index("SLF");
    const int hss = s.node_index("HSS");
    REQUIRE(slf >= 0);
    REQUIRE(hss >= 0);
    const std::size_t L = s.class_count();
    const auto& row = s.routing.class_hop[static_cast<std::size_t>(slf) * L + 0];
    CHECK(row[static_cast<std::size_t>(hss) * L + 1] == 0.3);
    CHECK(row[static_cast<std::size_t>(hss) * L + 2] == 0.6);
    // PS database node serves each lookup class at its own rate
    const auto& db = s.nodes[static_cast<std::size_t>(hss)];
    CHECK(db.discipline == Discipline::ps);
    CHECK(db.class_rate("lookup1") == doctest::Approx(1.0 / 3e-3).epsilon(1e-15));
    CHECK(db.class_rate("lookup2") == doctest::Approx(1.0 / 6e-3).epsilon(1e-15));
}

TEST_CASE("dedicated chain scenario matches the reference graph") {
    const NetworkSpec s = make_dedicated_hss_chain(0.2, 0.3, 2.0);
    CHECK(s.class_count() == 1);
    CHECK(s.arrival_rate == 2.0);
    const int slf = s.node_index("SLF");
    REQUIRE(slf >= 0);
    double row_sum = 0.0;
    for (double p : s.routing.hop[static_cast<std::size_t>(slf)]) row_sum += p;
    CHECK(row_sum == doctest::Approx(0.5).epsilon(1e-12)); // half the flow exits at SLF
}
