#include <doctest.h>

#include <string>

#include <qnet/config_io.hpp>
#include <qnet/errors.hpp>
#include <qnet/model.hpp>
#include <qnet/scenarios.hpp>

#include "test_util.hpp"

using namespace qnet;
using qnet::test::make_single;

namespace {

void check_round_trip(const NetworkSpec& spec) {
    const std::string text = render_network_json(spec);
    const NetworkSpec back = parse_network_json(text, "<round-trip>");
    CHECK(back == spec);
    CHECK(render_network_json(back) == text);
}

} // namespace

TEST_CASE("render/parse round-trips preserve every field") {
    SUBCASE("reference chain") { check_round_trip(preset_cims(1.0)); }
    SUBCASE("dedicated scenario") { check_round_trip(make_dedicated_hss_chain(0.2, 0.4, 5.0)); }
    SUBCASE("shared fcfs scenario") {
        check_round_trip(make_shared_hss_chain(0.3, 0.6, Discipline::fcfs));
    }
    SUBCASE("shared ps scenario with split rates") {
        check_round_trip(make_shared_hss_chain(0.25, 0.5, Discipline::ps, 36e-4, 54e-4));
    }
    SUBCASE("bulk variants") {
        NetworkSpec s = preset_cims(2.0);
        BulkSpec uniform;
        uniform.kind = BulkSpec::Kind::uniform;
        uniform.size = 100;
        s.bulk = uniform;
        check_round_trip(s);
        BulkSpec geometric;
        geometric.kind = BulkSpec::Kind::geometric;
        geometric.p = 0.25;
        s.bulk = geometric;
        check_round_trip(s);
        BulkSpec empirical;
        empirical.kind = BulkSpec::Kind::empirical;
        empirical.pmf = {{1, 0.25}, {2, 0.25}, {10, 0.5}};
        s.bulk = empirical;
        check_round_trip(s);
    }
    SUBCASE("multi-server and capacity factors") {
        NetworkSpec s = preset_cims(1.0);
        s.nodes[0].servers = 10;
        s.nodes[3].capacity_factor = 2.5;
        check_round_trip(s);
    }
}

TEST_CASE("parser reports the offending element and line") {
    SUBCASE("unknown key") {
        const std::string text = R"({
  "nodes": [ { "id": "a", "service_rate": 10.0, "speed": 2 } ],
  "routing": { "entry": { "a": 1.0 } },
  "arrival": { "rate": 1.0 }
})";
        CHECK_THROWS_WITH_AS(parse_network_json(text, "bad.json"),
                             doctest::Contains("speed"), ConfigError);
    }
    SUBCASE("unknown node in routing") {
        const std::string text = R"({
  "nodes": [ { "id": "a", "service_rate": 10.0 } ],
  "routing": { "entry": { "a": 1.0 }, "a": { "ghost": 1.0 } },
  "arrival": { "rate": 1.0 }
})";
        try {
            parse_network_json(text, "bad.json");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("ghost") != std::string::npos);
            CHECK(msg.find("bad.json") != std::string::npos);
        }
    }
    SUBCASE("validation failures carry the dotted element path") {
        const std::string text = R"({
  "nodes": [ { "id": "a", "service_rate": -5.0 } ],
  "routing": { "entry": { "a": 1.0 } },
  "arrival": { "rate": 1.0 }
})";
        CHECK_THROWS_WITH_AS(parse_network_json(text, "bad.json"),
                             doctest::Contains("service_rate"), ConfigError);
    }
    SUBCASE("malformed json names the file") {
        CHECK_THROWS_AS(parse_network_json("{ not json", "broken.json"), ConfigError);
    }
    SUBCASE("interarrival_time is accepted in place of rate") {
        const std::string text = R"({
  "nodes": [ { "id": "a", "service_rate": 10.0 } ],
  "routing": { "entry": { "a": 1.0 } },
  "arrival": { "interarrival_time": 0.5 }
})";
        const NetworkSpec s = parse_network_json(text);
        CHECK(s.arrival_rate == doctest::Approx(2.0).epsilon(1e-15));
    }
    SUBCASE("per-class service times invert to rates") {
        const std::string text = R"({
  "nodes": [ { "id": "db", "service_rate": 111.0, "discipline": "ps",
               "per_class_service_times": { "fast": 0.003, "slow": 0.006 } } ],
  "routing": { "entry": { "db": 1.0 } },
  "classes": [ { "id": "fast", "entry_probability": 0.5 },
               { "id": "slow", "entry_probability": 0.5 } ],
  "arrival": { "rate": 1.0 }
})";
        const NetworkSpec s = parse_network_json(text);
        CHECK(s.nodes[0].class_rate("fast") == doctest::Approx(1000.0 / 3.0).epsilon(1e-12));
        CHECK(s.nodes[0].class_rate("slow") == doctest::Approx(1000.0 / 6.0).epsilon(1e-12));
    }
}

TEST_CASE("config line locator anchors dotted paths") {
    const std::string text = R"({
  "nodes": [
    { "id": "a", "service_rate": 10.0 },
    { "id": "b", "service_rate": -5.0 }
  ],
  "routing": {
    "entry": { "a": 1.0 },
    "a": { "b": 1.0 }
  },
  "arrival": { "rate": 1.0 }
})";
    CHECK(locate_config_line(text, "nodes[1].service_rate") == 4);
    CHECK(locate_config_line(text, "routing.a.b") == 8);
    CHECK(locate_config_line(text, "arrival.rate") == 10);
    // unknown paths fall back to the deepest known prefix or 0
    CHECK(locate_config_line(text, "nodes[7].service_rate") <= 2);
}

TEST_CASE("overrides rewrite spec fields in place") {
    NetworkSpec s = preset_cims(1.0);

    apply_override(s, "nodes.HSS1.servers=3");
    CHECK(s.nodes[3].servers == 3);

    apply_override(s, "nodes.P-CSCF.capacity=2.5");
    CHECK(s.nodes[0].capacity_factor == 2.5);

    apply_override(s, "nodes.SLF.service_rate=400");
    CHECK(s.nodes[2].service_rate == 400.0);

    apply_override(s, "nodes.SLF.service_rate=time:0.004");
    CHECK(s.nodes[2].service_rate == doctest::Approx(250.0).epsilon(1e-15));

    apply_override(s, "arrival.rate=7");
    CHECK(s.arrival_rate == 7.0);

    apply_override(s, "routing.SLF.HSS1=0.4");
    CHECK(s.routing.hop[2][3] == 0.4);

    SUBCASE("unknown node is named in the error") {
        CHECK_THROWS_WITH_AS(apply_override(s, "nodes.ghost.servers=2"),
                             doctest::Contains("ghost"), ConfigError);
    }
    SUBCASE("missing equals sign") {
        CHECK_THROWS_AS(apply_override(s, "nodes.SLF.servers"), ConfigError);
    }
    SUBCASE("non-numeric value names the assignment") {
        CHECK_THROWS_WITH_AS(apply_override(s, "arrival.rate=abc"),
                             doctest::Contains("abc"), ConfigError);
    }
    SUBCASE("unknown field is named") {
        CHECK_THROWS_WITH_AS(apply_override(s, "nodes.SLF.speed=2"),
                             doctest::Contains("speed"), ConfigError);
    }
}

TEST_CASE("file loader reports missing files") {
    CHECK_THROWS_WITH_AS(load_network_file("/nonexistent/qnet.json"),
                         doctest::Contains("cannot open"), ConfigError);
}
