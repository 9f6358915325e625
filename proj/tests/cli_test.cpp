// End-to-end tests that drive the installed `qnet` binary as a subprocess:
// exit codes, output formats, determinism guarantees, and error reporting.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

fs::path scratch_dir() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "qnet_cli_tests";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    f << text;
}

/// Runs the CLI with `args` (shell-quoted by the caller where needed),
/// capturing stdout/stderr. `env_prefix` may hold VAR=value assignments.
RunResult run(const std::string& args, const std::string& env_prefix = "") {
    static int counter = 0;
    ++counter;
    const fs::path so = scratch_dir() / ("out" + std::to_string(counter) + ".txt");
    const fs::path se = scratch_dir() / ("err" + std::to_string(counter) + ".txt");
    std::string cmd;
    if (!env_prefix.empty()) cmd += env_prefix + " ";
    cmd += std::string(QNET_CLI_PATH) + " " + args;
    cmd += " >" + so.string() + " 2>" + se.string();
    const int rc = std::system(cmd.c_str());
    RunResult r;
    if (rc != -1 && WIFEXITED(rc)) r.code = WEXITSTATUS(rc);
    r.out = slurp(so);
    r.err = slurp(se);
    return r;
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

std::string first_line(const std::string& s) {
    return s.substr(0, s.find('\n'));
}

} // namespace

TEST_CASE("help exits zero and lists every subcommand") {
    const auto r = run("--help");
    CHECK(r.code == 0);
    for (const char* sub : {"analyze", "sweep", "optimize", "simulate", "compare"})
        CHECK_MESSAGE(contains(r.out, sub), "missing subcommand: ", sub);
}

TEST_CASE("subcommand help exits zero") {
    CHECK(run("analyze --help").code == 0);
    CHECK(run("simulate --help").code == 0);
}

TEST_CASE("missing subcommand and unknown flags are input errors") {
    CHECK(run("").code == 1);
    CHECK(run("analyze --preset cims --bogus-flag 3").code == 1);
    CHECK(run("frobnicate").code == 1);
}

TEST_CASE("analyze preset prints per-node table, chain response, and bound") {
    const auto r = run("analyze --preset cims --interarrival 5");
    REQUIRE(r.code == 0);
    for (const char* node :
         {"P-CSCF", "S/I-CSCF", "SLF", "HSS1", "HSS2", "HSS3"})
        CHECK_MESSAGE(contains(r.out, node), "missing node row: ", node);
    CHECK(contains(r.out, "chain E[T] ms: 22.018373"));
    CHECK(contains(r.out, "22.000000"));
}

TEST_CASE("seconds units flag rescales reported times") {
    const auto r = run("analyze --preset cims --interarrival 5 --units s");
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "chain E[T] s: 0.022018"));
}

TEST_CASE("analyze csv emits stable header, chain rows, and dot decimals") {
    const auto r = run("analyze --preset cims --format csv");
    REQUIRE(r.code == 0);
    CHECK(first_line(r.out) ==
          "node,class,discipline,servers,capacity,rho,EQ,EW_ms,ET_ms");
    CHECK(contains(r.out, "\nchain,,,,,,,,"));
    CHECK(contains(r.out, "\nbound,,,,,,,,22"));
    CHECK(contains(r.out, "P-CSCF,"));
    CHECK(!contains(r.out, ";"));
    CHECK(contains(r.out, "0.00")); // decimal point, never a comma separator
}

TEST_CASE("analyze json parses and carries the chain metrics") {
    const auto r = run("analyze --preset cims --interarrival 5 --format json");
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j.at("command") == "analyze");
    CHECK(j.at("units") == "ms");
    CHECK(j.at("nodes").size() == 6);
    CHECK(j.at("chain_ET").get<double>() ==
          doctest::Approx(22.018373).epsilon(1e-6));
    CHECK(j.at("bound").get<double>() == doctest::Approx(22.0).epsilon(1e-9));
    for (const auto& n : j.at("nodes")) {
        CHECK(n.contains("rho"));
        CHECK(n.contains("EW"));
    }
}

TEST_CASE("set overrides reshape the analyzed network") {
    const auto r =
        run("analyze --preset cims --set arrival.rate=50 --format json");
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j.at("chain_ET").get<double>() ==
          doctest::Approx(28.006701210296654).epsilon(1e-9));
}

TEST_CASE("missing config file exits 1 and names the file") {
    const auto r = run("analyze --config /no/such/file.json");
    CHECK(r.code == 1);
    CHECK(contains(r.err, "/no/such/file.json"));
    CHECK(contains(r.err, "cannot open"));
}

TEST_CASE("config with unknown key exits 1 and names the key") {
    const fs::path cfg = scratch_dir() / "bad_key.json";
    spit(cfg, R"({"arrival":{"rate":1.0},
                  "nodes":[{"id":"a","service_rate":10.0,"speed":3}],
                  "routing":{"entry":{"a":1.0}}})");
    const auto r = run("analyze --config " + cfg.string());
    CHECK(r.code == 1);
    CHECK(contains(r.err, "speed"));
}

TEST_CASE("config failing validation exits 1 and names the field") {
    const fs::path cfg = scratch_dir() / "bad_rate.json";
    spit(cfg, "{\"arrival\":{\"rate\":1.0},\n"
              " \"nodes\":[{\"id\":\"a\",\"service_rate\":-5.0}],\n"
              " \"routing\":{\"entry\":{\"a\":1.0}}}");
    const auto r = run("analyze --config " + cfg.string());
    CHECK(r.code == 1);
    CHECK(contains(r.err, "service_rate"));
    CHECK(contains(r.err, cfg.filename().string()));
}

TEST_CASE("bad override key exits 1 and names the key") {
    const auto r = run("analyze --preset cims --set nodes.SLF.speed=3");
    CHECK(r.code == 1);
    CHECK(contains(r.err, "speed"));
}

TEST_CASE("interarrival and rate flags are mutually exclusive") {
    CHECK(run("analyze --preset cims --interarrival 5 --rate 2").code == 1);
}

TEST_CASE("preset and config are mutually exclusive and one is required") {
    CHECK(run("analyze").code == 1);
    const fs::path cfg = scratch_dir() / "ok.json";
    spit(cfg, R"({"arrival":{"rate":1.0},
                  "nodes":[{"id":"a","service_rate":10.0}],
                  "routing":{"entry":{"a":1.0}}})");
    CHECK(run("analyze --preset cims --config " + cfg.string()).code == 1);
    CHECK(run("analyze --config " + cfg.string()).code == 0);
}

TEST_CASE("probs flag is rejected outside scenario presets") {
    const fs::path cfg = scratch_dir() / "plain.json";
    spit(cfg, R"({"arrival":{"rate":1.0},
                  "nodes":[{"id":"a","service_rate":10.0}],
                  "routing":{"entry":{"a":1.0}}})");
    const auto r = run("analyze --config " + cfg.string() + " --probs 0.2/0.3");
    CHECK(r.code == 1);
    CHECK(contains(r.err, "scenario presets"));
}

TEST_CASE("unstable network still analyzed, exit code 2, warning on stderr") {
    const auto r = run("analyze --preset cims --rate 300");
    CHECK(r.code == 2);
    CHECK(contains(r.err, "unstable"));
    CHECK(contains(r.out, "S/I-CSCF")); // table still printed
    CHECK(contains(r.out, "inf"));
}

TEST_CASE("identical seeds reproduce byte-identical simulate output") {
    const std::string args =
        "simulate --preset cims --jobs 3000 --reps 2 --seed 7 --format csv";
    const auto a = run(args);
    const auto b = run(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(!a.out.empty());
}

TEST_CASE("thread count does not change simulation results") {
    const std::string base =
        "simulate --preset cims --jobs 3000 --reps 4 --seed 21 --format csv";
    const auto a = run(base + " --threads 1");
    const auto b = run(base + " --threads 4");
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    CHECK(a.out == b.out);
}

TEST_CASE("environment seed applies only when the flag is absent") {
    const std::string base =
        "simulate --preset cims --jobs 3000 --reps 2 --format csv";
    const auto via_env = run(base, "QNET_SEED=99");
    const auto via_flag = run(base + " --seed 99");
    const auto other = run(base + " --seed 7");
    const auto flag_wins = run(base + " --seed 7", "QNET_SEED=99");
    REQUIRE(via_env.code == 0);
    CHECK(via_env.out == via_flag.out);
    CHECK(via_env.out != other.out);
    CHECK(flag_wins.out == other.out);
}

TEST_CASE("output file duplicates stdout byte for byte") {
    const fs::path dst = scratch_dir() / "sim.csv";
    const auto r = run("simulate --preset cims --jobs 3000 --reps 2 --seed 5 "
                       "--format csv --output " +
                       dst.string());
    REQUIRE(r.code == 0);
    CHECK(slurp(dst) == r.out);
}

TEST_CASE("simulate table reports chain response and run footer") {
    const auto r = run("simulate --preset cims --jobs 3000 --reps 2 --seed 7");
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "chain E[T] ms:"));
    CHECK(contains(r.out, "seed"));
    CHECK(contains(r.out, "7"));
}

TEST_CASE("sweep rejects non-monotone scalar values") {
    const auto r =
        run("sweep --preset cims --param interarrival_time --values 5,3,4");
    CHECK(r.code == 1);
    CHECK(contains(r.err, "monotone"));
}

TEST_CASE("sweep csv header is stable and instability maps to exit 2") {
    const auto r =
        run("sweep --preset cims --param arrival_rate --values 100,300");
    CHECK(r.code == 2);
    CHECK(first_line(r.out) ==
          "parameter,value,series,class,EQ,EW_ms,ET_ms,rho,bound_ms");
    CHECK(contains(r.out, "arrival_rate,100,"));
    CHECK(contains(r.out, "arrival_rate,300,"));
    CHECK(contains(r.out, "inf"));
}

TEST_CASE("sweep range expansion stays stable and exits 0") {
    const auto r = run("sweep --preset cims --param interarrival_time "
                       "--values 1..5:1 --metrics ET,bound");
    REQUIRE(r.code == 0);
    CHECK(first_line(r.out) == "parameter,value,series,class,ET_ms,bound_ms");
    for (const char* v : {",1,", ",2,", ",3,", ",4,", ",5,"})
        CHECK_MESSAGE(contains(r.out, std::string("interarrival_time") + v),
                      "missing sweep point ", v);
}

TEST_CASE("sweep class parameters demand a scenario preset") {
    const auto r = run("sweep --preset cims --param class_probabilities "
                       "--values 0.2/0.3");
    CHECK(r.code == 1);
    CHECK(contains(r.err, "scenario preset"));
}

TEST_CASE("optimizer output includes allocation table and verification") {
    const auto r = run("optimize --preset cims --budget 1000");
    REQUIRE(r.code == 0);
    for (const char* col : {"node", "lambda", "mu_opt", "instances", "base_mu",
                            "slack"})
        CHECK_MESSAGE(contains(first_line(r.out), col), "missing column ", col);
    CHECK(contains(r.out, "166"));        // uniform surplus over arrival rate
    CHECK(contains(r.out, "36.144578"));  // mean sojourn objective in ms
    CHECK(contains(r.out, "verification"));
}

TEST_CASE("optimizer exits 1 on infeasible budget") {
    const auto r = run("optimize --preset cims --budget 3");
    CHECK(r.code == 1);
    CHECK(contains(r.err, "budget"));
}

TEST_CASE("bulk analyze reports entry-node times and batch footer") {
    const auto r = run("analyze --preset cims --bulk deterministic:5 --rate 2");
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "bulk"));
    CHECK(contains(r.out, "E[b]: 5"));
}

TEST_CASE("bulk analyze csv leaves downstream time cells empty") {
    const auto r = run("analyze --preset cims --bulk deterministic:5 --rate 2 "
                       "--format csv");
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "HSS1"));
    bool downstream_blank = false;
    std::istringstream ss(r.out);
    for (std::string line; std::getline(ss, line);)
        if (line.rfind("HSS1,", 0) == 0 && line.size() >= 2 &&
            line.substr(line.size() - 2) == ",,")
            downstream_blank = true;
    CHECK(downstream_blank);
}

TEST_CASE("bulk analyze json exposes batch moments") {
    const auto r = run("analyze --preset cims --bulk uniform:100 --rate 2 "
                       "--format json");
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j.at("bulk").at("moment_ratio").get<double>() ==
          doctest::Approx(67.0).epsilon(1e-12));
    CHECK(j.at("bulk").at("mean").get<double>() ==
          doctest::Approx(50.5).epsilon(1e-12));
}

TEST_CASE("compare endorses the analytic model end to end") {
    const auto r = run("compare --preset cims --rate 1 --jobs 100000 "
                       "--reps 5 --seed 11");
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "within 95% CI + 1% allowance"));
}

TEST_CASE("compare refuses unstable networks with exit 2") {
    const auto r = run("compare --preset cims --rate 300 --jobs 1000 --reps 2");
    CHECK(r.code == 2);
    CHECK(contains(r.err, "unstable"));
}

TEST_CASE("compare csv rows carry pass flags") {
    const auto r = run("compare --preset cims --rate 1 --jobs 50000 --reps 5 "
                       "--seed 11 --format csv");
    REQUIRE(r.code == 0);
    CHECK(first_line(r.out) ==
          "node,metric,analytic,simulated,half_width,rel_error,pass");
    CHECK(contains(r.out, ",1"));
}
