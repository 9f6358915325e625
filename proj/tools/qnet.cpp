// qnet: analytical + simulation toolkit for open queueing networks
// modeling softwarized service chains.
//
// Subcommands: analyze, sweep, optimize, simulate, compare.
// Exit codes: 0 success, 1 input error, 2 unstable-but-analyzed,
// 3 comparison failure.

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <qnet/analytic.hpp>
#include <qnet/config_io.hpp>
#include <qnet/errors.hpp>
#include <qnet/model.hpp>
#include <qnet/optimizer.hpp>
#include <qnet/scenarios.hpp>
#include <qnet/simulator.hpp>
#include <qnet/traffic.hpp>

using nlohmann::json;
using namespace qnet;

namespace {

// ---------------------------------------------------------------------------
// Formatting helpers. All output is built deterministically: same inputs
// and seed give byte-identical bytes.
// ---------------------------------------------------------------------------

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string numf(double v, int prec = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

json json_num(double v) {
    if (std::isfinite(v)) return v;
    return nullptr; // JSON has no infinity; null marks unstable values
}

struct Units {
    double scale = 1000.0;   // seconds -> display
    std::string name = "ms";
};

Units make_units(const std::string& s) {
    if (s == "s") return {1.0, "s"};
    if (s == "ms") return {1000.0, "ms"};
    throw Error("unknown units '" + s + "' (expected ms or s)");
}

// Collects the entire report; flushed to stdout and (optionally) a file at
// the end so both sinks carry identical bytes.
struct Out {
    std::string buf;
    std::string path;

    void line(const std::string& s) {
        buf += s;
        buf += '\n';
    }
    void raw(const std::string& s) { buf += s; }

    void flush() const {
        std::fwrite(buf.data(), 1, buf.size(), stdout);
        if (!path.empty()) {
            std::ofstream f(path, std::ios::binary);
            if (!f) throw Error("cannot open output file '" + path + "'");
            f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        }
    }
};

// ---------------------------------------------------------------------------
// Spec construction from flags.
// ---------------------------------------------------------------------------

enum class Scenario { none, dedicated, shared_fcfs, shared_ps };

struct CommonOpts {
    std::string preset;
    std::string config_path;
    std::vector<std::string> sets;
    double interarrival = 0.0;
    double rate = 0.0;
    std::string capacity;
    std::string bulk;
    std::string probs;
    std::string split;
    std::string units = "ms";
    std::string format = "table";
    std::string output;
};

struct Built {
    NetworkSpec spec;
    Scenario scenario = Scenario::none;
    double p1 = 0.3, p2 = 0.6;           // scenario switching probabilities
    double t1 = 0.0045, t2 = 0.0045;     // shared-PS per-class service times
    double lambda = 1.0;                  // scenario arrival rate
    std::string config_text;              // raw document for line anchoring
    std::string origin;                   // file name or preset label
    CommonOpts opts;
};

std::vector<double> split_numbers(const std::string& s, char sep) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, sep)) {
        if (tok.empty()) throw Error("empty component in '" + s + "'");
        std::size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &pos);
        } catch (const std::exception&) {
            throw Error("'" + tok + "' is not a number");
        }
        if (pos != tok.size()) throw Error("'" + tok + "' is not a number");
        out.push_back(v);
    }
    return out;
}

std::optional<BulkSpec> parse_bulk_flag(const std::string& s) {
    if (s == "none") return std::nullopt;
    const auto colon = s.find(':');
    const std::string kind = s.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : s.substr(colon + 1);
    BulkSpec b;
    if (kind == "deterministic") {
        b.kind = BulkSpec::Kind::deterministic;
        b.size = static_cast<long long>(std::stoll(arg));
    } else if (kind == "uniform") {
        b.kind = BulkSpec::Kind::uniform;
        b.size = static_cast<long long>(std::stoll(arg));
    } else if (kind == "geometric") {
        b.kind = BulkSpec::Kind::geometric;
        b.p = std::stod(arg);
    } else if (kind == "empirical") {
        b.kind = BulkSpec::Kind::empirical;
        std::stringstream ss(arg);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos)
                throw Error("empirical bulk entries must look like size=prob");
            b.pmf[std::stoll(tok.substr(0, eq))] = std::stod(tok.substr(eq + 1));
        }
    } else {
        throw Error("unknown bulk kind '" + kind +
                    "' (expected deterministic:N, uniform:MAX, geometric:P, "
                    "empirical:k=p,..., or none)");
    }
    return b;
}

NetworkSpec materialize_scenario(const Built& b, double p1, double p2, double t1,
                                 double t2) {
    switch (b.scenario) {
        case Scenario::dedicated: return make_dedicated_hss_chain(p1, p2, b.lambda);
        case Scenario::shared_fcfs:
            return make_shared_hss_chain(p1, p2, Discipline::fcfs, 9e-3, 9e-3, b.lambda);
        case Scenario::shared_ps:
            return make_shared_hss_chain(p1, p2, Discipline::ps, t1, t2, b.lambda);
        case Scenario::none: break;
    }
    throw Error("internal: no scenario to materialize");
}

// Applies post-load tweaks shared by the initial build and sweep rebuilds.
void apply_common(NetworkSpec& spec, const CommonOpts& o) {
    for (const auto& assignment : o.sets) apply_override(spec, assignment);
    if (o.interarrival > 0.0) spec.arrival_rate = 1.0 / o.interarrival;
    if (o.rate > 0.0) spec.arrival_rate = o.rate;
    if (!o.capacity.empty()) {
        const auto cs = split_numbers(o.capacity, ',');
        if (cs.size() == 1) {
            for (auto& nd : spec.nodes) nd.capacity_factor = cs[0];
        } else if (cs.size() == spec.node_count()) {
            for (std::size_t i = 0; i < cs.size(); ++i)
                spec.nodes[i].capacity_factor = cs[i];
        } else {
            throw Error("--capacity needs 1 or " + std::to_string(spec.node_count()) +
                        " comma-separated values, got " + std::to_string(cs.size()));
        }
    }
    if (!o.bulk.empty()) spec.bulk = parse_bulk_flag(o.bulk);
}

// Validates and reports violations with line anchors where possible.
void check_spec(const Built& b) {
    const ValidationReport rep = validate(b.spec);
    if (rep.ok()) return;
    std::string msg;
    for (const auto& v : rep.violations) {
        int line = 0;
        if (!b.config_text.empty()) line = locate_config_line(b.config_text, v.where);
        msg += b.origin;
        if (line > 0) msg += ":" + std::to_string(line);
        msg += ": " + v.where + ": " + v.message + "\n";
    }
    msg.pop_back();
    throw ConfigError(msg);
}

Built build_spec(const CommonOpts& o) {
    Built b;
    b.opts = o;
    if (o.preset.empty() == o.config_path.empty())
        throw Error("exactly one of --preset or --config is required");

    if (!o.probs.empty()) {
        const auto ps = split_numbers(o.probs, '/');
        if (ps.size() != 2) throw Error("--probs expects p1/p2");
        b.p1 = ps[0];
        b.p2 = ps[1];
    }
    if (!o.split.empty()) {
        const auto ts = split_numbers(o.split, '/');
        if (ts.size() != 2) throw Error("--split expects t1/t2 (seconds)");
        b.t1 = ts[0];
        b.t2 = ts[1];
    }
    if (o.interarrival > 0.0 && o.rate > 0.0)
        throw Error("--interarrival and --rate are mutually exclusive");
    if (o.interarrival > 0.0) b.lambda = 1.0 / o.interarrival;
    if (o.rate > 0.0) b.lambda = o.rate;

    if (!o.preset.empty()) {
        b.origin = "preset:" + o.preset;
        if (o.preset == "cims") {
            b.spec = preset_cims(1.0);
        } else if (o.preset == "cims-dedicated") {
            b.scenario = Scenario::dedicated;
        } else if (o.preset == "cims-shared-fcfs") {
            b.scenario = Scenario::shared_fcfs;
        } else if (o.preset == "cims-shared-ps") {
            b.scenario = Scenario::shared_ps;
        } else {
            throw Error("unknown preset '" + o.preset +
                        "' (expected cims, cims-dedicated, cims-shared-fcfs, "
                        "cims-shared-ps)");
        }
        if (b.scenario != Scenario::none)
            b.spec = materialize_scenario(b, b.p1, b.p2, b.t1, b.t2);
    } else {
        if (!o.probs.empty() || !o.split.empty())
            throw Error("--probs/--split apply only to scenario presets");
        std::ifstream in(o.config_path, std::ios::binary);
        if (!in) throw ConfigError(o.config_path + ": cannot open file");
        std::ostringstream buf;
        buf << in.rdbuf();
        b.config_text = buf.str();
        b.origin = o.config_path;
        b.spec = parse_network_json(b.config_text, b.origin);
    }

    apply_common(b.spec, o);
    check_spec(b);
    return b;
}

// ---------------------------------------------------------------------------
// Bulk-mode analytics: with batch arrivals only the entry node stays inside
// an exact single-node model; downstream nodes keep exact utilizations but
// no closed-form time metrics.
// ---------------------------------------------------------------------------

struct BulkView {
    TrafficSolution traffic;
    std::size_t entry_index = 0;
    double mean_waiting = 0.0;  // entry node, seconds
    double mean_queue = 0.0;
    double mean_response = 0.0;
    bool entry_stable = false;
};

BulkView bulk_view(const NetworkSpec& spec) {
    int entry = -1;
    for (std::size_t i = 0; i < spec.node_count(); ++i)
        if (spec.routing.entry[i] > 0.0) {
            if (entry >= 0) throw Error("bulk analytics require a single entry node");
            entry = static_cast<int>(i);
        }
    const NodeSpec& nd = spec.nodes[static_cast<std::size_t>(entry)];
    if (nd.servers != 1 || nd.discipline != Discipline::fcfs)
        throw Error("bulk analytics require a single-instance FCFS entry node");

    BulkView v;
    v.traffic = solve_traffic(spec);
    v.entry_index = static_cast<std::size_t>(entry);
    const double mu = nd.effective_rate();
    v.entry_stable = v.traffic.nodes[v.entry_index].stable;
    if (v.entry_stable) {
        v.mean_waiting = bulk_waiting(spec.arrival_rate, mu, *spec.bulk);
        v.mean_queue = v.traffic.nodes[v.entry_index].arrival_rate * v.mean_waiting;
        v.mean_response = v.mean_waiting + 1.0 / mu;
    } else {
        v.mean_waiting = v.mean_queue = v.mean_response =
            std::numeric_limits<double>::infinity();
    }
    return v;
}

int stability_exit_code(const TrafficSolution& ts) { return ts.all_stable ? 0 : 2; }

void warn_unstable(const TrafficSolution& ts) {
    for (const auto& nf : ts.nodes)
        if (!nf.stable)
            std::fprintf(stderr, "warning: node '%s' is unstable (rho=%s)\n",
                         nf.id.c_str(), num(nf.utilization).c_str());
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

struct AnalyzeRow {
    std::string node, cls, disc;
    int servers = 0;
    double capacity = 1.0;
    double rho = 0.0, eq = 0.0, ew = 0.0, et = 0.0;
    bool has_times = true;
};

std::vector<AnalyzeRow> analyze_rows(const NetworkSpec& spec, const ChainMetrics& cm) {
    std::vector<AnalyzeRow> rows;
    for (std::size_t i = 0; i < cm.per_node.size(); ++i) {
        const NodeMetrics& nm = cm.per_node[i];
        const NodeSpec& nd = spec.nodes[i];
        rows.push_back({nm.id, "", to_string(nd.discipline), nd.servers,
                        nd.capacity_factor, nm.utilization, nm.mean_queue,
                        nm.mean_waiting, nm.mean_response, true});
        for (const auto& c : nm.per_class)
            rows.push_back({nm.id, c.class_id, to_string(nd.discipline), nd.servers,
                            nd.capacity_factor, c.utilization, c.mean_queue,
                            c.mean_waiting, c.mean_response, true});
    }
    return rows;
}

int cmd_analyze(const CommonOpts& o) {
    const Built b = build_spec(o);
    const Units u = make_units(o.units);
    Out out;
    out.path = o.output;

    std::vector<AnalyzeRow> rows;
    double chain_et = 0.0, bound = 0.0;
    std::vector<std::pair<std::string, double>> chain_per_class;
    bool have_chain = true;
    int code = 0;

    if (b.spec.bulk) {
        const BulkView v = bulk_view(b.spec);
        for (std::size_t i = 0; i < b.spec.node_count(); ++i) {
            const NodeFlow& nf = v.traffic.nodes[i];
            const NodeSpec& nd = b.spec.nodes[i];
            AnalyzeRow r{nf.id,           "",   to_string(nd.discipline),
                         nd.servers,      nd.capacity_factor,
                         nf.utilization,  0.0,  0.0,
                         0.0,             false};
            if (i == v.entry_index) {
                r.has_times = true;
                r.eq = v.mean_queue;
                r.ew = v.mean_waiting;
                r.et = v.mean_response;
            }
            rows.push_back(r);
        }
        have_chain = false;
        code = stability_exit_code(v.traffic);
        warn_unstable(v.traffic);
    } else {
        const TrafficSolution ts = solve_traffic(b.spec);
        const ChainMetrics cm = chain_metrics(b.spec);
        rows = analyze_rows(b.spec, cm);
        chain_et = cm.chain_response;
        bound = cm.response_lower_bound;
        if (b.spec.class_count() > 1)
            for (const auto& c : cm.per_class)
                chain_per_class.emplace_back(c.class_id, c.chain_response);
        code = stability_exit_code(ts);
        warn_unstable(ts);
    }

    auto t = [&](double v) { return v * u.scale; };

    if (o.format == "table") {
        char line[256];
        std::snprintf(line, sizeof line, "%-12s %-9s %-5s %3s %8s %12s %12s %14s %14s",
                      "node", "class", "disc", "m", "c", "rho", "E[Q]",
                      ("E[W] " + u.name).c_str(), ("E[T] " + u.name).c_str());
        out.line(line);
        for (const auto& r : rows) {
            if (r.has_times)
                std::snprintf(line, sizeof line,
                              "%-12s %-9s %-5s %3d %8s %12s %12s %14s %14s",
                              r.node.c_str(), r.cls.empty() ? "-" : r.cls.c_str(),
                              r.disc.c_str(), r.servers, num(r.capacity).c_str(),
                              numf(r.rho).c_str(), num(r.eq).c_str(),
                              numf(t(r.ew)).c_str(), numf(t(r.et)).c_str());
            else
                std::snprintf(line, sizeof line,
                              "%-12s %-9s %-5s %3d %8s %12s %12s %14s %14s",
                              r.node.c_str(), "-", r.disc.c_str(), r.servers,
                              num(r.capacity).c_str(), numf(r.rho).c_str(), "-", "-",
                              "-");
            out.line(line);
        }
        if (have_chain) {
            out.line("");
            out.line("chain E[T] " + u.name + ": " + numf(t(chain_et)));
            for (const auto& [cls, et] : chain_per_class)
                out.line("chain E[T] " + u.name + " (" + cls + "): " + numf(t(et)));
            out.line("bound " + u.name + ":      " + numf(t(bound)));
        } else {
            out.line("");
            out.line("bulk arrivals: exact time metrics shown for the entry node "
                     "only; downstream times fall outside the closed-form model");
            out.line("bulk E[b]: " + num(b.spec.bulk->mean()) +
                     "  E[b^2]/E[b]: " + num(b.spec.bulk->second_moment() /
                                             b.spec.bulk->mean()));
        }
    } else if (o.format == "csv") {
        out.line("node,class,discipline,servers,capacity,rho,EQ,EW_" + u.name + ",ET_" +
                 u.name);
        for (const auto& r : rows) {
            std::string l = r.node + "," + r.cls + "," + r.disc + "," +
                            std::to_string(r.servers) + "," + num(r.capacity) + "," +
                            num(r.rho) + ",";
            if (r.has_times)
                l += num(r.eq) + "," + num(t(r.ew)) + "," + num(t(r.et));
            else
                l += ",,";
            out.line(l);
        }
        if (have_chain) {
            out.line("chain,,,,,,,," + num(t(chain_et)));
            for (const auto& [cls, et] : chain_per_class)
                out.line("chain," + cls + ",,,,,,," + num(t(et)));
            out.line("bound,,,,,,,," + num(t(bound)));
        }
    } else if (o.format == "json") {
        json j;
        j["command"] = "analyze";
        j["units"] = u.name;
        j["nodes"] = json::array();
        for (const auto& r : rows) {
            json n{{"node", r.node},         {"discipline", r.disc},
                   {"servers", r.servers},   {"capacity", r.capacity},
                   {"rho", json_num(r.rho)}};
            if (!r.cls.empty()) n["class"] = r.cls;
            if (r.has_times) {
                n["EQ"] = json_num(r.eq);
                n["EW"] = json_num(t(r.ew));
                n["ET"] = json_num(t(r.et));
            }
            j["nodes"].push_back(n);
        }
        if (have_chain) {
            j["chain_ET"] = json_num(t(chain_et));
            j["bound"] = json_num(t(bound));
            for (const auto& [cls, et] : chain_per_class)
                j["chain_ET_per_class"][cls] = json_num(t(et));
        } else {
            j["bulk"] = {{"mean", b.spec.bulk->mean()},
                         {"moment_ratio",
                          b.spec.bulk->second_moment() / b.spec.bulk->mean()}};
        }
        out.line(j.dump(2));
    } else {
        throw Error("unknown format '" + o.format + "'");
    }

    out.flush();
    return code;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepOpts {
    std::string param;
    std::string values;
    std::string metrics = "EQ,EW,ET,rho,bound";
};

std::vector<double> expand_scalar_values(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const auto dots = tok.find("..");
        if (dots == std::string::npos) {
            out.push_back(std::stod(tok));
            continue;
        }
        const double lo = std::stod(tok.substr(0, dots));
        std::string rest = tok.substr(dots + 2);
        double step = 1.0;
        const auto colon = rest.find(':');
        if (colon != std::string::npos) {
            step = std::stod(rest.substr(colon + 1));
            rest = rest.substr(0, colon);
        }
        const double hi = std::stod(rest);
        if (step <= 0.0 || hi < lo) throw Error("bad range '" + tok + "'");
        for (double v = lo; v <= hi + 1e-12 * step; v += step) out.push_back(v);
    }
    if (out.empty()) throw Error("--values produced an empty list");
    return out;
}

void require_monotone(const std::vector<double>& v) {
    if (v.size() < 2) return;
    bool inc = true, dec = true;
    for (std::size_t i = 1; i < v.size(); ++i) {
        inc = inc && v[i] >= v[i - 1];
        dec = dec && v[i] <= v[i - 1];
    }
    if (!inc && !dec) throw Error("scalar sweep values must be monotone");
}

struct SweepPoint {
    std::string label;
    NetworkSpec spec;
};

std::vector<SweepPoint> expand_sweep(const Built& b, const SweepOpts& so) {
    std::vector<SweepPoint> pts;
    if (so.param == "interarrival_time" || so.param == "arrival_rate") {
        const auto vals = expand_scalar_values(so.values);
        require_monotone(vals);
        for (double v : vals) {
            if (v <= 0.0) throw Error("sweep values must be positive");
            NetworkSpec s = b.spec;
            s.arrival_rate = so.param == "arrival_rate" ? v : 1.0 / v;
            pts.push_back({num(v), std::move(s)});
        }
    } else if (so.param == "capacity_vector") {
        std::stringstream ss(so.values);
        std::string tok;
        while (std::getline(ss, tok, ';')) {
            std::replace(tok.begin(), tok.end(), '/', ',');
            const auto cs = split_numbers(tok, ',');
            if (cs.size() != b.spec.node_count())
                throw Error("capacity vector needs " +
                            std::to_string(b.spec.node_count()) + " components");
            NetworkSpec s = b.spec;
            std::string label;
            for (std::size_t i = 0; i < cs.size(); ++i) {
                s.nodes[i].capacity_factor = cs[i];
                label += (i ? "/" : "") + num(cs[i]);
            }
            pts.push_back({label, std::move(s)});
        }
    } else if (so.param == "class_probabilities" || so.param == "service_split") {
        if (b.scenario == Scenario::none)
            throw Error("--param " + so.param +
                        " requires a scenario preset (cims-dedicated, "
                        "cims-shared-fcfs, cims-shared-ps)");
        if (so.param == "service_split" && b.scenario != Scenario::shared_ps)
            throw Error("--param service_split requires --preset cims-shared-ps");
        std::stringstream ss(so.values);
        std::string tok;
        while (std::getline(ss, tok, ';')) {
            const auto xs = split_numbers(tok, '/');
            if (xs.size() != 2) throw Error("pair values must look like a/b");
            NetworkSpec s =
                so.param == "class_probabilities"
                    ? materialize_scenario(b, xs[0], xs[1], b.t1, b.t2)
                    : materialize_scenario(b, b.p1, b.p2, xs[0], xs[1]);
            apply_common(s, b.opts);
            pts.push_back({num(xs[0]) + "/" + num(xs[1]), std::move(s)});
        }
    } else {
        throw Error("unknown sweep parameter '" + so.param +
                    "' (expected interarrival_time, arrival_rate, capacity_vector, "
                    "class_probabilities, service_split)");
    }
    if (pts.empty()) throw Error("--values produced an empty list");
    return pts;
}

int cmd_sweep(const CommonOpts& o, const SweepOpts& so) {
    const Built b = build_spec(o);
    const Units u = make_units(o.units);
    Out out;
    out.path = o.output;

    std::vector<std::string> metrics;
    {
        std::stringstream ss(so.metrics);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok != "EQ" && tok != "EW" && tok != "ET" && tok != "rho" &&
                tok != "bound")
                throw Error("unknown metric '" + tok +
                            "' (expected EQ, EW, ET, rho, bound)");
            metrics.push_back(tok);
        }
        if (metrics.empty()) throw Error("--metrics is empty");
    }

    const auto pts = expand_sweep(b, so);
    int code = 0;

    std::string header = "parameter,value,series,class";
    for (const auto& m : metrics) {
        header += ",";
        header += (m == "EW" || m == "ET" || m == "bound") ? m + "_" + u.name : m;
    }
    out.line(header);

    constexpr double NA = std::numeric_limits<double>::quiet_NaN();

    for (const auto& pt : pts) {
        // NaN marks a cell with no defined value; +inf marks an unstable
        // metric and is printed as "inf".
        auto emit = [&](const std::string& series, const std::string& cls, double rho,
                        double eq, double ew, double et, double bound) {
            std::string l = so.param + "," + pt.label + "," + series + "," + cls;
            for (const auto& m : metrics) {
                const double v = m == "rho"  ? rho
                                 : m == "EQ" ? eq
                                 : m == "EW" ? ew * u.scale
                                 : m == "ET" ? et * u.scale
                                             : bound * u.scale;
                l += ",";
                if (!std::isnan(v)) l += num(v);
            }
            out.line(l);
        };

        if (pt.spec.bulk) {
            const BulkView v = bulk_view(pt.spec);
            for (std::size_t i = 0; i < pt.spec.node_count(); ++i) {
                const NodeFlow& nf = v.traffic.nodes[i];
                if (i == v.entry_index)
                    emit(nf.id, "", nf.utilization, v.mean_queue, v.mean_waiting,
                         v.mean_response, NA);
                else
                    emit(nf.id, "", nf.utilization, NA, NA, NA, NA);
            }
            if (!v.traffic.all_stable) code = 2;
        } else {
            const TrafficSolution ts = solve_traffic(pt.spec);
            const ChainMetrics cm = chain_metrics(pt.spec);
            for (const auto& nm : cm.per_node) {
                emit(nm.id, "", nm.utilization, nm.mean_queue, nm.mean_waiting,
                     nm.mean_response, NA);
                for (const auto& c : nm.per_class)
                    emit(nm.id, c.class_id, c.utilization, c.mean_queue, c.mean_waiting,
                         c.mean_response, NA);
            }
            emit("chain", "", NA, NA, NA, cm.chain_response, cm.response_lower_bound);
            if (pt.spec.class_count() > 1)
                for (const auto& c : cm.per_class)
                    emit("chain", c.class_id, NA, NA, NA, c.chain_response, NA);
            if (!ts.all_stable) code = 2;
        }
    }

    out.flush();
    return code;
}

// ---------------------------------------------------------------------------
// optimize
// ---------------------------------------------------------------------------

int cmd_optimize(const CommonOpts& o, double budget, bool no_verify,
                 std::size_t verify_samples) {
    const Built b = build_spec(o);
    const Units u = make_units(o.units);
    Out out;
    out.path = o.output;

    const TrafficSolution ts = solve_traffic(b.spec);
    AllocationProblem prob;
    for (const auto& nf : ts.nodes) prob.arrival_rates.push_back(nf.arrival_rate);
    for (const auto& nd : b.spec.nodes) prob.capacity_factors.push_back(nd.capacity_factor);
    prob.budget = budget;

    const AllocationSolution sol = solve_allocation(prob);

    std::vector<double> base_rates;
    for (const auto& nd : b.spec.nodes) base_rates.push_back(nd.service_rate);
    const InstancePlan plan =
        allocation_to_instances(sol, prob.capacity_factors, base_rates);

    double weighted_et = 0.0, spent = 0.0;
    for (std::size_t i = 0; i < ts.nodes.size(); ++i) {
        weighted_et += ts.nodes[i].visit_ratio /
                       (prob.capacity_factors[i] * sol.service_rates[i] -
                        prob.arrival_rates[i]);
        spent += prob.capacity_factors[i] * sol.service_rates[i];
    }

    std::optional<VerificationReport> ver;
    if (!no_verify) ver = verify_allocation(prob, sol, 1e-6, verify_samples);

    if (o.format == "table") {
        char line[256];
        std::snprintf(line, sizeof line, "%-12s %12s %8s %14s %10s %14s %12s", "node",
                      "lambda", "c", "mu_opt", "instances", "base_mu", "slack");
        out.line(line);
        for (std::size_t i = 0; i < ts.nodes.size(); ++i) {
            std::snprintf(line, sizeof line, "%-12s %12s %8s %14s %10d %14s %12s",
                          ts.nodes[i].id.c_str(), num(prob.arrival_rates[i]).c_str(),
                          num(prob.capacity_factors[i]).c_str(),
                          numf(sol.service_rates[i]).c_str(), plan.counts[i],
                          num(base_rates[i]).c_str(), numf(plan.slack[i]).c_str());
            out.line(line);
        }
        out.line("");
        out.line("budget: " + num(budget) + "  allocated: " + num(spent) +
                 "  surplus/node: " + num(sol.surplus_per_node));
        out.line("objective (unweighted response sum) " + u.name + ": " +
                 numf(sol.objective * u.scale));
        out.line("chain E[T] (visit-weighted) " + u.name + ": " +
                 numf(weighted_et * u.scale));
        if (ver)
            out.line("verification: " + std::string(ver->ok ? "ok" : "FAILED") +
                     " (samples=" + std::to_string(ver->samples) +
                     ", min_gap=" + num(ver->min_gap) +
                     ", seed=" + std::to_string(ver->seed) + ")");
    } else if (o.format == "csv") {
        out.line("node,lambda,c,mu_opt,instances,base_mu,slack");
        for (std::size_t i = 0; i < ts.nodes.size(); ++i)
            out.line(ts.nodes[i].id + "," + num(prob.arrival_rates[i]) + "," +
                     num(prob.capacity_factors[i]) + "," + num(sol.service_rates[i]) +
                     "," + std::to_string(plan.counts[i]) + "," + num(base_rates[i]) +
                     "," + num(plan.slack[i]));
        out.line("objective_" + u.name + "," + num(sol.objective * u.scale) + ",,,,,");
        out.line("chain_ET_" + u.name + "," + num(weighted_et * u.scale) + ",,,,,");
    } else if (o.format == "json") {
        json j;
        j["command"] = "optimize";
        j["budget"] = budget;
        j["units"] = u.name;
        j["nodes"] = json::array();
        for (std::size_t i = 0; i < ts.nodes.size(); ++i)
            j["nodes"].push_back({{"node", ts.nodes[i].id},
                                  {"lambda", prob.arrival_rates[i]},
                                  {"capacity", prob.capacity_factors[i]},
                                  {"mu_opt", sol.service_rates[i]},
                                  {"instances", plan.counts[i]},
                                  {"base_mu", base_rates[i]},
                                  {"slack", plan.slack[i]}});
        j["objective"] = json_num(sol.objective * u.scale);
        j["chain_ET"] = json_num(weighted_et * u.scale);
        if (ver)
            j["verification"] = {{"ok", ver->ok},
                                 {"samples", ver->samples},
                                 {"min_gap", ver->min_gap},
                                 {"seed", ver->seed}};
        out.line(j.dump(2));
    } else {
        throw Error("unknown format '" + o.format + "'");
    }

    out.flush();
    return 0;
}

// ---------------------------------------------------------------------------
// simulate / compare
// ---------------------------------------------------------------------------

struct SimOpts {
    double time_horizon = 0.0;
    double jobs = 0.0;
    int reps = 10;
    double warmup = 0.2;
    std::uint64_t seed = 12345;
    bool seed_given = false;
    std::string trace;
    int threads = 1;
};

SimConfig make_sim_config(const Built& b, const SimOpts& s) {
    SimConfig cfg;
    cfg.spec = b.spec;
    cfg.time_horizon = s.time_horizon;
    if (s.jobs > 0.0) cfg.job_horizon = static_cast<long long>(std::llround(s.jobs));
    if (cfg.time_horizon > 0.0 && cfg.job_horizon > 0)
        throw Error("--time and --jobs are mutually exclusive");
    if (cfg.time_horizon <= 0.0 && cfg.job_horizon <= 0)
        throw Error("one of --time or --jobs is required");
    cfg.warmup_fraction = s.warmup;
    cfg.replications = s.reps;
    cfg.seed = s.seed;
    if (!s.seed_given)
        if (const char* env = std::getenv("QNET_SEED"))
            cfg.seed = static_cast<std::uint64_t>(std::strtoull(env, nullptr, 10));
    cfg.trace_path = s.trace;
    cfg.threads = s.threads;
    return cfg;
}

std::string pm(const Estimate& e, double scale) {
    return num(e.mean * scale) + " +-" + num(e.half_width * scale);
}

int cmd_simulate(const CommonOpts& o, const SimOpts& so) {
    const Built b = build_spec(o);
    const Units u = make_units(o.units);
    const SimConfig cfg = make_sim_config(b, so);
    const TrafficSolution ts = solve_traffic(b.spec);
    warn_unstable(ts);
    const SimResult res = simulate(cfg);
    Out out;
    out.path = o.output;

    if (o.format == "table") {
        char line[320];
        std::snprintf(line, sizeof line, "%-12s %-9s %14s %24s %24s %26s %26s", "node",
                      "class", "lambda_hat", "rho +-hw", "E[Q] +-hw",
                      ("E[W] " + u.name + " +-hw").c_str(),
                      ("E[T] " + u.name + " +-hw").c_str());
        out.line(line);
        for (const auto& ns : res.nodes) {
            std::snprintf(line, sizeof line, "%-12s %-9s %14s %24s %24s %26s %26s",
                          ns.id.c_str(), "-", num(ns.arrival_rate.mean).c_str(),
                          pm(ns.utilization, 1).c_str(), pm(ns.queue_length, 1).c_str(),
                          pm(ns.waiting, u.scale).c_str(),
                          pm(ns.response, u.scale).c_str());
            out.line(line);
            for (const auto& cs : ns.per_class) {
                std::snprintf(line, sizeof line, "%-12s %-9s %14s %24s %24s %26s %26s",
                              ns.id.c_str(), cs.class_id.c_str(), "-", "-", "-",
                              pm(cs.waiting, u.scale).c_str(),
                              pm(cs.response, u.scale).c_str());
                out.line(line);
            }
        }
        out.line("");
        out.line("chain E[T] " + u.name + ": " + pm(res.chain_response, u.scale));
        out.line("seed: " + std::to_string(res.seed) +
                 "  replications: " + std::to_string(res.replications) +
                 "  warmup: " + num(res.warmup_fraction) +
                 "  sim_time: " + num(res.mean_sim_time) + " s");
        out.line("arrivals: " + std::to_string(res.total_arrivals) +
                 "  departures: " + std::to_string(res.total_departures));
    } else if (o.format == "csv") {
        out.line("node,class,lambda_hat,rho,rho_hw,EQ,EQ_hw,EW_" + u.name + ",EW_hw,ET_" +
                 u.name + ",ET_hw");
        for (const auto& ns : res.nodes) {
            out.line(ns.id + ",," + num(ns.arrival_rate.mean) + "," +
                     num(ns.utilization.mean) + "," + num(ns.utilization.half_width) +
                     "," + num(ns.queue_length.mean) + "," +
                     num(ns.queue_length.half_width) + "," +
                     num(ns.waiting.mean * u.scale) + "," +
                     num(ns.waiting.half_width * u.scale) + "," +
                     num(ns.response.mean * u.scale) + "," +
                     num(ns.response.half_width * u.scale));
            for (const auto& cs : ns.per_class)
                out.line(ns.id + "," + cs.class_id + ",,,,,," +
                         num(cs.waiting.mean * u.scale) + "," +
                         num(cs.waiting.half_width * u.scale) + "," +
                         num(cs.response.mean * u.scale) + "," +
                         num(cs.response.half_width * u.scale));
        }
        out.line("chain,,,,,,," + std::string() + "," + std::string() + "," +
                 num(res.chain_response.mean * u.scale) + "," +
                 num(res.chain_response.half_width * u.scale));
    } else if (o.format == "json") {
        json j;
        j["command"] = "simulate";
        j["seed"] = res.seed;
        j["replications"] = res.replications;
        j["warmup_fraction"] = res.warmup_fraction;
        j["sim_time_s"] = res.mean_sim_time;
        j["units"] = u.name;
        j["total_arrivals"] = res.total_arrivals;
        j["total_departures"] = res.total_departures;
        auto est = [&](const Estimate& e, double sc) {
            return json{{"mean", json_num(e.mean * sc)},
                        {"half_width", json_num(e.half_width * sc)}};
        };
        j["nodes"] = json::array();
        for (const auto& ns : res.nodes) {
            json n{{"node", ns.id},
                   {"lambda_hat", est(ns.arrival_rate, 1)},
                   {"rho", est(ns.utilization, 1)},
                   {"EQ", est(ns.queue_length, 1)},
                   {"EW", est(ns.waiting, u.scale)},
                   {"ET", est(ns.response, u.scale)},
                   {"arrivals", ns.arrivals},
                   {"departures", ns.departures}};
            for (const auto& cs : ns.per_class)
                n["per_class"][cs.class_id] = {{"EW", est(cs.waiting, u.scale)},
                                               {"ET", est(cs.response, u.scale)},
                                               {"departures", cs.departures}};
            j["nodes"].push_back(n);
        }
        j["chain_ET"] = est(res.chain_response, u.scale);
        out.line(j.dump(2));
    } else {
        throw Error("unknown format '" + o.format + "'");
    }

    out.flush();
    return stability_exit_code(ts);
}

// Assembles comparison rows when bulk arrivals restrict the exact analytics
// to the entry node's times plus every node's utilization.
ComparisonReport compare_bulk(const SimConfig& cfg) {
    const BulkView v = bulk_view(cfg.spec);
    const SimResult sim = simulate(cfg);
    ComparisonReport rep;
    rep.all_pass = true;
    auto add = [&](const std::string& node, const char* metric, double a,
                   const Estimate& e) {
        MetricComparison mc;
        mc.node = node;
        mc.metric = metric;
        mc.analytic = a;
        mc.simulated = e.mean;
        mc.half_width = e.half_width;
        mc.rel_error = std::abs(a - e.mean) / std::max(std::abs(a), 1e-300);
        mc.pass = std::isfinite(a) && e.covers(a, 0.01 * std::abs(a));
        rep.all_pass = rep.all_pass && mc.pass;
        rep.rows.push_back(std::move(mc));
    };
    for (std::size_t i = 0; i < cfg.spec.node_count(); ++i) {
        const NodeStats& ns = sim.nodes[i];
        if (i == v.entry_index) {
            add(ns.id, "EW", v.mean_waiting, ns.waiting);
            add(ns.id, "EQ", v.mean_queue, ns.queue_length);
            add(ns.id, "ET", v.mean_response, ns.response);
        }
        add(ns.id, "rho", v.traffic.nodes[i].utilization, ns.utilization);
    }
    return rep;
}

int cmd_compare(const CommonOpts& o, const SimOpts& so) {
    const Built b = build_spec(o);
    const Units u = make_units(o.units);
    const SimConfig cfg = make_sim_config(b, so);

    const TrafficSolution ts = solve_traffic(b.spec);
    if (!ts.all_stable) {
        warn_unstable(ts);
        std::fprintf(stderr,
                     "error: network is unstable; no finite analytic metrics to "
                     "compare against\n");
        return 2;
    }

    ComparisonReport rep;
    if (b.spec.bulk) {
        rep = compare_bulk(cfg);
    } else {
        rep = compare(cfg, chain_metrics(b.spec));
    }

    Out out;
    out.path = o.output;
    auto scale_of = [&](const std::string& metric) {
        return metric == "EW" || metric == "ET" ? u.scale : 1.0;
    };

    int passed = 0;
    for (const auto& r : rep.rows) passed += r.pass ? 1 : 0;

    if (o.format == "table") {
        char line[256];
        std::snprintf(line, sizeof line, "%-12s %-6s %16s %16s %14s %12s %8s", "node",
                      "metric", "analytic", "simulated", "half_width", "rel_error",
                      "result");
        out.line(line);
        for (const auto& r : rep.rows) {
            const double sc = scale_of(r.metric);
            std::snprintf(line, sizeof line, "%-12s %-6s %16s %16s %14s %12s %8s",
                          r.node.c_str(), r.metric.c_str(), num(r.analytic * sc).c_str(),
                          num(r.simulated * sc).c_str(), num(r.half_width * sc).c_str(),
                          num(r.rel_error).c_str(), r.pass ? "pass" : "FAIL");
            out.line(line);
        }
        out.line("");
        out.line("summary: " + std::to_string(passed) + "/" +
                 std::to_string(rep.rows.size()) +
                 " within 95% CI + 1% allowance (times in " + u.name + ")");
        out.line("seed: " + std::to_string(cfg.seed) +
                 "  replications: " + std::to_string(cfg.replications));
    } else if (o.format == "csv") {
        out.line("node,metric,analytic,simulated,half_width,rel_error,pass");
        for (const auto& r : rep.rows) {
            const double sc = scale_of(r.metric);
            out.line(r.node + "," + r.metric + "," + num(r.analytic * sc) + "," +
                     num(r.simulated * sc) + "," + num(r.half_width * sc) + "," +
                     num(r.rel_error) + "," + (r.pass ? "1" : "0"));
        }
    } else if (o.format == "json") {
        json j;
        j["command"] = "compare";
        j["units"] = u.name;
        j["seed"] = cfg.seed;
        j["all_pass"] = rep.all_pass;
        j["rows"] = json::array();
        for (const auto& r : rep.rows) {
            const double sc = scale_of(r.metric);
            j["rows"].push_back({{"node", r.node},
                                 {"metric", r.metric},
                                 {"analytic", json_num(r.analytic * sc)},
                                 {"simulated", json_num(r.simulated * sc)},
                                 {"half_width", json_num(r.half_width * sc)},
                                 {"rel_error", json_num(r.rel_error)},
                                 {"pass", r.pass}});
        }
        out.line(j.dump(2));
    } else {
        throw Error("unknown format '" + o.format + "'");
    }

    out.flush();
    return rep.all_pass ? 0 : 3;
}

void add_common_flags(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--preset", o.preset,
                    "Built-in network: cims, cims-dedicated, cims-shared-fcfs, "
                    "cims-shared-ps");
    cmd->add_option("--config", o.config_path, "Network description file (JSON)");
    cmd->add_option("--set", o.sets,
                    "Override a field, e.g. --set nodes.HSS1.servers=3 (repeatable)");
    cmd->add_option("--interarrival", o.interarrival,
                    "Mean external interarrival time, seconds");
    cmd->add_option("--rate", o.rate, "External arrival rate, events/second");
    cmd->add_option("--capacity", o.capacity,
                    "Capacity factors: one value for all nodes or a full "
                    "comma-separated vector");
    cmd->add_option("--bulk", o.bulk,
                    "Batch-size distribution: deterministic:N, uniform:MAX, "
                    "geometric:P, empirical:k=p[,k=p...], or none");
    cmd->add_option("--probs", o.probs,
                    "Scenario switching probabilities p1/p2 (presets only, "
                    "default 0.3/0.6)");
    cmd->add_option("--split", o.split,
                    "Shared-PS per-class service times t1/t2 in seconds "
                    "(default 0.0045/0.0045)");
    cmd->add_option("--units", o.units, "Time units on output: ms (default) or s");
    cmd->add_option("--format", o.format, "Output format: table (default), csv, json");
    cmd->add_option("--output", o.output, "Also write the report to this file");
}

void add_sim_flags(CLI::App* cmd, SimOpts& s) {
    cmd->add_option("--time", s.time_horizon, "Simulated horizon per replication, seconds");
    cmd->add_option("--jobs", s.jobs,
                    "Completed-requests horizon per replication (accepts 1e6)");
    cmd->add_option("--reps", s.reps, "Replications (default 10)");
    cmd->add_option("--warmup", s.warmup,
                    "Warmup fraction of the horizon discarded (default 0.2)");
    cmd->add_option("--seed", s.seed,
                    "Master seed (default 12345; env QNET_SEED overrides the "
                    "default when the flag is absent)")
        ->each([&s](const std::string&) { s.seed_given = true; });
    cmd->add_option("--trace", s.trace,
                    "Write replication 0's event trace (CSV) to this file");
    cmd->add_option("--threads", s.threads, "Worker threads for replications (default 1)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "qnet: analytic and simulation toolkit for open queueing networks "
        "modeling softwarized service chains"};
    app.require_subcommand(1);

    CommonOpts ao, so_, oo, io, co;
    SweepOpts sweep_opts;
    SimOpts sim_opts, cmp_opts;
    double budget = 0.0;
    bool no_verify = false;
    std::size_t verify_samples = 10000;

    CLI::App* analyze = app.add_subcommand("analyze", "Closed-form per-node and chain metrics");
    add_common_flags(analyze, ao);

    CLI::App* sweep = app.add_subcommand("sweep", "Metrics across a parameter range (CSV)");
    add_common_flags(sweep, so_);
    sweep->add_option("--param", sweep_opts.param,
                      "interarrival_time | arrival_rate | capacity_vector | "
                      "class_probabilities | service_split")
        ->required();
    sweep->add_option("--values", sweep_opts.values,
                      "Scalar list/range (1,2,5 or 1..50[:step]) or ;-separated "
                      "vectors/pairs")
        ->required();
    sweep->add_option("--metrics", sweep_opts.metrics,
                      "Comma-separated subset of EQ,EW,ET,rho,bound (default all)");

    CLI::App* optimize = app.add_subcommand("optimize", "Capacity allocation under a budget");
    add_common_flags(optimize, oo);
    optimize->add_option("--budget", budget, "Total weighted capacity budget")->required();
    optimize->add_flag("--no-verify", no_verify, "Skip the numerical optimality check");
    optimize->add_option("--verify-samples", verify_samples,
                         "Random perturbations in the optimality check (default 10000)");

    CLI::App* simulate_cmd = app.add_subcommand("simulate", "Discrete-event simulation with CIs");
    add_common_flags(simulate_cmd, io);
    add_sim_flags(simulate_cmd, sim_opts);

    CLI::App* compare_cmd =
        app.add_subcommand("compare", "Analytic vs simulated metrics; exit 3 on mismatch");
    add_common_flags(compare_cmd, co);
    add_sim_flags(compare_cmd, cmp_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (analyze->parsed()) return cmd_analyze(ao);
        if (sweep->parsed()) return cmd_sweep(so_, sweep_opts);
        if (optimize->parsed()) return cmd_optimize(oo, budget, no_verify, verify_samples);
        if (simulate_cmd->parsed()) return cmd_simulate(io, sim_opts);
        if (compare_cmd->parsed()) return cmd_compare(co, cmp_opts);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
