#include "qnet/config_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "qnet/errors.hpp"

namespace qnet {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Line anchoring.
//
// nlohmann reports byte offsets only for syntax errors; for semantic errors
// ("this key holds the wrong type") we locate the element ourselves with a
// tiny tokenizer that walks the raw text tracking the current path. It is
// not a JSON validator — by the time it runs, the text is known well-formed.
// ---------------------------------------------------------------------------

struct PathStep {
    std::string key;       // object key, or
    std::size_t index = 0; // array index
    bool is_index = false;
};

class LineLocator {
public:
    LineLocator(const std::string& text, const std::vector<PathStep>& target)
        : text_(text), target_(target) {}

    // 1-based line of the value at the target path; falls back to the line
    // of the deepest matched prefix; 0 when the document is empty.
    int locate() {
        pos_ = 0;
        line_ = 1;
        best_ = 0;
        skip_ws();
        value(0, true);
        return best_;
    }

private:
    void record(std::size_t depth, bool live) {
        if (live && depth <= target_.size() && line_ > 0) best_ = line_;
    }

    void value(std::size_t depth, bool live) {
        if (live && depth == target_.size()) record(depth, live);
        if (pos_ >= text_.size()) return;
        switch (text_[pos_]) {
            case '{': object(depth, live); break;
            case '[': array(depth, live); break;
            case '"': string(); break;
            default: primitive(); break;
        }
    }

    void object(std::size_t depth, bool live) {
        ++pos_; // '{'
        skip_ws();
        while (pos_ < text_.size() && text_[pos_] != '}') {
            const std::string key = string();
            skip_ws();
            if (pos_ < text_.size() && text_[pos_] == ':') ++pos_;
            skip_ws();
            const bool child_live = live && depth < target_.size() &&
                                    !target_[depth].is_index && target_[depth].key == key;
            if (child_live) record(depth + 1, true);
            value(depth + 1, child_live);
            skip_ws();
            if (pos_ < text_.size() && text_[pos_] == ',') {
                ++pos_;
                skip_ws();
            }
        }
        if (pos_ < text_.size()) ++pos_; // '}'
    }

    void array(std::size_t depth, bool live) {
        ++pos_; // '['
        skip_ws();
        std::size_t idx = 0;
        while (pos_ < text_.size() && text_[pos_] != ']') {
            const bool child_live = live && depth < target_.size() &&
                                    target_[depth].is_index && target_[depth].index == idx;
            if (child_live) record(depth + 1, true);
            value(depth + 1, child_live);
            skip_ws();
            if (pos_ < text_.size() && text_[pos_] == ',') {
                ++pos_;
                skip_ws();
            }
            ++idx;
        }
        if (pos_ < text_.size()) ++pos_; // ']'
    }

    std::string string() {
        std::string out;
        if (pos_ >= text_.size() || text_[pos_] != '"') return out;
        ++pos_;
        while (pos_ < text_.size() && text_[pos_] != '"') {
            if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) {
                out += text_[pos_ + 1]; // good enough for key matching
                pos_ += 2;
                continue;
            }
            if (text_[pos_] == '\n') ++line_;
            out += text_[pos_++];
        }
        if (pos_ < text_.size()) ++pos_; // closing '"'
        return out;
    }

    void primitive() {
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (c == ',' || c == '}' || c == ']' || c == ' ' || c == '\t' || c == '\n' ||
                c == '\r')
                return;
            ++pos_;
        }
    }

    void skip_ws() {
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (c == '\n') ++line_;
            if (c != ' ' && c != '\t' && c != '\n' && c != '\r') return;
            ++pos_;
        }
    }

    const std::string& text_;
    const std::vector<PathStep>& target_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int best_ = 0;
};

// Parses "nodes[2].service_rate" / "routing.SLF.HSS1" into steps.
// A trailing " (...)" annotation (used by validation reports) is dropped.
std::vector<PathStep> parse_path(std::string path) {
    if (const auto sp = path.find(" ("); sp != std::string::npos) path.resize(sp);
    std::vector<PathStep> steps;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            steps.push_back({cur, 0, false});
            cur.clear();
        }
    };
    for (std::size_t i = 0; i < path.size(); ++i) {
        const char c = path[i];
        if (c == '.') {
            flush();
        } else if (c == '[') {
            flush();
            std::size_t idx = 0;
            while (++i < path.size() && path[i] != ']')
                if (path[i] >= '0' && path[i] <= '9') idx = idx * 10 + (path[i] - '0');
            steps.push_back({"", idx, true});
        } else {
            cur += c;
        }
    }
    flush();
    return steps;
}

// Context threaded through the conversion: raw text + origin for anchored
// error messages.
struct Doc {
    const std::string& text;
    const std::string& origin;

    [[noreturn]] void fail(const std::string& path, const std::string& message) const {
        const auto steps = parse_path(path);
        const int line = LineLocator(text, steps).locate();
        std::ostringstream os;
        os << origin;
        if (line > 0) os << ":" << line;
        os << ": " << path << ": " << message;
        throw ConfigError(os.str());
    }
};

std::string type_name(const json& j) {
    switch (j.type()) {
        case json::value_t::object: return "object";
        case json::value_t::array: return "array";
        case json::value_t::string: return "string";
        case json::value_t::boolean: return "boolean";
        case json::value_t::null: return "null";
        default: return j.is_number() ? "number" : "value";
    }
}

double require_number(const Doc& doc, const json& j, const std::string& path) {
    if (!j.is_number()) doc.fail(path, "expected a number, got " + type_name(j));
    const double v = j.get<double>();
    if (!std::isfinite(v)) doc.fail(path, "value must be finite");
    return v;
}

long long require_integer(const Doc& doc, const json& j, const std::string& path) {
    if (!j.is_number_integer()) doc.fail(path, "expected an integer, got " + type_name(j));
    return j.get<long long>();
}

std::string require_string(const Doc& doc, const json& j, const std::string& path) {
    if (!j.is_string()) doc.fail(path, "expected a string, got " + type_name(j));
    return j.get<std::string>();
}

const json& require_object(const Doc& doc, const json& j, const std::string& path) {
    if (!j.is_object()) doc.fail(path, "expected an object, got " + type_name(j));
    return j;
}

void reject_unknown_keys(const Doc& doc, const json& obj, const std::string& path,
                         std::initializer_list<const char*> known) {
    for (const auto& [key, unused] : obj.items()) {
        bool ok = false;
        for (const char* k : known)
            if (key == k) {
                ok = true;
                break;
            }
        if (!ok) doc.fail(path + "." + key, "unknown key '" + key + "'");
    }
}

// A rate-valued field: plain number = rate; "time:X" string = mean time X
// seconds, converted to 1/X.
double parse_rate_value(const Doc& doc, const json& j, const std::string& path) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s.rfind("time:", 0) != 0)
            doc.fail(path, "string rate must use the form \"time:<seconds>\"");
        char* end = nullptr;
        const double t = std::strtod(s.c_str() + 5, &end);
        if (end == s.c_str() + 5 || *end != '\0' || !std::isfinite(t) || t <= 0.0)
            doc.fail(path, "invalid service time in '" + s + "'");
        return 1.0 / t;
    }
    const double v = require_number(doc, j, path);
    if (v <= 0.0) doc.fail(path, "rate must be > 0");
    return v;
}

NodeSpec parse_node(const Doc& doc, const json& j, std::size_t idx) {
    const std::string path = "nodes[" + std::to_string(idx) + "]";
    require_object(doc, j, path);
    reject_unknown_keys(doc, j, path,
                        {"id", "service_time", "service_rate", "servers", "discipline",
                         "capacity", "per_class_service_times", "per_class_service_rates"});

    NodeSpec node;
    if (!j.contains("id")) doc.fail(path, "missing required key 'id'");
    node.id = require_string(doc, j.at("id"), path + ".id");
    if (node.id.empty()) doc.fail(path + ".id", "node id must be nonempty");

    const bool has_time = j.contains("service_time");
    const bool has_rate = j.contains("service_rate");
    if (has_time == has_rate)
        doc.fail(path, "exactly one of 'service_time' or 'service_rate' is required");
    if (has_time) {
        const double t = require_number(doc, j.at("service_time"), path + ".service_time");
        if (t <= 0.0) doc.fail(path + ".service_time", "service time must be > 0");
        node.service_rate = 1.0 / t;
    } else {
        node.service_rate = parse_rate_value(doc, j.at("service_rate"), path + ".service_rate");
    }

    if (j.contains("servers"))
        node.servers =
            static_cast<int>(require_integer(doc, j.at("servers"), path + ".servers"));
    if (j.contains("discipline")) {
        const std::string d = require_string(doc, j.at("discipline"), path + ".discipline");
        if (d == "fcfs")
            node.discipline = Discipline::fcfs;
        else if (d == "ps")
            node.discipline = Discipline::ps;
        else
            doc.fail(path + ".discipline", "expected \"fcfs\" or \"ps\", got \"" + d + "\"");
    }
    if (j.contains("capacity"))
        node.capacity_factor = require_number(doc, j.at("capacity"), path + ".capacity");

    const bool pc_times = j.contains("per_class_service_times");
    const bool pc_rates = j.contains("per_class_service_rates");
    if (pc_times && pc_rates)
        doc.fail(path, "'per_class_service_times' and 'per_class_service_rates' are exclusive");
    if (pc_times || pc_rates) {
        const char* key = pc_times ? "per_class_service_times" : "per_class_service_rates";
        const std::string sub = path + "." + key;
        const json& m = require_object(doc, j.at(key), sub);
        for (const auto& [cls, val] : m.items()) {
            const double v = require_number(doc, val, sub + "." + cls);
            if (v <= 0.0) doc.fail(sub + "." + cls, "must be > 0");
            node.per_class_service_rates[cls] = pc_times ? 1.0 / v : v;
        }
    }
    return node;
}

BulkSpec parse_bulk(const Doc& doc, const json& j) {
    const std::string path = "arrival.bulk";
    require_object(doc, j, path);
    reject_unknown_keys(doc, j, path, {"kind", "size", "max", "p", "pmf"});
    if (!j.contains("kind")) doc.fail(path, "missing required key 'kind'");
    const std::string kind = require_string(doc, j.at("kind"), path + ".kind");

    BulkSpec b;
    auto require_only = [&](std::initializer_list<const char*> keys) {
        reject_unknown_keys(doc, j, path, keys);
    };
    if (kind == "deterministic") {
        b.kind = BulkSpec::Kind::deterministic;
        require_only({"kind", "size"});
        if (!j.contains("size")) doc.fail(path, "deterministic bulk requires 'size'");
        b.size = require_integer(doc, j.at("size"), path + ".size");
    } else if (kind == "uniform") {
        b.kind = BulkSpec::Kind::uniform;
        require_only({"kind", "max"});
        if (!j.contains("max")) doc.fail(path, "uniform bulk requires 'max' (support is 1..max)");
        b.size = require_integer(doc, j.at("max"), path + ".max");
    } else if (kind == "geometric") {
        b.kind = BulkSpec::Kind::geometric;
        require_only({"kind", "p"});
        if (!j.contains("p")) doc.fail(path, "geometric bulk requires 'p'");
        b.p = require_number(doc, j.at("p"), path + ".p");
    } else if (kind == "empirical") {
        b.kind = BulkSpec::Kind::empirical;
        require_only({"kind", "pmf"});
        if (!j.contains("pmf")) doc.fail(path, "empirical bulk requires 'pmf'");
        const json& pmf = require_object(doc, j.at("pmf"), path + ".pmf");
        for (const auto& [key, val] : pmf.items()) {
            char* end = nullptr;
            const long long k = std::strtoll(key.c_str(), &end, 10);
            if (end == key.c_str() || *end != '\0')
                doc.fail(path + ".pmf", "batch size key '" + key + "' is not an integer");
            b.pmf[k] = require_number(doc, val, path + ".pmf." + key);
        }
    } else {
        doc.fail(path + ".kind",
                 "expected one of \"deterministic\", \"uniform\", \"geometric\", \"empirical\"");
    }
    return b;
}

} // namespace

NetworkSpec parse_network_json(const std::string& text, const std::string& origin) {
    Doc doc{text, origin};

    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        // Convert the byte offset in e.byte to a line number.
        int line = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i)
            if (text[i] == '\n') ++line;
        std::ostringstream os;
        os << origin << ":" << line << ": " << e.what();
        throw ConfigError(os.str());
    }

    require_object(doc, root, "<document>");
    reject_unknown_keys(doc, root, "<document>",
                        {"nodes", "routing", "classes", "class_routing", "arrival"});
    for (const char* key : {"nodes", "routing", "arrival"})
        if (!root.contains(key))
            doc.fail(key, std::string("missing required top-level key '") + key + "'");

    NetworkSpec spec;

    // --- nodes ---
    const json& jnodes = root.at("nodes");
    if (!jnodes.is_array()) doc.fail("nodes", "expected an array, got " + type_name(jnodes));
    if (jnodes.empty()) doc.fail("nodes", "at least one node is required");
    for (std::size_t i = 0; i < jnodes.size(); ++i)
        spec.nodes.push_back(parse_node(doc, jnodes[i], i));

    // --- classes (optional; default single class) ---
    if (root.contains("classes")) {
        const json& jc = root.at("classes");
        if (!jc.is_array()) doc.fail("classes", "expected an array, got " + type_name(jc));
        if (jc.empty()) doc.fail("classes", "at least one class is required");
        spec.classes.clear();
        for (std::size_t l = 0; l < jc.size(); ++l) {
            const std::string path = "classes[" + std::to_string(l) + "]";
            require_object(doc, jc[l], path);
            reject_unknown_keys(doc, jc[l], path, {"id", "entry_probability"});
            ClassSpec c;
            if (!jc[l].contains("id")) doc.fail(path, "missing required key 'id'");
            c.id = require_string(doc, jc[l].at("id"), path + ".id");
            if (jc[l].contains("entry_probability"))
                c.entry_probability =
                    require_number(doc, jc[l].at("entry_probability"), path + ".entry_probability");
            else if (jc.size() > 1)
                doc.fail(path, "missing required key 'entry_probability'");
            spec.classes.push_back(c);
        }
    }

    const std::size_t n = spec.nodes.size();
    const std::size_t L = spec.classes.size();

    // --- routing ---
    const json& jr = require_object(doc, root.at("routing"), "routing");
    spec.routing.hop.assign(n, std::vector<double>(n, 0.0));
    spec.routing.entry.assign(n, 0.0);
    for (const auto& [from, row] : jr.items()) {
        if (from == "entry") {
            const json& je = require_object(doc, row, "routing.entry");
            for (const auto& [to, p] : je.items()) {
                const int i = spec.node_index(to);
                if (i < 0) doc.fail("routing.entry." + to, "unknown node '" + to + "'");
                spec.routing.entry[static_cast<std::size_t>(i)] =
                    require_number(doc, p, "routing.entry." + to);
            }
            continue;
        }
        const int j = spec.node_index(from);
        if (j < 0) doc.fail("routing." + from, "unknown node '" + from + "'");
        const json& jrow = require_object(doc, row, "routing." + from);
        for (const auto& [to, p] : jrow.items()) {
            const int i = spec.node_index(to);
            if (i < 0) doc.fail("routing." + from + "." + to, "unknown node '" + to + "'");
            spec.routing.hop[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] =
                require_number(doc, p, "routing." + from + "." + to);
        }
    }

    // --- class_routing (optional; class-switching matrix) ---
    if (root.contains("class_routing")) {
        const json& jcr = root.at("class_routing");
        if (!jcr.is_array())
            doc.fail("class_routing", "expected an array, got " + type_name(jcr));
        spec.routing.class_hop.assign(n * L, std::vector<double>(n * L, 0.0));
        // Per-node routing still applies to classes not mentioned here:
        // start from the class-preserving expansion, then overwrite.
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t l = 0; l < L; ++l)
                for (std::size_t i = 0; i < n; ++i)
                    spec.routing.class_hop[j * L + l][i * L + l] = spec.routing.hop[j][i];
        std::vector<bool> row_cleared(n * L, false);
        for (std::size_t k = 0; k < jcr.size(); ++k) {
            const std::string path = "class_routing[" + std::to_string(k) + "]";
            require_object(doc, jcr[k], path);
            reject_unknown_keys(doc, jcr[k], path, {"from", "from_class", "to", "to_class", "p"});
            for (const char* key : {"from", "from_class", "to", "to_class", "p"})
                if (!jcr[k].contains(key))
                    doc.fail(path, std::string("missing required key '") + key + "'");
            const std::string from = require_string(doc, jcr[k].at("from"), path + ".from");
            const std::string fcls =
                require_string(doc, jcr[k].at("from_class"), path + ".from_class");
            const std::string to = require_string(doc, jcr[k].at("to"), path + ".to");
            const std::string tcls =
                require_string(doc, jcr[k].at("to_class"), path + ".to_class");
            const double p = require_number(doc, jcr[k].at("p"), path + ".p");
            const int j = spec.node_index(from);
            const int l = spec.class_index(fcls);
            const int i = spec.node_index(to);
            const int r = spec.class_index(tcls);
            if (j < 0) doc.fail(path + ".from", "unknown node '" + from + "'");
            if (l < 0) doc.fail(path + ".from_class", "unknown class '" + fcls + "'");
            if (i < 0) doc.fail(path + ".to", "unknown node '" + to + "'");
            if (r < 0) doc.fail(path + ".to_class", "unknown class '" + tcls + "'");
            const std::size_t row = static_cast<std::size_t>(j) * L + static_cast<std::size_t>(l);
            if (!row_cleared[row]) {
                // The record list fully replaces this (node, class) row.
                std::fill(spec.routing.class_hop[row].begin(), spec.routing.class_hop[row].end(),
                          0.0);
                row_cleared[row] = true;
            }
            spec.routing.class_hop[row][static_cast<std::size_t>(i) * L +
                                        static_cast<std::size_t>(r)] = p;
        }
    }

    // --- arrival ---
    const json& ja = require_object(doc, root.at("arrival"), "arrival");
    reject_unknown_keys(doc, ja, "arrival", {"rate", "interarrival_time", "bulk"});
    const bool has_rate = ja.contains("rate");
    const bool has_iat = ja.contains("interarrival_time");
    if (has_rate == has_iat)
        doc.fail("arrival", "exactly one of 'rate' or 'interarrival_time' is required");
    if (has_rate) {
        spec.arrival_rate = require_number(doc, ja.at("rate"), "arrival.rate");
        if (spec.arrival_rate <= 0.0) doc.fail("arrival.rate", "rate must be > 0");
    } else {
        const double t = require_number(doc, ja.at("interarrival_time"), "arrival.interarrival_time");
        if (t <= 0.0) doc.fail("arrival.interarrival_time", "interarrival time must be > 0");
        spec.arrival_rate = 1.0 / t;
    }
    if (ja.contains("bulk")) spec.bulk = parse_bulk(doc, ja.at("bulk"));

    spec.normalize_routing();
    return spec;
}

NetworkSpec load_network_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_network_json(buf.str(), path);
}

int locate_config_line(const std::string& text, const std::string& dotted_path) {
    return LineLocator(text, parse_path(dotted_path)).locate();
}

std::string render_network_json(const NetworkSpec& spec) {
    json root;

    json jnodes = json::array();
    for (const NodeSpec& nd : spec.nodes) {
        json j;
        j["id"] = nd.id;
        j["service_rate"] = nd.service_rate;
        j["servers"] = nd.servers;
        j["discipline"] = to_string(nd.discipline);
        j["capacity"] = nd.capacity_factor;
        if (!nd.per_class_service_rates.empty()) {
            json m = json::object();
            for (const auto& [cls, rate] : nd.per_class_service_rates) m[cls] = rate;
            j["per_class_service_rates"] = m;
        }
        jnodes.push_back(std::move(j));
    }
    root["nodes"] = std::move(jnodes);

    json jr = json::object();
    json je = json::object();
    for (std::size_t i = 0; i < spec.routing.entry.size(); ++i)
        if (spec.routing.entry[i] != 0.0) je[spec.nodes[i].id] = spec.routing.entry[i];
    jr["entry"] = std::move(je);
    for (std::size_t j = 0; j < spec.routing.hop.size(); ++j) {
        json row = json::object();
        for (std::size_t i = 0; i < spec.routing.hop[j].size(); ++i)
            if (spec.routing.hop[j][i] != 0.0) row[spec.nodes[i].id] = spec.routing.hop[j][i];
        if (!row.empty()) jr[spec.nodes[j].id] = std::move(row);
    }
    root["routing"] = std::move(jr);

    json jc = json::array();
    for (const ClassSpec& c : spec.classes)
        jc.push_back({{"id", c.id}, {"entry_probability", c.entry_probability}});
    root["classes"] = std::move(jc);

    if (!spec.routing.class_hop.empty()) {
        const std::size_t n = spec.node_count();
        const std::size_t L = spec.class_count();
        json jcr = json::array();
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t l = 0; l < L; ++l)
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t r = 0; r < L; ++r) {
                        const double p = spec.routing.class_hop[j * L + l][i * L + r];
                        if (p != 0.0)
                            jcr.push_back({{"from", spec.nodes[j].id},
                                           {"from_class", spec.classes[l].id},
                                           {"to", spec.nodes[i].id},
                                           {"to_class", spec.classes[r].id},
                                           {"p", p}});
                    }
        root["class_routing"] = std::move(jcr);
    }

    json ja;
    ja["rate"] = spec.arrival_rate;
    if (spec.bulk) {
        json jb;
        switch (spec.bulk->kind) {
            case BulkSpec::Kind::deterministic:
                jb = {{"kind", "deterministic"}, {"size", spec.bulk->size}};
                break;
            case BulkSpec::Kind::uniform:
                jb = {{"kind", "uniform"}, {"max", spec.bulk->size}};
                break;
            case BulkSpec::Kind::geometric:
                jb = {{"kind", "geometric"}, {"p", spec.bulk->p}};
                break;
            case BulkSpec::Kind::empirical: {
                json pmf = json::object();
                for (const auto& [k, q] : spec.bulk->pmf) pmf[std::to_string(k)] = q;
                jb = {{"kind", "empirical"}, {"pmf", std::move(pmf)}};
                break;
            }
        }
        ja["bulk"] = std::move(jb);
    }
    root["arrival"] = std::move(ja);

    return root.dump(2) + "\n";
}

void apply_override(NetworkSpec& spec, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override '" + assignment + "' must have the form path=value");
    const std::string path = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);

    std::vector<std::string> parts;
    std::string cur;
    for (const char c : path) {
        if (c == '.') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);

    auto num = [&]() -> double {
        char* end = nullptr;
        const double v = std::strtod(value.c_str(), &end);
        if (end == value.c_str() || *end != '\0' || !std::isfinite(v))
            throw ConfigError("override '" + assignment + "': '" + value + "' is not a number");
        return v;
    };
    auto rate = [&]() -> double {
        if (value.rfind("time:", 0) == 0) {
            char* end = nullptr;
            const double t = std::strtod(value.c_str() + 5, &end);
            if (end == value.c_str() + 5 || *end != '\0' || !(t > 0.0))
                throw ConfigError("override '" + assignment + "': invalid time value");
            return 1.0 / t;
        }
        return num();
    };
    auto fail = [&](const std::string& why) -> void {
        throw ConfigError("override '" + assignment + "': " + why);
    };

    if (parts.size() == 2 && parts[0] == "arrival") {
        if (parts[1] == "rate")
            spec.arrival_rate = num();
        else if (parts[1] == "interarrival_time")
            spec.arrival_rate = 1.0 / num();
        else
            fail("unknown arrival field '" + parts[1] + "'");
        return;
    }

    if (parts.size() == 3 && parts[0] == "nodes") {
        const int idx = spec.node_index(parts[1]);
        if (idx < 0) fail("unknown node '" + parts[1] + "'");
        NodeSpec& nd = spec.nodes[static_cast<std::size_t>(idx)];
        const std::string& field = parts[2];
        if (field == "service_rate")
            nd.service_rate = rate();
        else if (field == "service_time")
            nd.service_rate = 1.0 / num();
        else if (field == "servers")
            nd.servers = static_cast<int>(num());
        else if (field == "capacity")
            nd.capacity_factor = num();
        else if (field == "discipline") {
            if (value == "fcfs")
                nd.discipline = Discipline::fcfs;
            else if (value == "ps")
                nd.discipline = Discipline::ps;
            else
                fail("discipline must be fcfs or ps");
        } else
            fail("unknown node field '" + field + "'");
        return;
    }

    if (parts.size() == 3 && parts[0] == "routing") {
        if (parts[1] == "entry") {
            const int i = spec.node_index(parts[2]);
            if (i < 0) fail("unknown node '" + parts[2] + "'");
            spec.routing.entry[static_cast<std::size_t>(i)] = num();
        } else {
            const int j = spec.node_index(parts[1]);
            const int i = spec.node_index(parts[2]);
            if (j < 0) fail("unknown node '" + parts[1] + "'");
            if (i < 0) fail("unknown node '" + parts[2] + "'");
            spec.routing.hop[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = num();
        }
        return;
    }

    if (parts.size() == 3 && parts[0] == "classes") {
        const int l = spec.class_index(parts[1]);
        if (l < 0) fail("unknown class '" + parts[1] + "'");
        if (parts[2] != "entry_probability") fail("unknown class field '" + parts[2] + "'");
        spec.classes[static_cast<std::size_t>(l)].entry_probability = num();
        return;
    }

    fail("unrecognized path '" + path + "'");
}

} // namespace qnet
