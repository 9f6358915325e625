// Network description file I/O: JSON parsing with line-anchored error
// messages, canonical rendering, and dotted-path field overrides.
#pragma once

#include <string>

#include "qnet/model.hpp"

namespace qnet {

/// Parses a network description document. `origin` labels error messages
/// (usually the file name). Throws ConfigError with "origin:line: ..."
/// messages on malformed input; structural invariants beyond the schema
/// are validate()'s job and are not checked here.
NetworkSpec parse_network_json(const std::string& text, const std::string& origin = "<config>");

/// Reads and parses a network description file.
NetworkSpec load_network_file(const std::string& path);

/// Renders a spec back to the document format. parse(render(s)) == s
/// field-for-field (numbers are emitted with round-trip precision).
std::string render_network_json(const NetworkSpec& spec);

/// Best-effort line lookup of a dotted element path (the notation used in
/// validation reports, e.g. "nodes[2].service_rate" or "routing.SLF.HSS1")
/// inside a document. Returns the line of the deepest resolvable prefix,
/// or 0 when nothing matches.
int locate_config_line(const std::string& text, const std::string& dotted_path);

/// Applies one "dotted.path=value" override to a spec, e.g.
///   arrival.rate=2.5
///   nodes.HSS1.service_rate=time:0.009   (time: prefix = value is seconds)
///   nodes.HSS1.servers=3
///   nodes.SLF.discipline=ps
///   routing.SLF.HSS1=0.4
/// Throws ConfigError when the path or value is malformed.
void apply_override(NetworkSpec& spec, const std::string& assignment);

} // namespace qnet
