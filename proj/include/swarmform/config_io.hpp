#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "swarmform/config.hpp"

namespace swarmform {

/// Text config: flat `key = value` lines, then optional `[shape]`,
/// `[params]` and `[failures]` sections. `spec` is required and is either a
/// spec file path (relative to base_dir) or `generated`, which builds the
/// structure from `[shape]`. Errors are ConfigError("<source>:<line>: ...").
SimConfig parse_config(std::istream& is, const std::string& base_dir = ".",
                       const std::string& source = "config");
SimConfig load_config(const std::string& path);

/// Writes every field explicitly; parse_config(write_config(c)) == c.
void write_config(std::ostream& os, const SimConfig& config);
std::string format_config(const SimConfig& config);

/// One failure event: "<tick> ids <id>...", "<tick> cluster <count>" or
/// "<tick> isolate-follower". Throws ConfigError without a line prefix.
FailureEvent parse_failure_event(const std::string& text);
std::string format_failure_event(const FailureEvent& event);

/// One event per line, '#' comments; errors carry "<source>:<line>: ".
std::vector<FailureEvent> parse_failure_schedule(std::istream& is, const std::string& source = "schedule");
std::vector<FailureEvent> load_failure_schedule(const std::string& path);

/// Shortest text that reads back to the same double.
std::string format_double(double v);

}  // namespace swarmform
