#pragma once

#include <iosfwd>
#include <span>
#include <string>

#include "swarmform/engine.hpp"

namespace swarmform {

/// Tab-separated, one row per (tick, agent):
/// tick agent x y z state role gradient node, with '-' for unset values.
void write_trace(std::ostream& os, const Trace& trace);

/// Per-tick aggregates: tick settled beacons messages A B C max_gradient.
void write_tick_records(std::ostream& os, const Trace& trace);

/// tick agent kind detail
void write_events(std::ostream& os, const Trace& trace);

/// `key = value` lines.
void write_summary(std::ostream& os, const RunSummary& summary);

/// N mean stddev completed trials
void write_sweep(std::ostream& os, std::span<const SweepRow> rows);

}  // namespace swarmform
