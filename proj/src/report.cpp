#include "swarmform/report.hpp"

#include <cstdio>
#include <ostream>

namespace swarmform {

namespace {

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string list_text(std::span<const NodeIndex> v) {
    if (v.empty()) return "-";
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
    return s;
}

}  // namespace

void write_trace(std::ostream& os, const Trace& trace) {
    os << "tick\tagent\tx\ty\tz\tstate\trole\tgradient\tnode\n";
    for (const auto& r : trace.rows) {
        os << r.tick << '\t' << r.id << '\t' << fixed(r.position.x, 6) << '\t' << fixed(r.position.y, 6) << '\t'
           << fixed(r.position.z, 6) << '\t' << state_name(r.state) << '\t' << role_name(r.role) << '\t'
           << r.gradient << '\t' << (r.node ? std::to_string(*r.node) : "-") << '\n';
    }
}

void write_tick_records(std::ostream& os, const Trace& trace) {
    os << "tick\tsettled\tbeacons\tmessages\tA\tB\tC\tmax_gradient\n";
    for (const auto& t : trace.ticks) {
        os << t.tick << '\t' << t.settled << '\t' << t.beacons << '\t' << t.messages << '\t' << t.role_a << '\t'
           << t.role_b << '\t' << t.role_c << '\t' << (t.max_gradient < 0 ? "-" : std::to_string(t.max_gradient))
           << '\n';
    }
}

void write_events(std::ostream& os, const Trace& trace) {
    os << "tick\tagent\tkind\tdetail\n";
    for (const auto& e : trace.events) {
        os << e.tick << '\t' << (e.agent < 0 ? "-" : std::to_string(e.agent)) << '\t' << e.kind << '\t'
           << (e.detail.empty() ? "-" : e.detail) << '\n';
    }
}

void write_summary(std::ostream& os, const RunSummary& s) {
    os << "status = " << (s.completed ? "complete" : "timeout") << '\n';
    os << "completion_tick = " << (s.completed ? std::to_string(s.completion_tick) : "-") << '\n';
    os << "ticks = " << s.ticks << '\n';
    os << "seed = " << s.seed << '\n';
    os << "nodes = " << s.nodes << '\n';
    os << "agents = " << s.agents << '\n';
    os << "settled = " << s.settled << '\n';
    os << "max_gradient = " << s.max_gradient << '\n';
    os << "residual_beacons = " << s.residual_beacons << '\n';
    os << "completion_gradient_max = " << s.completion_gradient_max << '\n';
    os << "completion_oracle_max = " << s.completion_oracle_max << '\n';
    os << "completion_gradient_matches_oracle = " << (s.completion_gradient_matches_oracle ? "yes" : "no")
       << '\n';
    os << "escape_events = " << s.escape_events << '\n';
    os << "parent_losses = " << s.parent_losses << '\n';
    os << "lost_bids = " << s.lost_bids << '\n';
    os << "warnings = " << s.warnings << '\n';
    os << "dead_nodes = " << list_text(s.dead_nodes) << '\n';
    os << "unfilled_nodes = " << list_text(s.unfilled_nodes) << '\n';
}

void write_sweep(std::ostream& os, std::span<const SweepRow> rows) {
    os << "N\tmean\tstddev\tcompleted\ttrials\n";
    for (const auto& r : rows) {
        os << r.n << '\t' << fixed(r.mean_ticks, 3) << '\t' << fixed(r.stddev_ticks, 3) << '\t' << r.completed
           << '\t' << r.trials << '\n';
    }
}

}  // namespace swarmform
