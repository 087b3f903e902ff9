#include "swarmform/engine.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include "swarmform/motion.hpp"

namespace swarmform {

namespace {

// Uniform grid over points; queries return indices within a radius no larger
// than the cell size, in ascending index order.
class SpatialHash {
  public:
    explicit SpatialHash(double cell) : cell_(cell) {}

    void insert(int index, const Vec3& p) { cells_[key(cell_of(p))].push_back(index); }

    template <class PosFn>
    std::vector<int> query(const Vec3& p, double radius, PosFn&& pos) const {
        std::vector<int> out;
        const auto c = cell_of(p);
        for (long dx = -1; dx <= 1; ++dx) {
            for (long dy = -1; dy <= 1; ++dy) {
                for (long dz = -1; dz <= 1; ++dz) {
                    const auto it = cells_.find(key({c[0] + dx, c[1] + dy, c[2] + dz}));
                    if (it == cells_.end()) continue;
                    for (int j : it->second) {
                        if (distance(pos(j), p) <= radius) out.push_back(j);
                    }
                }
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }

  private:
    using Cell = std::array<long, 3>;

    Cell cell_of(const Vec3& p) const {
        return {static_cast<long>(std::floor(p.x / cell_)), static_cast<long>(std::floor(p.y / cell_)),
                static_cast<long>(std::floor(p.z / cell_))};
    }
    static long long key(const Cell& c) {
        constexpr long long kSpan = 1 << 20;
        return ((c[0] + kSpan / 2) * kSpan + (c[1] + kSpan / 2)) * kSpan + (c[2] + kSpan / 2);
    }

    double cell_;
    std::unordered_map<long long, std::vector<int>> cells_;
};

bool live(const AgentRecord& a) { return !a.disabled; }

NeighborView view_of(const AgentRecord& other, const Vec3& from) {
    return {other.id, other.position, other.role, other.fsm_state, other.node_id,
            distance(other.position, from)};
}

Perception assemble(const WorldState& w, AgentId id, std::span<const int> agent_idx,
                    std::span<const int> message_idx) {
    Perception p;
    const auto& self = w.agents[static_cast<size_t>(id)];
    for (int j : agent_idx) {
        if (j == id || !live(w.agents[static_cast<size_t>(j)])) continue;
        p.agents.push_back(view_of(w.agents[static_cast<size_t>(j)], self.position));
    }
    for (int m : message_idx) {
        const auto& env = w.messages[static_cast<size_t>(m)];
        if (env.sender != id) p.messages.push_back(env);
    }
    return p;
}

std::mt19937_64 agent_stream(std::uint64_t seed, AgentId id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(id), 0x5eedu};
    return std::mt19937_64(seq);
}

std::string node_text(const std::optional<NodeIndex>& n) { return n ? std::to_string(*n) : "-"; }

void check_world(const WorldState& w, const SimConfig& cfg) {
    for (const auto& a : w.agents) {
        check_record(a);
        if (!a.position.finite()) {
            throw InvariantViolation("agent " + std::to_string(a.id) + ": non-finite position");
        }
        if (!cfg.bounds.contains(a.position, 1e-9)) {
            throw InvariantViolation("agent " + std::to_string(a.id) + ": left the bounds");
        }
        if (a.is_settled()) {
            const auto it = w.settled_nodes.find(*a.node_id);
            if (it == w.settled_nodes.end() || it->second != a.id) {
                throw InvariantViolation("agent " + std::to_string(a.id) + " holds node " +
                                         std::to_string(*a.node_id) + " without owning it");
            }
        }
    }
    for (const auto& [node, id] : w.settled_nodes) {
        const auto& a = w.agents.at(static_cast<size_t>(id));
        if (!a.is_settled() || a.node_id != node) {
            throw InvariantViolation("node " + std::to_string(node) + " mapped to agent " +
                                     std::to_string(id) + " which does not hold it");
        }
    }
}

TickRecord record_of(const WorldState& w) {
    TickRecord r;
    r.tick = w.tick;
    r.settled = static_cast<int>(w.settled_nodes.size());
    r.messages = static_cast<int>(w.messages.size());
    for (const auto& a : w.agents) {
        switch (a.role) {
            case Role::kA: ++r.role_a; break;
            case Role::kB: ++r.role_b; break;
            case Role::kC: ++r.role_c; break;
        }
        if (!live(a) || !a.is_settled()) continue;
        if (a.fsm_state == FsmState::kSettleNeighbors) ++r.beacons;
        if (a.gradient.is_set()) r.max_gradient = std::max(r.max_gradient, a.gradient.value());
    }
    return r;
}

void append_rows(Trace& trace, const WorldState& w, int every) {
    if (every <= 0 || w.tick % every != 0) return;
    for (const auto& a : w.agents) {
        trace.rows.push_back({w.tick, a.id, a.position, a.fsm_state, a.role, a.gradient, a.node_id});
    }
}

// A win on a node that another agent claimed first this tick (or earlier)
// falls back to surface following under the same beacon.
void reject_claim(FsmOutput& out) {
    auto& a = out.next;
    a.fsm_state = FsmState::kFollow;
    a.role = Role::kB;
    a.node_id.reset();
    a.parent_node.reset();
    a.target_node.reset();
    a.last_bid.reset();
    a.offering.reset();
    a.confirmed.clear();
    a.gradient = GradientValue::unset();
    a.eta = 1;
    std::erase_if(out.outgoing, [](const Message& m) { return std::holds_alternative<Confirmation>(m); });
}

}  // namespace

PlacedStructure place_structure(const SimConfig& config) {
    PlacedStructure placed{resolve(config.spec), {}};
    const auto& pts = placed.layout.positions;
    const Vec3 root = pts.at(static_cast<size_t>(config.spec.root()));
    if (config.root_position) {
        placed.translation = *config.root_position - root;
    } else {
        Vec3 mean;
        for (const auto& p : pts) mean += p;
        mean = mean * (1.0 / static_cast<double>(pts.size()));
        const Vec3 c = config.bounds.center();
        placed.translation = {c.x - mean.x, c.y - mean.y, config.initial_height - root.z};
    }
    for (NodeIndex k = 0; k < config.spec.node_count(); ++k) {
        if (!config.bounds.contains(placed.node_position(k), 1e-9)) {
            throw ConfigError("structure node " + std::to_string(k) + " is placed outside the bounds");
        }
    }
    return placed;
}

WorldState init_world(const SimConfig& config) {
    check_config(config);
    WorldState w;
    w.structure = std::make_shared<const PlacedStructure>(place_structure(config));
    const NodeIndex root = config.spec.root();

    std::mt19937_64 placement(config.seed);
    w.agents.resize(static_cast<size_t>(config.agent_count));
    for (AgentId id = 0; id < config.agent_count; ++id) {
        auto& a = w.agents[static_cast<size_t>(id)];
        a.id = id;
        w.rngs.push_back(agent_stream(config.seed, id));
        if (id == 0) {
            a.position = w.structure->node_position(root);
            a.target_position = a.position;
            a.fsm_state = FsmState::kSettleNeighbors;
            a.role = Role::kA;
            a.node_id = root;
            a.gradient = GradientValue::of(0);
            continue;
        }
        const Vec3 span = config.bounds.hi - config.bounds.lo;
        const double x = config.bounds.lo.x + unit_uniform(placement) * span.x;
        const double y = config.bounds.lo.y + unit_uniform(placement) * span.y;
        a.position = config.bounds.clamp({x, y, config.initial_height});
        a.heading = {0.0, (2.0 * unit_uniform(placement) - 1.0) * std::numbers::pi};
    }
    w.settled_nodes[root] = 0;
    w.last_settler = 0;
    return w;
}

Perception perceive(const WorldState& world, const SimConfig& config, AgentId id) {
    const auto& self = world.agents.at(static_cast<size_t>(id));
    if (!live(self)) return {};
    std::vector<int> agents;
    std::vector<int> messages;
    for (const auto& a : world.agents) {
        if (distance(a.position, self.position) <= config.params.r_d) agents.push_back(a.id);
    }
    for (size_t m = 0; m < world.messages.size(); ++m) {
        if (distance(world.messages[m].origin, self.position) <= config.params.r_c) {
            messages.push_back(static_cast<int>(m));
        }
    }
    return assemble(world, id, agents, messages);
}

StepReport step(WorldState& w, const SimConfig& cfg) {
    const auto& prm = cfg.params;
    const auto n = w.agents.size();
    const long tick = w.tick + 1;
    StepReport report;
    auto event = [&](AgentId id, std::string kind, std::string detail) {
        report.events.push_back({tick, id, std::move(kind), std::move(detail)});
    };

    // 1. Perception from the start-of-tick snapshot.
    SpatialHash agent_grid(prm.r_d);
    for (const auto& a : w.agents) {
        if (live(a)) agent_grid.insert(a.id, a.position);
    }
    SpatialHash message_grid(prm.r_c);
    for (size_t m = 0; m < w.messages.size(); ++m) {
        message_grid.insert(static_cast<int>(m), w.messages[m].origin);
    }
    std::vector<Perception> seen(n);
    for (const auto& a : w.agents) {
        if (!live(a)) continue;
        const auto near = agent_grid.query(a.position, prm.r_d,
                                           [&](int j) { return w.agents[static_cast<size_t>(j)].position; });
        const auto heard = message_grid.query(a.position, prm.r_c,
                                              [&](int m) { return w.messages[static_cast<size_t>(m)].origin; });
        seen[static_cast<size_t>(a.id)] = assemble(w, a.id, near, heard);
    }

    // 2. Gradient round over last tick's broadcasts.
    std::vector<AgentRecord> current = w.agents;
    std::vector<std::vector<DownhillNeighbor>> downhill(n);
    const double gradient_range = prm.d_aa + prm.range_slack;
    for (auto& a : current) {
        if (!live(a) || !a.is_settled()) continue;
        const auto& p = seen[static_cast<size_t>(a.id)];
        std::vector<DownhillNeighbor> heard;
        std::vector<GradientValue> values;
        std::vector<double> dists;
        for (const auto& v : p.agents) {
            if (v.role != Role::kA) continue;
            const auto g = p.gradient_of(v.id);
            if (!g.is_set()) continue;
            values.push_back(g);
            dists.push_back(v.distance);
            if (v.distance <= gradient_range) heard.push_back({v.id, v.position, g});
        }
        a.gradient = gradient_step(a.gradient, a.fsm_state == FsmState::kSettleNeighbors, values, dists,
                                   gradient_range, cfg.spec.node_count());
        for (const auto& h : heard) {
            if (a.gradient.is_set() && h.value.value() < a.gradient.value()) {
                downhill[static_cast<size_t>(a.id)].push_back(h);
            }
        }
    }

    // 3. Controller, then id-ordered commit.
    const FsmContext ctx{cfg, w.structure->layout};
    std::vector<FsmOutput> outs(n);
    for (size_t i = 0; i < n; ++i) {
        if (!live(current[i])) {
            outs[i].next = current[i];
            continue;
        }
        outs[i] = fsm_step(current[i], seen[i], ctx);
    }
    for (size_t i = 0; i < n; ++i) {
        const auto& prev = current[i];
        auto& out = outs[i];
        const auto id = static_cast<AgentId>(i);
        for (auto& warning : out.warnings) event(id, "warning", std::move(warning));
        if (!prev.is_settled() && out.next.is_settled()) {
            const NodeIndex k = *out.next.node_id;
            if (w.settled_nodes.contains(k)) {
                reject_claim(out);
                event(id, "claim-rejected", "node " + std::to_string(k));
            } else {
                w.settled_nodes[k] = id;
                w.last_settler = id;
                event(id, "won-bid", "node " + std::to_string(k));
            }
        } else if (prev.is_settled() && !out.next.is_settled()) {
            const auto it = w.settled_nodes.find(*prev.node_id);
            if (it != w.settled_nodes.end() && it->second == id) w.settled_nodes.erase(it);
            event(id, "parent-lost", "released node " + std::to_string(*prev.node_id));
        } else if (out.event == FsmEvent::kParentLost) {
            event(id, "parent-lost", "");
        } else if (out.event == FsmEvent::kLostBid) {
            event(id, "lost-bid", "node " + node_text(out.next.target_node));
        }
    }

    // 4-6. Control, stagnation, integration.
    for (size_t i = 0; i < n; ++i) {
        auto& a = outs[i].next;
        if (!live(a)) {
            a.velocity = {};
            continue;
        }
        const auto& p = seen[i];
        std::vector<Body> bodies;
        std::vector<Body> moving;
        for (const auto& v : p.agents) {
            if (v.role == Role::kC || v.distance >= prm.d1) continue;
            bodies.push_back({v.position, v.role});
            if (v.role == Role::kB) moving.push_back({v.position, v.role});
        }

        Vec3 u;
        try {
            switch (a.fsm_state) {
                case FsmState::kSearch: break;
                case FsmState::kApproach: u = settling_control(a, bodies, std::nullopt, prm); break;
                case FsmState::kFollow: {
                    const auto* parent = a.parent_id ? p.find(*a.parent_id) : nullptr;
                    if (!parent) {
                        u = settling_control(a, bodies, std::nullopt, prm);
                        break;
                    }
                    std::vector<GradientSample> settled;
                    for (const auto& v : p.agents) {
                        if (v.role == Role::kA) settled.push_back({v.position, p.gradient_of(v.id)});
                    }
                    // Downhill neighbors the parent relays but this agent cannot see.
                    std::vector<GradientSample> relayed;
                    if (const auto* b = p.broadcast_from(parent->id)) {
                        for (const auto& d : b->downhill) {
                            if (!p.find(d.id)) relayed.push_back({d.position, d.value});
                        }
                    }
                    const GradientSample parent_sample{parent->position, p.gradient_of(parent->id)};
                    u = surface_follow_control(a, parent_sample, settled, prm) +
                        surface_tangent(a.position, parent_sample, relayed, prm.gamma) +
                        settling_control(a, moving, std::nullopt, prm);
                    break;
                }
                case FsmState::kBid:
                    u = settling_control(a, bodies,
                                         a.target_node ? std::optional(a.target_position) : std::nullopt, prm);
                    break;
                case FsmState::kSettleNeighbors:
                case FsmState::kSettled: u = settling_control(a, bodies, a.target_position, prm); break;
            }
        } catch (const std::domain_error& e) {
            throw InvariantViolation("tick " + std::to_string(tick) + ", agent " + std::to_string(i) + ": " +
                                     e.what());
        }

        if (a.role == Role::kB) {
            const auto check = detect_stagnation(a, u, prm);
            a.stagnation_timer = check.timer;
            if (check.escape) {
                const auto* parent = a.parent_id ? p.find(*a.parent_id) : nullptr;
                const std::string from = state_name(a.fsm_state).data();
                enter_search(a, prm.escape_walk_ticks);
                if (parent) {
                    const Vec3 away = a.position - parent->position;
                    a.heading = {0.0, std::atan2(away.y, away.x)};
                }
                event(a.id, "escape", from + " -> S1");
            }
        } else {
            a.stagnation_timer = 0;
        }

        if (a.fsm_state == FsmState::kSearch) {
            std::vector<AgentId> ids;
            for (const auto& v : p.agents) ids.push_back(v.id);
            const auto walk = random_walk_step(a, w.rngs[i], ids, cfg.bounds, prm);
            a.heading = walk.heading;
            a.seen = walk.seen;
            a.velocity = walk.velocity;
            a.position = a.position + walk.velocity * prm.dt;
        } else {
            try {
                a = integrate(a, u, prm);
            } catch (const std::domain_error& e) {
                throw InvariantViolation("tick " + std::to_string(tick) + ", agent " + std::to_string(i) + ": " +
                                         e.what());
            }
        }
        a.position = cfg.bounds.clamp(a.position);
    }

    // 7. Messages for the next tick, sent from the new positions.
    std::vector<Envelope> outbox;
    for (size_t i = 0; i < n; ++i) {
        const auto& a = outs[i].next;
        if (!live(a)) continue;
        if (a.is_settled() && a.gradient.is_set()) {
            outbox.push_back({a.id, a.position, GradientBroadcast{a.id, a.gradient, std::move(downhill[i])}});
        }
        for (auto& m : outs[i].outgoing) outbox.push_back({a.id, a.position, std::move(m)});
    }

    for (size_t i = 0; i < n; ++i) w.agents[i] = std::move(outs[i].next);
    w.messages = std::move(outbox);
    w.tick = tick;

    check_world(w, cfg);
    report.record = record_of(w);
    return report;
}

bool formation_complete(const WorldState& world, const SimConfig& config) {
    return static_cast<int>(world.settled_nodes.size()) == config.spec.node_count();
}

void inject_failures(WorldState& world, std::span<const AgentId> agent_ids) {
    for (AgentId id : agent_ids) {
        if (id < 0 || static_cast<size_t>(id) >= world.agents.size()) {
            throw std::out_of_range("inject_failures: unknown agent id " + std::to_string(id));
        }
    }
    for (AgentId id : agent_ids) {
        auto& a = world.agents[static_cast<size_t>(id)];
        a.disabled = true;
        a.velocity = {};
    }
    std::erase_if(world.messages, [&](const Envelope& e) {
        return world.agents[static_cast<size_t>(e.sender)].disabled;
    });
}

std::vector<AgentId> select_failures(const WorldState& w, const SimConfig& cfg, const FailureEvent& event,
                                     std::string* note) {
    if (event.selector.empty()) return event.ids;
    const auto& spec = cfg.spec;
    auto holder = [&](NodeIndex k) -> const AgentRecord* {
        const auto it = w.settled_nodes.find(k);
        return it == w.settled_nodes.end() ? nullptr : &w.agents[static_cast<size_t>(it->second)];
    };

    if (event.selector == "cluster") {
        auto interior = [&](NodeIndex k) {
            const auto* a = holder(k);
            if (!a || !live(*a) || a->fsm_state != FsmState::kSettled || k == spec.root()) return false;
            return std::all_of(spec.neighbors(k).begin(), spec.neighbors(k).end(), [&](NodeIndex e) {
                const auto* b = holder(e);
                return b && b->fsm_state == FsmState::kSettled;
            });
        };
        const int want = std::max(1, event.count);
        std::vector<NodeIndex> chain;
        // Depth-first search for a simple path of `want` interior nodes.
        auto extend = [&](auto&& self) -> bool {
            if (static_cast<int>(chain.size()) == want) return true;
            for (NodeIndex e : spec.neighbors(chain.back())) {
                if (!interior(e) || std::find(chain.begin(), chain.end(), e) != chain.end()) continue;
                chain.push_back(e);
                if (self(self)) return true;
                chain.pop_back();
            }
            return false;
        };
        for (NodeIndex k = 0; k < spec.node_count(); ++k) {
            if (!interior(k)) continue;
            chain = {k};
            if (extend(extend)) {
                std::vector<AgentId> ids;
                for (NodeIndex c : chain) ids.push_back(holder(c)->id);
                std::sort(ids.begin(), ids.end());
                if (note) {
                    *note = "cluster on nodes";
                    for (NodeIndex c : chain) *note += " " + std::to_string(c);
                }
                return ids;
            }
        }
        return {};
    }

    if (event.selector == "isolate-follower") {
        for (const auto& f : w.agents) {
            if (!live(f) || f.fsm_state != FsmState::kFollow || !f.parent_id) continue;
            const auto& parent = w.agents[static_cast<size_t>(*f.parent_id)];
            if (!live(parent) || parent.fsm_state != FsmState::kSettled) continue;
            if (distance(parent.position, f.position) > cfg.params.r_d) continue;
            std::vector<AgentId> ids;
            for (const auto& s : w.agents) {
                if (s.id == parent.id || !live(s) || !s.is_settled()) continue;
                const bool linked = spec.adjacent(*s.node_id, *parent.node_id);
                if (linked || distance(s.position, f.position) <= cfg.params.r_d) ids.push_back(s.id);
            }
            if (ids.empty()) continue;
            if (note) {
                *note = "follower " + std::to_string(f.id) + " of agent " + std::to_string(parent.id) +
                        " on node " + std::to_string(*parent.node_id);
            }
            return ids;
        }
        return {};
    }
    throw ConfigError("unknown failure selector '" + event.selector + "'");
}

namespace {

struct CompletionGradient {
    int protocol_max = -1;
    int oracle_max = -1;
    bool matches = false;
};

// Lets the finished structure settle, then runs the gradient protocol to its
// fixpoint with the last settler as the only beacon.
CompletionGradient analyse_completion(const WorldState& world, const SimConfig& config) {
    CompletionGradient out;
    if (!world.last_settler) return out;
    SimConfig quiet = config;
    quiet.failure_schedule.clear();
    WorldState w = world;
    for (int t = 0; t < 400; ++t) {
        double worst = 0.0;
        for (const auto& a : w.agents) {
            if (live(a) && a.is_settled()) worst = std::max(worst, distance(a.position, a.target_position));
        }
        if (worst < 1e-3) break;
        step(w, quiet);
    }
    std::vector<Vec3> positions;
    std::vector<int> beacon;
    for (const auto& a : w.agents) {
        if (!live(a) || !a.is_settled()) continue;
        if (a.id == *world.last_settler) beacon.push_back(static_cast<int>(positions.size()));
        positions.push_back(a.position);
    }
    if (beacon.empty()) return out;
    const double d0 = config.params.d_aa + config.params.range_slack;
    const auto n = static_cast<int>(positions.size());
    const auto iterated = iterate_gradient(positions, beacon, d0, std::vector<GradientValue>(positions.size()), n + 1);
    const auto oracle = gradient_fixpoint_oracle(positions, beacon, d0);
    for (const auto& g : iterated.values) out.protocol_max = std::max(out.protocol_max, g.value_or(-1));
    for (const auto& g : oracle) out.oracle_max = std::max(out.oracle_max, g.value_or(-1));
    out.matches = iterated.converged && iterated.values == oracle;
    return out;
}

}  // namespace

Trace run_trial(const SimConfig& config) {
    Trace trace;
    WorldState w = init_world(config);
    const long max_ticks = config.effective_max_ticks();
    trace.ticks.push_back(record_of(w));
    append_rows(trace, w, config.trace_every);

    // Selector events wait until something qualifies.
    std::vector<FailureEvent> pending;
    std::vector<FailureEvent> schedule = config.failure_schedule;
    std::stable_sort(schedule.begin(), schedule.end(),
                     [](const FailureEvent& a, const FailureEvent& b) { return a.tick < b.tick; });
    size_t next_event = 0;

    while (!formation_complete(w, config) && w.tick < max_ticks) {
        while (next_event < schedule.size() && schedule[next_event].tick <= w.tick) {
            pending.push_back(schedule[next_event++]);
        }
        for (auto it = pending.begin(); it != pending.end();) {
            std::string note;
            const auto ids = select_failures(w, config, *it, &note);
            if (ids.empty() && !it->selector.empty()) {
                ++it;
                continue;
            }
            inject_failures(w, ids);
            std::string detail = it->selector.empty() ? "ids" : it->selector + ":";
            for (AgentId id : ids) detail += " " + std::to_string(id);
            if (!note.empty()) detail += " (" + note + ")";
            trace.events.push_back({w.tick, -1, "failure", detail});
            it = pending.erase(it);
        }

        auto report = step(w, config);
        trace.ticks.push_back(report.record);
        for (auto& e : report.events) trace.events.push_back(std::move(e));
        append_rows(trace, w, config.trace_every);
    }

    auto& s = trace.summary;
    s.completed = formation_complete(w, config);
    s.completion_tick = s.completed ? w.tick : -1;
    s.ticks = w.tick;
    s.nodes = config.spec.node_count();
    s.agents = config.agent_count;
    s.settled = static_cast<int>(w.settled_nodes.size());
    s.seed = config.seed;
    const auto last = record_of(w);
    s.max_gradient = last.max_gradient;
    s.residual_beacons = last.beacons;
    for (const auto& e : trace.events) {
        if (e.kind == "escape") ++s.escape_events;
        if (e.kind == "parent-lost") ++s.parent_losses;
        if (e.kind == "lost-bid") ++s.lost_bids;
        if (e.kind == "warning") ++s.warnings;
    }
    for (NodeIndex k = 0; k < config.spec.node_count(); ++k) {
        const auto it = w.settled_nodes.find(k);
        if (it == w.settled_nodes.end()) {
            s.unfilled_nodes.push_back(k);
        } else if (w.agents[static_cast<size_t>(it->second)].disabled) {
            s.dead_nodes.push_back(k);
        }
    }
    if (s.completed) {
        const auto g = analyse_completion(w, config);
        s.completion_gradient_max = g.protocol_max;
        s.completion_oracle_max = g.oracle_max;
        s.completion_gradient_matches_oracle = g.matches;
    }
    return trace;
}

std::vector<Vec3> agent_path(const Trace& trace, AgentId id) {
    std::vector<Vec3> path;
    for (const auto& r : trace.rows) {
        if (r.id == id) path.push_back(r.position);
    }
    return path;
}

SimConfig config_for_agents(const SimConfig& base, int agent_count) {
    SimConfig c = base;
    c.agent_count = agent_count;
    if (base.recipe) {
        const int per_level = base.recipe->base_node_count();
        if (agent_count < per_level || agent_count % per_level != 0) {
            throw ConfigError("agent count " + std::to_string(agent_count) + " is not a multiple of the " +
                              std::to_string(per_level) + "-node base");
        }
        c.recipe->levels = agent_count / per_level;
        c.spec = c.recipe->build();
    }
    return c;
}

std::vector<SweepRow> sweep(const SimConfig& base, std::span<const int> n_values, int trials_per_n, int threads) {
    if (n_values.empty()) throw ConfigError("sweep needs at least one N");
    if (trials_per_n < 1) throw ConfigError("sweep needs at least one trial per N");
    if (threads <= 0) {
        threads = 1;
        if (const char* env = std::getenv("SWARMFORM_THREADS")) threads = std::max(1, std::atoi(env));
    }

    std::vector<SimConfig> jobs;
    for (int n : n_values) {
        SimConfig c = config_for_agents(base, n);
        c.trace_every = 0;
        check_config(c);
        for (int t = 0; t < trials_per_n; ++t) {
            jobs.push_back(c);
            jobs.back().seed = base.seed + static_cast<std::uint64_t>(t);
        }
    }

    std::vector<long> ticks(jobs.size());
    std::vector<char> done(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<size_t> cursor{0};
    auto worker = [&] {
        for (size_t j = cursor++; j < jobs.size(); j = cursor++) {
            try {
                const auto trace = run_trial(jobs[j]);
                ticks[j] = trace.summary.completed ? trace.summary.completion_tick : jobs[j].effective_max_ticks();
                done[j] = trace.summary.completed;
            } catch (...) {
                errors[j] = std::current_exception();
            }
        }
    };
    const int pool_size = std::min<int>(threads, static_cast<int>(jobs.size()));
    std::vector<std::thread> pool;
    for (int t = 1; t < pool_size; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    std::vector<SweepRow> rows;
    size_t j = 0;
    for (int n : n_values) {
        SweepRow row;
        row.n = n;
        row.trials = trials_per_n;
        for (int t = 0; t < trials_per_n; ++t, ++j) {
            row.ticks.push_back(ticks[j]);
            row.completed += done[j] ? 1 : 0;
        }
        const double k = trials_per_n;
        row.mean_ticks = std::accumulate(row.ticks.begin(), row.ticks.end(), 0.0) / k;
        double ss = 0.0;
        for (long v : row.ticks) ss += (v - row.mean_ticks) * (v - row.mean_ticks);
        row.stddev_ticks = trials_per_n > 1 ? std::sqrt(ss / (k - 1)) : 0.0;
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(v.size());
    for (size_t i = 0; i < order.size();) {
        size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (size_t k = i; k <= j; ++k) rank[order[k]] = r;
        i = j + 1;
    }
    return rank;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
    if (x.size() < 2) return 0.0;
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace swarmform
