#include "swarmform/agent.hpp"

#include <algorithm>
#include <cmath>

namespace swarmform {

std::string_view state_name(FsmState s) {
    switch (s) {
        case FsmState::kSearch: return "S1";
        case FsmState::kApproach: return "S2";
        case FsmState::kFollow: return "S3";
        case FsmState::kBid: return "S4";
        case FsmState::kSettleNeighbors: return "S5";
        case FsmState::kSettled: return "S6";
    }
    return "S?";
}

char role_name(Role r) {
    switch (r) {
        case Role::kA: return 'A';
        case Role::kB: return 'B';
        case Role::kC: return 'C';
    }
    return '?';
}

const NeighborView* Perception::find(AgentId id) const {
    const auto it = std::lower_bound(agents.begin(), agents.end(), id,
                                     [](const NeighborView& v, AgentId x) { return v.id < x; });
    return it != agents.end() && it->id == id ? &*it : nullptr;
}

const NeighborView* Perception::nearest_settled() const {
    const NeighborView* best = nullptr;
    for (const auto& v : agents) {
        if (v.role != Role::kA) continue;
        if (!best || v.distance < best->distance) best = &v;
    }
    return best;
}

const GradientBroadcast* Perception::broadcast_from(AgentId id) const {
    for (const auto& m : messages) {
        if (m.sender != id) continue;
        if (const auto* g = std::get_if<GradientBroadcast>(&m.payload)) return g;
    }
    return nullptr;
}

GradientValue Perception::gradient_of(AgentId id) const {
    const auto* g = broadcast_from(id);
    return g ? g->value : GradientValue::unset();
}

const BeaconOffer* Perception::offer_from(AgentId id) const {
    for (const auto& m : messages) {
        if (m.sender != id) continue;
        if (const auto* o = std::get_if<BeaconOffer>(&m.payload)) return o;
    }
    return nullptr;
}

Bid compute_bid(const AgentRecord& agent, const Vec3& node_position, double kappa1, double kappa2) {
    return {agent.id, agent.target_node.value_or(-1),
            kappa1 * agent.path_length_accum + kappa2 * distance(agent.position, node_position)};
}

BidOutcome resolve_bids(std::span<const Bid> bids, BidOrder order) {
    BidOutcome out;
    if (bids.empty()) return out;
    const Bid* best = &bids.front();
    for (const auto& b : bids) {
        const bool better = order == BidOrder::kHighest ? b.value > best->value : b.value < best->value;
        if (better || (b.value == best->value && b.bidder < best->bidder)) best = &b;
    }
    out.winner = best->bidder;
    for (const auto& b : bids) {
        if (b.bidder != best->bidder) out.losers.push_back(b.bidder);
    }
    return out;
}

BeaconTick beacon_settle_tick(const AgentRecord& agent, const StructureSpec& spec,
                              std::span<const Confirmation> confirmations,
                              std::span<const NeighborView> settled_in_range) {
    BeaconTick out{agent, std::nullopt, {}};
    auto& a = out.next;
    if (a.fsm_state != FsmState::kSettleNeighbors || !a.node_id) return out;
    const NodeIndex k = *a.node_id;
    const auto& row = spec.row(k);
    auto in_row = [&](NodeIndex e) { return std::binary_search(row.begin(), row.end(), e); };
    auto mark = [&](NodeIndex e) {
        if (std::find(a.confirmed.begin(), a.confirmed.end(), e) == a.confirmed.end()) {
            a.confirmed.push_back(e);
        }
    };

    for (const auto& c : confirmations) {
        if (in_row(c.settled_node)) {
            mark(c.settled_node);
        } else if (c.parent_node == k) {
            out.warnings.push_back("agent " + std::to_string(a.id) + ": confirmation for node " +
                                   std::to_string(c.settled_node) + " not in row " + std::to_string(k));
        }
    }
    for (const auto& v : settled_in_range) {
        if (v.role == Role::kA && v.node && in_row(*v.node)) mark(*v.node);
    }

    a.offering.reset();
    for (NodeIndex e : row) {
        if (a.parent_node && e == *a.parent_node) continue;
        if (std::find(a.confirmed.begin(), a.confirmed.end(), e) != a.confirmed.end()) continue;
        a.offering = e;
        out.offer = BeaconOffer{a.id, k, e, 0};
        return out;
    }
    a.fsm_state = FsmState::kSettled;
    a.role = Role::kA;
    return out;
}

void check_record(const AgentRecord& a) {
    auto fail = [&](const char* what) {
        throw InvariantViolation("agent " + std::to_string(a.id) + " in " +
                                 std::string(state_name(a.fsm_state)) + ": " + what);
    };
    switch (a.fsm_state) {
        case FsmState::kSearch:
            if (a.role != Role::kC) fail("role must be C");
            if (a.parent_id) fail("parent must be unset");
            break;
        case FsmState::kApproach:
        case FsmState::kFollow:
        case FsmState::kBid:
            if (a.role != Role::kB) fail("role must be B");
            if (!a.parent_id) fail("parent must be set");
            break;
        case FsmState::kSettleNeighbors:
        case FsmState::kSettled:
            if (a.role != Role::kA) fail("role must be A");
            if (!a.node_id) fail("node must be set");
            break;
    }
}

void enter_search(AgentRecord& a, int cooldown) {
    a.fsm_state = FsmState::kSearch;
    a.role = Role::kC;
    a.parent_id.reset();
    a.node_id.reset();
    a.parent_node.reset();
    a.target_node.reset();
    a.offering.reset();
    a.confirmed.clear();
    a.last_bid.reset();
    a.gradient = GradientValue::unset();
    a.eta = 1;
    a.parent_lost_timer = 0;
    a.stagnation_timer = 0;
    a.repel_timer = 0;
    a.search_cooldown = cooldown;
    a.seen.clear();
}

namespace {

void enter_follow(AgentRecord& a) {
    a.fsm_state = FsmState::kFollow;
    a.role = Role::kB;
    a.target_node.reset();
    a.last_bid.reset();
    a.eta = 1;
}

// Returns true once the parent has been missing for T_l ticks.
bool parent_missing(AgentRecord& a, bool present, int lost_ticks) {
    a.parent_lost_timer = present ? 0 : a.parent_lost_timer + 1;
    return a.parent_lost_timer >= lost_ticks;
}

class Controller {
  public:
    Controller(const AgentRecord& agent, const Perception& p, const FsmContext& ctx)
        : p_(p), ctx_(ctx), cfg_(ctx.config), prm_(ctx.config.params) {
        out_.next = agent;
    }

    FsmOutput run() {
        auto& a = out_.next;
        if (a.disabled) return std::move(out_);
        for (const auto& m : p_.messages) {
            if (distance(m.origin, a.position) > prm_.r_c + 1e-9) {
                throw InvariantViolation("agent " + std::to_string(a.id) + " received a message from agent " +
                                         std::to_string(m.sender) + " outside r_c");
            }
        }
        switch (a.fsm_state) {
            case FsmState::kSearch: search(); break;
            case FsmState::kApproach: approach(); break;
            case FsmState::kFollow: follow(); break;
            case FsmState::kBid: bid(); break;
            case FsmState::kSettleNeighbors: settle_neighbors(); break;
            case FsmState::kSettled: settled(); break;
        }
        return std::move(out_);
    }

  private:
    AgentRecord& a() { return out_.next; }

    void search() {
        auto& a = this->a();
        if (a.search_cooldown > 0) {
            --a.search_cooldown;
            return;
        }
        const auto* near = p_.nearest_settled();
        if (!near) return;
        a.fsm_state = FsmState::kApproach;
        a.role = Role::kB;
        a.parent_id = near->id;
        a.path_length_accum = 0.0;
        a.parent_lost_timer = 0;
        a.stagnation_timer = 0;
        out_.event = FsmEvent::kDetected;
    }

    // S2/S3 follow whichever settled agent is nearest.
    const NeighborView* reselect_parent() {
        auto& a = this->a();
        const auto* near = p_.nearest_settled();
        if (near) a.parent_id = near->id;
        if (parent_missing(a, near != nullptr, cfg_.lost_ticks)) {
            enter_search(a, 0);
            out_.event = FsmEvent::kParentLost;
        }
        return near;
    }

    void approach() {
        const auto* parent = reselect_parent();
        if (!parent || a().fsm_state != FsmState::kApproach) return;
        if (parent->distance > prm_.d_ab + prm_.range_slack) return;
        if (p_.gradient_of(parent->id) == GradientValue::of(0)) {
            enter_bid(*parent);
        } else {
            enter_follow(a());
        }
    }

    void follow() {
        const auto* parent = reselect_parent();
        if (!parent || a().fsm_state != FsmState::kFollow) return;
        if (p_.gradient_of(parent->id) == GradientValue::of(0)) enter_bid(*parent);
    }

    void enter_bid(const NeighborView& beacon) {
        auto& a = this->a();
        a.fsm_state = FsmState::kBid;
        a.role = Role::kB;
        a.parent_id = beacon.id;
        a.target_node.reset();
        a.last_bid.reset();
        a.eta = 1;
        a.repel_timer = 0;
        bid_round(beacon);
    }

    void bid() {
        auto& a = this->a();
        const auto* beacon = p_.find(*a.parent_id);
        if (beacon && beacon->role != Role::kA) beacon = nullptr;
        if (parent_missing(a, beacon != nullptr, cfg_.lost_ticks)) {
            enter_search(a, 0);
            out_.event = FsmEvent::kParentLost;
            return;
        }
        if (a.repel_timer > 0) {
            if (beacon && a.target_node) a.target_position = node_position(*beacon, *a.target_node);
            if (--a.repel_timer == 0) {
                const Vec3 away = a.position - a.target_position;
                enter_search(a, prm_.escape_walk_ticks);
                if (away.norm() > 0) a.heading.psi = std::atan2(away.y, away.x);
            }
            return;
        }
        if (!beacon) return;
        bid_round(*beacon);
    }

    void bid_round(const NeighborView& beacon) {
        auto& a = this->a();
        if (a.target_node) {
            for (const auto& m : p_.messages) {
                const auto* c = std::get_if<Confirmation>(&m.payload);
                if (c && c->settled_node == *a.target_node && c->settler != a.id) {
                    withdraw();
                    return;
                }
            }
        }
        const auto* offer = p_.offer_from(beacon.id);
        if (!offer) {
            if (p_.gradient_of(beacon.id) != GradientValue::of(0)) withdraw();
            return;
        }
        if (a.target_node != offer->offered_node) {
            a.target_node = offer->offered_node;
            a.last_bid.reset();
        }
        a.target_position = node_position(beacon, *a.target_node, offer->beacon_node);

        if (!a.last_bid) {
            const Bid b = compute_bid(a, a.target_position, cfg_.kappa1, cfg_.kappa2);
            a.last_bid = b.value;
            out_.outgoing.emplace_back(b);
            return;
        }

        std::vector<Bid> bids{{a.id, *a.target_node, *a.last_bid}};
        for (const auto& m : p_.messages) {
            const auto* b = std::get_if<Bid>(&m.payload);
            if (b && b->bidder != a.id && b->target_node == *a.target_node && p_.find(b->bidder)) {
                bids.push_back(*b);
            }
        }
        const auto outcome = resolve_bids(bids, cfg_.bid_order);
        if (outcome.winner == a.id) {
            const NodeIndex k = *a.target_node;
            a.fsm_state = FsmState::kSettleNeighbors;
            a.role = Role::kA;
            a.node_id = k;
            a.parent_node = offer->beacon_node;
            a.target_node.reset();
            a.last_bid.reset();
            a.gradient = GradientValue::of(0);
            a.eta = 1;
            a.stagnation_timer = 0;
            a.confirmed.clear();
            a.offering.reset();
            out_.outgoing.emplace_back(Confirmation{a.id, offer->beacon_node, k});
            out_.event = FsmEvent::kWonBid;
        } else {
            a.eta = -1;
            a.repel_timer = std::max(1, prm_.repel_ticks);
            a.last_bid.reset();
            out_.event = FsmEvent::kLostBid;
        }
    }

    // Node taken or no longer offered: keep following the surface.
    void withdraw() {
        enter_follow(a());
        out_.event = FsmEvent::kOfferWithdrawn;
    }

    Vec3 node_position(const NeighborView& beacon, NodeIndex node,
                       std::optional<NodeIndex> beacon_node = std::nullopt) const {
        const NodeIndex from = beacon_node ? *beacon_node : beacon.node.value_or(-1);
        if (from < 0) return a_const().target_position;
        return beacon.position + ctx_.layout.offset(from, node);
    }

    const AgentRecord& a_const() const { return out_.next; }

    // Keeps a settled agent's target tied to a settled neighbor. Returns false
    // after the agent has been cut off for T_l ticks.
    bool hold_position() {
        auto& a = this->a();
        if (!a.parent_id) return true;
        const NeighborView* anchor = p_.find(*a.parent_id);
        if (anchor && (anchor->role != Role::kA || !anchor->node)) anchor = nullptr;
        if (!anchor) {
            for (const auto& v : p_.agents) {
                if (v.role == Role::kA && v.node && ctx_.config.spec.adjacent(*v.node, *a.node_id)) {
                    anchor = &v;
                    break;
                }
            }
        }
        if (anchor) a.target_position = anchor->position + ctx_.layout.offset(*anchor->node, *a.node_id);
        if (parent_missing(a, anchor != nullptr, cfg_.lost_ticks)) {
            enter_search(a, 0);
            out_.event = FsmEvent::kParentLost;
            return false;
        }
        return true;
    }

    void settle_neighbors() {
        if (!hold_position()) return;
        // Offsets to the neighbors assume the beacon sits on its own node.
        if (distance(a().position, a().target_position) > prm_.range_slack) return;
        std::vector<Confirmation> confirmations;
        for (const auto& m : p_.messages) {
            if (const auto* c = std::get_if<Confirmation>(&m.payload)) confirmations.push_back(*c);
        }
        std::vector<NeighborView> settled;
        for (const auto& v : p_.agents) {
            if (v.role == Role::kA) settled.push_back(v);
        }
        auto tick = beacon_settle_tick(a(), ctx_.config.spec, confirmations, settled);
        out_.next = std::move(tick.next);
        out_.warnings = std::move(tick.warnings);
        if (tick.offer) {
            out_.outgoing.emplace_back(*tick.offer);
        } else {
            out_.event = FsmEvent::kNeighborsSettled;
        }
    }

    void settled() { hold_position(); }

    const Perception& p_;
    const FsmContext& ctx_;
    const SimConfig& cfg_;
    const ControlParams& prm_;
    FsmOutput out_;
};

}  // namespace

FsmOutput fsm_step(const AgentRecord& agent, const Perception& perception, const FsmContext& ctx) {
    return Controller(agent, perception, ctx).run();
}

}  // namespace swarmform
