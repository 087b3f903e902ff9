#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "swarmform/agent.hpp"

using namespace swarmform;

namespace {

struct Fixture {
    SimConfig config = default_config();
    ResolvedStructure layout = resolve(config.spec);
    FsmContext ctx{config, layout};
};

NeighborView settled_view(AgentId id, const Vec3& at, const Vec3& from, NodeIndex node,
                          FsmState s = FsmState::kSettled) {
    return {id, at, Role::kA, s, node, distance(at, from)};
}

Envelope broadcast(AgentId id, const Vec3& at, int value) {
    return {id, at, GradientBroadcast{id, GradientValue::of(value), {}}};
}

AgentRecord moving(AgentId id, FsmState s, const Vec3& at, std::optional<AgentId> parent) {
    AgentRecord a;
    a.id = id;
    a.position = at;
    a.fsm_state = s;
    a.role = role_for(s);
    a.parent_id = parent;
    return a;
}

}  // namespace

TEST(Fsm, SearcherDetectsSettledAgent) {
    Fixture f;
    auto a = moving(3, FsmState::kSearch, {0, 0, 0}, std::nullopt);
    Perception p;
    p.agents = {settled_view(1, {35, 0, 0}, a.position, 4), settled_view(2, {20, 0, 0}, a.position, 5)};
    const auto out = fsm_step(a, p, f.ctx);
    EXPECT_EQ(out.next.fsm_state, FsmState::kApproach);
    EXPECT_EQ(out.next.role, Role::kB);
    EXPECT_EQ(out.next.parent_id, 2);
    EXPECT_EQ(out.event, FsmEvent::kDetected);
}

TEST(Fsm, SearcherIgnoresMovingAgentsAndCooldown) {
    Fixture f;
    auto a = moving(3, FsmState::kSearch, {0, 0, 0}, std::nullopt);
    Perception p;
    p.agents = {{7, {10, 0, 0}, Role::kB, FsmState::kFollow, std::nullopt, 10}};
    EXPECT_EQ(fsm_step(a, p, f.ctx).next.fsm_state, FsmState::kSearch);
    a.search_cooldown = 2;
    p.agents.push_back(settled_view(1, {20, 0, 0}, a.position, 0));
    const auto out = fsm_step(a, p, f.ctx);
    EXPECT_EQ(out.next.fsm_state, FsmState::kSearch);
    EXPECT_EQ(out.next.search_cooldown, 1);
}

TEST(Fsm, ApproachAtBeaconBids) {
    Fixture f;
    auto a = moving(3, FsmState::kApproach, {0, 30, 0}, 0);
    Perception p;
    p.agents = {settled_view(0, {0, 0, 0}, a.position, 0, FsmState::kSettleNeighbors)};
    p.messages = {broadcast(0, {0, 0, 0}, 0)};
    const auto out = fsm_step(a, p, f.ctx);
    EXPECT_EQ(out.next.fsm_state, FsmState::kBid);
    EXPECT_EQ(out.next.parent_id, 0);
}

TEST(Fsm, ApproachAtOrdinaryNodeFollows) {
    Fixture f;
    auto a = moving(3, FsmState::kApproach, {0, 30, 0}, 0);
    Perception p;
    p.agents = {settled_view(0, {0, 0, 0}, a.position, 0)};
    p.messages = {broadcast(0, {0, 0, 0}, 3)};
    EXPECT_EQ(fsm_step(a, p, f.ctx).next.fsm_state, FsmState::kFollow);
    a.position = {0, 39, 0};
    p.agents = {settled_view(0, {0, 0, 0}, a.position, 0)};
    EXPECT_EQ(fsm_step(a, p, f.ctx).next.fsm_state, FsmState::kApproach);
}

TEST(Fsm, FollowerReachingBeaconBids) {
    Fixture f;
    auto a = moving(3, FsmState::kFollow, {0, 30, 0}, 1);
    Perception p;
    p.agents = {settled_view(1, {0, 0, 0}, a.position, 2, FsmState::kSettleNeighbors)};
    p.messages = {broadcast(1, {0, 0, 0}, 0)};
    EXPECT_EQ(fsm_step(a, p, f.ctx).next.fsm_state, FsmState::kBid);
}

TEST(Fsm, FollowerReselectsNearestParent) {
    Fixture f;
    auto a = moving(3, FsmState::kFollow, {0, 30, 0}, 1);
    Perception p;
    p.agents = {settled_view(1, {0, 0, 0}, a.position, 2), settled_view(2, {10, 28, 0}, a.position, 3)};
    EXPECT_EQ(fsm_step(a, p, f.ctx).next.parent_id, 2);
}

TEST(Fsm, FollowerLosingParentReturnsToSearch) {
    Fixture f;
    auto a = moving(3, FsmState::kFollow, {0, 30, 0}, 1);
    const Perception empty;
    for (int t = 1; t < f.config.lost_ticks; ++t) {
        const auto out = fsm_step(a, empty, f.ctx);
        ASSERT_EQ(out.next.fsm_state, FsmState::kFollow) << "tick " << t;
        a = out.next;
    }
    const auto out = fsm_step(a, empty, f.ctx);
    EXPECT_EQ(out.next.fsm_state, FsmState::kSearch);
    EXPECT_EQ(out.next.role, Role::kC);
    EXPECT_FALSE(out.next.parent_id);
    EXPECT_EQ(out.event, FsmEvent::kParentLost);
}

TEST(Fsm, ParentReturningResetsTheLostTimer) {
    Fixture f;
    auto a = moving(3, FsmState::kFollow, {0, 30, 0}, 1);
    a.parent_lost_timer = f.config.lost_ticks - 1;
    Perception p;
    p.agents = {settled_view(1, {0, 0, 0}, a.position, 2)};
    const auto out = fsm_step(a, p, f.ctx);
    EXPECT_EQ(out.next.fsm_state, FsmState::kFollow);
    EXPECT_EQ(out.next.parent_lost_timer, 0);
}

TEST(Fsm, BidSessionHasOneWinner) {
    Fixture f;
    const Vec3 beacon_at{0, 0, 0};
    const Vec3 node_at = beacon_at + f.layout.offset(0, 1);
    Perception p;
    p.messages = {broadcast(0, beacon_at, 0), {0, beacon_at, BeaconOffer{0, 0, 1, 0}}};

    // First tick: both bidders announce.
    std::vector<AgentRecord> bidders{moving(4, FsmState::kBid, node_at + Vec3{0, 0, 5}, 0),
                                     moving(6, FsmState::kBid, node_at + Vec3{0, 0, 9}, 0)};
    std::vector<Envelope> bids;
    for (auto& b : bidders) {
        Perception q = p;
        q.agents = {settled_view(0, beacon_at, b.position, 0, FsmState::kSettleNeighbors)};
        const auto out = fsm_step(b, q, f.ctx);
        ASSERT_EQ(out.outgoing.size(), 1u);
        const auto* bid = std::get_if<Bid>(&out.outgoing[0]);
        ASSERT_NE(bid, nullptr);
        EXPECT_EQ(bid->target_node, 1);
        bids.push_back({b.id, b.position, *bid});
        b = out.next;
    }

    // Second tick: each hears the other's bid and resolves the session.
    int winners = 0;
    for (auto& b : bidders) {
        Perception q = p;
        q.agents = {settled_view(0, beacon_at, b.position, 0, FsmState::kSettleNeighbors)};
        for (const auto& other : bidders) {
            if (other.id != b.id) q.agents.push_back({other.id, other.position, Role::kB, FsmState::kBid, {}, 4});
        }
        for (const auto& e : bids) {
            if (e.sender != b.id) q.messages.push_back(e);
        }
        const auto out = fsm_step(b, q, f.ctx);
        if (out.next.fsm_state == FsmState::kSettleNeighbors) {
            ++winners;
            EXPECT_EQ(out.next.node_id, 1);
            EXPECT_EQ(out.event, FsmEvent::kWonBid);
            EXPECT_EQ(b.id, 6) << "highest bid (farther agent) wins by default";
        } else {
            EXPECT_EQ(out.event, FsmEvent::kLostBid);
            EXPECT_EQ(out.next.eta, -1);
        }
        check_record(out.next);
    }
    EXPECT_EQ(winners, 1);
}

TEST(Fsm, LoserIsRepelledThenSearches) {
    Fixture f;
    auto a = moving(4, FsmState::kBid, {0, 30, 0}, 0);
    a.eta = -1;
    a.target_node = 1;
    a.repel_timer = f.config.params.repel_ticks;
    Perception p;
    p.agents = {settled_view(0, {0, 0, 0}, a.position, 0, FsmState::kSettleNeighbors)};
    for (int t = 1; t < f.config.params.repel_ticks; ++t) {
        a = fsm_step(a, p, f.ctx).next;
        EXPECT_EQ(a.fsm_state, FsmState::kBid);
        EXPECT_EQ(a.eta, -1);
    }
    a = fsm_step(a, p, f.ctx).next;
    EXPECT_EQ(a.fsm_state, FsmState::kSearch);
    EXPECT_EQ(a.role, Role::kC);
}

TEST(Fsm, MessageFromOutsideRangeIsAnInvariantViolation) {
    Fixture f;
    auto a = moving(3, FsmState::kSearch, {0, 0, 0}, std::nullopt);
    Perception p;
    p.messages = {broadcast(1, {100, 0, 0}, 2)};
    EXPECT_THROW(fsm_step(a, p, f.ctx), InvariantViolation);
}

TEST(Fsm, DisabledAgentsDoNothing) {
    Fixture f;
    auto a = moving(3, FsmState::kSearch, {0, 0, 0}, std::nullopt);
    a.disabled = true;
    Perception p;
    p.agents = {settled_view(1, {20, 0, 0}, a.position, 0)};
    EXPECT_EQ(fsm_step(a, p, f.ctx).next, a);
}

TEST(Fsm, TotalOverRandomInputs) {
    Fixture f;
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-35, 35);
    std::uniform_int_distribution<int> state(1, 6);
    std::uniform_int_distribution<int> node(0, 29);
    std::uniform_int_distribution<int> value(0, 5);
    for (int trial = 0; trial < 3000; ++trial) {
        const auto s = static_cast<FsmState>(state(rng));
        AgentRecord a = moving(50, s, {0, 0, 0}, std::nullopt);
        if (role_for(s) == Role::kB) a.parent_id = 1;
        if (role_for(s) == Role::kA) {
            a.node_id = node(rng);
            a.parent_id = 1;
            a.parent_node = (*a.node_id + 1) % 30;
        }
        if (s == FsmState::kBid && trial % 2) a.target_node = node(rng);
        Perception p;
        for (AgentId id = 1; id <= 4; ++id) {
            const Vec3 at{u(rng) / 1.8, u(rng) / 1.8, u(rng) / 1.8};
            const auto ns = static_cast<FsmState>(state(rng));
            p.agents.push_back({id, at, role_for(ns), ns,
                                role_for(ns) == Role::kA ? std::optional<NodeIndex>(node(rng)) : std::nullopt,
                                at.norm()});
            if (role_for(ns) == Role::kA) p.messages.push_back(broadcast(id, at, value(rng)));
            if (ns == FsmState::kSettleNeighbors) p.messages.push_back({id, at, BeaconOffer{id, 0, node(rng), 0}});
            if (trial % 3 == 0) p.messages.push_back({id, at, Bid{id, node(rng), 10.0 * value(rng)}});
        }
        FsmOutput out;
        ASSERT_NO_THROW(out = fsm_step(a, p, f.ctx)) << "trial " << trial;
        ASSERT_NO_THROW(check_record(out.next)) << "trial " << trial;
    }
}

TEST(Bids, EvaluatesTheWeightedSum) {
    AgentRecord a;
    a.id = 2;
    EXPECT_EQ(compute_bid(a, {0, 0, 0}, 1, 1).value, 0.0);
    a.path_length_accum = 10;
    EXPECT_EQ(compute_bid(a, {5, 0, 0}, 1, 1).value, 15.0);
    a.path_length_accum = 3;
    EXPECT_EQ(compute_bid(a, {0, 4, 0}, 1, 2).value, 11.0);
}

TEST(Bids, SingleBidderWins) {
    const std::vector<Bid> bids{{7, 1, 3.0}};
    const auto out = resolve_bids(bids, BidOrder::kHighest);
    EXPECT_EQ(out.winner, 7);
    EXPECT_TRUE(out.losers.empty());
}

TEST(Bids, HighestWinsAndTiesGoToLowestId) {
    const std::vector<Bid> bids{{1, 1, 5.0}, {2, 1, 7.0}};
    EXPECT_EQ(resolve_bids(bids, BidOrder::kHighest).winner, 2);
    EXPECT_EQ(resolve_bids(bids, BidOrder::kHighest).losers, std::vector<AgentId>{1});
    EXPECT_EQ(resolve_bids(bids, BidOrder::kLowest).winner, 1);
    const std::vector<Bid> tie{{2, 1, 5.0}, {1, 1, 5.0}};
    EXPECT_EQ(resolve_bids(tie, BidOrder::kHighest).winner, 1);
    EXPECT_EQ(resolve_bids(tie, BidOrder::kLowest).winner, 1);
}

TEST(Bids, EmptySessionHasNoWinner) {
    EXPECT_FALSE(resolve_bids({}, BidOrder::kHighest).winner);
}

TEST(Bids, NearerBidderWinsUnderLowestOrder) {
    AgentRecord near, far;
    near.id = 9;
    far.id = 2;
    near.position = {1, 0, 0};
    far.position = {8, 0, 0};
    const std::vector<Bid> bids{compute_bid(far, {}, 1, 1), compute_bid(near, {}, 1, 1)};
    EXPECT_EQ(resolve_bids(bids, BidOrder::kLowest).winner, 9);
}

TEST(Bids, ExhaustiveSessionsHaveExactlyOneWinner) {
    const double grid[] = {0.0, 1.5, 2.0, 7.25, 30.0};
    for (int size = 1; size <= 4; ++size) {
        int total = 1;
        for (int i = 0; i < size; ++i) total *= 5;
        for (int code = 0; code < total; ++code) {
            std::vector<Bid> bids;
            std::vector<oracle::OracleBid> ref;
            for (int i = 0, c = code; i < size; ++i, c /= 5) {
                const AgentId id = (i * 7 + 3) % 11;  // ids out of order
                bids.push_back({id, 0, grid[c % 5]});
                ref.push_back({id, grid[c % 5]});
            }
            for (auto order : {BidOrder::kHighest, BidOrder::kLowest}) {
                const auto out = resolve_bids(bids, order);
                ASSERT_TRUE(out.winner);
                EXPECT_EQ(*out.winner, *oracle::bid_winner(ref, order == BidOrder::kHighest));
                EXPECT_EQ(out.losers.size() + 1, bids.size());
            }
        }
    }
}

TEST(Beacon, NoNonParentLinksSettlesImmediately) {
    const StructureSpec spec(2, 0, {{{0, 1}, {30, 0, 0}}, {{1, 0}, {30, 0, 3.14159}}});
    AgentRecord a;
    a.fsm_state = FsmState::kSettleNeighbors;
    a.role = Role::kA;
    a.node_id = 1;
    a.parent_node = 0;
    const auto t = beacon_settle_tick(a, spec, {}, {});
    EXPECT_FALSE(t.offer);
    EXPECT_EQ(t.next.fsm_state, FsmState::kSettled);
}

TEST(Beacon, OffersNeighborsInOrderUntilConfirmed) {
    const StructureSpec spec(3, 0, {{{0, 1}, {30, 0, 0}}, {{0, 2}, {30, 0, 1.0}}});
    AgentRecord a;
    a.id = 5;
    a.fsm_state = FsmState::kSettleNeighbors;
    a.role = Role::kA;
    a.node_id = 0;
    auto t = beacon_settle_tick(a, spec, {}, {});
    ASSERT_TRUE(t.offer);
    EXPECT_EQ(t.offer->offered_node, 1);
    EXPECT_EQ(t.offer->beacon_agent, 5);
    EXPECT_EQ(t.offer->gradient, 0);
    t = beacon_settle_tick(t.next, spec, {}, {});
    EXPECT_EQ(t.offer->offered_node, 1);
    const std::vector<Confirmation> first{{8, 0, 1}};
    t = beacon_settle_tick(t.next, spec, first, {});
    ASSERT_TRUE(t.offer);
    EXPECT_EQ(t.offer->offered_node, 2);
    const std::vector<Confirmation> second{{9, 0, 2}};
    t = beacon_settle_tick(t.next, spec, second, {});
    EXPECT_FALSE(t.offer);
    EXPECT_EQ(t.next.fsm_state, FsmState::kSettled);
}

TEST(Beacon, ForeignConfirmationWarns) {
    const StructureSpec spec(3, 0, {{{0, 1}, {30, 0, 0}}, {{1, 2}, {30, 0, 0}}});
    AgentRecord a;
    a.fsm_state = FsmState::kSettleNeighbors;
    a.role = Role::kA;
    a.node_id = 0;
    const std::vector<Confirmation> stray{{8, 0, 2}};
    const auto t = beacon_settle_tick(a, spec, stray, {});
    EXPECT_EQ(t.warnings.size(), 1u);
    EXPECT_EQ(t.offer->offered_node, 1);
}

TEST(Beacon, RingInteriorNodeOffersOnlyItsForwardNeighbor) {
    const auto spec = generate_ring(30, 30);
    for (NodeIndex k = 1; k < 29; ++k) {
        AgentRecord a;
        a.fsm_state = FsmState::kSettleNeighbors;
        a.role = Role::kA;
        a.node_id = k;
        const NodeIndex parent = k < 15 ? k - 1 : (k + 1) % 30;
        a.parent_node = parent;
        auto t = beacon_settle_tick(a, spec, {}, {});
        ASSERT_TRUE(t.offer) << "node " << k;
        const NodeIndex offered = t.offer->offered_node;
        EXPECT_NE(offered, parent);
        EXPECT_TRUE(spec.adjacent(k, offered));
        const std::vector<Confirmation> c{{1, k, offered}};
        t = beacon_settle_tick(t.next, spec, c, {});
        EXPECT_FALSE(t.offer) << "node " << k;
        EXPECT_EQ(t.next.fsm_state, FsmState::kSettled);
    }
}

TEST(Records, InvariantsAreChecked) {
    AgentRecord a;
    EXPECT_NO_THROW(check_record(a));
    a.parent_id = 3;
    EXPECT_THROW(check_record(a), InvariantViolation);
    a = {};
    a.fsm_state = FsmState::kFollow;
    a.role = Role::kB;
    EXPECT_THROW(check_record(a), InvariantViolation);
    a.parent_id = 1;
    EXPECT_NO_THROW(check_record(a));
    a.fsm_state = FsmState::kSettled;
    a.role = Role::kA;
    EXPECT_THROW(check_record(a), InvariantViolation);
    a.node_id = 4;
    EXPECT_NO_THROW(check_record(a));
}
