#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "swarmform/agent_record.hpp"
#include "swarmform/config.hpp"
#include "swarmform/gradient.hpp"
#include "swarmform/shapespec.hpp"

namespace swarmform {

class InvariantViolation : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

/// {i, k, e, 0}: beacon i at node k offers neighbor node e.
struct BeaconOffer {
    AgentId beacon_agent = -1;
    NodeIndex beacon_node = -1;
    NodeIndex offered_node = -1;
    int gradient = 0;
};

struct Bid {
    AgentId bidder = -1;
    NodeIndex target_node = -1;
    double value = 0.0;
};

/// Winner of node `settled_node`, offered by the beacon at `parent_node`.
struct Confirmation {
    AgentId settler = -1;
    NodeIndex parent_node = -1;
    NodeIndex settled_node = -1;
};

using Message = std::variant<GradientBroadcast, BeaconOffer, Bid, Confirmation>;

/// A message as delivered: sender and where it was sent from.
struct Envelope {
    AgentId sender = -1;
    Vec3 origin;
    Message payload;
};

struct NeighborView {
    AgentId id = -1;
    Vec3 position;
    Role role = Role::kC;
    FsmState state = FsmState::kSearch;
    std::optional<NodeIndex> node;
    double distance = 0.0;
};

/// What one agent sees at the start of a tick: live agents within r_d and
/// last tick's messages sent from within r_c. Both sorted by sender id.
struct Perception {
    std::vector<NeighborView> agents;
    std::vector<Envelope> messages;

    const NeighborView* find(AgentId id) const;
    /// Nearest settled agent, lowest id on ties.
    const NeighborView* nearest_settled() const;
    GradientValue gradient_of(AgentId id) const;
    const GradientBroadcast* broadcast_from(AgentId id) const;
    const BeaconOffer* offer_from(AgentId id) const;
};

struct FsmContext {
    const SimConfig& config;
    const ResolvedStructure& layout;
};

enum class FsmEvent { kNone, kDetected, kWonBid, kLostBid, kParentLost, kOfferWithdrawn, kNeighborsSettled };

struct FsmOutput {
    AgentRecord next;
    std::vector<Message> outgoing;
    FsmEvent event = FsmEvent::kNone;
    std::vector<std::string> warnings;
};

/// One controller tick. Unlisted (state, input) pairs leave the state as is.
/// Throws InvariantViolation if a message originates outside r_c.
FsmOutput fsm_step(const AgentRecord& agent, const Perception& perception, const FsmContext& ctx);

Bid compute_bid(const AgentRecord& agent, const Vec3& node_position, double kappa1, double kappa2);

struct BidOutcome {
    std::optional<AgentId> winner;
    std::vector<AgentId> losers;
};

/// Highest (or lowest) value wins; exact ties go to the lowest id.
BidOutcome resolve_bids(std::span<const Bid> bids, BidOrder order);

struct BeaconTick {
    AgentRecord next;
    std::optional<BeaconOffer> offer;
    std::vector<std::string> warnings;
};

/// Offers the first neighbor in row k (skipping the parent node and neighbors
/// known settled) until it is confirmed; with nothing left to offer the agent
/// moves on to S6.
BeaconTick beacon_settle_tick(const AgentRecord& agent, const StructureSpec& spec,
                              std::span<const Confirmation> confirmations,
                              std::span<const NeighborView> settled_in_range);

/// Drops everything tied to the structure and returns to the random walk,
/// ignoring settled agents for `cooldown` ticks.
void enter_search(AgentRecord& agent, int cooldown);

/// Throws InvariantViolation if the state/role/parent/node combination is illegal.
void check_record(const AgentRecord& agent);

}  // namespace swarmform
