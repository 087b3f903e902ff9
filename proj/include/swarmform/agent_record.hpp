#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "swarmform/gradient.hpp"
#include "swarmform/shapespec.hpp"
#include "swarmform/vec3.hpp"

namespace swarmform {

enum class FsmState {
    kSearch = 1,        // S1: random walk
    kApproach = 2,      // S2: move toward the nearest settled agent
    kFollow = 3,        // S3: follow the surface gradient
    kBid = 4,           // S4: bid for the node offered by a beacon
    kSettleNeighbors = 5,  // S5: beacon, settling its neighbors
    kSettled = 6,       // S6: settled node
};

/// A: in the structure, B: approaching or following it, C: searching.
enum class Role { kA, kB, kC };

std::string_view state_name(FsmState s);  // "S1".."S6"
char role_name(Role r);                   // 'A', 'B', 'C'

inline Role role_for(FsmState s) {
    switch (s) {
        case FsmState::kSearch: return Role::kC;
        case FsmState::kApproach:
        case FsmState::kFollow:
        case FsmState::kBid: return Role::kB;
        default: return Role::kA;
    }
}

/// Random-walk heading: elevation and azimuth.
struct Heading {
    double theta = 0.0;
    double psi = 0.0;
    bool operator==(const Heading&) const = default;
};

struct AgentRecord {
    AgentId id = 0;
    Vec3 position;
    Vec3 velocity;
    FsmState fsm_state = FsmState::kSearch;
    Role role = Role::kC;
    GradientValue gradient;
    std::optional<AgentId> parent_id;
    std::optional<NodeIndex> node_id;       // node held (S5, S6)
    std::optional<NodeIndex> parent_node;   // node of the beacon that settled us
    std::optional<NodeIndex> target_node;   // node bid for (S4)
    Vec3 target_position;                   // node location being approached (S4-S6)
    int eta = 1;                            // +1 attraction, -1 repulsion from target
    int parent_lost_timer = 0;
    int stagnation_timer = 0;
    int repel_timer = 0;
    int search_cooldown = 0;                // S1 ticks before the structure is noticed again
    double path_length_accum = 0.0;
    std::optional<double> last_bid;
    std::optional<NodeIndex> offering;      // neighbor currently offered (S5)
    std::vector<NodeIndex> confirmed;       // neighbors known settled (S5)
    std::vector<AgentId> seen;              // agents in range last tick (S1)
    Heading heading;
    bool disabled = false;

    bool is_settled() const { return role == Role::kA; }
    bool operator==(const AgentRecord&) const = default;
};

}  // namespace swarmform
