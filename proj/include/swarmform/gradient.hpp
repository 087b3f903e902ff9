#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "swarmform/vec3.hpp"

namespace swarmform {

using AgentId = int;

/// Hop count from the nearest beacon, or unset.
class GradientValue {
  public:
    constexpr GradientValue() = default;
    static constexpr GradientValue unset() { return {}; }
    static constexpr GradientValue of(int hops) { return GradientValue(hops); }

    constexpr bool is_set() const { return value_ >= 0; }
    constexpr int value() const { return value_; }
    constexpr int value_or(int fallback) const { return is_set() ? value_ : fallback; }

    constexpr bool operator==(const GradientValue&) const = default;

  private:
    constexpr explicit GradientValue(int v) : value_(v < 0 ? -1 : v) {}
    int value_ = -1;
};

inline std::ostream& operator<<(std::ostream& os, const GradientValue& g) {
    return g.is_set() ? os << g.value() : os << '-';
}

/// A settled neighbor of the sender holding a lower value. Relayed with the
/// sender's own value so that surface followers can steer toward nodes
/// beyond their own detection range.
struct DownhillNeighbor {
    AgentId id = -1;
    Vec3 position;
    GradientValue value;
};

struct GradientBroadcast {
    AgentId sender = -1;
    GradientValue value;
    std::vector<DownhillNeighbor> downhill;
};

/// One synchronous round of the surface gradient for a settled agent.
///
/// Beacons pin 0. Otherwise the value becomes 1 + the smallest neighbor value
/// that is strictly below the previous broadcast, over settled neighbors at
/// distance <= d0. When no neighbor is strictly below (including the first
/// contact of an unset agent) the value is re-derived as 1 + the smallest
/// in-range value, so stale values rise after a beacon retires. With no set
/// neighbor in range the previous value is held. A value above max_value is
/// dropped back to unset, which ends count-to-infinity in beacon-less pieces.
GradientValue gradient_step(GradientValue self_prev, bool is_beacon,
                            std::span<const GradientValue> neighbor_values,
                            std::span<const double> neighbor_distances, double d0,
                            int max_value);

/// Multi-source BFS hop distance over the graph linking points at distance <= d0.
std::vector<GradientValue> gradient_fixpoint_oracle(std::span<const Vec3> settled_positions,
                                                    std::span<const int> beacon_indices,
                                                    double d0);

struct GradientIteration {
    std::vector<GradientValue> values;
    int rounds = 0;  // rounds until no value changed
    bool converged = false;
};

/// Runs synchronous gradient_step rounds over a frozen configuration until
/// nothing changes or max_rounds is hit.
GradientIteration iterate_gradient(std::span<const Vec3> positions,
                                   std::span<const int> beacon_indices, double d0,
                                   std::vector<GradientValue> initial, int max_rounds);

}  // namespace swarmform
