#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "swarmform/gradient.hpp"
#include "swarmform/shapespec.hpp"
#include "swarmform/vec3.hpp"

namespace swarmform {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Gains, distances and timing shared by the control laws. Defaults are the
/// reference planar/3D experiment settings; the stagnation, slack and timer
/// fields are local choices.
struct ControlParams {
    double alpha = 0.1;
    double beta = 0.6;
    double gamma = 0.3;
    double d_aa = 30.0;  // settled-settled spacing
    double d_ab = 30.0;  // settled-moving spacing (surface offset)
    double d1 = 40.0;    // potential cutoff
    double r_d = 40.0;   // detection radius
    double r_c = 40.0;   // communication radius
    double v_r = 0.8;
    double theta_r = 0.0;
    double psi_r = std::numbers::pi / 2;
    double dt = 1.0;
    double v_max = 1.6;
    double stagnation_eps = 8e-4;
    int stagnation_ticks = 30;
    /// Tolerance added to d_aa / d_ab wherever a "within d0" test decides a
    /// discrete event (gradient neighborhood, arrival at the surface). The
    /// potentials settle onto d0 asymptotically and never cross it exactly.
    double range_slack = 2.0;
    int repel_ticks = 5;
    /// Ticks an agent ignores the structure after a stagnation escape or a
    /// lost bid, so that it actually leaves before re-acquiring.
    int escape_walk_ticks = 50;

    bool operator==(const ControlParams&) const = default;
};

/// Throws ConfigError naming the first violated constraint.
void check_params(const ControlParams& p);

struct Bounds {
    Vec3 lo{0, 0, 0};
    Vec3 hi{400, 400, 400};

    Vec3 center() const { return (lo + hi) * 0.5; }
    bool contains(const Vec3& p, double tol = 0.0) const {
        return p.x >= lo.x - tol && p.x <= hi.x + tol && p.y >= lo.y - tol && p.y <= hi.y + tol &&
               p.z >= lo.z - tol && p.z <= hi.z + tol;
    }
    Vec3 clamp(const Vec3& p) const;
    bool operator==(const Bounds&) const = default;
};

enum class BidOrder { kHighest, kLowest };

std::string to_string(BidOrder order);
BidOrder parse_bid_order(const std::string& text);

/// Agents disabled at a given tick. Either explicit ids or a selector that is
/// resolved against the world at that tick:
///   "cluster"          - `count` settled agents on a chain of linked nodes,
///                        none of which borders an unfilled node or a beacon
///   "isolate-follower" - every settled agent a surface follower can see,
///                        except the non-beacon agent it is following
struct FailureEvent {
    long tick = 0;
    std::vector<AgentId> ids;
    std::string selector;
    int count = 0;

    bool operator==(const FailureEvent&) const = default;
};

/// Parametric description of a generated structure. `levels` > 1 extrudes the
/// ring/polygon into a prism.
struct ShapeRecipe {
    std::string base = "ring";  // ring | polygon
    int nodes = 30;             // ring
    int sides = 5;              // polygon
    int per_side = 7;           // polygon
    double spacing = 30.0;
    int levels = 1;
    std::optional<double> level_spacing;  // defaults to spacing

    StructureSpec build() const;
    int base_node_count() const;
    bool operator==(const ShapeRecipe&) const = default;
};

struct SimConfig {
    StructureSpec spec;
    std::optional<ShapeRecipe> recipe;  // how spec was produced, if generated
    std::string spec_path;              // or where it was loaded from
    int agent_count = 30;
    Bounds bounds;
    double initial_height = 10.0;
    std::uint64_t seed = 1;
    ControlParams params;
    double kappa1 = 1.0;
    double kappa2 = 1.0;
    int lost_ticks = 50;  // T_l
    std::optional<long> max_ticks;
    BidOrder bid_order = BidOrder::kHighest;
    std::vector<FailureEvent> failure_schedule;
    /// Where the root node is placed. Unset: the structure's horizontal
    /// centroid goes to the bounds center with the root at initial_height.
    std::optional<Vec3> root_position;
    /// Per-agent rows are kept every `trace_every` ticks (0 disables them).
    int trace_every = 1;

    long effective_max_ticks() const { return max_ticks.value_or(100L * agent_count); }
    bool operator==(const SimConfig&) const = default;
};

/// Circle of 30 with the reference parameters.
SimConfig default_config();

/// Throws ConfigError on an unusable configuration.
void check_config(const SimConfig& config);

}  // namespace swarmform
