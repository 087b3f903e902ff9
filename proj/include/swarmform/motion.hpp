#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>

#include "swarmform/agent_record.hpp"
#include "swarmform/config.hpp"

namespace swarmform {

/// Radial force -dU/dr of the pair potential, positive pushing apart.
/// Zero at d0 and for r >= d1. Throws std::domain_error for r <= 0.
double pair_force(double r, double d0, double d1, double alpha);

/// -grad of (eta/2) beta |agent - node|^2.
Vec3 node_attraction_force(const Vec3& agent_pos, const Vec3& node_pos, double beta, int eta);

/// Another agent as seen by the control laws.
struct Body {
    Vec3 position;
    Role role = Role::kA;
};

/// Pair forces against every A/B neighbor inside d1 (d_aa between two settled
/// agents, d_ab otherwise), plus the node term when node_pos is given.
/// Throws std::domain_error on a coincident neighbor.
Vec3 settling_control(const AgentRecord& agent, std::span<const Body> neighbors,
                      std::optional<Vec3> node_pos, const ControlParams& params);

struct GradientSample {
    Vec3 position;
    GradientValue gradient;
};

/// Tangential surface-following term: for every settled agent with a gradient
/// below the parent's, a pull along parent->that agent weighted by the drop
/// and by the agent-parent distance.
Vec3 surface_tangent(const Vec3& agent_pos, const GradientSample& parent,
                     std::span<const GradientSample> in_range_settled, double gamma);

/// surface_tangent plus d_ab pair forces against the settled agents, which
/// hold the follower at the surface offset.
Vec3 surface_follow_control(const AgentRecord& agent, const GradientSample& parent,
                            std::span<const GradientSample> in_range_settled,
                            const ControlParams& params);

/// Uniform in [0, 1) from the top 53 bits, identical across standard libraries.
double unit_uniform(std::mt19937_64& rng);

Vec3 heading_vector(const Heading& h);

/// Draws a heading within the bounded angles around `around`.
Heading redraw_heading(const Heading& around, std::mt19937_64& rng, const ControlParams& params);

struct WalkStep {
    Vec3 velocity;
    Heading heading;
    std::vector<AgentId> seen;
};

/// Constant-speed walk. A new heading is drawn when an agent not seen last
/// tick enters detection range; the heading is reflected at the box walls.
WalkStep random_walk_step(const AgentRecord& agent, std::mt19937_64& rng,
                          std::span<const AgentId> in_range_agents, const Bounds& bounds,
                          const ControlParams& params);

/// Velocity = control clamped to v_max; explicit Euler step. Accumulates path
/// length in S2-S4. Throws std::domain_error on a non-finite control.
AgentRecord integrate(const AgentRecord& agent, const Vec3& control, const ControlParams& params);

struct StagnationCheck {
    int timer = 0;
    bool escape = false;
};

StagnationCheck detect_stagnation(const AgentRecord& agent, const Vec3& control,
                                  const ControlParams& params);

}  // namespace swarmform
