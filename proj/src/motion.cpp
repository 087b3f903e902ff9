#include "swarmform/motion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace swarmform {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    return a;
}

Vec3 pair_sum(const Vec3& self, std::span<const Body> others, bool self_settled,
              const ControlParams& p) {
    Vec3 u;
    for (const auto& other : others) {
        if (other.role == Role::kC) continue;
        const Vec3 d = self - other.position;
        const double r = d.norm();
        if (r <= 0.0) throw std::domain_error("coincident agents");
        if (r >= p.d1) continue;
        const double d0 = self_settled && other.role == Role::kA ? p.d_aa : p.d_ab;
        u += d * (pair_force(r, d0, p.d1, p.alpha) / r);
    }
    return u;
}

}  // namespace

double pair_force(double r, double d0, double d1, double alpha) {
    if (!(r > 0.0)) throw std::domain_error("pair_force: non-positive separation");
    if (r >= d1) return 0.0;
    return -alpha * ((r - d0) + 1.0 / r - d0 / (r * r));
}

Vec3 node_attraction_force(const Vec3& agent_pos, const Vec3& node_pos, double beta, int eta) {
    return (agent_pos - node_pos) * (-static_cast<double>(eta) * beta);
}

Vec3 settling_control(const AgentRecord& agent, std::span<const Body> neighbors,
                      std::optional<Vec3> node_pos, const ControlParams& params) {
    Vec3 u = pair_sum(agent.position, neighbors, agent.role == Role::kA, params);
    if (node_pos) u += node_attraction_force(agent.position, *node_pos, params.beta, agent.eta);
    return u;
}

Vec3 surface_tangent(const Vec3& agent_pos, const GradientSample& parent,
                     std::span<const GradientSample> in_range_settled, double gamma) {
    Vec3 u;
    if (!parent.gradient.is_set()) return u;
    const double r_io = distance(agent_pos, parent.position);
    for (const auto& s : in_range_settled) {
        if (!s.gradient.is_set()) continue;
        const int drop = s.gradient.value() - parent.gradient.value();
        if (drop >= 0) continue;
        const Vec3 dir = (s.position - parent.position).normalized();
        u += dir * (0.5 * gamma * std::abs(drop) * r_io);
    }
    return u;
}

Vec3 surface_follow_control(const AgentRecord& agent, const GradientSample& parent,
                            std::span<const GradientSample> in_range_settled,
                            const ControlParams& params) {
    Vec3 u = surface_tangent(agent.position, parent, in_range_settled, params.gamma);
    for (const auto& s : in_range_settled) {
        const Vec3 d = agent.position - s.position;
        const double r = d.norm();
        if (r <= 0.0) throw std::domain_error("coincident agents");
        if (r >= params.d1) continue;
        u += d * (pair_force(r, params.d_ab, params.d1, params.alpha) / r);
    }
    return u;
}

double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Vec3 heading_vector(const Heading& h) {
    const double c = std::cos(h.theta);
    return {c * std::cos(h.psi), c * std::sin(h.psi), std::sin(h.theta)};
}

Heading redraw_heading(const Heading& around, std::mt19937_64& rng, const ControlParams& params) {
    const double dtheta = (2.0 * unit_uniform(rng) - 1.0) * params.theta_r;
    const double dpsi = (2.0 * unit_uniform(rng) - 1.0) * params.psi_r;
    return {std::clamp(around.theta + dtheta, -kPi / 2, kPi / 2), wrap_angle(around.psi + dpsi)};
}

WalkStep random_walk_step(const AgentRecord& agent, std::mt19937_64& rng,
                          std::span<const AgentId> in_range_agents, const Bounds& bounds,
                          const ControlParams& params) {
    WalkStep out;
    out.heading = agent.heading;
    out.seen.assign(in_range_agents.begin(), in_range_agents.end());
    std::sort(out.seen.begin(), out.seen.end());

    const bool newcomer = std::any_of(out.seen.begin(), out.seen.end(), [&](AgentId id) {
        return !std::binary_search(agent.seen.begin(), agent.seen.end(), id);
    });
    if (newcomer) out.heading = redraw_heading(out.heading, rng, params);

    // At a wall the heading is reflected, then redrawn around the reflection
    // and reflected again if the draw still points out of the box.
    const Vec3& p = agent.position;
    auto reflect = [&](Heading& h) {
        bool hit = false;
        const Vec3 v = heading_vector(h);
        if ((p.x >= bounds.hi.x && v.x > 0) || (p.x <= bounds.lo.x && v.x < 0)) {
            h.psi = wrap_angle(kPi - h.psi);
            hit = true;
        }
        const Vec3 w = heading_vector(h);
        if ((p.y >= bounds.hi.y && w.y > 0) || (p.y <= bounds.lo.y && w.y < 0)) {
            h.psi = wrap_angle(-h.psi);
            hit = true;
        }
        if ((p.z >= bounds.hi.z && w.z > 0) || (p.z <= bounds.lo.z && w.z < 0)) {
            h.theta = -h.theta;
            hit = true;
        }
        return hit;
    };
    if (reflect(out.heading)) {
        out.heading = redraw_heading(out.heading, rng, params);
        reflect(out.heading);
    }
    out.velocity = heading_vector(out.heading) * params.v_r;
    return out;
}

AgentRecord integrate(const AgentRecord& agent, const Vec3& control, const ControlParams& params) {
    if (!control.finite()) throw std::domain_error("integrate: non-finite control");
    AgentRecord next = agent;
    Vec3 v = control;
    const double speed = v.norm();
    if (speed > params.v_max) v *= params.v_max / speed;
    next.velocity = v;
    next.position = agent.position + v * params.dt;
    if (agent.role == Role::kB) next.path_length_accum += (v * params.dt).norm();
    return next;
}

StagnationCheck detect_stagnation(const AgentRecord& agent, const Vec3& control,
                                  const ControlParams& params) {
    StagnationCheck out;
    out.timer = control.norm() < params.stagnation_eps ? agent.stagnation_timer + 1 : 0;
    out.escape = out.timer >= params.stagnation_ticks;
    return out;
}

}  // namespace swarmform
