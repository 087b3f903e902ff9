#include "swarmform/config.hpp"

#include <algorithm>
#include <cmath>

namespace swarmform {

Vec3 Bounds::clamp(const Vec3& p) const {
    return {std::clamp(p.x, lo.x, hi.x), std::clamp(p.y, lo.y, hi.y), std::clamp(p.z, lo.z, hi.z)};
}

std::string to_string(BidOrder order) {
    return order == BidOrder::kHighest ? "highest" : "lowest";
}

BidOrder parse_bid_order(const std::string& text) {
    if (text == "highest") return BidOrder::kHighest;
    if (text == "lowest") return BidOrder::kLowest;
    throw ConfigError("bid_order must be 'highest' or 'lowest', got '" + text + "'");
}

void check_params(const ControlParams& p) {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ConfigError(std::string("invalid parameters: ") + what);
    };
    require(p.alpha > 0 && p.beta > 0 && p.gamma > 0, "gains alpha, beta, gamma must be positive");
    require(p.d_aa > 0 && p.d_aa <= p.d_ab, "need 0 < d_aa <= d_ab");
    require(p.d_ab < p.d1 && p.d1 <= p.r_d, "need d_ab < d1 <= r_d");
    require(p.r_c > 0, "r_c must be positive");
    require(p.dt > 0, "dt must be positive");
    require(p.v_r > 0 && p.v_max > 0, "speeds must be positive");
    require(p.theta_r >= 0 && p.psi_r >= 0, "walk angle bounds must be non-negative");
    require(p.stagnation_eps >= 0 && p.stagnation_ticks > 0, "bad stagnation settings");
    require(p.range_slack >= 0, "range_slack must be non-negative");
    require(p.repel_ticks >= 1 && p.escape_walk_ticks >= 0, "bad timer settings");
}

StructureSpec ShapeRecipe::build() const {
    const StructureSpec loop = base == "ring"      ? generate_ring(nodes, spacing)
                               : base == "polygon" ? generate_polygon(sides, per_side, spacing)
                                                   : throw ConfigError("unknown shape base '" + base + "'");
    return extrude_prism(loop, levels, level_spacing.value_or(spacing));
}

int ShapeRecipe::base_node_count() const {
    return base == "ring" ? nodes : sides * (per_side - 1);
}

SimConfig default_config() {
    SimConfig c;
    c.recipe = ShapeRecipe{};
    c.spec = c.recipe->build();
    c.agent_count = 30;
    return c;
}

void check_config(const SimConfig& c) {
    check_params(c.params);
    if (c.agent_count < 1) throw ConfigError("agent_count must be at least 1");
    const Vec3 extent = c.bounds.hi - c.bounds.lo;
    if (!(extent.x > 0 && extent.y > 0 && extent.z > 0)) throw ConfigError("bounds are degenerate");
    if (c.kappa1 <= 0 || c.kappa2 <= 0) throw ConfigError("kappa1 and kappa2 must be positive");
    if (c.lost_ticks < 1) throw ConfigError("T_l must be at least 1 tick");
    if (c.max_ticks && *c.max_ticks < 0) throw ConfigError("max_ticks must be non-negative");
    if (c.trace_every < 0) throw ConfigError("trace_every must be non-negative");
    for (const auto& f : c.failure_schedule) {
        if (f.tick < 0) throw ConfigError("failure tick must be non-negative");
        if (!f.selector.empty() && f.selector != "cluster" && f.selector != "isolate-follower") {
            throw ConfigError("unknown failure selector '" + f.selector + "'");
        }
    }
    const auto report = validate_spec(c.spec);
    if (!report.ok()) throw ConfigError("structure spec invalid: " + report.violations.front());
}

}  // namespace swarmform
