#pragma once

#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "swarmform/agent.hpp"
#include "swarmform/config.hpp"
#include "swarmform/shapespec.hpp"

namespace swarmform {

/// Structure geometry with its placement in the world.
struct PlacedStructure {
    ResolvedStructure layout;  // root at the origin
    Vec3 translation;          // world = layout + translation

    Vec3 node_position(NodeIndex k) const {
        return layout.positions.at(static_cast<size_t>(k)) + translation;
    }
};

PlacedStructure place_structure(const SimConfig& config);

struct WorldState {
    long tick = 0;
    std::vector<AgentRecord> agents;                 // indexed by id
    std::vector<Envelope> messages;                  // sent during the previous tick
    std::map<NodeIndex, AgentId> settled_nodes;
    std::vector<std::mt19937_64> rngs;               // one stream per agent
    std::shared_ptr<const PlacedStructure> structure;
    std::optional<AgentId> last_settler;
};

struct TickRecord {
    long tick = 0;
    int settled = 0;
    int beacons = 0;
    int messages = 0;
    int role_a = 0;
    int role_b = 0;
    int role_c = 0;
    int max_gradient = -1;
};

struct AgentRow {
    long tick = 0;
    AgentId id = 0;
    Vec3 position;
    FsmState state = FsmState::kSearch;
    Role role = Role::kC;
    GradientValue gradient;
    std::optional<NodeIndex> node;
};

struct TraceEvent {
    long tick = 0;
    AgentId agent = -1;
    std::string kind;  // escape | parent-lost | lost-bid | won-bid | failure | warning
    std::string detail;
};

struct RunSummary {
    bool completed = false;
    long completion_tick = -1;
    long ticks = 0;
    int nodes = 0;
    int agents = 0;
    int settled = 0;
    std::uint64_t seed = 0;
    int max_gradient = -1;           // live protocol values at the last tick
    int residual_beacons = 0;        // S5 agents at the last tick
    /// Protocol iterated to its fixpoint on the relaxed final structure with
    /// the last settler as the single beacon, and the BFS ground truth.
    int completion_gradient_max = -1;
    int completion_oracle_max = -1;
    bool completion_gradient_matches_oracle = false;
    int escape_events = 0;
    int parent_losses = 0;
    int lost_bids = 0;
    int warnings = 0;
    std::vector<NodeIndex> dead_nodes;
    std::vector<NodeIndex> unfilled_nodes;
};

struct Trace {
    std::vector<TickRecord> ticks;
    std::vector<AgentRow> rows;
    std::vector<TraceEvent> events;
    RunSummary summary;
};

/// Throws ConfigError on an invalid config.
WorldState init_world(const SimConfig& config);

struct StepReport {
    TickRecord record;
    std::vector<TraceEvent> events;
};

/// Advances the world one tick: perception, gradient round, controller,
/// control laws, stagnation check, integration, message hand-off.
/// Throws InvariantViolation (with a diagnostic) if the world goes bad.
StepReport step(WorldState& world, const SimConfig& config);

bool formation_complete(const WorldState& world, const SimConfig& config);

Trace run_trial(const SimConfig& config);

/// Marks agents failed: they stop moving and broadcasting and drop out of
/// every perception. Their nodes stay occupied. Throws std::out_of_range on
/// an unknown id.
void inject_failures(WorldState& world, std::span<const AgentId> agent_ids);

/// Resolves a scheduled failure event to concrete ids (selectors are
/// evaluated against the current world). Empty if nothing qualifies.
std::vector<AgentId> select_failures(const WorldState& world, const SimConfig& config,
                                     const FailureEvent& event, std::string* note = nullptr);

Perception perceive(const WorldState& world, const SimConfig& config, AgentId id);

struct SweepRow {
    int n = 0;
    double mean_ticks = 0.0;
    double stddev_ticks = 0.0;
    int completed = 0;
    int trials = 0;
    std::vector<long> ticks;
};

/// Config for an N-agent trial: generated prisms get N / base_nodes levels.
SimConfig config_for_agents(const SimConfig& base, int agent_count);

/// trials_per_n seeded trials per N (seed = base seed + trial index).
/// Timed-out trials count at max_ticks. threads <= 0 reads SWARMFORM_THREADS.
std::vector<SweepRow> sweep(const SimConfig& base, std::span<const int> n_values,
                            int trials_per_n, int threads = 0);

double spearman(std::span<const double> x, std::span<const double> y);

/// Positions of one agent across the recorded rows.
std::vector<Vec3> agent_path(const Trace& trace, AgentId id);

}  // namespace swarmform
