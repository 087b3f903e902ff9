#include "swarmform/gradient.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <stdexcept>

namespace swarmform {

GradientValue gradient_step(GradientValue self_prev, bool is_beacon,
                            std::span<const GradientValue> neighbor_values,
                            std::span<const double> neighbor_distances, double d0,
                            int max_value) {
    if (is_beacon) return GradientValue::of(0);
    if (neighbor_values.size() != neighbor_distances.size()) {
        throw std::invalid_argument("gradient_step: neighbor collections differ in length");
    }

    constexpr int kNone = std::numeric_limits<int>::max();
    const int prev = self_prev.value_or(kNone);
    int below = kNone;      // smallest value strictly below prev
    int smallest = kNone;   // smallest value in range
    for (size_t j = 0; j < neighbor_values.size(); ++j) {
        const auto& v = neighbor_values[j];
        if (!v.is_set() || neighbor_distances[j] > d0) continue;
        smallest = std::min(smallest, v.value());
        if (v.value() < prev) below = std::min(below, v.value());
    }
    if (smallest == kNone) return self_prev;
    const int next = (below != kNone ? below : smallest) + 1;
    return next > max_value ? GradientValue::unset() : GradientValue::of(next);
}

std::vector<GradientValue> gradient_fixpoint_oracle(std::span<const Vec3> settled_positions,
                                                    std::span<const int> beacon_indices,
                                                    double d0) {
    const size_t n = settled_positions.size();
    std::vector<GradientValue> dist(n);
    std::queue<size_t> queue;
    for (int b : beacon_indices) {
        const auto idx = static_cast<size_t>(b);
        if (!dist.at(idx).is_set()) {
            dist[idx] = GradientValue::of(0);
            queue.push(idx);
        }
    }
    while (!queue.empty()) {
        const size_t u = queue.front();
        queue.pop();
        for (size_t v = 0; v < n; ++v) {
            if (v == u || dist[v].is_set()) continue;
            if (distance(settled_positions[u], settled_positions[v]) <= d0) {
                dist[v] = GradientValue::of(dist[u].value() + 1);
                queue.push(v);
            }
        }
    }
    return dist;
}

GradientIteration iterate_gradient(std::span<const Vec3> positions,
                                   std::span<const int> beacon_indices, double d0,
                                   std::vector<GradientValue> initial, int max_rounds) {
    const size_t n = positions.size();
    if (initial.size() != n) throw std::invalid_argument("iterate_gradient: initial size mismatch");
    std::vector<bool> beacon(n, false);
    for (int b : beacon_indices) beacon.at(static_cast<size_t>(b)) = true;

    std::vector<std::vector<size_t>> nbrs(n);
    std::vector<std::vector<double>> dists(n);
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double d = distance(positions[i], positions[j]);
            if (d <= d0) {
                nbrs[i].push_back(j);
                dists[i].push_back(d);
            }
        }
    }

    GradientIteration out;
    out.values = std::move(initial);
    std::vector<GradientValue> vals;
    for (int round = 0; round < max_rounds; ++round) {
        std::vector<GradientValue> next(n);
        bool changed = false;
        for (size_t i = 0; i < n; ++i) {
            vals.clear();
            for (size_t j : nbrs[i]) vals.push_back(out.values[j]);
            next[i] = gradient_step(out.values[i], beacon[i], vals, dists[i], d0,
                                    static_cast<int>(n));
            changed = changed || next[i] != out.values[i];
        }
        out.values = std::move(next);
        if (!changed) {
            out.converged = true;
            return out;
        }
        out.rounds = round + 1;
    }
    return out;
}

}  // namespace swarmform
