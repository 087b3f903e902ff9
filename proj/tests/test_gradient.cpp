#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "swarmform/gradient.hpp"

using namespace swarmform;

namespace {

using G = GradientValue;

std::vector<oracle::P3> to_oracle(const std::vector<Vec3>& pts) {
    std::vector<oracle::P3> out;
    for (const auto& p : pts) out.push_back({p.x, p.y, p.z});
    return out;
}

std::vector<int> as_ints(const std::vector<G>& values) {
    std::vector<int> out;
    for (const auto& v : values) out.push_back(v.value_or(-1));
    return out;
}

struct Scene {
    std::vector<Vec3> points;
    std::vector<int> beacons;
};

Scene random_scene(std::mt19937_64& rng, double d0) {
    std::uniform_int_distribution<int> count(1, 60);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Scene s;
    const int n = count(rng);
    // Box edge grows with n so that sparse and dense graphs both appear.
    const double edge = d0 * (1.0 + 4.0 * unit(rng)) * std::cbrt(n);
    for (int i = 0; i < n; ++i) s.points.push_back({edge * unit(rng), edge * unit(rng), edge * 0.3 * unit(rng)});
    std::uniform_int_distribution<int> nb(1, std::min(n, 4));
    std::uniform_int_distribution<int> pick(0, n - 1);
    for (int b = nb(rng); b > 0; --b) s.beacons.push_back(pick(rng));
    return s;
}

}  // namespace

TEST(GradientStep, BeaconPinsZero) {
    const std::vector<G> vals{G::of(3), G::of(7)};
    const std::vector<double> dists{10, 10};
    EXPECT_EQ(gradient_step(G::of(5), true, vals, dists, 30, 100), G::of(0));
    EXPECT_EQ(gradient_step(G::unset(), true, {}, {}, 30, 100), G::of(0));
}

TEST(GradientStep, TakesSmallestQualifyingPlusOne) {
    const std::vector<G> vals{G::of(0), G::of(3), G::of(7)};
    const std::vector<double> dists{30, 20, 10};
    EXPECT_EQ(gradient_step(G::of(5), false, vals, dists, 30, 100), G::of(1));
}

TEST(GradientStep, IgnoresNeighborsBeyondRange) {
    const std::vector<G> vals{G::of(0), G::of(3)};
    const std::vector<double> dists{30.5, 20};
    EXPECT_EQ(gradient_step(G::of(5), false, vals, dists, 30, 100), G::of(4));
}

TEST(GradientStep, UnsetAdoptsFirstContact) {
    const std::vector<G> vals{G::of(4), G::unset()};
    const std::vector<double> dists{25, 5};
    EXPECT_EQ(gradient_step(G::unset(), false, vals, dists, 30, 100), G::of(5));
}

TEST(GradientStep, NoNeighborHoldsPrevious) {
    EXPECT_EQ(gradient_step(G::of(6), false, {}, {}, 30, 100), G::of(6));
    const std::vector<G> vals{G::of(1)};
    const std::vector<double> far{80};
    EXPECT_EQ(gradient_step(G::of(6), false, vals, far, 30, 100), G::of(6));
}

TEST(GradientStep, NothingBelowRederivesFromSmallest) {
    const std::vector<G> vals{G::of(6), G::of(9)};
    const std::vector<double> dists{10, 10};
    EXPECT_EQ(gradient_step(G::of(4), false, vals, dists, 30, 100), G::of(7));
}

TEST(GradientStep, ValuesAboveTheCapDropToUnset) {
    const std::vector<G> vals{G::of(10)};
    const std::vector<double> dists{10};
    EXPECT_EQ(gradient_step(G::of(3), false, vals, dists, 30, 10), G::unset());
}

TEST(GradientStep, MismatchedInputsThrow) {
    const std::vector<G> vals{G::of(1)};
    EXPECT_THROW(gradient_step(G::of(3), false, vals, {}, 30, 10), std::invalid_argument);
}

TEST(Oracle, SingleIsolatedBeacon) {
    const std::vector<Vec3> pts{{0, 0, 0}};
    const std::vector<int> b{0};
    EXPECT_EQ(as_ints(gradient_fixpoint_oracle(pts, b, 30)), std::vector<int>{0});
}

TEST(Oracle, RingOfThirtyHasEccentricityFifteen) {
    const double radius = oracle::ring_radius(30, 30);
    std::vector<Vec3> pts;
    for (int k = 0; k < 30; ++k) {
        const double a = 2 * std::numbers::pi * k / 30;
        pts.push_back({radius * std::cos(a), radius * std::sin(a), 0});
    }
    const std::vector<int> b{0};
    // Chords are exactly d0 up to rounding; allow the rounding.
    const auto values = gradient_fixpoint_oracle(pts, b, 30 + 1e-9);
    int max = 0;
    for (const auto& v : values) max = std::max(max, v.value());
    EXPECT_EQ(max, 15);
}

TEST(Oracle, TwoBeaconsOnAChain) {
    std::vector<Vec3> pts;
    for (int k = 0; k < 10; ++k) pts.push_back({30.0 * k, 0, 0});
    const std::vector<int> b{0, 9};
    EXPECT_EQ(as_ints(gradient_fixpoint_oracle(pts, b, 30)), (std::vector<int>{0, 1, 2, 3, 4, 4, 3, 2, 1, 0}));
}

TEST(Oracle, UnreachableStaysUnset) {
    const std::vector<Vec3> pts{{0, 0, 0}, {30, 0, 0}, {100, 0, 0}};
    const std::vector<int> b{0};
    EXPECT_EQ(as_ints(gradient_fixpoint_oracle(pts, b, 30)), (std::vector<int>{0, 1, -1}));
}

TEST(Iterate, ChainWithEndBeaconCountsUp) {
    std::vector<Vec3> pts;
    for (int k = 0; k < 12; ++k) pts.push_back({30.0 * k, 0, 0});
    const std::vector<int> b{0};
    const auto it = iterate_gradient(pts, b, 30, std::vector<G>(12), 13);
    EXPECT_TRUE(it.converged);
    EXPECT_LE(it.rounds, 12);
    std::vector<int> expect;
    for (int k = 0; k < 12; ++k) expect.push_back(k);
    EXPECT_EQ(as_ints(it.values), expect);
}

TEST(Iterate, MatchesIndependentBfsOnRandomScenes) {
    std::mt19937_64 rng(20240611);
    const double d0 = 30;
    for (int trial = 0; trial < 200; ++trial) {
        const auto s = random_scene(rng, d0);
        const int n = static_cast<int>(s.points.size());
        const auto it = iterate_gradient(s.points, s.beacons, d0, std::vector<G>(static_cast<size_t>(n)), n + 1);
        ASSERT_TRUE(it.converged) << "trial " << trial;
        EXPECT_LE(it.rounds, n) << "trial " << trial;
        EXPECT_EQ(as_ints(it.values), oracle::bfs_hops(to_oracle(s.points), s.beacons, d0)) << "trial " << trial;
    }
}

TEST(Iterate, RecoversAfterBeaconSetChanges) {
    std::mt19937_64 rng(77);
    const double d0 = 30;
    for (int trial = 0; trial < 100; ++trial) {
        const auto before = random_scene(rng, d0);
        const int n = static_cast<int>(before.points.size());
        auto settled = iterate_gradient(before.points, before.beacons, d0, std::vector<G>(static_cast<size_t>(n)),
                                        n + 1);
        ASSERT_TRUE(settled.converged);
        std::uniform_int_distribution<int> pick(0, n - 1);
        const std::vector<int> moved{pick(rng)};
        // Agents reachable from the new beacon hold the new distances after
        // n rounds. Cut-off agents are outside the claim: an isolated agent
        // keeps whatever it last held.
        const auto after = iterate_gradient(before.points, moved, d0, settled.values, n);
        const auto truth = oracle::bfs_hops(to_oracle(before.points), moved, d0);
        for (int i = 0; i < n; ++i) {
            if (truth[i] >= 0) EXPECT_EQ(after.values[i].value_or(-1), truth[i]) << "trial " << trial << " agent " << i;
        }
    }
}

TEST(Iterate, BeaconStaysZeroEveryRound) {
    std::vector<Vec3> pts;
    for (int k = 0; k < 6; ++k) pts.push_back({20.0 * k, 0, 0});
    const std::vector<int> b{3};
    std::vector<G> initial(6, G::of(2));
    for (int r = 1; r <= 6; ++r) {
        const auto it = iterate_gradient(pts, b, 30, initial, r);
        EXPECT_EQ(it.values[3], G::of(0));
    }
}

TEST(Iterate, AgreesWithLibraryOracle) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto s = random_scene(rng, 30);
        EXPECT_EQ(as_ints(gradient_fixpoint_oracle(s.points, s.beacons, 30)),
                  oracle::bfs_hops(to_oracle(s.points), s.beacons, 30));
    }
}
