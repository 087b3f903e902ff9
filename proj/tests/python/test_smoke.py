import math
from pathlib import Path

import pytest

import swarmform as sf

CONFIGS = Path(__file__).resolve().parents[2] / "configs"


def test_ring_geometry():
    ring = sf.generate_ring(30, 30.0)
    assert ring.node_count == 30
    assert ring.violations() == []
    pts = ring.positions()
    for a, b in zip(pts, pts[1:] + pts[:1]):
        assert math.dist(a, b) == pytest.approx(30.0, abs=1e-9)
    assert sf.StructureSpec.from_text(ring.to_text()) == ring


def test_prism_and_advisories():
    prism = sf.extrude_prism(sf.generate_polygon(5, 7, 30.0), 5, 30.0)
    assert prism.node_count == 150
    assert sf.polygon_advisories(5) == []
    assert len(sf.polygon_advisories(4)) == 1
    with pytest.raises(sf.SpecError):
        sf.generate_ring(2, 30.0)


def test_gradient_on_a_chain():
    pts = [(30.0 * k, 0.0, 0.0) for k in range(8)]
    values, rounds, converged = sf.iterate_gradient(pts, [0], 30.0, 9)
    assert converged
    assert values == list(range(8))
    assert sf.gradient_step(None, False, [], [], 30.0, 10) is None


def test_forces_and_bids():
    assert sf.pair_force(30.0, 30.0, 40.0, 0.1) == 0.0
    assert sf.pair_force(20.0, 30.0, 40.0, 0.1) > 0.0
    assert sf.node_attraction_force((1.0, 0.0, 0.0), (0.0, 0.0, 0.0), 0.6, 1) == pytest.approx((-0.6, 0.0, 0.0))
    winner, losers = sf.resolve_bids([(3, 1.0), (1, 2.0), (2, 2.0)], "highest")
    assert winner == 1
    assert sorted(losers) == [2, 3]
    assert sf.resolve_bids([(3, 1.0), (1, 2.0)], "lowest")[0] == 3


def test_circle_run_completes_and_is_deterministic():
    cfg = sf.SimConfig.load(str(CONFIGS / "circle30.ini"))
    cfg.seed = 3
    cfg.trace_every = 50
    a = sf.run_trial(cfg)
    b = sf.run_trial(cfg)
    assert a.summary.completed
    assert a.summary.settled == 30
    assert a.summary.completion_gradient_max == 15
    assert a.trace_text() == b.trace_text()
    counts = a.settled_counts()
    assert counts[-1] == 30


def test_config_errors_are_line_anchored():
    with pytest.raises(sf.ConfigError, match=r"^<text>:2:"):
        sf.SimConfig.from_text("spec = generated\nagents = many\n")


def test_failures_round_trip():
    cfg = sf.SimConfig()
    cfg.failures = ["500 cluster 3", "10 ids 1 2"]
    assert cfg.failures == ["500 cluster 3", "10 ids 1 2"]
    with pytest.raises(sf.ConfigError):
        cfg.failures = ["later cluster 3"]


def test_sweep_rows():
    cfg = sf.SimConfig()
    cfg.max_ticks = 200
    rows = sf.sweep(cfg, [30, 60], trials=2, threads=1)
    assert [r.n for r in rows] == [30, 60]
    assert all(r.trials == 2 and len(r.ticks) == 2 for r in rows)
    assert sf.spearman([1, 2, 3], [3, 5, 9]) == pytest.approx(1.0)
