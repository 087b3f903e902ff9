"""Deterministic simulator of distributed multi-agent 3D structure formation."""

from ._core import (
    ConfigError,
    InvariantViolation,
    RunSummary,
    SimConfig,
    SpecError,
    StructureSpec,
    SweepRow,
    Trace,
    extrude_prism,
    generate_polygon,
    generate_ring,
    gradient_step,
    iterate_gradient,
    load_spec,
    node_attraction_force,
    pair_force,
    polygon_advisories,
    resolve_bids,
    run_trial,
    spearman,
    sweep,
)

__all__ = [
    "ConfigError",
    "InvariantViolation",
    "RunSummary",
    "SimConfig",
    "SpecError",
    "StructureSpec",
    "SweepRow",
    "Trace",
    "extrude_prism",
    "generate_polygon",
    "generate_ring",
    "gradient_step",
    "iterate_gradient",
    "load_spec",
    "node_attraction_force",
    "pair_force",
    "polygon_advisories",
    "resolve_bids",
    "run_trial",
    "spearman",
    "sweep",
]
