"""Experiment harness: CLI, sweeps, synthetic data, metrics, and plots."""

from .metrics import MetricsRow, append_metrics, read_metrics, write_metrics
from .runner import (
    RunSpec,
    compare_em_direct,
    compare_rules,
    compare_structures,
    run_leg,
    run_sweep,
)
from .synth import SyntheticSpec, TrueProcess, gen_synthetic, load_sidecar

__all__ = [
    "MetricsRow",
    "RunSpec",
    "SyntheticSpec",
    "TrueProcess",
    "append_metrics",
    "compare_em_direct",
    "compare_rules",
    "compare_structures",
    "gen_synthetic",
    "load_sidecar",
    "read_metrics",
    "run_leg",
    "run_sweep",
    "write_metrics",
]
