"""Evaluation harness: horizon MAE, drift curves, seed sweeps, footprint and result files."""
from .metrics import anchor_stops, drift_curve, mae_at_horizon, rollout_trace, step_bound_violations
from .sweep import (
    acceptance_checks,
    BenchSettings,
    EvalConfig,
    EvalReport,
    build_forecaster,
    evaluate_forecaster,
    qualitative_rows,
    seed_sweep,
    summarize,
)
from .footprint import footprint_report, footprint_rows
from .results import write_csv, write_manifest, write_metrics, write_rollouts, verify_manifest

__all__ = [
    'acceptance_checks',
    'anchor_stops',
    'drift_curve',
    'mae_at_horizon',
    'rollout_trace',
    'step_bound_violations',
    'BenchSettings',
    'EvalConfig',
    'EvalReport',
    'build_forecaster',
    'evaluate_forecaster',
    'qualitative_rows',
    'seed_sweep',
    'summarize',
    'footprint_report',
    'footprint_rows',
    'write_csv',
    'write_manifest',
    'write_metrics',
    'write_rollouts',
    'verify_manifest',
]
