"""Multi-seed experiment: generate, split, train every model, evaluate.

Every (seed, model) cell is independent: the series depends only on the
seed and each model draws its initialization from a seed derived from
(seed, model name), so cells can run in any order or in parallel and
reports are returned sorted by (seed, model order).
"""
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from src.config import (
    BASELINE_DRIFT_RATIO_MIN,
    BENCH_MODELS,
    COMET_DRIFT_RATIO_LIMIT,
    COMET_MAE1_RATIO_LIMIT,
    DEFAULT_ANCHOR_STRIDE,
    DEFAULT_DRIFT_HORIZONS,
    DEFAULT_K,
    DEFAULT_LATENT_DIM,
    DEFAULT_LONG_LEN,
    DEFAULT_ROLLOUT_HORIZON,
    DEFAULT_SEEDS,
    DEFAULT_SHORT_HORIZONS,
)
from src.baselines import (
    CometForecaster,
    Forecaster,
    KnnConfig,
    KnnForecaster,
    LstmConfig,
    LstmForecaster,
    MlpConfig,
    MlpForecaster,
    PersistenceForecaster,
)
from src.core.errors import ConfigError
from src.core.series import SplitSpec, TimeSeries, WindowSpec, as_values, split
from src.datagen import GenConfig, generate
from src.training.trainer import TrainConfig
from .metrics import anchored_rollouts, drift_curve, mae_at_horizon, rollout_trace, step_bound_violations

QUALITATIVE_COLUMNS = ["seed", "model", "metric", "value", "limit", "passed"]
UNSTABLE_BASELINES = ("mlp", "lstm")


@dataclass(frozen=True)
class EvalConfig:
    horizons_short: Tuple[int, ...] = DEFAULT_SHORT_HORIZONS
    drift_horizons: Tuple[int, ...] = DEFAULT_DRIFT_HORIZONS
    rollout_horizon: int = DEFAULT_ROLLOUT_HORIZON
    anchor_stride: int = DEFAULT_ANCHOR_STRIDE
    seeds: Tuple[int, ...] = DEFAULT_SEEDS
    warmup: int = DEFAULT_LONG_LEN

    def __post_init__(self):
        for name in ("horizons_short", "drift_horizons"):
            horizons = tuple(sorted({int(h) for h in getattr(self, name)}))
            if not horizons or horizons[0] < 1:
                raise ConfigError(f"{name} must be non-empty and >= 1, got {getattr(self, name)}")
            object.__setattr__(self, name, horizons)
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.rollout_horizon < 1 or self.anchor_stride < 1 or self.warmup < 1:
            raise ConfigError("rollout_horizon, anchor_stride and warmup must be >= 1")

    @property
    def longest_horizon(self) -> int:
        return max(self.horizons_short[-1], self.drift_horizons[-1])


@dataclass(frozen=True)
class BenchSettings:
    """Model hyperparameters for a sweep; per-seed copies get their seed replaced."""

    window_spec: WindowSpec = field(default_factory=WindowSpec)
    split_spec: SplitSpec = field(default_factory=SplitSpec)
    train: TrainConfig = field(default_factory=TrainConfig)
    knn: KnnConfig = field(default_factory=KnnConfig)
    mlp: MlpConfig = field(default_factory=MlpConfig)
    lstm: LstmConfig = field(default_factory=LstmConfig)
    latent_dim: int = DEFAULT_LATENT_DIM
    k: int = DEFAULT_K


@dataclass
class EvalReport:
    """Everything measured for one (seed, model) cell."""

    seed: int
    model: str
    mae: Dict[int, float]
    drift_curve: List[Tuple[int, float]]
    param_bytes: int
    memory_bytes: int
    rollout_trace: Optional[pd.DataFrame] = None
    bound_violations: int = 0

    def metric_rows(self) -> List[dict]:
        rows = [{"seed": self.seed, "model": self.model, "metric": "mae", "horizon": h, "value": v}
                for h, v in sorted(self.mae.items())]
        rows += [{"seed": self.seed, "model": self.model, "metric": "drift", "horizon": h, "value": v}
                 for h, v in self.drift_curve]
        return rows

    def drift_at(self, horizon: int) -> float:
        return dict(self.drift_curve)[horizon]


MODEL_BUILDERS: Dict[str, Callable[[int, BenchSettings], Forecaster]] = {
    "knn": lambda seed, s: KnnForecaster(s.knn),
    "mlp": lambda seed, s: MlpForecaster(replace(s.mlp, seed=seed)),
    "lstm": lambda seed, s: LstmForecaster(replace(s.lstm, seed=seed)),
    "comet": lambda seed, s: CometForecaster(s.window_spec, replace(s.train, seed=seed), s.latent_dim, s.k),
    "persistence": lambda seed, s: PersistenceForecaster(),
}


def build_forecaster(name: str, seed: int, settings: BenchSettings = None) -> Forecaster:
    """Unfitted forecaster ``name`` whose initialization is tied to ``seed``."""
    if name not in MODEL_BUILDERS:
        raise ConfigError(f"unknown model '{name}' (choose from {', '.join(MODEL_BUILDERS)})")
    return MODEL_BUILDERS[name](seed, settings or BenchSettings())


def evaluate_forecaster(model: Forecaster, name: str, seed: int, test: TimeSeries,
                        eval_config: EvalConfig = None, trace: bool = True) -> EvalReport:
    """Measure short-horizon MAE, the drift curve, the rollout trace and the footprint of a fitted model.

    Every rollout is also checked against the model's single-step bound,
    when it has one.
    """
    eval_config = eval_config or EvalConfig()
    stride, warmup = eval_config.anchor_stride, eval_config.warmup
    bound = model.step_bound()
    violations = 0

    rollouts = anchored_rollouts(model, test, eval_config.drift_horizons[-1], stride, warmup)
    curve = drift_curve(model, test, eval_config.drift_horizons, stride, warmup, rollouts=rollouts)
    mae = {h: mae_at_horizon(model, test, h, stride, warmup) for h in eval_config.horizons_short}

    trace_frame = None
    if trace:
        trace_frame = rollout_trace(model, test, warmup, eval_config.rollout_horizon)

    if bound is not None:
        stops, predictions, _ = rollouts
        values = as_values(test)
        violations += step_bound_violations(predictions, values[stops - 1], bound)
        if trace_frame is not None:
            violations += step_bound_violations(trace_frame["predicted"].to_numpy(),
                                                values[warmup - 1:warmup], bound)

    return EvalReport(seed, name, mae, curve, model.parameter_bytes(), model.memory_bytes(),
                      trace_frame, violations)


def run_cell(seed: int, name: str, gen_template: GenConfig, eval_config: EvalConfig,
             settings: BenchSettings, verbose: bool = False,
             series: Optional[TimeSeries] = None) -> EvalReport:
    """Generate (unless given), split, fit and evaluate one (seed, model) cell."""
    series = series if series is not None else generate(replace(gen_template, seed=seed))
    train, validation, test = split(series, settings.split_spec, settings.window_spec)
    model = build_forecaster(name, seed, settings)
    model.fit(train, validation if validation.length else None, verbose=verbose)
    return evaluate_forecaster(model, name, seed, test, eval_config)


def _run_cell_args(args) -> EvalReport:
    return run_cell(*args)


def seed_sweep(models: Sequence[str] = BENCH_MODELS, gen_template: GenConfig = None,
               eval_config: EvalConfig = None, settings: BenchSettings = None,
               jobs: int = 1, verbose: bool = True) -> List[EvalReport]:
    """Train and evaluate every model on every seed.

    Args:
        models: Model names from :data:`MODEL_BUILDERS`
        gen_template: Generator config; its seed is replaced per run
        eval_config: Horizons, stride and seeds
        settings: Model hyperparameters
        jobs: Worker processes (1 runs in-process)
        verbose: Print progress

    Returns:
        One EvalReport per (seed, model), ordered by seed then by ``models``
    """
    gen_template = gen_template or GenConfig()
    eval_config = eval_config or EvalConfig()
    settings = settings or BenchSettings()
    models = list(models)
    for name in models:
        if name not in MODEL_BUILDERS:
            raise ConfigError(f"unknown model '{name}' (choose from {', '.join(MODEL_BUILDERS)})")
    cells = [(seed, name) for seed in eval_config.seeds for name in models]

    if jobs > 1:
        if verbose:
            print(f"🔧 Running {len(cells)} cells on {jobs} workers...")
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell_args, [
                (seed, name, gen_template, eval_config, settings, False) for seed, name in cells]))
        keyed = dict(zip(cells, results))
    else:
        keyed = {}
        for seed in eval_config.seeds:
            series = generate(replace(gen_template, seed=seed))
            for name in models:
                if verbose:
                    print(f"\n[{len(keyed) + 1}/{len(cells)}] seed={seed} model={name}")
                keyed[(seed, name)] = run_cell(seed, name, gen_template, eval_config, settings,
                                               verbose, series)
                if verbose:
                    report = keyed[(seed, name)]
                    print(f"✓ mae@1={report.mae.get(1, float('nan')):.6g}  "
                          f"drift@{report.drift_curve[-1][0]}={report.drift_curve[-1][1]:.6g}")
    return [keyed[cell] for cell in cells]


def summarize(reports: Sequence[EvalReport]) -> pd.DataFrame:
    """Mean and worst case over seeds of every (model, metric, horizon)."""
    rows = [row for report in reports for row in report.metric_rows()]
    if not rows:
        return pd.DataFrame(columns=["model", "metric", "horizon", "mean", "worst"])
    frame = pd.DataFrame(rows)
    order = list(dict.fromkeys(frame["model"]))
    summary = (frame.groupby(["model", "metric", "horizon"], sort=False)["value"]
               .agg(mean="mean", worst="max").reset_index())
    summary["model"] = pd.Categorical(summary["model"], categories=order, ordered=True)
    return summary.sort_values(["model", "metric", "horizon"], kind="stable").reset_index(drop=True)


def _limit(model: str, metric: str, comet_name: str) -> Optional[Tuple[str, float]]:
    """Comparison and threshold a qualitative row is judged by, or None."""
    if metric == "bound_violations":
        return ("<=", 0.0)
    if model == comet_name and metric == "drift_ratio_200_10":
        return ("<=", COMET_DRIFT_RATIO_LIMIT)
    if model == comet_name and metric == "mae1_vs_best_baseline":
        return ("<=", COMET_MAE1_RATIO_LIMIT)
    if model in UNSTABLE_BASELINES and metric == "drift_ratio_200_20":
        return (">=", BASELINE_DRIFT_RATIO_MIN)
    return None


def qualitative_rows(reports: Sequence[EvalReport], comet_name: str = "comet") -> pd.DataFrame:
    """Drift ratios, COMET's one-step MAE against the best baseline, and bound violations.

    Rows ``seed,model,metric,value,limit,passed``; a metric is omitted when
    its horizons were not evaluated. ``limit`` and ``passed`` are empty for
    rows that no threshold applies to.
    """
    rows = []
    by_seed: Dict[int, List[EvalReport]] = {}
    for report in reports:
        by_seed.setdefault(report.seed, []).append(report)

    def add(seed, model, metric, value):
        limit = _limit(model, metric, comet_name)
        row = {"seed": seed, "model": model, "metric": metric, "value": value, "limit": "", "passed": None}
        if limit is not None:
            op, threshold = limit
            row["limit"] = f"{op}{threshold:g}"
            row["passed"] = bool(value <= threshold if op == "<=" else value >= threshold)
        rows.append(row)

    for seed, cell in by_seed.items():
        baselines_mae1 = [r.mae[1] for r in cell if r.model != comet_name and 1 in r.mae]
        for report in cell:
            horizons = dict(report.drift_curve)
            for low in (10, 20):
                if 200 in horizons and low in horizons and horizons[low] > 0:
                    add(seed, report.model, f"drift_ratio_200_{low}", horizons[200] / horizons[low])
            if report.model == comet_name and baselines_mae1 and 1 in report.mae:
                best = min(baselines_mae1)
                if best > 0:
                    add(seed, report.model, "mae1_vs_best_baseline", report.mae[1] / best)
            add(seed, report.model, "bound_violations", float(report.bound_violations))
    return pd.DataFrame(rows, columns=QUALITATIVE_COLUMNS)


def acceptance_checks(qualitative: pd.DataFrame, comet_name: str = "comet") -> pd.DataFrame:
    """Fold the per-seed qualitative rows into bench-level pass/fail checks.

    * ``comet_drift_bounded`` - COMET drift(200) <= 3 x drift(10) on every seed
    * ``comet_mae1_competitive`` - COMET one-step MAE within 2.5x of the best baseline on every seed
    * ``step_bounds_hold`` - no rollout step moved further than its model's bound
    * ``baseline_drift_unstable`` - MLP or LSTM drift(200) >= 3 x drift(20) on at least half the seeds

    A check is left out when none of its rows were produced.

    Returns:
        DataFrame ``check,passed,detail``
    """
    checks = []

    def select(metric, models=None):
        rows = qualitative[qualitative["metric"] == metric]
        return rows if models is None else rows[rows["model"].isin(models)]

    comet_drift = select("drift_ratio_200_10", [comet_name])
    if len(comet_drift):
        checks.append(("comet_drift_bounded", bool(comet_drift["passed"].all()),
                       f"worst drift(200)/drift(10) = {comet_drift['value'].max():.3g} "
                       f"(limit {COMET_DRIFT_RATIO_LIMIT:g})"))

    comet_mae = select("mae1_vs_best_baseline", [comet_name])
    if len(comet_mae):
        checks.append(("comet_mae1_competitive", bool(comet_mae["passed"].all()),
                       f"worst one-step MAE ratio = {comet_mae['value'].max():.3g} "
                       f"(limit {COMET_MAE1_RATIO_LIMIT:g})"))

    bounds = select("bound_violations")
    if len(bounds):
        checks.append(("step_bounds_hold", bool(bounds["passed"].all()),
                       f"{int(bounds['value'].sum())} steps over bound"))

    unstable = select("drift_ratio_200_20", UNSTABLE_BASELINES)
    if len(unstable):
        details, passed = [], False
        for model, rows in unstable.groupby("model", sort=False):
            hits = int(rows["passed"].sum())
            seeds = rows["seed"].nunique()
            passed = passed or hits >= math.ceil(seeds / 2)
            details.append(f"{model} {hits}/{seeds} seeds")
        checks.append(("baseline_drift_unstable", passed,
                       f"{', '.join(details)} with drift(200)/drift(20) >= {BASELINE_DRIFT_RATIO_MIN:g}"))

    return pd.DataFrame(checks, columns=["check", "passed", "detail"])
