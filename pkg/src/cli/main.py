"""Command-line front end: ``gen``, ``train``, ``eval``, ``rollout`` and ``bench``.

Settings resolve in three layers: built-in defaults < ``--config`` file
(flat YAML) < command-line flags. Failures print a single line
``error_code: message`` to stderr and exit with a nonzero code
(2 usage/config, 3 data or file format, 4 numeric divergence).
"""
import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src import __version__
from src.config import (
    BENCH_MODELS,
    BENCH_OUTPUT,
    DATA_DIR,
    DEFAULT_ANCHOR_SPREAD,
    DEFAULT_ANCHOR_STRIDE,
    DEFAULT_BATCH_SIZE,
    DEFAULT_CYCLE_AMPLITUDE,
    DEFAULT_CYCLE_PERIOD,
    DEFAULT_DRIFT_HORIZONS,
    DEFAULT_DRIFT_RANGE,
    DEFAULT_EPOCHS,
    DEFAULT_GEN_LENGTH,
    DEFAULT_HUBER_DELTA,
    DEFAULT_K,
    DEFAULT_KNN_K,
    DEFAULT_KNN_WINDOW,
    DEFAULT_LATENT_DIM,
    DEFAULT_LEARNING_RATE,
    DEFAULT_LONG_LEN,
    DEFAULT_LSTM_HIDDEN,
    DEFAULT_LSTM_SEQUENCE,
    DEFAULT_MEAN_REVERSION,
    DEFAULT_MEDIUM_LEN,
    DEFAULT_MLP_HIDDEN,
    DEFAULT_MLP_INPUT,
    DEFAULT_MODEL_FILE,
    DEFAULT_REGIME_DURATION,
    DEFAULT_ROLLOUT_HORIZON,
    DEFAULT_SEED,
    DEFAULT_SEEDS,
    DEFAULT_SHORT_HORIZONS,
    DEFAULT_SHORT_LEN,
    DEFAULT_START_VALUE,
    DEFAULT_TRAIN_FRACTION,
    DEFAULT_VALIDATION_FRACTION,
    DEFAULT_VOLATILITY_RANGE,
    EVAL_OUTPUT,
    OUTPUT_DIR,
)
from src.baselines import CometForecaster, KnnConfig, LstmConfig, MlpConfig
from src.core.comet import parameter_count, rollout
from src.core.data_loaders import load_run_config, load_series, write_series
from src.core.errors import CometError, ConfigError, InsufficientHistoryError
from src.core.parsers import parse_bool, parse_float_pair, parse_int_list
from src.core.serialization import load_model, save_model
from src.core.series import SplitSpec, TimeSeries, WindowSpec, split
from src.datagen import GenConfig, generate_with_regimes
from src.evalkit import (
    BenchSettings,
    EvalConfig,
    build_forecaster,
    evaluate_forecaster,
    footprint_rows,
    acceptance_checks,
    qualitative_rows,
    seed_sweep,
    summarize,
    write_csv,
    write_manifest,
    write_metrics,
    write_rollouts,
)
from src.evalkit.results import metrics_frame
from src.training import TrainConfig, preflight_gradient_check, train


def _name_list(value) -> List[str]:
    if isinstance(value, str):
        names = [v.strip() for v in value.split(",") if v.strip()]
    else:
        names = [str(v) for v in value]
    if not names:
        raise ConfigError("expected at least one model name")
    return names


def _hidden(value) -> tuple:
    return tuple(parse_int_list(value))


# key -> (converter, default)
SETTINGS: Dict[str, tuple] = {
    # generator
    "seed": (int, DEFAULT_SEED),
    "length": (int, DEFAULT_GEN_LENGTH),
    "regime_mean_duration": (float, DEFAULT_REGIME_DURATION),
    "drift_range": (parse_float_pair, DEFAULT_DRIFT_RANGE),
    "volatility_range": (parse_float_pair, DEFAULT_VOLATILITY_RANGE),
    "mean_reversion_rate": (float, DEFAULT_MEAN_REVERSION),
    "cycle_amplitude": (float, DEFAULT_CYCLE_AMPLITUDE),
    "cycle_period": (int, DEFAULT_CYCLE_PERIOD),
    "anchor_spread": (float, DEFAULT_ANCHOR_SPREAD),
    "start_value": (float, DEFAULT_START_VALUE),
    # windows and splits
    "short_len": (int, DEFAULT_SHORT_LEN),
    "medium_len": (int, DEFAULT_MEDIUM_LEN),
    "long_len": (int, DEFAULT_LONG_LEN),
    "train_fraction": (float, DEFAULT_TRAIN_FRACTION),
    "validation_fraction": (float, DEFAULT_VALIDATION_FRACTION),
    # COMET training
    "dim": (int, DEFAULT_LATENT_DIM),
    "k": (int, DEFAULT_K),
    "epochs": (int, DEFAULT_EPOCHS),
    "lr": (float, DEFAULT_LEARNING_RATE),
    "huber_delta": (float, DEFAULT_HUBER_DELTA),
    "batch_size": (int, DEFAULT_BATCH_SIZE),
    "memory_rebuild": (parse_bool, True),
    "leave_one_out": (parse_bool, True),
    "memory_with_validation": (parse_bool, True),
    # baselines
    "knn_window": (int, DEFAULT_KNN_WINDOW),
    "knn_k": (int, DEFAULT_KNN_K),
    "mlp_input": (int, DEFAULT_MLP_INPUT),
    "mlp_hidden": (_hidden, DEFAULT_MLP_HIDDEN),
    "lstm_hidden": (int, DEFAULT_LSTM_HIDDEN),
    "lstm_sequence": (int, DEFAULT_LSTM_SEQUENCE),
    # evaluation
    "horizons": (parse_int_list, DEFAULT_SHORT_HORIZONS),
    "drift_horizons": (parse_int_list, DEFAULT_DRIFT_HORIZONS),
    "rollout_horizon": (int, DEFAULT_ROLLOUT_HORIZON),
    "stride": (int, DEFAULT_ANCHOR_STRIDE),
    "warmup": (int, DEFAULT_LONG_LEN),
    "seeds": (parse_int_list, DEFAULT_SEEDS),
    "models": (_name_list, BENCH_MODELS),
    "jobs": (int, 1),
}

GEN_KEYS = ["seed", "length", "regime_mean_duration", "drift_range", "volatility_range",
            "mean_reversion_rate", "cycle_amplitude", "cycle_period", "anchor_spread", "start_value"]
WINDOW_KEYS = ["short_len", "medium_len", "long_len"]
SPLIT_KEYS = ["train_fraction", "validation_fraction"]
TRAIN_KEYS = ["seed", "dim", "k", "epochs", "lr", "huber_delta", "batch_size", "memory_rebuild", "leave_one_out",
              "memory_with_validation"]
BASELINE_KEYS = ["knn_window", "knn_k", "mlp_input", "mlp_hidden", "lstm_hidden", "lstm_sequence"]
EVAL_KEYS = ["horizons", "drift_horizons", "rollout_horizon", "stride", "warmup"]


def _unique(keys: Sequence[str]) -> List[str]:
    return list(dict.fromkeys(keys))


def _convert(key: str, value: Any) -> Any:
    converter = SETTINGS[key][0]
    try:
        return converter(value)
    except CometError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid value for {key}: {value!r}") from e


def resolve_settings(args: argparse.Namespace, keys: Sequence[str]) -> Dict[str, Any]:
    """Merge defaults, the optional config file and flags for ``keys``.

    Raises:
        ConfigError: On an unknown config key or an unparsable value
    """
    values = {key: SETTINGS[key][1] for key in keys}
    config_path = getattr(args, "config", None)
    if config_path:
        for key, raw in load_run_config(config_path).items():
            if key not in values:
                raise ConfigError(f"unknown config key '{key}' (allowed: {', '.join(sorted(values))})")
            values[key] = _convert(key, raw)
    for key in keys:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = _convert(key, flag)
    return values


def gen_config(values: Dict[str, Any]) -> GenConfig:
    return GenConfig(
        seed=values["seed"], length=values["length"],
        regime_mean_duration=values["regime_mean_duration"],
        drift_range=values["drift_range"], volatility_range=values["volatility_range"],
        mean_reversion_rate=values["mean_reversion_rate"], cycle_amplitude=values["cycle_amplitude"],
        cycle_period=values["cycle_period"], anchor_spread=values["anchor_spread"],
        start_value=values["start_value"], long_len=values.get("long_len", DEFAULT_LONG_LEN))


def window_spec(values: Dict[str, Any]) -> WindowSpec:
    return WindowSpec(values["short_len"], values["medium_len"], values["long_len"])


def split_spec(values: Dict[str, Any]) -> SplitSpec:
    return SplitSpec(values["train_fraction"], values["validation_fraction"])


def train_config(values: Dict[str, Any]) -> TrainConfig:
    return TrainConfig(epochs=values["epochs"], learning_rate=values["lr"],
                       huber_delta=values["huber_delta"], seed=values["seed"],
                       memory_rebuild=values["memory_rebuild"], batch_size=values["batch_size"],
                       leave_one_out=values["leave_one_out"],
                       memory_with_validation=values["memory_with_validation"])


def bench_settings(values: Dict[str, Any]) -> BenchSettings:
    """Model settings; baselines share COMET's epochs, learning rate and batch size."""
    schedule = dict(epochs=values["epochs"], learning_rate=values["lr"], batch_size=values["batch_size"])
    return BenchSettings(
        window_spec=window_spec(values),
        split_spec=split_spec(values),
        train=train_config(values),
        knn=KnnConfig(values["knn_window"], values["knn_k"]),
        mlp=MlpConfig(values["mlp_input"], values["mlp_hidden"], **schedule),
        lstm=LstmConfig(values["lstm_hidden"], values["lstm_sequence"], **schedule),
        latent_dim=values["dim"],
        k=values["k"],
    )


def eval_config(values: Dict[str, Any], seeds: Sequence[int]) -> EvalConfig:
    return EvalConfig(horizons_short=tuple(values["horizons"]),
                      drift_horizons=tuple(values["drift_horizons"]),
                      rollout_horizon=values["rollout_horizon"], anchor_stride=values["stride"],
                      seeds=tuple(seeds), warmup=values["warmup"])


def _banner(title: str):
    print("=" * 70)
    print(title)
    print("=" * 70)


# ---------------------------------------------------------------- gen

def cmd_gen(args: argparse.Namespace) -> int:
    values = resolve_settings(args, GEN_KEYS)
    config = gen_config(values)
    series, regimes = generate_with_regimes(config)
    out = write_series(series, args.out)
    if not args.quiet:
        steps = np.abs(np.diff(series.values))
        print(f"✓ Generated {series.length} values (seed {config.seed}, {len(regimes)} regimes)")
        print(f"   mean |dx| = {steps.mean():.6g}, max |dx| = {steps.max():.6g}")
        print(f"💾 Saved to {out}")
    return 0


# ---------------------------------------------------------------- train

def cmd_train(args: argparse.Namespace) -> int:
    values = resolve_settings(args, _unique(TRAIN_KEYS + WINDOW_KEYS + SPLIT_KEYS))
    spec = window_spec(values)
    series = load_series(args.series)
    train_split, validation, _ = split(series, split_spec(values), spec)

    model_out = Path(args.model_out)
    log_path = Path(args.log) if args.log else model_out.with_suffix(".log.csv")
    model, report = train(train_split, spec, train_config(values), values["dim"], values["k"],
                          validation=validation if validation.length else None,
                          verbose=not args.quiet, log_path=log_path)
    save_model(model, model_out)

    if not args.quiet:
        footprint = parameter_count(model)
        print(f"💾 Model saved to {model_out} ({footprint.param_count} parameters, "
              f"{footprint.param_bytes} bytes; memory {model.memory.count} entries, "
              f"{footprint.memory_bytes} bytes)")
        print(f"📄 Training log: {log_path}")
        if report.val_mae and not np.isnan(report.final_val_mae):
            print(f"   validation one-step MAE: {report.final_val_mae:.6g}")
    return 0


# ---------------------------------------------------------------- eval

def _model_names(paths: Sequence[str]) -> List[str]:
    names = []
    for path in paths:
        stem = Path(path).stem
        name, suffix = stem, 2
        while name in names:
            name, suffix = f"{stem}_{suffix}", suffix + 1
        names.append(name)
    return names


def cmd_eval(args: argparse.Namespace) -> int:
    values = resolve_settings(args, _unique(EVAL_KEYS + SPLIT_KEYS + BASELINE_KEYS + TRAIN_KEYS))
    series = load_series(args.series)
    forecasters = {name: CometForecaster.from_model(load_model(path))
                   for name, path in zip(_model_names(args.model), args.model)}
    spec = next(iter(forecasters.values())).window_spec
    segments = dict(zip(("train", "validation", "test"), split(series, split_spec(values), spec)))
    segments["all"] = series
    target = segments[args.segment]

    if args.baselines:
        settings = replace(bench_settings({**values, **{k: getattr(spec, k) for k in WINDOW_KEYS}}),
                           window_spec=spec)
        for name in _name_list(args.baselines):
            forecasters[name] = build_forecaster(name, values["seed"], settings).fit(
                segments["train"], verbose=not args.quiet)

    config = eval_config(values, [values["seed"]])
    reports = []
    for i, (name, model) in enumerate(forecasters.items(), 1):
        if not args.quiet:
            print(f"[{i}/{len(forecasters)}] Evaluating {name} on the {args.segment} segment...")
        reports.append(evaluate_forecaster(model, name, values["seed"], target, config, trace=False))

    out_dir = Path(args.out_dir)
    files = [write_metrics(reports, out_dir / "metrics.csv"),
             write_csv(footprint_rows((r.model, r.param_bytes, r.memory_bytes) for r in reports),
                       out_dir / "footprint.csv")]
    snapshot = {**values, "segment": args.segment, "models": list(forecasters)}
    write_manifest(out_dir, snapshot, [values["seed"]], files)

    if not args.quiet:
        print()
        print(metrics_frame(reports).query("metric == 'mae'").to_string(index=False))
        print(f"\n✓ Results written to {out_dir}")
    return 0


# ---------------------------------------------------------------- rollout

def cmd_rollout(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    series = load_series(args.series)
    anchor = args.anchor if args.anchor is not None else model.window_spec.long_len
    if anchor > series.length:
        raise InsufficientHistoryError(anchor, series.length, "series for the anchor")
    result = rollout(model, TimeSeries(series.values[:anchor]), args.horizon, trace_states=args.trace_state)

    positions = np.arange(anchor, anchor + args.horizon)
    actual = np.full(args.horizon, np.nan)
    inside = positions < series.length
    actual[inside] = series.values[positions[inside]]
    frame = pd.DataFrame({"t": positions, "predicted": result.predictions.values, "actual": actual})
    if args.trace_state:
        frame["dx_mem"] = result.per_step_dx
        for d in range(model.latent_dim):
            frame[f"z_{d}"] = result.states[:, d]

    out = write_csv(frame, args.out)
    if not args.quiet:
        print(f"✓ Rolled out {args.horizon} steps from anchor {anchor}")
        print(f"💾 Trace saved to {out}")
    return 0


# ---------------------------------------------------------------- bench

def cmd_bench(args: argparse.Namespace) -> int:
    keys = _unique(GEN_KEYS + WINDOW_KEYS + SPLIT_KEYS + TRAIN_KEYS + BASELINE_KEYS + EVAL_KEYS
                   + ["seeds", "models", "jobs"])
    values = resolve_settings(args, keys)
    verbose = not args.quiet
    gen_template = gen_config(values)
    settings = bench_settings(values)
    config = eval_config(values, values["seeds"])
    out_dir = Path(args.out_dir)

    if verbose:
        _banner("📊 COMET benchmark")
        print(f"   Models: {', '.join(values['models'])}")
        print(f"   Seeds: {', '.join(str(s) for s in config.seeds)}")
        print(f"   Output: {out_dir}")
        print("\n[1/4] Checking gradients against finite differences...")
    preflight_gradient_check(verbose=verbose)

    if verbose:
        print("\n[2/4] Training and evaluating...")
    reports = seed_sweep(values["models"], gen_template, config, settings, jobs=values["jobs"], verbose=verbose)

    if verbose:
        print("\n[3/4] Writing results...")
    first_seed = config.seeds[0]
    footprint = footprint_rows((r.model, r.param_bytes, r.memory_bytes) for r in reports if r.seed == first_seed)
    qualitative = qualitative_rows(reports)
    checks = acceptance_checks(qualitative)
    files = [write_metrics(reports, out_dir / "metrics.csv"),
             write_csv(summarize(reports), out_dir / "summary.csv"),
             write_csv(footprint, out_dir / "footprint.csv"),
             write_csv(qualitative, out_dir / "qualitative.csv"),
             write_csv(checks, out_dir / "acceptance.csv")]
    files += write_rollouts(reports, out_dir)

    if verbose:
        print("\n[4/4] Writing manifest...")
    write_manifest(out_dir, values, config.seeds, files)

    if verbose:
        summary = summarize(reports)
        print()
        _banner("📈 Mean over seeds")
        print(summary[summary["metric"] == "mae"].to_string(index=False))
        longest = config.drift_horizons[-1]
        print(summary[(summary["metric"] == "drift") & (summary["horizon"] == longest)].to_string(index=False))
        print()
        print(footprint.to_string(index=False))
        if len(checks):
            print()
            _banner("✅ Qualitative checks")
            for check in checks.itertuples():
                mark = "✓" if check.passed else "⚠️ "
                print(f"{mark} {check.check}: {check.detail}")
        print(f"\n✓ Benchmark complete: {len(reports)} reports in {out_dir}")
    return 0


# ---------------------------------------------------------------- parser

def _add_config(parser: argparse.ArgumentParser):
    parser.add_argument('--config', type=str, help='Flat YAML file of settings (flags override it)')
    parser.add_argument('--quiet', action='store_true', help='Only print errors')


def _add_gen_flags(parser: argparse.ArgumentParser):
    parser.add_argument('--seed', type=int, help=f'Random seed (default: {DEFAULT_SEED})')
    parser.add_argument('--length', type=int, help=f'Series length (default: {DEFAULT_GEN_LENGTH})')
    parser.add_argument('--regime-mean-duration', type=float, dest='regime_mean_duration',
                        help=f'Mean regime duration in steps (default: {DEFAULT_REGIME_DURATION})')
    parser.add_argument('--drift-range', type=str, dest='drift_range',
                        help='Per-step drift range "low,high" (default: {},{})'.format(*DEFAULT_DRIFT_RANGE))
    parser.add_argument('--volatility-range', type=str, dest='volatility_range',
                        help='Noise scale range "low,high" (default: {},{})'.format(*DEFAULT_VOLATILITY_RANGE))
    parser.add_argument('--mean-reversion', type=float, dest='mean_reversion_rate',
                        help=f'Pull toward the regime anchor, in [0, 1) (default: {DEFAULT_MEAN_REVERSION})')
    parser.add_argument('--cycle-amplitude', type=float, dest='cycle_amplitude',
                        help=f'Amplitude of the periodic component (default: {DEFAULT_CYCLE_AMPLITUDE})')
    parser.add_argument('--cycle-period', type=int, dest='cycle_period',
                        help=f'Period of the periodic component (default: {DEFAULT_CYCLE_PERIOD})')
    parser.add_argument('--anchor-spread', type=float, dest='anchor_spread',
                        help=f'Regime anchor offset range +/- (default: {DEFAULT_ANCHOR_SPREAD})')
    parser.add_argument('--start-value', type=float, dest='start_value',
                        help=f'First value of the series (default: {DEFAULT_START_VALUE})')


def _add_window_split_flags(parser: argparse.ArgumentParser):
    parser.add_argument('--short-len', type=int, dest='short_len', help=f'Short window (default: {DEFAULT_SHORT_LEN})')
    parser.add_argument('--medium-len', type=int, dest='medium_len', help=f'Medium window (default: {DEFAULT_MEDIUM_LEN})')
    parser.add_argument('--long-len', type=int, dest='long_len', help=f'Long window (default: {DEFAULT_LONG_LEN})')
    _add_split_flags(parser)


def _add_split_flags(parser: argparse.ArgumentParser):
    parser.add_argument('--train-fraction', type=float, dest='train_fraction',
                        help=f'Train share of the series (default: {DEFAULT_TRAIN_FRACTION})')
    parser.add_argument('--val-fraction', type=float, dest='validation_fraction',
                        help=f'Validation share of the series (default: {DEFAULT_VALIDATION_FRACTION})')


def _add_train_flags(parser: argparse.ArgumentParser, with_seed: bool = True):
    if with_seed:
        parser.add_argument('--seed', type=int, help=f'Initialization seed (default: {DEFAULT_SEED})')
    parser.add_argument('--dim', type=int, help=f'Behaviour-space dimension D (default: {DEFAULT_LATENT_DIM})')
    parser.add_argument('--k', type=int, help=f'Neighbours retrieved per step (default: {DEFAULT_K})')
    parser.add_argument('--epochs', type=int, help=f'Training epochs (default: {DEFAULT_EPOCHS})')
    parser.add_argument('--lr', type=float, help=f'Learning rate (default: {DEFAULT_LEARNING_RATE})')
    parser.add_argument('--huber-delta', type=float, dest='huber_delta',
                        help=f'Huber loss threshold (default: {DEFAULT_HUBER_DELTA})')
    parser.add_argument('--batch-size', type=int, dest='batch_size',
                        help=f'Anchors per gradient step (default: {DEFAULT_BATCH_SIZE})')
    parser.add_argument('--no-memory-rebuild', action='store_const', const=False, dest='memory_rebuild',
                        help='Keep the initial memory instead of re-encoding it each epoch (default: rebuild)')
    parser.add_argument('--no-leave-one-out', action='store_const', const=False, dest='leave_one_out',
                        help="Let anchors retrieve their own transition (default: excluded)")
    parser.add_argument('--memory-train-only', action='store_const', const=False,
                        dest='memory_with_validation',
                        help='Keep the final memory on the train split only (default: train + validation)')


def _add_baseline_flags(parser: argparse.ArgumentParser):
    parser.add_argument('--knn-window', type=int, dest='knn_window', help=f'kNN window (default: {DEFAULT_KNN_WINDOW})')
    parser.add_argument('--knn-k', type=int, dest='knn_k', help=f'kNN neighbours (default: {DEFAULT_KNN_K})')
    parser.add_argument('--mlp-input', type=int, dest='mlp_input', help=f'MLP input window (default: {DEFAULT_MLP_INPUT})')
    parser.add_argument('--mlp-hidden', type=str, dest='mlp_hidden',
                        help='MLP hidden sizes (default: {})'.format(",".join(map(str, DEFAULT_MLP_HIDDEN))))
    parser.add_argument('--lstm-hidden', type=int, dest='lstm_hidden', help=f'LSTM hidden size (default: {DEFAULT_LSTM_HIDDEN})')
    parser.add_argument('--lstm-sequence', type=int, dest='lstm_sequence',
                        help=f'LSTM input sequence length (default: {DEFAULT_LSTM_SEQUENCE})')


def _add_eval_flags(parser: argparse.ArgumentParser):
    parser.add_argument('--horizons', type=str,
                        help='Short horizons for MAE (default: {})'.format(",".join(map(str, DEFAULT_SHORT_HORIZONS))))
    parser.add_argument('--drift-horizons', type=str, dest='drift_horizons',
                        help='Drift curve horizons, ranges as start:stop:step (default: 1,10:200:10)')
    parser.add_argument('--rollout-horizon', type=int, dest='rollout_horizon',
                        help=f'Length of the stored rollout trace (default: {DEFAULT_ROLLOUT_HORIZON})')
    parser.add_argument('--stride', type=int, help=f'Steps between anchors (default: {DEFAULT_ANCHOR_STRIDE})')
    parser.add_argument('--warmup', type=int, help=f'First anchor stop (default: {DEFAULT_LONG_LEN})')


class CliParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors are one ``config_error: message`` line on stderr."""

    def error(self, message: str):
        self.exit(ConfigError.exit_code, f"{ConfigError.code}: {self.prog}: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(
        prog="comet",
        description="COMET memory-anchored regressor: generate data, train, evaluate and benchmark",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python run_comet.py gen --seed 0 --out data/series_0.csv
  python run_comet.py train --series data/series_0.csv --model-out data/comet_0.bin
  python run_comet.py eval --model data/comet_0.bin --series data/series_0.csv --baselines knn
  python run_comet.py rollout --model data/comet_0.bin --series data/series_0.csv --anchor 4100 --trace-state
  python run_comet.py bench --seeds 0,1,2,3 --out-dir output/bench
        """
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = parser.add_subparsers(dest='command', required=True)

    gen = sub.add_parser('gen', help='Generate a regime-switching series CSV')
    _add_gen_flags(gen)
    gen.add_argument('--out', type=str, default=str(DATA_DIR / 'series.csv'),
                     help=f'Output CSV (default: {DATA_DIR / "series.csv"})')
    _add_config(gen)
    gen.set_defaults(handler=cmd_gen)

    tr = sub.add_parser('train', help='Train COMET on the train split of a series')
    tr.add_argument('--series', type=str, required=True, help='Series CSV (t,value)')
    tr.add_argument('--model-out', type=str, dest='model_out', default=str(DEFAULT_MODEL_FILE),
                    help=f'Model file to write (default: {DEFAULT_MODEL_FILE})')
    tr.add_argument('--log', type=str, help='Training log CSV (default: <model-out>.log.csv)')
    _add_train_flags(tr)
    _add_window_split_flags(tr)
    _add_config(tr)
    tr.set_defaults(handler=cmd_train)

    ev = sub.add_parser('eval', help='Evaluate saved models (and optional baselines) on a series')
    ev.add_argument('--model', type=str, action='append', required=True,
                    help='Model file; repeat for several models')
    ev.add_argument('--series', type=str, required=True, help='Series CSV (t,value)')
    ev.add_argument('--segment', type=str, default='test', choices=['train', 'validation', 'test', 'all'],
                    help='Segment to evaluate on (default: test)')
    ev.add_argument('--baselines', type=str, help='Comma-separated baselines trained on the train split (e.g. knn,mlp)')
    ev.add_argument('--out-dir', type=str, dest='out_dir', default=str(EVAL_OUTPUT),
                    help=f'Output directory (default: {EVAL_OUTPUT})')
    _add_eval_flags(ev)
    _add_split_flags(ev)
    _add_train_flags(ev)
    _add_baseline_flags(ev)
    _add_config(ev)
    ev.set_defaults(handler=cmd_eval)

    ro = sub.add_parser('rollout', help='Roll a saved model forward from an anchor')
    ro.add_argument('--model', type=str, required=True, help='Model file')
    ro.add_argument('--series', type=str, required=True, help='Series CSV supplying the seed history')
    ro.add_argument('--anchor', type=int, help="Number of ground-truth values used as history (default: the model's long window)")
    ro.add_argument('--horizon', type=int, default=DEFAULT_ROLLOUT_HORIZON,
                    help=f'Steps to predict (default: {DEFAULT_ROLLOUT_HORIZON})')
    ro.add_argument('--trace-state', action='store_true', dest='trace_state',
                    help='Add dx_mem and behaviour-state columns')
    ro.add_argument('--out', type=str, default=str(OUTPUT_DIR / 'rollout.csv'),
                    help=f'Output CSV (default: {OUTPUT_DIR / "rollout.csv"})')
    ro.add_argument('--quiet', action='store_true', help='Only print errors')
    ro.set_defaults(handler=cmd_rollout)

    be = sub.add_parser('bench', help='Full multi-seed experiment over all models')
    be.add_argument('--out-dir', type=str, dest='out_dir', default=str(BENCH_OUTPUT),
                    help=f'Output directory (default: {BENCH_OUTPUT})')
    be.add_argument('--seeds', type=str, help='Seeds (default: {})'.format(",".join(map(str, DEFAULT_SEEDS))))
    be.add_argument('--models', type=str, help='Models (default: {})'.format(",".join(BENCH_MODELS)))
    be.add_argument('--jobs', type=int, help='Worker processes (default: 1)')
    _add_gen_flags(be)
    _add_train_flags(be, with_seed=False)
    _add_window_split_flags(be)
    _add_baseline_flags(be)
    _add_eval_flags(be)
    _add_config(be)
    be.set_defaults(handler=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand; returns the process exit code."""
    args = build_parser().parse_args(argv)
    handler: Callable[[argparse.Namespace], int] = args.handler
    try:
        return handler(args)
    except CometError as e:
        print(f"{e.code}: {e}", file=sys.stderr)
        return e.exit_code
    except FileNotFoundError as e:
        print(f"missing_file: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
