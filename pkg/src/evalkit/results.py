"""Result files: metrics, rollout traces, footprint, qualitative checks and the run manifest.

Every CSV uses ``\\n`` line endings and 9 significant digits, and rows
come out in a fixed order, so reruns with the same inputs are
byte-identical. The manifest carries no timestamps for the same reason.
"""
import hashlib
import json
import os
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Union

import pandas as pd

from src import __version__
from src.config import CSV_FLOAT_FORMAT
from .sweep import EvalReport

METRIC_COLUMNS = ["seed", "model", "metric", "horizon", "value"]
MANIFEST_NAME = "manifest.json"


def write_csv(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, na_rep="", lineterminator="\n")
    return path


def metrics_frame(reports: Sequence[EvalReport]) -> pd.DataFrame:
    return pd.DataFrame([row for report in reports for row in report.metric_rows()], columns=METRIC_COLUMNS)


def write_metrics(reports: Sequence[EvalReport], path: Union[str, Path]) -> Path:
    """``seed,model,metric,horizon,value`` in report order."""
    return write_csv(metrics_frame(reports), path)


def write_rollouts(reports: Sequence[EvalReport], out_dir: Union[str, Path]) -> List[Path]:
    """One ``rollout_<model>_<seed>.csv`` per report that carries a trace."""
    out_dir = Path(out_dir)
    return [write_csv(report.rollout_trace, out_dir / f"rollout_{report.model}_{report.seed}.csv")
            for report in reports if report.rollout_trace is not None]


def sha256_file(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(out_dir: Union[str, Path], config: Dict, seeds: Iterable[int],
                   files: Iterable[Union[str, Path]]) -> Path:
    """Write ``manifest.json`` atomically (temp file, then rename).

    Args:
        out_dir: Directory holding the outputs
        config: Snapshot of every setting used by the run (JSON-serializable)
        seeds: Seeds the run covered
        files: Emitted files; listed relative to ``out_dir`` with SHA-256 hashes

    Returns:
        Path of the manifest
    """
    out_dir = Path(out_dir)
    outputs = []
    for path in files:
        path = Path(path)
        name = Path(os.path.relpath(path, out_dir)).as_posix()
        outputs.append({"path": name, "sha256": sha256_file(path)})
    manifest = {
        "tool": "comet",
        "version": __version__,
        "seeds": [int(s) for s in seeds],
        "config": config,
        "outputs": sorted(outputs, key=lambda entry: entry["path"]),
    }
    target = out_dir / MANIFEST_NAME
    temporary = out_dir / (MANIFEST_NAME + ".tmp")
    temporary.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    os.replace(temporary, target)
    return target


def verify_manifest(manifest_path: Union[str, Path]) -> List[str]:
    """Paths whose current hash no longer matches the manifest (empty when all match)."""
    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text())
    base = manifest_path.parent
    return [entry["path"] for entry in manifest["outputs"]
            if not (base / entry["path"]).exists() or sha256_file(base / entry["path"]) != entry["sha256"]]
