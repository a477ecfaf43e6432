"""Parameter and memory footprint table.

Sizes are reported in KB (bytes / 1024) at 4 bytes per stored value; a
model with nothing in a column shows ``--``.
"""
from typing import Iterable, Mapping, Tuple

import pandas as pd

from src.config import CSV_FLOAT_FORMAT
from src.baselines.forecaster import Forecaster

NOT_APPLICABLE = "--"


def format_kb(num_bytes: int) -> str:
    return NOT_APPLICABLE if not num_bytes else CSV_FLOAT_FORMAT % (num_bytes / 1024.0)


def footprint_rows(entries: Iterable[Tuple[str, int, int]]) -> pd.DataFrame:
    """Table ``model,param_kb,memory_kb`` from (name, param_bytes, memory_bytes) triples."""
    rows = [{"model": name, "param_kb": format_kb(param_bytes), "memory_kb": format_kb(memory_bytes)}
            for name, param_bytes, memory_bytes in entries]
    return pd.DataFrame(rows, columns=["model", "param_kb", "memory_kb"])


def footprint_report(models: Mapping[str, Forecaster]) -> pd.DataFrame:
    """Footprint of fitted forecasters, in the mapping's order.

    Example:
        COMET with D=8 reports 4.015625 KB of parameters; kNN reports ``--``.
    """
    return footprint_rows((name, model.parameter_bytes(), model.memory_bytes())
                          for name, model in models.items())
