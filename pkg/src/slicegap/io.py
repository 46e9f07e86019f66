"""CSV and JSON emission. Floats in CSV carry 17 significant digits."""

from __future__ import annotations

import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from slicegap.sampler import ChainTrace, CoupledStats


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    return "%.17g" % float(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) if not isinstance(v, str) else v for v in row) + "\n")
    return buf.getvalue()


def _clean(obj):
    """Make numpy scalars and non-finite floats JSON friendly."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def json_text(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def write_atomic(path: Path | str, text: str) -> Path:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def chain_csv(trace: ChainTrace) -> str:
    if trace.levels is None:
        return csv_text(["step", "t"], ((i + 1, t) for i, t in enumerate(trace.states)))
    d = trace.states.shape[1]
    header = ["step", *(f"x_{j + 1}" for j in range(d)), "rho_x", "t"]
    rows = (
        (i + 1, *x, r, t) for i, (x, r, t) in enumerate(zip(trace.states, trace.rho, trace.levels))
    )
    return csv_text(header, rows)


def coupled_csv(stats: CoupledStats) -> str:
    rows = zip(range(stats.steps + 1), stats.mean_dist, stats.mean_norm_gap)
    return csv_text(["step", "dist", "norm_gap"], rows)
