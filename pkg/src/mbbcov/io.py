"""Flat-file formats: curve panels in, JSON reports and CSV matrices out."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .eqtest import TestConfig, TestReport
from .fcore import FunctionalSeries, Grid, KernelOperator, make_grid
from .mbb import RngSeed


class DataError(ValueError):
    """Malformed or unusable input data."""


def _parse(field: str) -> float | None:
    try:
        return float(field)
    except ValueError:
        return None


def parse_curve_panel(text: str, source: str = "<input>") -> np.ndarray:
    """Parse a comma-separated panel: one row per time point, one column per grid point.

    A single non-numeric first row is treated as a header. Fields must be
    plain decimals; NaN and infinities are rejected.
    """
    rows = [r for r in csv.reader(io.StringIO(text.lstrip("﻿"))) if r and any(f.strip() for f in r)]
    if not rows:
        raise DataError(f"{source}: file is empty")
    if any(_parse(f) is None for f in rows[0]):
        rows = rows[1:]
        first_line = 2
    else:
        first_line = 1
    if len(rows) < 2:
        raise DataError(f"{source}: need at least 2 data rows, got {len(rows)}")
    width = len(rows[0])
    out = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        line = first_line + i
        if len(row) != width:
            raise DataError(f"{source}: row {line} has {len(row)} fields, expected {width}")
        for j, f in enumerate(row):
            v = _parse(f.strip())
            if v is None:
                if j == 0 and all(_parse(g.strip()) is not None for g in row[1:]):
                    raise DataError(
                        f"{source}: row {line} column 1 is {f!r}; timestamp columns are not "
                        "supported, give only equidistant curve values"
                    )
                raise DataError(f"{source}: row {line} column {j + 1}: {f!r} is not a number")
            if not math.isfinite(v):
                raise DataError(f"{source}: row {line} column {j + 1}: non-finite value {f!r}")
            out[i, j] = v
    if width < 2:
        raise DataError(f"{source}: need at least 2 columns (grid points), got {width}")
    return out


def read_curve_panel(path, grid: Grid | None = None) -> FunctionalSeries:
    """Load a panel file; the grid is rebuilt as equidistant on [0, 1]."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"{path}: cannot read file ({exc})") from exc
    values = parse_curve_panel(text, str(path))
    grid = grid if grid is not None else make_grid(values.shape[1])
    if grid.size != values.shape[1]:
        raise DataError(f"{path}: has {values.shape[1]} columns, expected {grid.size}")
    return FunctionalSeries(grid, values)


def write_curve_panel(path, series: FunctionalSeries) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(matrix_to_csv(series.values))


def matrix_to_csv(a: np.ndarray) -> str:
    return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in np.atleast_2d(a))


def write_kernel_csv(path, op: KernelOperator) -> Path:
    """Write the L x L kernel to ``path`` and grid points to ``<stem>.grid.csv``.

    Returns the sidecar path.
    """
    path = Path(path)
    path.write_text(matrix_to_csv(op.kernel), encoding="utf-8")
    sidecar = path.with_name(path.stem + ".grid.csv")
    sidecar.write_text(matrix_to_csv(op.grid.points[None, :]), encoding="utf-8")
    return sidecar


def _num(x: float):
    # JSON has no infinity; an infinite critical value (alpha * (B + 1) < 1) is written as null
    return None if math.isinf(x) else float(x)


def report_to_dict(report: TestReport, extra_config: dict | None = None) -> dict:
    cfg = report.config
    config = {
        "alpha": cfg.alpha,
        "replicates": cfg.replicates,
        "seed": cfg.seed.seed,
        "stream": cfg.seed.stream,
        "subkey": list(cfg.seed.subkey),
    }
    if extra_config:
        config.update(extra_config)
    return {
        "version": __version__,
        "config": config,
        "n": list(report.n),
        "M": report.M,
        "block_sizes": list(cfg.block_sizes),
        "t_observed": float(report.t_observed),
        "p_value": float(report.p_value),
        "critical_value": _num(report.critical_value),
        "reject": bool(report.reject),
        "t_bootstrap": [float(v) for v in report.t_bootstrap],
    }


def report_to_json(report: TestReport, extra_config: dict | None = None) -> str:
    return json.dumps(report_to_dict(report, extra_config), indent=2) + "\n"


def report_from_json(text: str) -> TestReport:
    d = json.loads(text)
    c = d["config"]
    config = TestConfig(
        block_sizes=tuple(d["block_sizes"]),
        replicates=c["replicates"],
        alpha=c["alpha"],
        seed=RngSeed(c["seed"], c.get("stream", 0), tuple(c.get("subkey", ()))),
    )
    crit = d["critical_value"]
    return TestReport(
        t_observed=d["t_observed"],
        t_bootstrap=np.array(d["t_bootstrap"], dtype=float),
        p_value=d["p_value"],
        critical_value=math.inf if crit is None else crit,
        reject=d["reject"],
        config=config,
        n=tuple(d["n"]),
        M=d["M"],
    )
