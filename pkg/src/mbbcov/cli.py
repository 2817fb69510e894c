"""Command-line entry point: ``mbbcov test | diffkernel | experiment``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .autocov import empirical_autocov, squared_difference_kernel
from .eqtest import TestConfig, run_test
from .fcore import GridMismatchError
from .io import DataError, read_curve_panel, report_to_json, write_kernel_csv
from .mbb import RngSeed
from .sim import CSV_COLUMNS, ExperimentSpec, ModelSpec, fourier_smooth, run_experiment, table1_spec

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class UsageError(ValueError):
    pass


def _table1_presets() -> dict[str, list[dict]]:
    presets = {}
    for fam in ("far", "fma"):
        for delta, tag in ((0.0, "null"), (0.2, "delta0.2"), (0.5, "delta0.5"), (0.8, "delta0.8")):
            presets[f"table1-{fam}-{tag}"] = [dict(family=fam.upper(), delta=delta, R=500, B=500)]
    presets["table1-full"] = [
        dict(family=fam, delta=d, R=1000, B=1000) for fam in ("FAR", "FMA") for d in (0.0, 0.2, 0.5, 0.8)
    ]
    return presets


PRESETS = _table1_presets()


def _csv_list(cast):
    def parse(text: str):
        try:
            return tuple(cast(x) for x in text.split(",") if x.strip())
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc

    return parse


def _load_panels(paths, smooth_basis):
    series = [read_curve_panel(p) for p in paths]
    L = series[0].grid.size
    for p, s in zip(paths, series):
        if s.grid.size != L:
            raise DataError(f"{p}: has {s.grid.size} columns, {paths[0]} has {L}")
    grid = series[0].grid
    series = [type(s)(grid, s.values) for s in series]
    if smooth_basis:
        try:
            series = [fourier_smooth(s, smooth_basis) for s in series]
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    return series


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def cmd_test(args) -> int:
    if len(args.files) < 2:
        raise UsageError("need at least two panel files")
    series = _load_panels(args.files, args.smooth_basis)
    sizes = args.block_size
    if sizes and len(sizes) not in (1, len(series)):
        raise UsageError(f"give one --block-size or one per population ({len(series)}), got {len(sizes)}")
    try:
        config = TestConfig(
            block_sizes=tuple(sizes) if sizes else None,
            replicates=args.replicates,
            alpha=args.alpha,
            seed=RngSeed(args.seed),
        )
        report = run_test(series, config)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if not (np.isfinite(report.t_observed) and np.all(np.isfinite(report.t_bootstrap))):
        print("error: non-finite test statistic", file=sys.stderr)
        return EXIT_NUMERIC
    extra = {"files": [str(f) for f in args.files], "smooth_basis": args.smooth_basis}
    _emit(report_to_json(report, extra), args.out)
    if args.out not in (None, "-"):
        print(
            f"T_M={report.t_observed:.6g} p={report.p_value:.4f} "
            f"b={list(report.block_sizes)} reject={report.reject}"
        )
    return EXIT_OK


def cmd_diffkernel(args) -> int:
    a, b = _load_panels([args.file_a, args.file_b], args.smooth_basis)
    diff = squared_difference_kernel(empirical_autocov(a, 0), empirical_autocov(b, 0))
    sidecar = write_kernel_csv(args.out, diff)
    print(f"wrote {args.out} and {sidecar}")
    return EXIT_OK


def _experiment_specs(args) -> list[ExperimentSpec]:
    opts = {}
    if args.spec:
        try:
            opts.update(json.loads(Path(args.spec).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read spec file {args.spec}: {exc}") from exc
    for key in ("family", "delta", "n", "L", "block_sizes", "alphas", "B", "R", "seed", "psi_normalization"):
        v = getattr(args, key)
        if v is not None:
            opts[key] = v
    if args.smooth_basis is not None:
        opts["smooth_basis"] = args.smooth_basis or None
    rows = PRESETS[args.preset] if args.preset else [{}]
    specs = []
    for row in rows:
        merged = {**row, **opts}
        merged.setdefault("family", "FAR")
        merged.setdefault("delta", 0.0)
        unknown = set(merged) - {
            "family", "delta", "n", "L", "block_sizes", "alphas", "B", "R", "seed",
            "smooth_basis", "psi_normalization",
        }
        if unknown:
            raise UsageError(f"unknown experiment settings: {sorted(unknown)}")
        try:
            specs.append(table1_spec(**{k: merged.pop(k) for k in ("family", "delta")}, **merged))
        except (ValueError, TypeError) as exc:
            raise UsageError(str(exc)) from exc
    return specs


def cmd_experiment(args) -> int:
    specs = _experiment_specs(args)
    chunks = []
    for spec in specs:
        res = run_experiment(spec, jobs=args.jobs)
        csv_text = res.to_csv()
        chunks.append(csv_text if not chunks else csv_text.split("\n", 1)[1])
    _emit("".join(chunks), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="mbbcov",
        description="Block-bootstrap tests for equality of lag-zero covariance operators.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="test equality of lag-zero covariance operators")
    t.add_argument("files", nargs="+", help="one CSV panel per population (rows = days, columns = grid points)")
    t.add_argument("--block-size", type=int, action="append",
                   help="block length; repeat once per population (default: ceil(n^0.3))")
    t.add_argument("--replicates", "-B", type=int, default=1000, help="bootstrap replicates (default 1000)")
    t.add_argument("--alpha", type=float, default=0.05, help="test level (default 0.05)")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--smooth-basis", type=int, default=None, help="odd number of Fourier basis functions")
    t.add_argument("--out", "-o", default=None, help="JSON report path (default stdout)")
    t.set_defaults(func=cmd_test)

    d = sub.add_parser("diffkernel", help="export squared differences of lag-zero covariance kernels")
    d.add_argument("file_a")
    d.add_argument("file_b")
    d.add_argument("--out", "-o", required=True, help="output CSV (grid points go to <stem>.grid.csv)")
    d.add_argument("--smooth-basis", type=int, default=None)
    d.set_defaults(func=cmd_diffkernel)

    e = sub.add_parser("experiment", help="Monte-Carlo size/power study")
    e.add_argument("--preset", choices=sorted(PRESETS))
    e.add_argument("--spec", help="JSON file with experiment settings")
    e.add_argument("--family", choices=["FAR", "FMA", "IID"], type=str.upper)
    e.add_argument("--delta", type=float)
    e.add_argument("--n", type=int)
    e.add_argument("--L", type=int, help="grid points per curve (default 21)")
    e.add_argument("--block-sizes", type=_csv_list(int))
    e.add_argument("--alphas", type=_csv_list(float))
    e.add_argument("--B", type=int)
    e.add_argument("--R", type=int)
    e.add_argument("--seed", type=int)
    e.add_argument("--smooth-basis", type=int, help="Fourier basis size; 0 disables (default 21)")
    e.add_argument("--psi-normalization", choices=["unit", "real_line"])
    e.add_argument("--jobs", type=int, default=1, help="worker threads")
    e.add_argument("--out", "-o", default=None, help=f"CSV path with columns {','.join(CSV_COLUMNS)}")
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"mbbcov: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, GridMismatchError) as exc:
        print(f"mbbcov: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"mbbcov: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
