"""Functional FAR/FMA data generators and the size/power experiment runner."""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import integrate

from .fcore import Curve, FunctionalSeries, Grid, KernelOperator, _check_grids, make_grid
from .eqtest import TestConfig, run_test
from .mbb import RngSeed, as_generator

FAMILIES = ("FAR", "FMA", "IID")
PSI_NORMALIZATIONS = ("unit", "real_line")


def brownian_bridges(grid: Grid, count: int, rng) -> np.ndarray:
    """``count`` independent Brownian bridges on ``grid``, shape ``(count, L)``.

    Brownian motion is built from Gaussian increments with variance equal to
    the grid spacing and pinned by ``B(t) = W(t) - t W(1)``.
    """
    gen = as_generator(rng)
    steps = gen.normal(0.0, math.sqrt(grid.spacing), size=(count, grid.size - 1))
    W = np.zeros((count, grid.size))
    np.cumsum(steps, axis=1, out=W[:, 1:])
    B = W - grid.points * W[:, -1:]
    B[:, 0] = 0.0
    B[:, -1] = 0.0
    return B


def brownian_bridge(grid: Grid, rng) -> Curve:
    return Curve(grid, brownian_bridges(grid, 1, rng)[0])


@lru_cache(maxsize=None)
def psi_denominator(normalization: str = "unit") -> float:
    """``4 * integral exp(-t**2) dt`` over [0, 1] (``"unit"``) or the real line."""
    if normalization == "unit":
        val, _ = integrate.quad(lambda t: math.exp(-t * t), 0.0, 1.0, epsabs=1e-14, epsrel=1e-14)
    elif normalization == "real_line":
        val, _ = integrate.quad(lambda t: math.exp(-t * t), -np.inf, np.inf, epsabs=1e-13, epsrel=1e-12)
    else:
        raise ValueError(f"unknown psi normalization {normalization!r}; use one of {PSI_NORMALIZATIONS}")
    return 4.0 * val


def psi_kernel(grid: Grid, normalization: str = "unit") -> KernelOperator:
    """Gaussian-shaped kernel ``exp(-(u**2 + v**2) / 2) / (4 int exp(-t**2))``.

    With the [0, 1] normalization the operator is rank one with eigenvalue
    (and HS norm) exactly 1/4.
    """
    a = np.exp(-grid.points**2 / 2)
    return KernelOperator(grid, np.outer(a, a) / psi_denominator(normalization))


def apply_integral_operator(K: KernelOperator, f: Curve) -> Curve:
    """``u -> sum_j w_j K(u, v_j) f(v_j)``."""
    _check_grids(K.grid, f.grid)
    return Curve(K.grid, K.kernel @ (K.grid.weights * f.values))


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """One population's data-generating process.

    ``kernel`` overrides the default psi kernel (useful for degenerate
    checks); ``burn_in`` only matters for FAR.
    """

    family: str = "FAR"
    delta: float = 0.0
    n: int = 200
    burn_in: int = 100
    grid: Grid = field(default_factory=lambda: make_grid(21))
    kernel: KernelOperator | None = None
    psi_normalization: str = "unit"

    def __post_init__(self):
        fam = self.family.upper()
        if fam not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got {self.family!r}")
        object.__setattr__(self, "family", fam)
        if not (self.delta >= 0 and math.isfinite(self.delta)):
            raise ValueError(f"delta must be a finite nonnegative number, got {self.delta}")
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        if self.burn_in < 0:
            raise ValueError(f"burn_in must be nonnegative, got {self.burn_in}")
        if self.psi_normalization not in PSI_NORMALIZATIONS:
            raise ValueError(f"unknown psi normalization {self.psi_normalization!r}")
        if self.kernel is not None:
            _check_grids(self.grid, self.kernel.grid)

    def operator(self) -> KernelOperator:
        return self.kernel if self.kernel is not None else psi_kernel(self.grid, self.psi_normalization)


def simulate(spec: ModelSpec, rng) -> FunctionalSeries:
    """Draw a series of length ``spec.n`` from the model.

    FAR:  X_t = Psi X_{t-1} + delta X_{t-2} + B_t, started from zero curves,
          first ``burn_in`` values discarded.
    FMA:  X_t = Psi B_{t-1} + delta B_{t-2} + B_t.
    IID:  X_t = B_t.

    All innovations are drawn up front in time order with a single call to
    :func:`brownian_bridges`.
    """
    grid = spec.grid
    n = spec.n
    if spec.family == "IID":
        return FunctionalSeries(grid, brownian_bridges(grid, n, rng))
    K = spec.operator()
    # row i of A maps a curve to (Psi x)(u_i) under the quadrature rule
    A = K.kernel * grid.weights
    if spec.family == "FMA":
        B = brownian_bridges(grid, n + 2, rng)
        X = B[2:] + B[1:-1] @ A.T + spec.delta * B[:-2]
        return FunctionalSeries(grid, X)
    total = spec.burn_in + n
    B = brownian_bridges(grid, total, rng)
    X = np.zeros((total + 2, grid.size))
    for t in range(total):
        X[t + 2] = A @ X[t + 1] + spec.delta * X[t] + B[t]
    return FunctionalSeries(grid, X[2 + spec.burn_in :])


@lru_cache(maxsize=32)
def _fourier_projection(L: int, n_basis: int) -> np.ndarray:
    tau = make_grid(L).points
    cols = [np.ones(L)]
    for k in range(1, (n_basis - 1) // 2 + 1):
        cols.append(math.sqrt(2) * np.cos(2 * math.pi * k * tau))
        cols.append(math.sqrt(2) * np.sin(2 * math.pi * k * tau))
    Phi = np.column_stack(cols)
    P = Phi @ np.linalg.pinv(Phi)
    P.setflags(write=False)
    return P


def fourier_basis_projection(grid: Grid, n_basis: int) -> np.ndarray:
    """Least-squares projection matrix onto the first ``n_basis`` Fourier functions.

    On a closed grid every basis function takes equal values at 0 and 1, so
    the design matrix can be rank deficient; the pseudo-inverse still gives
    the orthogonal projection onto its column space.
    """
    if int(n_basis) != n_basis or n_basis < 1 or n_basis % 2 == 0:
        raise ValueError(f"n_basis must be an odd positive integer, got {n_basis!r}")
    if n_basis > grid.size:
        raise ValueError(f"n_basis={n_basis} exceeds grid size {grid.size}")
    return _fourier_projection(grid.size, int(n_basis))


def fourier_smooth(s: FunctionalSeries, n_basis: int = 21) -> FunctionalSeries:
    P = fourier_basis_projection(s.grid, n_basis)
    return FunctionalSeries(s.grid, s.values @ P.T)


@dataclass(frozen=True, eq=False)
class ExperimentSpec:
    model1: ModelSpec
    model2: ModelSpec
    block_sizes: tuple[int, ...] = (5,)
    alphas: tuple[float, ...] = (0.05,)
    B: int = 500
    R: int = 500
    seed: RngSeed = field(default_factory=lambda: RngSeed(0))
    smooth_basis: int | None = 21

    def __post_init__(self):
        object.__setattr__(self, "block_sizes", tuple(int(b) for b in self.block_sizes))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if self.R < 1 or self.B < 1:
            raise ValueError(f"R and B must be >= 1, got R={self.R}, B={self.B}")
        if not self.block_sizes:
            raise ValueError("need at least one block size")
        if not self.alphas or not all(0 < a < 1 for a in self.alphas):
            raise ValueError(f"alphas must be a nonempty subset of (0, 1), got {self.alphas}")
        _check_grids(self.model1.grid, self.model2.grid)
        for b in self.block_sizes:
            if not 1 <= b <= min(self.model1.n, self.model2.n):
                raise ValueError(f"block size {b} invalid for series lengths {self.model1.n}, {self.model2.n}")
        if self.smooth_basis is not None:
            fourier_basis_projection(self.model1.grid, self.smooth_basis)


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    """Rejection rates, one row per block size and one column per level.

    ``p_values[r, j]`` is the p-value of repetition r at block size j.
    """

    spec: ExperimentSpec
    rates: np.ndarray
    p_values: np.ndarray
    t_observed: np.ndarray

    @property
    def stderr(self) -> np.ndarray:
        return np.sqrt(self.rates * (1 - self.rates) / self.spec.R)

    def rate(self, block_size: int, alpha: float) -> float:
        i = self.spec.block_sizes.index(block_size)
        j = self.spec.alphas.index(alpha)
        return float(self.rates[i, j])

    def rows(self) -> list[dict]:
        sp = self.spec
        out = []
        for i, b in enumerate(sp.block_sizes):
            for j, a in enumerate(sp.alphas):
                out.append({
                    "family": sp.model2.family,
                    "delta": sp.model2.delta,
                    "n": sp.model2.n,
                    "block_size": b,
                    "alpha": a,
                    "rejection_rate": float(self.rates[i, j]),
                    "mc_stderr": float(self.stderr[i, j]),
                    "R": sp.R,
                    "B": sp.B,
                    "seed": sp.seed.seed,
                })
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows():
            writer.writerow({k: _fmt(v) for k, v in row.items()})
        return buf.getvalue()


CSV_COLUMNS = ("family", "delta", "n", "block_size", "alpha", "rejection_rate", "mc_stderr", "R", "B", "seed")


def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def _one_repetition(spec: ExperimentSpec, r: int) -> tuple[np.ndarray, float]:
    """p-values (one per block size) and observed statistic of repetition r."""
    base = spec.seed.child(r)
    series = []
    for j, model in enumerate((spec.model1, spec.model2)):
        s = simulate(model, base.child(0, j))
        if spec.smooth_basis is not None:
            s = fourier_smooth(s, spec.smooth_basis)
        series.append(s)
    pvals = np.empty(len(spec.block_sizes))
    t_obs = math.nan
    for k, b in enumerate(spec.block_sizes):
        cfg = TestConfig(block_sizes=(b, b), replicates=spec.B, alpha=0.5, seed=base.child(1, k))
        rep = run_test(series, cfg)
        pvals[k] = rep.p_value
        t_obs = rep.t_observed
    return pvals, t_obs


def run_experiment(spec: ExperimentSpec, jobs: int = 1, progress=None) -> ExperimentResult:
    """Monte-Carlo size/power study over block sizes and levels.

    Repetition r uses ``spec.seed.child(r)``; results are gathered by
    repetition index, so ``jobs`` only changes wall time.
    """
    R = spec.R
    p = np.empty((R, len(spec.block_sizes)))
    t = np.empty(R)

    def work(r):
        res = _one_repetition(spec, r)
        if progress is not None:
            progress(r)
        return res

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, range(R)))
    else:
        results = [work(r) for r in range(R)]
    for r, (pv, to) in enumerate(results):
        p[r] = pv
        t[r] = to
    # p = (1 + #{T* >= T}) / (B + 1); rejecting when T exceeds the order statistic
    # of rank ceil((1 - alpha)(B + 1)) is the same as 1 + #{T* >= T} <= floor(alpha (B + 1))
    exceed = np.rint(p * (spec.B + 1)).astype(int)
    allowed = np.floor(np.round(np.asarray(spec.alphas) * (spec.B + 1), 9)).astype(int)
    rates = (exceed[:, :, None] <= allowed[None, None, :]).mean(axis=0)
    return ExperimentResult(spec, rates, p, t)


def table1_spec(
    family: str,
    delta: float,
    *,
    n: int = 200,
    L: int = 21,
    block_sizes: Sequence[int] = (2, 4, 6, 8, 10),
    alphas: Sequence[float] = (0.01, 0.05, 0.10),
    B: int = 500,
    R: int = 500,
    seed: int = 0,
    smooth_basis: int | None = 21,
    psi_normalization: str = "unit",
) -> ExperimentSpec:
    """Two-population design of the size/power table: population 2 carries ``delta``."""
    grid = make_grid(L)
    base = ModelSpec(family=family, delta=0.0, n=n, grid=grid, psi_normalization=psi_normalization)
    return ExperimentSpec(
        model1=base,
        model2=replace(base, delta=delta),
        block_sizes=tuple(block_sizes),
        alphas=tuple(alphas),
        B=B,
        R=R,
        seed=RngSeed(seed),
        smooth_basis=smooth_basis,
    )
