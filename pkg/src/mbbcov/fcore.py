"""Grid-based function space arithmetic.

Curves live on a closed equidistant grid over [0, 1] and integrals are
taken with the trapezoidal rule. Integral operators are stored as raw
kernel matrices, so Hilbert-Schmidt quantities reduce to weighted sums.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np


class GridMismatchError(ValueError):
    """Raised when objects defined on different grids are combined."""


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Grid:
    """Equidistant evaluation points on [0, 1] with trapezoidal weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", _frozen(self.points))
        object.__setattr__(self, "weights", _frozen(self.weights))
        if self.points.ndim != 1 or self.points.shape != self.weights.shape:
            raise ValueError("points and weights must be 1-d of equal length")
        if self.points.size < 2:
            raise ValueError("a grid needs at least 2 points")

    def __len__(self) -> int:
        return self.points.size

    @property
    def size(self) -> int:
        return self.points.size

    @property
    def spacing(self) -> float:
        return 1.0 / (self.points.size - 1)

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return self is other or (
            np.array_equal(self.points, other.points)
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self):
        return hash(self.points.size)


def make_grid(L: int) -> Grid:
    """Return the closed equidistant grid with ``L`` points on [0, 1].

    Parameters
    ----------
    L : int
        Number of grid points, at least 2.

    Returns
    -------
    Grid
        Points ``j / (L - 1)`` and trapezoidal weights summing to one.
    """
    if int(L) != L or L < 2:
        raise ValueError(f"grid size must be an integer >= 2, got {L!r}")
    L = int(L)
    points = np.arange(L, dtype=float) / (L - 1)
    points[-1] = 1.0
    weights = np.full(L, 1.0 / (L - 1))
    weights[0] = weights[-1] = 0.5 / (L - 1)
    return Grid(points, weights)


@dataclass(frozen=True, eq=False)
class Curve:
    """One function observed on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        if values.shape != (self.grid.size,):
            raise ValueError(
                f"curve has {values.shape} values, grid has {self.grid.size} points"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("curve values must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: Grid, fn) -> Curve:
        return cls(grid, fn(grid.points))


@dataclass(frozen=True, eq=False)
class FunctionalSeries:
    """Time-ordered curves on a shared grid, stored as an ``(n, L)`` array."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 2 or values.shape[1] != self.grid.size:
            raise ValueError(
                f"series must have shape (n, {self.grid.size}), got {values.shape}"
            )
        if values.shape[0] < 1:
            raise ValueError("series needs at least one curve")
        if not np.all(np.isfinite(values)):
            raise ValueError("series values must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_curves(cls, curves: Sequence[Curve]) -> FunctionalSeries:
        if not curves:
            raise ValueError("series needs at least one curve")
        grid = curves[0].grid
        for c in curves:
            _check_grids(grid, c.grid)
        return cls(grid, np.stack([c.values for c in curves]))

    def __len__(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, t: int) -> Curve:
        return Curve(self.grid, self.values[t])

    @property
    def curves(self) -> list[Curve]:
        return [self[t] for t in range(len(self))]


@dataclass(frozen=True, eq=False)
class KernelOperator:
    """Hilbert-Schmidt integral operator given by kernel values on grid x grid.

    ``kernel[i, j]`` is ``k(points[i], points[j])`` and the operator maps
    ``x`` to ``u -> integral k(u, v) x(v) dv``.
    """

    grid: Grid
    kernel: np.ndarray

    def __post_init__(self):
        kernel = _frozen(self.kernel)
        L = self.grid.size
        if kernel.shape != (L, L):
            raise ValueError(f"kernel must have shape ({L}, {L}), got {kernel.shape}")
        if not np.all(np.isfinite(kernel)):
            raise ValueError("kernel entries must be finite")
        object.__setattr__(self, "kernel", kernel)

    @classmethod
    def zeros(cls, grid: Grid) -> KernelOperator:
        return cls(grid, np.zeros((grid.size, grid.size)))

    def __add__(self, other: KernelOperator) -> KernelOperator:
        _check_grids(self.grid, other.grid)
        return KernelOperator(self.grid, self.kernel + other.kernel)

    def __sub__(self, other: KernelOperator) -> KernelOperator:
        _check_grids(self.grid, other.grid)
        return KernelOperator(self.grid, self.kernel - other.kernel)

    def __mul__(self, c: float) -> KernelOperator:
        return KernelOperator(self.grid, c * self.kernel)

    __rmul__ = __mul__

    def transpose(self) -> KernelOperator:
        return KernelOperator(self.grid, self.kernel.T)

    def apply(self, f: Curve) -> Curve:
        _check_grids(self.grid, f.grid)
        return Curve(self.grid, self.kernel @ (self.grid.weights * f.values))


def _check_grids(a: Grid, b: Grid) -> None:
    if a != b:
        raise GridMismatchError(f"grids differ: {a.size} vs {b.size} points")


def inner_product(f: Curve, g: Curve) -> float:
    """Trapezoidal approximation of the L2 inner product of two curves."""
    _check_grids(f.grid, g.grid)
    return float(np.sum(f.grid.weights * (f.values * g.values)))


def l2_norm(f: Curve) -> float:
    return float(np.sqrt(max(inner_product(f, f), 0.0)))


def tensor_product(f: Curve, g: Curve) -> KernelOperator:
    """Rank-one operator ``x -> <f, x> g``; its kernel is ``g(u) f(v)``."""
    _check_grids(f.grid, g.grid)
    return KernelOperator(f.grid, np.outer(g.values, f.values))


def hs_inner(A: KernelOperator, B: KernelOperator) -> float:
    _check_grids(A.grid, B.grid)
    w = A.grid.weights
    return float(w @ (A.kernel * B.kernel) @ w)


def hs_norm(A: KernelOperator) -> float:
    return float(np.sqrt(max(hs_inner(A, A), 0.0)))


def kernel_linear_combine(
    coeffs: Sequence[float], ops: Sequence[KernelOperator]
) -> KernelOperator:
    """Entrywise linear combination ``sum_k coeffs[k] * ops[k]``."""
    if len(coeffs) != len(ops):
        raise ValueError(f"{len(coeffs)} coefficients for {len(ops)} operators")
    if not ops:
        raise ValueError("need at least one operator")
    grid = ops[0].grid
    out = np.zeros((grid.size, grid.size))
    for c, op in zip(coeffs, ops):
        _check_grids(grid, op.grid)
        out += c * op.kernel
    return KernelOperator(grid, out)


def hs_sqrt_weights(grid: Grid) -> np.ndarray:
    """``sqrt(w_i w_j)`` as an ``(L, L)`` array.

    Multiplying kernels by this turns HS inner products into plain dot
    products of the flattened arrays.
    """
    s = np.sqrt(grid.weights)
    return np.outer(s, s)
