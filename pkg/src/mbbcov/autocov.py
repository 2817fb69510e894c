"""Sample autocovariance operators and the centred tensor-product series."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fcore import (
    Curve,
    FunctionalSeries,
    Grid,
    KernelOperator,
    _check_grids,
    _frozen,
)


class InvalidLagError(ValueError):
    """Raised when a lag is outside ``-n < h < n``."""


@dataclass(frozen=True, eq=False)
class TensorSequence:
    """The series of centred tensor products at a fixed lag.

    ``elements`` has shape ``(n - |lag|, L, L)``; ``elements[t]`` is the
    kernel of the t-th tensor product (0-based).
    """

    grid: Grid
    lag: int
    elements: np.ndarray

    def __post_init__(self):
        elements = _frozen(self.elements)
        L = self.grid.size
        if elements.ndim != 3 or elements.shape[1:] != (L, L):
            raise ValueError(f"elements must have shape (m, {L}, {L}), got {elements.shape}")
        if elements.shape[0] < 1:
            raise ValueError("tensor sequence must be nonempty")
        object.__setattr__(self, "elements", elements)

    def __len__(self) -> int:
        return self.elements.shape[0]

    def __getitem__(self, t: int) -> KernelOperator:
        return KernelOperator(self.grid, self.elements[t])

    def mean(self) -> KernelOperator:
        return KernelOperator(self.grid, self.elements.mean(axis=0))

    def take(self, indices) -> TensorSequence:
        """Sequence made of the elements at ``indices``, in that order."""
        return TensorSequence(self.grid, self.lag, self.elements[np.asarray(indices)])


def sample_mean_curve(s: FunctionalSeries) -> Curve:
    return Curve(s.grid, s.values.mean(axis=0))


def _centred(s: FunctionalSeries) -> np.ndarray:
    return s.values - s.values.mean(axis=0)


def tensor_sequence(s: FunctionalSeries, h: int = 0) -> TensorSequence:
    """Centred tensor products at lag ``h``.

    For ``h >= 0`` element t is ``(X_t - mean) (x) (X_{t+h} - mean)``, whose
    kernel is ``(X_{t+h} - mean)(u) (X_t - mean)(v)``. For ``h < 0`` it is
    ``(X_{t-h} - mean) (x) (X_t - mean)``, t = 1..n+h. Centring always uses
    the full-sample mean.
    """
    n = len(s)
    h = int(h)
    if not -n < h < n:
        raise InvalidLagError(f"lag {h} out of range for series of length {n}")
    D = _centred(s)
    if h >= 0:
        first, second = D[: n - h], D[h:]
    else:
        first, second = D[-h:], D[: n + h]
    # kernel(i, j) = second[i] * first[j]
    elements = second[:, :, None] * first[:, None, :]
    return TensorSequence(s.grid, h, elements)


def empirical_autocov(s: FunctionalSeries, h: int = 0) -> KernelOperator:
    """Sample autocovariance operator at lag ``h``.

    The sum of the ``n - |h|`` centred products is divided by ``n``, not by
    ``n - |h|``. Lags with ``|h| >= n`` give the zero operator.
    """
    n = len(s)
    h = int(h)
    if not -n < h < n:
        return KernelOperator.zeros(s.grid)
    D = _centred(s)
    if h >= 0:
        first, second = D[: n - h], D[h:]
    else:
        first, second = D[-h:], D[: n + h]
    return KernelOperator(s.grid, second.T @ first / n)


def squared_difference_kernel(A: KernelOperator, B: KernelOperator) -> KernelOperator:
    """Entrywise ``(A - B)**2``; weighted sums of it give ``||A - B||_HS**2``."""
    _check_grids(A.grid, B.grid)
    return KernelOperator(A.grid, (A.kernel - B.kernel) ** 2)


def discretized_hs_distance(A: KernelOperator, B: KernelOperator) -> float:
    """``sqrt(L**-2 * sum_ij (a_ij - b_ij)**2)``, the unweighted Riemann version.

    Differs from the trapezoidal ``hs_norm(A - B)`` by O(1/L) through the
    boundary rows and columns.
    """
    D = squared_difference_kernel(A, B).kernel
    L = A.grid.size
    return float(np.sqrt(D.sum() / L**2))
