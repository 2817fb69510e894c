"""Moving block bootstrap over tensor-product sequences.

Random draws come from numpy's PCG64 generator keyed by a
``SeedSequence(seed, spawn_key=(stream, *subkey))``; bounded integers use
numpy's unbiased (Lemire rejection) sampler, so resamples are reproducible
across platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .autocov import TensorSequence, tensor_sequence
from .fcore import FunctionalSeries, KernelOperator, hs_sqrt_weights

_UINT64_MAX = 2**64 - 1


@dataclass(frozen=True)
class RngSeed:
    """Seed material for one reproducible stream of draws.

    ``(seed, stream)`` identifies a stream; ``child`` derives independent
    sub-streams without touching the parent.
    """

    seed: int
    stream: int = 0
    subkey: tuple[int, ...] = ()

    def __post_init__(self):
        for name, v in (("seed", self.seed), ("stream", self.stream)):
            if not 0 <= int(v) <= _UINT64_MAX:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v}")

    def child(self, *keys: int) -> RngSeed:
        return RngSeed(self.seed, self.stream, self.subkey + tuple(int(k) for k in keys))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream), *self.subkey))
        return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngSeed):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return RngSeed(int(rng)).generator()
    raise TypeError(f"cannot build a generator from {type(rng).__name__}")


@dataclass(frozen=True)
class BlockPlan:
    """Block bookkeeping for a sequence of length ``n_eff`` and block length ``b``."""

    n_eff: int
    b: int

    def __post_init__(self):
        if not (1 <= self.b <= self.n_eff):
            raise ValueError(f"block length must satisfy 1 <= b <= {self.n_eff}, got {self.b}")

    @property
    def N(self) -> int:
        """Number of overlapping blocks available."""
        return self.n_eff - self.b + 1

    @property
    def k(self) -> int:
        """Number of blocks drawn."""
        return math.ceil(self.n_eff / self.b)

    @property
    def offsets(self) -> np.ndarray:
        """Within-block offset (0-based) of each output position."""
        return np.arange(self.n_eff) % self.b

    def draw_starts(self, gen: np.random.Generator, size: int | None = None) -> np.ndarray:
        """Uniform 0-based block starts, shape ``(k,)`` or ``(size, k)``."""
        shape = self.k if size is None else (size, self.k)
        return gen.integers(0, self.N, size=shape)

    def indices(self, starts: np.ndarray) -> np.ndarray:
        """Source indices of the concatenated blocks, truncated to ``n_eff``.

        Works row-wise on a 2-d array of starts.
        """
        starts = np.asarray(starts)
        idx = starts[..., :, None] + np.arange(self.b)
        idx = idx.reshape(*starts.shape[:-1], self.k * self.b)
        return idx[..., : self.n_eff]

    def counts(self, starts: np.ndarray) -> np.ndarray:
        """How often each source element is used; one row per row of ``starts``."""
        idx = np.atleast_2d(self.indices(starts))
        rows = idx.shape[0]
        flat = (idx + self.n_eff * np.arange(rows)[:, None]).ravel()
        return np.bincount(flat, minlength=rows * self.n_eff).reshape(rows, self.n_eff)

    def expected_counts(self) -> np.ndarray:
        """Conditional expectation of ``counts``.

        Position p has offset ``xi = p mod b`` and draws the source element
        ``q + xi`` with q uniform on the N starts, so each source index in
        ``xi .. xi + N - 1`` gets ``1/N`` from that position.
        """
        per_offset = np.bincount(self.offsets, minlength=self.b).astype(float)
        diff = np.zeros(self.n_eff + 1)
        np.add.at(diff, np.arange(self.b), per_offset)
        np.add.at(diff, np.arange(self.b) + self.N, -per_offset)
        return np.cumsum(diff[:-1]) / self.N


def _plan(seq: TensorSequence, b: int) -> BlockPlan:
    return BlockPlan(len(seq), int(b))


def mbb_resample(seq: TensorSequence, b: int, rng) -> TensorSequence:
    """One moving-block resample of ``seq``.

    Draws ``k = ceil(n_eff / b)`` block starts uniformly, concatenates the
    blocks and truncates to ``n_eff`` elements.
    """
    plan = _plan(seq, b)
    starts = plan.draw_starts(as_generator(rng))
    return seq.take(plan.indices(starts))


def bootstrap_autocov(resampled: TensorSequence, n: int) -> KernelOperator:
    """Bootstrap autocovariance: sum of the resampled elements divided by ``n``."""
    expected = n - abs(resampled.lag)
    if len(resampled) != expected:
        raise ValueError(
            f"resampled sequence has {len(resampled)} elements, expected n - |h| = {expected}"
        )
    return KernelOperator(resampled.grid, resampled.elements.sum(axis=0) / n)


def mbb_expectation(seq: TensorSequence, b: int, n: int) -> KernelOperator:
    """Exact conditional mean of the bootstrap autocovariance given the data.

    Valid for any ``n_eff``; with truncation the per-position inclusion
    weights are summed rather than assuming ``n_eff`` is a multiple of b.
    """
    plan = _plan(seq, b)
    w = plan.expected_counts()
    return KernelOperator(seq.grid, np.tensordot(w, seq.elements, axes=1) / n)


def mbb_expectation_closed_form(seq: TensorSequence, b: int, n: int) -> KernelOperator:
    """Closed-form bootstrap mean, valid only when ``b`` divides ``n_eff``.

    ``(1/N) (n_eff/n) [sum_t Y_t - sum_{j<b} (1 - j/b) (Y_j + Y_{n_eff-j+1})]``
    """
    plan = _plan(seq, b)
    if plan.n_eff % plan.b:
        raise ValueError("closed form requires the block length to divide n - h")
    Y = seq.elements
    total = Y.sum(axis=0)
    for j in range(1, plan.b):
        total = total - (1 - j / plan.b) * (Y[j - 1] + Y[plan.n_eff - j])
    return KernelOperator(seq.grid, total * plan.n_eff / (plan.N * n))


def mbb_clt_sample(s: FunctionalSeries, h: int, b: int, B: int, seed) -> np.ndarray:
    """Bootstrap draws of ``sqrt(n) * ||C*_h - E*(C*_h)||_HS``.

    Parameters
    ----------
    s : FunctionalSeries
        Observed series of length n.
    h : int
        Lag, ``-n < h < n``.
    b : int
        Block length.
    B : int
        Number of bootstrap replicates.
    seed : RngSeed, Generator or int
        Row r of the drawn starts belongs to replicate r.

    Returns
    -------
    ndarray of shape (B,)
    """
    if B < 1:
        raise ValueError(f"need at least one replicate, got B={B}")
    n = len(s)
    seq = tensor_sequence(s, h)
    plan = _plan(seq, b)
    starts = plan.draw_starts(as_generator(seed), size=B)
    centred = plan.counts(starts) - plan.expected_counts()
    flat = (seq.elements * hs_sqrt_weights(s.grid)).reshape(len(seq), -1)
    dev = centred @ flat / n
    return np.sqrt(n) * np.sqrt(np.einsum("ij,ij->i", dev, dev))
