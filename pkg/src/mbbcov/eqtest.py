"""Bootstrap test for equality of lag-zero autocovariance operators.

Each population's tensor series is block-resampled on its own, then
recentred so every pseudo element has conditional mean equal to the pooled
tensor mean. The statistic is recomputed on the pseudo samples to
approximate its null distribution.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from itertools import combinations

import numpy as np

from .autocov import TensorSequence, tensor_sequence
from .fcore import FunctionalSeries, KernelOperator, _check_grids, hs_sqrt_weights
from .mbb import BlockPlan, RngSeed, as_generator


def default_block_size(n: int) -> int:
    """Smallest integer >= ``n**0.3``, clamped to ``[1, n]``."""
    if n < 1:
        raise ValueError(f"series length must be positive, got {n}")
    n = int(n)
    b = max(1, math.ceil(n**0.3) - 1)
    # b >= n**0.3  <=>  b**10 >= n**3, decided in exact integer arithmetic
    while b**10 < n**3:
        b += 1
    return min(b, n)


@dataclass(frozen=True)
class TestConfig:
    """Settings of one bootstrap test.

    ``block_sizes`` may be ``None`` or contain ``None`` entries; those are
    filled with :func:`default_block_size` of the population length.
    """

    __test__ = False  # not a pytest class

    block_sizes: tuple[int | None, ...] | None = None
    replicates: int = 1000
    alpha: float = 0.05
    seed: RngSeed = field(default_factory=lambda: RngSeed(0))

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.block_sizes is not None:
            object.__setattr__(self, "block_sizes", tuple(self.block_sizes))

    def resolve(self, lengths: Sequence[int]) -> TestConfig:
        """Copy with every block size filled in and checked against ``lengths``."""
        K = len(lengths)
        given = self.block_sizes
        if given is None:
            given = (None,) * K
        if len(given) == 1 and K > 1:
            given = given * K
        if len(given) != K:
            raise ValueError(f"{len(given)} block sizes for {K} populations")
        sizes = []
        for b, n in zip(given, lengths):
            b = default_block_size(n) if b is None else int(b)
            if not 1 <= b <= n:
                raise ValueError(f"block size {b} invalid for series of length {n}")
            sizes.append(b)
        return replace(self, block_sizes=tuple(sizes))


@dataclass(frozen=True, eq=False)
class TestReport:
    __test__ = False

    t_observed: float
    t_bootstrap: np.ndarray
    p_value: float
    critical_value: float
    reject: bool
    config: TestConfig
    n: tuple[int, ...]
    M: int

    @property
    def block_sizes(self) -> tuple[int, ...]:
        return self.config.block_sizes


def _check_populations(populations: Sequence[TensorSequence]) -> None:
    if len(populations) < 2:
        raise ValueError(f"need at least two populations, got {len(populations)}")
    grid = populations[0].grid
    for p in populations[1:]:
        _check_grids(grid, p.grid)


def pooled_mean(populations: Sequence[TensorSequence]) -> KernelOperator:
    """Mean of all tensor elements of all populations together."""
    _check_populations(populations)
    M = sum(len(p) for p in populations)
    total = sum(p.elements.sum(axis=0) for p in populations)
    return KernelOperator(populations[0].grid, total / M)


def rolling_block_means(seq: TensorSequence, b: int) -> np.ndarray:
    """Means over the ``N = n - b + 1`` windows starting at offsets ``0 .. b-1``.

    Entry ``xi`` is the conditional mean of a pseudo element sitting at
    within-block offset ``xi``. Returns an array of shape ``(b, L, L)``.
    """
    plan = BlockPlan(len(seq), int(b))
    csum = np.concatenate([np.zeros((1,) + seq.elements.shape[1:]), np.cumsum(seq.elements, axis=0)])
    xi = np.arange(plan.b)
    return (csum[xi + plan.N] - csum[xi]) / plan.N


def _population_generators(seed: RngSeed, K: int) -> list[np.random.Generator]:
    return [seed.child(i).generator() for i in range(K)]


def pseudo_from_starts(
    seq: TensorSequence, b: int, starts: np.ndarray, pooled: KernelOperator
) -> TensorSequence:
    """Null-enforced pseudo sample for one population given its block starts."""
    plan = BlockPlan(len(seq), int(b))
    rolling = rolling_block_means(seq, b)
    resampled = seq.elements[plan.indices(starts)]
    pseudo = pooled.kernel + resampled - rolling[plan.offsets]
    return TensorSequence(seq.grid, seq.lag, pseudo)


def null_pseudo_sample(
    populations: Sequence[TensorSequence], block_sizes: Sequence[int], rng
) -> list[TensorSequence]:
    """One bootstrap draw of pseudo tensor series satisfying the null.

    ``rng`` is either an :class:`RngSeed` (population i uses ``rng.child(i)``)
    or a sequence of one generator per population.
    """
    _check_populations(populations)
    K = len(populations)
    if len(block_sizes) != K:
        raise ValueError(f"{len(block_sizes)} block sizes for {K} populations")
    gens = _population_generators(rng, K) if isinstance(rng, RngSeed) else [as_generator(g) for g in rng]
    pooled = pooled_mean(populations)
    out = []
    for seq, b, gen in zip(populations, block_sizes, gens):
        starts = BlockPlan(len(seq), int(b)).draw_starts(gen)
        out.append(pseudo_from_starts(seq, b, starts, pooled))
    return out


def statistic_tm(pop1: TensorSequence, pop2: TensorSequence) -> float:
    """``(n1 n2 / M) * ||mean(pop1) - mean(pop2)||_HS**2``."""
    _check_grids(pop1.grid, pop2.grid)
    n1, n2 = len(pop1), len(pop2)
    diff = pop1.elements.mean(axis=0) - pop2.elements.mean(axis=0)
    w = pop1.grid.weights
    return float(n1 * n2 / (n1 + n2) * (w @ (diff * diff) @ w))


def statistic_tm_multi(populations: Sequence[TensorSequence]) -> float:
    """Sum of the pairwise two-sample statistics with ``M`` the total size.

    With K = 2 this is :func:`statistic_tm`. For K > 2 it has no proven
    bootstrap validity.
    """
    _check_populations(populations)
    if len(populations) == 2:
        return statistic_tm(*populations)
    M = sum(len(p) for p in populations)
    w = populations[0].grid.weights
    means = [p.elements.mean(axis=0) for p in populations]
    total = 0.0
    for i, j in combinations(range(len(populations)), 2):
        d = means[i] - means[j]
        total += len(populations[i]) * len(populations[j]) / M * float(w @ (d * d) @ w)
    return total


def _pairwise_statistic(means: Sequence[np.ndarray], sizes: Sequence[int]) -> np.ndarray:
    """Statistic from flattened, sqrt-weighted means; ``means[i]`` is ``(B, L*L)``."""
    M = sum(sizes)
    total = 0.0
    for i, j in combinations(range(len(means)), 2):
        d = means[i] - means[j]
        total = total + sizes[i] * sizes[j] / M * np.einsum("ij,ij->i", d, d)
    return total


def bootstrap_statistics(
    populations: Sequence[TensorSequence],
    block_sizes: Sequence[int],
    replicates: int,
    generators: Sequence[np.random.Generator],
) -> np.ndarray:
    """``replicates`` draws of the bootstrap statistic, ordered by replicate.

    Uses that a pseudo sample's mean is linear in how often each source
    element was drawn: ``pooled + (counts @ Y - sum_xi m_xi Ytilde_xi) / n``.
    The pooled term cancels in every pairwise difference.
    """
    _check_populations(populations)
    grid = populations[0].grid
    sw = hs_sqrt_weights(grid)
    sizes = [len(p) for p in populations]
    means = []
    for seq, b, gen in zip(populations, block_sizes, generators):
        plan = BlockPlan(len(seq), int(b))
        starts = plan.draw_starts(gen, size=replicates)
        flat = (seq.elements * sw).reshape(len(seq), -1)
        # sum over positions of the offset-matched rolling means is sum_t E*(counts_t) Y_t
        shift = plan.expected_counts() @ flat
        means.append((plan.counts(starts) @ flat - shift) / len(seq))
    return _pairwise_statistic(means, sizes)


def p_value(t_observed: float, t_bootstrap: np.ndarray) -> float:
    """Add-one Monte-Carlo p-value ``(1 + #{T* >= T}) / (B + 1)``."""
    t_bootstrap = np.asarray(t_bootstrap)
    return (1 + int(np.count_nonzero(t_bootstrap >= t_observed))) / (t_bootstrap.size + 1)


def critical_value(t_bootstrap: np.ndarray, alpha: float) -> float:
    """Order statistic of rank ``ceil((1 - alpha)(B + 1))``, or ``inf`` past B.

    ``T > critical_value`` holds exactly when ``p_value(T) <= alpha``.
    """
    t = np.sort(np.asarray(t_bootstrap))
    B = t.size
    rank = math.ceil(round((1 - alpha) * (B + 1), 9))
    if rank > B:
        return math.inf
    return float(t[rank - 1])


def lag_zero_sequences(series: Sequence[FunctionalSeries]) -> list[TensorSequence]:
    return [tensor_sequence(s, 0) for s in series]


def run_test(series: Sequence[FunctionalSeries], config: TestConfig | None = None) -> TestReport:
    """Bootstrap test that all populations share one lag-zero covariance operator.

    Parameters
    ----------
    series : sequence of FunctionalSeries
        K >= 2 independent samples on a common grid.
    config : TestConfig, optional
        Block sizes, replicate count, level and seed. Population i draws its
        block starts from ``config.seed.child(i)``; replicate r uses row r.

    Returns
    -------
    TestReport
    """
    config = config or TestConfig()
    if len(series) < 2:
        raise ValueError(f"need at least two populations, got {len(series)}")
    pops = lag_zero_sequences(series)
    _check_populations(pops)
    config = config.resolve([len(p) for p in pops])
    t_obs = statistic_tm_multi(pops)
    gens = _population_generators(config.seed, len(pops))
    t_star = bootstrap_statistics(pops, config.block_sizes, config.replicates, gens)
    t_star = np.maximum(t_star, 0.0)
    crit = critical_value(t_star, config.alpha)
    return TestReport(
        t_observed=t_obs,
        t_bootstrap=t_star,
        p_value=p_value(t_obs, t_star),
        critical_value=crit,
        reject=bool(t_obs > crit),
        config=config,
        n=tuple(len(p) for p in pops),
        M=sum(len(p) for p in pops),
    )
