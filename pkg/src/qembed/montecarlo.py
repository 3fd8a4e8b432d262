"""Blocked Monte Carlo estimation with worker-count independent results."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .sampling import RngStream, substream

__all__ = ["BLOCK_SIZE", "MonteCarloEstimate", "BoundCheck", "monte_carlo", "run_blocks"]

BLOCK_SIZE = 8192


@dataclass(frozen=True)
class MonteCarloEstimate:
    """Sample mean with its standard error ``sd / sqrt(samples)``.

    ``mean`` and ``std_error`` are floats or arrays of the same shape.  For
    complex samples the standard error uses ``E|x - mean|^2``.
    """

    mean: object
    std_error: object
    samples: int

    def __post_init__(self):
        if self.samples < 2:
            raise ValueError("a Monte Carlo estimate needs at least 2 samples")


@dataclass(frozen=True)
class BoundCheck:
    """Verdict on whether an estimated mean respects a bound.

    ``direction`` is ``"<="`` (estimate at most the bound) or ``">="``.
    The estimate may overshoot by ``sigma_margin * std_error + atol``.
    """

    estimate: MonteCarloEstimate
    bound_value: float
    direction: str = "<="
    sigma_margin: float = 3.0
    atol: float = 1e-9

    def __post_init__(self):
        if self.direction not in ("<=", ">="):
            raise ValueError(f"direction must be '<=' or '>=', got {self.direction!r}")

    @property
    def slack(self) -> float:
        return self.sigma_margin * float(self.estimate.std_error) + self.atol

    @property
    def passed(self) -> bool:
        m = float(self.estimate.mean)
        if self.direction == "<=":
            return m <= self.bound_value + self.slack
        return m >= self.bound_value - self.slack

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"


def _block_stats(x: np.ndarray):
    n = x.shape[0]
    mean = x.mean(axis=0)
    m2 = np.sum(np.abs(x - mean) ** 2, axis=0)
    return n, mean, m2


def _merge(a, b):
    # Chan et al. pairwise update of (count, mean, sum of squared deviations)
    na, ma, sa = a
    nb, mb, sb = b
    n = na + nb
    delta = mb - ma
    mean = ma + delta * (nb / n)
    m2 = sa + sb + np.abs(delta) ** 2 * (na * nb / n)
    return n, mean, m2


def _pairwise(stats):
    while len(stats) > 1:
        merged = [_merge(stats[i], stats[i + 1]) for i in range(0, len(stats) - 1, 2)]
        if len(stats) % 2:
            merged.append(stats[-1])
        stats = merged
    return stats[0]


def run_blocks(fn: Callable[[int, RngStream], object], total: int, rng: RngStream,
               block_size: int = BLOCK_SIZE, workers: int = 1) -> list:
    """Call ``fn(n, substream(rng, b))`` for each block ``b``; results in block order.

    Block sizes and streams depend only on ``total`` and ``block_size``, so
    the results do not depend on ``workers``.
    """
    nblocks = math.ceil(total / block_size)
    sizes = [min(block_size, total - b * block_size) for b in range(nblocks)]
    jobs = [(sizes[b], substream(rng, b)) for b in range(nblocks)]
    if workers > 1 and nblocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda job: fn(*job), jobs))
    return [fn(*job) for job in jobs]


def monte_carlo(sample_fn: Callable[[int, RngStream], np.ndarray], total: int, rng: RngStream,
                block_size: int = BLOCK_SIZE, workers: int = 1) -> MonteCarloEstimate:
    """Estimate ``E[X]`` from ``total`` draws of ``sample_fn``.

    ``sample_fn(n, stream)`` must return an array whose leading axis holds
    ``n`` independent samples.
    """
    if total < 2:
        raise ValueError("need at least 2 samples")
    stats = run_blocks(lambda n, s: _block_stats(np.asarray(sample_fn(n, s))), total, rng,
                       block_size, workers)
    n, mean, m2 = _pairwise(stats)
    std_error = np.sqrt(m2 / (n - 1) / n)
    if np.ndim(mean) == 0:
        mean = mean.item() if hasattr(mean, "item") else mean
        std_error = float(std_error)
    return MonteCarloEstimate(mean, std_error, n)
