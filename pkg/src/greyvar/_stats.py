"""Streaming moment accumulation for Monte Carlo drivers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class RunningMoments:
    """Numerically stable streaming mean/variance (Welford, mergeable).

    Batches can be accumulated in any grouping; `merge` uses the parallel
    update rule, so reducing per-batch accumulators in a fixed order gives
    bit-reproducible results regardless of how the batches were produced.
    """

    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def push(self, x: float) -> None:
        self.n += 1
        delta = x - self.mean
        self.mean += delta / self.n
        self.m2 += delta * (x - self.mean)

    def push_many(self, xs) -> None:
        xs = np.asarray(xs, dtype=float)
        if xs.size == 0:
            return
        other = RunningMoments(
            n=int(xs.size),
            mean=float(xs.mean()),
            m2=float(((xs - xs.mean()) ** 2).sum()),
        )
        self.merge(other)

    def merge(self, other: "RunningMoments") -> None:
        if other.n == 0:
            return
        if self.n == 0:
            self.n, self.mean, self.m2 = other.n, other.mean, other.m2
            return
        n = self.n + other.n
        delta = other.mean - self.mean
        self.mean += delta * other.n / n
        self.m2 += other.m2 + delta * delta * self.n * other.n / n
        self.n = n

    @property
    def variance(self) -> float:
        """Unbiased sample variance (ddof=1)."""
        if self.n < 2:
            return float("nan")
        return self.m2 / (self.n - 1)

    @property
    def sd(self) -> float:
        return float(np.sqrt(self.variance))
