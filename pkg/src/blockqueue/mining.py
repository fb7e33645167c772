"""Minimum-of-uniforms race model for block generation.

n independent searchers each land on a winning position uniformly
distributed over (0, m); the block arrives at the minimum of those
positions. The exact law of the minimum is

    Pr{L <= x} = 1 - (1 - x/m)**n,   0 <= x <= m,

which for large n is close to an exponential with rate n/m. The module
samples the race, measures the Kolmogorov-Smirnov distance to the
exponential approximation, and computes the exact sup-distance between
the two laws without sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as _scipy_stats

_CHUNK_DOUBLES = 1 << 22


@dataclass(frozen=True)
class MiningRaceConfig:
    n: int
    m: float
    samples: int
    seed: int

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError("n must be a positive integer")
        if not (self.m > 0 and math.isfinite(self.m)):
            raise ValueError("m must be positive and finite")
        if not isinstance(self.samples, int) or self.samples < 1:
            raise ValueError("samples must be a positive integer")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")


def simulate_race(cfg: MiningRaceConfig) -> np.ndarray:
    """Empirical sample of the minimum, deterministic under the seed."""
    gen = np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(0,)))
    )
    out = np.empty(cfg.samples, dtype=np.float64)
    rows_per_chunk = max(1, _CHUNK_DOUBLES // cfg.n)
    pos = 0
    while pos < cfg.samples:
        k = min(rows_per_chunk, cfg.samples - pos)
        u = gen.random((k, cfg.n))
        out[pos : pos + k] = u.min(axis=1) * cfg.m
        pos += k
    return out


def exact_cdf(x, n: int, m: float):
    """Pr{L <= x} for the minimum of n uniforms on (0, m)."""
    frac = np.clip(np.asarray(x, dtype=float) / m, 0.0, 1.0)
    return 1.0 - (1.0 - frac) ** n


def exponential_approx_distance(cfg: MiningRaceConfig, sample: np.ndarray | None = None) -> float:
    """KS distance between the sampled race and Exponential(n/m)."""
    if sample is None:
        sample = simulate_race(cfg)
    return float(
        _scipy_stats.kstest(sample, "expon", args=(0.0, cfg.m / cfg.n)).statistic
    )


def exact_cdf_distance(cfg: MiningRaceConfig, sample: np.ndarray | None = None) -> float:
    """KS distance between the sampled race and its own exact law."""
    if sample is None:
        sample = simulate_race(cfg)
    return float(
        _scipy_stats.kstest(sample, lambda x: exact_cdf(x, cfg.n, cfg.m)).statistic
    )


def exact_cdf_sup_distance(n: int, grid_points: int = 200_001) -> float:
    """sup_x |exact CDF - exponential CDF|, no sampling involved.

    Scale-free: substituting u = x/m removes m, so the answer depends
    on n alone. The difference peaks at u of order 1/n, so a fine grid
    near zero is unioned with a uniform grid over [0, 1].
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    coarse = np.linspace(0.0, 1.0, grid_points)
    fine = np.linspace(0.0, min(1.0, 50.0 / n), grid_points)
    u = np.union1d(coarse, fine)
    return float(np.max(np.abs(np.exp(-float(n) * u) - (1.0 - u) ** n)))


def cdf_table(cfg: MiningRaceConfig, points: int = 200, sample: np.ndarray | None = None):
    """Rows of (x, empirical_cdf, exact_cdf, exponential_cdf)."""
    if points < 2:
        raise ValueError("points must be at least 2")
    if sample is None:
        sample = simulate_race(cfg)
    ordered = np.sort(sample)
    xs = np.linspace(0.0, float(ordered[-1]), points)
    empirical = np.searchsorted(ordered, xs, side="right") / ordered.size
    exact = exact_cdf(xs, cfg.n, cfg.m)
    expo = 1.0 - np.exp(-(cfg.n / cfg.m) * xs)
    return [
        (float(x), float(e), float(g), float(w))
        for x, e, g, w in zip(xs, empirical, exact, expo)
    ]
