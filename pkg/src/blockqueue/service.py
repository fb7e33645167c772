"""Service-time distributions for the batch queue.

The time to assemble and commit one batch (one block) is modeled as a
nonnegative random variable S. The analytic solver needs three things
from it: the mean, the second moment, and the Laplace-Stieltjes
transform evaluated at complex arguments. All three are carried here in
closed form, so no numerical integration happens anywhere downstream.

The exponential kind is the one backed by chain measurements; the
deterministic and Erlang kinds exist to exercise the general solver
path and are labeled experimental.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

EXPONENTIAL = "exponential"
DETERMINISTIC = "deterministic"
ERLANG = "erlang"


@dataclass(frozen=True)
class ServiceDistribution:
    """Immutable description of the batch service time S.

    Construct through the classmethods rather than directly; they fill
    in the exact moments for each kind.
    """

    kind: str
    mean: float
    second_moment: float
    rate: float = 0.0
    delay: float = 0.0
    shape: int = 0

    def __post_init__(self) -> None:
        if self.kind not in (EXPONENTIAL, DETERMINISTIC, ERLANG):
            raise ValueError(f"unknown service kind {self.kind!r}")
        if not (self.mean > 0 and math.isfinite(self.mean)):
            raise ValueError("mean service time must be positive and finite")
        if self.second_moment < self.mean * self.mean * (1.0 - 1e-12):
            raise ValueError("second moment below mean squared")

    @classmethod
    def exponential(cls, rate: float) -> "ServiceDistribution":
        if not (rate > 0 and math.isfinite(rate)):
            raise ValueError("rate must be positive and finite")
        return cls(
            kind=EXPONENTIAL,
            mean=1.0 / rate,
            second_moment=2.0 / (rate * rate),
            rate=rate,
        )

    @classmethod
    def deterministic(cls, delay: float) -> "ServiceDistribution":
        """Experimental: constant service time."""
        if not (delay > 0 and math.isfinite(delay)):
            raise ValueError("delay must be positive and finite")
        return cls(
            kind=DETERMINISTIC,
            mean=delay,
            second_moment=delay * delay,
            delay=delay,
        )

    @classmethod
    def erlang(cls, shape: int, rate: float) -> "ServiceDistribution":
        """Experimental: sum of ``shape`` exponential stages."""
        if not isinstance(shape, int) or shape < 1:
            raise ValueError("shape must be a positive integer")
        if not (rate > 0 and math.isfinite(rate)):
            raise ValueError("rate must be positive and finite")
        mean = shape / rate
        return cls(
            kind=ERLANG,
            mean=mean,
            second_moment=shape * (shape + 1) / (rate * rate),
            rate=rate,
            shape=shape,
        )

    def lst(self, s: complex | float) -> complex | float:
        """Laplace-Stieltjes transform E[exp(-s S)], principal branch.

        Exact closed form per kind. Raises ValueError at the transform
        pole (s equal to minus the rate for the rational kinds).
        """
        if self.kind == EXPONENTIAL:
            if s == -self.rate:
                raise ValueError("transform pole at s = -rate")
            return self.rate / (s + self.rate)
        if self.kind == DETERMINISTIC:
            if isinstance(s, complex):
                return cmath.exp(-s * self.delay)
            return math.exp(-s * self.delay)
        if s == -self.rate:
            raise ValueError("transform pole at s = -rate")
        return (self.rate / (s + self.rate)) ** self.shape

    def lst_array(self, s: np.ndarray) -> np.ndarray:
        """Vectorized transform for arrays of complex arguments."""
        if self.kind == EXPONENTIAL:
            return self.rate / (s + self.rate)
        if self.kind == DETERMINISTIC:
            return np.exp(-s * self.delay)
        return (self.rate / (s + self.rate)) ** self.shape

    def lst_root_array(self, s: np.ndarray, b: int) -> np.ndarray:
        """lst(s)**(1/b) continued analytically from real positive s.

        Taking the principal b-th root of the finished transform folds
        the phase once Im(log lst(s)) leaves (-pi, pi], which happens
        for the constant and staged kinds at large rate-delay products.
        Each closed form below stays on the branch that is real and
        positive for real s, which is the branch the root iteration
        needs. Re(s) >= 0 keeps 1 + s/rate off the negative real axis,
        so the principal log inside is single valued.
        """
        if self.kind == EXPONENTIAL:
            return np.exp(-np.log(1.0 + s / self.rate) / b)
        if self.kind == DETERMINISTIC:
            return np.exp(-s * (self.delay / b))
        return np.exp(-np.log(1.0 + s / self.rate) * (self.shape / b))


@dataclass(frozen=True)
class ExponentialFit:
    """Result of fitting an exponential law to interval samples.

    ``observed`` holds per-bin relative frequencies of the samples and
    ``model`` the matching bin probabilities of the fitted law, the raw
    material for a frequency-vs-model comparison plot. Samples beyond
    the last bin edge are counted in ``n_samples`` but fall outside the
    histogram.
    """

    dist: ServiceDistribution
    rate: float
    n_samples: int
    bin_edges: np.ndarray = field(repr=False)
    observed: np.ndarray = field(repr=False)
    model: np.ndarray = field(repr=False)


def fit_exponential(
    samples,
    bin_width: float = 60.0,
    upper: float = 6600.0,
) -> ExponentialFit:
    """Fit an exponential service law by the sample mean.

    Zero-valued samples are accepted: measured commit timestamps are
    not monotone, so observed intervals can be clamped to zero. The
    rate is 1 over the sample mean.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.size == 0:
        raise ValueError("no samples to fit")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ValueError("samples must be finite and nonnegative")
    mean = float(arr.mean())
    if mean == 0.0:
        raise ValueError("all samples are zero; rate undefined")
    rate = 1.0 / mean
    if bin_width <= 0 or upper <= 0:
        raise ValueError("bin_width and upper must be positive")
    edges = np.arange(0.0, upper + bin_width, bin_width)
    counts, edges = np.histogram(arr, bins=edges)
    observed = counts / arr.size
    model = np.exp(-rate * edges[:-1]) - np.exp(-rate * edges[1:])
    return ExponentialFit(
        dist=ServiceDistribution.exponential(rate),
        rate=rate,
        n_samples=int(arr.size),
        bin_edges=edges,
        observed=observed,
        model=model,
    )
