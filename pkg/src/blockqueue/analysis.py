"""Stationary analysis of the single-class batch-service queue.

Transactions arrive as a Poisson stream at rate lambda and are
committed in batches of at most b by a single server whose batch
duration is S. Arrivals may join the batch in progress while it has
room, so the model is a batch queue with an accessible batch.

The stationary queue length is pinned down by the b-1 roots of

    z**b = lst(lambda - lambda*z)

inside the open unit disk, together with b boundary completion rates
alpha_1..alpha_b (alpha_k is the stationary rate of batch completions
that occur with exactly k transactions present). The roots give b-1
homogeneous linear equations for alpha, normalization gives the b-th,
and the mean confirmation time follows in closed form.

All operations are pure functions of their inputs; results are
immutable and safe to share between threads.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .errors import InstabilityError, NumericalError, PrecisionError
from .service import ServiceDistribution

FIXED_POINT_TOL = 1e-14
FIXED_POINT_CAP = 10_000
ROOT_RESIDUAL_TOL = 1e-10
ROOT_SEPARATION = 1e-9
LINEAR_RESIDUAL_TOL = 1e-8
CLAMP_TOL = 1e-8

# Extended precision (bits of significand) for the optional fallback
# linear solve; meant for very large b where the double path fails its
# residual check.
EXTENDED_PRECISION_BITS = 128


@dataclass(frozen=True)
class QueueConfig:
    """Batch capacity, arrival rate, and service law for one queue.

    Stability (lambda * E[S] < b) is deliberately not enforced here:
    the stability predicate and the simulator both need to look at
    unstable configurations. Solver entry points reject them.
    """

    b: int
    lam: float
    service: ServiceDistribution

    def __post_init__(self) -> None:
        if not isinstance(self.b, int) or self.b < 1:
            raise ValueError("b must be a positive integer")
        if not (self.lam > 0 and np.isfinite(self.lam)):
            raise ValueError("lambda must be positive and finite")


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    offered_load: float


@dataclass(frozen=True)
class AnalyticSolution:
    """Solver output: roots, boundary rates, and the two means."""

    roots: tuple
    alpha: tuple
    p0: float
    mean_queue: float
    mean_sojourn: float
    residual: float


def stability_check(cfg: QueueConfig) -> StabilityReport:
    """Offered load lambda*E[S] against capacity b, boundary excluded."""
    load = cfg.lam * cfg.service.mean
    return StabilityReport(stable=load < cfg.b, offered_load=load)


def _require_stable(cfg: QueueConfig) -> None:
    rep = stability_check(cfg)
    if not rep.stable:
        raise InstabilityError(
            f"offered load {rep.offered_load:.6g} >= capacity b={cfg.b}; "
            "no stationary solution exists"
        )


def find_unit_disk_roots(cfg: QueueConfig) -> list:
    """The b-1 roots of z**b = lst(lambda - lambda*z) with |z| < 1.

    Each root is located by the damped fixed-point map

        z <- w_m * lst(lambda - lambda*z) ** (1/b)

    where w_m = exp(2j*pi*m/b) selects the branch, m = 1..b-1, with the
    b-th root continued analytically from real arguments (see
    ServiceDistribution.lst_root_array), started at
    w_m * lst(lambda) ** (1/b).
    For exponential service every root is then polished with Newton
    steps on the trinomial

        lam*z**(b+1) - (lam+mu)*z**b + mu

    which restores full precision at large b. The returned list is
    sorted by increasing principal argument, ties by modulus, so output
    is reproducible byte for byte.
    """
    _require_stable(cfg)
    b = cfg.b
    if b == 1:
        return []
    lam = cfg.lam
    svc = cfg.service

    m = np.arange(1, b)
    omega = np.exp(2j * np.pi * m / b)
    z = omega * svc.lst_root_array(np.array([complex(lam)]), b)

    converged = False
    for _ in range(FIXED_POINT_CAP):
        z_new = omega * svc.lst_root_array(lam - lam * z, b)
        delta = float(np.max(np.abs(z_new - z)))
        z = z_new
        if delta <= FIXED_POINT_TOL:
            converged = True
            break

    if svc.kind == "exponential":
        z = _newton_polish_trinomial(z, b, lam, svc.rate)

    residual = np.abs(z**b - svc.lst_array(lam - lam * z))
    worst = float(residual.max())
    if worst > ROOT_RESIDUAL_TOL:
        detail = "" if converged else " (fixed-point iteration cap reached)"
        raise NumericalError(
            f"root residual {worst:.3e} exceeds {ROOT_RESIDUAL_TOL:g}{detail}"
        )
    if float(np.abs(z).max()) >= 1.0 or float(np.abs(z - 1.0).min()) <= ROOT_SEPARATION:
        raise NumericalError("a located root left the open unit disk")

    order = np.lexsort((np.abs(z), np.angle(z)))
    z = z[order]
    if b > 2:
        pair = np.abs(z[:, None] - z[None, :])
        np.fill_diagonal(pair, np.inf)
        if float(pair.min()) <= ROOT_SEPARATION:
            raise NumericalError(
                f"root collision: minimum pairwise distance {pair.min():.3e}"
            )
    return [complex(v) for v in z]


def _newton_polish_trinomial(z: np.ndarray, b: int, lam: float, mu: float) -> np.ndarray:
    """Newton refinement on lam*z**(b+1) - (lam+mu)*z**b + mu."""
    for _ in range(60):
        zbm1 = z ** (b - 1)
        zb = zbm1 * z
        p = zb * (lam * z - (lam + mu)) + mu
        dp = zbm1 * ((b + 1) * lam * z - b * (lam + mu))
        safe = np.abs(dp) > 0
        step = np.where(safe, p / np.where(safe, dp, 1.0), 0.0)
        z = z - step
        if float(np.max(np.abs(step))) <= 1e-15:
            break
    return z


@dataclass(frozen=True)
class AlphaResult:
    alpha: tuple
    p0: float
    residual: float


def solve_alpha(cfg: QueueConfig, roots, extended: bool = False) -> AlphaResult:
    """Boundary completion rates alpha_1..alpha_b and idle probability.

    Builds the b x b linear system whose first b-1 rows come from the
    unit-disk roots, sum_k (z**(b+1) - z**k) * alpha_k = 0, and whose
    last row is the normalization

        sum_k [ (b+1-k)*E[S]/(b - lam*E[S]) + 1/lam ] * alpha_k = 1.

    A back-substitution residual worse than 1e-8, or an alpha with a
    meaningful imaginary or negative part, raises PrecisionError; pass
    extended=True to redo the solve with a 128-bit significand (only
    practical up to a few thousand unknowns, and intended for b above
    2048 where the double-precision solve may degrade).
    """
    _require_stable(cfg)
    b = cfg.b
    if len(roots) != b - 1:
        raise ValueError(f"expected {b - 1} roots, got {len(roots)}")
    if extended:
        return _solve_alpha_extended(cfg, roots)

    lam = cfg.lam
    mean_s = cfg.service.mean
    k = np.arange(1, b + 1)
    a = np.zeros((b, b), dtype=complex)
    rhs = np.zeros(b, dtype=complex)
    for i, z in enumerate(roots):
        a[i] = z ** (b + 1) - z**k
    a[b - 1] = (b + 1 - k) * mean_s / (b - lam * mean_s) + 1.0 / lam
    rhs[b - 1] = 1.0

    x = np.linalg.solve(a, rhs)
    residual = float(np.max(np.abs(a @ x - rhs)))
    if residual > LINEAR_RESIDUAL_TOL:
        raise PrecisionError(
            f"linear solve residual {residual:.3e} exceeds {LINEAR_RESIDUAL_TOL:g}; "
            "retry with extended=True"
        )
    return _finish_alpha(x.real, x.imag, lam, residual)


def _solve_alpha_extended(cfg: QueueConfig, roots) -> AlphaResult:
    import mpmath as mp

    b = cfg.b
    lam = cfg.lam
    mean_s = cfg.service.mean
    with mp.workprec(EXTENDED_PRECISION_BITS):
        a = mp.zeros(b, b)
        rhs = mp.matrix(b, 1)
        for i, z in enumerate(roots):
            zm = mp.mpc(z)
            zb1 = zm ** (b + 1)
            for kk in range(1, b + 1):
                a[i, kk - 1] = zb1 - zm**kk
        denom = mp.mpf(b) - mp.mpf(lam) * mp.mpf(mean_s)
        for kk in range(1, b + 1):
            a[b - 1, kk - 1] = (b + 1 - kk) * mp.mpf(mean_s) / denom + 1 / mp.mpf(lam)
        rhs[b - 1] = 1
        x = mp.lu_solve(a, rhs)
        res = a * x - rhs
        residual = float(max(abs(res[i]) for i in range(b)))
        real = np.array([float(mp.re(x[i])) for i in range(b)])
        imag = np.array([float(mp.im(x[i])) for i in range(b)])
    if residual > LINEAR_RESIDUAL_TOL:
        raise PrecisionError(
            f"extended-precision residual {residual:.3e} still exceeds "
            f"{LINEAR_RESIDUAL_TOL:g}"
        )
    return _finish_alpha(real, imag, lam, residual)


def _finish_alpha(real: np.ndarray, imag: np.ndarray, lam: float, residual: float) -> AlphaResult:
    worst_imag = float(np.max(np.abs(imag))) if imag.size else 0.0
    if worst_imag > CLAMP_TOL:
        raise PrecisionError(
            f"alpha imaginary part {worst_imag:.3e} exceeds {CLAMP_TOL:g}; "
            "retry with extended=True"
        )
    if float(real.min()) < -CLAMP_TOL:
        raise PrecisionError(
            f"alpha negative part {real.min():.3e} exceeds clamp tolerance; "
            "retry with extended=True"
        )
    alpha = np.maximum(real, 0.0)
    p0 = float(alpha.sum() / lam)
    if not 0.0 < p0 < 1.0:
        raise NumericalError(f"idle probability {p0:.6g} outside (0, 1)")
    return AlphaResult(alpha=tuple(float(v) for v in alpha), p0=p0, residual=residual)


@functools.lru_cache(maxsize=64)
def solve(cfg: QueueConfig, extended: bool = False) -> AnalyticSolution:
    """Full stationary solution for a stable configuration.

    mean_queue is computed as lam * mean_sojourn, so the two satisfy
    Little's law exactly by construction.
    """
    _require_stable(cfg)
    b = cfg.b
    lam = cfg.lam
    mean_s = cfg.service.mean
    second_s = cfg.service.second_moment

    roots = find_unit_disk_roots(cfg)
    ar = solve_alpha(cfg, roots, extended=extended)

    if roots:
        z = np.array(roots)
        root_residual = float(
            np.max(np.abs(z**b - cfg.service.lst_array(lam - lam * z)))
        )
    else:
        root_residual = 0.0

    k = np.arange(1, b + 1)
    weight = (
        b * (b - 1)
        + ((b + 1) * b - k * (k - 1)) * lam * mean_s
        + (b - k) * lam * lam * second_s
    )
    numerator = float(np.dot(ar.alpha, weight)) - lam * (
        b * (b - 1) - lam * lam * second_s
    )
    mean_sojourn = numerator / (2.0 * lam * lam * (b - lam * mean_s))
    # Exponential service admits a provable floor: every confirmation
    # lasts at least the memoryless residual of one service, so the
    # mean cannot fall below E[S]. Constant and staged services can
    # confirm in less than one full service (a transaction committed
    # by a block already in progress waits only the remainder), so
    # only positivity is required of them.
    floor = mean_s * (1.0 - 1e-9) if cfg.service.kind == "exponential" else 0.0
    if not np.isfinite(mean_sojourn) or mean_sojourn <= floor:
        raise NumericalError(
            f"mean sojourn {mean_sojourn:.6g} is not plausible (floor {floor:.6g})"
        )
    return AnalyticSolution(
        roots=tuple(roots),
        alpha=ar.alpha,
        p0=ar.p0,
        mean_queue=lam * mean_sojourn,
        mean_sojourn=mean_sojourn,
        residual=max(root_residual, ar.residual),
    )


def mean_confirmation_time(cfg: QueueConfig, extended: bool = False) -> float:
    """Mean stationary confirmation (sojourn) time in seconds."""
    return solve(cfg, extended=extended).mean_sojourn


def pgf_evaluate(cfg: QueueConfig, z: complex, solution: AnalyticSolution | None = None) -> complex:
    """Probability generating function of the stationary queue length.

    z = 1 is a removable singularity and returns exactly 1. Any other
    point where z**b - lst(lambda - lambda*z) vanishes is a genuine
    pole and raises NumericalError. Pass a precomputed solution to skip
    re-solving.
    """
    sol = solution if solution is not None else solve(cfg)
    zc = complex(z)
    if abs(zc - 1.0) < 1e-12:
        return complex(1.0)
    b = cfg.b
    lam = cfg.lam
    svc = cfg.service
    alpha = np.array(sol.alpha)
    g = complex(svc.lst(lam - lam * zc))
    den = zc**b - g
    if abs(den) < 1e-12:
        raise NumericalError(f"pgf evaluated at a pole near z={zc}")
    k = np.arange(1, b + 1)
    num = complex(np.sum((zc ** (b + 1) - zc**k) * alpha))
    tail = (1.0 - g) / (lam - lam * zc)
    return complex(alpha.sum() / lam + (num / den) * tail)
