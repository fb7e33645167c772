"""Discrete-event simulation of the batch-service priority queue.

One replication is a single event-ordered run: per-class Poisson
arrivals feed a single server that assembles one block at a time and
runs whenever a transaction is present. Block content is settled at
commit time: each completion releases the min(n, b) highest-priority
transactions present, FIFO within a class, so a late high-priority
arrival claims space ahead of earlier low-priority ones and lower
classes never delay higher ones beyond the service in progress. A
transaction's confirmation time is its departure time minus its
arrival time. Replications use independent deterministic substreams
of a counter-based generator, so every estimate is exactly
reproducible from (seed, replication index) alone.

Two interchangeable kernels exist: a compiled one (blockqueue._simcore,
built from Cython) and a pure-python twin. They consume the random
stream identically and produce bit-identical results; the compiled one
is simply faster and is preferred when importable.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as _scipy_stats

from .analysis import QueueConfig, mean_confirmation_time, stability_check
from .errors import SimulationError
from .priority import (
    WORK_CONSERVING_LABEL,
    PriorityTraffic,
    class_confirmation_times,
)
from .service import DETERMINISTIC, ERLANG, EXPONENTIAL

DEFAULT_REPLICATIONS = 50
DEFAULT_WARMUP = 10_000
DEFAULT_HORIZON = 100_000
DEFAULT_QUEUE_LIMIT = 1_000_000


def _load_kernel(kernel: str = "auto"):
    """Pick the replication kernel: 'auto', 'compiled', or 'pure'."""
    if kernel not in ("auto", "compiled", "pure"):
        raise ValueError(f"unknown kernel {kernel!r}")
    if kernel in ("auto", "compiled"):
        try:
            from . import _simcore

            return _simcore.simulate, "compiled"
        except ImportError:
            if kernel == "compiled":
                raise
    from . import _simcore_py

    return _simcore_py.simulate, "pure"


def available_kernels() -> tuple:
    names = ["pure"]
    try:
        from . import _simcore  # noqa: F401

        names.insert(0, "compiled")
    except ImportError:
        pass
    return tuple(names)


@dataclass(frozen=True)
class SimConfig:
    """Traffic plus run-length and reproducibility parameters.

    warmup and horizon are counted in confirmed transactions: the first
    ``warmup`` confirmations are discarded, the next ``horizon`` are
    measured, and time averages run over exactly that window.
    """

    traffic: PriorityTraffic
    seed: int
    replications: int = DEFAULT_REPLICATIONS
    warmup: int = DEFAULT_WARMUP
    horizon: int = DEFAULT_HORIZON
    queue_limit: int = DEFAULT_QUEUE_LIMIT

    def __post_init__(self) -> None:
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        if self.replications < 2:
            raise ValueError("replications must be at least 2 for a CI")
        if self.warmup < 0:
            raise ValueError("warmup must be nonnegative")
        if self.horizon < 1:
            raise ValueError("horizon must be positive")
        if self.queue_limit < 1:
            raise ValueError("queue_limit must be positive")


@dataclass(frozen=True)
class ReplicationResult:
    """Raw per-replication output."""

    index: int
    counts: tuple
    sums: tuple
    mean_in_system: float
    idle_fraction: float
    elapsed: float
    overflow: bool
    arrivals: int
    departures: int
    in_system: int
    engine: str

    @property
    def class_means(self) -> tuple:
        return tuple(
            s / n if n > 0 else math.nan for s, n in zip(self.sums, self.counts)
        )

    @property
    def pooled_mean(self) -> float:
        total = sum(self.counts)
        return sum(self.sums) / total if total > 0 else math.nan


@dataclass(frozen=True)
class SimEstimate:
    """Aggregated estimate over replications with 95% half-widths."""

    means: tuple
    half_widths: tuple
    pooled_mean: float
    pooled_half_width: float
    idle_fraction: float
    mean_in_system: float
    replications_used: int
    overflowed: int
    engine: str


def _service_params(traffic: PriorityTraffic):
    svc = traffic.service
    if svc.kind == EXPONENTIAL:
        return 0, svc.rate, 0
    if svc.kind == DETERMINISTIC:
        return 1, svc.delay, 0
    if svc.kind == ERLANG:
        return 2, svc.rate, svc.shape
    raise ValueError(f"unsupported service kind {svc.kind!r}")


def run_replication(cfg: SimConfig, replication_index: int, kernel: str = "auto") -> ReplicationResult:
    """One independent replication on substream (seed, index)."""
    if replication_index < 0:
        raise ValueError("replication index must be nonnegative")
    sim, engine = _load_kernel(kernel)
    kind, p1, p2 = _service_params(cfg.traffic)
    gen = np.random.Generator(
        np.random.Philox(
            np.random.SeedSequence(entropy=cfg.seed, spawn_key=(replication_index,))
        )
    )
    rates = np.asarray(cfg.traffic.rates, dtype=np.float64)
    counts, sums, area, idle_area, elapsed, overflow, arrivals, departures, in_system = sim(
        gen,
        rates,
        cfg.traffic.b,
        kind,
        p1,
        p2,
        cfg.warmup,
        cfg.horizon,
        cfg.queue_limit,
    )
    if elapsed > 0:
        mean_in_system = area / elapsed
        idle_fraction = idle_area / elapsed
    else:
        mean_in_system = math.nan
        idle_fraction = math.nan
    return ReplicationResult(
        index=replication_index,
        counts=tuple(int(v) for v in counts),
        sums=tuple(float(v) for v in sums),
        mean_in_system=mean_in_system,
        idle_fraction=idle_fraction,
        elapsed=float(elapsed),
        overflow=bool(overflow),
        arrivals=int(arrivals),
        departures=int(departures),
        in_system=int(in_system),
        engine=engine,
    )


def _run_all(cfg: SimConfig, kernel: str = "auto") -> list:
    return [run_replication(cfg, r, kernel) for r in range(cfg.replications)]


def _t_half_width(values: np.ndarray) -> float:
    n = values.size
    if n < 2:
        return math.nan
    crit = float(_scipy_stats.t.ppf(0.975, n - 1))
    return crit * float(values.std(ddof=1)) / math.sqrt(n)


def _aggregate(cfg: SimConfig, reps: list) -> SimEstimate:
    good = [r for r in reps if not r.overflow]
    if len(good) < 2:
        raise SimulationError(
            f"only {len(good)} of {len(reps)} replications completed without "
            "queue overflow; traffic is likely unstable"
        )
    c = len(cfg.traffic.rates)
    means = []
    half_widths = []
    for i in range(c):
        vals = np.array([r.class_means[i] for r in good])
        vals = vals[~np.isnan(vals)]
        if vals.size >= 2:
            means.append(float(vals.mean()))
            half_widths.append(_t_half_width(vals))
        else:
            means.append(math.nan)
            half_widths.append(math.nan)
    pooled = np.array([r.pooled_mean for r in good])
    idle = np.array([r.idle_fraction for r in good])
    in_sys = np.array([r.mean_in_system for r in good])
    return SimEstimate(
        means=tuple(means),
        half_widths=tuple(half_widths),
        pooled_mean=float(pooled.mean()),
        pooled_half_width=_t_half_width(pooled),
        idle_fraction=float(idle.mean()),
        mean_in_system=float(in_sys.mean()),
        replications_used=len(good),
        overflowed=len(reps) - len(good),
        engine=good[0].engine,
    )


def write_replication_csv(reps: list, path) -> None:
    """Per-replication sample means: replication,class,mean_tct_s."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["replication", "class", "mean_tct_s"])
        for r in reps:
            for i, m in enumerate(r.class_means, start=1):
                writer.writerow([r.index, i, repr(m)])


def estimate(cfg: SimConfig, kernel: str = "auto", csv_path=None) -> SimEstimate:
    """Replicated estimate with Student-t 95% confidence half-widths."""
    reps = _run_all(cfg, kernel)
    if csv_path is not None:
        write_replication_csv(reps, csv_path)
    return _aggregate(cfg, reps)


@dataclass(frozen=True)
class ClassCheck:
    label: str
    analytic: float
    simulated: float
    half_width: float
    inside: bool


@dataclass(frozen=True)
class VerificationReport:
    """Analysis vs simulation, class by class plus the pooled view.

    The analytic per-class values come from the work-conserving
    decomposition and are labeled as such; the simulation is the ground
    truth. little_ok checks the simulator's own internal consistency,
    |E[N] - lam*E[T]| / E[N] <= 2%, using pooled simulated values.
    """

    rows: tuple
    little_ok: bool
    little_mean_in_system: float
    little_rate_times_sojourn: float
    estimate: SimEstimate
    method: str = WORK_CONSERVING_LABEL

    @property
    def all_inside(self) -> bool:
        return all(row.inside for row in self.rows)


def verify_against_analysis(cfg: SimConfig, kernel: str = "auto") -> VerificationReport:
    """Check analytic means against replication confidence intervals."""
    traffic = cfg.traffic
    analytic = class_confirmation_times(traffic)
    est = estimate(cfg, kernel)

    rows = []
    c = len(traffic.rates)
    for i in range(c):
        label = str(i + 1) if c > 2 else ("H", "L")[i] if c == 2 else "all"
        inside = (
            not math.isnan(est.means[i])
            and abs(analytic[i] - est.means[i]) <= est.half_widths[i]
        )
        rows.append(
            ClassCheck(
                label=label,
                analytic=analytic[i],
                simulated=est.means[i],
                half_width=est.half_widths[i],
                inside=inside,
            )
        )
    if c > 1:
        pooled_analytic = mean_confirmation_time(
            QueueConfig(traffic.b, traffic.total_rate, traffic.service)
        )
        rows.append(
            ClassCheck(
                label="pooled",
                analytic=pooled_analytic,
                simulated=est.pooled_mean,
                half_width=est.pooled_half_width,
                inside=abs(pooled_analytic - est.pooled_mean) <= est.pooled_half_width,
            )
        )

    rate_times_sojourn = traffic.total_rate * est.pooled_mean
    little_ok = (
        est.mean_in_system > 0
        and abs(est.mean_in_system - rate_times_sojourn) / est.mean_in_system <= 0.02
    )
    return VerificationReport(
        rows=tuple(rows),
        little_ok=little_ok,
        little_mean_in_system=est.mean_in_system,
        little_rate_times_sojourn=rate_times_sojourn,
        estimate=est,
    )


def idle_probability_reference(traffic: PriorityTraffic) -> float:
    """Analytic idle probability of the pooled single-class queue."""
    from .analysis import solve

    cfg = QueueConfig(traffic.b, traffic.total_rate, traffic.service)
    stability_check(cfg)
    return solve(cfg).p0
