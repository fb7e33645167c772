"""Per-class mean confirmation times under non-preemptive priority.

Classes are indexed from 1 (highest priority). Writing f for the
single-class mean confirmation time as a function of the arrival rate,
the decomposition assumes total weighted delay is conserved:

    sum_{k<=i} lam_k * E[T_k] = lam_bar_i * f(lam_bar_i)

with lam_bar_i the cumulative rate of the top i classes. Solving the
recursion gives E[T_1] = f(lam_1) and

    E[T_i] = (lam_bar_i * f(lam_bar_i) - sum_{k<i} lam_k * E[T_k]) / lam_i.

The priority discipline here is not strictly work conserving (a batch
in progress admits any class while it has room), so this is an
approximation. Simulation agrees with it closely for exponential
service; the simulator remains the ground truth in validation reports,
and every output produced from this module is labeled with
WORK_CONSERVING_LABEL.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .analysis import QueueConfig, mean_confirmation_time
from .errors import InstabilityError
from .service import ServiceDistribution

WORK_CONSERVING_LABEL = "work-conserving approximation"


@dataclass(frozen=True)
class PriorityTraffic:
    """Ordered per-class Poisson rates, shared service law and capacity.

    rates[0] is the highest-priority class. Stability of the prefixes
    is checked by the solver entry points, not at construction, so the
    simulator can be handed deliberately unstable traffic.
    """

    rates: tuple
    service: ServiceDistribution
    b: int

    def __post_init__(self) -> None:
        rates = tuple(float(r) for r in self.rates)
        object.__setattr__(self, "rates", rates)
        if len(rates) < 1:
            raise ValueError("at least one class is required")
        if any(not (r > 0 and math.isfinite(r)) for r in rates):
            raise ValueError("every class rate must be positive and finite")
        if not isinstance(self.b, int) or self.b < 1:
            raise ValueError("b must be a positive integer")

    @property
    def total_rate(self) -> float:
        return sum(self.rates)

    @property
    def cumulative_rates(self) -> tuple:
        out = []
        acc = 0.0
        for r in self.rates:
            acc += r
            out.append(acc)
        return tuple(out)


def class_confirmation_times(traffic: PriorityTraffic, extended: bool = False) -> list:
    """Mean confirmation time per class, highest priority first.

    Raises InstabilityError naming the first class whose cumulative
    load reaches the capacity.
    """
    mean_s = traffic.service.mean
    times: list = []
    consumed = 0.0
    cumulative = 0.0
    for i, rate in enumerate(traffic.rates, start=1):
        cumulative += rate
        if cumulative * mean_s >= traffic.b:
            raise InstabilityError(
                f"class {i} is the first unstable class: cumulative load "
                f"{cumulative * mean_s:.6g} >= b={traffic.b}"
            )
        f_cum = mean_confirmation_time(
            QueueConfig(traffic.b, cumulative, traffic.service), extended=extended
        )
        t_i = (cumulative * f_cum - consumed) / rate
        times.append(t_i)
        consumed += rate * t_i
    return times


def two_class_times(
    lambda_h: float,
    lambda_l: float,
    service: ServiceDistribution,
    b: int,
    extended: bool = False,
):
    """(high, low) mean confirmation times for the two-class split."""
    traffic = PriorityTraffic(rates=(lambda_h, lambda_l), service=service, b=b)
    high, low = class_confirmation_times(traffic, extended=extended)
    return high, low


def split_by_ratio(total_rate: float, ratio: float):
    """Split a total rate into (high, low) with high/low = ratio."""
    if not (total_rate > 0 and math.isfinite(total_rate)):
        raise ValueError("total rate must be positive and finite")
    if not (ratio > 0 and math.isfinite(ratio)):
        raise ValueError("ratio must be positive and finite")
    low = total_rate / (1.0 + ratio)
    return total_rate - low, low
