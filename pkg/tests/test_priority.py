import math

import pytest

from blockqueue.analysis import QueueConfig, mean_confirmation_time
from blockqueue.errors import InstabilityError
from blockqueue.priority import (
    WORK_CONSERVING_LABEL,
    PriorityTraffic,
    class_confirmation_times,
    split_by_ratio,
    two_class_times,
)
from blockqueue.service import ServiceDistribution

EXP1 = ServiceDistribution.exponential(1.0)
MAINNET = ServiceDistribution.exponential(1.8379e-3)


def test_single_class_equals_pooled_solver():
    traffic = PriorityTraffic(rates=(0.8,), service=EXP1, b=3)
    (t1,) = class_confirmation_times(traffic)
    assert t1 == mean_confirmation_time(QueueConfig(3, 0.8, EXP1))


def test_measured_two_class_point():
    traffic = PriorityTraffic(rates=(0.90466, 0.068082), service=MAINNET, b=1750)
    t_high, t_low = class_confirmation_times(traffic)
    assert t_high == pytest.approx(562.16, rel=5e-3)
    assert t_low == pytest.approx(647.05, rel=5e-3)
    pooled = mean_confirmation_time(QueueConfig(1750, 0.90466 + 0.068082, MAINNET))
    assert pooled == pytest.approx(568.10, rel=5e-3)


def test_two_class_wrapper_matches_general_decomposition():
    args = (0.90466, 0.068082, MAINNET, 1750)
    wrapped = two_class_times(*args)
    general = class_confirmation_times(
        PriorityTraffic(rates=args[:2], service=MAINNET, b=1750)
    )
    assert wrapped == (general[0], general[1])


def test_two_class_composition_from_pooled_solves():
    t_high, t_low = two_class_times(0.5, 0.5, EXP1, 2)
    f_half = mean_confirmation_time(QueueConfig(2, 0.5, EXP1))
    f_one = mean_confirmation_time(QueueConfig(2, 1.0, EXP1))
    assert t_high == pytest.approx(f_half, rel=1e-12)
    assert t_low == pytest.approx(2.0 * f_one - f_half, rel=1e-12)


@pytest.mark.parametrize(
    "rates,b,service",
    [
        ((0.9, 0.068), 1750, MAINNET),
        ((3.0, 1.5, 0.9), 10, EXP1),
        ((2.0, 2.0), 8, ServiceDistribution.erlang(2, 2.0)),
        ((4.0, 1.0), 10, ServiceDistribution.deterministic(1.0)),
    ],
)
def test_rate_weighted_means_conserve_pooled_mean(rates, b, service):
    traffic = PriorityTraffic(rates=rates, service=service, b=b)
    times = class_confirmation_times(traffic)
    total = sum(rates)
    pooled = mean_confirmation_time(QueueConfig(b, total, service))
    weighted = sum(r * t for r, t in zip(rates, times))
    assert weighted == pytest.approx(total * pooled, rel=1e-10)


def test_higher_class_unaffected_by_lower_traffic():
    a = class_confirmation_times(PriorityTraffic(rates=(2.0, 1.0), service=EXP1, b=6))
    b = class_confirmation_times(PriorityTraffic(rates=(2.0, 3.0), service=EXP1, b=6))
    c = class_confirmation_times(
        PriorityTraffic(rates=(2.0, 1.0, 2.0), service=EXP1, b=6)
    )
    assert a[0] == b[0] == c[0]
    assert a[1] == c[1]


def test_class_means_increase_with_worse_priority():
    for rates, b in (((3.0, 1.5, 0.9), 10), ((0.90466, 0.068082), 1750)):
        service = EXP1 if b == 10 else MAINNET
        times = class_confirmation_times(PriorityTraffic(rates=rates, service=service, b=b))
        assert times == sorted(times)


def test_first_unstable_class_is_named():
    # prefix through class 2 exceeds the service capacity
    traffic = PriorityTraffic(rates=(1.0, 1.2, 0.1), service=EXP1, b=2)
    with pytest.raises(InstabilityError, match="class 2"):
        class_confirmation_times(traffic)


def test_split_by_ratio_reconstructs_total():
    hi, lo = split_by_ratio(0.97275, 13.288)
    assert hi + lo == pytest.approx(0.97275, rel=1e-14)
    assert hi / lo == pytest.approx(13.288, rel=1e-12)


def test_traffic_validation():
    with pytest.raises(ValueError):
        PriorityTraffic(rates=(), service=EXP1, b=2)
    with pytest.raises(ValueError):
        PriorityTraffic(rates=(1.0, -0.5), service=EXP1, b=2)
    with pytest.raises(ValueError):
        PriorityTraffic(rates=(1.0,), service=EXP1, b=0)


def test_cumulative_rates():
    traffic = PriorityTraffic(rates=(1.0, 2.0, 0.5), service=EXP1, b=16)
    assert traffic.total_rate == pytest.approx(3.5)
    assert traffic.cumulative_rates == pytest.approx((1.0, 3.0, 3.5))


def test_method_label_is_explicit_about_the_approximation():
    assert WORK_CONSERVING_LABEL == "work-conserving approximation"


def test_large_capacity_two_class_growth_near_saturation():
    """Fixed-ratio two-class traffic at b=2000: the low class blows past
    ten service times well before saturation while the high class keeps
    growing steeply but stays an order of magnitude below it."""
    mean_s = MAINNET.mean

    def times(total):
        traffic = PriorityTraffic(
            rates=split_by_ratio(total, 13.288), service=MAINNET, b=2000
        )
        return class_confirmation_times(traffic)

    t_high_lo, t_low_lo = times(3.0)
    t_high_hi, t_low_hi = times(3.6)

    assert t_low_lo > 10.0 * mean_s
    assert t_high_hi > 2.0 * t_high_lo
    assert t_low_hi > t_low_lo
    assert t_high_lo < t_low_lo and t_high_hi < t_low_hi

    with pytest.raises(InstabilityError):
        times(3.7)
