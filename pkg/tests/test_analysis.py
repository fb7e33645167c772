import math

import numpy as np
import pytest

from blockqueue.analysis import (
    QueueConfig,
    find_unit_disk_roots,
    mean_confirmation_time,
    pgf_evaluate,
    solve,
    solve_alpha,
    stability_check,
)
from blockqueue.errors import InstabilityError, NumericalError
from blockqueue.service import ServiceDistribution

EXP1 = ServiceDistribution.exponential(1.0)
MAINNET = ServiceDistribution.exponential(1.8379e-3)
GOLDEN = QueueConfig(2, 1.0, EXP1)

SQRT5 = math.sqrt(5.0)
PHI = (1.0 + SQRT5) / 2.0


def pk_mean(lam: float, service: ServiceDistribution) -> float:
    es, es2 = service.mean, service.second_moment
    return es + lam * es2 / (2.0 * (1.0 - lam * es))


# ----------------------------------------------------------- stability


def test_stability_report_at_measured_point():
    report = stability_check(QueueConfig(1750, 0.97275, MAINNET))
    assert report.stable
    assert report.offered_load == pytest.approx(529.27, rel=1e-4)


def test_tiny_rate_is_stable():
    report = stability_check(QueueConfig(3, 1e-12, EXP1))
    assert report.stable
    assert report.offered_load == pytest.approx(0.0, abs=1e-11)


def test_saturation_boundary_is_unstable():
    assert not stability_check(QueueConfig(2, 2.0, EXP1)).stable
    assert not stability_check(QueueConfig(2, 2.5, EXP1)).stable


def test_unstable_configuration_raises_on_solve():
    with pytest.raises(InstabilityError):
        mean_confirmation_time(QueueConfig(2, 2.5, EXP1))


# ---------------------------------------------------------------- roots


def test_capacity_one_has_no_roots():
    assert find_unit_disk_roots(QueueConfig(1, 0.5, EXP1)) == []


def test_golden_case_root():
    roots = find_unit_disk_roots(GOLDEN)
    assert len(roots) == 1
    assert abs(roots[0] - (1.0 - SQRT5) / 2.0) <= 1e-9


def test_second_hand_solved_root():
    roots = find_unit_disk_roots(QueueConfig(2, 1.0, ServiceDistribution.exponential(2.0)))
    assert len(roots) == 1
    assert abs(roots[0] - (1.0 - math.sqrt(3.0))) <= 1e-9


@pytest.mark.parametrize("b", [3, 7, 32])
@pytest.mark.parametrize(
    "service",
    [EXP1, ServiceDistribution.deterministic(1.0), ServiceDistribution.erlang(3, 3.0)],
)
def test_root_count_location_and_separation(b, service):
    lam = 0.6 * b / service.mean
    cfg = QueueConfig(b, lam, service)
    roots = np.array(find_unit_disk_roots(cfg))
    assert len(roots) == b - 1
    assert np.all(np.abs(roots) < 1.0)
    resid = np.abs(roots**b - service.lst_array(lam - lam * roots))
    assert float(resid.max()) <= 1e-10
    if b > 2:
        pair = np.abs(roots[:, None] - roots[None, :])
        np.fill_diagonal(pair, np.inf)
        assert float(pair.min()) > 1e-9


def test_roots_are_sorted_deterministically():
    cfg = QueueConfig(9, 4.0, EXP1)
    roots = find_unit_disk_roots(cfg)
    angles = [math.atan2(z.imag, z.real) for z in roots]
    assert angles == sorted(angles)
    assert find_unit_disk_roots(cfg) == roots


# ---------------------------------------------------------------- alpha


def test_golden_case_alpha_and_idle_probability():
    ar = solve_alpha(GOLDEN, find_unit_disk_roots(GOLDEN))
    assert ar.alpha[0] == pytest.approx(SQRT5 - 2.0, abs=1e-9)
    assert ar.alpha[1] == pytest.approx((7.0 - 3.0 * SQRT5) / 2.0, abs=1e-9)
    assert ar.p0 == pytest.approx((3.0 - SQRT5) / 2.0, abs=1e-9)


def test_capacity_one_alpha_matches_birth_death_idle():
    cfg = QueueConfig(1, 0.5, EXP1)
    ar = solve_alpha(cfg, [])
    assert ar.alpha == pytest.approx((0.25,), abs=1e-12)
    assert ar.p0 == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize(
    "cfg",
    [
        QueueConfig(1, 0.7, EXP1),
        QueueConfig(5, 2.0, EXP1),
        QueueConfig(12, 9.0, EXP1),
        QueueConfig(10, 5.5801, ServiceDistribution.deterministic(1.0)),
        QueueConfig(8, 5.0, ServiceDistribution.erlang(2, 2.0)),
    ],
)
def test_alpha_identities(cfg):
    sol = solve(cfg)
    assert sum(sol.alpha) / cfg.lam == pytest.approx(sol.p0, rel=1e-12)
    assert 0.0 < sol.p0 < 1.0
    assert all(a >= 0.0 for a in sol.alpha)
    assert sol.residual <= 1e-8


# ----------------------------------------------------------------- mean


def test_golden_case_mean():
    assert mean_confirmation_time(GOLDEN) == pytest.approx(PHI, abs=1e-9)


def test_capacity_one_reduces_to_single_server_closed_form():
    cfg = QueueConfig(1, 0.5, EXP1)
    assert mean_confirmation_time(cfg) == pytest.approx(2.0, abs=1e-12)


def test_capacity_one_matches_pk_for_200_random_loads():
    gen = np.random.Generator(np.random.Philox(42))
    for _ in range(200):
        mu = float(gen.uniform(0.1, 10.0))
        lam = float(gen.uniform(0.05, 0.95)) * mu
        service = ServiceDistribution.exponential(mu)
        got = mean_confirmation_time(QueueConfig(1, lam, service))
        assert got == pytest.approx(pk_mean(lam, service), rel=1e-9)


def test_capacity_one_pk_holds_for_other_service_kinds():
    for service in (
        ServiceDistribution.deterministic(0.8),
        ServiceDistribution.erlang(3, 4.0),
    ):
        lam = 0.7 / service.mean
        got = mean_confirmation_time(QueueConfig(1, lam, service))
        assert got == pytest.approx(pk_mean(lam, service), rel=1e-9)


def test_mean_number_in_system_is_rate_times_sojourn():
    sol = solve(QueueConfig(6, 3.0, EXP1))
    assert sol.mean_queue == pytest.approx(3.0 * sol.mean_sojourn, rel=1e-12)


def test_small_capacity_matches_exact_markov_chain():
    """Independent oracle: the number in system is a Markov chain
    (arrivals +1, completions drop min(n, b)); solve it by truncation
    and compare the stationary mean sojourn."""
    b, lam, mu = 3, 1.2, 1.0
    n_max = 300
    q = np.zeros((n_max + 1, n_max + 1))
    for n in range(n_max + 1):
        if n < n_max:
            q[n, n + 1] += lam
            q[n, n] -= lam
        if n >= 1:
            q[n, max(0, n - b)] += mu
            q[n, n] -= mu
    a = q.T.copy()
    a[-1, :] = 1.0
    rhs = np.zeros(n_max + 1)
    rhs[-1] = 1.0
    pi = np.linalg.solve(a, rhs)
    sojourn_ref = float((np.arange(n_max + 1) * pi).sum()) / lam

    cfg = QueueConfig(b, lam, EXP1)
    assert mean_confirmation_time(cfg) == pytest.approx(sojourn_ref, rel=1e-10)
    assert solve(cfg).p0 == pytest.approx(float(pi[0]), rel=1e-10)


def test_constant_service_mean_dips_below_one_service():
    """With commit-time batching a transaction often rides a service
    already in progress, so under constant service the mean can fall
    below one full service time; it returns above near saturation."""
    det = ServiceDistribution.deterministic(1.0)
    low = mean_confirmation_time(QueueConfig(10, 0.05, det))
    mid = mean_confirmation_time(QueueConfig(10, 5.0, det))
    high = mean_confirmation_time(QueueConfig(10, 9.9, det))
    assert 0.9 < low < 1.0
    assert mid < 0.7
    assert high > 1.0


def test_extended_precision_agrees_with_standard():
    cfg = QueueConfig(8, 4.0, EXP1)
    assert solve(cfg, extended=True).mean_sojourn == pytest.approx(
        solve(cfg).mean_sojourn, rel=1e-10
    )


def test_solve_results_are_cached():
    cfg = QueueConfig(4, 2.0, EXP1)
    assert solve(cfg) is solve(cfg)


# ------------------------------------------------------------------ pgf


@pytest.mark.parametrize(
    "cfg",
    [
        GOLDEN,
        QueueConfig(1, 0.5, EXP1),
        QueueConfig(7, 4.2, EXP1),
        QueueConfig(10, 5.5801, ServiceDistribution.deterministic(1.0)),
        QueueConfig(6, 4.0, ServiceDistribution.erlang(2, 2.0)),
    ],
)
def test_pgf_normalization_origin_and_mean(cfg):
    sol = solve(cfg)
    assert pgf_evaluate(cfg, 1.0) == 1.0
    assert pgf_evaluate(cfg, 0.0) == pytest.approx(sol.p0, abs=1e-9)
    h = 1e-5
    slope = (pgf_evaluate(cfg, 1.0 + h) - pgf_evaluate(cfg, 1.0 - h)) / (2.0 * h)
    assert slope.real == pytest.approx(sol.mean_queue, rel=1e-4)
    assert abs(slope.imag) < 1e-9


def test_pgf_bounded_on_unit_circle():
    cfg = QueueConfig(5, 2.5, EXP1)
    for theta in np.linspace(0.1, 2.0 * math.pi - 0.1, 17):
        z = 0.99 * complex(math.cos(theta), math.sin(theta))
        assert abs(pgf_evaluate(cfg, z)) <= 1.0 + 1e-9


def test_pgf_raises_at_characteristic_root():
    roots = find_unit_disk_roots(GOLDEN)
    with pytest.raises(NumericalError):
        pgf_evaluate(GOLDEN, roots[0])


# ----------------------------------------------------- input validation


def test_config_rejects_bad_parameters():
    with pytest.raises(ValueError):
        QueueConfig(0, 1.0, EXP1)
    with pytest.raises(ValueError):
        QueueConfig(2, -1.0, EXP1)
    with pytest.raises(ValueError):
        QueueConfig(2, 0.0, EXP1)
