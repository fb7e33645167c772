import cmath
import math

import numpy as np
import pytest

from blockqueue.service import (
    DETERMINISTIC,
    ERLANG,
    EXPONENTIAL,
    ServiceDistribution,
    fit_exponential,
)

ALL_KINDS = [
    ServiceDistribution.exponential(1.8379e-3),
    ServiceDistribution.deterministic(2.5),
    ServiceDistribution.erlang(4, 2.0),
]


def test_exponential_moments():
    d = ServiceDistribution.exponential(0.5)
    assert d.kind == EXPONENTIAL
    assert d.mean == 2.0
    assert d.second_moment == 8.0


def test_deterministic_moments():
    d = ServiceDistribution.deterministic(3.0)
    assert d.kind == DETERMINISTIC
    assert d.mean == 3.0
    assert d.second_moment == 9.0


def test_erlang_moments():
    d = ServiceDistribution.erlang(3, 2.0)
    assert d.kind == ERLANG
    assert d.mean == 1.5
    # k(k+1)/rate^2 for a sum of k independent stages
    assert d.second_moment == 3.0


@pytest.mark.parametrize(
    "build",
    [
        lambda: ServiceDistribution.exponential(0.0),
        lambda: ServiceDistribution.exponential(-1.0),
        lambda: ServiceDistribution.exponential(math.inf),
        lambda: ServiceDistribution.deterministic(0.0),
        lambda: ServiceDistribution.deterministic(math.nan),
        lambda: ServiceDistribution.erlang(0, 1.0),
        lambda: ServiceDistribution.erlang(2, -3.0),
    ],
)
def test_constructors_reject_bad_parameters(build):
    with pytest.raises(ValueError):
        build()


def test_lst_at_zero_is_one():
    for d in ALL_KINDS:
        assert d.lst(0.0) == pytest.approx(1.0, abs=1e-15)


def test_lst_exponential_halves_at_own_rate():
    d = ServiceDistribution.exponential(1.0)
    assert d.lst(1.0) == pytest.approx(0.5)


def test_lst_deterministic_closed_form():
    d = ServiceDistribution.deterministic(2.0)
    assert d.lst(0.5) == pytest.approx(math.exp(-1.0), rel=1e-12)


def test_lst_erlang_closed_form():
    d = ServiceDistribution.erlang(3, 2.0)
    assert d.lst(1.0) == pytest.approx((2.0 / 3.0) ** 3, rel=1e-12)


def test_lst_pole_raises():
    with pytest.raises(ValueError):
        ServiceDistribution.exponential(2.0).lst(-2.0)
    with pytest.raises(ValueError):
        ServiceDistribution.erlang(2, 1.5).lst(-1.5)


def test_lst_array_matches_scalar():
    pts = np.array([0.1 + 0.7j, 1.0 - 2.0j, 0.01 + 0.0j, 3.0 + 0.0j])
    for d in ALL_KINDS:
        vec = d.lst_array(pts)
        for got, s in zip(vec, pts):
            assert got == pytest.approx(d.lst(complex(s)), rel=1e-14)


def test_lst_root_power_recovers_transform():
    """The b-th root helper must satisfy root**b == lst exactly and be
    real positive on the real axis, the branch the root solver needs."""
    pts = np.array([0.5 + 4.0j, 2.0 - 9.0j, 1e-4 + 0.0j, 7.0 + 0.0j])
    for d in ALL_KINDS:
        for b in (2, 10, 64):
            root = d.lst_root_array(pts, b)
            assert np.allclose(root**b, d.lst_array(pts), rtol=1e-11, atol=1e-13)
    real = np.array([0.3 + 0.0j, 5.0 + 0.0j])
    for d in ALL_KINDS:
        vals = d.lst_root_array(real, 10)
        assert np.all(vals.imag == 0.0)
        assert np.all(vals.real > 0.0)


def test_lst_root_keeps_branch_at_large_phase():
    # the raw principal root folds once Im(-s*d) passes pi; the helper
    # must stay continuous instead
    d = ServiceDistribution.deterministic(1.0)
    s = np.array([0.0 + 8.0j])
    root = d.lst_root_array(s, 10)
    assert complex(root[0]) == pytest.approx(cmath.exp(-8.0j / 10.0), rel=1e-12)


def test_numeric_lst_derivative_matches_mean():
    h = 1e-6
    for d in ALL_KINDS:
        slope = (d.lst(h) - d.lst(-h)) / (2.0 * h)
        assert -slope == pytest.approx(d.mean, rel=1e-6)


def test_fit_constant_samples():
    fit = fit_exponential([1.0, 1.0, 1.0])
    assert fit.rate == pytest.approx(1.0)
    assert fit.n_samples == 3
    assert fit.dist.kind == EXPONENTIAL


def test_fit_rate_is_inverse_sample_mean():
    fit = fit_exponential([544.09] * 10)
    assert fit.rate == pytest.approx(1.0 / 544.09, rel=1e-12)
    # the conventional five-significant-digit quote of that rate
    assert float(f"{fit.rate:.5g}") == 1.8379e-3


def test_fit_recovers_rate_from_large_sample():
    gen = np.random.Generator(np.random.Philox(123))
    samples = gen.exponential(scale=500.0, size=100_000)
    fit = fit_exponential(samples)
    assert fit.rate == pytest.approx(0.002, rel=0.02)


def test_fit_histogram_tracks_model_for_large_sample():
    gen = np.random.Generator(np.random.Philox(321))
    samples = gen.exponential(scale=540.0, size=100_000)
    fit = fit_exponential(samples, bin_width=60.0, upper=6600.0)
    assert fit.bin_edges[0] == 0.0
    assert fit.bin_edges[-1] == 6600.0
    assert len(fit.observed) == len(fit.model) == 110
    assert np.max(np.abs(fit.observed - fit.model)) < 0.01
    # in-range mass only; the tail beyond the last edge is excluded
    assert fit.observed.sum() <= 1.0 + 1e-12


def test_fit_input_validation():
    with pytest.raises(ValueError):
        fit_exponential([])
    with pytest.raises(ValueError):
        fit_exponential([1.0, -2.0])
    with pytest.raises(ValueError):
        fit_exponential([0.0, 0.0])
    with pytest.raises(ValueError):
        fit_exponential([1.0, 2.0], bin_width=0.0)
