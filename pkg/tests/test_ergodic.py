"""Exponential-integral evaluation, closed-form ergodic capacity, sampling."""
import math

import numpy as np
import pytest
from scipy import integrate

from groupfill.ergodic import (
    ChannelEnsemble,
    EnsembleKind,
    ergodic_capacity_closed_form,
    ergodic_capacity_mc,
    expected_log_rayleigh,
    expint_ei,
    jensen_upper_bound,
    sample_gains,
)
from groupfill.errors import DimensionMismatch, DomainError, ValidationError
from groupfill.problem import PowerAllocation


def quad_ei(x: float) -> float:
    """Ei(x) for x < 0 as -integral_{-x}^inf e^(-t)/t dt, by quadrature."""
    val, err = integrate.quad(
        lambda t: math.exp(-t) / t, -x, np.inf, epsabs=1e-14, epsrel=1e-13, limit=400
    )
    assert err < 1e-12 * max(1.0, abs(val))
    return -val


@pytest.mark.parametrize("x", [-0.05, -0.5, -1.0, -2.5, -3.5, -4.0, -10.0, -30.0])
def test_ei_matches_quadrature(x):
    assert expint_ei(x) == pytest.approx(quad_ei(x), abs=1e-12, rel=1e-12)


def test_ei_rejects_non_negative_argument():
    with pytest.raises(DomainError):
        expint_ei(0.0)
    with pytest.raises(DomainError):
        expint_ei(1.0)


def quad_expected_log(p: float) -> float:
    """E{ln(1+gp)} for unit-mean exponential g, by quadrature."""
    val, err = integrate.quad(
        lambda g: math.log1p(g * p) * math.exp(-g),
        0.0,
        np.inf,
        epsabs=1e-15,
        epsrel=1e-13,
        limit=400,
    )
    assert err < 1e-11 * max(1.0, abs(val))
    return val


@pytest.mark.parametrize("p", [1e-12, 1e-9, 1e-6, 1e-3, 0.1, 0.5, 1.0, 2.0, 10.0, 1e4])
def test_expected_log_matches_quadrature(p):
    assert expected_log_rayleigh(p) == pytest.approx(
        quad_expected_log(p), abs=1e-12, rel=1e-10
    )


def test_expected_log_edge_cases():
    assert expected_log_rayleigh(0.0) == 0.0
    with pytest.raises(DomainError):
        expected_log_rayleigh(-1.0)
    # No overflow anywhere down to denormal powers.
    assert 0.0 < expected_log_rayleigh(1e-300) < 1e-299


def test_expected_log_is_increasing_and_concave():
    grid = np.logspace(-6, 3, 200)
    vals = np.array([expected_log_rayleigh(float(p)) for p in grid])
    assert np.all(np.diff(vals) > 0)
    # Concavity in p: second difference on a uniform grid is negative.
    lin = np.linspace(0.01, 10, 300)
    v = np.array([expected_log_rayleigh(float(p)) for p in lin])
    assert np.all(np.diff(v, 2) < 1e-12)


def test_closed_form_is_sum_over_antennas():
    alloc = PowerAllocation.for_total(np.array([0.5, 2.0]), 10.0)
    expected = expected_log_rayleigh(0.5) + expected_log_rayleigh(2.0)
    assert ergodic_capacity_closed_form(alloc) == pytest.approx(expected, rel=1e-15)


def test_jensen_bound_dominates_closed_form():
    alloc = PowerAllocation.for_total(np.array([0.5, 2.0, 1.0]), 10.0)
    jensen = jensen_upper_bound(alloc, np.ones(3))
    assert jensen >= ergodic_capacity_closed_form(alloc)


def test_jensen_dimension_mismatch():
    alloc = PowerAllocation.for_total(np.array([0.5]), 1.0)
    with pytest.raises(DimensionMismatch):
        jensen_upper_bound(alloc, np.ones(2))


def test_ensemble_validation():
    with pytest.raises(ValidationError):
        ChannelEnsemble(EnsembleKind.RAYLEIGH_MISO, 2, 4, 0)
    with pytest.raises(ValidationError):
        ChannelEnsemble(EnsembleKind.ORTHOGONAL_IID, 2, 4, 0)
    with pytest.raises(ValidationError):
        ChannelEnsemble(EnsembleKind.ORTHOGONAL_IID, 0, 0, 0)
    with pytest.raises(ValidationError):
        ChannelEnsemble(EnsembleKind.ORTHOGONAL_IID, 2, 2, 0, gain_law="uniform")


def test_sample_gains_deterministic_and_order_free():
    ens = ChannelEnsemble(EnsembleKind.ORTHOGONAL_IID, 3, 3, seed=11)
    late = sample_gains(ens, 9000)
    early = sample_gains(ens, 2)
    assert np.array_equal(sample_gains(ens, 2), early)
    assert np.array_equal(sample_gains(ens, 9000), late)
    with pytest.raises(ValidationError):
        sample_gains(ens, -1)


def test_orthogonal_gains_are_unit_mean_exponential():
    ens = ChannelEnsemble(EnsembleKind.ORTHOGONAL_IID, 2, 2, seed=0)
    draws = np.array([sample_gains(ens, i) for i in range(20000)])
    assert draws.mean() == pytest.approx(1.0, abs=0.03)
    assert draws.var() == pytest.approx(1.0, abs=0.06)


def test_mc_matches_closed_form_orthogonal():
    alloc = PowerAllocation.for_total(np.array([1.25, 0.75]), 2.0)
    ens = ChannelEnsemble(EnsembleKind.ORTHOGONAL_IID, 2, 2, seed=42)
    est = ergodic_capacity_mc(ens, alloc, 200_000)
    exact = ergodic_capacity_closed_form(alloc)
    assert abs(est.mean - exact) <= 4 * est.std_error


def test_mc_miso_single_antenna_equals_orthogonal_law():
    # With one antenna the MISO capacity law reduces to the scalar one.
    alloc = PowerAllocation.for_total(np.array([2.0]), 2.0)
    ens = ChannelEnsemble(EnsembleKind.RAYLEIGH_MISO, 1, 1, seed=7)
    est = ergodic_capacity_mc(ens, alloc, 200_000)
    exact = expected_log_rayleigh(2.0)
    assert abs(est.mean - exact) <= 4 * est.std_error


def test_mc_mimo_reduces_to_miso_for_single_receive_antenna():
    alloc = PowerAllocation.for_total(np.array([0.5, 1.5]), 2.0)
    miso = ChannelEnsemble(EnsembleKind.RAYLEIGH_MISO, 1, 2, seed=3)
    mimo = ChannelEnsemble(EnsembleKind.RAYLEIGH_MIMO, 1, 2, seed=3)
    a = ergodic_capacity_mc(miso, alloc, 50_000)
    b = ergodic_capacity_mc(mimo, alloc, 50_000)
    # Same seed, same draws: log(1 + h diag(p) h+) is the same number.
    assert a.mean == pytest.approx(b.mean, rel=1e-12)


def test_mc_estimates_identical_across_thread_counts(monkeypatch):
    alloc = PowerAllocation.for_total(np.array([1.0, 1.0, 2.0]), 4.0)
    ens = ChannelEnsemble(EnsembleKind.ORTHOGONAL_IID, 3, 3, seed=5)
    results = []
    for workers in ("1", "4"):
        monkeypatch.setenv("GROUPFILL_THREADS", workers)
        results.append(ergodic_capacity_mc(ens, alloc, 30_000))
    assert results[0].mean == results[1].mean
    assert results[0].std_error == results[1].std_error


def test_mc_rejects_bad_inputs():
    alloc = PowerAllocation.for_total(np.array([1.0]), 1.0)
    ens = ChannelEnsemble(EnsembleKind.ORTHOGONAL_IID, 2, 2, seed=0)
    with pytest.raises(DimensionMismatch):
        ergodic_capacity_mc(ens, alloc, 100)
    ens1 = ChannelEnsemble(EnsembleKind.ORTHOGONAL_IID, 1, 1, seed=0)
    with pytest.raises(ValidationError):
        ergodic_capacity_mc(ens1, alloc, 0)
