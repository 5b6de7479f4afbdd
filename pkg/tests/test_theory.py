"""Comparison profile, theorem parameter map and tail exponent."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gcoerce import theory as T


@pytest.fixture
def params():
    return T.theorem_parameters(4.0, d=2, C=2.0)


def test_unit_ball_volume():
    assert np.isclose(T.unit_ball_volume(1), 2.0)
    assert np.isclose(T.unit_ball_volume(2), math.pi)
    assert np.isclose(T.unit_ball_volume(3), 4 * math.pi / 3)


def test_default_lambda1():
    # the half-square cut: perimeter 1 over (1/2)^(1/2)
    assert np.isclose(T.relative_isoperimetric_constant(2), math.sqrt(2), rtol=1e-9)
    with pytest.raises(NotImplementedError):
        T.relative_isoperimetric_constant(3)


@pytest.mark.parametrize("d", [2, 3])
def test_phi_anchor_values(d):
    p = T.theorem_parameters(2.0, d=d, C=2.0, lambda1=1.3)
    assert T.phi(0.0, p) == 0.0
    assert T.phi(p.b, p) == 0.5
    assert T.phi(2 * p.b, p) == 1.0
    assert T.phi(-1.0, p) == 0.0 and T.phi(5 * p.b, p) == 1.0
    # a b^d = 1/2
    assert np.isclose(p.a * p.b ** d, 0.5)


def test_phi_ode_residual(params):
    b = params.b
    ts = np.linspace(0.05, 1.95, 39) * b
    res = [T.phi_ode_residual(t, params, 1e-5) for t in ts if abs(t - b) > 1e-3 * b]
    assert max(res) <= 1e-6


def test_phi_ode_residual_symmetry_and_order():
    # d = 3 so the branches are cubic and the centered difference is not exact
    params = T.theorem_parameters(2.0, d=3, C=2.0, lambda1=1.0)
    b = params.b
    t = 0.37 * b
    assert np.isclose(T.phi_ode_residual(t, params, 1e-3), T.phi_ode_residual(2 * b - t, params, 1e-3),
                      rtol=1e-4)
    # second-order centered difference: halving the step quarters the residual
    r1 = T.phi_ode_residual(t, params, 1e-2)
    r2 = T.phi_ode_residual(t, params, 5e-3)
    assert np.isclose(r1 / r2, 4.0, rtol=0.05)
    with pytest.raises(ValueError):
        T.phi_ode_residual(b, params)


@settings(max_examples=50, deadline=None)
@given(u=st.floats(0, 1), M=st.floats(0.5, 64), lam=st.floats(0.2, 5), d=st.sampled_from([2, 3]))
def test_phi_properties(u, M, lam, d):
    p = T.theorem_parameters(M, d=d, C=8.0, lambda1=lam, strict=False)
    t = u * 2 * p.b
    assert np.isclose(T.phi(t, p) + T.phi(2 * p.b - t, p), 1.0, atol=1e-12)
    grid = np.linspace(0, 2 * p.b, 201)
    vals = T.phi(grid, p)
    assert np.all(np.diff(vals) >= -1e-15)
    slope = np.max(np.abs(np.diff(vals) / np.diff(grid)))
    assert slope <= T.phi_derivative_bound(p) * (1 + 1e-9)


def test_theorem_parameters_examples():
    with pytest.raises(ValueError):
        T.theorem_parameters(1.0, d=2, C=1.0)
    # C = 2 at M = 1 gives L = N = 2, which fails 1 <= L < N
    with pytest.raises(ValueError):
        T.theorem_parameters(1.0, d=2, C=2.0)
    p = T.theorem_parameters(1.0, d=2, C=2.0, strict=False)
    assert p.epsilon == 0.5 and p.N == 2 and p.L == 2 and not p.admissible
    assert np.isclose(p.alpha, math.pi / 4)
    q = T.theorem_parameters(4.0, d=2, C=2.0)
    assert q.epsilon == 0.125 and q.L == 32 and q.N == 2 * 4 ** 12
    assert np.isclose(q.gamma, 1 + 4 / math.sqrt(2))
    assert q.N_lemma == math.ceil(q.beta ** -2 * q.epsilon ** -3 * 4.0 ** 3)


def test_N_scaling():
    a = T.theorem_parameters(2.0, d=2, C=2.0)
    b = T.theorem_parameters(4.0, d=2, C=2.0)
    assert np.isclose(b.N / a.N, 2 ** 12, rtol=1e-6)


@settings(max_examples=60, deadline=None)
@given(M=st.floats(0.5, 64), d=st.sampled_from([2, 3]), C=st.floats(2.5, 50))
def test_parameter_invariants_or_rejection(M, d, C):
    try:
        p = T.theorem_parameters(M, d=d, C=C, lambda1=None if d == 2 else 1.0)
    except ValueError:
        return
    assert 0 < p.epsilon < 1
    assert isinstance(p.N, int) and p.N >= 1
    assert 1 <= p.L < p.N
    assert p.gamma > 1
    if M >= 1:
        assert p.alpha <= T.unit_ball_volume(d) / 2 ** d
    assert p.consistency_LN_le_beta == (p.L / p.N <= p.beta)


def test_parameter_validation():
    with pytest.raises(ValueError):
        T.theorem_parameters(0.4)
    with pytest.raises(ValueError):
        T.theorem_parameters(2.0, C=-1.0)
    with pytest.raises(ValueError):
        T.theorem_parameters(2.0, lambda1=0.0)


def test_predicted_waiting_time(params):
    assert T.predicted_waiting_time(0.0, params) == 0.0
    assert np.isclose(T.predicted_waiting_time(3.0, params), 3 * T.predicted_waiting_time(1.0, params))
    with pytest.raises(ValueError):
        T.predicted_waiting_time(-1.0, params)


def test_t1_offset(params):
    assert params.t1_offset(2.0) == 2.0 / (2 * 4.0)


def test_bin_tail_rate():
    assert np.isclose(T.bin_tail_rate(1.0, 2), 0.75)
    betas = np.geomspace(1e-3, 1e6, 50)
    rates = np.array([T.bin_tail_rate(b, 2) for b in betas])
    assert np.all(np.diff(rates) > 0) and np.all(rates < 3)
    assert np.all(rates < betas)
    assert np.isclose(T.bin_tail_rate(1e12, 2), 3.0)
    with pytest.raises(ValueError):
        T.bin_tail_rate(0.0)


def test_tail_length_scale():
    bp = T.bin_tail_rate(1.0, 2)
    assert np.isclose(T.tail_length_scale(4.0, 1.0, 2, C=1.0), 4.0 ** (2 / bp) * (1 + math.log(4.0)))
    assert T.tail_length_scale(1.0, 1.0) == 1.0


def test_to_dict_reports_everything(params):
    out = params.to_dict()
    for key in ("epsilon", "N", "L", "alpha", "beta", "gamma", "N_lemma", "lambda1", "a", "b",
                "consistency_LN_le_beta"):
        assert key in out
