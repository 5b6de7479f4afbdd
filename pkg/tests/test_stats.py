"""Box averages, E_N, r_star and face fluxes against closed forms and brute force."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from gcoerce import field as F
from gcoerce import stats as S


def _exact_box_average(fld, box):
    # average of a_j e_j sin(phase) over a product of intervals: sinc factors
    r = box.side
    out = fld.offset.astype(float).copy()
    for k, w, a, th, e in zip(fld.wavevectors, fld.frequencies, fld.amplitudes, fld.phases,
                              fld.polarizations):
        z = np.exp(1j * (th + w * box.center_time)) * np.sinc(w * r / (2 * np.pi))
        for ki, ci in zip(k, box.center_point):
            z *= np.exp(2j * np.pi * ki * ci) * np.sinc(ki * r)
        out += a * e * z.imag
    return out


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_box_average_matches_closed_form(seed):
    fld = F.make_random_fourier(2.0, 10, 2, 0.7, seed)
    box = S.SpaceTimeBox(0.3, (0.1, -0.4), 0.83)
    exact = _exact_box_average(fld, box)
    sep = S.box_average(fld, box, q=256)
    assert np.allclose(sep, exact, atol=1e-4)
    # separable and tensor evaluate the same midpoint sum
    assert np.allclose(S.box_average(fld, box, q=16), S.box_average(fld, box, q=16, method="tensor"),
                       atol=1e-13)


def test_box_average_3d():
    fld = F.make_random_fourier(1.0, 5, 1, 1.0, 4, d=3)
    box = S.SpaceTimeBox(-0.2, (0.1, 0.2, 0.3), 0.6)
    assert np.allclose(S.box_average(fld, box, q=128), _exact_box_average(fld, box), atol=1e-4)
    assert np.allclose(S.box_average(fld, box, q=8), S.box_average(fld, box, q=8, method="tensor"),
                       atol=1e-13)


def test_full_period_average_vanishes():
    fld = F.make_cellular(2.0, 1.0)
    # steady field, whole cell: every mode integrates to zero
    assert np.allclose(S.box_average(fld, S.SpaceTimeBox(0.0, (0.2, 0.7), 1.0)), 0.0, atol=1e-12)


def test_E_N_with_one_subbox_is_box_average():
    fld = F.make_random_fourier(3.0, 8, 2, 1.0, 5)
    ctr = (0.4, (0.3, 0.9))
    avg = S.box_average(fld, S.SpaceTimeBox(*ctr, 1.7))
    assert np.isclose(S.empirical_E_N(fld, ctr, 1.7, 1), np.linalg.norm(avg), rtol=0, atol=1e-13)


def test_subbox_lattice_matches_individual_boxes():
    fld = F.make_random_fourier(2.0, 6, 2, 1.0, 8)
    t0, x0 = 0.5, (0.2, -0.1)
    r, N = 1.2, 3
    avg = S.subbox_averages(fld, (t0, x0), r, N, q=12)
    s = r / N
    for i, j, k in [(0, 0, 0), (1, 2, 0), (2, 1, 1)]:
        c = (t0 - r / 2 + (i + 0.5) * s, (x0[0] - r / 2 + (j + 0.5) * s, x0[1] - r / 2 + (k + 0.5) * s))
        direct = S.box_average(fld, S.SpaceTimeBox(c[0], c[1], s), q=12)
        assert np.allclose(avg[:, i, j, k], direct, atol=1e-13)


def test_E_N_constant_and_zero_fields():
    const = F.make_constant([0.3, -0.4])
    for r in (0.1, 1.0, 7.0):
        assert np.isclose(S.empirical_E_N(const, (0.0, (0.0, 0.0)), r, 4), 0.5)
    zero = F.make_zero(2)
    es = S.r_star(zero, (0.0, (0.0, 0.0)), 4, 0.1, 0.25, 8.0)
    assert es.r_star == 0.0 and not es.censored
    es = S.r_star(const, (0.0, (0.0, 0.0)), 4, 0.1, 0.25, 8.0)
    assert es.censored and es.r_star == 8.0


def test_r_star_is_last_crossing():
    fld = F.make_random_fourier(2.0, 8, 2, 1.0, 3)
    es = S.r_star(fld, (0.0, (0.5, 0.5)), 4, 0.3, 0.25, 8.0)
    above = es.E_N_values >= 0.3
    assert es.r_star == es.r_values[np.flatnonzero(above)[-1]]
    assert not np.any(es.E_N_values[es.r_values > es.r_star] >= 0.3)
    assert es.censored == bool(above[-1])
    assert es.r_values[0] == 0.25 and np.isclose(es.r_values[-1], 8.0)


def test_E_N_decays_for_mean_zero_field():
    fld = F.make_random_fourier(2.0, 16, 2, 1.0, 0)
    big = S.empirical_E_N(fld, (0.0, (0.0, 0.0)), 64.0, 4)
    small = S.empirical_E_N(fld, (0.0, (0.0, 0.0)), 0.05, 4)
    assert big < 0.1 * small


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 500), e1=st.floats(0.05, 1.5), e2=st.floats(0.05, 1.5))
def test_r_star_nonincreasing_in_epsilon(seed, e1, e2):
    fld = F.make_random_fourier(2.0, 6, 2, 1.0, seed)
    lo, hi = sorted((e1, e2))
    a = S.r_star(fld, (0.0, (0.1, 0.2)), 4, lo, 0.25, 8.0, n_r=12, q=16)
    b = S.r_star(fld, (0.0, (0.1, 0.2)), 4, hi, 0.25, 8.0, n_r=12, q=16)
    assert b.r_star <= a.r_star


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 500), r=st.floats(0.05, 10.0), N=st.integers(1, 6))
def test_E_N_bounded_by_M(seed, r, N):
    fld = F.make_random_fourier(3.0, 6, 2, 1.0, seed)
    assert 0.0 <= S.empirical_E_N(fld, (0.2, (0.0, 0.4)), r, N, q=8) <= 3.0 * (1 + 1e-12)


def test_E_N_periodic_shift():
    fld = F.make_random_fourier(2.0, 6, 2, 1.0, 13)
    a = S.empirical_E_N(fld, (0.3, (0.1, 0.2)), 0.9, 3)
    b = S.empirical_E_N(fld, (0.3, (1.1, -1.8)), 0.9, 3)
    assert np.isclose(a, b, atol=1e-12)


def test_face_flux_brute_force():
    fld = F.make_random_fourier(2.0, 6, 1, 1.0, 21)
    fc, side, ti = (0.3, 0.1), 0.7, (0.2, 0.9)

    def integrand(y, t):
        return F.eval_field(fld, t, np.array([fc[0], y]))[0]

    ref, _ = integrate.dblquad(integrand, ti[0], ti[1], fc[1] - side / 2, fc[1] + side / 2,
                               epsabs=1e-11, epsrel=1e-11)
    assert np.isclose(S.face_flux(fld, fc, 0, side, ti, q=256), ref, atol=1e-5)


@pytest.mark.parametrize("fld", [F.make_random_fourier(4.0, 12, 2, 1.0, 2),
                                 F.make_cellular(2.0, 0.3), F.make_shear(1.0, [2, 1]),
                                 F.make_random_fourier(2.0, 6, 2, 1.0, 2, d=3)])
def test_closed_box_flux_vanishes(fld):
    rng = np.random.default_rng(0)
    for _ in range(5):
        side = rng.uniform(0.1, 2.0)
        flux = S.closed_box_flux(fld, rng.uniform(-2, 2), rng.uniform(-1, 1, fld.spatial_dim), side)
        assert abs(flux) <= 1e-8 * fld.amplitude_bound * 2 * fld.spatial_dim * side ** (fld.spatial_dim - 1)


def test_face_flux_ratios_match_face_flux():
    fld = F.make_random_fourier(2.0, 6, 2, 1.0, 4)
    t0, x0 = 0.1, (0.2, 0.3)
    r, N, L, eps = 1.0, 4, 2, 0.2
    out = S.face_flux_ratios(fld, (t0, x0), r, N, L, eps, q=16)
    s = L * r / N
    # normal axis 1, plane 3, interval 1, tangential start 2
    plane = x0[1] - r / 2 + 3 * r / N
    t_lo = t0 - r / 2 + 1 * r / N
    x_lo = x0[0] - r / 2 + 2 * r / N
    fl = S.face_flux(fld, (x_lo + s / 2, plane), 1, s, (t_lo, t_lo + s), q=16)
    expect = abs(fl) / ((eps + 2.0 / L) * s ** 2)
    assert np.isclose(out[1][3, 1, 2], expect, rtol=1e-12)
    assert out[0].shape == (N + 1, N - L + 1, N - L + 1)


def test_face_flux_lemma_report():
    fld = F.make_random_fourier(2.0, 6, 2, 1.0, 4)
    rep = S.check_face_flux_lemma(fld, (0.0, (0.0, 0.0)), 2.0, 4, 2, 0.2, r_star_value=3.0)
    assert not rep.hypothesis_holds
    assert rep.n_faces == 2 * 5 * 3 * 3
    # |flux| <= M |F x I| gives ratio <= M / (eps + M/L)
    assert 0 <= rep.max_ratio <= 2.0 / (0.2 + 1.0)
    with pytest.raises(ValueError):
        S.face_flux_ratios(fld, (0.0, (0.0, 0.0)), 1.0, 4, 4, 0.1)


def test_uniform_r_star():
    const = F.make_constant([0.5, 0.0])
    assert S.uniform_r_star(const, 0.4, [(0.0, (0.0, 0.0))], [0.5, 1.0, 2.0]) == 2.0
    fld = F.make_cellular(2.0, 1.0)
    # a whole cell averages to zero, a small box near a jet does not
    assert S.uniform_r_star(fld, 0.5, [(0.0, (0.0, 0.25))], [0.1, 1.0]) == 0.1


def test_input_validation():
    fld = F.make_zero(2)
    with pytest.raises(ValueError):
        S.SpaceTimeBox(0.0, (0.0, 0.0), 0.0)
    with pytest.raises(ValueError):
        S.r_star(fld, (0.0, (0.0, 0.0)), 4, 0.1, 2.0, 1.0)
    with pytest.raises(ValueError):
        S.r_star(fld, (0.0, (0.0, 0.0)), 4, 0.0, 0.5, 1.0)
    with pytest.raises(ValueError):
        S.box_average(fld, S.SpaceTimeBox(0.0, (0.0, 0.0), 1.0), q=1)


def test_long_windows_do_not_alias():
    # q = 32 nodes across 16 periods would land on a wavenumber-2 mode's crests
    fld = F.make_shear(1.0, [2, 0])
    box = S.SpaceTimeBox(0.0, (0.1, 0.0), 16.0)
    assert np.linalg.norm(S.box_average(fld, box, q=32)) < 1e-12
    assert S.empirical_E_N(fld, (0.0, (0.1, 0.0)), 64.0, 4, q=32) < 1e-12
