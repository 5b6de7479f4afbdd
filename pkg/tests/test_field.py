"""Velocity field generators: incompressibility, bounds, closed forms, serialization."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gcoerce import field as F
from gcoerce.stats import SpaceTimeBox


def _fd_divergence(fld, t, pts, eps=1e-5):
    # independent central differences, not the library's checker
    d = pts.shape[-1]
    div = np.zeros(pts.shape[:-1])
    for i in range(d):
        e = np.zeros(d)
        e[i] = eps
        div += (F.eval_field(fld, t, pts + e)[..., i] - F.eval_field(fld, t, pts - e)[..., i]) / (2 * eps)
    return div


GENERATORS = {
    "shear": lambda: F.make_shear(2.0, [1, 2]),
    "cellular": lambda: F.make_cellular(3.0, 0.5),
    "random2": lambda: F.make_random_fourier(4.0, 12, 2, 1.0, 7),
    "random3": lambda: F.make_random_fourier(2.0, 8, 1, 0.5, 3, d=3),
    "shear3": lambda: F.make_shear(1.5, [0, 1, 2]),
    "constant": lambda: F.make_constant([0.5, 0.0]),
}


@pytest.mark.parametrize("name", sorted(GENERATORS))
def test_divergence_free(name):
    fld = GENERATORS[name]()
    rng = np.random.default_rng(0)
    pts = rng.uniform(-2, 2, size=(200, fld.spatial_dim))
    t = rng.uniform(-3, 3, size=200)
    assert np.max(np.abs(F.divergence(fld, t, pts))) < 1e-9
    # O(eps^2) truncation times k^3 M
    assert np.max(np.abs(_fd_divergence(fld, t, pts))) < 1e-4


@pytest.mark.parametrize("name", sorted(GENERATORS))
def test_sup_norm_bounded_by_M(name):
    fld = GENERATORS[name]()
    rng = np.random.default_rng(1)
    pts = rng.uniform(-5, 5, size=(20000, fld.spatial_dim))
    t = rng.uniform(-50, 50, size=20000)
    speed = np.linalg.norm(F.eval_field(fld, t, pts), axis=-1)
    assert speed.max() <= fld.amplitude_bound * (1 + 1e-12)


def test_random_fourier_sup_is_attained():
    # the torus sup is approached by long space-time sampling
    fld = F.make_random_fourier(2.0, 4, 1, 1.0, 5)
    est = F.sup_norm_estimate(fld, SpaceTimeBox(0.0, (0.5, 0.5), 1.0), n_points=96, n_times=64)
    rng = np.random.default_rng(2)
    pts = rng.uniform(0, 1, size=(400000, 2))
    t = rng.uniform(0, 2000, size=400000)
    long_run = np.linalg.norm(F.eval_field(fld, t, pts), axis=-1).max()
    assert est <= 2.0 + 1e-12
    assert long_run > 0.9 * 2.0


def test_cellular_closed_form():
    M, L = 3.0, 0.5
    fld = F.make_cellular(M, L)
    rng = np.random.default_rng(3)
    x = rng.uniform(-1, 1, size=(100, 2))
    a, b = 2 * np.pi * x[:, 0] / L, 2 * np.pi * x[:, 1] / L
    psi = M * L / (2 * np.pi) * np.sin(a) * np.sin(b)
    assert np.allclose(F.stream_function(fld, 0.0, x), psi, atol=1e-12)
    v = F.eval_field(fld, 0.0, x)
    grad = M * np.stack([np.cos(a) * np.sin(b), np.sin(a) * np.cos(b)], axis=1)
    # V = (-d_y psi, d_x psi)
    assert np.allclose(v, np.stack([-grad[:, 1], grad[:, 0]], axis=1), atol=1e-12)
    assert np.isclose(np.linalg.norm(F.eval_field(fld, 0.0, [0.0, L / 4])), M)


def test_shear_closed_form():
    fld = F.make_shear(2.0, [0, 1])
    y = np.linspace(0, 1, 17)
    pts = np.stack([np.full_like(y, 0.3), y], axis=1)
    v = F.eval_field(fld, 1.7, pts)
    assert np.allclose(v[:, 0], 2.0 * np.sin(2 * np.pi * y))
    assert np.allclose(v[:, 1], 0.0)


@pytest.mark.parametrize("name", ["random2", "cellular", "shear"])
def test_stream_function_gives_velocity(name):
    fld = GENERATORS[name]()
    rng = np.random.default_rng(4)
    x = rng.uniform(-1, 1, size=(50, 2))
    t = 0.37
    eps = 1e-6
    ex, ey = np.array([eps, 0.0]), np.array([0.0, eps])
    dpx = (F.stream_function(fld, t, x + ex) - F.stream_function(fld, t, x - ex)) / (2 * eps)
    dpy = (F.stream_function(fld, t, x + ey) - F.stream_function(fld, t, x - ey)) / (2 * eps)
    assert np.allclose(F.eval_field(fld, t, x), np.stack([-dpy, dpx], axis=1), atol=1e-6)


def test_eval_grid_matches_pointwise():
    fld = GENERATORS["random2"]()
    axes = [np.linspace(0, 1, 7), np.linspace(-0.5, 0.5, 5)]
    grid = F.eval_grid(fld, 0.8, axes)
    X, Y = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([X, Y], -1)
    assert np.allclose(np.moveaxis(grid, 0, -1), F.eval_field(fld, 0.8, pts), atol=1e-12)


def test_eval_grid_3d_matches_pointwise():
    fld = GENERATORS["random3"]()
    axes = [np.linspace(0, 1, 4), np.linspace(0, 1, 3), np.linspace(0, 1, 5)]
    grid = F.eval_grid(fld, -0.2, axes)
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1)
    assert np.allclose(np.moveaxis(grid, 0, -1), F.eval_field(fld, -0.2, pts), atol=1e-12)


def test_periodic_in_space():
    fld = F.make_random_fourier(1.0, 6, 2, 1.0, 11, period=2.0)
    rng = np.random.default_rng(5)
    x = rng.uniform(0, 2, size=(30, 2))
    assert np.allclose(F.eval_field(fld, 0.4, x), F.eval_field(fld, 0.4, x + [2.0, -4.0]))


def test_seed_determinism_and_variation():
    a = F.make_random_fourier(2.0, 8, 2, 1.0, 42)
    b = F.make_random_fourier(2.0, 8, 2, 1.0, 42)
    c = F.make_random_fourier(2.0, 8, 2, 1.0, 43)
    assert F.to_json(a) == F.to_json(b)
    assert F.to_json(a) != F.to_json(c)


@pytest.mark.parametrize("name", sorted(GENERATORS))
def test_json_round_trip(name):
    fld = GENERATORS[name]()
    back = F.from_json(F.to_json(fld))
    x = np.random.default_rng(6).uniform(-1, 1, size=(20, fld.spatial_dim))
    assert np.array_equal(F.eval_field(fld, 0.3, x), F.eval_field(back, 0.3, x))
    assert back.kind == fld.kind and back.amplitude_bound == fld.amplitude_bound


def test_time_reversal():
    fld = GENERATORS["random2"]()
    rev = F.time_reversed(fld)
    x = np.random.default_rng(7).uniform(-1, 1, size=(20, 2))
    assert np.allclose(F.eval_field(rev, 0.6, x), -F.eval_field(fld, -0.6, x), atol=1e-12)


def test_from_config_kinds():
    assert F.from_config({"kind": "zero"}).n_modes == 0
    assert F.from_config({"kind": "cellular", "M": 2.0}).amplitude_bound == 2.0
    f1 = F.from_config({"kind": "random_fourier", "M": 1.0, "n_modes": 3}, seed=9)
    assert f1.seed == 9
    with pytest.raises(ValueError):
        F.from_config({"kind": "vortex"})


@pytest.mark.parametrize("bad", [
    lambda: F.make_random_fourier(-1.0, 4, 1, 1.0, 0),
    lambda: F.make_random_fourier(1.0, 0, 1, 1.0, 0),
    lambda: F.make_random_fourier(1.0, 4, 1, 0.0, 0),
    lambda: F.make_shear(1.0, [0, 0]),
    lambda: F.make_shear(1.0, [0.5, 1]),
    lambda: F.make_cellular(1.0, 0.0),
])
def test_invalid_parameters(bad):
    with pytest.raises(ValueError):
        bad()


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), n_modes=st.integers(1, 10), K=st.integers(1, 3),
       M=st.floats(0.1, 8.0), d=st.sampled_from([2, 3]))
def test_random_fourier_properties(seed, n_modes, K, M, d):
    fld = F.make_random_fourier(M, n_modes, K, 1.0, seed, d=d)
    assert np.allclose(np.sum(fld.wavevectors * fld.polarizations, axis=1), 0.0, atol=1e-12)
    assert np.allclose(np.linalg.norm(fld.polarizations, axis=1), 1.0)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1, 1, size=(500, d))
    t = rng.uniform(-10, 10, size=500)
    assert np.linalg.norm(F.eval_field(fld, t, pts), axis=-1).max() <= M * (1 + 1e-9)
    assert np.max(np.abs(F.divergence(fld, t, pts))) <= 1e-9 * max(M, 1) * (K * 2 * np.pi) * 4
