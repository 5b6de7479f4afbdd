"""Closed-form incompressible velocity fields.

Every field is a finite sum of travelling sine modes

    V(t, x) = offset + sum_j a_j e_j sin(2 pi k_j . x + w_j t + theta_j)

with the polarization e_j a unit vector orthogonal to k_j, so that the
divergence vanishes identically.  In two dimensions e_j = (k_y, -k_x)/|k|,
which is the perpendicular gradient of the stream function

    psi(t, x) = sum_j a_j / (2 pi |k_j|) cos(2 pi k_j . x + w_j t + theta_j).

The ``offset`` is only nonzero for the (test-only) constant field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

KINDS = ("shear", "cellular", "random_fourier", "constant", "zero")


@dataclass(frozen=True)
class VelocityField:
    """A divergence-free space-time velocity field given by a mode table.

    Attributes
    ----------
    kind : str
        One of ``shear``, ``cellular``, ``random_fourier``, ``constant``, ``zero``.
    amplitude_bound : float
        The bound M on |V| over all of space-time.
    seed : int
        Seed used to draw the mode table (0 for deterministic kinds).
    wavevectors : ndarray, shape (J, d)
    frequencies : ndarray, shape (J,)
        Temporal angular frequencies w_j.
    amplitudes : ndarray, shape (J,)
    phases : ndarray, shape (J,)
    polarizations : ndarray, shape (J, d)
        Unit vectors orthogonal to the matching wavevector.
    offset : ndarray, shape (d,)
        Constant drift, zero except for the constant test field.
    params : dict
        Constructor arguments, kept for serialization and reporting.
    """

    kind: str
    amplitude_bound: float
    seed: int
    wavevectors: np.ndarray
    frequencies: np.ndarray
    amplitudes: np.ndarray
    phases: np.ndarray
    polarizations: np.ndarray
    offset: np.ndarray
    params: dict = dc_field(default_factory=dict)

    @property
    def spatial_dim(self) -> int:
        return int(self.offset.shape[0])

    @property
    def n_modes(self) -> int:
        return int(self.amplitudes.shape[0])

    @property
    def mode_table(self) -> list[tuple]:
        """Modes as (wavevector, temporal_frequency, amplitude, phase) tuples."""
        return [
            (tuple(k), float(w), float(a), float(p))
            for k, w, a, p in zip(
                self.wavevectors.tolist(), self.frequencies, self.amplitudes, self.phases
            )
        ]

    @property
    def min_wavelength(self) -> float:
        if self.n_modes == 0:
            return np.inf
        return float(1.0 / np.max(np.linalg.norm(self.wavevectors, axis=1)))

    def __call__(self, t, x):
        return eval_field(self, t, x)


def _make(kind, M, seed, k, w, a, th, pol, offset, params):
    d = len(offset)
    return VelocityField(
        kind=kind,
        amplitude_bound=float(M),
        seed=int(seed),
        wavevectors=np.asarray(k, dtype=float).reshape(-1, d),
        frequencies=np.asarray(w, dtype=float).reshape(-1),
        amplitudes=np.asarray(a, dtype=float).reshape(-1),
        phases=np.asarray(th, dtype=float).reshape(-1),
        polarizations=np.asarray(pol, dtype=float).reshape(-1, d),
        offset=np.asarray(offset, dtype=float),
        params=params,
    )


def _perp2(k):
    k = np.atleast_2d(np.asarray(k, dtype=float))
    e = np.stack([k[:, 1], -k[:, 0]], axis=1)
    return e / np.linalg.norm(k, axis=1, keepdims=True)


def make_zero(d: int = 2) -> VelocityField:
    return _make("zero", 0.0, 0, np.zeros((0, d)), [], [], [], np.zeros((0, d)),
                 np.zeros(d), {"d": d})


def make_constant(v: Sequence[float]) -> VelocityField:
    """Uniform drift ``v``.  Divergence free but not mean zero; for tests only."""
    v = np.asarray(v, dtype=float)
    d = v.shape[0]
    return _make("constant", float(np.linalg.norm(v)), 0, np.zeros((0, d)), [], [], [],
                 np.zeros((0, d)), v, {"value": v.tolist()})


def make_shear(M: float, wavevector: Sequence[int]) -> VelocityField:
    """Shear flow ``M sin(2 pi k.x)`` directed perpendicular to ``k``.

    In 3D the wavevector must lie in a coordinate plane; the flow then lies
    in that same plane.
    """
    if M <= 0:
        raise ValueError("M must be positive")
    k = np.asarray(wavevector, dtype=float)
    if not np.all(k == np.round(k)) or not np.any(k):
        raise ValueError("wavevector must be a nonzero integer vector")
    d = k.shape[0]
    if d == 2:
        e = _perp2(k)[0]
    elif d == 3:
        nz = np.flatnonzero(k == 0)
        if nz.size == 0:
            raise ValueError("3D shear needs a wavevector in a coordinate plane")
        plane = [i for i in range(3) if i != nz[0]]
        e = np.zeros(3)
        e[plane[0]], e[plane[1]] = k[plane[1]], -k[plane[0]]
        e /= np.linalg.norm(e)
    else:
        raise ValueError("only d = 2 or 3 is supported")
    return _make("shear", M, 0, [k], [0.0], [M], [0.0], [e], np.zeros(d),
                 {"M": M, "wavevector": k.astype(int).tolist()})


def make_cellular(M: float, cell_size: float) -> VelocityField:
    """Steady cellular flow with stream function
    ``(M L / 2 pi) sin(2 pi x / L) sin(2 pi y / L)``, ``L = cell_size``."""
    if M <= 0 or cell_size <= 0:
        raise ValueError("M and cell_size must be positive")
    # sin a sin b = (cos(a - b) - cos(a + b)) / 2
    k = np.array([[1.0, -1.0], [1.0, 1.0]]) / cell_size
    kn = np.linalg.norm(k, axis=1)
    psi_amp = M * cell_size / (4 * np.pi)
    a = psi_amp * 2 * np.pi * kn
    return _make("cellular", M, 0, k, [0.0, 0.0], a, [0.0, np.pi], _perp2(k), np.zeros(2),
                 {"M": M, "cell_size": cell_size})


def torus_sup_bound(amplitudes: np.ndarray, polarizations: np.ndarray, n_dir: int = 4096) -> float:
    """Supremum of |sum_j a_j e_j s_j| over all sign/phase choices.

    For modes with rationally independent frequencies the phases fill the
    whole torus over space-time, so this is the sup-norm of the field.
    It equals max over unit u of sum_j |a_j| |e_j . u|.
    """
    if amplitudes.size == 0:
        return 0.0
    d = polarizations.shape[1]
    w = np.abs(amplitudes)
    if d == 2:
        ang = np.linspace(0.0, np.pi, n_dir, endpoint=False)
        u = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    else:
        # Fibonacci points on the hemisphere
        i = np.arange(n_dir) + 0.5
        z = i / n_dir
        phi = np.pi * (1 + 5 ** 0.5) * i
        rho = np.sqrt(1 - z * z)
        u = np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)
    vals = np.abs(u @ polarizations.T) @ w
    best = u[np.argmax(vals)]
    # the objective is piecewise smooth; polish with the sign pattern at the best direction
    s = np.sign(polarizations @ best)
    s[s == 0] = 1.0
    v = (w * s) @ polarizations
    return float(max(vals.max(), np.linalg.norm(v)))


def make_random_fourier(
    M: float,
    n_modes: int,
    max_wavenumber: int,
    time_scale: float,
    seed: int,
    d: int = 2,
    period: float = 1.0,
) -> VelocityField:
    """Random-phase, random-frequency Fourier field on a torus of side ``period``.

    Wavevectors are uniform over nonzero integer vectors with
    ``|k|_inf <= max_wavenumber`` (scaled by ``1/period``), phases uniform,
    and frequencies normal with standard deviation ``1/time_scale``.
    Amplitudes are rescaled so that the space-time sup-norm equals ``M``.
    """
    if n_modes < 1 or max_wavenumber < 1:
        raise ValueError("n_modes and max_wavenumber must be >= 1")
    if time_scale <= 0 or M <= 0 or period <= 0:
        raise ValueError("M, time_scale and period must be positive")
    if d not in (2, 3):
        raise ValueError("only d = 2 or 3 is supported")
    rng = np.random.default_rng(seed)
    K = max_wavenumber
    grid = np.stack(np.meshgrid(*[np.arange(-K, K + 1)] * d, indexing="ij"), -1).reshape(-1, d)
    grid = grid[np.any(grid != 0, axis=1)]
    k = grid[rng.integers(0, len(grid), size=n_modes)].astype(float) / period
    w = rng.normal(0.0, 1.0 / time_scale, size=n_modes)
    th = rng.uniform(0.0, 2 * np.pi, size=n_modes)
    a = rng.uniform(0.5, 1.0, size=n_modes)
    if d == 2:
        pol = _perp2(k)
    else:
        g = rng.normal(size=(n_modes, 3))
        pol = np.cross(k, g)
        pol /= np.linalg.norm(pol, axis=1, keepdims=True)
    a *= M / torus_sup_bound(a, pol)
    return _make("random_fourier", M, seed, k, w, a, th, pol, np.zeros(d), {
        "M": M, "n_modes": n_modes, "max_wavenumber": max_wavenumber,
        "time_scale": time_scale, "seed": seed, "d": d, "period": period,
    })


def time_reversed(field: VelocityField) -> VelocityField:
    """Field for backward reachable sets: ``W(t, x) = -V(-t, x)``."""
    # -sin(k.x - w t + th) = sin(k.x - w t + th + pi)
    return VelocityField(
        kind=field.kind, amplitude_bound=field.amplitude_bound, seed=field.seed,
        wavevectors=field.wavevectors, frequencies=-field.frequencies,
        amplitudes=field.amplitudes, phases=field.phases + np.pi,
        polarizations=field.polarizations, offset=-field.offset,
        params={**field.params, "time_reversed": not field.params.get("time_reversed", False)},
    )


def eval_field(field: VelocityField, t, x) -> np.ndarray:
    """Evaluate V at time(s) ``t`` and point(s) ``x``.

    ``x`` has shape (..., d); ``t`` is a scalar or broadcasts against
    ``x[..., 0]``.  Returns an array of shape (..., d).
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    out = np.broadcast_to(field.offset, np.broadcast_shapes(x.shape, t.shape + (1,))).copy()
    if field.n_modes == 0:
        return out
    phase = 2 * np.pi * (x @ field.wavevectors.T) + t[..., None] * field.frequencies + field.phases
    out += (np.sin(phase) * field.amplitudes) @ field.polarizations
    return out


def eval_grid(field: VelocityField, t: float, axes: Sequence[np.ndarray]) -> np.ndarray:
    """Evaluate V at time ``t`` on the tensor grid spanned by ``axes``.

    Returns shape (d, len(axes[0]), ..., len(axes[d-1])).  Uses the
    separable form of each mode so the cost is a small matrix product.
    """
    d = field.spatial_dim
    shape = tuple(len(ax) for ax in axes)
    out = np.empty((d,) + shape)
    for i in range(d):
        out[i] = field.offset[i]
    if field.n_modes == 0:
        return out
    c = field.amplitudes * np.exp(1j * (field.frequencies * t + field.phases))
    facs = [np.exp(2j * np.pi * np.outer(field.wavevectors[:, a], ax)) for a, ax in enumerate(axes)]
    for i in range(d):
        w = c * field.polarizations[:, i]
        if not np.any(w):
            continue
        if d == 2:
            s = (facs[0].T * w) @ facs[1]
        else:
            s = np.einsum("j,ja,jb,jc->abc", w, *facs, optimize=True)
        out[i] += s.imag
    return out


def stream_function(field: VelocityField, t, x) -> np.ndarray:
    """The 2D stream function psi with V = (-d_y psi, d_x psi), offset excluded."""
    if field.spatial_dim != 2:
        raise ValueError("stream functions exist only for d = 2")
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if field.n_modes == 0:
        return np.zeros(np.broadcast_shapes(x.shape[:-1], t.shape))
    kn = np.linalg.norm(field.wavevectors, axis=1)
    # orientation sign: e = s (k_y, -k_x)/|k|
    s = np.sign(np.sum(field.polarizations * _perp2(field.wavevectors), axis=1))
    phase = 2 * np.pi * (x @ field.wavevectors.T) + t[..., None] * field.frequencies + field.phases
    return np.cos(phase) @ (s * field.amplitudes / (2 * np.pi * kn))


def divergence(field: VelocityField, t, x) -> np.ndarray:
    """Analytic divergence from the mode derivatives (zero up to rounding)."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if field.n_modes == 0:
        return np.zeros(np.broadcast_shapes(x.shape[:-1], t.shape))
    phase = 2 * np.pi * (x @ field.wavevectors.T) + t[..., None] * field.frequencies + field.phases
    kdote = 2 * np.pi * np.sum(field.wavevectors * field.polarizations, axis=1)
    return np.cos(phase) @ (field.amplitudes * kdote)


def _box_nodes(box, n_space, n_time):
    r = box.side
    axes = [c + r * ((np.arange(n_space) + 0.5) / n_space - 0.5) for c in box.center_point]
    times = box.center_time + r * ((np.arange(n_time) + 0.5) / n_time - 0.5)
    return axes, times


def verify_divergence_free(field: VelocityField, box, h: float, n_points: int = 16,
                           n_times: int = 4) -> float:
    """Max |central-difference divergence| over a sample grid inside ``box``."""
    if h <= 0:
        raise ValueError("h must be positive")
    d = field.spatial_dim
    axes, times = _box_nodes(box, n_points, n_times)
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, d)
    worst = 0.0
    for t in times:
        div = np.zeros(len(pts))
        for i in range(d):
            e = np.zeros(d)
            e[i] = h
            div += (eval_field(field, t, pts + e)[:, i] - eval_field(field, t, pts - e)[:, i]) / (2 * h)
        worst = max(worst, float(np.max(np.abs(div))))
    return worst


def sup_norm_estimate(field: VelocityField, box, n_points: int = 128, n_times: int = 16) -> float:
    """Max of |V| over a dense deterministic grid (closed box, endpoints included)."""
    r = box.side
    axes = [np.linspace(c - r / 2, c + r / 2, n_points) for c in box.center_point]
    times = np.linspace(box.center_time - r / 2, box.center_time + r / 2, n_times)
    best = 0.0
    for t in times:
        v = eval_grid(field, t, axes)
        best = max(best, float(np.sqrt(np.max(np.sum(v * v, axis=0)))))
    return best


# -- serialization -----------------------------------------------------------

def to_dict(field: VelocityField) -> dict:
    return {
        "schema_version": 1,
        "kind": field.kind,
        "amplitude_bound": field.amplitude_bound,
        "seed": field.seed,
        "spatial_dim": field.spatial_dim,
        "params": field.params,
        "offset": field.offset.tolist(),
        "modes": [
            {"wavevector": k, "temporal_frequency": w, "amplitude": a, "phase": p,
             "polarization": e}
            for k, w, a, p, e in zip(
                field.wavevectors.tolist(), field.frequencies.tolist(),
                field.amplitudes.tolist(), field.phases.tolist(),
                field.polarizations.tolist())
        ],
    }


def from_dict(doc: dict) -> VelocityField:
    d = int(doc["spatial_dim"])
    modes = doc["modes"]
    return _make(
        doc["kind"], doc["amplitude_bound"], doc["seed"],
        [m["wavevector"] for m in modes] or np.zeros((0, d)),
        [m["temporal_frequency"] for m in modes],
        [m["amplitude"] for m in modes],
        [m["phase"] for m in modes],
        [m["polarization"] for m in modes] or np.zeros((0, d)),
        doc["offset"], dict(doc.get("params", {})),
    )


def to_json(field: VelocityField) -> str:
    # repr-precision floats round-trip exactly through json
    return json.dumps(to_dict(field), indent=2)


def from_json(text: str) -> VelocityField:
    return from_dict(json.loads(text))


def from_config(cfg: dict, seed: int | None = None) -> VelocityField:
    """Build a field from a config section (the ``[field]`` table)."""
    kind = cfg.get("kind", "random_fourier")
    d = int(cfg.get("d", 2))
    if kind == "zero":
        return make_zero(d)
    if kind == "constant":
        return make_constant(cfg["value"])
    if kind == "shear":
        return make_shear(float(cfg["M"]), cfg.get("wavevector", [0, 1]))
    if kind == "cellular":
        return make_cellular(float(cfg["M"]), float(cfg.get("cell_size", 1.0)))
    if kind == "random_fourier":
        return make_random_fourier(
            float(cfg["M"]), int(cfg.get("n_modes", 16)), int(cfg.get("max_wavenumber", 2)),
            float(cfg.get("time_scale", 1.0)),
            int(cfg.get("seed", 0) if seed is None else seed),
            d=d, period=float(cfg.get("period", 1.0)),
        )
    raise ValueError(f"unknown field kind {kind!r}; expected one of {KINDS}")
