"""Space-time box averages, the lattice statistic E_N, coercivity scales and face fluxes.

All averages use the tensor-product midpoint rule.  ``q`` is a minimum node
count per axis: it is raised per window to ``NODES_PER_OSC`` nodes per
oscillation of the fastest mode, so long windows do not alias.  For mode fields the
rule factorizes over axes, so an average over a (d+1)-box with q points
per axis costs O(J q (d+1)) rather than O(J q^(d+1)); ``method="tensor"``
evaluates the full node grid instead and is kept as a cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .field import VelocityField, eval_field

DEFAULT_Q = 32
DEFAULT_RATIO = 2 ** (1 / 8)
NODES_PER_OSC = 8


@dataclass(frozen=True)
class SpaceTimeBox:
    """Q_r(t, x) = (t, x) + (-r/2, r/2) x (-r/2, r/2)^d."""

    center_time: float
    center_point: tuple
    side: float

    def __post_init__(self):
        if not self.side > 0:
            raise ValueError("box side must be positive")
        object.__setattr__(self, "center_point", tuple(float(c) for c in self.center_point))

    @property
    def d(self) -> int:
        return len(self.center_point)

    @property
    def volume(self) -> float:
        return self.side ** (self.d + 1)


@dataclass
class EmpiricalStats:
    r_values: np.ndarray
    E_N_values: np.ndarray
    N: int
    epsilon: float
    r_star: float
    center: tuple
    censored: bool

    def to_dict(self) -> dict:
        return {
            "r_values": self.r_values.tolist(), "E_N_values": self.E_N_values.tolist(),
            "N": self.N, "epsilon": self.epsilon, "r_star": self.r_star,
            "center": [self.center[0], list(self.center[1])], "censored": self.censored,
        }


def _midpoints(lo, length, q):
    """Midpoint nodes of [lo, lo + length] (broadcast over ``lo``)."""
    return np.asarray(lo)[..., None] + length * (np.arange(q) + 0.5) / q


def _resolved_q(freq, length, q):
    """q raised so every mode gets >= NODES_PER_OSC midpoint nodes per oscillation.

    Without this, long windows alias: q nodes spaced by a whole period of a
    mode average it to 1 instead of ~0.
    """
    fmax = float(np.max(np.abs(freq))) if np.size(freq) else 0.0
    return max(int(q), int(np.ceil(NODES_PER_OSC * fmax * length / (2 * np.pi))))


def _mode_means(freq, lo, length, q):
    """Midpoint rule for (1/L) int exp(i freq x) dx over [lo, lo + L].

    freq: (J,), lo: (W,) -> (J, W).  ``q`` is a minimum node count.
    """
    nodes = _midpoints(lo, length, _resolved_q(freq, length, q))
    return np.exp(1j * freq[:, None, None] * nodes[None]).mean(axis=-1)


def _lattice_averages(field: VelocityField, t_windows, x_windows, q):
    """Midpoint averages of V over all products of per-axis windows.

    ``t_windows`` is (lo, length) with lo an array of window starts;
    ``x_windows`` is a list of d such pairs.  Returns (d, W_t, W_1, ..., W_d).
    """
    d = field.spatial_dim
    lo_t, len_t = t_windows
    shape = (len(lo_t),) + tuple(len(lo) for lo, _ in x_windows)
    out = np.empty((d,) + shape)
    for c in range(d):
        out[c] = field.offset[c]
    if field.n_modes == 0:
        return out
    mt = _mode_means(field.frequencies, lo_t, len_t, q)
    mx = [_mode_means(2 * np.pi * field.wavevectors[:, a], lo, ln, q)
          for a, (lo, ln) in enumerate(x_windows)]
    letters = "abcdefg"[: d + 1]
    spec = "j," + ",".join("j" + ch for ch in letters) + "->" + letters
    base = field.amplitudes * np.exp(1j * field.phases)
    for c in range(d):
        w = base * field.polarizations[:, c]
        if np.any(w):
            out[c] += np.einsum(spec, w, mt, *mx, optimize=True).imag
    return out


def box_average(field: VelocityField, box: SpaceTimeBox, q: int = DEFAULT_Q,
                method: str = "separable") -> np.ndarray:
    """(d+1)-dimensional midpoint-rule average of V over ``box``.

    ``method="tensor"`` uses exactly q nodes per axis (no alias guard).
    """
    if q < 2:
        raise ValueError("q must be >= 2")
    r = box.side
    if method == "separable":
        avg = _lattice_averages(
            field, (np.array([box.center_time - r / 2]), r),
            [(np.array([c - r / 2]), r) for c in box.center_point], q)
        return avg.reshape(field.spatial_dim)
    if method == "tensor":
        d = box.d
        axes = [c + r * ((np.arange(q) + 0.5) / q - 0.5) for c in box.center_point]
        times = box.center_time + r * ((np.arange(q) + 0.5) / q - 0.5)
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, d)
        total = np.zeros(d)
        for t in times:
            total += eval_field(field, t, pts).sum(axis=0)
        return total / (q ** (d + 1))
    raise ValueError(f"unknown method {method!r}")


def subbox_averages(field: VelocityField, center, r: float, N: int, q: int = DEFAULT_Q) -> np.ndarray:
    """Averages over the N^(d+1) sub-boxes of side r/N tiling Q_r(center).

    Returns shape (d, N, ..., N) with the time index first.
    """
    t0, x0 = center
    s = r / N
    starts = np.arange(N) * s - r / 2
    return _lattice_averages(field, (t0 + starts, s), [(c + starts, s) for c in x0], q)


def empirical_E_N(field: VelocityField, center, r: float, N: int, q: int = DEFAULT_Q) -> float:
    """E_N[V; Q_r(center)]: the largest |sub-box average| over the lattice of
    side-r/N sub-boxes partitioning Q_r.

    For odd N the sub-box centers are exactly the points (k r/N, n r/N) with
    |(k, n)|_inf < N/2; for even N the partitioning lattice is offset by half
    a sub-box from those points.
    """
    if N < 1 or not r > 0:
        raise ValueError("need N >= 1 and r > 0")
    avg = subbox_averages(field, center, r, N, q)
    return float(np.sqrt(np.max(np.sum(avg * avg, axis=0))))


def radius_grid(r_min: float, r_max: float, n_r: int | None = None) -> np.ndarray:
    if n_r is None:
        n_r = int(np.ceil(np.log(r_max / r_min) / np.log(DEFAULT_RATIO))) + 1
    return np.geomspace(r_min, r_max, n_r)


def r_star(field: VelocityField, center, N: int, epsilon: float, r_min: float, r_max: float,
           n_r: int | None = None, q: int = DEFAULT_Q) -> EmpiricalStats:
    """Largest grid radius r with E_N[V; Q_r(center)] >= epsilon (0 if none).

    ``censored`` is set when E_N at ``r_max`` is still >= epsilon, i.e. the
    true sup lies beyond the grid.
    """
    if not 0 < r_min < r_max:
        raise ValueError("need 0 < r_min < r_max")
    if n_r is not None and n_r < 2:
        raise ValueError("n_r must be >= 2")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    t0, x0 = center
    center = (float(t0), tuple(float(c) for c in x0))
    rs = radius_grid(r_min, r_max, n_r)
    E = np.array([empirical_E_N(field, center, r, N, q) for r in rs])
    hit = np.flatnonzero(E >= epsilon)
    rstar = float(rs[hit[-1]]) if hit.size else 0.0
    return EmpiricalStats(rs, E, N, float(epsilon), rstar, center, bool(E[-1] >= epsilon))


def spatial_box_average(field: VelocityField, t: float, x, r: float, q: int = DEFAULT_Q) -> np.ndarray:
    """Midpoint average of V(t, .) over the spatial box Box_r(x)."""
    d = field.spatial_dim
    out = field.offset.astype(float).copy()
    if field.n_modes == 0:
        return out
    prod = np.exp(1j * (field.frequencies * t + field.phases))
    for a in range(d):
        prod = prod * _mode_means(2 * np.pi * field.wavevectors[:, a], np.array([x[a] - r / 2]), r, q)[:, 0]
    out += (field.amplitudes * prod.imag) @ field.polarizations
    return out


def uniform_r_star(field: VelocityField, epsilon: float, sample_centers: Sequence,
                   r_grid: Sequence[float], q: int = DEFAULT_Q) -> float:
    """Sampled version of the uniform-mean scale: the largest r in ``r_grid``
    such that some spatial box average |avg_{Box_r(x)} V(t, .)| >= epsilon
    over the sampled centers (t, x)."""
    if len(sample_centers) == 0 or len(r_grid) == 0:
        raise ValueError("need at least one center and one radius")
    best = 0.0
    for r in sorted(r_grid, reverse=True):
        if r <= best:
            break
        for t, x in sample_centers:
            if np.linalg.norm(spatial_box_average(field, t, x, r, q)) >= epsilon:
                best = float(r)
                break
    return best


def _gauss_means(freq, lo, length, q):
    """Gauss-Legendre version of ``_mode_means`` for one window."""
    x, w = np.polynomial.legendre.leggauss(q)
    nodes = np.asarray(lo)[..., None] + 0.5 * length * (x + 1)
    return (np.exp(1j * freq[:, None, None] * nodes[None]) * (0.5 * w)).sum(axis=-1)


def _face_mean(field: VelocityField, face_center, n: int, side: float, tfac, q: int,
               rule: str = "midpoint") -> float:
    """Mean of V . e_n over a face, given each mode's time factor ``tfac``."""
    avg = float(field.offset[n])
    if field.n_modes == 0:
        return avg
    prod = field.amplitudes * field.polarizations[:, n] * np.exp(1j * field.phases) * tfac
    prod = prod * np.exp(2j * np.pi * field.wavevectors[:, n] * face_center[n])
    for a in range(field.spatial_dim):
        if a != n:
            lo = np.array([face_center[a] - side / 2])
            if rule == "midpoint":
                m = _mode_means(2 * np.pi * field.wavevectors[:, a], lo, side, q)
            else:
                m = _gauss_means(2 * np.pi * field.wavevectors[:, a], lo, side, q)
            prod = prod * m[:, 0]
    return avg + float(np.sum(prod.imag))


def face_flux(field: VelocityField, face_center, face_normal: int, face_side: float,
              time_interval, q: int = DEFAULT_Q) -> float:
    """Integral over I x F of V . e_n for an axis-aligned (d-1)-cube F."""
    if q < 2:
        raise ValueError("q must be >= 2")
    ta, tb = time_interval
    tfac = _mode_means(field.frequencies, np.array([ta]), tb - ta, q)[:, 0]
    mean = _face_mean(field, face_center, face_normal, face_side, tfac, q)
    return mean * face_side ** (field.spatial_dim - 1) * (tb - ta)


def closed_box_flux(field: VelocityField, t: float, center, side: float, q: int = 64) -> float:
    """Total outward flux of V(t, .) through the boundary of Box_side(center).

    Face means use q-node Gauss-Legendre rules.  The midpoint rule breaks
    the mode-by-mode cancellation at order (k side / q)^2, far above the
    1e-8 M |dBox| level the divergence check needs; Gauss rules are exact
    to rounding for these band-limited fields once q exceeds ~k side.
    """
    tfac = np.exp(1j * field.frequencies * t)
    total = 0.0
    for a in range(field.spatial_dim):
        for sgn in (-1.0, 1.0):
            fc = np.array(center, dtype=float)
            fc[a] += sgn * side / 2
            total += sgn * _face_mean(field, fc, a, side, tfac, q, rule="gauss")
    return total * side ** (field.spatial_dim - 1)


@dataclass
class FaceFluxReport:
    r: float
    N: int
    L: int
    epsilon: float
    M: float
    max_ratio: float
    n_faces: int
    hypothesis_holds: bool
    r_star: float | None
    worst: dict = dc_field(default_factory=dict)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def face_flux_ratios(field: VelocityField, center, r: float, N: int, L: int, epsilon: float,
                     M: float | None = None, q: int = DEFAULT_Q):
    """|int_I flux(V, F)| / ((epsilon + M/L) |F x I|) for every lattice sub-face.

    Sub-faces have side L r/N, lie in the lattice hyperplanes of Box_r and
    have corners on the r/N lattice; intervals of length L r/N start on the
    same lattice inside [t - r/2, t + r/2].  Returns a dict mapping the
    normal axis to an array indexed by (plane, interval, tangential starts...).
    """
    if not 1 <= L < N:
        raise ValueError("need 1 <= L < N")
    if M is None:
        M = field.amplitude_bound
    d = field.spatial_dim
    t0, x0 = center
    s = L * r / N
    starts = np.arange(N - L + 1) * (r / N) - r / 2
    planes = np.arange(N + 1) * (r / N) - r / 2
    scale = (epsilon + M / L) * s ** d
    out = {}
    for n in range(d):
        tan = [a for a in range(d) if a != n]
        shape = (N + 1, len(starts)) + (len(starts),) * (d - 1)
        avg = np.full(shape, float(field.offset[n]))
        if field.n_modes:
            w = field.amplitudes * field.polarizations[:, n] * np.exp(1j * field.phases)
            en = np.exp(2j * np.pi * np.outer(field.wavevectors[:, n], x0[n] + planes))
            mt = _mode_means(field.frequencies, t0 + starts, s, q)
            mx = [_mode_means(2 * np.pi * field.wavevectors[:, a], x0[a] + starts, s, q)
                  for a in tan]
            letters = "pt" + "uvw"[: d - 1]
            spec = "j," + ",".join("j" + ch for ch in letters) + "->" + letters
            avg = avg + np.einsum(spec, w, en, mt, *mx, optimize=True).imag
        out[n] = np.abs(avg) * s ** d / scale
    return out


def check_face_flux_lemma(field: VelocityField, center, r: float, N: int, L: int, epsilon: float,
                          r_star_value: float | None = None, M: float | None = None,
                          q: int = DEFAULT_Q) -> FaceFluxReport:
    """Empirical constant in |int_I flux(V, F)| <= C (eps + M/L) |F x I|.

    ``r_star_value`` is the measured r*_{N,eps} at ``center``; when given and
    larger than ``r`` the report records that the hypothesis fails.
    """
    if M is None:
        M = field.amplitude_bound
    ratios = face_flux_ratios(field, center, r, N, L, epsilon, M, q)
    best, worst = -1.0, {}
    n_faces = 0
    for n, arr in ratios.items():
        n_faces += arr.size
        idx = np.unravel_index(np.argmax(arr), arr.shape)
        if arr[idx] > best:
            best = float(arr[idx])
            worst = {"normal": n, "index": [int(i) for i in idx]}
    holds = True if r_star_value is None else bool(r >= r_star_value)
    return FaceFluxReport(float(r), N, L, float(epsilon), float(M), best, n_faces, holds,
                          r_star_value, worst)
