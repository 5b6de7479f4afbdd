"""Monotone level-set evolution of the G-equation and reachable-set measurements.

The solver integrates u_t = A |grad u| - V . grad u by forward Euler with
the Rouy-Tourin upwind gradient for the expanding term and per-axis
upwinding for advection.  Initial data is a smooth bump around the
source, and the reachable set is the superlevel set {u >= threshold}.
The sign of the transport term makes superlevel sets move with the
trajectories dX/dt = V(t, X) + alpha, |alpha| <= A.

Only the bounding box of the support of u is updated each step: cells
whose value and neighbours are all zero stay exactly zero, so this is the
same computation as a full periodic sweep.  Values below ``floor`` are
flushed to zero to keep the numerical tails from inflating the box.
After each step u is divided by its maximum when that has dropped below
1 (see ``step``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, replace

import numpy as np
from numba import njit

from .field import VelocityField, eval_field, eval_grid
from .theory import unit_ball_volume

DEFAULT_CFL = 0.5
DEFAULT_FLOOR = 1e-12
ORACLE_CAP = 128
# default bump radius in grid cells
DEFAULT_DELTA_CELLS = 2
# fraction of the bump radius where u0 = 1
DEFAULT_PLATEAU = 0.0
# oracle particles are thinned to one per bin of this many cells
ORACLE_THIN = 0.125


class CFLError(ValueError):
    """Time step exceeds the monotonicity limit of the scheme."""


class WraparoundError(ValueError):
    """The periodic grid is too small for the requested evolution."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid with nodes ``lower + i h``, ``i = 0..n-1`` per axis."""

    n: int
    h: float
    lower: tuple

    @classmethod
    def centered(cls, center, n: int, h: float) -> "GridSpec":
        """Grid whose node ``n // 2`` (per axis) sits exactly on ``center``."""
        return cls(n, h, tuple(float(c) - (n // 2) * h for c in center))

    @property
    def d(self) -> int:
        return len(self.lower)

    @property
    def side(self) -> float:
        return self.n * self.h

    def axis(self, a: int, idx=None) -> np.ndarray:
        idx = np.arange(self.n) if idx is None else np.asarray(idx)
        return self.lower[a] + idx * self.h

    def nearest_index(self, x) -> tuple:
        return tuple(int(round((xi - lo) / self.h)) % self.n for xi, lo in zip(x, self.lower))


def required_side(A: float, M: float, duration: float, delta: float) -> float:
    """Smallest grid side allowed for an evolution of the given duration."""
    return 4 * (A + M) * duration + 4 * delta


@dataclass
class LevelSetState:
    values: np.ndarray
    grid: GridSpec
    time: float
    source: tuple
    A: float = 1.0
    delta: float = 0.0
    # per-axis inclusive (lo, hi) index range containing the support of ``values``
    support: tuple | None = None

    def copy(self) -> "LevelSetState":
        return replace(self, values=self.values.copy())


@dataclass
class ReachableSet:
    indicator: np.ndarray
    grid: GridSpec
    time: float
    source: tuple
    threshold: float
    support: tuple | None = None


@dataclass
class WaitingTimeRecord:
    seed: int
    source: tuple
    c: float
    horizon: float
    measured_T: float
    censored: bool
    r_star_measured: float = float("nan")
    times: np.ndarray = dc_field(default_factory=lambda: np.zeros(0))
    inscribed_radius: np.ndarray = dc_field(default_factory=lambda: np.zeros(0))
    volume: np.ndarray = dc_field(default_factory=lambda: np.zeros(0))
    box_volumes: dict = dc_field(default_factory=dict)
    outer_radius: np.ndarray = dc_field(default_factory=lambda: np.zeros(0))
    perimeter: np.ndarray = dc_field(default_factory=lambda: np.zeros(0))
    time_variation: np.ndarray = dc_field(default_factory=lambda: np.zeros(0))
    h: float = float("nan")
    A: float = 1.0
    M: float = 0.0
    delta: float = 0.0


# -- state construction ------------------------------------------------------

def bump_profile(s):
    """Cosine taper: 1 at s = 0, 1/2 at s = 1/2, 0 for s >= 1."""
    s = np.asarray(s, dtype=float)
    return np.where(s < 1.0, 0.5 * (1.0 + np.cos(np.pi * np.minimum(s, 1.0))), 0.0)


def _support_of(values: np.ndarray) -> tuple | None:
    if not values.any():
        return None
    out = []
    for a in range(values.ndim):
        other = tuple(i for i in range(values.ndim) if i != a)
        idx = np.flatnonzero(values.any(axis=other))
        out.append((int(idx[0]), int(idx[-1])))
    return tuple(out)


def init_point_source(grid: GridSpec, x0, delta: float, t0: float = 0.0, A: float = 1.0,
                      plateau: float = DEFAULT_PLATEAU) -> LevelSetState:
    """Flat-topped bump supported in the ball of radius ``delta`` around ``x0``.

    u0 = 1 within ``plateau * delta`` and tapers to 0 at ``delta`` (cosine
    profile), so the initial 0.5-set has radius (1 + plateau) delta / 2.
    """
    if delta < 2 * grid.h:
        raise ValueError(f"delta = {delta:g} is below 2h = {2 * grid.h:g}")
    if A <= 0:
        raise ValueError("A must be positive")
    if not 0 <= plateau < 1:
        raise ValueError("plateau must lie in [0, 1)")
    x0 = tuple(float(x) for x in x0)
    d = grid.d
    vals = np.zeros((grid.n,) * d)
    # fill only the nodes within delta (with periodic wrap)
    k = int(math.ceil(delta / grid.h)) + 1
    c = grid.nearest_index(x0)
    idx = [np.arange(ci - k, ci + k + 1) for ci in c]
    coords = [grid.lower[a] + idx[a] * grid.h - x0[a] for a in range(d)]
    r2 = sum(np.meshgrid(*[cc ** 2 for cc in coords], indexing="ij"))
    inner = plateau * delta
    s = np.maximum(np.sqrt(r2) - inner, 0.0) / (delta - inner)
    vals[np.ix_(*[i % grid.n for i in idx])] = bump_profile(s)
    return LevelSetState(vals, grid, float(t0), (float(t0), x0), float(A), float(delta),
                         _support_of(vals))


def max_dt(grid: GridSpec, A: float, M: float, cfl_safety: float = DEFAULT_CFL) -> float:
    return cfl_safety * grid.h / (A * math.sqrt(grid.d) + M)


# -- time stepping -----------------------------------------------------------

def _window(support, n):
    """Index arrays (with one ghost layer on each side) of the update window."""
    idx, inner = [], []
    for lo, hi in support:
        lo, hi = lo - 1, hi + 1
        if hi - lo + 1 >= n:
            lo, hi = 0, n - 1
        core = np.arange(lo, hi + 1)
        inner.append(core % n)
        idx.append(np.arange(lo - 1, hi + 2) % n)
    return idx, inner


def _upwind_update(S: np.ndarray, V: np.ndarray, A: float, h: float, dt: float) -> np.ndarray:
    """One Euler step on the interior of padded block ``S``."""
    d = S.ndim
    core = (slice(1, -1),) * d
    U = S[core]
    grad2 = np.zeros_like(U)
    adv = np.zeros_like(U)
    for a in range(d):
        fw = [slice(1, -1)] * d
        bw = [slice(1, -1)] * d
        fw[a] = slice(2, None)
        bw[a] = slice(0, -2)
        dplus = (S[tuple(fw)] - U) / h
        dminus = (U - S[tuple(bw)]) / h
        g = np.maximum(np.maximum(dplus, -dminus), 0.0)
        grad2 += g * g
        adv += V[a] * np.where(V[a] > 0, dminus, dplus)
    return U + dt * (A * np.sqrt(grad2) - adv)


@njit(cache=True)
def _kernel2(S, V, A, h, dt, out):
    n0, n1 = out.shape
    for i in range(n0):
        for j in range(n1):
            u = S[i + 1, j + 1]
            g2 = 0.0
            adv = 0.0
            dp = (S[i + 2, j + 1] - u) / h
            dm = (u - S[i, j + 1]) / h
            g = max(dp, -dm, 0.0)
            g2 += g * g
            v = V[0, i, j]
            adv += v * (dm if v > 0 else dp)
            dp = (S[i + 1, j + 2] - u) / h
            dm = (u - S[i + 1, j]) / h
            g = max(dp, -dm, 0.0)
            g2 += g * g
            v = V[1, i, j]
            adv += v * (dm if v > 0 else dp)
            out[i, j] = u + dt * (A * np.sqrt(g2) - adv)


@njit(cache=True)
def _kernel3(S, V, A, h, dt, out):
    n0, n1, n2 = out.shape
    for i in range(n0):
        for j in range(n1):
            for k in range(n2):
                u = S[i + 1, j + 1, k + 1]
                g2 = 0.0
                adv = 0.0
                dp = (S[i + 2, j + 1, k + 1] - u) / h
                dm = (u - S[i, j + 1, k + 1]) / h
                g = max(dp, -dm, 0.0)
                g2 += g * g
                v = V[0, i, j, k]
                adv += v * (dm if v > 0 else dp)
                dp = (S[i + 1, j + 2, k + 1] - u) / h
                dm = (u - S[i + 1, j, k + 1]) / h
                g = max(dp, -dm, 0.0)
                g2 += g * g
                v = V[1, i, j, k]
                adv += v * (dm if v > 0 else dp)
                dp = (S[i + 1, j + 1, k + 2] - u) / h
                dm = (u - S[i + 1, j + 1, k]) / h
                g = max(dp, -dm, 0.0)
                g2 += g * g
                v = V[2, i, j, k]
                adv += v * (dm if v > 0 else dp)
                out[i, j, k] = u + dt * (A * np.sqrt(g2) - adv)


def _fast_update(S, V, A, h, dt):
    """Compiled version of ``_upwind_update`` for d = 2, 3."""
    S = np.ascontiguousarray(S)
    V = np.ascontiguousarray(V)
    out = np.empty(tuple(n - 2 for n in S.shape))
    if S.ndim == 2:
        _kernel2(S, V, float(A), float(h), float(dt), out)
    elif S.ndim == 3:
        _kernel3(S, V, float(A), float(h), float(dt), out)
    else:
        return _upwind_update(S, V, A, h, dt)
    return out


def step(state: LevelSetState, field: VelocityField, dt: float, cfl_safety: float = DEFAULT_CFL,
         floor: float = DEFAULT_FLOOR, renormalize: bool = True) -> LevelSetState:
    """One forward-Euler step; returns a new state.

    With ``renormalize`` the updated values are divided by their maximum
    whenever it has dropped below 1.  The equation is invariant under
    increasing relabelings of u, and the rescaling undoes the erosion of
    the peak by the diffusive upwind advection, which otherwise leaves the
    interior of the set below 1 and biases the 0.5-level inward (or, for a
    small set in a fast stream, wipes it out).  ``renormalize=False`` gives
    the plain monotone scheme.
    """
    grid = state.grid
    limit = max_dt(grid, state.A, field.amplitude_bound, cfl_safety)
    if dt > limit * (1 + 1e-12):
        raise CFLError(f"dt = {dt:g} exceeds the CFL limit {limit:g}")
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    new = state.copy()
    _advance(new, field, dt, floor, renormalize)
    return new


def _advance(state: LevelSetState, field: VelocityField, dt: float, floor: float,
             renormalize: bool = True) -> None:
    """In-place step used by ``step`` and ``evolve``."""
    if state.support is None or dt == 0:
        state.time += dt
        return
    grid = state.grid
    idx, inner = _window(state.support, grid.n)
    S = state.values[np.ix_(*idx)]
    axes = [grid.axis(a, inner[a]) for a in range(grid.d)]
    V = eval_grid(field, state.time, axes)
    U = _fast_update(S, V, state.A, grid.h, dt)
    if renormalize:
        m = U.max()
        if 0 < m < 1:
            U /= m
    np.clip(U, 0.0, 1.0, out=U)
    U[U < floor] = 0.0
    state.values[np.ix_(*inner)] = U
    # new support, expressed in unwrapped window coordinates
    local = _support_of(U)
    if local is None:
        state.support = None
    else:
        sup = []
        for a, (lo, hi) in enumerate(local):
            start = state.support[a][0] - 1
            if len(inner[a]) >= grid.n:
                start = 0
            sup.append((start + lo, start + hi))
        state.support = tuple(sup)
    state.time += dt


def evolve(state: LevelSetState, field: VelocityField, t_final: float, snapshot_times=(),
           cfl_safety: float = DEFAULT_CFL, floor: float = DEFAULT_FLOOR, callback=None,
           keep: bool = True, check_wrap: bool = True,
           renormalize: bool = True) -> list[LevelSetState]:
    """Step ``state`` to ``t_final`` and return copies at ``snapshot_times``.

    Sub-steps are shortened so each snapshot time is hit exactly.  With no
    snapshot times the final state is returned.  ``callback`` is called
    with the live state at every snapshot; ``keep=False`` skips the copies.
    Raises ``WraparoundError`` when the grid side is below
    4 (A + M)(t_final - t0) + 4 delta.
    """
    if t_final < state.time:
        raise ValueError("t_final must be >= state.time")
    M = field.amplitude_bound
    t0 = state.source[0]
    need = required_side(state.A, M, t_final - t0, state.delta)
    if check_wrap and state.grid.side < need:
        raise WraparoundError(
            f"grid side {state.grid.side:g} < {need:g} needed to reach t = {t_final:g}")
    targets = sorted({float(t) for t in snapshot_times if state.time <= t <= t_final})
    dt_max = max_dt(state.grid, state.A, M, cfl_safety)
    work = state.copy()
    out = []
    for target in targets + [t_final]:
        while work.time < target:
            remaining = target - work.time
            _advance(work, field, remaining if remaining <= dt_max else dt_max, floor, renormalize)
            if abs(target - work.time) <= 1e-12 * max(1.0, abs(target)):
                work.time = target
        if targets and target == targets[0]:
            targets.pop(0)
            if keep:
                out.append(work.copy())
            if callback is not None:
                callback(work)
    if len(snapshot_times) == 0:
        return [work]
    return out


# -- reachable-set measurements ----------------------------------------------

def reachable_indicator(state: LevelSetState, threshold: float = 0.5) -> ReachableSet:
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    ind = np.zeros(state.values.shape, dtype=bool)
    if state.support is not None:
        idx = [np.arange(lo, hi + 1) % state.grid.n for lo, hi in state.support]
        block = np.ix_(*idx)
        ind[block] = state.values[block] >= threshold
    return ReachableSet(ind, state.grid, state.time, state.source, threshold, state.support)


def _window_mask_axes(grid: GridSpec, window):
    """Per-axis boolean masks of nodes in the half-open box [c - s/2, c + s/2)."""
    if window is None:
        return None
    center, side = window
    masks = []
    for a in range(grid.d):
        x = grid.axis(a)
        lo, hi = center[a] - side / 2, center[a] + side / 2
        eps = 1e-9 * grid.h
        masks.append((x >= lo - eps) & (x < hi - eps))
    return masks


def _restrict(rs: ReachableSet, window):
    masks = _window_mask_axes(rs.grid, window)
    if masks is None:
        return rs.indicator
    return rs.indicator[np.ix_(*[np.flatnonzero(m) for m in masks])]


def volume(rs: ReachableSet, window=None) -> float:
    """Lebesgue measure of the set (node count times h^d), optionally inside
    the spatial box ``window = (center, side)``."""
    return float(np.count_nonzero(_restrict(rs, window))) * rs.grid.h ** rs.grid.d


def manhattan_correction(d: int) -> float:
    """Ratio of a sphere's area to its facet-count (Manhattan) area."""
    return unit_ball_volume(d) / (2 * unit_ball_volume(d - 1))


def perimeter_estimate(rs: ReachableSet, window=None, corrected: bool = True) -> float:
    """h^(d-1) times the number of neighbouring node pairs with different
    indicator values (both inside ``window``), optionally scaled by the
    isotropic correction for the facet-count perimeter of a ball."""
    ind = _restrict(rs, window)
    d = ind.ndim
    count = 0
    for a in range(d):
        count += int(np.count_nonzero(np.diff(ind, axis=a)))
    per = count * rs.grid.h ** (d - 1)
    return per * manhattan_correction(d) if corrected else per


def inscribed_ball_radius(rs: ReachableSet, x0) -> float:
    """Largest rho such that every node in the open ball B_rho(x0) is set.

    Returns 0 if the node nearest ``x0`` is unset.  When no unset node
    exists the distance from ``x0`` to the edge of the grid is returned.
    """
    grid = rs.grid
    c = grid.nearest_index(x0)
    if not rs.indicator[c]:
        return 0.0
    n, d = grid.n, grid.d
    support = rs.support if rs.support is not None else tuple((0, n - 1) for _ in range(d))
    idx = []
    for a, (lo, hi) in enumerate(support):
        lo, hi = lo - 1, hi + 1
        # unwrap so that the source lies inside [lo, hi]
        ca = c[a]
        while ca < lo:
            ca += n
        while ca > hi:
            ca -= n
        if hi - lo + 1 >= n:
            lo, hi = ca - n // 2, ca - n // 2 + n - 1
        idx.append(np.arange(lo, hi + 1))
    block = rs.indicator[np.ix_(*[i % n for i in idx])]
    unset = np.argwhere(~block)
    if unset.size == 0:
        return float(min(min(x - lo_, lo_ + grid.side - x) for x, lo_ in zip(x0, grid.lower)))
    coords = np.stack([grid.lower[a] + idx[a][unset[:, a]] * grid.h for a in range(d)], axis=1)
    return float(np.sqrt(np.min(np.sum((coords - np.asarray(x0)) ** 2, axis=1))))


def outer_radius(rs: ReachableSet, x0) -> float:
    """Largest distance from ``x0`` to a set node (the containment check)."""
    grid = rs.grid
    if rs.support is None:
        return 0.0
    idx = [np.arange(lo, hi + 1) for lo, hi in rs.support]
    block = rs.indicator[np.ix_(*[i % grid.n for i in idx])]
    pts = np.argwhere(block)
    if pts.size == 0:
        return 0.0
    coords = np.stack([grid.lower[a] + idx[a][pts[:, a]] * grid.h for a in range(grid.d)], axis=1)
    # periodic minimum image
    diff = (coords - np.asarray(x0) + grid.side / 2) % grid.side - grid.side / 2
    return float(np.sqrt(np.max(np.sum(diff ** 2, axis=1))))


def level_crossings(state: LevelSetState, threshold: float = 0.5) -> np.ndarray:
    """Points where u crosses ``threshold`` along grid edges (linear interpolation)."""
    grid = state.grid
    if state.support is None:
        return np.zeros((0, grid.d))
    idx = [np.arange(lo - 1, hi + 2) for lo, hi in state.support]
    block = state.values[np.ix_(*[i % grid.n for i in idx])]
    pts = []
    for a in range(grid.d):
        lo_sl = [slice(None)] * grid.d
        hi_sl = [slice(None)] * grid.d
        lo_sl[a] = slice(0, -1)
        hi_sl[a] = slice(1, None)
        u0, u1 = block[tuple(lo_sl)], block[tuple(hi_sl)]
        cross = (u0 - threshold) * (u1 - threshold) < 0
        where = np.argwhere(cross)
        if where.size == 0:
            continue
        a0 = u0[cross]
        a1 = u1[cross]
        frac = (threshold - a0) / (a1 - a0)
        coords = np.stack([grid.lower[b] + idx[b][where[:, b]] * grid.h for b in range(grid.d)], axis=1)
        coords[:, a] += frac * grid.h
        pts.append(coords)
    return np.concatenate(pts) if pts else np.zeros((0, grid.d))


# -- waiting time ------------------------------------------------------------

def first_passage(elapsed, radii, c: float, h: float) -> tuple[float, bool]:
    """Smallest sampled elapsed time from which on radii >= c elapsed - 2h.

    Returns ``(T, censored)``; T is nan when the last sample fails.
    """
    elapsed = np.asarray(elapsed, dtype=float)
    ok = np.asarray(radii) >= c * elapsed - 2 * h
    if not ok[-1]:
        return float("nan"), True
    bad = np.flatnonzero(~ok)
    return (float(elapsed[bad[-1] + 1]) if bad.size else 0.0), False


def waiting_time(field: VelocityField, source, c: float, horizon: float, grid: GridSpec,
                 delta: float | None = None, A: float = 1.0, n_samples: int = 128,
                 threshold: float = 0.5, box_sides=(), seed: int | None = None,
                 cfl_safety: float = DEFAULT_CFL, r_star_measured: float = float("nan"),
                 track_perimeter: bool = False, renormalize: bool = True) -> WaitingTimeRecord:
    """Measure the waiting time after which B_{c (t - t0)}(x0) stays inside R_t.

    The evolution is sampled at ``n_samples`` equally spaced times in
    (t0, t0 + horizon].  The result is the smallest sampled elapsed time
    t* such that the inscribed radius is at least c (t - t0) - 2h at every
    sample from t* on; if the last sample fails the record is censored.
    """
    if not 0 < c < A:
        raise ValueError("need 0 < c < A")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    t0, x0 = source
    x0 = tuple(float(x) for x in x0)
    h = grid.h
    if delta is None:
        delta = DEFAULT_DELTA_CELLS * h
    state = init_point_source(grid, x0, delta, t0, A)
    times = t0 + horizon * np.arange(0, n_samples + 1) / n_samples
    radii, vols, outer, pers, tv = [], [], [], [], []
    boxes = {float(s): [] for s in box_sides}
    prev = [None]

    def measure(st):
        rs = reachable_indicator(st, threshold)
        radii.append(inscribed_ball_radius(rs, x0))
        vols.append(volume(rs))
        outer.append(outer_radius(rs, x0))
        for s in boxes:
            boxes[s].append(volume(rs, (x0, s)))
        if track_perimeter:
            pers.append(perimeter_estimate(rs))
            if prev[0] is None:
                tv.append(0.0)
            else:
                tv.append(float(np.count_nonzero(rs.indicator ^ prev[0])) * h ** grid.d)
            prev[0] = rs.indicator

    measure(state)
    evolve(state, field, t0 + horizon, snapshot_times=times[1:], cfl_safety=cfl_safety,
           callback=measure, keep=False, renormalize=renormalize)
    radii = np.array(radii)
    T, censored = first_passage(times - t0, radii, c, h)
    return WaitingTimeRecord(
        seed=-1 if seed is None else int(seed), source=(float(t0), x0), c=float(c),
        horizon=float(horizon), measured_T=T, censored=censored,
        r_star_measured=float(r_star_measured), times=times, inscribed_radius=radii,
        volume=np.array(vols), box_volumes={s: np.array(v) for s, v in boxes.items()},
        outer_radius=np.array(outer), perimeter=np.array(pers), time_variation=np.array(tv),
        h=h, A=float(A), M=field.amplitude_bound, delta=float(delta),
    )


# -- brute-force oracle ------------------------------------------------------

def control_set(n_controls: int, d: int, A: float) -> np.ndarray:
    """``n_controls`` points on the sphere of radius A plus the zero control."""
    if d == 2:
        ang = 2 * np.pi * np.arange(n_controls) / n_controls
        pts = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    else:
        i = np.arange(n_controls) + 0.5
        z = 1 - 2 * i / n_controls
        phi = np.pi * (1 + 5 ** 0.5) * i
        rho = np.sqrt(1 - z * z)
        pts = np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)
    return np.vstack([A * pts, np.zeros((1, d))])


def trajectory_oracle(field: VelocityField, source, t: float, n_controls: int, n_substeps: int,
                      grid: GridSpec, A: float = 1.0) -> ReachableSet:
    """Particle approximation of R_t(t0, x0) from controlled trajectories.

    Particles are pushed along dX = (V(s, X) + alpha) ds for every control
    alpha by one midpoint step per sub-step, then thinned to one particle
    per bin of ``ORACLE_THIN`` cells.  Positions stay continuous; only the
    final cloud is rasterized onto ``grid`` (nearest node).
    """
    if grid.n > ORACLE_CAP:
        raise ValueError(f"oracle grids are capped at {ORACLE_CAP} nodes per axis")
    t0, x0 = source
    d = grid.d
    pts = np.asarray(x0, dtype=float).reshape(1, d)
    ctrl = control_set(n_controls, d, A)
    lower = np.asarray(grid.lower)
    ds = (t - t0) / n_substeps
    for k in range(n_substeps):
        s = t0 + k * ds
        v0 = eval_field(field, s, pts)
        mid = pts[:, None, :] + 0.5 * ds * (v0[:, None, :] + ctrl[None])
        v1 = eval_field(field, s + 0.5 * ds, mid)
        pts = (pts[:, None, :] + ds * (v1 + ctrl[None])).reshape(-1, d)
        bins = np.floor((pts - lower) / (ORACLE_THIN * grid.h)).astype(np.int64)
        _, keep = np.unique(bins, axis=0, return_index=True)
        pts = pts[np.sort(keep)]
    occ = np.zeros((grid.n,) * d, dtype=bool)
    idx = np.rint((pts - lower) / grid.h).astype(int)
    inside = np.all((idx >= 0) & (idx < grid.n), axis=1)
    occ[tuple(idx[inside].T)] = True
    return ReachableSet(occ, grid, float(t), (float(t0), tuple(x0)), 0.5, _support_of(occ))
