"""Monte Carlo ensembles of waiting times and their analysis.

An ensemble draws one field per seed, measures r*_{N,eps} and the waiting
time at each source, and writes one CSV row per (seed, source, c).  The
analysis side correlates T with r_star, checks the volume curves against
the comparison profile phi, and fits stretched-exponential tails.
"""

from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field as dc_field, replace
from pathlib import Path

import numpy as np
from scipy import stats as sps

from . import field as fieldmod
from . import frontier, stats, theory
from .store import ConfigError, write_waiting_time_csv

CSV_NAME = "waiting_times.csv"
GOLDEN = (1 + 5 ** 0.5) / 2
EXACT_BALL_H = 1 / 64


# -- configuration -----------------------------------------------------------

@dataclass
class ExperimentConfig:
    """Everything needed to reproduce an ensemble bit for bit.

    ``sources`` holds explicit (t0, x0) pairs; when it is empty,
    ``n_sources`` sources are generated by ``spaced_sources``.  ``n`` is
    the number of grid nodes per axis of each per-source grid; 0 picks the
    smallest even size that satisfies the no-wraparound rule.
    """

    field: dict
    h: float = 1 / 16
    n: int = 0
    sources: list = dc_field(default_factory=list)
    n_sources: int = 1
    c_values: tuple = (0.2,)
    epsilon: float = 0.5
    N: int = 4
    r_min: float = 0.25
    r_max: float = 8.0
    n_r: int | None = None
    q: int = stats.DEFAULT_Q
    horizon: float = 8.0
    n_samples: int = 128
    seeds: tuple = (0,)
    out_dir: str = "gcoerce-out"
    A: float = 1.0
    delta_cells: float = frontier.DEFAULT_DELTA_CELLS
    cfl_safety: float = frontier.DEFAULT_CFL
    box_sides: tuple = ()
    track_perimeter: bool = False
    workers: int = 1

    def __post_init__(self):
        self.c_values = tuple(float(c) for c in np.atleast_1d(self.c_values))
        self.seeds = tuple(int(s) for s in self.seeds)
        self.box_sides = tuple(float(s) for s in self.box_sides)
        self.sources = [(float(t0), tuple(float(x) for x in x0)) for t0, x0 in self.sources]
        self.validate()

    @property
    def M(self) -> float:
        kind = self.field.get("kind", "random_fourier")
        if kind == "zero":
            return 0.0
        if kind == "constant":
            return float(np.linalg.norm(self.field["value"]))
        return float(self.field["M"])

    @property
    def d(self) -> int:
        if self.field.get("kind") == "constant":
            return len(self.field["value"])
        return int(self.field.get("d", 2))

    @property
    def delta(self) -> float:
        return self.delta_cells * self.h

    @property
    def period(self) -> float:
        return float(self.field.get("period", self.field.get("cell_size", 1.0)))

    def grid_size(self) -> int:
        need = frontier.required_side(self.A, self.M, self.horizon, self.delta)
        if self.n:
            return self.n
        n = int(math.ceil(need / self.h - 1e-9)) + 2
        return n + (n % 2)

    def validate(self) -> None:
        if not self.h > 0:
            raise ConfigError("h must be positive")
        if not self.horizon > 0:
            raise ConfigError("horizon must be positive")
        if not self.c_values or not all(0 < c < self.A for c in self.c_values):
            raise ConfigError("every c must satisfy 0 < c < A")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.n_samples < 1:
            raise ConfigError("n_samples must be >= 1")
        if self.delta_cells < 2:
            raise ConfigError("delta_cells must be >= 2")
        if not 0 < self.r_min < self.r_max:
            raise ConfigError("need 0 < r_min < r_max")
        if self.N < 1 or not self.epsilon > 0:
            raise ConfigError("need N >= 1 and epsilon > 0")
        if not self.sources and self.n_sources < 1:
            raise ConfigError("no sources given")
        if self.n:
            need = frontier.required_side(self.A, self.M, self.horizon, self.delta)
            if self.n * self.h < need:
                raise ConfigError(
                    f"grid side {self.n * self.h:g} < {need:g} required for horizon {self.horizon:g}")

    def source_list(self) -> list:
        if self.sources:
            return list(self.sources)
        return spaced_sources(self.n_sources, self.d, self.A, self.M, self.horizon, self.period)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["sources"] = [[t0, list(x0)] for t0, x0 in self.source_list()]
        return out

    @classmethod
    def from_dict(cls, cfg: dict) -> "ExperimentConfig":
        """Build from the nested TOML layout (see README)."""
        known = {"field", "grid", "sources", "waiting_time", "stats", "run"}
        extra = set(cfg) - known - {"verify"}
        if extra:
            raise ConfigError(f"unknown config sections: {sorted(extra)}")
        if "field" not in cfg:
            raise ConfigError("config needs a [field] section")
        grid = cfg.get("grid", {})
        src = cfg.get("sources", {})
        wt = cfg.get("waiting_time", {})
        st = cfg.get("stats", {})
        run = cfg.get("run", {})
        if "seeds" in run:
            seeds = run["seeds"]
        else:
            start = int(run.get("seed_start", 0))
            seeds = range(start, start + int(run.get("n_seeds", 1)))
        points = [(p[0], p[1:]) for p in src.get("points", [])]
        c = wt.get("c", 0.2)
        try:
            return cls(
                field=dict(cfg["field"]),
                h=float(grid.get("h", 1 / 16)), n=int(grid.get("n", 0)),
                sources=points, n_sources=int(src.get("n", 1)),
                c_values=tuple(np.atleast_1d(c)),
                epsilon=float(st.get("epsilon", 0.5)), N=int(st.get("N", 4)),
                r_min=float(st.get("r_min", 0.25)), r_max=float(st.get("r_max", 8.0)),
                n_r=st.get("n_r"), q=int(st.get("q", stats.DEFAULT_Q)),
                horizon=float(wt.get("horizon", 8.0)), n_samples=int(wt.get("n_samples", 128)),
                delta_cells=float(wt.get("delta_cells", frontier.DEFAULT_DELTA_CELLS)),
                cfl_safety=float(grid.get("cfl_safety", frontier.DEFAULT_CFL)),
                box_sides=tuple(wt.get("box_sides", ())),
                track_perimeter=bool(wt.get("track_perimeter", False)),
                A=float(wt.get("A", 1.0)),
                seeds=tuple(seeds), out_dir=str(run.get("out_dir", "gcoerce-out")),
                workers=int(run.get("workers", 1)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad config value: {exc}") from exc


def spaced_sources(n: int, d: int, A: float, M: float, horizon: float, period: float = 1.0) -> list:
    """``n`` sources at t0 = 0 spaced at least 2 (A + M) horizon apart.

    Sources sit on a line along the first axis at multiples of the period,
    plus offsets inside one period from the Kronecker sequence
    k (1/g, 1/g^2, ...) mod 1 (g the golden ratio), so that a periodic
    field is sampled at well spread positions within its cell.
    """
    spacing = period * math.ceil(2 * (A + M) * horizon / period + 1)
    alpha = np.array([GOLDEN ** -(i + 1) for i in range(d)])
    out = []
    for k in range(n):
        x = period * ((k * alpha + 0.5) % 1.0)
        x[0] += k * spacing
        out.append((0.0, tuple(float(v) for v in x)))
    return out


# -- ensemble ----------------------------------------------------------------

def _run_seed(config: ExperimentConfig, seed: int) -> list:
    fld = fieldmod.from_config(config.field, seed)
    n = config.grid_size()
    records = []
    for t0, x0 in config.source_list():
        rs = stats.r_star(fld, (t0, x0), config.N, config.epsilon, config.r_min, config.r_max,
                          n_r=config.n_r, q=config.q)
        grid = frontier.GridSpec.centered(x0, n, config.h)
        rec = frontier.waiting_time(
            fld, (t0, x0), config.c_values[0], config.horizon, grid, delta=config.delta,
            A=config.A, n_samples=config.n_samples, box_sides=config.box_sides, seed=seed,
            cfl_safety=config.cfl_safety, r_star_measured=rs.r_star,
            track_perimeter=config.track_perimeter)
        for c in config.c_values:
            T, cens = frontier.first_passage(rec.times - t0, rec.inscribed_radius, c, config.h)
            records.append(replace(rec, c=c, measured_T=T, censored=cens))
    return records


def run_waiting_time_ensemble(config: ExperimentConfig, write: bool = True,
                              progress=None) -> list:
    """Run every (seed, source) pair and return the records in seed order.

    With ``write`` the records go to ``<out_dir>/waiting_times.csv``.
    ``progress`` is called as ``progress(seed, records_for_seed)``.
    """
    seeds = list(config.seeds)
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            per_seed = list(pool.map(_run_seed, [config] * len(seeds), seeds))
    else:
        per_seed = []
        for s in seeds:
            per_seed.append(_run_seed(config, s))
            if progress is not None:
                progress(s, per_seed[-1])
    records = [r for recs in per_seed for r in recs]
    if write:
        out = Path(config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_waiting_time_csv(out / CSV_NAME, records)
    return records


def supremal_c(records) -> dict:
    """For each c of a sweep, the uncensored fraction; and the largest c at
    which every record is uncensored (nan if none)."""
    by_c = {}
    for r in records:
        by_c.setdefault(float(r.c), []).append(not r.censored)
    frac = {c: float(np.mean(v)) for c, v in sorted(by_c.items())}
    ok = [c for c, f in frac.items() if f == 1.0]
    return {"uncensored_fraction": frac, "c_sup": max(ok) if ok else float("nan")}


# -- correlation -------------------------------------------------------------

@dataclass
class CorrelationReport:
    n: int
    n_censored: int
    spearman: float
    slope: float
    p_value: float
    n_permutations: int

    def to_dict(self) -> dict:
        return asdict(self)


def _pairs(records):
    T, R, cens = [], [], []
    for r in records:
        if isinstance(r, dict):
            T.append(r["T"]), R.append(r["r_star"]), cens.append(bool(r["censored"]))
        else:
            T.append(r.measured_T), R.append(r.r_star_measured), cens.append(bool(r.censored))
    return np.array(T, float), np.array(R, float), np.array(cens, bool)


def _spearman(x, y) -> float:
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return 0.0
    return float(sps.spearmanr(x, y)[0])


def correlate_T_rstar(records, n_permutations: int = 9999, seed: int = 0,
                      min_samples: int = 10) -> CorrelationReport:
    """Spearman correlation of T with r_star over the uncensored records,
    the least-squares slope of T = C r_star through the origin, and a
    one-sided permutation p-value for a positive correlation."""
    T, R, cens = _pairs(records)
    keep = ~cens & np.isfinite(T) & np.isfinite(R)
    if keep.sum() < min_samples:
        raise ValueError(f"need at least {min_samples} uncensored records, got {int(keep.sum())}")
    T, R = T[keep], R[keep]
    rho = _spearman(T, R)
    denom = float(R @ R)
    slope = float(T @ R) / denom if denom > 0 else float("nan")
    if rho == 0.0 and (np.ptp(T) == 0 or np.ptp(R) == 0):
        p = 1.0
    else:
        # scipy's count of all possible pairings overflows for large n;
        # it only decides between exact and sampled permutations
        with warnings.catch_warnings():
            warnings.filterwarnings("ignore", "overflow encountered", RuntimeWarning)
            res = sps.permutation_test(
                (T, R), lambda a, b: sps.spearmanr(a, b)[0], permutation_type="pairings",
                n_resamples=n_permutations, alternative="greater", random_state=seed)
        p = float(res.pvalue)
    return CorrelationReport(int(keep.sum()), int(cens.sum()), rho, slope, p, n_permutations)


# -- phi domination ----------------------------------------------------------

@dataclass
class PhiDominationReport:
    r: float
    t1: float
    t2: float
    status: str
    min_slack: float
    violation_time: float
    dominated: bool
    t2_minus_t1: float
    t2_bound: float
    t2_bound_ok: bool
    lambda1: float

    @property
    def passed(self) -> bool:
        return self.status == "ok" and self.dominated and self.t2_bound_ok

    def to_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        return out


def phi_domination_check(curve, r: float, params: theory.TheoremParams, t0: float | None = None,
                         tol: float = 1e-12) -> PhiDominationReport:
    """Compare |Box_r ∩ R_t| / r^d with phi((t - t1) / r) on [t1, t2].

    ``curve`` is a WaitingTimeRecord with a box-volume curve for side ``r``
    or a pair (times, volumes).  t1 is the first sample with volume
    >= alpha r^d and t2 the first with volume >= (1 - 2^-d alpha) r^d.
    """
    if hasattr(curve, "box_volumes"):
        key = min(curve.box_volumes, key=lambda s: abs(s - r), default=None)
        if key is None or not math.isclose(key, r, rel_tol=1e-9):
            raise ValueError(f"record has no box-volume curve for side {r:g}")
        times, vols = np.asarray(curve.times), np.asarray(curve.box_volumes[key])
    else:
        times, vols = (np.asarray(v, dtype=float) for v in curve)
    d = params.d
    rd = r ** d
    nan = float("nan")
    bound = 2 * d / params.lambda1 * r
    hit1 = np.flatnonzero(vols >= params.alpha * rd)
    if hit1.size == 0:
        return PhiDominationReport(r, nan, nan, "t1 not reached", nan, nan, False, nan, bound,
                                   False, params.lambda1)
    i1 = hit1[0]
    t1 = float(times[i1])
    hit2 = np.flatnonzero(vols[i1:] >= (1 - 2.0 ** -d * params.alpha) * rd)
    if hit2.size == 0:
        return PhiDominationReport(r, t1, nan, "t2 not reached", nan, nan, False, nan, bound,
                                   False, params.lambda1)
    i2 = i1 + hit2[0]
    t2 = float(times[i2])
    seg = slice(i1, i2 + 1)
    slack = vols[seg] / rd - theory.phi((times[seg] - t1) / r, params)
    j = int(np.argmin(slack))
    dominated = bool(slack[j] >= -tol)
    return PhiDominationReport(
        r, t1, t2, "ok", float(slack[j]), nan if dominated else float(times[seg][j]), dominated,
        t2 - t1, bound, bool(t2 - t1 <= bound), params.lambda1)


# -- tails -------------------------------------------------------------------

@dataclass
class TailCurve:
    t_grid: np.ndarray
    survival: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    survival_upper: np.ndarray
    n_samples: int
    n_censored: int
    exponent: float = float("nan")
    length_scale: float = float("nan")
    fit_flag: str | None = None
    n_fit_points: int = 0

    @property
    def rate(self) -> float:
        """c in exp(-c t^beta'), i.e. length_scale^-exponent."""
        return self.length_scale ** -self.exponent

    def to_dict(self) -> dict:
        out = asdict(self)
        out["rate"] = self.rate
        return out


def _tail_inputs(records):
    if isinstance(records, tuple) and len(records) == 2:
        T, cens = (np.asarray(v) for v in records)
        return T.astype(float), cens.astype(bool)
    T, cens = [], []
    for r in records:
        if isinstance(r, dict):
            c, t, hz = bool(r["censored"]), r["T"], r["horizon"]
        else:
            c, t, hz = bool(r.censored), r.measured_T, r.horizon
        # a censored record only tells us T >= horizon
        T.append(hz if c else t)
        cens.append(c)
    return np.array(T, float), np.array(cens, bool)


def wilson_interval(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    ci = sps.binomtest(int(k), int(n)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


def tail_curve(records, t_grid, min_fit: int = 30, min_distinct: int = 5,
               level: float = 0.95) -> TailCurve:
    """Empirical P(T >= t) on ``t_grid`` with Wilson intervals, and a fit of
    exp(-(t/l)^beta') by weighted least squares of log(-log S) against log t.

    ``records`` are WaitingTimeRecords, CSV row dicts, or a pair of arrays
    (T, censored) where censored entries hold their lower bound.  Censored
    records count as T = horizon in ``survival`` (a lower bound) and as
    T = infinity in ``survival_upper``; the fit uses uncensored values only,
    at midpoint plotting positions S = (#{T > t} + #{T = t}/2) / n, each
    point weighted by the inverse of its delta-method variance.
    """
    T, cens = _tail_inputs(records)
    n = len(T)
    if n < 1:
        raise ValueError("need at least one record")
    t_grid = np.asarray(t_grid, dtype=float)
    k = np.array([np.count_nonzero(T >= t) for t in t_grid])
    k_up = np.array([np.count_nonzero((T >= t) | cens) for t in t_grid])
    lo, hi = np.array([wilson_interval(ki, n, level) for ki in k]).T
    curve = TailCurve(t_grid, k / n, lo, hi, k_up / n, n, int(cens.sum()))
    obs = np.sort(T[~cens])
    distinct = np.unique(obs)
    if n < min_fit:
        curve.fit_flag = f"fewer than {min_fit} records"
        return curve
    if distinct.size < min_distinct:
        curve.fit_flag = f"fewer than {min_distinct} distinct uncensored values"
        return curve
    ts = distinct[distinct > 0]
    S = np.array([(np.count_nonzero(T > t) + 0.5 * np.count_nonzero(T == t)) / n for t in ts])
    ok = (S > 0) & (S < 1)
    if ok.sum() < 3:
        curve.fit_flag = "too few points with 0 < S < 1"
        return curve
    S = S[ok]
    x, y = np.log(ts[ok]), np.log(-np.log(S))
    # inverse-variance weights: var log(-log S_hat) ~ (1 - S) / (n S log(S)^2)
    w = np.sqrt(S * np.log(S) ** 2 / (1 - S))
    slope, icpt = np.polyfit(x, y, 1, w=w)
    curve.exponent = float(slope)
    curve.length_scale = float(np.exp(-icpt / slope)) if slope != 0 else float("nan")
    curve.n_fit_points = int(ok.sum())
    return curve


# -- verification suite ------------------------------------------------------

def _check(name, passed, value=None, limit=None, **detail) -> dict:
    return {"name": name, "passed": bool(passed), "value": value, "limit": limit, "detail": detail}


def verify_suite(config: ExperimentConfig, horizon: float | None = None,
                 oracle: bool = True) -> dict:
    """Run the invariant checks of every module on the configured field.

    The evolution checks use one short run (``horizon``, default
    min(config.horizon, 1)) from the first source of the first seed.
    Returns a JSON-ready dict with a ``passed`` flag and one entry per check.
    """
    t_start = time.perf_counter()
    checks = []
    seed = config.seeds[0]
    fld = fieldmod.from_config(config.field, seed)
    M, d, A, h = fld.amplitude_bound, fld.spatial_dim, config.A, config.h

    # scheme monotonicity needs dt sqrt(d) (A + M) <= h
    dt = frontier.max_dt(frontier.GridSpec(4, h, (0.0,) * d), A, M, config.cfl_safety)
    courant = dt * math.sqrt(d) * (A + M) / h
    checks.append(_check("cfl_monotonicity", courant <= 1.0, courant, 1.0,
                         cfl_safety=config.cfl_safety))
    if courant > 1.0:
        return _finish(checks, t_start)

    # divergence: analytic and central differences
    box = stats.SpaceTimeBox(0.0, (0.0,) * d, config.period)
    fd = fieldmod.verify_divergence_free(fld, box, 1e-4)
    fd_lim = 1e-5 * max(M, 1.0) * (2 * np.pi / min(fld.min_wavelength, 1e6)) ** 3 if fld.n_modes else 1e-12
    checks.append(_check("divergence_fd", fd <= max(fd_lim, 1e-10), fd, fd_lim))
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, config.period, size=(256, d))
    an = float(np.max(np.abs(fieldmod.divergence(fld, rng.uniform(0, 10, 256), pts))))
    an_lim = 1e-10 * max(M, 1.0) * (2 * np.pi / min(fld.min_wavelength, 1e6))
    checks.append(_check("divergence_analytic", an <= an_lim, an, an_lim))

    # divergence theorem on closed boxes
    worst = 0.0
    for side in (0.3, 0.77, 1.0):
        for t in (0.0, 0.5):
            fl = abs(stats.closed_box_flux(fld, t, rng.uniform(-1, 1, d), side, q=64))
            worst = max(worst, fl / (max(M, 1e-300) * 2 * d * side ** (d - 1)) if M else fl)
    checks.append(_check("divergence_theorem_flux", worst <= 1e-8, worst, 1e-8))

    # E_N / r_star sanity
    t0, x0 = config.source_list()[0]
    ctr = (t0, x0)
    b = stats.box_average(fld, stats.SpaceTimeBox(t0, x0, 1.3), q=config.q)
    e1 = stats.empirical_E_N(fld, ctr, 1.3, 1, q=config.q)
    rs = stats.r_star(fld, ctr, config.N, config.epsilon, config.r_min, config.r_max,
                      n_r=config.n_r, q=config.q)
    ok = (abs(e1 - float(np.linalg.norm(b))) <= 1e-12 * max(1.0, M)
          and np.all(np.isfinite(rs.E_N_values)) and np.all(rs.E_N_values >= 0)
          and 0 <= rs.r_star <= config.r_max
          and np.all(rs.E_N_values <= M * (1 + 1e-9) + 1e-12))
    checks.append(_check("E_N_r_star_sanity", ok, rs.r_star, config.r_max,
                         E_N_max=float(rs.E_N_values.max()), censored=rs.censored))

    # exact solution: zero field ball, at a fixed resolution fine enough
    # for the 5% volume tolerance
    hz, h0 = 0.5 / A, min(h, EXACT_BALL_H)
    n0 = int(math.ceil(frontier.required_side(A, 0.0, hz, 2 * h0) / h0)) + 2
    g0 = frontier.GridSpec.centered((0.0,) * d, n0, h0)
    s0 = frontier.evolve(frontier.init_point_source(g0, (0.0,) * d, 2 * h0, A=A),
                         fieldmod.make_zero(d), hz, cfl_safety=config.cfl_safety)[-1]
    r0 = frontier.reachable_indicator(s0)
    ball = theory.unit_ball_volume(d) * (A * hz) ** d
    vr = frontier.volume(r0) / ball
    rho = frontier.inscribed_ball_radius(r0, (0.0,) * d)
    checks.append(_check("exact_ball_volume", abs(vr - 1) <= 0.05, vr, [0.95, 1.05]))
    checks.append(_check("exact_ball_inscribed", abs(rho - A * hz) <= 2 * h0, rho - A * hz, 2 * h0))

    # oracle agreement on a cellular flow
    if oracle and d == 2:
        sd = oracle_agreement(fieldmod.make_cellular(2.0, 1.0), t=0.3, n=128, h=1 / 32)
        checks.append(_check("oracle_agreement", sd <= 0.10, sd, 0.10))

    # evolution inequalities on the configured field
    hz = min(config.horizon, 1.0) if horizon is None else horizon
    n = int(math.ceil(frontier.required_side(A, M, hz, config.delta) / h)) + 2
    grid = frontier.GridSpec.centered(x0, n, h)
    r_box = 0.5 * config.period
    rec = frontier.waiting_time(fld, ctr, config.c_values[0], hz, grid, delta=config.delta, A=A,
                                n_samples=max(config.n_samples, 32), box_sides=(r_box,),
                                cfl_safety=config.cfl_safety, track_perimeter=True)
    ev = evolution_checks(rec, r_box)
    for name, (ok, val, lim) in ev.items():
        checks.append(_check(name, ok, val, lim))

    # phi closed form
    params = theory.theorem_parameters(max(M, 1.0), d=d, C=2.0, strict=False)
    b_ = params.b
    exact = (theory.phi(0.0, params) == 0.0 and theory.phi(b_, params) == 0.5
             and theory.phi(2 * b_, params) == 1.0)
    res = max(theory.phi_ode_residual(t, params) for t in np.linspace(0.05, 1.95, 39) * b_
              if abs(t - b_) > 1e-3 * b_)
    checks.append(_check("phi_closed_form", exact and res <= 1e-6, res, 1e-6))
    return _finish(checks, t_start)


def _finish(checks, t_start) -> dict:
    return {"passed": all(c["passed"] for c in checks), "checks": checks,
            "elapsed_s": time.perf_counter() - t_start}


def oracle_agreement(fld, t: float, n: int = 128, h: float = 1 / 32, n_controls: int = 32,
                     n_substeps: int | None = None, x0=None) -> float:
    """Symmetric difference / union between the trajectory oracle and the
    level-set reachable set on the same small grid."""
    d = fld.spatial_dim
    x0 = (0.0,) * d if x0 is None else tuple(x0)
    grid = frontier.GridSpec.centered(x0, n, h)
    state = frontier.init_point_source(grid, x0, 2 * h)
    ls = frontier.reachable_indicator(frontier.evolve(state, fld, t)[-1])
    if n_substeps is None:
        n_substeps = max(4, int(math.ceil(t / h)))
    orc = frontier.trajectory_oracle(fld, (0.0, x0), t, n_controls, n_substeps, grid)
    union = np.count_nonzero(ls.indicator | orc.indicator)
    return float(np.count_nonzero(ls.indicator ^ orc.indicator)) / max(union, 1)


def evolution_checks(rec, r_box: float) -> dict:
    """Volume growth, containment, lower continuity and perimeter bound on
    one waiting-time record.  Returns {name: (passed, value, limit)}."""
    out = {}
    t0 = rec.source[0]
    d = len(rec.source[1])
    A, M, h = rec.A, rec.M, rec.h
    el = rec.times - t0
    grow = A * el >= 20 * h
    ratio = rec.volume[grow] / (theory.unit_ball_volume(d) * (A * el[grow]) ** d)
    vmin = float(ratio.min()) if ratio.size else float("nan")
    out["volume_growth"] = (bool(ratio.size == 0 or vmin >= 0.9), vmin, 0.9)
    excess = rec.outer_radius - ((A + M) * el + rec.delta + 2 * h)
    out["containment"] = (bool(np.all(excess <= 0)), float(excess.max()), 0.0)
    if r_box in rec.box_volumes:
        v = rec.box_volumes[r_box]
        rate = np.diff(v) / np.diff(rec.times)
        floor = -4 * d * M * r_box ** (d - 1)
        out["lower_continuity"] = (bool(np.all(rate >= floor)), float(rate.min()), floor)
    if rec.perimeter.size:
        dt = np.diff(rec.times)
        per = float(np.sum(0.5 * (rec.perimeter[1:] + rec.perimeter[:-1]) * dt))
        tv = float(np.sum(rec.time_variation))
        tau = el[-1]
        bound = 2 * 4 * (1 + M) ** d * (2 + M) * tau ** d
        out["perimeter_bound"] = (per + tv <= bound, per + tv, bound)
    return out
