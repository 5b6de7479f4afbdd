"""Closed-form objects: the comparison profile phi, the parameter map of the
waiting-time theorem, and the stretched-exponential tail exponent."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gamma as gamma_fn


def unit_ball_volume(d: int) -> float:
    """omega_d, the volume of the unit ball in R^d."""
    return math.pi ** (d / 2) / gamma_fn(d / 2 + 1)


def relative_isoperimetric_constant(d: int = 2) -> float:
    """Conservative lambda_1 for the unit cube in d = 2.

    Minimizes perimeter / min(v, 1 - v)^((d-1)/d) over two candidate
    families: flat cuts parallel to a face (perimeter 1) and quarter discs
    in a corner (perimeter sqrt(pi v)).  The minimum is sqrt(2), attained
    by the half-square cut.
    """
    if d != 2:
        raise NotImplementedError("a default lambda_1 is only provided for d = 2")

    def ratio(v):
        return min(1.0, math.sqrt(math.pi * v)) / math.sqrt(v)

    res = minimize_scalar(ratio, bounds=(1e-6, 0.5), method="bounded",
                          options={"xatol": 1e-12})
    return float(min(res.fun, ratio(0.5)))


@dataclass(frozen=True)
class TheoremParams:
    M: float
    d: int
    lambda1: float
    C_theorem: float
    c_small: float
    epsilon: float
    N: int
    L: int
    alpha: float
    beta: float
    gamma: float
    N_lemma: int
    consistency_LN_le_beta: bool
    LN_ratio: float
    admissible: bool = True

    def t1_offset(self, r: float) -> float:
        """Time r/(2M) after which the box has a fraction alpha filled."""
        return r / (2 * self.M)

    @property
    def a(self) -> float:
        return (self.lambda1 / (2 * self.d)) ** self.d

    @property
    def b(self) -> float:
        # a b^d = 1/2 makes the two branches meet at 1/2
        return (1.0 / (2 * self.a)) ** (1.0 / self.d)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(a=self.a, b=self.b, schema_version=1)
        return out


def theorem_parameters(M: float, d: int = 2, C: float = 2.0, c: float = 1.0,
                       lambda1: float | None = None, strict: bool = True) -> TheoremParams:
    """Derived constants for bound M, dimension d and the unspecified
    universal constants ``C`` (large) and ``c`` (small).

    epsilon = M^-(d-1)/C, N = ceil(C M^(5d+2)), L = ceil(M/epsilon),
    alpha = omega_d/(2M)^d, beta = c M^-(d+1), gamma = 1 + 2d/lambda_1,
    and the alternative N = ceil(beta^-2 eps^-3 M^3).

    With ``strict=False`` a failure of 1 <= L < N is reported through
    ``admissible`` instead of raising.
    """
    if M < 0.5:
        raise ValueError("M must be >= 1/2")
    if C <= 0 or c <= 0:
        raise ValueError("C and c must be positive")
    if lambda1 is None:
        lambda1 = relative_isoperimetric_constant(d)
    if lambda1 <= 0:
        raise ValueError("lambda1 must be positive")
    eps = M ** (-(d - 1)) / C
    if not 0 < eps < 1:
        raise ValueError(f"epsilon = {eps:g} must lie in (0, 1); increase C")
    N = math.ceil(C * M ** (5 * d + 2))
    L = math.ceil(M / eps)
    admissible = 1 <= L < N
    if strict and not admissible:
        raise ValueError(f"need 1 <= L < N, got L = {L}, N = {N}")
    alpha = unit_ball_volume(d) / (2 * M) ** d
    beta = c * M ** (-(d + 1))
    N_lemma = math.ceil(beta ** -2 * eps ** -3 * M ** 3)
    ratio = L / N
    return TheoremParams(
        M=float(M), d=int(d), lambda1=float(lambda1), C_theorem=float(C), c_small=float(c),
        epsilon=eps, N=N, L=L, alpha=alpha, beta=beta, gamma=1 + 2 * d / lambda1,
        N_lemma=N_lemma, consistency_LN_le_beta=bool(ratio <= beta), LN_ratio=ratio,
        admissible=bool(admissible),
    )


def phi(t, params: TheoremParams):
    """Comparison profile: a t^d on [0, b], 1 - a (2b - t)^d on [b, 2b],
    clamped to 0 and 1 outside."""
    b, d = params.b, params.d
    t = np.clip(np.asarray(t, dtype=float), 0.0, 2 * b)
    # a t^d written as (t/b)^d / 2 so that phi(b) = 1/2 holds without rounding
    out = np.where(t <= b, 0.5 * (t / b) ** d, 1.0 - 0.5 * ((2 * b - t) / b) ** d)
    return out if out.ndim else float(out)


def phi_rhs(y, params: TheoremParams):
    """Right side of the comparison ODE: lambda_1/2 min(y, 1-y)^((d-1)/d)."""
    d = params.d
    return 0.5 * params.lambda1 * np.minimum(y, 1 - y) ** ((d - 1) / d)


def phi_ode_residual(t: float, params: TheoremParams, fd_step: float = 1e-5) -> float:
    """|centered difference of phi - phi_rhs(phi)| at t."""
    b = params.b
    if min(abs(t), abs(t - b), abs(t - 2 * b)) < 2 * fd_step or not 0 < t < 2 * b:
        raise ValueError("t must stay 2*fd_step away from 0, b and 2b")
    deriv = (phi(t + fd_step, params) - phi(t - fd_step, params)) / (2 * fd_step)
    return float(abs(deriv - phi_rhs(phi(t, params), params)))


def phi_derivative_bound(params: TheoremParams) -> float:
    return params.d * params.a * params.b ** (params.d - 1)


def predicted_waiting_time(r_star: float, params: TheoremParams) -> float:
    if r_star < 0:
        raise ValueError("r_star must be >= 0")
    return params.C_theorem * r_star


def bin_tail_rate(beta: float, d: int = 2) -> float:
    """Tail exponent beta' = (d+1) beta / (d + 1 + beta) inherited by T."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return (d + 1) * beta / (d + 1 + beta)


def tail_length_scale(M: float, beta: float, d: int = 2, C: float = 1.0) -> float:
    """l(M) = C M^(2(d-1)/beta') (1 + |log M|)^C."""
    bp = bin_tail_rate(beta, d)
    return C * M ** (2 * (d - 1) / bp) * (1 + abs(math.log(M))) ** C
