"""Quantitative inequality verifiers.

Three families of checks live here:

* the slope-ladder bound for sums of log-exponential integrals of a concave
  envelope (constants lambda_k = 1 + 1/(5k^2), mu_k = 1 - 1/(4k), coefficient
  strictly below 1/2), evaluated exactly on the piecewise-linear model with an
  analytic tail correction;
* the square-root Hoelder bound |f(t)-f(s)| <= A sqrt|t-s| with A^2 the
  derivative energy;
* the exponential-moment (Moser-Trudinger / Fontana-type) functionals on the
  sphere, whose deficit against the sharp round-sphere bound is nonpositive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import logsumexp

from .errors import DivergenceError, DomainError, WindowError
from .geometry import RadialProfile, SphereField, gradient_integral, mean_normalize
from .rearrangement import HalfLineFunction

FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class Lemma3Constants:
    """Per-index ladder constants; r_k = 1/(20k) exactly."""

    k: int
    lambda_k: float
    mu_k: float
    r_k: float

    @classmethod
    def from_k(cls, k: int) -> "Lemma3Constants":
        k = int(k)
        if k < 1:
            raise ValueError("k must be a positive integer")
        lam = 1.0 + 1.0 / (5.0 * k * k)
        mu = 1.0 - 1.0 / (4.0 * k)
        return cls(k=k, lambda_k=lam, mu_k=mu, r_k=(k + 1) - lam * k - mu)

    def __post_init__(self):
        if self.r_k <= 0:
            raise ValueError("ladder margin r_k must be positive")


@dataclass(frozen=True)
class Lemma3Report:
    """One evaluation of the envelope bound with all its ingredients."""

    M: int
    X: float
    u0: float
    I: float
    N: int
    x_points: tuple
    coefficient: float
    slack: float
    calibration: float = 0.0

    def as_dict(self) -> dict:
        return {
            "M": self.M,
            "X": self.X,
            "u0": self.u0,
            "I": self.I,
            "N": self.N,
            "x_points": list(self.x_points),
            "coefficient": self.coefficient,
            "slack": self.slack,
            "calibration": self.calibration,
        }


def coefficient_bound(M: int) -> float:
    """The target coefficient 1/2 - 1/(70 M^2) on the energy term."""
    if M < 1:
        raise ValueError("M must be >= 1")
    return 0.5 - 1.0 / (70.0 * M * M)


def lemma3_threshold(udot0: float) -> int:
    """Smallest N >= 0 with udot0 <= lambda_{N+1} (N+1) + mu_{N+1}.

    The right side is N + 2 - 1/(20(N+1)), increasing in N, so the index is
    monotone nondecreasing in udot0.
    """
    if not np.isfinite(udot0):
        raise ValueError("udot0 must be finite")
    N = 0
    while udot0 > (N + 2.0) - 1.0 / (20.0 * (N + 1.0)):
        N += 1
    return N


def lemma3_coefficient(N: int) -> float:
    """A(lambda_N, mu_N) = 1/(2 lambda) + (1 - mu/lambda)^2 / (4 (mu - mu^2/(2 lambda)))."""
    c = Lemma3Constants.from_k(N)
    lam, mu = c.lambda_k, c.mu_k
    return 1.0 / (2.0 * lam) + (1.0 - mu / lam) ** 2 / (4.0 * (mu - mu * mu / (2.0 * lam)))


def lemma3_coefficient_sweep(n_max: int):
    """Vectorized A(lambda_N, mu_N) for N = 1..n_max, with the bound and margin."""
    N = np.arange(1, n_max + 1, dtype=float)
    lam = 1.0 + 1.0 / (5.0 * N * N)
    mu = 1.0 - 1.0 / (4.0 * N)
    coef = 1.0 / (2.0 * lam) + (1.0 - mu / lam) ** 2 / (4.0 * (mu - mu * mu / (2.0 * lam)))
    bound = 0.5 - 1.0 / (70.0 * N * N)
    return N.astype(int), coef, bound, bound - coef


def _log_cell_integral(rate, width):
    """log of int_0^w e^{rate * s} ds, stable for any sign of rate."""
    x = rate * width
    out = np.empty_like(x)
    small = np.abs(x) < 1e-8
    out[small] = np.log(width[small]) + 0.5 * x[small]  # midpoint of expm1/r
    pos = (~small) & (x > 0)
    out[pos] = x[pos] + np.log1p(-np.exp(-x[pos])) - np.log(rate[pos])
    neg = (~small) & (x < 0)
    out[neg] = np.log1p(-np.exp(x[neg])) - np.log(-rate[neg])
    return out


def lemma3_lhs(u: HalfLineFunction, M: int) -> float:
    """X = sum_{j=0}^{M} log int_0^inf exp(u(t) - (j+1) t) dt.

    Integrates the piecewise-linear model exactly cell by cell and appends
    the analytic tail of the linear extension beyond the window.  A summand
    whose tail rate is not negative diverges and is reported by index.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    slopes = u.cell_slopes()
    if np.any(np.diff(slopes) > 1e-9 * max(1.0, np.abs(slopes).max())):
        raise ValueError("envelope bound needs nonincreasing slopes")
    a = u.s_grid[:-1]
    w = u.widths
    ua = u.values[:-1]
    u_end, s_end = u.values[-1], u.s_grid[-1]
    sigma = slopes[-1]
    total = 0.0
    for j in range(M + 1):
        decay = (j + 1.0) - sigma
        if decay <= 1e-12:
            raise DivergenceError(
                f"summand j={j} diverges: terminal slope {sigma:.6f} >= {j + 1}"
            )
        rate = slopes - (j + 1.0)
        parts = ua - (j + 1.0) * a + _log_cell_integral(rate, w)
        tail = u_end - (j + 1.0) * s_end - np.log(decay)
        total += float(logsumexp(np.concatenate((parts, [tail]))))
    return total


def crossing_points(u: HalfLineFunction, N: int):
    """Points x_0 >= ... >= x_{N-1} where the derivative crosses the ladder
    levels lambda_N j + mu_N, by bisection on the monotone derivative."""
    if N < 1:
        raise ValueError("N must be >= 1")
    c = Lemma3Constants.from_k(N)
    if u.deriv_fn is not None:
        udot = u.deriv_fn
    else:
        nodes = u.derivative_nodes()
        if np.any(np.diff(nodes) > 1e-9 * max(1.0, np.abs(nodes).max())):
            raise ValueError("crossing points need a nonincreasing derivative")
        interp = PchipInterpolator(u.s_grid, nodes)
        udot = interp
    s_lo, s_hi = float(u.s_grid[0]), float(u.s_grid[-1])
    d0, d_end = float(udot(s_lo)), float(udot(s_hi))
    top_level = c.lambda_k * (N - 1) + c.mu_k
    if d0 <= top_level:
        raise ValueError(
            f"derivative at 0 ({d0:.6f}) does not exceed the top level {top_level:.6f}"
        )
    xs = []
    for j in range(N):
        level = c.lambda_k * j + c.mu_k
        if d_end >= level:
            raise WindowError(
                f"level {level:.6f} (j={j}) is not crossed inside the window"
            )
        lo, hi = s_lo, s_hi
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            if float(udot(mid)) >= level:
                lo = mid
            else:
                hi = mid
        xs.append(0.5 * (lo + hi))
    return np.asarray(xs)


def lemma3_report(u: HalfLineFunction, M: int, calibration: float = 0.0,
                  with_crossings: bool = True) -> Lemma3Report:
    """Evaluate both sides of the envelope bound on one admissible u."""
    X = lemma3_lhs(u, M)
    slopes = u.cell_slopes()
    I = float(np.sum(u.widths * slopes**2))
    u0 = float(u.values[0])
    udot0 = float(slopes[0]) if u.deriv_fn is None else float(u.deriv_fn(0.0))
    N = lemma3_threshold(udot0)
    coef = lemma3_coefficient(N) if N >= 1 else 0.375  # flat branch constant
    xs: tuple = ()
    if with_crossings and N >= 1:
        try:
            xs = tuple(float(x) for x in crossing_points(u, N))
        except WindowError:
            xs = ()
    rhs = (M + 1.0) * abs(u0) + coefficient_bound(M) * I + calibration
    return Lemma3Report(M=M, X=X, u0=u0, I=I, N=N, x_points=xs,
                        coefficient=coef, slack=rhs - X, calibration=calibration)


def holder_bound_check(f: RadialProfile) -> float:
    """Worst ratio |f(t)-f(s)| / (A sqrt|t-s|) over all grid pairs.

    A^2 is the derivative energy; by Cauchy-Schwarz the true ratio never
    exceeds one.  A constant profile returns 0; zero energy with a
    nonconstant profile is inconsistent data.
    """
    A2 = f.energy()
    spread = float(np.ptp(f.values))
    if A2 <= 0.0:
        if spread == 0.0:
            return 0.0
        raise DomainError("zero derivative energy with a nonconstant profile")
    A = math.sqrt(A2)
    df = np.abs(f.values[:, None] - f.values[None, :])
    dt = np.abs(f.t_grid[:, None] - f.t_grid[None, :])
    np.fill_diagonal(dt, 1.0)
    np.fill_diagonal(df, 0.0)
    return float(np.max(df / (A * np.sqrt(dt))))


def mt_deficit(g: SphereField) -> float:
    """log int e^g mu - (1/16pi) int |grad g|^2 mu  after mean normalization.

    On the round sphere the sharp bound for the exponential moment makes this
    nonpositive, with equality only at conformal factors.
    """
    g = mean_normalize(g)
    if g.values.max() > 500.0:
        raise DivergenceError("exp(g) overflows the quadrature window")
    energy = gradient_integral(g)
    log_moment = float(logsumexp(g.values, b=g.quad_weights))
    return log_moment - energy / (4.0 * FOUR_PI)


def fontana_functional(f: SphereField) -> float:
    """log int exp(4 pi f^2) mu for mean-zero f of unit gradient energy.

    The input is mean-normalized, and rescaled to unit energy when it
    exceeds one (the hypothesis of the exponential-square bound); fields
    already inside the unit ball are left alone.
    """
    f = mean_normalize(f)
    energy = gradient_integral(f)
    if energy > 1.0:
        scale = 1.0 / math.sqrt(energy)
        f = SphereField(f.t_grid, f.n_theta, scale * f.values,
                        None if f.dvalues_dt is None else scale * f.dvalues_dt,
                        None if f.dvalues_dtheta is None else scale * f.dvalues_dtheta)
    arg = FOUR_PI * f.values**2
    if arg.max() > 500.0:
        tail = float(np.sum(f.quad_weights[arg > 500.0]))
        raise DivergenceError(
            f"exp(4 pi f^2) overflows on quadrature mass {tail:.3e}"
        )
    return float(logsumexp(arg, b=f.quad_weights))
