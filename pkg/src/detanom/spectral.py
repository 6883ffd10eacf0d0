"""Spectral oracle on the circle: determinants of weighted Laplacians.

For a metric weight e^phi on the trivial bundle over the length-one circle,
the Laplacian is  Delta s = -e^{-phi} (e^phi s')'.  Its characteristic
function for periodic boundary conditions is  2 - tr M(lambda), where
M(lambda) is the monodromy of the first-order system in the quasi-derivative
variables (s, e^phi s').  The zeta-regularized determinant of Delta - lambda
equals that characteristic function up to a lambda-independent constant, and
conjugating by e^{-phi/2} turns Delta into a Schroedinger operator with the
same monodromy trace, so the constant does not depend on phi either.  It is
fixed once by the flat case, where the determinant (with the zero mode
removed) is exactly one.

The zero mode is the constants for every phi; det' is therefore extracted as
the lambda-derivative of the characteristic function at zero, computed by
Richardson extrapolation of (2 - tr M(lambda)) / lambda.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.linalg import eigh

from .errors import AccuracyError

_ODE_RTOL = 1e-11
_ODE_ATOL = 1e-12
_RICHARDSON_DELTA = 2.0
_ACCURACY_TOL = 1e-5


class CircleMetric:
    """Samples of phi on a uniform periodic grid over [0, 1)."""

    __slots__ = ("values", "n")

    def __init__(self, values):
        values = np.ascontiguousarray(values, dtype=float)
        n = values.size
        if values.ndim != 1 or n < 64 or (n & (n - 1)) != 0:
            raise ValueError("need a power-of-two grid with at least 64 nodes")
        if not np.all(np.isfinite(values)):
            raise ValueError("metric samples must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "n", n)

    def __setattr__(self, name, value):
        raise AttributeError("CircleMetric is immutable")

    @classmethod
    def from_callable(cls, fn, n=256):
        x = np.arange(n) / n
        return cls(fn(x))

    @classmethod
    def zero(cls, n=256):
        return cls(np.zeros(n))

    @property
    def x_grid(self):
        return np.arange(self.n) / self.n

    def spline(self):
        """Periodic cubic interpolant of phi on [0, 1]."""
        x = np.concatenate((self.x_grid, [1.0]))
        v = np.concatenate((self.values, [self.values[0]]))
        return CubicSpline(x, v, bc_type="periodic")


def _monodromy(phi: CircleMetric, lam: float):
    """Monodromy matrix of  y' = e^{-phi} p,  p' = -lambda e^{phi} y  over one period."""
    spline = phi.spline()

    def rhs(x, state):
        em = math.exp(-float(spline(x)))
        ep = 1.0 / em
        y1, p1, y2, p2 = state
        return [em * p1, -lam * ep * y1, em * p2, -lam * ep * y2]

    sol = solve_ivp(rhs, (0.0, 1.0), [1.0, 0.0, 0.0, 1.0], method="DOP853",
                    rtol=_ODE_RTOL, atol=_ODE_ATOL, dense_output=False)
    if not sol.success:
        raise AccuracyError(float("nan"), _ODE_RTOL, f"monodromy ODE failed: {sol.message}")
    y1, p1, y2, p2 = sol.y[:, -1]
    return np.array([[y1, y2], [p1, p2]])


def char_function(phi: CircleMetric, lam: float) -> float:
    """Characteristic function 2 - tr M(lambda); zero exactly at periodic eigenvalues.

    At phi = 0 this is 4 sin^2(sqrt(lambda)/2).
    """
    M = _monodromy(phi, lam)
    return float(2.0 - M[0, 0] - M[1, 1])


def circle_det(phi: CircleMetric) -> float:
    """Regularized determinant det'(Delta_phi), zero mode removed.

    Richardson-extrapolates (2 - tr M(lambda))/lambda at lambda -> 0.  The
    overall normalization is the flat-case constant 1 (known exactly from the
    zeta values of the flat spectrum), never re-fit per phi.
    """
    d = _RICHARDSON_DELTA
    centrals = []
    for k in range(3):
        delta = d / (2**k)
        gp = char_function(phi, delta) / delta
        gm = char_function(phi, -delta) / (-delta)
        centrals.append(0.5 * (gp + gm))
    # two Richardson stages on the even error expansion in delta^2
    r1 = [(4.0 * centrals[i + 1] - centrals[i]) / 3.0 for i in range(2)]
    r2 = (16.0 * r1[1] - r1[0]) / 15.0
    err = abs(r2 - r1[1])
    if not math.isfinite(r2) or err > _ACCURACY_TOL * max(1.0, abs(r2)):
        raise AccuracyError(err, _ACCURACY_TOL)
    return float(r2)


def circle_anomaly_formula(phi: CircleMetric) -> float:
    """Closed-form determinant shift: log int e^phi dx + log int e^{-phi} dx.

    Nonnegative for every phi (Cauchy-Schwarz), zero exactly for constants.
    """
    v = phi.values
    m = v.max()
    log_plus = m + math.log(np.mean(np.exp(v - m)))
    log_minus = -v.min() + math.log(np.mean(np.exp(-(v - v.min()))))
    return float(log_plus + log_minus)


def circle_eig_check(phi: CircleMetric, count: int):
    """Lowest eigenvalues of the symmetric second-order discretization.

    Stiffness uses cell-midpoint weights e^{phi(mid)}, mass uses node weights;
    the first eigenvalue is always ~0 (constants).  count <= n/4 keeps the
    requested modes well inside the resolved band.
    """
    n = phi.n
    if count > n // 4:
        raise ValueError("count must be at most a quarter of the grid size")
    h = 1.0 / n
    spline = phi.spline()
    mids = (np.arange(n) + 0.5) * h
    e_mid = np.exp(spline(mids))
    e_node = np.exp(phi.values)
    # K[i,j] = sum_cells e^{phi(mid)} / h * (difference pattern)
    main = (e_mid + np.roll(e_mid, 1)) / h
    K = np.diag(main)
    off = -e_mid[:-1] / h
    K[np.arange(n - 1), np.arange(1, n)] = off
    K[np.arange(1, n), np.arange(n - 1)] = off
    K[0, -1] = K[-1, 0] = -e_mid[-1] / h
    B = np.diag(e_node * h)
    vals = eigh(K, B, eigvals_only=True, subset_by_index=(0, count - 1))
    return np.asarray(vals)
