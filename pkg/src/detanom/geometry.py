"""Grids, measures, radial densities, and pointwise section data on the round sphere.

Everything here works in the cylinder coordinate t = 2*log r (r the modulus of
the affine coordinate), where the normalized area measure becomes
rho(t) dt * dtheta/(2*pi) with rho(t) = (e^{t/2} + e^{-t/2})^{-2}.  Rotation
invariant quantities reduce to one-dimensional integrals against rho and its
degree-weighted companions rho_i.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import QuadratureError

TWO_PI = 2.0 * math.pi

DEFAULT_WINDOW = 40.0
DEFAULT_T_NODES = 513  # odd so that t = 0 is a grid node
DEFAULT_THETA_NODES = 128


def softplus(t):
    """log(1 + e^t), stable for large |t|."""
    return np.logaddexp(0.0, t)


def _log_cosh_half(t):
    """log(e^{t/2} + e^{-t/2}), written so it is exactly even in t."""
    at = np.abs(t)
    return 0.5 * at + np.log1p(np.exp(-at))


def rho(t):
    """Radial density of the unit-mass round measure: (e^{t/2}+e^{-t/2})^{-2}."""
    return np.exp(log_rho(t))


def log_rho(t):
    t = np.asarray(t, dtype=float)
    return -2.0 * _log_cosh_half(t)


def rho_i(t, i, n):
    """Degree-weighted radial density e^{i t} (1+e^t)^{-n} rho(t).

    Requires 0 <= i <= n.  Positive everywhere; the reflection symmetry
    rho_i(t) == rho_{n-i}(-t) holds exactly (the implementation splits off
    the even factor).
    """
    if not 0 <= i <= n:
        raise ValueError(f"index i={i} out of range [0, {n}]")
    return np.exp(log_rho_i(t, i, n))


def log_rho_i(t, i, n):
    if not 0 <= i <= n:
        raise ValueError(f"index i={i} out of range [0, {n}]")
    t = np.asarray(t, dtype=float)
    # (i+1)t - (n+2) log(1+e^t) with the even part isolated: the coefficient
    # i - n/2 flips sign under i -> n-i, making the symmetry exact
    return (i - 0.5 * n) * t - (n + 2.0) * _log_cosh_half(t)


def default_t_grid(window: float = DEFAULT_WINDOW, n_nodes: int = DEFAULT_T_NODES):
    return np.linspace(-window, window, n_nodes)


def trapezoid_weights(grid):
    """Composite trapezoid weights on an arbitrary increasing grid."""
    grid = np.asarray(grid, dtype=float)
    w = np.zeros_like(grid)
    d = np.diff(grid)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
    return w


def diff_matrix(grid):
    """Dense differentiation matrix: centered second-order stencils inside,
    one-sided second-order closures at the ends.  Handles nonuniform grids."""
    grid = np.asarray(grid, dtype=float)
    n = grid.size
    if n < 3:
        raise ValueError("need at least 3 nodes to differentiate")
    D = np.zeros((n, n))
    for j in range(1, n - 1):
        hl = grid[j] - grid[j - 1]
        hr = grid[j + 1] - grid[j]
        D[j, j - 1] = -hr / (hl * (hl + hr))
        D[j, j] = (hr - hl) / (hl * hr)
        D[j, j + 1] = hl / (hr * (hl + hr))
    h0, h1 = grid[1] - grid[0], grid[2] - grid[1]
    D[0, 0] = -(2 * h0 + h1) / (h0 * (h0 + h1))
    D[0, 1] = (h0 + h1) / (h0 * h1)
    D[0, 2] = -h0 / (h1 * (h0 + h1))
    hm, hn = grid[-2] - grid[-3], grid[-1] - grid[-2]
    D[-1, -1] = (2 * hn + hm) / (hn * (hn + hm))
    D[-1, -2] = -(hn + hm) / (hn * hm)
    D[-1, -3] = hn / (hm * (hn + hm))
    return D


@dataclass(frozen=True)
class BundleDegree:
    """Line-bundle degree with its section/cosection counts."""

    n: int
    b0: int
    b1: int

    @classmethod
    def from_n(cls, n: int) -> "BundleDegree":
        n = int(n)
        if n >= 0:
            return cls(n=n, b0=n + 1, b1=0)
        return cls(n=n, b0=0, b1=-n - 1)

    def __post_init__(self):
        if self.b0 < 0 or self.b1 < 0:
            raise ValueError("b0, b1 must be nonnegative")
        if self.b0 - self.b1 != self.n + 1:
            raise ValueError("b0 - b1 must equal n + 1")


class RadialProfile:
    """A rotation-invariant perturbation f(t) sampled on a 1-D grid.

    The derivative samples are cached: computed with the module stencil when
    only values are supplied, or carried exactly when the profile comes from
    an analytic family.
    """

    __slots__ = ("t_grid", "values", "derivative", "_weights")

    def __init__(self, t_grid, values, derivative=None):
        t_grid = np.ascontiguousarray(t_grid, dtype=float)
        values = np.ascontiguousarray(values, dtype=float)
        if t_grid.ndim != 1 or t_grid.size < 16:
            raise ValueError("t_grid must be 1-D with at least 16 nodes")
        if np.any(np.diff(t_grid) <= 0):
            raise ValueError("t_grid must be strictly increasing")
        T = t_grid[-1]
        if T < 20.0 or abs(t_grid[0] + T) > 1e-9 * max(1.0, T):
            raise ValueError("t_grid must be a symmetric window [-T, T] with T >= 20")
        if values.shape != t_grid.shape or not np.all(np.isfinite(values)):
            raise ValueError("values must be finite and match t_grid")
        if derivative is None:
            derivative = diff_matrix(t_grid) @ values
        else:
            derivative = np.ascontiguousarray(derivative, dtype=float)
            if derivative.shape != t_grid.shape or not np.all(np.isfinite(derivative)):
                raise ValueError("derivative must be finite and match t_grid")
        for arr in (t_grid, values, derivative):
            arr.setflags(write=False)
        object.__setattr__(self, "t_grid", t_grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "derivative", derivative)
        object.__setattr__(self, "_weights", None)

    def __setattr__(self, name, value):
        raise AttributeError("RadialProfile is immutable")

    @classmethod
    def from_values(cls, t_grid, values):
        return cls(t_grid, values)

    @classmethod
    def from_callable(cls, fn: Callable, dfn: Optional[Callable] = None, t_grid=None):
        if t_grid is None:
            t_grid = default_t_grid()
        t_grid = np.asarray(t_grid, dtype=float)
        vals = fn(t_grid)
        der = dfn(t_grid) if dfn is not None else None
        return cls(t_grid, vals, der)

    @property
    def weights(self):
        w = object.__getattribute__(self, "_weights")
        if w is None:
            w = trapezoid_weights(self.t_grid)
            w.setflags(write=False)
            object.__setattr__(self, "_weights", w)
        return w

    @property
    def window(self) -> float:
        return float(self.t_grid[-1])

    def energy(self) -> float:
        """The squared derivative integral  int fdot(t)^2 dt."""
        return float(np.sum(self.weights * self.derivative**2))

    def weighted_mean(self) -> float:
        """Mean of f against the unit-mass radial measure rho(t) dt."""
        w = self.weights * rho(self.t_grid)
        return float(np.sum(w * self.values) / np.sum(w))

    def shifted(self, c: float) -> "RadialProfile":
        return RadialProfile(self.t_grid, self.values + c, self.derivative)

    def negated(self) -> "RadialProfile":
        return RadialProfile(self.t_grid, -self.values, -self.derivative)


class SphereField:
    """A smooth real field phi(t, theta) on a rectangular cylinder grid.

    quad_weights are the discrete unit-mass measure: trapezoid-in-t times the
    uniform theta rule times rho(t), normalized to sum exactly to one.
    Optional derivative caches hold exact samples of d(phi)/dt and
    d(phi)/dtheta when the field was built from an analytic family; grid
    stencils are used otherwise.
    """

    __slots__ = ("t_grid", "n_theta", "values", "dvalues_dt", "dvalues_dtheta",
                 "_t_weights", "_quad_weights")

    def __init__(self, t_grid, n_theta, values, dvalues_dt=None, dvalues_dtheta=None):
        t_grid = np.ascontiguousarray(t_grid, dtype=float)
        values = np.ascontiguousarray(values, dtype=float)
        n_theta = int(n_theta)
        if t_grid.ndim != 1 or np.any(np.diff(t_grid) <= 0):
            raise ValueError("t_grid must be 1-D strictly increasing")
        if n_theta < 4:
            raise ValueError("need at least 4 theta nodes")
        if values.shape != (t_grid.size, n_theta):
            raise ValueError("values must have shape (len(t_grid), n_theta)")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        caches = []
        for d in (dvalues_dt, dvalues_dtheta):
            if d is not None:
                d = np.ascontiguousarray(d, dtype=float)
                if d.shape != values.shape or not np.all(np.isfinite(d)):
                    raise ValueError("derivative cache must be finite, same shape")
            caches.append(d)
        for arr in (t_grid, values, *[c for c in caches if c is not None]):
            arr.setflags(write=False)
        object.__setattr__(self, "t_grid", t_grid)
        object.__setattr__(self, "n_theta", n_theta)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dvalues_dt", caches[0])
        object.__setattr__(self, "dvalues_dtheta", caches[1])
        object.__setattr__(self, "_t_weights", None)
        object.__setattr__(self, "_quad_weights", None)

    def __setattr__(self, name, value):
        raise AttributeError("SphereField is immutable")

    @classmethod
    def from_values(cls, t_grid, n_theta, values):
        return cls(t_grid, n_theta, values)

    @property
    def theta_grid(self):
        return TWO_PI * np.arange(self.n_theta) / self.n_theta

    @property
    def t_weights(self):
        w = object.__getattribute__(self, "_t_weights")
        if w is None:
            w = trapezoid_weights(self.t_grid)
            w.setflags(write=False)
            object.__setattr__(self, "_t_weights", w)
        return w

    @property
    def quad_weights(self):
        W = object.__getattribute__(self, "_quad_weights")
        if W is None:
            col = self.t_weights * rho(self.t_grid)
            W = np.repeat(col[:, None], self.n_theta, axis=1)
            W /= W.sum()
            W.setflags(write=False)
            object.__setattr__(self, "_quad_weights", W)
        return W

    def integrate(self, integrand=None) -> float:
        """Integral against the unit-mass measure; defaults to the field itself."""
        if integrand is None:
            integrand = self.values
        return float(np.sum(self.quad_weights * integrand))

    def d_dt(self):
        if self.dvalues_dt is not None:
            return self.dvalues_dt
        return diff_matrix(self.t_grid) @ self.values

    def d_dtheta(self):
        if self.dvalues_dtheta is not None:
            return self.dvalues_dtheta
        h = TWO_PI / self.n_theta
        return (np.roll(self.values, -1, axis=1) - np.roll(self.values, 1, axis=1)) / (2.0 * h)

    def shifted(self, c: float) -> "SphereField":
        return SphereField(self.t_grid, self.n_theta, self.values + c,
                           self.dvalues_dt, self.dvalues_dtheta)

    def negated(self) -> "SphereField":
        dt = None if self.dvalues_dt is None else -self.dvalues_dt
        dth = None if self.dvalues_dtheta is None else -self.dvalues_dtheta
        return SphereField(self.t_grid, self.n_theta, -self.values, dt, dth)


def lift(profile: RadialProfile, n_theta: int = DEFAULT_THETA_NODES) -> SphereField:
    """Rotation-invariant extension of a radial profile to the 2-D grid.

    Carries the profile's derivative samples (the theta derivative is
    identically zero), so energy evaluations of the lift agree with the
    radial ones sample for sample.
    """
    vals = np.repeat(profile.values[:, None], n_theta, axis=1)
    ddt = np.repeat(profile.derivative[:, None], n_theta, axis=1)
    return SphereField(profile.t_grid, n_theta, vals, ddt, np.zeros_like(vals))


def mean_normalize(obj):
    """Subtract the unit-mass-measure mean; idempotent, preserves derivatives."""
    if isinstance(obj, RadialProfile):
        return obj.shifted(-obj.weighted_mean())
    if isinstance(obj, SphereField):
        return obj.shifted(-obj.integrate())
    raise TypeError(f"cannot mean-normalize {type(obj).__name__}")


def dirichlet_energy(phi: SphereField) -> float:
    """The (nonpositive) quadratic energy int phi ddc phi.

    Computed as -(1/4pi) times the conformally invariant Dirichlet integral,
    which in cylinder coordinates reads  int (2 phi_t^2 + phi_theta^2 / 2) dt dtheta.
    For a lifted radial profile this equals -int fdot^2 dt.
    """
    pt = phi.d_dt()
    pth = phi.d_dtheta()
    wt = phi.t_weights
    dtheta = TWO_PI / phi.n_theta
    integral = dtheta * np.sum(wt @ (2.0 * pt**2 + 0.5 * pth**2))
    return float(-integral / (2.0 * TWO_PI))


def gradient_integral(phi: SphereField) -> float:
    """int |grad phi|^2 mu  (= -4pi * dirichlet_energy)."""
    return -2.0 * TWO_PI * dirichlet_energy(phi)


def pointwise_gram(z: complex, n: int):
    """Pointwise Hermitian Gram matrix of the degree-n monomial sections.

    Entry (j, l) is  C(n,j) C(n,l) (-z)^j (-conj z)^l / (1+|z|^2)^n, a rank-one
    positive semidefinite matrix (sections evaluated at one point).
    """
    n = int(n)
    if n < 0:
        raise ValueError("pointwise_gram requires n >= 0")
    z = complex(z)
    N = 1.0 + abs(z) ** 2
    j = np.arange(n + 1)
    v = np.array([math.comb(n, int(k)) for k in j], dtype=complex)
    v *= (-z) ** j
    v /= N ** (n / 2.0)
    return np.outer(v, v.conj())


def monomial_norms_sq(n: int, t_grid=None):
    """Discrete squared L^2 norms of the degree-n monomial sections.

    Computed with the same unit-mass quadrature used everywhere else, so the
    resulting orthonormalization makes the zero-field Gram matrix the
    identity exactly.
    """
    n = int(n)
    if n < 0:
        raise ValueError("need n >= 0")
    if t_grid is None:
        t_grid = default_t_grid()
    t_grid = np.asarray(t_grid, dtype=float)
    w = trapezoid_weights(t_grid) * rho(t_grid)
    w = w / w.sum()
    j = np.arange(n + 1)
    # |monomial_j|^2 integrates C(n,j)^2 e^{j t} (1+e^t)^{-n} against the measure
    log_radial = np.outer(j, t_grid) - n * softplus(t_grid)[None, :]
    masses = np.exp(log_radial) @ w
    norms = np.array([math.comb(n, int(k)) for k in j], dtype=float) ** 2 * masses
    if not np.all(np.isfinite(norms)) or np.any(norms <= 0):
        raise QuadratureError(f"monomial norm quadrature failed for n={n}")
    return norms


def l2_orthonormal_basis(n: int, t_grid=None):
    """Scaling factors 1/||monomial_j|| making the monomial basis orthonormal."""
    return 1.0 / np.sqrt(monomial_norms_sq(n, t_grid))


# ---------------------------------------------------------------------------
# serialization

def profile_to_dict(profile: RadialProfile) -> dict:
    return {"t_grid": profile.t_grid.tolist(), "values": profile.values.tolist()}


def profile_from_dict(data: dict) -> RadialProfile:
    return RadialProfile(np.asarray(data["t_grid"]), np.asarray(data["values"]))


def field_to_dict(phi: SphereField) -> dict:
    return {
        "t_grid": phi.t_grid.tolist(),
        "theta_nodes": phi.n_theta,
        "values": phi.values.tolist(),
    }


def field_from_dict(data: dict) -> SphereField:
    return SphereField(np.asarray(data["t_grid"]), int(data["theta_nodes"]),
                       np.asarray(data["values"]))


def save_field_json(phi: SphereField, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(field_to_dict(phi), fh)


def load_field_json(path) -> SphereField:
    with open(path, encoding="utf-8") as fh:
        return field_from_dict(json.load(fh))


def save_profile_json(profile: RadialProfile, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(profile_to_dict(profile), fh)


def load_profile_json(path) -> RadialProfile:
    with open(path, encoding="utf-8") as fh:
        return profile_from_dict(json.load(fh))


def save_profile_csv(profile: RadialProfile, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "f"])
        for t, v in zip(profile.t_grid, profile.values):
            writer.writerow([repr(float(t)), repr(float(v))])


def load_profile_csv(path) -> RadialProfile:
    ts, vs = [], []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.reader(fh):
            if not row or not row[0].strip():
                continue
            try:
                t = float(row[0])
            except ValueError:
                continue  # header line
            ts.append(t)
            vs.append(float(row[1]))
    return RadialProfile(np.asarray(ts), np.asarray(vs))
