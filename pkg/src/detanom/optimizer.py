"""Probe-profile families and the supremum search for the anomaly functional.

The search runs projected gradient ascent (projection onto the mean-zero
slice; the objective is invariant under constants) with a backtracking line
search.  Iterates live in a fixed smooth coefficient basis -- Legendre
polynomials in the variable u = tanh(t/2) -- whose members have analytic
derivatives.  Evaluating the true functional on that subspace keeps the
search honest: no discretization bias can push the recorded supremum above
the functional's actual bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np
from numpy.polynomial import legendre
from scipy.special import logsumexp

from .anomaly import gram_matrix, orthonormal_section_values
from .errors import DegenerateMetricError, UnknownFamilyError
from .geometry import (
    DEFAULT_T_NODES,
    DEFAULT_WINDOW,
    TWO_PI,
    BundleDegree,
    RadialProfile,
    SphereField,
    default_t_grid,
    log_rho_i,
    rho,
    softplus,
    trapezoid_weights,
)

FAMILIES = ("zero", "tanh", "tent", "bump", "fourier_x", "legendre_x")


def profile_family(name: str, params=(), grid=None) -> RadialProfile:
    """Deterministic probe profiles with exact derivative samples.

    Families: "zero"; "tanh" (a,): a*tanh(t/2); "tent" (h, w): piecewise
    linear of height h and half-width w (kinks snapped to grid nodes);
    "bump" (a, c, s): Gaussian bump; "fourier_x" (a1, b1, a2, b2, ...):
    trigonometric series in x = e^t/(1+e^t); "legendre_x" (c1, c2, ...):
    Legendre series in 2x - 1 = tanh(t/2).
    """
    if grid is None:
        grid = default_t_grid()
    grid = np.asarray(grid, dtype=float)
    params = np.atleast_1d(np.asarray(params, dtype=float))

    if name == "zero":
        z = np.zeros_like(grid)
        return RadialProfile(grid, z, z)

    if name == "tanh":
        (a,) = params
        u = np.tanh(grid / 2)
        return RadialProfile(grid, a * u, 0.5 * a * (1.0 - u * u))

    if name == "tent":
        h, w = params
        if w <= 0:
            raise ValueError("tent half-width must be positive")
        # snap the kinks to grid nodes so the trapezoid energy is exact
        w_snap = grid[np.argmin(np.abs(grid - w))]
        if w_snap <= 0:
            raise ValueError("tent half-width collapses onto the grid center")
        vals = h * np.maximum(0.0, 1.0 - np.abs(grid) / w_snap)
        slope = h / w_snap
        der = np.where(np.abs(grid) < w_snap, -np.sign(grid) * slope, 0.0)
        # feet carry the inner one-sided slope; with the centered zero at the
        # peak this makes the trapezoid rule reproduce 2 h^2 / w exactly
        der[int(np.argmin(np.abs(grid + w_snap)))] = slope
        der[int(np.argmin(np.abs(grid - w_snap)))] = -slope
        der[int(np.argmin(np.abs(grid)))] = 0.0
        return RadialProfile(grid, vals, der)

    if name == "bump":
        a, c, s = params
        arg = (grid - c) / s
        vals = a * np.exp(-(arg**2))
        return RadialProfile(grid, vals, vals * (-2.0 * arg / s))

    if name == "fourier_x":
        x = np.exp(grid - softplus(grid))  # e^t/(1+e^t)
        dx = rho(grid)
        vals = np.zeros_like(grid)
        der = np.zeros_like(grid)
        pairs = params.reshape(-1, 2) if params.size % 2 == 0 else None
        if pairs is None:
            raise ValueError("fourier_x expects (a_k, b_k) coefficient pairs")
        for k, (a, b) in enumerate(pairs, start=1):
            vals += a * np.cos(k * np.pi * x) + b * np.sin(k * np.pi * x)
            der += (-a * np.sin(k * np.pi * x) + b * np.cos(k * np.pi * x)) * k * np.pi * dx
        return RadialProfile(grid, vals, der)

    if name == "legendre_x":
        u = np.tanh(grid / 2)
        du = 0.5 * (1.0 - u * u)
        coeffs = np.concatenate(([0.0], params))  # no constant term
        vals = legendre.legval(u, coeffs)
        der = legendre.legval(u, legendre.legder(coeffs)) * du
        return RadialProfile(grid, vals, der)

    raise UnknownFamilyError(f"unknown profile family {name!r}; "
                             f"choose from {FAMILIES}")


@dataclass
class SearchConfig:
    """Configuration of one supremum search (all randomness flows from seed)."""

    n: int
    radial: bool = True
    max_iters: int = 400
    restarts: int = 1
    seed: int = 0
    energy_cap: float = 100.0
    basis_size: int = 24
    init_scale: float = 1.0
    init_step: float = 0.5
    step_shrink: float = 0.5
    step_grow: float = 1.3
    armijo: float = 1e-4
    max_backtracks: int = 40
    grad_tol: float = 1e-7
    window: float = DEFAULT_WINDOW
    t_nodes: int = DEFAULT_T_NODES
    theta_nodes: int = 64      # general branch only
    theta_modes: int = 2       # angular Fourier modes in the 2-D basis

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.energy_cap <= 0:
            raise ValueError("energy_cap must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.basis_size < 1:
            raise ValueError("basis_size must be >= 1")


@dataclass
class SearchTrace:
    """History of one ascent run: values nondecreasing along accepted steps.

    energies records the derivative energy of each iterate (int fdot^2 dt on
    the radial branch, the gradient integral against the unit-mass measure on
    the general branch); the cap in SearchConfig applies to this quantity.
    """

    values: np.ndarray
    energies: np.ndarray
    grad_norms: np.ndarray
    best_value: float
    best_profile: object  # RadialProfile or SphereField
    status: str
    restart_index: int
    meta: dict = dc_field(default_factory=dict)


class _RadialObjective:
    """Anomaly value and coefficient gradient on the Legendre-in-x subspace.

    For n >= 0 the objective is the radial anomaly; negative degrees are
    evaluated at the dual degree on the negated profile (the two agree
    exactly, and the sign bookkeeping folds into the chain rule).
    """

    def __init__(self, n, grid, basis_size):
        self.n = int(n)
        self.sign = 1.0 if self.n >= 0 else -1.0
        self.degree = self.n if self.n >= 0 else -self.n - 2  # -1 -> energy only
        self.grid = grid
        self.w = trapezoid_weights(grid)
        u = np.tanh(grid / 2)
        du = 0.5 * (1.0 - u * u)
        eye = np.eye(basis_size + 1)
        self.B = np.stack([legendre.legval(u, eye[k]) for k in range(1, basis_size + 1)])
        self.Bdot = np.stack([
            legendre.legval(u, legendre.legder(eye[k])) * du
            for k in range(1, basis_size + 1)
        ])
        wrho = self.w * rho(grid)
        self.wrho_hat = wrho / wrho.sum()
        self.log_w = np.log(self.w)
        self.log_dens = [
            log_rho_i(grid, i, self.degree) for i in range(self.degree + 1)
        ] if self.degree >= 0 else []
        self.n_coeffs = self.B.shape[0]
        self.init_decay = np.arange(1.0, self.n_coeffs + 1.0)

    def profile(self, coeffs) -> RadialProfile:
        return RadialProfile(self.grid, self.B.T @ coeffs, self.Bdot.T @ coeffs)

    def value_energy(self, coeffs):
        fdot = self.Bdot.T @ coeffs
        energy = float(np.sum(self.w * fdot**2))
        g = self.sign * (self.B.T @ coeffs)
        total = -0.5 * energy
        total += -(self.degree + 1.0) * float(np.sum(self.wrho_hat * g)) \
            if self.degree >= 0 else 0.0
        for ld in self.log_dens:
            base = self.log_w + ld
            total += float(logsumexp(base + g) - logsumexp(base))
        return total, energy

    def gradient(self, coeffs):
        fdot = self.Bdot.T @ coeffs
        g = self.sign * (self.B.T @ coeffs)
        density = np.zeros_like(g)
        for ld in self.log_dens:
            base = self.log_w + ld + g
            density += np.exp(base - logsumexp(base))
        lin = -(self.degree + 1.0) * self.wrho_hat if self.degree >= 0 else 0.0
        grad_f = self.sign * (density + lin)
        return -(self.Bdot @ (self.w * fdot)) + self.B @ grad_f


def _run_single(obj: _RadialObjective, coeffs0, cfg: SearchConfig, restart_index):
    coeffs = coeffs0.copy()
    value, energy = obj.value_energy(coeffs)
    values, energies, gnorms = [], [], []
    status = "max-iters"
    step = cfg.init_step
    for _ in range(cfg.max_iters):
        grad = obj.gradient(coeffs)
        gnorm = float(np.linalg.norm(grad))
        values.append(value)
        energies.append(energy)
        gnorms.append(gnorm)
        if energy > cfg.energy_cap:
            status = "hit-cap"
            break
        if gnorm < cfg.grad_tol:
            status = "plateaued"
            break
        accepted = False
        s = step
        for _ in range(cfg.max_backtracks):
            trial = coeffs + s * grad
            trial_value, trial_energy = obj.value_energy(trial)
            if trial_value >= value + cfg.armijo * s * gnorm**2:
                coeffs, value, energy = trial, trial_value, trial_energy
                step = s * cfg.step_grow
                accepted = True
                break
            s *= cfg.step_shrink
        if not accepted:
            status = "plateaued"
            break
    best_profile = obj.profile(coeffs)
    return SearchTrace(
        values=np.asarray(values),
        energies=np.asarray(energies),
        grad_norms=np.asarray(gnorms),
        best_value=value,
        best_profile=best_profile,
        status=status,
        restart_index=restart_index,
    )


class _GeneralObjective:
    """Anomaly value and coefficient gradient for the 2-D coefficient basis
    P_k(tanh(t/2)) x {1, cos(m theta), sin(m theta)}.

    The Gram-term gradient uses the rank-one structure of the pointwise
    section Gram:  d(log det G)/d phi(x) = +- W(x) e^{+-phi(x)} v(x)* G^{-1} v(x).
    """

    def __init__(self, n, grid, n_theta, basis_size, theta_modes):
        self.deg = BundleDegree.from_n(n)
        self.grid = grid
        self.n_theta = int(n_theta)
        theta = TWO_PI * np.arange(self.n_theta) / self.n_theta
        u = np.tanh(grid / 2)
        du = 0.5 * (1.0 - u * u)
        eye = np.eye(basis_size + 1)
        rad = [legendre.legval(u, eye[k]) for k in range(1, basis_size + 1)]
        rad_d = [legendre.legval(u, legendre.legder(eye[k])) * du
                 for k in range(1, basis_size + 1)]
        ang = [(np.ones_like(theta), np.zeros_like(theta))]
        for m in range(1, theta_modes + 1):
            ang.append((np.cos(m * theta), -m * np.sin(m * theta)))
            ang.append((np.sin(m * theta), m * np.cos(m * theta)))
        self.basis, self.basis_dt, self.basis_dth = [], [], []
        for R, Rd in zip(rad, rad_d):
            for A, Ad in ang:
                self.basis.append(np.outer(R, A))
                self.basis_dt.append(np.outer(Rd, A))
                self.basis_dth.append(np.outer(R, Ad))
        self.basis = np.stack(self.basis)
        self.basis_dt = np.stack(self.basis_dt)
        self.basis_dth = np.stack(self.basis_dth)
        self.n_coeffs = self.basis.shape[0]
        self.init_decay = np.repeat(np.arange(1.0, basis_size + 1.0), len(ang))
        w_t = trapezoid_weights(grid)
        self.omega = np.outer(w_t, np.full(self.n_theta, TWO_PI / self.n_theta))
        wmu = np.outer(w_t * rho(grid), np.ones(self.n_theta) / self.n_theta)
        self.W = wmu / wmu.sum()
        self._template = SphereField(grid, self.n_theta,
                                     np.zeros((grid.size, self.n_theta)))
        self._sections = {}
        for m_deg, active in ((self.deg.n, self.deg.b0),
                              (-self.deg.n - 2, self.deg.b1)):
            if active:
                self._sections[m_deg] = orthonormal_section_values(
                    self._template, m_deg)

    def profile(self, coeffs) -> SphereField:
        phi = np.tensordot(coeffs, self.basis, axes=1)
        dt = np.tensordot(coeffs, self.basis_dt, axes=1)
        dth = np.tensordot(coeffs, self.basis_dth, axes=1)
        return SphereField(self.grid, self.n_theta, phi, dt, dth)

    def _branches(self):
        out = []
        if self.deg.b0:
            out.append((self.deg.n, +1))
        if self.deg.b1:
            out.append((-self.deg.n - 2, -1))
        return out

    def value_energy(self, coeffs):
        field = self.profile(coeffs)
        dt, dth = field.dvalues_dt, field.dvalues_dtheta
        dirichlet = float(np.sum(self.omega * (2.0 * dt**2 + 0.5 * dth**2)))
        total = -dirichlet / (4.0 * TWO_PI)
        total += -(self.deg.n + 1.0) * float(np.sum(self.W * field.values))
        for m_deg, sign in self._branches():
            gram = gram_matrix(field, m_deg, sign, self.deg.n,
                               sections=self._sections[m_deg])
            eigs = np.linalg.eigvalsh(gram)
            if not np.all(np.isfinite(eigs)) or eigs.min() <= 0:
                cond = float(eigs.max() / max(abs(eigs.min()), 1e-300))
                raise DegenerateMetricError(self.deg.n, cond)
            total += float(np.sum(np.log(eigs)))
        return total, dirichlet

    def gradient(self, coeffs):
        field = self.profile(coeffs)
        dt, dth = field.dvalues_dt, field.dvalues_dtheta
        grad = -(np.tensordot(self.basis_dt, self.omega * 4.0 * dt, axes=2)
                 + np.tensordot(self.basis_dth, self.omega * dth, axes=2)) \
            / (4.0 * TWO_PI)
        grad += np.tensordot(self.basis, -(self.deg.n + 1.0) * self.W, axes=2)
        for m_deg, sign in self._branches():
            v = self._sections[m_deg]
            gram = gram_matrix(field, m_deg, sign, self.deg.n, sections=v)
            ginv = np.linalg.inv(gram)
            quad = np.einsum("xyj,jl,xyl->xy", v.conj(), ginv, v,
                             optimize=True).real
            density = sign * self.W * np.exp(sign * field.values) * quad
            grad += np.tensordot(self.basis, density, axes=2)
        return grad


def search_sup(cfg: SearchConfig) -> SearchTrace:
    """Best ascent trace over seeded restarts (ties broken by restart index).

    Restart initializers are random coefficient draws in the search basis
    (decaying spectrum), scaled into the energy cap when necessary.  The
    radial branch searches rotation-invariant perturbations; the general
    branch searches the full 2-D coefficient basis.
    """
    grid = default_t_grid(cfg.window, cfg.t_nodes)
    if cfg.radial:
        obj = _RadialObjective(cfg.n, grid, cfg.basis_size)
    else:
        obj = _GeneralObjective(cfg.n, grid, cfg.theta_nodes,
                                cfg.basis_size, cfg.theta_modes)
    rng = np.random.default_rng(cfg.seed)
    best: Optional[SearchTrace] = None
    finals = []
    for r in range(cfg.restarts):
        coeffs0 = cfg.init_scale * rng.normal(size=obj.n_coeffs) / obj.init_decay
        _, e0 = obj.value_energy(coeffs0)
        if e0 > 0.5 * cfg.energy_cap:
            coeffs0 *= np.sqrt(0.5 * cfg.energy_cap / e0)
        trace = _run_single(obj, coeffs0, cfg, r)
        finals.append((trace.best_value, trace.status))
        if best is None or trace.best_value > best.best_value:
            best = trace
    best.meta.update({
        "n": cfg.n,
        "seed": cfg.seed,
        "restarts": cfg.restarts,
        "finals": finals,
        "T": cfg.window,
        "t_nodes": cfg.t_nodes,
        "basis_size": cfg.basis_size,
        "energy_cap": cfg.energy_cap,
        "radial": cfg.radial,
    })
    return best
