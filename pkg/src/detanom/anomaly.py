"""Conformal-anomaly functional for determinant ratios on the round sphere.

The functional splits into four summands: a quadratic energy term, a linear
term against the curvature measure, and log-determinants of section /
cosection Gram matrices.  With the unit-mass normalization of the densities
the functional vanishes identically at phi = 0, and adding a constant to phi
leaves it unchanged (the scaling invariance of the underlying determinants).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.special import logsumexp

from .errors import DegenerateMetricError, DivergenceError
from .geometry import (
    BundleDegree,
    RadialProfile,
    SphereField,
    diff_matrix,
    dirichlet_energy,
    l2_orthonormal_basis,
    log_rho,
    log_rho_i,
    softplus,
)

DEFAULT_MAX_DEGREE = 8

# an integrand whose edge mass is within this factor of its peak has not
# decayed inside the window and cannot be integrated reliably (a divergent
# integrand peaks at the edge; healthy ones sit many orders below)
_TAIL_FACTOR = math.log(1e-6)
_EDGE_NODES = 3


@dataclass(frozen=True)
class AnomalyResult:
    """Anomaly value with its four summands (they add up exactly)."""

    total: float
    energy_term: float
    linear_term: float
    h0_term: float
    h1_term: float
    n: int
    meta: dict = dc_field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "total": self.total,
            "energy_term": self.energy_term,
            "linear_term": self.linear_term,
            "h0_term": self.h0_term,
            "h1_term": self.h1_term,
            "grid_meta": dict(self.meta),
        }


def _check_tail(log_integrand, label):
    """Reject integrands whose window-edge mass rivals their peak."""
    a = np.asarray(log_integrand)
    peak = a.max()
    edge = max(a[:_EDGE_NODES].max(), a[-_EDGE_NODES:].max())
    if edge > peak + _TAIL_FACTOR:
        raise DivergenceError(
            f"integrand for {label} does not decay inside the window "
            f"(edge/peak log-ratio {edge - peak:.2f})"
        )


def orthonormal_section_values(phi: SphereField, m: int):
    """Pointwise values v[x, y, j] of the discretely orthonormalized degree-m
    monomial sections on the field's grid (rank-one Gram factor)."""
    t = phi.t_grid
    s = l2_orthonormal_basis(m, t)
    j = np.arange(m + 1)
    coef = s * np.array([math.comb(m, int(k)) for k in j]) * (-1.0) ** j
    radial = np.exp(np.outer(t, j) * 0.5 - (m / 2.0) * softplus(t)[:, None])
    phase = np.exp(1j * np.outer(phi.theta_grid, j))
    return coef[None, None, :] * radial[:, None, :] * phase[None, :, :]


def gram_matrix(phi: SphereField, m: int, sign: int, n_report: int | None = None,
                sections=None):
    """Gram matrix  int e^{sign*phi} <basis_j, basis_l> mu  of the degree-m
    orthonormal monomial basis; Hermitian, identity at phi = 0."""
    if n_report is None:
        n_report = m
    t = phi.t_grid
    signed = sign * phi.values
    row_max = signed.max(axis=1)
    log_wt = np.log(phi.t_weights) + log_rho(t)
    for j in (0, m):
        _check_tail(log_wt + j * t - m * softplus(t) + row_max,
                    f"Gram entry j={j}, n={n_report}")
    v = orthonormal_section_values(phi, m) if sections is None else sections
    weight = phi.quad_weights * np.exp(signed)
    gram = np.einsum("xy,xyj,xyl->jl", weight, v, v.conj(), optimize=True)
    return 0.5 * (gram + gram.conj().T)


def _log_gram_det(phi: SphereField, m: int, sign: int, n_report: int) -> float:
    gram = gram_matrix(phi, m, sign, n_report)
    eigs = np.linalg.eigvalsh(gram)
    if not np.all(np.isfinite(eigs)) or eigs.min() <= 0.0:
        cond = float(eigs.max() / max(abs(eigs.min()), 1e-300))
        raise DegenerateMetricError(n_report, cond)
    return float(np.sum(np.log(eigs)))


def anomaly_general(phi: SphereField, n: int,
                    max_degree: int = DEFAULT_MAX_DEGREE) -> AnomalyResult:
    """Anomaly of the metric perturbation phi on the degree-n bundle.

    For n >= 0 the section Gram matrix integrates e^phi against the
    orthonormal monomial basis; for n <= -2 the cosection Gram integrates
    e^{-phi} against the basis of the dual degree -n-2 (pointwise the two
    bases are isometric).  Returns the four summands; total is their sum.
    """
    deg = BundleDegree.from_n(n)
    if abs(deg.n) > max_degree:
        raise ValueError(f"|n| = {abs(deg.n)} exceeds supported max {max_degree}")
    energy = 0.5 * dirichlet_energy(phi)
    linear = -(deg.n + 1.0) * phi.integrate()
    h0 = _log_gram_det(phi, deg.n, +1, deg.n) if deg.b0 else 0.0
    h1 = _log_gram_det(phi, -deg.n - 2, -1, deg.n) if deg.b1 else 0.0
    meta = {"T": float(phi.t_grid[-1]), "t_nodes": int(phi.t_grid.size),
            "theta_nodes": int(phi.n_theta), "evaluator": "general"}
    return AnomalyResult(energy + linear + h0 + h1, energy, linear, h0, h1,
                         deg.n, meta)


def _radial_log_masses(profile: RadialProfile, n: int):
    """log of (unnormalized) masses  int e^f rho_i dt  and  int rho_i dt."""
    t = profile.t_grid
    f = profile.values
    log_w = np.log(profile.weights)
    log_plain = np.empty(n + 1)
    log_weighted = np.empty(n + 1)
    for i in range(n + 1):
        base = log_w + log_rho_i(t, i, n)
        _check_tail(base + f, f"density i={i}, n={n}")
        log_plain[i] = logsumexp(base)
        log_weighted[i] = logsumexp(base + f)
    return log_weighted, log_plain


def anomaly_radial(f: RadialProfile, n: int) -> AnomalyResult:
    """Anomaly of a rotation-invariant perturbation, degree n >= 0.

    Every density is normalized to unit discrete mass, which pins the
    additive constant so that the zero profile gives exactly zero.  Agrees
    with the general evaluator applied to the lifted field.
    """
    n = int(n)
    if n < 0:
        raise ValueError("anomaly_radial requires n >= 0; "
                         "use radial_anomaly_result for negative degrees")
    energy = -0.5 * f.energy()
    linear = -(n + 1.0) * f.weighted_mean()
    log_weighted, log_plain = _radial_log_masses(f, n)
    h0 = float(np.sum(log_weighted - log_plain))
    meta = {"T": f.window, "t_nodes": int(f.t_grid.size), "evaluator": "radial"}
    return AnomalyResult(energy + linear + h0 + 0.0, energy, linear, h0, 0.0,
                         n, meta)


def radial_anomaly_result(f: RadialProfile, n: int) -> AnomalyResult:
    """Radial anomaly for any degree.

    Negative degrees reuse the nonnegative-degree evaluator on (-f) at the
    dual degree -n-2; the cosection Gram of the general evaluator reduces to
    exactly the same sums on rotation-invariant fields.
    """
    n = int(n)
    if n >= 0:
        return anomaly_radial(f, n)
    energy = -0.5 * f.energy()
    linear = -(n + 1.0) * f.weighted_mean()
    if n == -1:
        h1 = 0.0
    else:
        dual = anomaly_radial(f.negated(), -n - 2)
        h1 = dual.h0_term
    meta = {"T": f.window, "t_nodes": int(f.t_grid.size), "evaluator": "radial"}
    return AnomalyResult(energy + linear + 0.0 + h1, energy, linear, 0.0, h1,
                         n, meta)


def anomaly_gradient(f: RadialProfile, n: int) -> RadialProfile:
    """Functional gradient of the radial anomaly on the mean-zero slice.

    Returns the density  fddot(t) + sum_i e^f rho_i / int e^f rho_i  where the
    second-derivative part is the exact adjoint of the grid stencil applied to
    the profile values (natural boundary treatment).  Pairing it with
    mean-zero directions reproduces central finite differences of
    anomaly_radial on profiles built from values.
    """
    n = int(n)
    if n < 0:
        raise ValueError("anomaly_gradient requires n >= 0")
    t = f.t_grid
    w = f.weights
    D = diff_matrix(t)
    fdot = D @ f.values
    energy_part = -(D.T @ (w * fdot)) / w

    log_w = np.log(w)
    dens = np.zeros_like(f.values)
    for i in range(n + 1):
        base = log_w + log_rho_i(t, i, n) + f.values
        dens += np.exp(base - logsumexp(base))
    grad = energy_part + dens / w
    return RadialProfile(t, grad)


def anomaly_dual_check(phi: SphereField, n: int,
                       max_degree: int = DEFAULT_MAX_DEGREE):
    """Evaluate the anomaly at degree n on phi and at degree -n-2 on -phi.

    The two numbers agree.  With the pointwise-isometric cosection basis the
    integrands coincide, so what this exercises is the negative-degree
    bookkeeping: section/cosection counts, the exponent sign, and the linear
    term's coefficient.
    """
    n = int(n)
    if n < 0:
        raise ValueError("duality check expects n >= 0")
    a = anomaly_general(phi, n, max_degree)
    b = anomaly_general(phi.negated(), -n - 2, max_degree)
    return a.total, b.total
