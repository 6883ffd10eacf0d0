"""Seeded probe generators shared by the self-test battery and the test suite."""

from __future__ import annotations

import numpy as np

from . import geometry as geo
from .optimizer import profile_family
from .rearrangement import HalfLineFunction, monotone_envelope


def random_smooth_field(rng, grid, n_theta=64, amplitude=1.0, terms=3, max_mode=3):
    """Random smooth sphere field from separable analytic terms, with exact
    derivative caches in both directions."""
    vals = np.zeros((grid.size, n_theta))
    ddt = np.zeros_like(vals)
    ddth = np.zeros_like(vals)
    theta = geo.TWO_PI * np.arange(n_theta) / n_theta
    for _ in range(terms):
        a = amplitude * rng.normal()
        c = rng.uniform(-4, 4)
        s = rng.uniform(1.5, 4)
        k = int(rng.integers(0, max_mode + 1))
        delta = rng.uniform(0, geo.TWO_PI)
        bump = np.exp(-(((grid - c) / s) ** 2))
        dbump = bump * (-2 * (grid - c) / s**2)
        ang = np.cos(k * theta + delta)
        dang = -k * np.sin(k * theta + delta)
        vals += a * np.outer(bump, ang)
        ddt += a * np.outer(dbump, ang)
        ddth += a * np.outer(bump, dang)
    return geo.SphereField(grid, n_theta, vals, ddt, ddth)


def random_radial_profile(rng, grid, amplitude=1.0, max_mode=3):
    """Random smooth radial profile in the bounded Fourier-in-x family."""
    k = int(rng.integers(1, max_mode + 1))
    params = amplitude * rng.normal(size=2 * k) / np.repeat(np.arange(1, k + 1), 2)
    return profile_family("fourier_x", params, grid)


def random_envelope(rng, s_grid, scale=1.0):
    """Admissible concave envelope from a random decaying half-line profile.

    The underlying profile is a parametric Gaussian mix, so the same rng
    sequence defines the same function on any grid (refinement-stable).
    """
    vals = np.zeros_like(s_grid)
    for _ in range(4):
        a = rng.normal()
        c = rng.uniform(0.0, 12.0)
        w = rng.uniform(1.0, 4.0)
        vals += a * np.exp(-(((s_grid - c) / w) ** 2))
    return monotone_envelope(HalfLineFunction(s_grid, scale * vals))
