import numpy as np
import pytest

from detanom.errors import DivergenceError
from detanom.rearrangement import (
    HalfLineFunction,
    decreasing_rearrangement,
    hardy_littlewood_gaps,
    monotone_envelope,
)

GRID = np.linspace(0.0, 20.0, 801)


def test_nonincreasing_input_is_fixed_point():
    g = HalfLineFunction.from_callable(lambda s: np.exp(-s), GRID)
    out = decreasing_rearrangement(g)
    # the piecewise-constant model is untouched (the final node carries the
    # last cell's value under the step convention)
    assert np.array_equal(out.cell_values(), g.cell_values())
    assert np.array_equal(out.values[:-1], g.values[:-1])


def test_step_function_is_sorted_exactly():
    # 1 on [0,1), 2 on [1,2), 0 after  ->  2 on [0,1), 1 on [1,2), 0 after
    grid = np.linspace(0.0, 10.0, 101)
    vals = np.where(grid < 1.0, 1.0, np.where(grid < 2.0, 2.0, 0.0))
    out = decreasing_rearrangement(HalfLineFunction(grid, vals))
    expected = np.where(grid < 1.0, 2.0, np.where(grid < 2.0, 1.0, 0.0))
    assert np.array_equal(out.values[:-1], expected[:-1])


def test_idempotence():
    rng = np.random.default_rng(2)
    vals = rng.normal(size=GRID.size) * np.exp(-GRID / 3)
    once = decreasing_rearrangement(HalfLineFunction(GRID, vals))
    twice = decreasing_rearrangement(once)
    assert np.array_equal(once.values, twice.values)


def test_equimeasurability_moments():
    rng = np.random.default_rng(8)
    for _ in range(10):
        vals = rng.normal(size=GRID.size) * np.exp(-GRID / 2) \
            + 0.5 * np.sin(GRID) * np.exp(-GRID / 2)
        g = HalfLineFunction(GRID, vals)
        out = decreasing_rearrangement(g)
        for k in (1, 2):
            assert out.moment(k) == pytest.approx(g.moment(k), rel=1e-12, abs=1e-13)


def test_distribution_functions_agree():
    rng = np.random.default_rng(4)
    vals = rng.normal(size=GRID.size) * np.exp(-GRID / 2)
    g = HalfLineFunction(GRID, vals)
    out = decreasing_rearrangement(g)
    w = g.widths
    for level in np.quantile(vals, [0.15, 0.5, 0.85]):
        m_in = np.sum(w[g.cell_values() >= level])
        m_out = np.sum(w[out.cell_values() >= level])
        assert m_out == pytest.approx(m_in, abs=1e-12)


def test_non_integrable_input_rejected():
    g = HalfLineFunction.from_callable(lambda s: 1.0 + 0 * s, GRID)
    with pytest.raises(DivergenceError):
        decreasing_rearrangement(g)


def test_envelope_lemma_properties():
    # f(t) = sin(t) e^{-t}: wiggly, sign-changing derivative
    f = HalfLineFunction.from_callable(lambda s: np.sin(s) * np.exp(-s), GRID)
    u = monotone_envelope(f)
    # i) endpoint equality at 0 and at the window end
    assert u.values[0] == f.values[0]
    assert u.values[-1] == pytest.approx(f.values[-1], abs=1e-12)
    assert u.s_grid[-1] == f.s_grid[-1]
    # ii) slopes nonincreasing
    sl = u.cell_slopes()
    assert np.all(np.diff(sl) <= 1e-15)
    # iii) pointwise domination at every node (breakpoints of a uniform-grid
    # envelope coincide with the input nodes up to cumsum roundoff)
    assert np.allclose(u.s_grid, f.s_grid, atol=1e-10)
    assert np.all(u.values - f.values >= -1e-12)
    # iv) energy equality
    e_f = np.sum(f.widths * f.cell_slopes() ** 2)
    e_u = np.sum(u.widths * u.cell_slopes() ** 2)
    assert e_u == pytest.approx(e_f, rel=1e-13, abs=1e-8)


def test_envelope_concave_increasing_fixed_point():
    f = HalfLineFunction.from_callable(lambda s: np.log1p(s), GRID)
    u = monotone_envelope(f)
    assert np.max(np.abs(u.values - f.values)) < 1e-12


def test_envelope_random_profiles():
    rng = np.random.default_rng(31)
    for _ in range(20):
        vals = np.cumsum(rng.normal(size=GRID.size)) * 0.05 * np.exp(-GRID / 6)
        f = HalfLineFunction(GRID, vals)
        u = monotone_envelope(f)
        assert np.all(u.values - f.values >= -1e-12)
        assert np.all(np.diff(u.cell_slopes()) <= 1e-15)
        e_f = np.sum(f.widths * f.cell_slopes() ** 2)
        e_u = np.sum(u.widths * u.cell_slopes() ** 2)
        assert e_u == pytest.approx(e_f, rel=1e-12, abs=1e-8)


def test_hardy_littlewood_partial_integrals():
    rng = np.random.default_rng(12)
    for _ in range(10):
        vals = rng.normal(size=GRID.size) * np.exp(-GRID / 2)
        f = HalfLineFunction(GRID, vals)
        gaps = hardy_littlewood_gaps(f)
        assert np.all(gaps >= -1e-12)


def test_half_line_validation():
    with pytest.raises(ValueError):
        HalfLineFunction(np.array([1.0, 2.0]), np.zeros(2))  # must start at 0
    with pytest.raises(ValueError):
        HalfLineFunction(np.array([0.0, 0.0, 1.0]), np.zeros(3))
    with pytest.raises(ValueError):
        HalfLineFunction(np.array([0.0, 1.0]), np.array([np.inf, 0.0]))
