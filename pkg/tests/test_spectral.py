import numpy as np
import pytest
from scipy.special import i0

from detanom.spectral import (
    CircleMetric,
    char_function,
    circle_anomaly_formula,
    circle_det,
    circle_eig_check,
)


def cos_metric(a, n=256):
    return CircleMetric.from_callable(lambda x: a * np.cos(2 * np.pi * x), n)


def test_grid_validation():
    with pytest.raises(ValueError):
        CircleMetric(np.zeros(100))  # not a power of two
    with pytest.raises(ValueError):
        CircleMetric(np.zeros(32))  # too small
    with pytest.raises(ValueError):
        CircleMetric(np.full(64, np.nan))


def test_char_function_flat_oracle():
    flat = CircleMetric.zero(128)
    for lam in np.linspace(0.5, 99.5, 15):
        target = 4.0 * np.sin(np.sqrt(lam) / 2.0) ** 2
        assert char_function(flat, lam) == pytest.approx(target, abs=1e-8)


def test_char_function_vanishes_at_flat_eigenvalues():
    flat = CircleMetric.zero(128)
    assert abs(char_function(flat, (2 * np.pi) ** 2)) < 1e-8


def test_det_flat_is_one():
    assert circle_det(CircleMetric.zero(256)) == pytest.approx(1.0, abs=1e-6)


def test_det_constant_metric_unchanged():
    # constant rescaling of the metric leaves the Laplacian untouched
    assert circle_det(CircleMetric(np.full(256, -1.4))) == pytest.approx(1.0, abs=1e-6)


def test_anomaly_formula_zero_and_constant():
    assert circle_anomaly_formula(CircleMetric.zero(64)) == pytest.approx(0.0, abs=1e-14)
    assert circle_anomaly_formula(CircleMetric(np.full(128, 5.0))) == pytest.approx(
        0.0, abs=1e-12
    )


def test_anomaly_formula_cosine_bessel_oracle():
    for a in (0.5, 1.0, 2.0):
        target = 2.0 * np.log(i0(a))
        assert circle_anomaly_formula(cos_metric(a)) == pytest.approx(target, rel=1e-10)


def test_anomaly_formula_nonnegative():
    rng = np.random.default_rng(14)
    for _ in range(25):
        k = rng.integers(1, 5)
        vals = sum(
            rng.normal() / j * np.cos(2 * np.pi * j * np.arange(256) / 256 + rng.uniform(0, 7))
            for j in range(1, k + 1)
        )
        value = circle_anomaly_formula(CircleMetric(vals))
        assert value >= -1e-9
        # equality holds only for constants: a visibly nonconstant metric
        # must sit strictly above the bar
        if np.ptp(vals) > 0.1:
            assert value > 1e-9


def test_det_matches_closed_form_shift():
    flat_log = np.log(circle_det(CircleMetric.zero(256)))
    for a in (0.7, 1.0):
        phi = cos_metric(a)
        ld = np.log(circle_det(phi)) - flat_log
        assert ld == pytest.approx(2.0 * np.log(i0(a)), abs=1e-6)
        assert abs(ld - circle_anomaly_formula(phi)) < 1e-4


def test_det_random_smooth_probes_match_formula():
    rng = np.random.default_rng(20)
    x = np.arange(256) / 256.0
    flat_log = np.log(circle_det(CircleMetric.zero(256)))
    for _ in range(5):
        vals = sum(
            rng.normal(scale=0.6) / j * np.cos(2 * np.pi * j * x + rng.uniform(0, 7))
            for j in (1, 2, 3)
        )
        phi = CircleMetric(vals)
        discrepancy = np.log(circle_det(phi)) - flat_log - circle_anomaly_formula(phi)
        assert abs(discrepancy) < 1e-4


def test_eig_check_flat_fourier_spectrum():
    flat = CircleMetric.zero(1024)
    eigs = circle_eig_check(flat, 5)
    targets = [0.0, (2 * np.pi) ** 2, (2 * np.pi) ** 2, (4 * np.pi) ** 2, (4 * np.pi) ** 2]
    assert abs(eigs[0]) < 1e-8
    for got, want in zip(eigs[1:], targets[1:]):
        assert got == pytest.approx(want, rel=2e-4)


def test_eig_check_zero_mode_always_present():
    rng = np.random.default_rng(2)
    x = np.arange(256) / 256.0
    for _ in range(5):
        vals = rng.normal(scale=0.5) * np.cos(2 * np.pi * x) \
            + rng.normal(scale=0.3) * np.sin(4 * np.pi * x)
        assert abs(circle_eig_check(CircleMetric(vals), 3)[0]) < 1e-8


def test_eig_check_invariant_under_constant_shift():
    phi = cos_metric(0.8, 256)
    shifted = CircleMetric(phi.values + 3.0)
    e1 = circle_eig_check(phi, 4)
    e2 = circle_eig_check(shifted, 4)
    assert np.allclose(e1, e2, rtol=1e-10, atol=1e-9)


def test_eig_check_against_monodromy_roots():
    # the characteristic function must nearly vanish at discrete eigenvalues
    phi = cos_metric(0.6, 1024)
    eigs = circle_eig_check(phi, 3)
    for lam in eigs[1:]:
        # |F(lambda_h)| <= |F'| * O(h^2): bound the residual by the local slope
        f = char_function(phi, float(lam))
        df = (char_function(phi, float(lam) + 0.5) - char_function(phi, float(lam) - 0.5))
        assert abs(f) < max(1.0, abs(df)) * 2e-3


def test_eig_check_count_limit():
    with pytest.raises(ValueError):
        circle_eig_check(CircleMetric.zero(64), 17)
