import numpy as np
import pytest

from detanom import geometry as geo
from detanom.anomaly import anomaly_general, radial_anomaly_result
from detanom.errors import UnknownFamilyError
from detanom.optimizer import (
    SearchConfig,
    _GeneralObjective,
    _RadialObjective,
    profile_family,
    search_sup,
)

GRID = geo.default_t_grid()


def test_zero_family():
    prof = profile_family("zero", (), GRID)
    assert np.all(prof.values == 0)
    assert np.all(prof.derivative == 0)


def test_tanh_family_energy():
    # oracle: int (a/2 sech^2(t/2))^2 dt = 2 a^2 / 3
    for a in (0.5, 1.0, 3.0):
        prof = profile_family("tanh", (a,), GRID)
        assert prof.energy() == pytest.approx(2 * a * a / 3, rel=1e-12)


def test_tent_family_energy_exact():
    # w = 5 is an exact multiple of the default grid spacing 80/512
    prof = profile_family("tent", (1.0, 5.0), GRID)
    assert prof.energy() == pytest.approx(2.0 * 1.0 / 5.0, rel=1e-13)
    prof = profile_family("tent", (2.0, 5.0), GRID)
    assert prof.energy() == pytest.approx(2.0 * 4.0 / 5.0, rel=1e-13)


def test_fourier_family_flattens_at_window():
    rng = np.random.default_rng(0)
    prof = profile_family("fourier_x", rng.normal(size=4), GRID)
    assert abs(prof.derivative[0]) < 1e-15
    assert abs(prof.derivative[-1]) < 1e-15


def test_unknown_family():
    with pytest.raises(UnknownFamilyError):
        profile_family("sawtooth", (1.0,), GRID)


def test_family_determinism():
    p1 = profile_family("bump", (1.0, 0.5, 2.0), GRID)
    p2 = profile_family("bump", (1.0, 0.5, 2.0), GRID)
    assert np.array_equal(p1.values, p2.values)


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(n=0, max_iters=0)
    with pytest.raises(ValueError):
        SearchConfig(n=0, energy_cap=0.0)
    with pytest.raises(ValueError):
        SearchConfig(n=0, restarts=0)


def test_radial_objective_matches_anomaly_module():
    obj = _RadialObjective(1, GRID, 8)
    rng = np.random.default_rng(4)
    for n in (0, 1, -2, -3):
        obj = _RadialObjective(n, GRID, 8)
        c = rng.normal(size=8) / np.arange(1, 9)
        val, energy = obj.value_energy(c)
        prof = obj.profile(c)
        assert val == pytest.approx(radial_anomaly_result(prof, n).total, abs=1e-10)
        assert energy == pytest.approx(prof.energy(), rel=1e-12)


def test_radial_gradient_matches_fd():
    rng = np.random.default_rng(7)
    for n in (0, 2, -2):
        obj = _RadialObjective(n, GRID, 10)
        c = rng.normal(size=10) / np.arange(1, 11)
        grad = obj.gradient(c)
        eps = 1e-6
        for i in (0, 3, 9):
            e = np.zeros_like(c)
            e[i] = eps
            fd = (obj.value_energy(c + e)[0] - obj.value_energy(c - e)[0]) / (2 * eps)
            assert grad[i] == pytest.approx(fd, rel=1e-5, abs=1e-9)


def test_general_objective_matches_anomaly_module():
    grid = geo.default_t_grid(40.0, 257)
    rng = np.random.default_rng(11)
    for n in (1, -2):
        obj = _GeneralObjective(n, grid, 32, 4, 1)
        c = 0.5 * rng.normal(size=obj.n_coeffs) / obj.init_decay
        val, _ = obj.value_energy(c)
        field = obj.profile(c)
        assert val == pytest.approx(anomaly_general(field, n).total, abs=1e-9)


def test_general_gradient_matches_fd():
    grid = geo.default_t_grid(40.0, 257)
    rng = np.random.default_rng(13)
    obj = _GeneralObjective(0, grid, 32, 3, 1)
    c = 0.5 * rng.normal(size=obj.n_coeffs) / obj.init_decay
    grad = obj.gradient(c)
    eps = 1e-6
    for i in range(0, obj.n_coeffs, 3):
        e = np.zeros_like(c)
        e[i] = eps
        fd = (obj.value_energy(c + e)[0] - obj.value_energy(c - e)[0]) / (2 * eps)
        assert grad[i] == pytest.approx(fd, rel=2e-5, abs=1e-9)


def test_search_onofri_plateau():
    cfg = SearchConfig(n=0, radial=True, max_iters=400, restarts=4, seed=12)
    trace = search_sup(cfg)
    assert trace.status in ("plateaued", "max-iters")
    assert -1e-3 <= trace.best_value <= 1e-9
    assert np.all(np.diff(trace.values) >= -1e-12)  # accepted-step monotonicity


def test_search_deterministic_given_seed():
    cfg = SearchConfig(n=1, radial=True, max_iters=50, restarts=2, seed=33)
    t1 = search_sup(cfg)
    t2 = search_sup(cfg)
    assert np.array_equal(t1.values, t2.values)
    assert t1.best_value == t2.best_value


def test_search_constant_shift_leaves_trace_unchanged():
    # the objective is blind to constants: shifting the start profile by a
    # constant is absorbed and the recorded values coincide
    grid = GRID
    obj = _RadialObjective(0, grid, 6)
    rng = np.random.default_rng(3)
    c0 = rng.normal(size=6) / np.arange(1, 7)
    from detanom.optimizer import _run_single

    cfg = SearchConfig(n=0, max_iters=40, seed=0)
    base = _run_single(obj, c0, cfg, 0)
    prof = obj.profile(c0)
    shifted = prof.shifted(5.0)
    assert radial_anomaly_result(shifted, 0).total == pytest.approx(
        base.values[0], abs=1e-9
    )


def test_search_hit_cap_status():
    # a start whose energy already exceeds the cap aborts the trace
    from detanom.optimizer import _run_single

    obj = _RadialObjective(1, GRID, 6)
    c0 = np.zeros(6)
    c0[0] = 3.0  # 3*tanh(t/2): energy 6
    cfg = SearchConfig(n=1, energy_cap=5.0, max_iters=50)
    trace = _run_single(obj, c0, cfg, 0)
    assert trace.status == "hit-cap"
    assert trace.energies[-1] > 5.0


def test_search_degree_minus_one_energy_only():
    # no sections or cosections: the objective is pure energy, maximized at 0
    cfg = SearchConfig(n=-1, radial=True, max_iters=200, restarts=2, seed=21)
    trace = search_sup(cfg)
    assert trace.best_value == pytest.approx(0.0, abs=1e-8)
    assert trace.status == "plateaued"


def test_search_bounded_under_cap_increase():
    bests = {}
    for cap in (10.0, 100.0):
        cfg = SearchConfig(n=1, radial=True, max_iters=300, restarts=3, seed=9,
                           energy_cap=cap)
        trace = search_sup(cfg)
        bests[cap] = trace.best_value
        assert trace.status != "hit-cap"
    assert bests[100.0] <= bests[10.0] + 1e-2


def test_general_search_smoke():
    cfg = SearchConfig(n=0, radial=False, max_iters=60, restarts=1, seed=5,
                       t_nodes=257, theta_nodes=32, basis_size=6, theta_modes=1)
    trace = search_sup(cfg)
    assert trace.best_value <= 1e-9
    assert np.all(np.diff(trace.values) >= -1e-12)
    assert isinstance(trace.best_profile, geo.SphereField)
