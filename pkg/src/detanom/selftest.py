"""Acceptance battery: every check the artifact promises, one line each.

Each criterion function returns (passed, detail).  The registry drives both
the `selftest` CLI subcommand and the acceptance test module; tolerances are
pinned here, not configured.
"""

from __future__ import annotations

import math
import time
from fractions import Fraction

import numpy as np

from . import bounds, geometry as geo, probes, spectral
from .anomaly import (
    anomaly_dual_check,
    anomaly_general,
    anomaly_gradient,
    anomaly_radial,
)
from .optimizer import SearchConfig, profile_family, search_sup
from .rearrangement import (
    HalfLineFunction,
    decreasing_rearrangement,
    hardy_littlewood_gaps,
    monotone_envelope,
)

GRID = geo.default_t_grid()
THETA_FAST = 64  # angular nodes for the probe batteries


def _zero_field(n_theta=32):
    return geo.lift(profile_family("zero", (), GRID), n_theta)


def c01_normalization():
    """anomaly(0, n) = 0 within 1e-10 for n in -3..3."""
    zero = _zero_field()
    worst = max(abs(anomaly_general(zero, n).total) for n in range(-3, 4))
    return worst < 1e-10, f"max |A(0)| = {worst:.3e} (tol 1e-10)"


def c02_scaling_invariance():
    """A(phi + c) = A(phi) within 1e-8 for c in {-3, 1, 7}, n in {0, 1, 2, -2}."""
    rng = np.random.default_rng(202)
    worst = 0.0
    for n in (0, 1, 2, -2):
        for _ in range(10):
            phi = probes.random_smooth_field(rng, GRID, THETA_FAST)
            base = anomaly_general(phi, n).total
            for c in (-3.0, 1.0, 7.0):
                worst = max(worst, abs(anomaly_general(phi.shifted(c), n).total - base))
    return worst < 1e-8, f"max |A(phi+c) - A(phi)| = {worst:.3e} (tol 1e-8)"


def c03_radial_general_agreement():
    """Radial and lifted-general evaluations agree within 1e-6 (tanh, tent)."""
    worst = 0.0
    for n in (0, 1, 2):
        for fam, params in (("tanh", (0.5,)), ("tanh", (1.0,)), ("tanh", (2.0,)),
                            ("tent", (1.0, 5.0)), ("tent", (2.0, 5.0)),
                            ("tent", (0.7, 3.0))):
            prof = profile_family(fam, params, GRID)
            d = abs(anomaly_radial(prof, n).total
                    - anomaly_general(geo.lift(prof, THETA_FAST), n).total)
            worst = max(worst, d)
    return worst < 1e-6, f"max |radial - general| = {worst:.3e} (tol 1e-6)"


def c04_closed_form_anomaly():
    """n=0 tanh profiles hit -a^2/3 + log(sinh a / a) within 1e-7."""
    worst = 0.0
    for a in (0.5, 1.0, 2.0):
        target = -a * a / 3.0 + math.log(math.sinh(a) / a)
        got = anomaly_radial(profile_family("tanh", (a,), GRID), 0).total
        worst = max(worst, abs(got - target))
    return worst < 1e-7, f"max closed-form error = {worst:.3e} (tol 1e-7)"


def c05_duality():
    """|A_n(phi) - A_{-n-2}(-phi)| < 1e-6 for n in {0, 1}, 5 random fields."""
    rng = np.random.default_rng(505)
    worst = 0.0
    for n in (0, 1):
        for _ in range(5):
            phi = probes.random_smooth_field(rng, GRID, THETA_FAST)
            a, b = anomaly_dual_check(phi, n)
            worst = max(worst, abs(a - b))
    return worst < 1e-6, f"max duality gap = {worst:.3e} (tol 1e-6)"


def c06_gradient_check():
    """Analytic vs central-difference directional derivatives, rel < 1e-5."""
    rng = np.random.default_rng(606)
    eps = 1e-4
    w = geo.trapezoid_weights(GRID)
    wrho = w * geo.rho(GRID)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(0, 3))
        f = geo.RadialProfile.from_values(
            GRID, probes.random_radial_profile(rng, GRID).values)
        v = probes.random_radial_profile(rng, GRID).values
        v = v - np.sum(wrho * v) / np.sum(wrho)
        analytic = float(np.sum(w * anomaly_gradient(f, n).values * v))
        plus = anomaly_radial(geo.RadialProfile.from_values(GRID, f.values + eps * v), n).total
        minus = anomaly_radial(geo.RadialProfile.from_values(GRID, f.values - eps * v), n).total
        fd = (plus - minus) / (2 * eps)
        worst = max(worst, abs(analytic - fd) / max(abs(fd), 1e-10))
    return worst < 1e-5, f"max relative gradient error = {worst:.3e} (tol 1e-5)"


def c07_ladder_constants():
    """r_k = 1/(20k) exactly to k = 1e4; coefficient bound to N = 1e6 in <10 s."""
    t0 = time.time()
    for k in range(1, 10_001):
        lam = 1 + Fraction(1, 5 * k * k)
        mu = 1 - Fraction(1, 4 * k)
        if (k + 1) - lam * k - mu != Fraction(1, 20 * k):
            return False, f"r_k mismatch at k={k}"
    _, _, _, margin = bounds.lemma3_coefficient_sweep(1_000_000)
    elapsed = time.time() - t0
    ok = bool(np.all(margin >= 0)) and elapsed < 10.0
    return ok, (f"min coefficient margin = {margin.min():.3e} over N<=1e6, "
                f"exact rationals to k=1e4, {elapsed:.2f}s (limit 10s)")


def c08_envelope_bound_end_to_end():
    """Recorded slack constant stable (5%) under x100 energy and grid halving."""
    details = []
    ok = True
    for M in (1, 3, 8):
        worst = {}
        for key, s_grid, scale in (
            ("base", np.linspace(0.0, 40.0, 1601), 1.0),
            ("scaled", np.linspace(0.0, 40.0, 1601), 10.0),   # x100 energy
            ("half", np.linspace(0.0, 40.0, 801), 1.0),
        ):
            rng = np.random.default_rng(808)
            vals = []
            for _ in range(200):
                u = probes.random_envelope(rng, s_grid, scale)
                rep = bounds.lemma3_report(u, M, with_crossings=False)
                vals.append(-rep.slack)  # X - (M+1)|u0| - bound * I
            worst[key] = max(vals)
        tol = 0.05 * abs(worst["base"]) + 1e-3
        grew = worst["scaled"] > worst["base"] + tol
        moved = abs(worst["half"] - worst["base"]) > tol
        ok = ok and not grew and not moved
        details.append(f"M={M}: base={worst['base']:.4f} "
                       f"x100={worst['scaled']:.4f} half={worst['half']:.4f}")
    return ok, "; ".join(details)


def c09_rearrangement():
    """Envelope properties i)-iv) within 1e-8, Hardy-Littlewood, step exactness."""
    rng = np.random.default_rng(909)
    s_grid = np.linspace(0.0, 40.0, 1601)
    worst = 0.0
    for _ in range(25):
        vals = np.cumsum(rng.normal(size=s_grid.size)) * 0.08 * np.exp(-s_grid / 8)
        f = HalfLineFunction(s_grid, vals)
        u = monotone_envelope(f)
        worst = max(worst, abs(u.values[0] - f.values[0]))          # i at 0
        worst = max(worst, abs(u.values[-1] - f.values[-1]))        # i at end
        worst = max(worst, float(np.max(np.diff(u.cell_slopes()), initial=-1.0)))  # ii
        worst = max(worst, float(np.max(f.values - u.values)))      # iii
        e_f = float(np.sum(f.widths * f.cell_slopes() ** 2))
        e_u = float(np.sum(u.widths * u.cell_slopes() ** 2))
        worst = max(worst, abs(e_u - e_f))                          # iv
        worst = max(worst, -float(hardy_littlewood_gaps(f).min()))
    # exactness on a step function
    grid = np.linspace(0.0, 10.0, 101)
    step = np.where(grid < 1.0, 1.0, np.where(grid < 2.0, 2.0, 0.0))
    out = decreasing_rearrangement(HalfLineFunction(grid, step))
    expect = np.where(grid < 1.0, 2.0, np.where(grid < 2.0, 1.0, 0.0))
    exact = np.array_equal(out.values[:-1], expect[:-1])
    return worst < 1e-8 and exact, (
        f"worst property defect = {worst:.3e} (tol 1e-8), step exact = {exact}")


def c10_holder_bound():
    """|f(t)-f(s)| <= sqrt(energy * |t-s|) with ratio <= 1 + 1e-9, 100 profiles."""
    rng = np.random.default_rng(1010)
    worst = 0.0
    for _ in range(100):
        prof = probes.random_radial_profile(rng, GRID, amplitude=1.5)
        worst = max(worst, bounds.holder_bound_check(prof))
    return worst <= 1.0 + 1e-9, f"max ratio = {worst:.12f} (bar 1 + 1e-9)"


def c11_exponential_moment_bound():
    """Deficit <= 1e-9 on 100 probes; tanh a=1 deficit = -0.005228 within 1e-5."""
    rng = np.random.default_rng(1111)
    worst = -np.inf
    for i in range(100):
        if i % 2 == 0:
            phi = probes.random_smooth_field(rng, GRID, THETA_FAST,
                                             amplitude=0.8 + 0.4 * rng.random())
        else:
            phi = geo.lift(probes.random_radial_profile(rng, GRID, amplitude=1.2),
                           THETA_FAST)
        worst = max(worst, bounds.mt_deficit(phi))
    tanh1 = bounds.mt_deficit(geo.lift(profile_family("tanh", (1.0,), GRID), THETA_FAST))
    pinned = abs(tanh1 - (-0.005228)) < 1e-5
    return worst <= 1e-9 and pinned, (
        f"max deficit = {worst:.3e} (bar 1e-9), tanh(1) deficit = {tanh1:.6f}")


def c12_circle_oracle():
    """Flat determinant 1 within 1e-6; 20 probes match the closed form within 1e-4."""
    flat = spectral.CircleMetric.zero(256)
    det0 = spectral.circle_det(flat)
    if abs(det0 - 1.0) > 1e-6:
        return False, f"det'(flat) = {det0} (tol 1e-6)"
    log_det0 = math.log(det0)
    from scipy.special import i0

    rng = np.random.default_rng(1212)
    x = np.arange(256) / 256.0
    worst = 0.0
    min_formula = np.inf
    for i in range(20):
        if i < 4:
            a = (0.5, 1.0, 1.5, 2.0)[i]
            phi = spectral.CircleMetric(a * np.cos(2 * np.pi * x))
            bessel = 2.0 * math.log(float(i0(a)))
            if abs(spectral.circle_anomaly_formula(phi) - bessel) > 1e-9:
                return False, f"cosine a={a}: formula misses 2 log I0(a)"
        else:
            vals = sum(rng.normal(scale=0.5) / j
                       * np.cos(2 * np.pi * j * x + rng.uniform(0, 7))
                       for j in (1, 2, 3))
            phi = spectral.CircleMetric(vals)
        formula = spectral.circle_anomaly_formula(phi)
        min_formula = min(min_formula, formula)
        disc = math.log(spectral.circle_det(phi)) - log_det0 - formula
        worst = max(worst, abs(disc))
    ok = worst < 1e-4 and min_formula >= -1e-9
    return ok, (f"det'(flat) = {det0:.9f}, max |discrepancy| = {worst:.3e} "
                f"(tol 1e-4), min formula value = {min_formula:.3e}")


def c13_supremum_search():
    """Onofri plateau for n=0; bounded traces for n in {1, -2, -3} under x10 cap."""
    cfg0 = SearchConfig(n=0, radial=True, max_iters=400, restarts=20, seed=13)
    trace0 = search_sup(cfg0)
    finals = [v for v, _ in trace0.meta["finals"]]
    statuses = [s for _, s in trace0.meta["finals"]]
    onofri_ok = (all(s == "plateaued" for s in statuses)
                 and all(-1e-3 <= v <= 1e-9 for v in finals))
    detail = [f"n=0: best {trace0.best_value:.2e}, worst restart {min(finals):.2e}"]

    bounded_ok = True
    for n in (1, -2, -3):
        bests = {}
        for cap in (10.0, 100.0):
            tr = search_sup(SearchConfig(n=n, radial=True, max_iters=300,
                                         restarts=5, seed=13, energy_cap=cap))
            bests[cap] = tr.best_value
            if tr.status == "hit-cap":
                bounded_ok = False
        if bests[100.0] > bests[10.0] + 1e-2:
            bounded_ok = False
        detail.append(f"n={n}: sup {bests[100.0]:.2e}")

    tr_fine = search_sup(SearchConfig(n=1, radial=True, max_iters=300, restarts=5,
                                      seed=13, t_nodes=1025))
    tr_base = search_sup(SearchConfig(n=1, radial=True, max_iters=300, restarts=5,
                                      seed=13))
    stable = abs(tr_fine.best_value - tr_base.best_value) < 1e-2
    detail.append(f"n=1 grid shift {abs(tr_fine.best_value - tr_base.best_value):.2e}")
    return onofri_ok and bounded_ok and stable, "; ".join(detail)


CRITERIA = [
    ("C01", "normalization A(0) = 0", c01_normalization),
    ("C02", "scaling invariance A(phi+c) = A(phi)", c02_scaling_invariance),
    ("C03", "radial/general agreement", c03_radial_general_agreement),
    ("C04", "closed-form tanh anomaly", c04_closed_form_anomaly),
    ("C05", "section/cosection duality", c05_duality),
    ("C06", "gradient vs finite differences", c06_gradient_check),
    ("C07", "ladder constants and coefficient bound", c07_ladder_constants),
    ("C08", "envelope bound end to end", c08_envelope_bound_end_to_end),
    ("C09", "rearrangement properties", c09_rearrangement),
    ("C10", "square-root Hoelder bound", c10_holder_bound),
    ("C11", "exponential-moment deficit", c11_exponential_moment_bound),
    ("C12", "circle determinant oracle", c12_circle_oracle),
    ("C13", "supremum search", c13_supremum_search),
]


def run_selftest(ids=None, stream=None) -> bool:
    """Run the battery (optionally a subset), print one line per criterion."""
    import sys

    out = stream or sys.stdout
    chosen = [c for c in CRITERIA if ids is None or c[0] in ids]
    if ids is not None and len(chosen) != len(ids):
        known = {c[0] for c in CRITERIA}
        raise ValueError(f"unknown criteria: {sorted(set(ids) - known)}")
    all_ok = True
    t0 = time.time()
    for cid, name, fn in chosen:
        t1 = time.time()
        ok, detail = fn()
        all_ok = all_ok and ok
        status = "PASS" if ok else "FAIL"
        print(f"[{status}] {cid} {name}: {detail} ({time.time() - t1:.1f}s)",
              file=out)
    print(f"{'OK' if all_ok else 'FAILED'} ({len(chosen)} criteria, "
          f"{time.time() - t0:.1f}s total)", file=out)
    return all_ok
