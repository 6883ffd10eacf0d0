"""Acceptance battery: one test per criterion, each at its pinned tolerance.

The criterion implementations live in detanom.selftest (the same battery the
`selftest` subcommand runs); this module asserts each one and additionally
times the full command-line battery.
"""

import subprocess
import sys
import time

import pytest

from detanom.selftest import CRITERIA

_BY_ID = {cid: (name, fn) for cid, name, fn in CRITERIA}


@pytest.mark.parametrize("cid", sorted(_BY_ID))
def test_criterion(cid):
    name, fn = _BY_ID[cid]
    ok, detail = fn()
    print(f"[{'PASS' if ok else 'FAIL'}] {cid} {name}: {detail}")
    assert ok, f"{cid} {name}: {detail}"


def test_c14_selftest_wall_clock_under_five_minutes():
    t0 = time.time()
    proc = subprocess.run(
        [sys.executable, "-m", "detanom.cli", "selftest"],
        capture_output=True, text=True, timeout=360,
    )
    elapsed = time.time() - t0
    print(f"[{'PASS' if proc.returncode == 0 else 'FAIL'}] C14 selftest "
          f"wall clock: {elapsed:.1f}s (limit 300s)")
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert elapsed < 300.0
