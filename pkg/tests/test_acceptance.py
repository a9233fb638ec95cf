"""Acceptance criteria 1-10, each run at its stated tolerance with the default configuration (seed 0)."""
from __future__ import annotations

import time

import pytest

from boxmagic.verify import VerifyConfig, run_suite

CRITERIA = {
    1: ("normalization", "cycle volume of dV/N^2 is -2 pi^3 i", 1.0),
    2: ("orthogonality", "orthogonality of matrix coefficients, exact and by quadrature", 30.0),
    3: ("expansion", "expansion of 1/N(Z-W): truncation and decay rate", None),
    5: ("magic", "two- and three-loop box integrals coincide", 20 * 60.0),
    6: ("conformal", "conformal covariance defects", None),
    7: ("harmonic", "finite-difference Laplacian residuals decay as h^2", None),
    8: ("annihilation", "operators vanish on the annihilated generators", None),
    9: ("operators", "operator identities, magic, scalar action and duality", None),
    10: ("structure", "degree identities, two-loop classes, radius independence", None),
}


def _summarize(report, limit, elapsed):
    failed = [c["id"] for c in report.checks if not c["pass"]]
    detail = f"{len(report.checks) - len(failed)}/{len(report.checks)} checks, {elapsed:.1f} s"
    if limit is not None:
        detail += f" (limit {limit:g} s)"
    if failed:
        detail += "; failing: " + ", ".join(failed)
    return detail, failed


def _log(log, n, ok, name, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n} [{name}]: {detail}"
    log[n] = line
    print(line)


@pytest.mark.slow
@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n, acceptance_log):
    suite, claim, limit = CRITERIA[n]
    t0 = time.perf_counter()
    report = run_suite(suite, VerifyConfig(seed=0))
    elapsed = time.perf_counter() - t0
    detail, failed = _summarize(report, limit, elapsed)
    ok = not failed and (limit is None or elapsed < limit)
    _log(acceptance_log, n, ok, suite, f"{claim}; {detail}")
    assert report.checks and not failed, detail
    assert limit is None or elapsed < limit, detail


@pytest.mark.slow
def test_criterion_4_agreement(acceptance_log):
    parts, ok = [], True
    for loops, limit in ((1, 10.0), (2, 300.0)):
        t0 = time.perf_counter()
        report = run_suite("agreement", VerifyConfig(seed=0, loops=loops))
        elapsed = time.perf_counter() - t0
        detail, failed = _summarize(report, limit, elapsed)
        parts.append(f"n={loops}: {detail}")
        ok = ok and bool(report.checks) and not failed and elapsed < limit
    _log(acceptance_log, 4, ok, "agreement", "quadrature vs spectral; " + "; ".join(parts))
    assert ok, parts
