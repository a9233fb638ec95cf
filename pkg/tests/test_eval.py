from __future__ import annotations

import numpy as np
import pytest

from boxmagic import hc
from boxmagic.diagrams import EvalPoint, assign_radii, from_word, one_loop, sample_point
from boxmagic.errors import DomainViolation, GridTooCoarse
from boxmagic.evaluate import (conformal_check, eval_hybrid, eval_montecarlo, eval_quadrature, eval_spectral,
                               evaluate, inversion_check, inversion_point, laplacian_residual,
                               radius_independence, wrong_cycle_experiment)
from boxmagic.results import EvalResult
from boxmagic.spectral import spectral_value

TWO_LOOP = [["Z1"], ["Z2"]]


@pytest.mark.parametrize("seed", range(3))
def test_one_loop_quadrature_matches_spectral(seed):
    d = one_loop()
    a = assign_radii(d)
    p = sample_point(a, seed)
    q = eval_quadrature(d, a, p, hc.GridSpec(32, 16))
    s = eval_spectral(d, a, p, 12)
    assert abs(q.value - s.value) < 1e-7 * abs(s.value)
    assert q.error < 1e-6 * abs(q.value)


def test_two_loop_quadrature_matches_spectral_coarsely():
    d = from_word(["Z2"])
    a = assign_radii(d)
    p = sample_point(a, 11)
    q = eval_quadrature(d, a, p, hc.GridSpec(8, 6))
    s = eval_spectral(d, a, p, 10)
    assert abs(q.value - s.value) < 1e-2 * abs(s.value)


def test_montecarlo_within_error_band():
    d = one_loop()
    a = assign_radii(d)
    p = sample_point(a, 2)
    r = eval_montecarlo(d, a, p, 200_000, seed=1)
    s = eval_spectral(d, a, p, 10)
    assert abs(r.value - s.value) < 4 * r.error
    # same seed, same numbers
    assert eval_montecarlo(d, a, p, 200_000, seed=1).value == r.value


@pytest.mark.parametrize("word", TWO_LOOP)
def test_elimination_orders_agree(word):
    d = from_word(word)
    a = assign_radii(d)
    p = sample_point(a, 4)
    v1 = spectral_value(d, a, p, 16, "decreasing")
    v2 = spectral_value(d, a, p, 16, "increasing")
    assert abs(v1 - v2) < 1e-12 * abs(v1)


def test_spectral_converges_in_lmax():
    d = from_word(["Z1"])
    a = assign_radii(d)
    p = sample_point(a, 6)
    errs = [eval_spectral(d, a, p, L).error for L in (4, 6, 8)]
    assert errs[0] > errs[1] > errs[2]


@pytest.mark.parametrize("word", [[], ["Z1"]])
def test_hybrid_agrees_with_spectral(word):
    d = from_word(word)
    a = assign_radii(d)
    p = sample_point(a, 9)
    ref = spectral_value(d, a, p, 20)
    for t in d.internals:
        assert abs(eval_hybrid(d, a, p, keep=t).value - ref) < 1e-9 * abs(ref)


def test_radius_independence_one_loop():
    d = one_loop()
    p = sample_point(assign_radii(d, 1.2, 3.0), 5)
    assert radius_independence(d, p) < 1e-8


def test_wrong_cycles_change_the_value():
    d = from_word(["Z2"])
    a = assign_radii(d)
    p = sample_point(a, 4)
    assert wrong_cycle_experiment(d, a, p, hc.GridSpec(8, 4))["relative_change"] > 0.5


def test_conformal_identity_has_no_defect():
    d = one_loop()
    a = assign_radii(d)
    assert conformal_check(d, a, sample_point(a, 2), hc.GroupElement.identity()) == 0.0


def test_inversion_relation():
    d = from_word(["Z2"])
    assert inversion_check(d, inversion_point(d, 5)) < 1e-10


@pytest.mark.parametrize("var", ["Z1", "W2"])
def test_laplacian_residual_small(var):
    d = one_loop()
    a = assign_radii(d)
    p = sample_point(a, 3)
    assert laplacian_residual(d, a, p, var, 1e-3) < 1e-4


def test_domain_violation():
    d = one_loop()
    a = assign_radii(d)
    p = sample_point(a, 0)
    bad = EvalPoint(0.5 * np.eye(2), p.Z2, p.W1, p.W2)
    for method in ("quad", "mc", "spectral"):
        with pytest.raises(DomainViolation):
            evaluate(d, a, bad, method)


def test_grid_too_coarse():
    d = one_loop()
    a = assign_radii(d)
    with pytest.raises(GridTooCoarse):
        eval_quadrature(d, a, sample_point(a, 1), hc.GridSpec(4, 2), rtol=1e-12)


def test_quadrature_rejects_three_loops():
    d = from_word(["Z1", "Z1"])
    a = assign_radii(d)
    with pytest.raises(ValueError):
        eval_quadrature(d, a, sample_point(a, 0))


def test_result_record():
    r = EvalResult(1 + 2j, 0.5, "spectral", 3)
    assert r.to_record(tag="x") == {"method": "spectral", "value_re": 1.0, "value_im": 2.0,
                                    "error": 0.5, "cost": 3, "tag": "x"}
    with pytest.raises(ValueError):
        EvalResult(0j, float("nan"), "spectral")
