from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boxmagic import hc
from boxmagic.coeffs import BasisVector, labels
from boxmagic.diagrams import from_word, normalization, one_loop
from boxmagic.errors import NotHarmonic, TruncationInsufficient
from boxmagic.laurent import LaurentPoly
from boxmagic.operators import (L, Lacute, Lbar, TensorBasisVector, box_residual, degree_shift,
                                duality_check, equivariance_check, h_minus, lbar_poly, scalar_action_check,
                                two_loop_diagrams, zh_image)

ONE = BasisVector.single(0, 0, 0, 0)
NINV = BasisVector.single(-1, 0, 0, 0)
DIAGRAMS = [one_loop(), from_word(["Z1"]), from_word(["Z2"])]
ZH = [BasisVector.single(i.k, i.twoL, i.twoN, i.twoM) for i in labels(2, (-1,))]
zh_inputs = st.sampled_from(ZH)


def lbar_by_quadrature(f1, f2, W1, W2, R=3.0, r=1.0, grid=hc.GridSpec(10, 6)):
    """Independent oracle: one-loop L-bar by brute-force quadrature over Z1, Z2 and T."""
    T, wt = hc.cycle_nodes(r, grid)
    Z, wz = hc.cycle_nodes(R, grid)
    F1, F2 = f1.evaluate(Z) * wz, f2.evaluate(Z) * wz
    g1 = np.empty(len(T), complex)
    g2 = np.empty(len(T), complex)
    for s in range(0, len(T), 256):
        k = 1 / hc.norm(Z[None, :] - T[s:s + 256, None])
        g1[s:s + 256] = k @ F1
        g2[s:s + 256] = k @ F2
    return normalization(1) ** 3 * np.sum(wt * g1 * g2 / (hc.norm(W1 - T) * hc.norm(W2 - T)))


@pytest.mark.parametrize("f1,f2", [
    (NINV, NINV),
    (BasisVector.single(-1, 1, 1, -1), BasisVector.single(-1, 2, 0, 2)),
    (BasisVector.single(-1, 2, -2, 0), BasisVector.single(-1, 1, -1, 1)),
])
def test_one_loop_lbar_matches_quadrature(f1, f2):
    rng = np.random.default_rng(1)
    W1, W2 = (0.15 * (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))) for _ in range(2))
    exact = lbar_poly(one_loop(), f1, f2).evaluate({"W1": W1, "W2": W2})
    approx = lbar_by_quadrature(f1, f2, W1, W2)
    assert abs(exact - approx) < 1e-4 * abs(exact)


def test_one_loop_on_inverse_norms_is_one():
    out = Lbar(one_loop(), NINV, NINV)
    assert out.coeffs == TensorBasisVector.product(ONE, ONE).coeffs
    assert L(one_loop(), ONE, ONE).coeffs == out.coeffs


@pytest.mark.parametrize("d", DIAGRAMS, ids=["n1", "n2a", "n2b"])
@pytest.mark.parametrize("slot", [0, 1])
@pytest.mark.parametrize("g", [BasisVector.single(-2, 0, 0, 0), ONE, BasisVector.single(1, 1, 1, -1)])
def test_annihilated_generators(d, slot, g):
    for f in ZH[:5]:
        args = (g, f) if slot == 0 else (f, g)
        assert Lbar(d, *args).norm() == 0


@settings(max_examples=10, deadline=None)
@given(zh_inputs, zh_inputs, st.sampled_from([BasisVector.single(-2, 1, 1, 1), BasisVector.single(0, 2, 0, 0),
                                              BasisVector.single(-3, 0, 0, 0)]))
def test_descends_to_quotient(f1, f2, g):
    d = from_word(["Z2"])
    base = Lbar(d, f1, f2)
    assert (Lbar(d, f1 + g, f2) - base).norm() == 0
    assert (Lbar(d, f1, f2 + g) - base).norm() == 0


@settings(max_examples=10, deadline=None)
@given(zh_inputs, zh_inputs, st.sampled_from(DIAGRAMS))
def test_output_is_harmonic_and_shifts_degree(f1, f2, d):
    mp = lbar_poly(d, f1, f2)
    assert box_residual(mp) == 0
    if mp.terms:
        assert degree_shift(mp, f1, f2) == {4}
        assert Lbar(d, f1, f2).is_harmonic()


@settings(max_examples=12, deadline=None)
@given(zh_inputs, zh_inputs)
def test_two_loop_operators_agree(f1, f2):
    d1, d2 = two_loop_diagrams()
    assert (Lbar(d1, f1, f2) - Lbar(d2, f1, f2)).norm() == 0


@pytest.mark.parametrize("d", DIAGRAMS, ids=["n1", "n2a", "n2b"])
def test_scalar_action(d):
    mu1, r1 = scalar_action_check(d, 1)
    mu2, r2 = scalar_action_check(d, 2)
    assert r1 < 1e-12 and r2 < 1e-12
    if d.n == 1:
        assert abs(mu1 - 1) < 1e-12


def test_two_loop_scalars_coincide():
    d1, d2 = two_loop_diagrams()
    for k in (1, 2):
        assert abs(scalar_action_check(d1, k)[0] - scalar_action_check(d2, k)[0]) < 1e-12


def test_lacute_on_inverse_norms():
    out = Lacute(one_loop(), h_minus(0, 0, 0), h_minus(0, 0, 0))
    assert out.coeffs == TensorBasisVector.product(NINV, NINV).coeffs


@pytest.mark.parametrize("d", DIAGRAMS, ids=["n1", "n2a", "n2b"])
@pytest.mark.parametrize("case", range(3))
def test_duality(d, case):
    rng = np.random.default_rng(case)
    hm = [(0, 0, 0), (1, 1, -1), (2, 0, 2), (1, -1, -1)]
    f1, f2 = (ZH[j] for j in rng.choice(len(ZH), 2))
    p1, p2 = (h_minus(*hm[j]) for j in rng.choice(len(hm), 2))
    assert duality_check(d, f1, f2, p1, p2) < 1e-12


def test_duality_vanishes_on_zh_plus():
    assert duality_check(one_loop(), ONE, NINV, h_minus(0, 0, 0), h_minus(1, 1, 1)) == 0


@pytest.mark.parametrize("seed", range(3))
@pytest.mark.parametrize("d", DIAGRAMS[:2], ids=["n1", "n2"])
def test_compact_equivariance(seed, d):
    h = hc.sample_compact_element(seed)
    f1, f2 = BasisVector.single(-1, 1, 1, -1), BasisVector.single(-1, 2, 0, 2)
    assert equivariance_check(d, h, f1, f2) < 1e-10


def test_equivariance_identity():
    assert equivariance_check(one_loop(), hc.GroupElement.identity(), NINV, NINV) == 0


def test_L_requires_harmonic_inputs():
    with pytest.raises(NotHarmonic):
        L(one_loop(), NINV, ONE)
    with pytest.raises(NotHarmonic):
        Lacute(one_loop(), ONE, ONE)


def test_truncation_guard():
    with pytest.raises(TruncationInsufficient):
        Lbar(one_loop(), BasisVector.single(-1, 2, 0, 0), BasisVector.single(-1, 2, 2, 2), Lmax=0.5)


def test_zh_image():
    assert zh_image(ONE) == LaurentPoly.Ninv()


def test_tensor_json_roundtrip():
    t = Lbar(from_word(["Z1"]), BasisVector.single(-1, 1, 1, 1), BasisVector.single(-1, 2, 0, 0))
    back = TensorBasisVector.from_json(t.to_json())
    assert back.space == t.space
    assert max(abs(complex(back.coeffs[k]) - float(v)) for k, v in t.coeffs.items()) < 1e-12
