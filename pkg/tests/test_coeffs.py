from __future__ import annotations

import itertools

import numpy as np
import pytest
from gmpy2 import mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from boxmagic import hc
from boxmagic.coeffs import (BasisVector, CoeffIndex, act_pi0, classify_subspace, expand_inv_norm,
                             harmonic_decompose, labels, moment_pairing, orthogonality_entry,
                             pairing_bilinear, pairing_H, tcoeff_inverse_relation, tcoeff_poly, tilde,
                             tmatrix)
from boxmagic.diagrams import normalization
from boxmagic.errors import IndexOutOfRange, NotHarmonic, SingularW
from boxmagic.laurent import LaurentPoly, degt

z11, z12, z21, z22 = (LaurentPoly.var(i, j) for i, j in ((1, 1), (1, 2), (2, 1), (2, 2)))
N = LaurentPoly.N()


def test_tcoeff_small_cases():
    assert tcoeff_poly(0, 0, 0) == LaurentPoly.const(1)
    assert tcoeff_poly(1, -1, -1) == z11
    assert tcoeff_poly(1, -1, 1) == z12
    assert tcoeff_poly(1, 1, -1) == z21
    assert tcoeff_poly(1, 1, 1) == z22
    assert tcoeff_poly(2, 2, 2) == z22 * z22


@pytest.mark.parametrize("bad", [(1, 0, 1), (2, 4, 0), (-1, 0, 0)])
def test_tcoeff_rejects_bad_index(bad):
    with pytest.raises(IndexOutOfRange):
        tcoeff_poly(*bad)


@pytest.mark.parametrize("twoL", range(7))
def test_tcoeff_harmonic_and_homogeneous(twoL):
    for i in labels(twoL, (0,)):
        if i.twoL != twoL:
            continue
        p = tcoeff_poly(i.twoL, i.twoN, i.twoM)
        assert p.box().is_zero()
        assert p.degrees() == {twoL}


@pytest.mark.parametrize("twoL", range(4))
def test_representation_is_multiplicative(twoL):
    rng = np.random.default_rng(twoL)
    Z, W = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(2))
    assert np.allclose(tmatrix(twoL, Z @ W), tmatrix(twoL, Z) @ tmatrix(twoL, W))


def test_inverse_relation_examples():
    assert tcoeff_inverse_relation(0, 0, 0)[0] == 1
    c, idx = tcoeff_inverse_relation(1, 1, 1)
    assert c == 1 and (idx.twoN, idx.twoM) == (-1, -1)
    c, idx = tcoeff_inverse_relation(1, 1, -1)
    assert c == -1


@pytest.mark.parametrize("i", list(labels(3, (0,))))
def test_inverse_relation_numerically(i):
    c, tgt = tcoeff_inverse_relation(i.twoL, i.twoN, i.twoM)
    Z = np.array([[1.1, 0.3j], [-0.4, 0.7 + 0.2j]])
    lhs = tmatrix(i.twoL, hc.invert(Z))[(i.twoN + i.twoL) // 2, (i.twoM + i.twoL) // 2]
    rhs = complex(c) * hc.norm(Z) ** (-i.twoL) * tmatrix(i.twoL, Z)[(tgt.twoN + i.twoL) // 2,
                                                                    (tgt.twoM + i.twoL) // 2]
    assert abs(lhs - rhs) < 1e-12


def test_degt_examples():
    assert degt(LaurentPoly.const(1)) == LaurentPoly.const(1)
    assert degt(z11) == z11 * 2
    assert degt(LaurentPoly.Ninv()) == -LaurentPoly.Ninv()


def test_pairing_examples():
    one = LaurentPoly.const(1)
    assert pairing_bilinear(one, LaurentPoly.Ninv(2)) == 1
    assert pairing_bilinear(z22, LaurentPoly.Ninv(3) * z11) == mpq(1, 2)
    assert pairing_bilinear(one, LaurentPoly.Ninv()) == 0
    one_b = BasisVector.single(0, 0, 0, 0)
    assert pairing_H(one_b, BasisVector.single(-1, 0, 0, 0)) == 1
    assert pairing_H(one_b, one_b) == 0


def test_pairing_H_rejects_non_harmonic():
    with pytest.raises(NotHarmonic):
        pairing_H(BasisVector.single(1, 0, 0, 0), BasisVector.single(0, 0, 0, 0))


def test_pairing_by_quadrature():
    Z, w = hc.cycle_nodes(0.8, hc.GridSpec(8, 8))
    f = z22.evaluate(Z) * (LaurentPoly.Ninv(3) * z11).evaluate(Z)
    assert abs(normalization(1) * np.sum(f * w) - 0.5) < 1e-12


def test_orthogonality_table_matches_moment_oracle():
    idx = list(labels(2, (-2, -1, 0)))
    for a, b in itertools.product(idx, repeat=2):
        pa = tcoeff_poly(a.twoL, a.twoN, a.twoM) * LaurentPoly.Npow(a.k)
        pb = tcoeff_poly(b.twoL, b.twoN, b.twoM) * LaurentPoly.Npow(b.k)
        assert orthogonality_entry(a, b) == moment_pairing(pa, pb)


harmonic_labels = st.sampled_from([i for i in labels(2, (0,))])


@settings(max_examples=30, deadline=None)
@given(harmonic_labels, harmonic_labels, st.booleans(), st.booleans())
def test_inversion_antisymmetry(i1, i2, minus1, minus2):
    def phi(i, minus):
        b = BasisVector.single(i.k, i.twoL, i.twoN, i.twoM)
        return harmonic_decompose(tilde(b.to_poly())) if minus else b

    p1, p2 = phi(i1, minus1), phi(i2, minus2)
    q1, q2 = harmonic_decompose(tilde(p1.to_poly())), harmonic_decompose(tilde(p2.to_poly()))
    assert pairing_H(p1, p2) == -pairing_H(q1, q2)


def test_decompose_examples():
    b = harmonic_decompose(z11 * z22)
    assert b.coeffs[CoeffIndex(1, 0, 0, 0)] == mpq(1, 2)
    assert all(i.twoL in (0, 2) for i in b.coeffs)
    assert harmonic_decompose(N ** 3) == BasisVector.single(3, 0, 0, 0)
    assert harmonic_decompose(z22 * z22) == BasisVector.single(0, 2, 2, 2)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 2), st.integers(0, 2), st.integers(0, 2), st.integers(0, 2),
                          st.integers(0, 2), st.integers(-3, 3)), min_size=1, max_size=4))
def test_decompose_roundtrip(terms):
    f = LaurentPoly({t[:5]: t[5] for t in terms})
    assert harmonic_decompose(f).to_poly() == f


def test_expand_inv_norm():
    rng = np.random.default_rng(3)
    W = hc.random_unitary(rng) @ np.diag([1.5, 0.9])
    U, V = hc.random_unitary(rng, 2)
    Z = U @ np.diag([0.5, 0.3]) @ V @ W
    e = expand_inv_norm(W, 12)
    assert abs(e.evaluate(Z) - 1 / hc.norm(Z - W)) < 1e-6 * abs(1 / hc.norm(Z - W))
    assert e.tail_bound(Z) < 1e-5
    assert abs(e.evaluate(np.zeros((2, 2))) - 1 / hc.norm(W)) < 1e-15


def test_expand_inv_norm_singular():
    with pytest.raises(SingularW):
        expand_inv_norm(np.array([[1, 1], [1, 1]], dtype=complex), 4)


@pytest.mark.parametrize("k,twoL,flags", [
    (0, 0, {"Zh+", "I2+"}),
    (-2, 0, {"I2-"}),
    (-1, 0, {"I2+"}),
    (-3, 2, {"I2-", "I2+", "J2"}),
    (-5, 2, {"I2-", "Zh2-"}),
])
def test_classify_subspace(k, twoL, flags):
    assert classify_subspace(CoeffIndex(k, twoL, 0, 0)) == frozenset(flags)


def test_pi0_swap_is_inversion():
    s = hc.GroupElement.swap()
    Z = np.array([[0.7, 0.2j], [0.1, 1.3]])
    out = act_pi0("l", s, z12)(Z)
    assert abs(out - hc.invert(Z)[0, 1] / hc.norm(Z)) < 1e-12
    assert np.allclose(hc.fractional_linear(s, Z), hc.invert(Z))


def test_pi0_of_constant_is_harmonic():
    from boxmagic.evaluate import fd_laplacian
    h = hc.sample_group_element(1.0, 0.3, 5)
    f = act_pi0("l", h, LaurentPoly.const(1))
    Z = np.array([[0.3, 0.1], [0.05j, -0.2]])
    assert abs(fd_laplacian(f, Z, 1e-3)) < 1e-5
