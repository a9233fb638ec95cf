from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boxmagic.diagrams import (EXTERNALS, TARGETS, BoxDiagram, assign_radii, canonical_form, check_point,
                               enumerate_diagrams, from_word, integrand, is_isomorphic, normalization,
                               one_loop, reverse_order, sample_point)
from boxmagic.errors import DomainViolation
from boxmagic import hc

words = st.lists(st.sampled_from(TARGETS), max_size=4)


def test_one_loop_structure():
    d = one_loop()
    assert d.n == 1 and d.dashed == ()
    assert {frozenset(e) for e in d.solid} == {frozenset(("T1", v)) for v in EXTERNALS}


def test_attach_at_z2_gives_expected_integrand_factors():
    d = from_word(["Z2"])
    expected = {("Z2", "T2"), ("T2", "Z1"), ("T2", "W1"), ("T2", "T1"), ("T1", "Z1"), ("T1", "W1"), ("T1", "W2")}
    assert {frozenset(e) for e in d.solid} == {frozenset(e) for e in expected}
    assert [set(e) for e in d.dashed] == [{"Z1", "W1"}]


@settings(max_examples=60, deadline=None)
@given(words)
def test_degree_identities_and_order(word):
    d = from_word(word)
    assert d.degree_identities_hold()
    assert d.handshake() == 4 + 4 * d.n
    assert d.is_order_consistent()


@pytest.mark.parametrize("n,count", [(1, 1), (2, 2), (3, 6)])
def test_enumeration_counts(n, count):
    assert len(enumerate_diagrams(n)) == count


def test_enumeration_limit():
    with pytest.raises(ValueError):
        enumerate_diagrams(7)


def test_two_loop_classes():
    assert is_isomorphic(from_word(["Z1"]), from_word(["W1"]))
    assert is_isomorphic(from_word(["Z2"]), from_word(["W2"]))
    assert not is_isomorphic(from_word(["Z1"]), from_word(["Z2"]))


def test_commuting_attachments_are_isomorphic():
    keys = {canonical_form(from_word(list(w))) for w in itertools.product(TARGETS, repeat=2)}
    assert len(keys) == len(enumerate_diagrams(3))


@settings(max_examples=30, deadline=None)
@given(words)
def test_json_roundtrip(word):
    d = from_word(word)
    for explicit in (False, True):
        e = BoxDiagram.from_json(d.to_json(explicit))
        assert canonical_form(e) == canonical_form(d)


def test_reverse_order_is_an_involution_up_to_isomorphism():
    for d in enumerate_diagrams(3):
        assert is_isomorphic(reverse_order(reverse_order(d)), d)
    assert is_isomorphic(reverse_order(one_loop()), one_loop())


def test_radii_one_loop():
    a = assign_radii(one_loop(), 1.0, 2.0)
    assert a.r == {"T1": 1.0}
    assert a.rMax == (1.0, 1.0) and a.rMin == (1.0, 1.0)


@settings(max_examples=30, deadline=None)
@given(words)
def test_radii_respect_order(word):
    d = from_word(word)
    a = assign_radii(d)
    for u, v in itertools.permutations(d.internals, 2):
        if d.precedes(u, v):
            assert a.r[u] < a.r[v]


def test_check_point_rejects_bad_points():
    a = assign_radii(one_loop())
    p = sample_point(a, 0)
    check_point(a, p)
    bad = p.as_dict()
    bad["W1"] = 2.0 * np.eye(2)
    from boxmagic.diagrams import EvalPoint
    with pytest.raises(DomainViolation):
        check_point(a, EvalPoint(**bad))


def test_integrand_one_loop():
    d = one_loop()
    a = assign_radii(d)
    p = sample_point(a, 1)
    T = np.diag([1.0, 1.0j])
    expected = 1.0
    for v in EXTERNALS:
        expected /= hc.norm(getattr(p, v) - T)
    assert abs(integrand(d, p, {"T1": T}) - expected) < 1e-14


@pytest.mark.parametrize("n,value", [(1, 1j / (2 * np.pi ** 3)), (2, -1 / (4 * np.pi ** 6)),
                                     (3, -1j / (8 * np.pi ** 9))])
def test_normalization_constants(n, value):
    assert abs(normalization(n) - value) < 1e-15 * abs(value)
