from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from boxmagic import hc
from boxmagic.coeffs import act_pi0, act_varpi2
from boxmagic.errors import NotInvertible
from boxmagic.laurent import LaurentPoly

finite = st.floats(-2, 2, allow_nan=False)
matrices = st.lists(finite, min_size=8, max_size=8).map(
    lambda v: np.array(v[:4]).reshape(2, 2) + 1j * np.array(v[4:]).reshape(2, 2))


@given(matrices, matrices)
def test_polar_identity(X, Y):
    lhs = hc.norm(X - Y)
    rhs = hc.norm(X) - hc.polar(X, Y) + hc.norm(Y)
    assert abs(lhs - rhs) < 1e-12


@given(matrices)
def test_coords_roundtrip_and_norm(Z):
    c = hc.to_coords(Z)
    assert np.allclose(hc.from_coords(*c), Z)
    assert abs(np.sum(c ** 2) - hc.norm(Z)) < 1e-12


@given(matrices)
def test_invert(Z):
    if abs(hc.norm(Z)) < 1e-3:
        return
    assert np.allclose(hc.invert(Z) @ Z, np.eye(2), atol=1e-8)


def test_invert_singular():
    with pytest.raises(NotInvertible):
        hc.invert(np.array([[1, 2], [2, 4]], dtype=complex))


@pytest.mark.parametrize("R", [0.5, 1.0, 2.0])
def test_normalization_integral(R):
    v = hc.cycle_integrate(lambda Z: 1 / hc.norm(Z) ** 2, R, hc.GridSpec(8, 12)).value
    assert abs(v - (-2j * np.pi ** 3)) < 1e-10


def test_cycle_nodes_are_on_the_cycle():
    Z, _ = hc.cycle_nodes(1.7, hc.GridSpec(6, 4))
    s = hc.singular_values(Z)
    assert np.allclose(s, 1.7)


@pytest.mark.parametrize("seed", range(4))
def test_sampled_group_element_preserves_form(seed):
    h = hc.sample_group_element(1.3, 0.2, seed)
    assert h.u22_residual(1.3) < 1e-10
    assert np.allclose(h.compose(h.inverse).matrix, np.eye(4))


@pytest.mark.parametrize("seed", range(3))
def test_two_forms_of_the_moebius_map(seed):
    h = hc.sample_group_element(1.0, 0.3, seed)
    Z = 0.3 * np.array([[1, 0.5j], [0.2, -1]])
    assert np.allclose(hc.fractional_linear(h, Z), hc.fractional_linear_alt(h, Z))


@pytest.mark.parametrize("side", ["l", "r"])
@pytest.mark.parametrize("action", [act_pi0, act_varpi2])
def test_actions_are_homomorphisms(side, action):
    # regression: the right-hand pi^0 once moved points by h instead of h^{-1}
    f = LaurentPoly.var(1, 2) * LaurentPoly.var(2, 1) + LaurentPoly.var(1, 1)
    h1 = hc.sample_group_element(1.0, 0.3, 1)
    h2 = hc.sample_group_element(1.0, 0.3, 2)
    Z = np.array([[0.2, 0.1j], [0.05, -0.3]])
    a = action(side, h1, action(side, h2, f))(Z)
    b = action(side, h1.compose(h2), f)(Z)
    assert abs(a - b) < 1e-12 * abs(b)


@pytest.mark.parametrize("grid", [hc.GridSpec(4, 2), hc.GridSpec(6, 3), hc.GridSpec(32, 16)])
def test_coarsened_grid_is_strictly_smaller(grid):
    assert grid.scaled(0.75).size < grid.size
