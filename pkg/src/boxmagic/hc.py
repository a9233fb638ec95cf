"""Complexified quaternions, conformal actions and the cycles U(2)_R.

A point of H (x) C is stored as a complex ``(..., 2, 2)`` ndarray holding
``[[z11, z12], [z21, z22]]``.  Every function here broadcasts over leading
axes so whole quadrature grids can be processed at once.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg
from scipy.stats import unitary_group

from .errors import ConformalPole, GridTooCoarse, NotInvertible
from .results import EvalResult

IDENTITY = np.eye(2, dtype=complex)
DEFINITENESS_TOL = 1e-12


def hmatrix(z11, z12, z21, z22) -> np.ndarray:
    z11, z12, z21, z22 = np.broadcast_arrays(*(np.asarray(v, dtype=complex) for v in (z11, z12, z21, z22)))
    out = np.empty(z11.shape + (2, 2), dtype=complex)
    out[..., 0, 0], out[..., 0, 1], out[..., 1, 0], out[..., 1, 1] = z11, z12, z21, z22
    return out


def from_coords(z0, z1, z2, z3) -> np.ndarray:
    """Matrix form of the point with coordinates ``z^0..z^3``."""
    z0, z1, z2, z3 = (np.asarray(v, dtype=complex) for v in (z0, z1, z2, z3))
    return hmatrix(z0 - 1j * z3, -1j * z1 - z2, -1j * z1 + z2, z0 + 1j * z3)


def to_coords(Z) -> np.ndarray:
    """Coordinates ``(z^0, z^1, z^2, z^3)`` stacked on the last axis."""
    Z = np.asarray(Z, dtype=complex)
    z11, z12, z21, z22 = Z[..., 0, 0], Z[..., 0, 1], Z[..., 1, 0], Z[..., 1, 1]
    return np.stack([(z11 + z22) / 2, 0.5j * (z12 + z21), (z21 - z12) / 2, (z22 - z11) / 2j], axis=-1)


def norm(Z):
    """N(Z) = det Z = (z^0)^2 + (z^1)^2 + (z^2)^2 + (z^3)^2."""
    Z = np.asarray(Z)
    return Z[..., 0, 0] * Z[..., 1, 1] - Z[..., 0, 1] * Z[..., 1, 0]


def polar(X, Y):
    """Symmetric bilinear form with N(X - Y) = N(X) - polar(X, Y) + N(Y)."""
    X, Y = np.asarray(X), np.asarray(Y)
    return (X[..., 0, 0] * Y[..., 1, 1] + X[..., 1, 1] * Y[..., 0, 0]
            - X[..., 0, 1] * Y[..., 1, 0] - X[..., 1, 0] * Y[..., 0, 1])


def adjugate(Z) -> np.ndarray:
    Z = np.asarray(Z, dtype=complex)
    return hmatrix(Z[..., 1, 1], -Z[..., 0, 1], -Z[..., 1, 0], Z[..., 0, 0])


def invert(Z) -> np.ndarray:
    Z = np.asarray(Z, dtype=complex)
    n = norm(Z)
    scale = np.max(np.abs(Z), axis=(-2, -1)) ** 2
    if np.any(np.abs(n) <= 1e-14 * np.maximum(scale, np.finfo(float).tiny)):
        raise NotInvertible("N(Z) = 0")
    return adjugate(Z) / n[..., None, None]


def dagger(Z) -> np.ndarray:
    return np.conj(np.swapaxes(np.asarray(Z), -1, -2))


@dataclass(frozen=True)
class GroupElement:
    """An element h = (a b; c d) of GL(2, H_C) as a 4x4 complex matrix."""

    matrix: np.ndarray

    @classmethod
    def from_blocks(cls, a, b, c, d) -> "GroupElement":
        return cls(np.block([[np.asarray(a, complex), np.asarray(b, complex)],
                             [np.asarray(c, complex), np.asarray(d, complex)]]))

    @classmethod
    def identity(cls) -> "GroupElement":
        return cls(np.eye(4, dtype=complex))

    @classmethod
    def swap(cls) -> "GroupElement":
        """The element (0 1; 1 0), acting by Z -> Z^{-1}."""
        return cls.from_blocks(np.zeros((2, 2)), IDENTITY, IDENTITY, np.zeros((2, 2)))

    @property
    def a(self):
        return self.matrix[:2, :2]

    @property
    def b(self):
        return self.matrix[:2, 2:]

    @property
    def c(self):
        return self.matrix[2:, :2]

    @property
    def d(self):
        return self.matrix[2:, 2:]

    @cached_property
    def inverse_matrix(self) -> np.ndarray:
        return np.linalg.inv(self.matrix)

    @property
    def inverse(self) -> "GroupElement":
        return GroupElement(self.inverse_matrix)

    @property
    def a_(self):
        return self.inverse_matrix[:2, :2]

    @property
    def b_(self):
        return self.inverse_matrix[:2, 2:]

    @property
    def c_(self):
        return self.inverse_matrix[2:, :2]

    @property
    def d_(self):
        return self.inverse_matrix[2:, 2:]

    def compose(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.matrix @ other.matrix)

    def u22_residual(self, R: float = 1.0) -> float:
        """Largest defect of the defining relations of U(2,2)_R."""
        S = np.diag([1 / R, 1 / R, 1, 1]).astype(complex)
        h0 = S @ self.matrix @ np.linalg.inv(S)
        a, b, c, d = h0[:2, :2], h0[:2, 2:], h0[2:, :2], h0[2:, 2:]
        res = [dagger(a) @ a - IDENTITY - dagger(c) @ c,
               dagger(d) @ d - IDENTITY - dagger(b) @ b,
               dagger(a) @ b - dagger(c) @ d]
        return float(max(np.max(np.abs(r)) for r in res))


def _check_pole(n, what):
    if np.any(np.abs(n) < 1e-300) or not np.all(np.isfinite(n)):
        raise ConformalPole(f"N({what}) = 0")


def fractional_linear(h: GroupElement, Z) -> np.ndarray:
    """h: Z -> (aZ + b)(cZ + d)^{-1}."""
    Z = np.asarray(Z, dtype=complex)
    den = h.c @ Z + h.d
    _check_pole(norm(den), "cZ+d")
    return (h.a @ Z + h.b) @ invert(den)


def fractional_linear_alt(h: GroupElement, Z) -> np.ndarray:
    """The same map written as (a' - Z c')^{-1} (-b' + Z d') with h^{-1} = (a' b'; c' d')."""
    Z = np.asarray(Z, dtype=complex)
    left = h.a_ - Z @ h.c_
    _check_pole(norm(left), "a'-Zc'")
    return invert(left) @ (-h.b_ + Z @ h.d_)


def in_domain(Z, R: float, sign: str) -> bool | np.ndarray:
    """Membership in D+_R (ZZ* < R^2) or D-_R (ZZ* > R^2).

    Boundary points, within ``DEFINITENESS_TOL`` relative to R^2, belong to neither.
    """
    Z = np.asarray(Z, dtype=complex)
    ev = np.linalg.eigvalsh(Z @ dagger(Z)) - R * R
    tol = DEFINITENESS_TOL * max(1.0, R * R)
    if sign in ("plus", "+"):
        out = np.all(ev < -tol, axis=-1)
    elif sign in ("minus", "-"):
        out = np.all(ev > tol, axis=-1)
    else:
        raise ValueError(f"sign must be 'plus' or 'minus', got {sign!r}")
    return bool(out) if out.ndim == 0 else out


def singular_values(Z) -> np.ndarray:
    return np.linalg.svd(np.asarray(Z, dtype=complex), compute_uv=False)


# --- cycles -----------------------------------------------------------------

@dataclass(frozen=True)
class CyclePoint:
    """A point R e^{i psi} x of U(2)_R, psi in [0, pi), x a unit 4-vector."""

    R: float
    psi: float
    x: tuple[float, float, float, float]

    @classmethod
    def from_matrix(cls, Z) -> "CyclePoint":
        Z = np.asarray(Z, dtype=complex)
        R = float(np.sqrt(abs(norm(Z))))
        psi = float(np.angle(norm(Z) / R**2) / 2) % np.pi
        q = Z / (R * np.exp(1j * psi))
        x = to_coords(q).real
        return cls(R, psi, tuple(float(v) for v in x))


def hopf_to_s3(eta, xi1, xi2) -> np.ndarray:
    """Unit 4-vectors (x0, x1, x2, x3) from Hopf angles; density sin(eta) cos(eta)."""
    eta, xi1, xi2 = np.broadcast_arrays(eta, xi1, xi2)
    return np.stack([np.cos(eta) * np.cos(xi1), np.sin(eta) * np.cos(xi2),
                     np.sin(eta) * np.sin(xi2), np.cos(eta) * np.sin(xi1)], axis=-1)


def cycle_embed(R, psi, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    q = from_coords(x[..., 0], x[..., 1], x[..., 2], x[..., 3])
    return (R * np.exp(1j * np.asarray(psi)))[..., None, None] * q


def cycle_weight(R, psi):
    """Density of dV with respect to d(psi) ^ vol_{S^3}, oriented so that the
    integral of dV / N(Z)^2 over U(2)_R equals -2 pi^3 i."""
    return -1j * R**4 * np.exp(4j * np.asarray(psi))


def cycle_point_and_weight(p: CyclePoint) -> tuple[np.ndarray, complex]:
    return cycle_embed(p.R, p.psi, p.x), complex(cycle_weight(p.R, p.psi))


@dataclass(frozen=True)
class GridSpec:
    """Tensor grid on [0, pi) x S^3: trapezoid in psi, xi1, xi2 and Gauss-Legendre in eta."""

    n_periodic: int = 32
    n_gauss: int = 16
    n_psi: int | None = None

    @property
    def npsi(self) -> int:
        return self.n_psi if self.n_psi is not None else self.n_periodic

    @property
    def size(self) -> int:
        return self.npsi * self.n_periodic**2 * self.n_gauss

    def scaled(self, factor: float) -> "GridSpec":
        def even(n):
            m = max(2, 2 * int(round(n * factor / 2)))
            # a shrinking factor must give a strictly smaller axis, or refinement errors read as zero
            return max(2, n - 2) if factor < 1 and m >= n else m

        def gauss(n):
            m = max(1, int(round(n * factor)))
            return max(1, n - 1) if factor < 1 and m >= n else m
        return GridSpec(even(self.n_periodic), gauss(self.n_gauss),
                        None if self.n_psi is None else even(self.n_psi))


def grid_axes(grid: GridSpec):
    """The psi, eta and xi axes of the tensor grid (xi is shared by xi1 and xi2)."""
    psi = np.pi * np.arange(grid.npsi) / grid.npsi
    xi = 2 * np.pi * np.arange(grid.n_periodic) / grid.n_periodic
    t, _ = np.polynomial.legendre.leggauss(grid.n_gauss)
    return psi, (t + 1) * np.pi / 4, xi


def cycle_nodes(R: float, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature nodes on U(2)_R and weights already multiplied by the dV density.

    Nodes are ordered as a C-ordered (psi, eta, xi1, xi2) tensor grid.
    """
    npsi, nper = grid.npsi, grid.n_periodic
    psi, eta, xi = grid_axes(grid)
    _, gw = np.polynomial.legendre.leggauss(grid.n_gauss)
    geta = gw * np.pi / 4 * np.sin(eta) * np.cos(eta)
    P, E, X1, X2 = np.meshgrid(psi, eta, xi, xi, indexing="ij")
    Wg = np.broadcast_to(geta[None, :, None, None], P.shape)
    Z = cycle_embed(R, P.ravel(), hopf_to_s3(E.ravel(), X1.ravel(), X2.ravel()))
    w = (np.pi / npsi) * (2 * np.pi / nper) ** 2 * Wg.ravel() * cycle_weight(R, P.ravel())
    return Z, w


def _grid_sum(f, R, grid, chunk=1 << 16):
    Z, w = cycle_nodes(R, grid)
    total = 0j
    for s in range(0, len(w), chunk):
        total += np.sum(np.asarray(f(Z[s:s + chunk])) * w[s:s + chunk])
    return complex(total)


def cycle_integrate(f, R: float, grid: GridSpec = GridSpec(), rtol: float | None = None,
                    atol: float = 0.0) -> EvalResult:
    """Integrate ``f(Z) dV`` over U(2)_R; ``f`` must accept a ``(m, 2, 2)`` batch.

    The error estimate compares against a grid coarsened by 3/4 in every
    direction; with spectral convergence this overestimates the true error.
    """
    fine = _grid_sum(f, R, grid)
    coarse = _grid_sum(f, R, grid.scaled(0.75))
    err = abs(fine - coarse)
    if rtol is not None and err > atol + rtol * abs(fine):
        raise GridTooCoarse(f"refinement disagreement {err:.3e} exceeds tolerance")
    return EvalResult(fine, err, "quadrature", grid.size + grid.scaled(0.75).size,
                      {"R": R, "n_periodic": grid.n_periodic, "n_gauss": grid.n_gauss, "n_psi": grid.npsi})


# --- sampling ---------------------------------------------------------------

def random_unitary(rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    return np.asarray(unitary_group.rvs(2, size=size or 1, random_state=rng)).reshape((-1, 2, 2) if size else (2, 2))


def random_u22_algebra(rng: np.random.Generator) -> np.ndarray:
    """Random X in u(2,2): X = (A B; B* D) with A, D anti-Hermitian."""
    def antiherm():
        M = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        return (M - dagger(M)) / 2
    B = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    return np.block([[antiherm(), B], [dagger(B), antiherm()]])


def sample_group_element(R: float, epsilon: float, seed=None) -> GroupElement:
    """exp(epsilon X) for random X in the Lie algebra of U(2,2)_R."""
    rng = np.random.default_rng(seed)
    X = random_u22_algebra(rng)
    S = np.diag([R, R, 1, 1]).astype(complex)
    h = scipy.linalg.expm(epsilon * X)
    return GroupElement(S @ h @ np.linalg.inv(S))


def sample_compact_element(seed=None) -> GroupElement:
    """Random element of the maximal compact subgroup U(2) x U(2)."""
    rng = np.random.default_rng(seed)
    Z0 = np.zeros((2, 2))
    return GroupElement.from_blocks(random_unitary(rng), Z0, Z0, random_unitary(rng))
