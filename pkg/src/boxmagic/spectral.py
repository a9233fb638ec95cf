"""Numeric spectral evaluation of box integrals.

Each internal vertex u is integrated out exactly: factors 1/N(Y - u) are
expanded in homogeneous polynomials of u (outer neighbours) or in
N(u)^{-1-d} P_d(u, Y) (inner neighbours), products are formed degree by
degree, and the cycle integral is applied with the monomial moment rule

    (i/2pi^3) int z^a N^q dV = (-1)^j i! j! / (i+j+1)!   if a = (i, j, j, i),

so no quadrature is involved.  Vertices are eliminated from the largest
radius inwards; an eliminated vertex passes a polynomial message to its
(unique) remaining inner internal neighbour.
"""
from __future__ import annotations

from functools import lru_cache
from math import comb, factorial

import numpy as np
import scipy.sparse as sp

from . import hc
from .diagrams import EXTERNALS, BoxDiagram, CycleAssignment, EvalPoint
from .errors import SingularConfiguration, TruncationInsufficient
from .results import EvalResult

_B = 256  # exponent base for monomial codes


# --- monomial tables ------------------------------------------------------------

@lru_cache(maxsize=None)
def monomials(e: int) -> np.ndarray:
    """Exponent vectors (a11, a12, a21, a22) of total degree e, sorted by code."""
    rows = [(a, b, c, e - a - b - c) for a in range(e + 1) for b in range(e + 1 - a) for c in range(e + 1 - a - b)]
    arr = np.array(rows, dtype=np.int64).reshape(-1, 4)
    return arr[np.argsort(_codes(arr))]


def _codes(arr) -> np.ndarray:
    return arr[:, 0] + _B * (arr[:, 1] + _B * (arr[:, 2] + _B * arr[:, 3]))


@lru_cache(maxsize=None)
def codes(e: int) -> np.ndarray:
    return _codes(monomials(e))


def nmono(e: int) -> int:
    return (e + 1) * (e + 2) * (e + 3) // 6


def index_of(e: int, arr) -> np.ndarray:
    return np.searchsorted(codes(e), _codes(np.asarray(arr).reshape(-1, 4)))


@lru_cache(maxsize=None)
def product_matrix(e1: int, e2: int) -> sp.csr_matrix:
    """Scatter matrix S with (A*B)_{e1+e2} = S @ outer(A, B).ravel()."""
    c = (codes(e1)[:, None] + codes(e2)[None, :]).ravel()
    rows = np.searchsorted(codes(e1 + e2), c)
    n = rows.size
    return sp.csr_matrix((np.ones(n), (rows, np.arange(n))), shape=(nmono(e1 + e2), n))


def poly_mul(A: np.ndarray, e1: int, B: np.ndarray, e2: int) -> np.ndarray:
    return product_matrix(e1, e2) @ np.outer(A, B).ravel()


@lru_cache(maxsize=None)
def _moment_value(i: int, j: int) -> float:
    return (-1) ** j * factorial(i) * factorial(j) / factorial(i + j + 1)


@lru_cache(maxsize=None)
def moment_matrix(e_from: int, e_to: int) -> sp.csr_matrix:
    """M with (M @ C)_b = sum_a C_a mu(a + b), a of degree e_from, b of degree e_to."""
    if (e_from + e_to) % 2:
        return sp.csr_matrix((nmono(e_to), nmono(e_from)))
    h = (e_from + e_to) // 2
    A = monomials(e_from)
    rows, cols, vals = [], [], []
    for i in range(h + 1):
        j = h - i
        B = np.stack([i - A[:, 0], j - A[:, 1], j - A[:, 2], i - A[:, 3]], axis=1)
        ok = np.all(B >= 0, axis=1)
        if not ok.any():
            continue
        rows.append(index_of(e_to, B[ok]))
        cols.append(np.nonzero(ok)[0])
        vals.append(np.full(ok.sum(), _moment_value(i, j)))
    if not rows:
        return sp.csr_matrix((nmono(e_to), nmono(e_from)))
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(nmono(e_to), nmono(e_from)))


@lru_cache(maxsize=None)
def _polar_tables(e: int):
    """Reversal permutation and signed multinomials for polar(u, Y)^e = sum c_g u^{rev g} Y^g."""
    M = monomials(e)
    rev = index_of(e, M[:, ::-1])
    mult = np.array([factorial(e) // (factorial(a) * factorial(b) * factorial(c) * factorial(d))
                     * (-1) ** (b + c) for a, b, c, d in M], dtype=float)
    return rev, mult


_N_VEC = np.zeros(nmono(2), dtype=complex)
_N_VEC[index_of(2, [(1, 0, 0, 1)])] = 1
_N_VEC[index_of(2, [(0, 1, 1, 0)])] = -1


@lru_cache(maxsize=None)
def npow(j: int) -> np.ndarray:
    """Monomial vector of N(u)^j (degree 2j)."""
    if j == 0:
        return np.ones(1, dtype=complex)
    return poly_mul(npow(j - 1), 2 * j - 2, _N_VEC, 2)


def polar_vec(Y) -> np.ndarray:
    """polar(u, Y) as a degree-1 vector in u."""
    v = np.zeros(4, dtype=complex)
    v[index_of(1, [(1, 0, 0, 0)])] = Y[1, 1]
    v[index_of(1, [(0, 1, 0, 0)])] = -Y[1, 0]
    v[index_of(1, [(0, 0, 1, 0)])] = -Y[0, 1]
    v[index_of(1, [(0, 0, 0, 1)])] = Y[0, 0]
    return v


# --- graded series -----------------------------------------------------------------

def outer_series(Y, D: int) -> list:
    """Degree parts F_d(u) of 1/N(Y - u) for u inside Y."""
    nY = complex(hc.norm(Y))
    q1 = -polar_vec(Y)
    F = [np.array([1 / nY])]
    for d in range(1, D + 1):
        acc = poly_mul(q1, 1, F[d - 1], d - 1)
        if d >= 2:
            acc = acc + poly_mul(_N_VEC, 2, F[d - 2], d - 2)
        F.append(-acc / nY)
    return F


def inner_series(Y, D: int) -> list:
    """P_d(u, Y) with 1/N(u - Y) = sum_d N(u)^{-1-d} P_d(u, Y) for Y inside u."""
    nY = complex(hc.norm(Y))
    x = polar_vec(Y)
    P = [np.ones(1, dtype=complex)]
    if D >= 1:
        P.append(x.copy())
    for d in range(2, D + 1):
        P.append(poly_mul(x, 1, P[d - 1], d - 1) - nY * poly_mul(_N_VEC, 2, P[d - 2], d - 2))
    return P


def dashed_series(Y, D: int) -> list:
    """N(Y - u) = N(Y) - polar(Y, u) + N(u) as graded parts."""
    parts = [np.array([complex(hc.norm(Y))]), -polar_vec(Y), _N_VEC.copy()]
    return [parts[d] if d < 3 else np.zeros(nmono(d), complex) for d in range(D + 1)]


def graded_product(A: list, B: list, D: int) -> list:
    out = []
    for s in range(D + 1):
        acc = np.zeros(nmono(s), dtype=complex)
        for i in range(max(0, s - len(B) + 1), min(s, len(A) - 1) + 1):
            a, b = A[i], B[s - i]
            if np.any(a) and np.any(b):
                acc = acc + poly_mul(a, i, b, s - i)
        out.append(acc)
    return out


def _product(series: list, D: int) -> list:
    out = [np.ones(1, dtype=complex)] + [np.zeros(nmono(d), complex) for d in range(1, D + 1)]
    for s in series:
        out = graded_product(out, s, D)
    return out


# --- vertex elimination ---------------------------------------------------------------

def _neighbour_kind(d: BoxDiagram, u: str, y: str) -> str:
    if d.precedes(u, y):
        return "outer"
    if d.precedes(y, u):
        return "inner"
    raise SingularConfiguration(f"edge {u}-{y} joins incomparable vertices")


def elimination_order(d: BoxDiagram, a: CycleAssignment, order: str = "decreasing") -> list:
    if order not in ("decreasing", "increasing"):
        raise ValueError("order must be 'decreasing' or 'increasing'")
    sign = -1 if order == "decreasing" else 1
    return sorted(d.internals, key=lambda t: sign * a.r[t])


def integrate_vertex(outer: list, inner: list, D: int) -> complex:
    """Normalized cycle integral of prod(outer) * prod(inner); only s = e + 2k - 4 survives."""
    k = len(inner)
    O = _product(outer, D)
    I = _product(inner, D)
    total = 0j
    for e in range(D + 1):
        s = e + 2 * k - 4
        if 0 <= s <= D:
            total += O[s] @ (moment_matrix(e, s) @ I[e])
    return total


def kernel_message(outer: list, inner: list, D: int, towards: str) -> list:
    """Integrate u against its factors times the kernel 1/N(u - Y); graded Q_d(Y).

    ``towards="inner"``: Y is inside u and the message is the polynomial sum_d Q_d(Y).
    ``towards="outer"``: Y is outside u and the message is sum_d N(Y)^{-1-d} Q_d(Y).
    """
    k = len(inner)
    O = _product(outer, D)
    I = _product(inner, D)
    msg = []
    for d in range(D + 1):
        lam = {}
        for e in range(D + 1):
            s = e + 2 * k + d - 2 if towards == "inner" else e + 2 * k - 4 - d
            if s < 0 or s > D or not np.any(O[s]) or not np.any(I[e]):
                continue
            C = poly_mul(O[s], s, I[e], e)
            for j in range(d // 2 + 1):
                lam[j] = lam.get(j, 0) + moment_matrix(s + e, d - 2 * j) @ C
        out = np.zeros(nmono(d), dtype=complex)
        for j, v in lam.items():
            g = d - 2 * j
            rev, mult = _polar_tables(g)
            out = out + (-1) ** j * comb(d - j, j) * poly_mul(npow(j), 2 * j, mult * v[rev], g)
        msg.append(out)
    return msg


def _external_scalar(d: BoxDiagram, pts: dict) -> complex:
    scalar = 1.0 + 0j
    for x, y in d.dashed:
        if x in EXTERNALS and y in EXTERNALS:
            scalar *= complex(hc.norm(pts[x] - pts[y]))
    for x, y in d.solid:
        if x in EXTERNALS and y in EXTERNALS:
            scalar /= complex(hc.norm(pts[x] - pts[y]))
    return scalar


def _collect(d: BoxDiagram, u: str, pts: dict, done: set, messages: dict, D: int, external: bool = True):
    """Factors at u: graded outer/inner series, plus remaining internal neighbours."""
    outer, inner = list(messages[u]["outer"]), list(messages[u]["inner"])
    pending = []
    for y, kind in d.edges_at(u):
        if y in done:
            continue
        if y in EXTERNALS:
            if not external:
                continue
            side = _neighbour_kind(d, u, y)
            if kind == -1:
                outer.append(dashed_series(pts[y], D))
            elif side == "outer":
                outer.append(outer_series(pts[y], D))
            else:
                inner.append(inner_series(pts[y], D))
        else:
            if kind == -1:
                raise NotImplementedError("dashed edges between internal vertices are not supported spectrally")
            pending.append(y)
    return outer, inner, pending


def reduce_to_vertex(d: BoxDiagram, a: CycleAssignment, p: EvalPoint, D: int, keep: str | None = None,
                     order: str = "decreasing"):
    """Eliminate every internal vertex except ``keep``.

    Returns ``(scalar, outer, inner)``: the product of completed integrals and the
    graded messages arriving at ``keep`` (empty lists if ``keep`` is None).
    """
    pts = p.as_dict()
    scalar = _external_scalar(d, pts)
    messages = {t: {"outer": [], "inner": []} for t in d.internals}
    done = set()
    for u in elimination_order(d, a, order):
        if u == keep:
            continue
        outer, inner, pending = _collect(d, u, pts, done, messages, D)
        if len(pending) > 1:
            raise NotImplementedError(
                f"vertex {u} has {len(pending)} remaining internal neighbours; spectral elimination supports one")
        if pending:
            y = pending[0]
            towards = "inner" if d.precedes(y, u) else "outer"
            if not d.comparable(u, y):
                raise SingularConfiguration(f"edge {u}-{y} joins incomparable vertices")
            # a polynomial message acts on y like an outer factor, a Laurent one like an inner factor
            slot = "outer" if towards == "inner" else "inner"
            messages[y][slot].append(kernel_message(outer, inner, D, towards))
        else:
            scalar *= integrate_vertex(outer, inner, D)
        done.add(u)
    if keep is None:
        return scalar, [], []
    return scalar, messages[keep]["outer"], messages[keep]["inner"]


def spectral_value(d: BoxDiagram, a: CycleAssignment, p: EvalPoint, D: int, order: str = "decreasing") -> complex:
    return reduce_to_vertex(d, a, p, D, None, order)[0]


def eval_spectral(d: BoxDiagram, a: CycleAssignment, p: EvalPoint, Lmax: float = 8,
                  tol: float | None = None, order: str = "decreasing") -> EvalResult:
    """Spectral value of l^(n); error = |value(Lmax) - value(Lmax - 1)|."""
    D = int(round(2 * Lmax))
    value = spectral_value(d, a, p, D, order)
    coarse = spectral_value(d, a, p, max(D - 2, 0), order)
    err = float(abs(value - coarse))
    if tol is not None and err > tol * max(abs(value), 1e-300):
        raise TruncationInsufficient(f"tail estimate {err:.3g} exceeds tolerance at Lmax={Lmax}")
    return EvalResult(complex(value), err, "spectral", cost=D, meta={"Lmax": Lmax, "order": order})


# --- graded series on a cycle grid ---------------------------------------------------

def series_on_grid(series: list, R: float, grid: hc.GridSpec, laurent: bool = False) -> np.ndarray:
    """Values of sum_d Q_d(T) (or sum_d N(T)^{-1-d} Q_d(T)) at the nodes of ``cycle_nodes``.

    On U(2)_R the monomial T^a factorizes into a psi phase, an eta profile and
    two Fourier modes in xi1, xi2, so the sum is a small matrix product.
    """
    psi, eta, xi = hc.grid_axes(grid)
    D = len(series) - 1
    modes = np.arange(-D, D + 1)
    E = np.exp(1j * np.outer(xi, modes))
    cols, rows = [], []
    ce, se = np.cos(eta), np.sin(eta)
    phase = R * np.exp(1j * psi)
    for d, vec in enumerate(series):
        if not np.any(vec):
            continue
        M = monomials(d)
        pp = M[:, 0] + M[:, 3]
        d1 = M[:, 3] - M[:, 0] + D
        d2 = M[:, 2] - M[:, 1] + D
        radial_psi = phase ** d if not laurent else phase ** d * (R * R * np.exp(2j * psi)) ** (-1 - d)
        for pv in np.unique(pp):
            sel = pp == pv
            G = np.zeros((2 * D + 1, 2 * D + 1), dtype=complex)
            G[d1[sel], d2[sel]] = vec[sel] * (-1j) ** (d - pv)
            rows.append((E @ G @ E.T).ravel())
            cols.append(np.outer(radial_psi, ce ** pv * se ** (d - pv)).ravel())
    if not rows:
        return np.zeros(grid.size, dtype=complex)
    return (np.stack(cols, axis=1) @ np.stack(rows, axis=0)).ravel()
