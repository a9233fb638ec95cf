"""Matrix coefficients t^l_{nm}, the basis N^k t^l_{nm}, pairings and actions.

All half-integers are stored doubled: ``twoL = 2l`` and so on.  The basis
label ``CoeffIndex(k, twoL, twoN, twoM)`` stands for ``N(Z)^k t^l_{n m}(Z)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import gmpy2
import numpy as np
import sympy

from . import hc
from .errors import IndexOutOfRange, NotHarmonic, NotInSpan, SingularW
from .laurent import LaurentPoly, exact, to_complex

mpq = gmpy2.mpq


@dataclass(frozen=True, order=True)
class CoeffIndex:
    k: int
    twoL: int
    twoN: int
    twoM: int

    def __post_init__(self):
        validate_index(self.twoL, self.twoN, self.twoM)

    @property
    def l(self) -> float:
        return self.twoL / 2

    def is_harmonic(self) -> bool:
        """Labels of H+ (k = 0) and H- (k = -(2l+1))."""
        return self.k == 0 or self.k == -(self.twoL + 1)


def validate_index(twoL: int, twoN: int, twoM: int) -> None:
    if twoL < 0:
        raise IndexOutOfRange(f"2l = {twoL} < 0")
    if (twoN - twoL) % 2 or (twoM - twoL) % 2:
        raise IndexOutOfRange(f"parity mismatch: 2l={twoL}, 2n={twoN}, 2m={twoM}")
    if abs(twoN) > twoL or abs(twoM) > twoL:
        raise IndexOutOfRange(f"|n| or |m| exceeds l: 2l={twoL}, 2n={twoN}, 2m={twoM}")


def labels(twoL_max: int, k_values=(0,)):
    """All core labels with 2l <= twoL_max and k in ``k_values``."""
    for k in k_values:
        for twoL in range(twoL_max + 1):
            for twoN in range(-twoL, twoL + 1, 2):
                for twoM in range(-twoL, twoL + 1, 2):
                    yield CoeffIndex(k, twoL, twoN, twoM)


# --- matrix coefficients ------------------------------------------------------

@lru_cache(maxsize=None)
def _tcoeff_terms(twoL: int, twoN: int, twoM: int) -> tuple:
    validate_index(twoL, twoN, twoM)
    lm, lp, ln = (twoL - twoM) // 2, (twoL + twoM) // 2, (twoL - twoN) // 2
    mn = (twoM + twoN) // 2
    out = []
    for j in range(0, min(lm, ln) + 1):
        if mn + j < 0:
            continue
        out.append(((j, ln - j, lm - j, mn + j), comb(lm, j) * comb(lp, ln - j)))
    return tuple(out)


def tcoeff_poly(twoL: int, twoN: int, twoM: int) -> LaurentPoly:
    """t^l_{nm}(Z): coefficient of s^{l-n} in (s z11 + z21)^{l-m} (s z12 + z22)^{l+m}."""
    return LaurentPoly({(*a, 0): c for a, c in _tcoeff_terms(twoL, twoN, twoM)}, canonical=True)


def tmatrix(twoL: int, Z) -> np.ndarray:
    """Numeric t^l(Z) with rows n and columns m running from -l to l; batched over Z."""
    Z = np.asarray(Z, dtype=complex)
    z11, z12, z21, z22 = Z[..., 0, 0], Z[..., 0, 1], Z[..., 1, 0], Z[..., 1, 1]
    size = twoL + 1
    out = np.zeros(Z.shape[:-2] + (size, size), dtype=complex)
    # powers up to 2l of each entry
    pw = [np.stack([z ** e for e in range(size)], axis=-1) for z in (z11, z12, z21, z22)]
    for i, twoN in enumerate(range(-twoL, twoL + 1, 2)):
        for j, twoM in enumerate(range(-twoL, twoL + 1, 2)):
            acc = 0
            for (a11, a12, a21, a22), c in _tcoeff_terms(twoL, twoN, twoM):
                acc = acc + c * pw[0][..., a11] * pw[1][..., a12] * pw[2][..., a21] * pw[3][..., a22]
            out[..., i, j] = acc
    return out


def tcoeff_inverse_relation(twoL: int, twoM: int, twoN: int):
    """Return (c, target) with t^l_{m,n}(Z^{-1}) = c N(Z)^{-2l} t^l_{-n,-m}(Z)."""
    return _inverse_relation(twoL, twoM, twoN)


@lru_cache(maxsize=None)
def _inverse_relation(twoL: int, twoM: int, twoN: int):
    # t(Z^{-1}) = t(adj Z) / N^{2l}, adj Z = (z22 -z12; -z21 z11)
    adj = {}
    for (a11, a12, a21, a22), c in _tcoeff_terms(twoL, twoM, twoN):
        adj[(a22, a12, a21, a11)] = c * (-1) ** (a12 + a21)
    target = dict(_tcoeff_terms(twoL, -twoN, -twoM))
    if set(adj) != set(target):
        raise NotInSpan("inverse relation: monomial supports differ")
    ratios = {mpq(adj[a], target[a]) for a in target}
    if len(ratios) != 1:
        raise NotInSpan("inverse relation: not proportional")
    return ratios.pop(), CoeffIndex(-twoL, twoL, -twoN, -twoM)


# --- basis vectors --------------------------------------------------------------

class BasisVector:
    """Finite linear combination of labels N^k t^l_{nm}."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=None):
        self.coeffs = {}
        for idx, c in (coeffs or {}).items():
            if c != 0:
                self.coeffs[idx] = self.coeffs.get(idx, 0) + c
        self.coeffs = {i: c for i, c in self.coeffs.items() if c != 0}

    @classmethod
    def single(cls, k, twoL, twoN, twoM, coeff=1) -> "BasisVector":
        return cls({CoeffIndex(k, twoL, twoN, twoM): exact(coeff)})

    def __add__(self, other: "BasisVector") -> "BasisVector":
        out = dict(self.coeffs)
        for i, c in other.coeffs.items():
            out[i] = out.get(i, 0) + c
        return BasisVector(out)

    def __sub__(self, other):
        return self + other * -1

    def __mul__(self, s) -> "BasisVector":
        return BasisVector({i: c * s for i, c in self.coeffs.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, BasisVector) and not (self - other).coeffs

    def __len__(self):
        return len(self.coeffs)

    def __repr__(self):
        body = ", ".join(f"N^{i.k} t[{i.twoL}/2;{i.twoN}/2,{i.twoM}/2]: {c}"
                         for i, c in sorted(self.coeffs.items()))
        return f"BasisVector({body})"

    def items(self):
        return self.coeffs.items()

    def is_harmonic(self) -> bool:
        return all(i.is_harmonic() for i in self.coeffs)

    def to_poly(self) -> LaurentPoly:
        out = LaurentPoly()
        for idx, c in self.coeffs.items():
            out = out + LaurentPoly.Npow(idx.k) * tcoeff_poly(idx.twoL, idx.twoN, idx.twoM) * c
        return out

    def evaluate(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=complex)
        n = hc.norm(Z)
        out = np.zeros(Z.shape[:-2], dtype=complex)
        for twoL in sorted({i.twoL for i in self.coeffs}):
            T = tmatrix(twoL, Z)
            for idx, c in self.coeffs.items():
                if idx.twoL == twoL:
                    out = out + to_complex(c) * n ** idx.k * T[..., (idx.twoN + twoL) // 2, (idx.twoM + twoL) // 2]
        return out

    def numeric(self) -> "BasisVector":
        return BasisVector({i: to_complex(c) for i, c in self.coeffs.items()})

    def to_json(self) -> str:
        rows = [{"k": i.k, "twoL": i.twoL, "twoN": i.twoN, "twoM": i.twoM,
                 "re": to_complex(c).real, "im": to_complex(c).imag}
                for i, c in sorted(self.coeffs.items())]
        return json.dumps(rows)

    @classmethod
    def from_json(cls, text: str) -> "BasisVector":
        out = {}
        for r in json.loads(text):
            c = complex(r["re"], r["im"])
            out[CoeffIndex(r["k"], r["twoL"], r["twoN"], r["twoM"])] = c if c.imag else c.real
        return cls(out)


# --- decomposition -------------------------------------------------------------

@lru_cache(maxsize=None)
def _block(e: int, twoN: int, twoM: int):
    """Monomials of degree e with weight (n, m), basis labels N^j t^{e/2-j}_{nm}, inverse matrix."""
    lo = max(0, -(twoN + twoM) // 2)
    hi = min((e - twoN) // 2, (e - twoM) // 2)
    monos = [(s, (e - twoN) // 2 - s, (e - twoM) // 2 - s, (twoN + twoM) // 2 + s) for s in range(lo, hi + 1)]
    col_index = {a: r for r, a in enumerate(monos)}
    basis = []
    for j in range(0, e // 2 + 1):
        twoL = e - 2 * j
        if twoL < max(abs(twoN), abs(twoM)):
            break
        basis.append((j, twoL))
    if len(basis) != len(monos):
        raise NotInSpan(f"block (deg {e}, 2n={twoN}, 2m={twoM}) is not square")
    M = sympy.zeros(len(monos), len(basis))
    for col, (j, twoL) in enumerate(basis):
        poly = LaurentPoly.N() ** j * tcoeff_poly(twoL, twoN, twoM)
        for key, c in poly.terms.items():
            M[col_index[key[:4]], col] = sympy.Rational(int(c.numerator), int(c.denominator))
    inv = M.inv()
    inv_q = [[mpq(int(x.p), int(x.q)) for x in inv.row(r)] for r in range(inv.rows)]
    return tuple(col_index.items()), tuple(basis), tuple(tuple(r) for r in inv_q)


def harmonic_decompose(f: LaurentPoly) -> BasisVector:
    """Exact coefficients c with f = sum c N^k t^l_{nm}."""
    blocks = {}
    for (a11, a12, a21, a22, p), c in f.terms.items():
        e = a11 + a12 + a21 + a22
        twoN = (a21 + a22) - (a11 + a12)
        twoM = (a12 + a22) - (a11 + a21)
        blocks.setdefault((p, e, twoN, twoM), {})[(a11, a12, a21, a22)] = c
    out = {}
    for (p, e, twoN, twoM), vec in blocks.items():
        monos, basis, inv = _block(e, twoN, twoM)
        x = [vec.get(a, 0) for a, _ in monos]
        for r, (j, twoL) in enumerate(basis):
            v = sum((inv[r][s] * x[s] for s in range(len(x)) if x[s] != 0), mpq(0))
            if v != 0:
                idx = CoeffIndex(j - p, twoL, twoN, twoM)
                out[idx] = out.get(idx, 0) + v
    result = BasisVector(out)
    if not (result.to_poly() - f).is_zero():
        raise NotInSpan("decomposition residual is nonzero")
    return result


def _as_basis(f) -> BasisVector:
    return f if isinstance(f, BasisVector) else harmonic_decompose(f)


# --- pairings -------------------------------------------------------------------

def orthogonality_entry(i1: CoeffIndex, i2: CoeffIndex):
    """Exact <N^k' t^l'_{n'm'}, N^k t^l_{ab}>, from the orthogonality relations."""
    if i1.twoL != i2.twoL or i1.k != -i2.k - i2.twoL - 2:
        return mpq(0)
    if i2.twoN != -i1.twoN or i2.twoM != -i1.twoM:
        return mpq(0)
    # N^k t_{ab}(Z) = N^{k+2l} t_{-b,-a}(Z^{-1}) / c(l,-b,-a)
    c, _ = tcoeff_inverse_relation(i2.twoL, -i2.twoM, -i2.twoN)
    return 1 / (mpq(i2.twoL + 1) * c)


def pairing_bilinear(f1, f2):
    """(i/2pi^3) integral over U(2)_R of f1 f2 dV, exact."""
    b1, b2 = _as_basis(f1), _as_basis(f2)
    total = mpq(0)
    for i1, c1 in b1.items():
        for i2, c2 in b2.items():
            e = orthogonality_entry(i1, i2)
            if e != 0:
                total = total + c1 * c2 * e
    return total


def monomial_moment(a11: int, a12: int, a21: int, a22: int, q: int):
    """(i/2pi^3) integral of z^a N(Z)^q dV over U(2)_R; exact."""
    if a11 + a12 + a21 + a22 + 2 * q != -4 or a11 != a22 or a12 != a21:
        return mpq(0)
    i, j = a11, a12
    return mpq((-1) ** j * gmpy2.fac(i) * gmpy2.fac(j), gmpy2.fac(i + j + 1))


def moment_pairing(f1: LaurentPoly, f2: LaurentPoly):
    """Independent exact pairing by expanding f1 f2 into monomials."""
    total = mpq(0)
    for (a11, a12, a21, a22, p), c in (f1 * f2).terms.items():
        m = monomial_moment(a11, a12, a21, a22, -p)
        if m != 0:
            total = total + c * m
    return total


def pairing_H(phi1: BasisVector, phi2: BasisVector):
    """(phi1, phi2) = <degt phi1, phi2 / N>."""
    for phi in (phi1, phi2):
        if not phi.is_harmonic():
            bad = [i for i in phi.coeffs if not i.is_harmonic()]
            raise NotHarmonic(f"non-harmonic labels: {bad[:3]}")
    d1 = BasisVector({i: c * (2 * i.k + i.twoL + 1) for i, c in phi1.items()})
    shifted = BasisVector({CoeffIndex(i.k - 1, i.twoL, i.twoN, i.twoM): c for i, c in phi2.items()})
    return pairing_bilinear(d1, shifted)


def tilde(phi: LaurentPoly) -> LaurentPoly:
    """N(Z)^{-1} phi(Z^{-1})."""
    return phi.inverted() * LaurentPoly.Ninv()


# --- expansion of 1/N(Z - W) ----------------------------------------------------

@dataclass(frozen=True)
class InvNormExpansion:
    """Truncation of 1/N(Z-W) = N(W)^{-1} sum_l tr(t^l(Z) t^l(W^{-1})) at 2l <= twoLmax."""

    W: np.ndarray
    twoLmax: int

    @property
    def Winv(self):
        return hc.invert(self.W)

    def coefficient_matrix(self, twoL: int) -> np.ndarray:
        """c_{nm} = N(W)^{-1} t^l_{mn}(W^{-1})."""
        return tmatrix(twoL, self.Winv).swapaxes(-1, -2) / hc.norm(self.W)

    def basis(self) -> BasisVector:
        out = {}
        for twoL in range(self.twoLmax + 1):
            C = self.coefficient_matrix(twoL)
            for i, twoN in enumerate(range(-twoL, twoL + 1, 2)):
                for j, twoM in enumerate(range(-twoL, twoL + 1, 2)):
                    out[CoeffIndex(0, twoL, twoN, twoM)] = complex(C[i, j])
        return BasisVector(out)

    def terms(self, Z) -> np.ndarray:
        """Values of the degree-2l parts at Z, shape (..., twoLmax + 1)."""
        Z = np.asarray(Z, dtype=complex)
        X = Z @ self.Winv
        vals = [np.trace(tmatrix(twoL, X), axis1=-2, axis2=-1) for twoL in range(self.twoLmax + 1)]
        return np.stack(vals, axis=-1) / hc.norm(self.W)

    def evaluate(self, Z):
        return self.terms(Z).sum(axis=-1)

    def ratio(self, Z) -> float:
        return float(np.max(hc.singular_values(np.asarray(Z, complex) @ self.Winv)))

    def tail_bound(self, Z) -> float:
        """Geometric tail estimate calibrated on the last computed term."""
        rho = self.ratio(Z)
        if rho >= 1:
            return float("inf")
        last = np.max(np.abs(self.terms(Z)[..., -1]))
        D = self.twoLmax
        C = last / rho ** D if rho > 0 else 0.0
        return float(C * (D + 2) / (D + 1) * rho ** (D + 1) / (1 - rho))


def expand_inv_norm(W, Lmax: float) -> InvNormExpansion:
    W = np.asarray(W, dtype=complex)
    n = hc.norm(W)
    if abs(n) <= 1e-14 * max(np.max(np.abs(W)) ** 2, 1e-300):
        raise SingularW("N(W) = 0")
    twoLmax = int(round(2 * Lmax))
    return InvNormExpansion(W, twoLmax)


# --- group actions ---------------------------------------------------------------

def _as_callable(f):
    if isinstance(f, (LaurentPoly, BasisVector)):
        return f.evaluate
    return f


def act_varpi2(side: str, h: hc.GroupElement, f):
    """Pointwise varpi_2^l or varpi_2^r; returns a callable of Z."""
    if side not in ("l", "r"):
        raise ValueError("side must be 'l' or 'r'")
    g = _as_callable(f)
    hinv = h.inverse
    pl, pr = (2, 1) if side == "l" else (1, 2)

    def out(Z):
        Z = np.asarray(Z, dtype=complex)
        n1 = hc.norm(h.c_ @ Z + h.d_)
        n2 = hc.norm(h.a - Z @ h.c)
        hc._check_pole(n1, "cZ+d")
        hc._check_pole(n2, "a'-Zc'")
        return g(hc.fractional_linear(hinv, Z)) / (n1 ** pl * n2 ** pr)

    return out


def act_pi0(side: str, h: hc.GroupElement, phi):
    """Pointwise pi^0_l or pi^0_r; returns a callable of Z."""
    if side not in ("l", "r"):
        raise ValueError("side must be 'l' or 'r'")
    g = _as_callable(phi)

    def out(Z):
        Z = np.asarray(Z, dtype=complex)
        if side == "l":
            n = hc.norm(h.c_ @ Z + h.d_)
            hc._check_pole(n, "cZ+d")
            return g(hc.fractional_linear(h.inverse, Z)) / n
        n = hc.norm(h.a - Z @ h.c)
        hc._check_pole(n, "a'-Zc'")
        return g(hc.fractional_linear_alt(h.inverse, Z)) / n

    return out


def varpi2_compact_poly(side: str, h: hc.GroupElement, f: LaurentPoly) -> LaurentPoly:
    """Symbolic varpi_2 action of a block-diagonal h = diag(a', d'): stays inside Zh."""
    if np.max(np.abs(h.b)) > 1e-14 or np.max(np.abs(h.c)) > 1e-14:
        raise ValueError("h must be block diagonal")
    a, d = h.a_, h.d_
    pl, pr = (2, 1) if side == "l" else (1, 2)
    scale = 1.0 / (complex(np.linalg.det(d)) ** pl * complex(np.linalg.det(h.a)) ** pr)
    return f.substitute_linear(a, np.linalg.inv(d)) * scale


# --- subspaces -------------------------------------------------------------------

def classify_subspace(idx: CoeffIndex) -> frozenset:
    k, tl = idx.k, idx.twoL
    flags = set()
    if k >= 0:
        flags.add("Zh+")
    if k <= -(tl + 3):
        flags.add("Zh2-")
    if k <= -2:
        flags.add("I2-")
    if k >= -(tl + 1):
        flags.add("I2+")
    if -(tl + 1) <= k <= -2:
        flags.add("J2")
    return frozenset(flags)
