"""Exact Laurent polynomials in several 2x2 matrix variables.

A term is a tuple with five integers per block, ``(a11, a12, a21, a22, p)``,
meaning ``z11^a11 z12^a12 z21^a21 z22^a22 N(Z)^{-p}`` for that block's
variable.  Terms are not reduced modulo N: every operation used here (products
and the cycle integral) is well defined on the unreduced representation.

The integral over a cycle uses the monomial moment rule, already normalized
by i/(2 pi^3), so integrating a block is a single pass over the terms.
"""
from __future__ import annotations

from collections import defaultdict
from functools import lru_cache
from math import factorial

from gmpy2 import mpq

from .laurent import LaurentPoly, exact, to_complex

_W = 5


@lru_cache(maxsize=None)
def moment(i: int, j: int):
    return mpq((-1) ** j * factorial(i) * factorial(j), factorial(i + j + 1))


class MPoly:
    """Sparse exact polynomial over named matrix blocks."""

    __slots__ = ("blocks", "terms")

    def __init__(self, blocks: tuple, terms=None):
        self.blocks = tuple(blocks)
        self.terms = {k: v for k, v in (terms or {}).items() if v != 0}

    # --- construction ----------------------------------------------------------
    def _slot(self, name: str) -> int:
        return _W * self.blocks.index(name)

    def _key(self, parts: dict) -> tuple:
        key = [0] * (_W * len(self.blocks))
        for name, v in parts.items():
            s = self._slot(name)
            for i, x in enumerate(v):
                key[s + i] += x
        return tuple(key)

    @classmethod
    def one(cls, blocks) -> "MPoly":
        return cls(blocks, {(0,) * (_W * len(blocks)): mpq(1)})

    @classmethod
    def from_laurent(cls, blocks, name: str, f: LaurentPoly) -> "MPoly":
        out = cls(blocks)
        out.terms = {out._key({name: k}): exact(c) for k, c in f.terms.items()}
        return out

    @classmethod
    def norm(cls, blocks, name: str) -> "MPoly":
        out = cls(blocks)
        out.terms = {out._key({name: (1, 0, 0, 1, 0)}): mpq(1), out._key({name: (0, 1, 1, 0, 0)}): mpq(-1)}
        return out

    @classmethod
    def polar(cls, blocks, x: str, y: str) -> "MPoly":
        """x11 y22 + x22 y11 - x12 y21 - x21 y12."""
        out = cls(blocks)
        e = [(1, 0, 0, 0, 0), (0, 1, 0, 0, 0), (0, 0, 1, 0, 0), (0, 0, 0, 1, 0)]
        pairs = [(0, 3, 1), (3, 0, 1), (1, 2, -1), (2, 1, -1)]
        out.terms = {out._key({x: e[i], y: e[j]}): mpq(s) for i, j, s in pairs}
        return out

    # --- arithmetic --------------------------------------------------------------
    def __add__(self, other: "MPoly") -> "MPoly":
        t = dict(self.terms)
        for k, v in other.terms.items():
            t[k] = t.get(k, 0) + v
        return MPoly(self.blocks, t)

    def __sub__(self, other: "MPoly") -> "MPoly":
        return self + other.scale(-1)

    def scale(self, c) -> "MPoly":
        c = exact(c)
        return MPoly(self.blocks, {k: v * c for k, v in self.terms.items()})

    def mul(self, other: "MPoly", keep=None) -> "MPoly":
        """Product; ``keep(key)`` may discard terms as they are formed."""
        t = defaultdict(int)
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                if keep is None or keep(k):
                    t[k] += v1 * v2
        return MPoly(self.blocks, t)

    __mul__ = mul

    def shift_npower(self, name: str, p: int) -> "MPoly":
        s = self._slot(name) + 4
        return MPoly(self.blocks, {k[:s] + (k[s] + p,) + k[s + 1:]: v for k, v in self.terms.items()})

    # --- structure ------------------------------------------------------------------
    def degree_in(self, key: tuple, name: str) -> int:
        s = self._slot(name)
        return sum(key[s:s + 4]) - 2 * key[s + 4]

    def involves(self, name: str) -> bool:
        s = self._slot(name)
        return any(any(k[s:s + _W]) for k in self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    # --- integration ---------------------------------------------------------------
    def integrate(self, name: str) -> "MPoly":
        """Normalized cycle integral over the block ``name``."""
        s = self._slot(name)
        t = defaultdict(int)
        for k, v in self.terms.items():
            a11, a12, a21, a22, p = k[s:s + _W]
            if a11 != a22 or a12 != a21 or a11 + a12 - p != -2:
                continue
            t[k[:s] + (0,) * _W + k[s + _W:]] += v * moment(a11, a12)
        return MPoly(self.blocks, t)

    # --- conversion -----------------------------------------------------------------
    def split(self, name: str) -> dict:
        """Group as {rest-key: LaurentPoly in ``name``}."""
        s = self._slot(name)
        out = defaultdict(dict)
        for k, v in self.terms.items():
            rest = k[:s] + (0,) * _W + k[s + _W:]
            out[rest][k[s:s + _W]] = out[rest].get(k[s:s + _W], 0) + v
        return {r: LaurentPoly(t) for r, t in out.items()}

    def to_laurent(self, name: str) -> LaurentPoly:
        parts = self.split(name)
        if set(parts) - {(0,) * (_W * len(self.blocks))}:
            raise ValueError(f"polynomial involves blocks other than {name}")
        return next(iter(parts.values()), LaurentPoly())

    def evaluate(self, points: dict) -> complex:
        import numpy as np
        vals = {}
        for name, Z in points.items():
            Z = np.asarray(Z, dtype=complex)
            vals[name] = (Z[0, 0], Z[0, 1], Z[1, 0], Z[1, 1], Z[0, 0] * Z[1, 1] - Z[0, 1] * Z[1, 0])
        total = 0j
        for k, v in self.terms.items():
            term = to_complex(v)
            for name, (z11, z12, z21, z22, n) in vals.items():
                s = self._slot(name)
                a = k[s:s + _W]
                term *= z11 ** a[0] * z12 ** a[1] * z21 ** a[2] * z22 ** a[3] * n ** (-a[4])
            total += term
        return complex(total)


def kernel(blocks, outer: str, inner: str, dmax: int) -> list:
    """Graded parts of 1/N(outer - inner): [N(X)^{-1-d} P_d(X, Y) for d <= dmax]."""
    if dmax < 0:
        return []
    x = MPoly.polar(blocks, outer, inner)
    nn = MPoly.norm(blocks, outer) * MPoly.norm(blocks, inner)
    P = [MPoly.one(blocks)]
    if dmax >= 1:
        P.append(x)
    for d in range(2, dmax + 1):
        P.append(x * P[d - 1] - nn * P[d - 2])
    return [p.shift_npower(outer, 1 + d) for d, p in enumerate(P)]


def dashed(blocks, x: str, y: str) -> MPoly:
    """N(x - y) = N(x) - polar(x, y) + N(y)."""
    return MPoly.norm(blocks, x) - MPoly.polar(blocks, x, y) + MPoly.norm(blocks, y)
