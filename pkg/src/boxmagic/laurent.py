"""Exact Laurent polynomials in z11, z12, z21, z22 and N(Z)^{-1}.

Terms are stored as ``{(a11, a12, a21, a22, p): coeff}`` meaning
``coeff * z11^a11 z12^a12 z21^a21 z22^a22 * N(Z)^{-p}``.  Coefficients are
``gmpy2.mpq`` (or sympy ``QQ_I`` Gaussian rationals) for exact work; plain
Python complex numbers are accepted for numeric work.

Canonical form: when ``p > 0`` no monomial contains both z11 and z22, i.e.
the polynomial attached to N^{-p} is reduced modulo N with leading term
z11 z22.  This representation is unique.
"""
from __future__ import annotations

from collections import defaultdict
from fractions import Fraction
from numbers import Number

import gmpy2
import numpy as np
from sympy.polys.domains import QQ_I

Key = tuple  # (a11, a12, a21, a22, p)
GaussQ = type(QQ_I(0, 1))


def exact(c):
    """Coerce ints, Fractions and Gaussian-integer complex numbers to exact scalars."""
    if isinstance(c, (type(gmpy2.mpq()), GaussQ)):
        return c
    if isinstance(c, (int, Fraction)):
        return gmpy2.mpq(c)
    if isinstance(c, complex) and c.imag == int(c.imag) and c.real == int(c.real):
        return QQ_I(int(c.real), int(c.imag)) if c.imag else gmpy2.mpq(int(c.real))
    return c


def to_complex(c) -> complex:
    if isinstance(c, GaussQ):
        return complex(float(c.x), float(c.y))
    return complex(c)


def is_zero(c) -> bool:
    return c == 0


class LaurentPoly:
    __slots__ = ("terms",)

    def __init__(self, terms=None, *, canonical: bool = False):
        t = {}
        for k, v in (terms or {}).items():
            v = exact(v)
            if not is_zero(v):
                t[tuple(k)] = t.get(tuple(k), 0) + v
        self.terms = {k: v for k, v in t.items() if not is_zero(v)}
        if not canonical:
            self._reduce()

    # --- constructors -------------------------------------------------------
    @classmethod
    def const(cls, c) -> "LaurentPoly":
        return cls({(0, 0, 0, 0, 0): c})

    @classmethod
    def var(cls, i: int, j: int) -> "LaurentPoly":
        a = [0, 0, 0, 0]
        a[2 * (i - 1) + (j - 1)] = 1
        return cls({(*a, 0): 1})

    @classmethod
    def N(cls) -> "LaurentPoly":
        return cls({(1, 0, 0, 1, 0): 1, (0, 1, 1, 0, 0): -1})

    @classmethod
    def Ninv(cls, power: int = 1) -> "LaurentPoly":
        return cls({(0, 0, 0, 0, power): 1})

    @classmethod
    def Npow(cls, k: int) -> "LaurentPoly":
        return cls.Ninv(-k) if k < 0 else cls.N() ** k

    # --- canonical reduction -----------------------------------------------
    def _reduce(self):
        work = dict(self.terms)
        out = defaultdict(int)
        while work:
            key, c = work.popitem()
            a11, a12, a21, a22, p = key
            if p > 0 and a11 > 0 and a22 > 0:
                # z11 z22 = N + z12 z21
                for k2, c2 in (((a11 - 1, a12, a21, a22 - 1, p - 1), c),
                               ((a11 - 1, a12 + 1, a21 + 1, a22 - 1, p), c)):
                    nv = work.get(k2, 0) + c2
                    if is_zero(nv):
                        work.pop(k2, None)
                    else:
                        work[k2] = nv
            else:
                out[key] += c
        self.terms = {k: v for k, v in out.items() if not is_zero(v)}

    # --- arithmetic ----------------------------------------------------------
    def __add__(self, other):
        other = _lift(other)
        t = dict(self.terms)
        for k, v in other.terms.items():
            t[k] = t.get(k, 0) + v
        return LaurentPoly({k: v for k, v in t.items() if not is_zero(v)}, canonical=True)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly({k: -v for k, v in self.terms.items()}, canonical=True)

    def __sub__(self, other):
        return self + (-_lift(other))

    def __rsub__(self, other):
        return _lift(other) - self

    def __mul__(self, other):
        if isinstance(other, Number) or isinstance(other, (GaussQ, type(gmpy2.mpq()))):
            c = exact(other)
            if is_zero(c):
                return LaurentPoly()
            return LaurentPoly({k: v * c for k, v in self.terms.items()}, canonical=True)
        other = _lift(other)
        t = defaultdict(int)
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                t[tuple(x + y for x, y in zip(k1, k2))] += v1 * v2
        return LaurentPoly(t)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers are only available for N via Ninv")
        out, base = LaurentPoly.const(1), self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        try:
            other = _lift(other)
        except TypeError:
            return NotImplemented
        return (self - other).is_zero()

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    def __repr__(self):
        if not self.terms:
            return "LaurentPoly(0)"
        parts = []
        for (a11, a12, a21, a22, p), c in sorted(self.terms.items()):
            mono = "*".join(f"{n}^{e}" if e > 1 else n for n, e in
                            (("z11", a11), ("z12", a12), ("z21", a21), ("z22", a22), ("Ninv", p)) if e)
            parts.append(f"({c})" + (f"*{mono}" if mono else ""))
        return "LaurentPoly(" + " + ".join(parts) + ")"

    # --- structure -------------------------------------------------------------
    def degrees(self) -> set[int]:
        return {a11 + a12 + a21 + a22 - 2 * p for a11, a12, a21, a22, p in self.terms}

    def homogeneous_part(self, d: int) -> "LaurentPoly":
        return LaurentPoly({k: v for k, v in self.terms.items()
                            if sum(k[:4]) - 2 * k[4] == d}, canonical=True)

    def is_polynomial(self) -> bool:
        return all(k[4] == 0 for k in self.terms)

    def max_npower(self) -> int:
        return max((k[4] for k in self.terms), default=0)

    # --- calculus --------------------------------------------------------------
    def diff(self, i: int, j: int) -> "LaurentPoly":
        """Partial derivative in z_ij; N^{-p} is differentiated by the chain rule."""
        idx = 2 * (i - 1) + (j - 1)
        # dN/dz_ij: z22, -z21, -z12, z11
        dN = {0: ((0, 0, 0, 1), 1), 1: ((0, 0, 1, 0), -1), 2: ((0, 1, 0, 0), -1), 3: ((1, 0, 0, 0), 1)}[idx]
        t = defaultdict(int)
        for k, c in self.terms.items():
            a, p = list(k[:4]), k[4]
            if a[idx]:
                b = a.copy()
                b[idx] -= 1
                t[(*b, p)] += c * a[idx]
            if p:
                b = [x + y for x, y in zip(a, dN[0])]
                t[(*b, p + 1)] += -p * c * dN[1]
        return LaurentPoly(t)

    def box(self) -> "LaurentPoly":
        """4 (d^2/dz11 dz22 - d^2/dz12 dz21)."""
        return (self.diff(1, 1).diff(2, 2) - self.diff(1, 2).diff(2, 1)) * 4

    def euler(self) -> "LaurentPoly":
        """sum z_ij d/dz_ij, computed from the derivatives."""
        return sum((LaurentPoly.var(i, j) * self.diff(i, j) for i in (1, 2) for j in (1, 2)), LaurentPoly())

    # --- evaluation and substitution --------------------------------------------
    def evaluate(self, Z):
        Z = np.asarray(Z, dtype=complex)
        z = (Z[..., 0, 0], Z[..., 0, 1], Z[..., 1, 0], Z[..., 1, 1])
        ninv = 1.0 / (z[0] * z[3] - z[1] * z[2])
        out = np.zeros(Z.shape[:-2], dtype=complex)
        for (a11, a12, a21, a22, p), c in self.terms.items():
            out = out + to_complex(c) * z[0] ** a11 * z[1] ** a12 * z[2] ** a21 * z[3] ** a22 * ninv ** p
        return out

    def evaluate_exact(self, z11, z12, z21, z22):
        """Exact evaluation at a rational (or Gaussian-rational) point."""
        z = [exact(v) for v in (z11, z12, z21, z22)]
        n = z[0] * z[3] - z[1] * z[2]
        total = gmpy2.mpq(0)
        for (a11, a12, a21, a22, p), c in self.terms.items():
            term = c * z[0] ** a11 * z[1] ** a12 * z[2] ** a21 * z[3] ** a22
            for _ in range(p):
                term = term / n
            total = total + term
        return total

    def inverted(self) -> "LaurentPoly":
        """f(Z^{-1}) with Z^{-1} = adj(Z) / N(Z)."""
        byp = defaultdict(lambda: defaultdict(int))
        for (a11, a12, a21, a22, p), c in self.terms.items():
            # z11 -> z22/N, z12 -> -z12/N, z21 -> -z21/N, z22 -> z11/N
            sign = -1 if (a12 + a21) % 2 else 1
            byp[p][(a22, a12, a21, a11, a11 + a12 + a21 + a22)] += sign * c
        result = LaurentPoly()
        for p, terms in byp.items():
            # N(Z)^{-p} at Z^{-1} becomes N(Z)^{p}
            result = result + LaurentPoly(terms) * LaurentPoly.N() ** p
        return result

    def substitute_linear(self, A, D) -> "LaurentPoly":
        """f(A Z D) for numeric 2x2 matrices A, D (complex coefficients)."""
        A, D = np.asarray(A, dtype=complex), np.asarray(D, dtype=complex)
        lin = {}
        for i in range(2):
            for j in range(2):
                expr = {}
                for k in range(2):
                    for l in range(2):
                        c = A[i, k] * D[l, j]
                        if c != 0:
                            a = [0, 0, 0, 0]
                            a[2 * k + l] = 1
                            expr[(*a, 0)] = c
                lin[(i, j)] = LaurentPoly(expr, canonical=True)
        scale_ninv = 1.0 / complex(np.linalg.det(A) * np.linalg.det(D))
        powers = {}

        def pw(ij, e):
            if (ij, e) not in powers:
                powers[(ij, e)] = lin[ij] ** e
            return powers[(ij, e)]

        out = LaurentPoly()
        for (a11, a12, a21, a22, p), c in self.terms.items():
            term = LaurentPoly({(0, 0, 0, 0, p): complex(to_complex(c)) * scale_ninv ** p}, canonical=True)
            for ij, e in (((0, 0), a11), ((0, 1), a12), ((1, 0), a21), ((1, 1), a22)):
                if e:
                    term = term * pw(ij, e)
            out = out + term
        return out

    def map_coeffs(self, fn) -> "LaurentPoly":
        return LaurentPoly({k: fn(v) for k, v in self.terms.items()}, canonical=True)

    def to_numeric(self) -> "LaurentPoly":
        return self.map_coeffs(to_complex)

    def max_abs_coeff(self) -> float:
        return max((abs(to_complex(c)) for c in self.terms.values()), default=0.0)


def _lift(x) -> LaurentPoly:
    if isinstance(x, LaurentPoly):
        return x
    if isinstance(x, Number) or isinstance(x, (GaussQ, type(gmpy2.mpq()))):
        return LaurentPoly.const(x)
    raise TypeError(f"cannot combine LaurentPoly with {type(x).__name__}")


def degt(f: LaurentPoly) -> LaurentPoly:
    """Degree operator plus identity: f + sum z_ij df/dz_ij (N^{-1} has degree -2)."""
    return LaurentPoly({k: v * (1 + sum(k[:4]) - 2 * k[4]) for k, v in f.terms.items()}, canonical=True)
