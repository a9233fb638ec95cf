"""Operators L-bar, L and L-acute built from box diagrams, computed exactly.

Two of the four external points are integrated over cycles against input
functions and the internal vertices are integrated out as well.  Because the
radii follow the diagram's partial order (W's innermost, Z's outermost) every
propagator has a definite expansion direction,

    1/N(X - Y) = sum_d N(X)^{-1-d} P_d(X, Y),    Y inside X,

and degree balance at each integrated vertex caps the orders d that can
contribute.  The caps are exact, so the result is an exact finite sum; it is
assembled by eliminating one vertex at a time with the moment rule.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from gmpy2 import mpq

from . import hc
from .coeffs import (BasisVector, CoeffIndex, harmonic_decompose, moment_pairing,
                     varpi2_compact_poly)
from .diagrams import BoxDiagram, from_word, one_loop
from .errors import NotHarmonic, TruncationInsufficient
from .laurent import LaurentPoly, degt, to_complex
from .mpoly import MPoly, dashed, kernel
from .mpoly import moment as _moment

SPACES = ("Zh", "H+", "H-")


# --- tensor basis vectors -----------------------------------------------------------

@dataclass
class TensorBasisVector:
    """Finite sum of c * b1(X1) b2(X2) over pairs of basis labels."""

    coeffs: dict = field(default_factory=dict)
    space: str = "Zh"

    def __post_init__(self):
        if self.space not in SPACES:
            raise ValueError(f"space must be one of {SPACES}")
        self.coeffs = {k: v for k, v in self.coeffs.items() if v != 0}

    def __add__(self, other: "TensorBasisVector") -> "TensorBasisVector":
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0) + v
        return TensorBasisVector(out, self.space if self.space == other.space else "Zh")

    def __sub__(self, other):
        return self + other * -1

    def __mul__(self, s) -> "TensorBasisVector":
        return TensorBasisVector({k: v * s for k, v in self.coeffs.items()}, self.space)

    __rmul__ = __mul__

    def __len__(self):
        return len(self.coeffs)

    def norm(self) -> float:
        """Euclidean norm of the coefficient vector."""
        return float(np.sqrt(sum(abs(to_complex(v)) ** 2 for v in self.coeffs.values())))

    def evaluate(self, X1, X2) -> complex:
        total = 0j
        for (i1, i2), c in self.coeffs.items():
            total += to_complex(c) * BasisVector({i1: 1}).evaluate(X1) * BasisVector({i2: 1}).evaluate(X2)
        return complex(total)

    def components(self) -> list:
        return sorted(self.coeffs.items())

    def is_harmonic(self) -> bool:
        return all(i1.is_harmonic() and i2.is_harmonic() for i1, i2 in self.coeffs)

    def total_degrees(self) -> set:
        return {2 * (i1.k + i2.k) + i1.twoL + i2.twoL for i1, i2 in self.coeffs}

    def factor_polys(self) -> list:
        """[(c, poly1, poly2)] with exact Laurent polynomials for each component."""
        return [(c, BasisVector({i1: 1}).to_poly(), BasisVector({i2: 1}).to_poly()) for (i1, i2), c in self.components()]

    def to_json(self) -> str:
        rows = [{"left": [i1.k, i1.twoL, i1.twoN, i1.twoM], "right": [i2.k, i2.twoL, i2.twoN, i2.twoM],
                 "re": to_complex(c).real, "im": to_complex(c).imag} for (i1, i2), c in self.components()]
        return json.dumps({"space": self.space, "terms": rows})

    @classmethod
    def from_json(cls, text: str) -> "TensorBasisVector":
        data = json.loads(text)
        out = {}
        for r in data["terms"]:
            c = complex(r["re"], r["im"])
            out[(CoeffIndex(*r["left"]), CoeffIndex(*r["right"]))] = c if c.imag else c.real
        return cls(out, data["space"])

    @classmethod
    def product(cls, f1: BasisVector, f2: BasisVector, space: str = "Zh") -> "TensorBasisVector":
        return cls({(i1, i2): c1 * c2 for i1, c1 in f1.items() for i2, c2 in f2.items()}, space)


def _space_of(t: TensorBasisVector) -> str:
    idx = [i for pair in t.coeffs for i in pair]
    if all(i.k == 0 for i in idx):
        return "H+"
    if all(i.is_harmonic() and i.k < 0 for i in idx):
        return "H-"
    return "Zh"


def tensor_decompose(mp: MPoly, left: str, right: str) -> TensorBasisVector:
    """Exact basis coefficients of a function of two matrix variables."""
    rows = {}
    for rkey, pl in mp.split(left).items():
        for i1, c1 in harmonic_decompose(pl).items():
            acc = rows.setdefault(i1, {})
            acc[rkey] = acc.get(rkey, 0) + c1
    out = {}
    for i1, terms in rows.items():
        pr = MPoly(mp.blocks, terms).to_laurent(right)
        for i2, c2 in harmonic_decompose(pr).items():
            out[(i1, i2)] = out.get((i1, i2), 0) + c2
    t = TensorBasisVector(out)
    t.space = _space_of(t) if t.coeffs else "Zh"
    return t


# --- exact reduction engine -------------------------------------------------------------

def _height(d: BoxDiagram, v: str) -> int:
    return sum(1 for u in d.vertices if u != v and d.precedes(u, v))


def _oriented(d: BoxDiagram):
    """Solid edges as (inner, outer) pairs, dashed edges unchanged."""
    solid = []
    for x, y in d.solid:
        if d.precedes(x, y):
            solid.append((x, y))
        elif d.precedes(y, x):
            solid.append((y, x))
        else:
            raise ValueError(f"solid edge {x}-{y} joins incomparable vertices")
    return solid, list(d.dashed)


def edge_caps(d: BoxDiagram, degrees: dict, free: tuple, out_deg: int) -> dict | None:
    """Largest expansion order each solid edge can contribute, or None if nothing survives.

    At an integrated vertex v with input degree g and ``s`` dashed edges,
    sum_up d - sum_down (2 + d) + g + dash = -4 with 0 <= dash <= 2 s, where
    "up" edges lead to outer neighbours.  Both inequalities are propagated to
    a fixpoint.  Free vertices that sit inside every cycle contribute the cap
    ``out_deg`` on their outgoing edges.
    """
    solid, dsh = _oriented(d)
    big = 10 ** 6
    cap = {e: big for e in solid}
    groups = []  # (edges, bound-function)
    for v in d.vertices:
        up = [e for e in solid if e[0] == v]
        down = [e for e in solid if e[1] == v]
        if v in free:
            if up and not down:
                groups.append((up, lambda c, k=out_deg: k))
            continue
        g = degrees.get(v, 0)
        s = sum(1 for e in dsh if v in e)
        if up:
            groups.append((up, lambda c, down=down, g=g: -4 - g + sum(2 + c[e] for e in down)))
        if down:
            groups.append((down, lambda c, up=up, g=g, s=s, n=len(down):
                           sum(c[e] for e in up) + 4 + g + 2 * s - 2 * n))
    changed = True
    while changed:
        changed = False
        for edges, bound in groups:
            b = bound(cap)
            if b < 0:
                return None
            for e in edges:
                if b < cap[e]:
                    cap[e] = b
                    changed = True
    return cap


def _reduce(d: BoxDiagram, inputs: dict, free: tuple, order: str, Lmax: float) -> MPoly:
    """Integrate every vertex outside ``free`` against the homogeneous ``inputs``."""
    integrated = tuple(v for v in d.vertices if v not in free)
    blocks = tuple(free) + integrated
    degrees = {}
    for v, f in inputs.items():
        degs = f.degrees()
        if len(degs) != 1:
            raise ValueError("inputs must be homogeneous")
        degrees[v] = degs.pop()
    solid, dsh = _oriented(d)
    out_deg = sum(degrees.values()) - 2 * len(solid) + 2 * len(dsh) + 4 * len(integrated)
    caps = edge_caps(d, degrees, free, out_deg)
    if caps is None:
        return MPoly(blocks)
    top = max(caps.values(), default=0)
    if top > 2 * Lmax:
        raise TruncationInsufficient(f"expansion order {top} exceeds 2*Lmax = {2 * Lmax:g}")

    factors = [MPoly.from_laurent(blocks, v, f) for v, f in inputs.items()]
    for (inner, outer) in solid:
        if inner in free and outer in free:
            raise NotImplementedError(f"propagator between free points {inner}, {outer}")
        parts = kernel(blocks, outer, inner, caps[(inner, outer)])
        if not parts:
            return MPoly(blocks)
        acc = parts[0]
        for p in parts[1:]:
            acc = acc + p
        factors.append(acc)
    factors.extend(dashed(blocks, x, y) for x, y in dsh)

    sign = -1 if order == "outer" else 1
    inner_free = all(_height(d, f) == 0 for f in free)
    for v in sorted(integrated, key=lambda u: (sign * _height(d, u), u)):
        mine = [f for f in factors if f.involves(v)]
        factors = [f for f in factors if not f.involves(v)]
        factors.append(_integrate_product(mine, v, blocks, free if inner_free else (), out_deg))
    result = MPoly.one(blocks)
    for f in factors:
        result = result * f
    return result


def _signature(a) -> tuple:
    """(degree, a11 - a22, a12 - a21) of one block's exponents; all must vanish or be -4, 0, 0."""
    return (a[0] + a[1] + a[2] + a[3] - 2 * a[4], a[0] - a[3], a[1] - a[2])


def _grouped(f: MPoly, s: int) -> dict:
    out = {}
    for k, c in f.terms.items():
        out.setdefault(_signature(k[s:s + 5]), []).append((k, c))
    return out


def _reachable(sig, lo, hi) -> bool:
    target = (-4, 0, 0)
    return all(lo[j] <= target[j] - sig[j] <= hi[j] for j in range(3))


def _integrate_product(mine: list, v: str, blocks: tuple, free: tuple, out_deg: int) -> MPoly:
    """Integral over v of a product, discarding partial terms that cannot survive.

    Terms are grouped by their v-signature (degree, a11 - a22, a12 - a21);
    the moment rule needs the total signature (-4, 0, 0), so partial products
    outside the reachable box are dropped and the last factor is joined on
    the complementary signature.
    """
    if any(f.is_zero() for f in mine):
        return MPoly(blocks)
    mine = sorted(mine, key=lambda f: len(f.terms))
    s = blocks.index(v) * 5
    groups = [_grouped(f, s) for f in mine]
    m = len(groups)
    lo = [[0, 0, 0] for _ in range(m + 1)]
    hi = [[0, 0, 0] for _ in range(m + 1)]
    for i in range(m - 1, -1, -1):
        sigs = list(groups[i])
        for j in range(3):
            lo[i][j] = lo[i + 1][j] + min(g[j] for g in sigs)
            hi[i][j] = hi[i + 1][j] + max(g[j] for g in sigs)
    fslots = [blocks.index(f) * 5 for f in free]

    def free_ok(k) -> bool:
        return sum(sum(k[t:t + 4]) - 2 * k[t + 4] for t in fslots) <= out_deg

    acc = {(0, 0, 0): {(0,) * (5 * len(blocks)): mpq(1)}}
    for i in range(m - 1):
        nxt = {}
        for ga, ta in acc.items():
            for gf, tf in groups[i].items():
                g = (ga[0] + gf[0], ga[1] + gf[1], ga[2] + gf[2])
                if not _reachable(g, lo[i + 1], hi[i + 1]):
                    continue
                bucket = nxt.setdefault(g, {})
                for k1, c1 in ta.items():
                    for k2, c2 in tf:
                        k = tuple(x + y for x, y in zip(k1, k2))
                        if fslots and not free_ok(k):
                            continue
                        bucket[k] = bucket.get(k, 0) + c1 * c2
        acc = {g: {k: c for k, c in t.items() if c != 0} for g, t in nxt.items()}
        if not acc:
            return MPoly(blocks)

    out = {}
    zero = (0,) * 5
    last = groups[m - 1]
    for ga, ta in acc.items():
        tf = last.get((-4 - ga[0], -ga[1], -ga[2]))
        if not tf:
            continue
        for k1, c1 in ta.items():
            for k2, c2 in tf:
                k = tuple(x + y for x, y in zip(k1, k2))
                if fslots and not free_ok(k):
                    continue
                mu = _moment(k[s], k[s + 1])
                key = k[:s] + zero + k[s + 5:]
                out[key] = out.get(key, 0) + c1 * c2 * mu
    return MPoly(blocks, out)


# --- operators ----------------------------------------------------------------------------

def _homogeneous_parts(f) -> list:
    poly = f.to_poly() if isinstance(f, BasisVector) else f
    out = []
    for e in sorted(poly.degrees()):
        part = poly.homogeneous_part(e)
        if not part.is_zero():
            out.append(part)
    return out


def _poly_key(p: LaurentPoly):
    return tuple(sorted((k, str(v)) for k, v in p.terms.items()))


_CACHE: dict = {}


def _apply(d: BoxDiagram, f1, f2, free: tuple, integrated_ext: tuple, order: str, Lmax: float) -> MPoly:
    total = None
    for p1 in _homogeneous_parts(f1):
        for p2 in _homogeneous_parts(f2):
            key = (d.to_json(explicit=True), free, order, _poly_key(p1), _poly_key(p2))
            if key not in _CACHE:
                _CACHE[key] = _reduce(d, {integrated_ext[0]: p1, integrated_ext[1]: p2}, free, order, Lmax)
            r = _CACHE[key]
            total = r if total is None else total + r
    if total is None:
        blocks = tuple(free) + tuple(v for v in d.vertices if v not in free)
        total = MPoly(blocks)
    return total


def lbar_poly(d: BoxDiagram, f1, f2, Lmax: float = 8, order: str = "outer") -> MPoly:
    """L-bar(f1 x f2) as an exact polynomial in the blocks W1, W2."""
    return _apply(d, f1, f2, ("W1", "W2"), ("Z1", "Z2"), order, Lmax)


def Lbar(d: BoxDiagram, f1, f2, Lmax: float = 8) -> TensorBasisVector:
    """Integrate Z1, Z2 against f1, f2 over cycles outside every internal vertex.

    Returns the exact basis coefficients of the resulting polynomial in W1, W2.
    """
    return tensor_decompose(lbar_poly(d, f1, f2, Lmax), "W1", "W2")


def _check_harmonic(phi: BasisVector, sign: str) -> None:
    ok = all(i.is_harmonic() and ((i.k == 0) if sign == "+" else (i.k < 0)) for i in phi.coeffs)
    if not ok:
        raise NotHarmonic(f"input is not in H{sign}")


def zh_image(phi) -> LaurentPoly:
    """phi -> degt(phi) / N."""
    poly = phi.to_poly() if isinstance(phi, BasisVector) else phi
    return degt(poly) * LaurentPoly.Ninv()


def L(d: BoxDiagram, phi1: BasisVector, phi2: BasisVector, Lmax: float = 8) -> TensorBasisVector:
    """L(phi1 x phi2) = L-bar(degt phi1 / N x degt phi2 / N) for harmonic polynomials."""
    _check_harmonic(phi1, "+")
    _check_harmonic(phi2, "+")
    return Lbar(d, zh_image(phi1), zh_image(phi2), Lmax)


def lacute_poly(d: BoxDiagram, phi1, phi2, Lmax: float = 8) -> MPoly:
    return _apply(d, zh_image(phi1), zh_image(phi2), ("Z1", "Z2"), ("W1", "W2"), "inner", Lmax)


def Lacute(d: BoxDiagram, phi1: BasisVector, phi2: BasisVector, Lmax: float = 8) -> TensorBasisVector:
    """Integrate W1, W2 against degt(phi)/N over cycles inside every internal vertex."""
    _check_harmonic(phi1, "-")
    _check_harmonic(phi2, "-")
    return tensor_decompose(lacute_poly(d, phi1, phi2, Lmax), "Z1", "Z2")


def h_minus(twoL: int, twoN: int, twoM: int) -> BasisVector:
    """N^{-1} t^l_{nm}(Z^{-1}) in basis form."""
    from .coeffs import tcoeff_inverse_relation
    c, idx = tcoeff_inverse_relation(twoL, twoN, twoM)
    return BasisVector({CoeffIndex(idx.k - 1, idx.twoL, idx.twoN, idx.twoM): c})


def box_residual(mp: MPoly, names=("W1", "W2")) -> int:
    """Number of nonzero coefficients left after applying the exact Laplacian in each variable."""
    bad = 0
    for name in names:
        for part in mp.split(name).values():
            bad += len(part.box().terms)
    return bad


def degree_shift(mp: MPoly, f1, f2, names=("W1", "W2")) -> set:
    """Total output degree minus total input degree, over all output terms."""
    din = sum(next(iter(_homogeneous_parts(f)), LaurentPoly.const(1)).degrees().pop() for f in (f1, f2))
    return {sum(mp.degree_in(k, n) for n in names) - din for k in mp.terms}


# --- checks ---------------------------------------------------------------------------------

def tensor_pairing(t: TensorBasisVector, g1: LaurentPoly, g2: LaurentPoly):
    """Normalized double integral of t(X1, X2) g1(X1) g2(X2)."""
    total = mpq(0)
    for c, p1, p2 in t.factor_polys():
        total = total + c * moment_pairing(p1, g1) * moment_pairing(p2, g2)
    return total


def duality_check(d: BoxDiagram, f1, f2, phi1: BasisVector, phi2: BasisVector, Lmax: float = 8) -> float:
    """|<L-bar(f1 x f2), degt phi / N> - <L-acute(phi1 x phi2), f1 x f2>| for phi in H-."""
    lhs = tensor_pairing(Lbar(d, f1, f2, Lmax), zh_image(phi1), zh_image(phi2))
    g1 = f1.to_poly() if isinstance(f1, BasisVector) else f1
    g2 = f2.to_poly() if isinstance(f2, BasisVector) else f2
    rhs = tensor_pairing(Lacute(d, phi1, phi2, Lmax), g1, g2)
    return float(abs(to_complex(lhs - rhs)))


def _sample_w(rng, count: int, scale: float = 0.3):
    return [(scale * (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))),
             scale * (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))) for _ in range(count)]


def equivariance_check(d: BoxDiagram, h: hc.GroupElement, f1, f2, Lmax: float = 8,
                       samples: int = 6, seed: int = 0) -> float:
    """Relative residual of L-bar(varpi_l(h) f1 x varpi_r(h) f2) against (pi_l x pi_r)(h) L-bar(f1 x f2).

    ``h`` must be block diagonal (an element of U(2) x U(2)); the transformed
    inputs are then again Laurent polynomials.
    """
    p1 = f1.to_poly() if isinstance(f1, BasisVector) else f1
    p2 = f2.to_poly() if isinstance(f2, BasisVector) else f2
    lhs = lbar_poly(d, varpi2_compact_poly("l", h, p1), varpi2_compact_poly("r", h, p2), Lmax)
    base = lbar_poly(d, p1, p2, Lmax)

    def F(W1, W2):
        return base.evaluate({"W1": W1, "W2": W2})

    rng = np.random.default_rng(seed)
    worst, scale = 0.0, 0.0
    for W1, W2 in _sample_w(rng, samples):
        a = lhs.evaluate({"W1": W1, "W2": W2})
        # pi_l on the first slot, pi_r on the second
        n = complex(hc.norm(h.c_ @ W1 + h.d_)) * complex(hc.norm(h.a - W2 @ h.c))
        b = F(hc.fractional_linear(h.inverse, W1), hc.fractional_linear_alt(h.inverse, W2)) / n
        worst = max(worst, abs(a - b))
        scale = max(scale, abs(b), abs(a))
    return float(worst / scale) if scale else float(worst)


def k2_generators() -> list:
    """z_ij x 1 - 1 x z_ij as tensor basis vectors (degree-one harmonic polynomials)."""
    from .coeffs import harmonic_decompose as hd
    gens = []
    one = BasisVector.single(0, 0, 0, 0)
    for i, j in ((1, 1), (1, 2), (2, 1), (2, 2)):
        z = hd(LaurentPoly.var(i, j))
        gens.append((z, one))
    return gens


def scalar_action_check(d: BoxDiagram, k: int, Lmax: float = 8):
    """Fit L(gen) = mu * gen on the k-th generator(s); return (mu, relative residual)."""
    one = BasisVector.single(0, 0, 0, 0)
    if k == 1:
        pairs = [(TensorBasisVector.product(one, one, "H+"), [(one, one, 1)])]
    elif k == 2:
        pairs = []
        for z, _ in k2_generators():
            gen = TensorBasisVector.product(z, one, "H+") - TensorBasisVector.product(one, z, "H+")
            pairs.append((gen, [(z, one, 1), (one, z, -1)]))
    else:
        raise ValueError("k must be 1 or 2")
    num, den, outs = 0j, 0.0, []
    for gen, pieces in pairs:
        out = TensorBasisVector({}, "H+")
        for a, b, s in pieces:
            out = out + L(d, a, b, Lmax) * s
        outs.append((gen, out))
        for key, g in gen.coeffs.items():
            num += np.conj(to_complex(g)) * to_complex(out.coeffs.get(key, 0))
            den += abs(to_complex(g)) ** 2
    mu = num / den
    res2, gen2 = 0.0, 0.0
    for gen, out in outs:
        diff = out - gen * mu
        res2 += diff.norm() ** 2
        gen2 += gen.norm() ** 2
    return complex(mu), float(np.sqrt(res2 / gen2))


def two_loop_diagrams() -> tuple:
    return from_word(["Z1"]), from_word(["Z2"])


__all__ = [
    "TensorBasisVector", "tensor_decompose", "edge_caps", "lbar_poly", "Lbar", "L", "lacute_poly", "Lacute",
    "h_minus", "zh_image", "box_residual", "degree_shift", "tensor_pairing", "duality_check", "equivariance_check", "k2_generators",
    "scalar_action_check", "two_loop_diagrams", "one_loop",
]
