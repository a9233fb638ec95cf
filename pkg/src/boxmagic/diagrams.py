"""Box diagrams built from the one-loop box by attaching slingshots.

Vertices are named ``Z1, Z2, W1, W2`` (external) and ``T1 .. Tn`` (internal).
Edges are stored as sorted tuples of sorted vertex pairs (multisets), the
order as a transitively closed set of pairs ``(u, v)`` meaning ``u < v``.
"""
from __future__ import annotations

import itertools
import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import hc
from .errors import DomainViolation, SingularConfiguration

EXTERNALS = ("Z1", "Z2", "W1", "W2")
TARGETS = EXTERNALS
MAX_ENUMERATE = 6

# cyclic layout Z1, W2, W1, Z2: the two neighbours of each external
ADJACENT = {"Z1": ("Z2", "W2"), "Z2": ("Z1", "W1"), "W1": ("Z2", "W2"), "W2": ("Z1", "W1")}
# new relations for the attached vertex: (below, above)
NEW_RELATIONS = {
    "Z1": (("W2",), ("Z1", "Z2")),
    "Z2": (("W1",), ("Z1", "Z2")),
    "W1": (("W1", "W2"), ("Z2",)),
    "W2": (("W1", "W2"), ("Z1",)),
}


def _pair(u, v):
    return (u, v) if _vkey(u) <= _vkey(v) else (v, u)


def _vkey(v):
    return (0, EXTERNALS.index(v)) if v in EXTERNALS else (1, int(v[1:]))


def _closure(rel) -> frozenset:
    rel = set(rel)
    while True:
        new = {(a, d) for a, b in rel for c, d in rel if b == c} - rel
        if not new:
            return frozenset(rel)
        rel |= new


@dataclass(frozen=True)
class BoxDiagram:
    n: int
    solid: tuple
    dashed: tuple
    order: frozenset
    history: tuple | None = None

    # --- structure ----------------------------------------------------------
    @property
    def internals(self) -> tuple:
        return tuple(f"T{k}" for k in range(1, self.n + 1))

    @property
    def vertices(self) -> tuple:
        return EXTERNALS + self.internals

    def precedes(self, u, v) -> bool:
        return (u, v) in self.order

    def comparable(self, u, v) -> bool:
        return (u, v) in self.order or (v, u) in self.order

    def degree(self, v) -> tuple[int, int]:
        s = sum((a == v) + (b == v) for a, b in self.solid)
        d = sum((a == v) + (b == v) for a, b in self.dashed)
        return s, d

    def degree_identities_hold(self) -> bool:
        ok_ext = all(self.degree(v)[0] - self.degree(v)[1] == 1 for v in EXTERNALS)
        ok_int = all(self.degree(v)[0] - self.degree(v)[1] == 4 for v in self.internals)
        return ok_ext and ok_int

    def handshake(self) -> int:
        return sum(s - d for s, d in map(self.degree, self.vertices))

    def edges_at(self, v):
        """(neighbour, +1 solid / -1 dashed) for every edge at v, with multiplicity."""
        out = []
        for kind, edges in ((1, self.solid), (-1, self.dashed)):
            for a, b in edges:
                if a == v:
                    out.append((b, kind))
                elif b == v:
                    out.append((a, kind))
        return out

    def is_order_consistent(self) -> bool:
        irreflexive = all(a != b for a, b in self.order)
        closed = _closure(self.order) == self.order
        bounded = all(any(self.precedes(w, t) for w in ("W1", "W2"))
                      and any(self.precedes(t, z) for z in ("Z1", "Z2")) for t in self.internals)
        return irreflexive and closed and bounded

    # --- serialization ------------------------------------------------------
    def to_dict(self, explicit: bool = False) -> dict:
        if self.history is not None and not explicit:
            return {"loops": self.n, "word": list(self.history)}
        return {"loops": self.n, "solid": [list(e) for e in self.solid],
                "dashed": [list(e) for e in self.dashed],
                "order": sorted([list(e) for e in self.order], key=lambda e: (_vkey(e[0]), _vkey(e[1])))}

    def to_json(self, explicit: bool = False) -> str:
        return json.dumps(self.to_dict(explicit))

    @classmethod
    def from_dict(cls, data: dict) -> "BoxDiagram":
        if "word" in data:
            d = from_word(data["word"])
            if "loops" in data and data["loops"] != d.n:
                raise ValueError("loop count does not match the word length")
            return d
        return cls(int(data["loops"]),
                   tuple(sorted(_pair(*e) for e in data["solid"])),
                   tuple(sorted(_pair(*e) for e in data["dashed"])),
                   frozenset(tuple(e) for e in data["order"]))

    @classmethod
    def from_json(cls, text: str) -> "BoxDiagram":
        return cls.from_dict(json.loads(text))


def one_loop() -> BoxDiagram:
    solid = tuple(sorted(_pair("T1", v) for v in EXTERNALS))
    order = _closure({("W1", "T1"), ("W2", "T1"), ("T1", "Z1"), ("T1", "Z2")})
    return BoxDiagram(1, solid, (), order, ())


def attach_slingshot(d: BoxDiagram, target: str) -> BoxDiagram:
    if target not in TARGETS:
        raise ValueError(f"unknown attachment target {target!r}")
    t = f"T{d.n + 1}"

    def ren(v):
        return t if v == target else v

    a1, a2 = ADJACENT[target]
    solid = [_pair(ren(a), ren(b)) for a, b in d.solid]
    solid += [_pair(t, a1), _pair(t, a2), _pair(t, target)]
    dashed = [_pair(ren(a), ren(b)) for a, b in d.dashed] + [_pair(a1, a2)]
    order = {(ren(a), ren(b)) for a, b in d.order}
    below, above = NEW_RELATIONS[target]
    order |= {(w, t) for w in below} | {(t, z) for z in above}
    history = None if d.history is None else d.history + (target,)
    return BoxDiagram(d.n + 1, tuple(sorted(solid)), tuple(sorted(dashed)), _closure(order), history)


def from_word(word) -> BoxDiagram:
    d = one_loop()
    for target in word:
        d = attach_slingshot(d, target)
    return d


def reverse_order(d: BoxDiagram) -> BoxDiagram:
    """Reverse the partial order and swap the roles Z_i <-> W_i."""
    swap = {"Z1": "W1", "W1": "Z1", "Z2": "W2", "W2": "Z2"}

    def ren(v):
        return swap.get(v, v)

    return BoxDiagram(d.n,
                      tuple(sorted(_pair(ren(a), ren(b)) for a, b in d.solid)),
                      tuple(sorted(_pair(ren(a), ren(b)) for a, b in d.dashed)),
                      frozenset((ren(b), ren(a)) for a, b in d.order),
                      None)


# --- canonicalization ----------------------------------------------------------

def _signature(d: BoxDiagram, v):
    ext_nbrs = tuple(sorted(Counter((u, k) for u, k in d.edges_at(v) if u in EXTERNALS).items()))
    rel = tuple(sorted((("below", u) if (u, v) in d.order else ("above", u))
                       for u in EXTERNALS if d.comparable(u, v)))
    return (d.degree(v), ext_nbrs, rel)


def _relabel(d: BoxDiagram, mapping: dict):
    def ren(v):
        return mapping.get(v, v)

    solid = tuple(sorted(tuple(sorted((ren(a), ren(b)), key=_vkey)) for a, b in d.solid))
    dashed = tuple(sorted(tuple(sorted((ren(a), ren(b)), key=_vkey)) for a, b in d.dashed))
    order = tuple(sorted((ren(a), ren(b)) for a, b in d.order))
    return (d.n, solid, dashed, order)


def canonical_form(d: BoxDiagram) -> tuple:
    """Lexicographically smallest relabeling of the internal vertices."""
    groups = {}
    for t in d.internals:
        groups.setdefault(_signature(d, t), []).append(t)
    keys = sorted(groups, key=repr)
    # internal vertices are assigned new names block by block, so isomorphisms respect signatures
    names, k = [], 1
    for key in keys:
        names.append([f"T{k + i}" for i in range(len(groups[key]))])
        k += len(groups[key])
    best = None
    for perms in itertools.product(*(itertools.permutations(groups[key]) for key in keys)):
        mapping = {}
        for block, new in zip(perms, names):
            mapping.update(zip(block, new))
        form = _relabel(d, mapping)
        if best is None or form < best:
            best = form
    return best


def is_isomorphic(d1: BoxDiagram, d2: BoxDiagram) -> bool:
    return d1.n == d2.n and canonical_form(d1) == canonical_form(d2)


def enumerate_diagrams(n: int) -> list[BoxDiagram]:
    """All n-loop box diagrams up to isomorphism, in BFS order of attachment words."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > MAX_ENUMERATE:
        raise ValueError(f"enumeration is limited to n <= {MAX_ENUMERATE}")
    level = [one_loop()]
    for _ in range(n - 1):
        seen, nxt = set(), []
        for d in level:
            for target in TARGETS:
                e = attach_slingshot(d, target)
                key = canonical_form(e)
                if key not in seen:
                    seen.add(key)
                    nxt.append(e)
        level = nxt
    return level


# --- radii and evaluation points --------------------------------------------------

@dataclass(frozen=True)
class CycleAssignment:
    r: dict
    rMax: tuple
    rMin: tuple
    ratio: float = 2.0
    R: tuple = field(default=())
    Rinner: tuple = field(default=())

    def radius(self, t: str) -> float:
        return self.r[t]


def _ranks(d: BoxDiagram) -> dict:
    rank = {}
    for t in sorted(d.internals, key=lambda t: sum(d.precedes(u, t) for u in d.internals)):
        below = [rank[u] for u in d.internals if d.precedes(u, t)]
        rank[t] = 1 + max(below) if below else 0
    return rank


def assign_radii(d: BoxDiagram, base: float = 1.0, ratio: float = 2.0) -> CycleAssignment:
    if ratio <= 1:
        raise ValueError("ratio must exceed 1")
    rank = _ranks(d)
    r, seen = {}, Counter()
    for t in d.internals:
        k = seen[rank[t]]
        seen[rank[t]] += 1
        r[t] = base * ratio ** rank[t] * (1 + k * 1e-3)
    rmax = tuple(max(r[t] for t in d.internals if d.precedes(t, z)) for z in ("Z1", "Z2"))
    rmin = tuple(min(r[t] for t in d.internals if d.precedes(w, t)) for w in ("W1", "W2"))
    return CycleAssignment(r, rmax, rmin, ratio,
                           R=tuple(ratio * x for x in rmax), Rinner=tuple(x / ratio for x in rmin))


@dataclass(frozen=True)
class EvalPoint:
    Z1: np.ndarray
    Z2: np.ndarray
    W1: np.ndarray
    W2: np.ndarray

    def as_dict(self) -> dict:
        return {"Z1": self.Z1, "Z2": self.Z2, "W1": self.W1, "W2": self.W2}

    def to_dict(self) -> dict:
        return {k: [[[complex(x).real, complex(x).imag] for x in row] for row in v]
                for k, v in self.as_dict().items()}

    @classmethod
    def from_dict(cls, data: dict) -> "EvalPoint":
        def mat(v):
            return np.array([[complex(*x) for x in row] for row in v])
        return cls(*(mat(data[k]) for k in EXTERNALS))


def sample_point(a: CycleAssignment, seed=None, zscale: float = 1.5, wscale: float = 0.6) -> EvalPoint:
    """Z_i = zscale rMax_i U_i and W_i = wscale rMin_i V_i with U_i, V_i Haar unitary."""
    rng = np.random.default_rng(seed)
    U = hc.random_unitary(rng, 4)
    return EvalPoint(zscale * a.rMax[0] * U[0], zscale * a.rMax[1] * U[1],
                     wscale * a.rMin[0] * U[2], wscale * a.rMin[1] * U[3])


def check_point(a: CycleAssignment, p: EvalPoint, margin: float = 0.05) -> None:
    """Raise DomainViolation unless Z_i in D-_{rMax_i} and W_i in D+_{rMin_i} with margin."""
    for i, name in enumerate(("Z1", "Z2")):
        s = hc.singular_values(getattr(p, name))
        if np.min(s) < a.rMax[i] * (1 + margin):
            raise DomainViolation(f"{name} not in D-_{a.rMax[i]:g} (smallest singular value {np.min(s):.4g})")
    for i, name in enumerate(("W1", "W2")):
        s = hc.singular_values(getattr(p, name))
        if np.max(s) > a.rMin[i] * (1 - margin):
            raise DomainViolation(f"{name} not in D+_{a.rMin[i]:g} (largest singular value {np.max(s):.4g})")


def integrand(d: BoxDiagram, p: EvalPoint, t: dict):
    """Product over edges of N(Yi - Yj)^{-1} (solid) and N(Yi - Yj) (dashed); broadcasts over t."""
    pts = dict(p.as_dict())
    pts.update({k: np.asarray(v, dtype=complex) for k, v in t.items()})
    out = 1.0 + 0j
    for kind, edges in ((-1, d.solid), (1, d.dashed)):
        for a, b in edges:
            n = hc.norm(pts[a] - pts[b])
            if np.any(n == 0) or not np.all(np.isfinite(n)):
                raise SingularConfiguration(f"N({a} - {b}) vanishes")
            out = out * (n if kind == 1 else 1.0 / n)
    return out


def normalization(n: int) -> complex:
    return (1j / (2 * np.pi ** 3)) ** n
