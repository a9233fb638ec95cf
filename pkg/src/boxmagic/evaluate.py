"""Evaluators for box integrals l^(n) and numerical checks built on them."""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from . import hc
from .diagrams import (EXTERNALS, BoxDiagram, CycleAssignment, EvalPoint, assign_radii,
                       check_point, integrand, normalization, reverse_order)
from .errors import DomainViolation, GridTooCoarse, SingularConfiguration
from .results import EvalResult
from .spectral import eval_spectral, reduce_to_vertex, series_on_grid, spectral_value

__all__ = ["eval_quadrature", "eval_montecarlo", "eval_spectral", "evaluate", "laplacian_residual",
           "fd_laplacian", "eval_hybrid", "conformal_check", "inversion_check", "radius_independence",
           "wrong_cycle_experiment", "common_point"]


# --- quadrature -----------------------------------------------------------------

def _vertex_factor(d: BoxDiagram, p: EvalPoint, t: str, T: np.ndarray) -> np.ndarray:
    """Product of the edge factors joining internal vertex t to external points."""
    pts = p.as_dict()
    out = np.ones(T.shape[0], dtype=complex)
    for y, kind in d.edges_at(t):
        if y in EXTERNALS:
            n = hc.norm(pts[y] - T)
            if np.any(n == 0):
                raise SingularConfiguration(f"N({y} - {t}) vanishes on the grid")
            out *= n if kind == -1 else 1.0 / n
    return out


def _external_constant(d: BoxDiagram, p: EvalPoint) -> complex:
    pts = p.as_dict()
    c = 1.0 + 0j
    for kind, edges in ((1, d.solid), (-1, d.dashed)):
        for a, b in edges:
            if a in EXTERNALS and b in EXTERNALS:
                n = complex(hc.norm(pts[a] - pts[b]))
                c *= 1 / n if kind == 1 else n
    return c


def _coupling_power(d: BoxDiagram, t1: str, t2: str) -> int:
    m = 0
    for y, kind in d.edges_at(t1):
        if y == t2:
            m += -1 if kind == 1 else 1
    return m


def _polar_split(T):
    """Rows X, Y with polar(A, B) = X(A) @ Y(B).T."""
    X = np.stack([T[:, 0, 0], T[:, 1, 1], T[:, 0, 1], T[:, 1, 0]], axis=1)
    Y = np.stack([T[:, 1, 1], T[:, 0, 0], -T[:, 1, 0], -T[:, 0, 1]], axis=1)
    return X, Y


def _quad_value(d: BoxDiagram, a: CycleAssignment, p: EvalPoint, grid: hc.GridSpec, block: int) -> complex:
    ts = d.internals
    nodes = {t: hc.cycle_nodes(a.r[t], grid) for t in ts}
    if d.n == 1:
        T, w = nodes["T1"]
        return complex(np.sum(_vertex_factor(d, p, "T1", T) * w))
    t1, t2 = ts
    T1, w1 = nodes[t1]
    T2, w2 = nodes[t2]
    f1 = _vertex_factor(d, p, t1, T1) * w1
    f2 = _vertex_factor(d, p, t2, T2) * w2
    m = _coupling_power(d, t1, t2)
    n1, n2 = hc.norm(T1), hc.norm(T2)
    X1, _ = _polar_split(T1)
    _, Y2 = _polar_split(T2)
    total = 0j
    for s in range(0, len(f1), block):
        K = n1[s:s + block, None] + n2[None, :] - X1[s:s + block] @ Y2.T
        if m != 1:
            K = K ** m
        total += f1[s:s + block] @ (K @ f2)
    return complex(total)


def eval_quadrature(d: BoxDiagram, a: CycleAssignment, p: EvalPoint,
                    grid: hc.GridSpec = hc.GridSpec(32, 16), rtol: float | None = None,
                    block: int = 256, check: bool = True) -> EvalResult:
    """Tensor-product quadrature over the internal cycles (n <= 2); error by grid refinement."""
    if d.n > 2:
        raise ValueError("tensor quadrature is limited to n <= 2; use eval_montecarlo")
    if check:
        check_point(a, p)
    const = _external_constant(d, p) * normalization(d.n)
    fine = _quad_value(d, a, p, grid, block) * const
    coarse_grid = grid.scaled(0.75)
    coarse = _quad_value(d, a, p, coarse_grid, block) * const
    err = float(abs(fine - coarse))
    if rtol is not None and err > rtol * abs(fine):
        raise GridTooCoarse(f"refinement disagreement {err:.3e} exceeds {rtol:g} relative")
    cost = grid.size ** d.n + coarse_grid.size ** d.n
    return EvalResult(complex(fine), err, "quadrature", cost,
                      {"n_periodic": grid.n_periodic, "n_gauss": grid.n_gauss, "n_psi": grid.npsi})


# --- Monte Carlo ------------------------------------------------------------------

def _sample_cycle(rng: np.random.Generator, R: float, m: int):
    psi = rng.uniform(0.0, np.pi, m)
    x = rng.standard_normal((m, 4))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    T = hc.cycle_embed(R, psi, x)
    # chart volume pi * 2 pi^2 times the holomorphic weight
    return T, hc.cycle_weight(R, psi) * (2 * np.pi ** 3)


def eval_montecarlo(d: BoxDiagram, a: CycleAssignment, p: EvalPoint, samples: int = 100_000,
                    seed=0, chunk: int = 100_000, check: bool = True) -> EvalResult:
    """Uniform sampling of the product of cycle charts; returns mean and standard error."""
    if check:
        check_point(a, p)
    rng = np.random.default_rng(seed)
    s1 = 0j
    s2 = 0.0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        t, w = {}, np.ones(m, dtype=complex)
        for name in d.internals:
            T, wt = _sample_cycle(rng, a.r[name], m)
            t[name], w = T, w * wt
        vals = integrand(d, p, t) * w
        s1 += vals.sum()
        s2 += float(np.sum(np.abs(vals) ** 2))
        done += m
    mean = s1 / samples
    var = max(s2 / samples - abs(mean) ** 2, 0.0)
    c = normalization(d.n)
    stderr = float(np.sqrt(var / samples) * abs(c))
    return EvalResult(complex(mean * c), stderr, "montecarlo", samples, {"seed": seed})


def _hybrid_value(d, a, p, keep, D, grid):
    scalar, outer, inner = reduce_to_vertex(d, a, p, D, keep)
    R = a.r[keep]
    T, w = hc.cycle_nodes(R, grid)
    f = _vertex_factor(d, p, keep, T) * w
    for s in outer:
        f = f * series_on_grid(s, R, grid)
    for s in inner:
        f = f * series_on_grid(s, R, grid, laurent=True)
    return complex(scalar * np.sum(f) * normalization(1))


def eval_hybrid(d: BoxDiagram, a: CycleAssignment, p: EvalPoint, keep: str | None = None, Lmax: float = 10,
                grid: hc.GridSpec = hc.GridSpec(48, 24), check: bool = True) -> EvalResult:
    """Spectral elimination of all internals but ``keep``, quadrature over U(2)_{r_keep}.

    Unlike the purely spectral value this depends on the radius of ``keep``
    numerically, so it is used to test independence of the cycle radii.
    """
    if check:
        check_point(a, p)
    keep = keep or d.internals[0]
    D = int(round(2 * Lmax))
    fine = _hybrid_value(d, a, p, keep, D, grid)
    coarse = _hybrid_value(d, a, p, keep, D, grid.scaled(0.75))
    return EvalResult(fine, float(abs(fine - coarse)), "hybrid", grid.size,
                      {"keep": keep, "Lmax": Lmax, "r": a.r[keep]})


def evaluate(d: BoxDiagram, a: CycleAssignment, p: EvalPoint, method: str = "spectral", **kw) -> EvalResult:
    if method in ("quad", "quadrature"):
        return eval_quadrature(d, a, p, **kw)
    if method in ("mc", "montecarlo"):
        return eval_montecarlo(d, a, p, **kw)
    if method == "spectral":
        check_point(a, p)
        return eval_spectral(d, a, p, **kw)
    raise ValueError(f"unknown method {method!r}")


def common_point(diagrams, assignments, seed=None, zscale: float = 1.5, wscale: float = 0.6) -> EvalPoint:
    """A point admissible for every (diagram, assignment) pair given."""
    rmax = tuple(max(a.rMax[i] for a in assignments) for i in (0, 1))
    rmin = tuple(min(a.rMin[i] for a in assignments) for i in (0, 1))
    rng = np.random.default_rng(seed)
    U = hc.random_unitary(rng, 4)
    return EvalPoint(zscale * rmax[0] * U[0], zscale * rmax[1] * U[1],
                     wscale * rmin[0] * U[2], wscale * rmin[1] * U[3])


# --- differential and symmetry checks ---------------------------------------------

_DIRECTIONS = [hc.from_coords(*np.eye(4)[k]) for k in range(4)]


def fd_laplacian(f, Z, h: float) -> complex:
    """sum_k d^2 f / (dz^k)^2 by central differences along the four coordinate directions."""
    Z = np.asarray(Z, dtype=complex)
    f0 = f(Z)
    return sum((f(Z + h * E) - 2 * f0 + f(Z - h * E)) / h ** 2 for E in _DIRECTIONS)


def laplacian_residual(d: BoxDiagram, a: CycleAssignment, p: EvalPoint, var: str, h: float = 1e-3,
                       Lmax: float = 8, value_fn=None) -> float:
    """|box l| * scale^2 / |l| in the variable ``var``, with step h * scale."""
    if var not in EXTERNALS:
        raise ValueError(f"unknown variable {var!r}")
    D = int(round(2 * Lmax))
    base = p.as_dict()
    scale = float(np.max(hc.singular_values(base[var])))
    if value_fn is None:
        def value_fn(pt):
            return spectral_value(d, a, pt, D)

    def f(Z):
        q = dict(base)
        q[var] = Z
        return value_fn(EvalPoint(**q))

    lap = fd_laplacian(f, base[var], h * scale)
    return float(abs(lap) * scale ** 2 / abs(f(base[var])))


def transform_point(h: hc.GroupElement, p: EvalPoint) -> EvalPoint:
    """Apply Z -> (aZ+b)(cZ+d)^{-1} with (a b; c d) = h^{-1} to all four points."""
    g = h.inverse
    return EvalPoint(*(hc.fractional_linear(g, getattr(p, k)) for k in EXTERNALS))


def conformal_factor(h: hc.GroupElement, p: EvalPoint) -> complex:
    a_, c_ = h.a, h.c
    c, dd = h.c_, h.d_
    return complex(hc.norm(a_ - p.Z1 @ c_) * hc.norm(c @ p.Z2 + dd)
                   * hc.norm(c @ p.W1 + dd) * hc.norm(a_ - p.W2 @ c_))


def conformal_check(d: BoxDiagram, a: CycleAssignment, p: EvalPoint, h: hc.GroupElement,
                    value_fn=None) -> float:
    """Relative defect of l(h.Z; h.W) = factor * l(Z; W)."""
    if value_fn is None:
        def value_fn(pt):
            return eval_spectral(d, a, pt, 8).value
    q = transform_point(h, p)
    check_point(a, q)
    lhs = value_fn(q)
    rhs = conformal_factor(h, p) * value_fn(p)
    return float(abs(lhs - rhs) / abs(rhs))


def inverted_point(p: EvalPoint) -> EvalPoint:
    """(Z1^{-1}, Z2^{-1}; W1^{-1}, W2^{-1})."""
    return EvalPoint(*(hc.invert(getattr(p, k)) for k in EXTERNALS))


def inversion_point(d: BoxDiagram, seed=None, base: float = 1.0, ratio: float = 2.0) -> EvalPoint:
    """Small Z's and large W's so that both sides of the inversion relation are admissible."""
    a = assign_radii(d, base, ratio)
    ar = assign_radii(reverse_order(d), base, ratio)
    small = 0.6 * min(min(ar.rMin), 1 / max(a.rMax))
    large = 1.5 * max(max(ar.rMax), 1 / min(a.rMin))
    U = hc.random_unitary(np.random.default_rng(seed), 4)
    return EvalPoint(small * U[0], small * U[1], large * U[2], large * U[3])


def inversion_check(d: BoxDiagram, p: EvalPoint, base: float = 1.0, ratio: float = 2.0,
                    Lmax: float = 8, value_fn=None) -> float:
    """Relative defect of l(Z^{-1}; W^{-1}) = N(W1)N(W2) l~(W; Z) N(Z1)N(Z2).

    ``p`` holds the points (Z; W) admissible for the reversed diagram ``l~`` with
    Z-slot entries W and W-slot entries Z.
    """
    dr = reverse_order(d)
    a = assign_radii(d, base, ratio)
    ar = assign_radii(dr, base, ratio)
    if value_fn is None:
        def value_fn(diag, asg, pt):
            return eval_spectral(diag, asg, pt, Lmax).value
    swapped = EvalPoint(p.W1, p.W2, p.Z1, p.Z2)
    check_point(ar, swapped)
    q = inverted_point(p)
    check_point(a, q)
    lhs = value_fn(d, a, q)
    rhs = complex(hc.norm(p.W1) * hc.norm(p.W2) * hc.norm(p.Z1) * hc.norm(p.Z2)) * value_fn(dr, ar, swapped)
    return float(abs(lhs - rhs) / abs(rhs))


def radius_independence(d: BoxDiagram, p: EvalPoint, ratios=(2.0, 3.0), base: float = 1.0,
                        evaluator=None) -> float:
    """Relative spread of l over admissible radius assignments.

    The default evaluator integrates one vertex numerically on its own cycle
    (every internal vertex in turn), so the radii genuinely enter the computation.
    """
    if evaluator is None:
        def evaluator(asg):
            return [eval_hybrid(d, asg, p, keep=t).value for t in d.internals]
    vals = []
    for r in ratios:
        asg = assign_radii(d, base * (1 + 0.1 * (r - ratios[0])), r)
        check_point(asg, p)
        v = evaluator(asg)
        vals.extend(v if isinstance(v, list) else [v])
    return float(max(abs(v - vals[0]) for v in vals) / abs(vals[0]))


def wrong_cycle_experiment(d: BoxDiagram, a: CycleAssignment, p: EvalPoint,
                           grid: hc.GridSpec = hc.GridSpec(24, 12)) -> dict:
    """Swap the radii of two comparable internals against the order and compare values."""
    if d.n != 2:
        raise ValueError("the experiment is implemented for two-loop diagrams")
    t1, t2 = d.internals
    right = eval_quadrature(d, a, p, grid, check=False)
    swapped = replace(a, r={t1: a.r[t2], t2: a.r[t1]})
    wrong = eval_quadrature(d, swapped, p, grid, check=False)
    return {"correct": right.value, "swapped": wrong.value,
            "relative_change": float(abs(wrong.value - right.value) / abs(right.value))}


__all__ += ["transform_point", "conformal_factor", "inverted_point", "inversion_point", "DomainViolation"]
