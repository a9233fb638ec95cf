"""Verification suites producing deterministic, machine-readable reports.

Every suite returns a list of check records ``{id, claim, inputs_digest,
values, tolerance, pass}``.  Records contain no timings, so rerunning a suite
with the same configuration and seed reproduces them exactly.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Callable

import numpy as np

from . import hc
from .coeffs import (BasisVector, CoeffIndex, expand_inv_norm, labels, moment_pairing,
                     orthogonality_entry, tcoeff_poly)
from .diagrams import (TARGETS, assign_radii, canonical_form, enumerate_diagrams,
                       from_word, normalization, one_loop, sample_point)
from .errors import BoxMagicError
from .evaluate import (common_point, conformal_check, eval_montecarlo, eval_quadrature,
                       laplacian_residual, radius_independence)
from .laurent import LaurentPoly, to_complex
from .operators import (L, Lbar, TensorBasisVector, duality_check, h_minus, scalar_action_check,
                        two_loop_diagrams)
from .spectral import eval_spectral

SCHEMA_VERSION = "1.0"

SUITES = ("normalization", "orthogonality", "expansion", "agreement", "magic", "conformal",
          "harmonic", "annihilation", "operators", "structure")

DEFAULT_TOLERANCES = {
    "normalization": 1e-8,
    "orthogonality": 1e-9,
    "expansion": 1e-6,
    "decay": 0.10,
    "agreement1": 1e-6,
    "agreement2": 1e-5,
    "magic2": 1e-6,
    "sigmas": 3.0,
    "conformal1": 1e-6,
    "conformal2": 1e-5,
    "harmonic": 1e-4,
    "harmonic_slope": 0.25,
    "annihilation": 1e-10,
    "identity": 1e-10,
    "operator_magic": 1e-8,
    "scalar": 1e-8,
    "duality": 1e-9,
    "radius": 1e-8,
}


@dataclass
class VerifyConfig:
    """Knobs shared by all suites; ``tolerances`` overrides entries of the defaults."""

    seed: int = 0
    loops: int | None = None
    lmax: float = 8
    samples: int = 1_000_000
    base: float = 1.0
    ratio: float = 2.0
    tol: float | None = None
    tolerances: dict = field(default_factory=dict)
    quad_grid1: tuple = (32, 16)
    quad_grid2: tuple = (16, 8)
    points1: int = 10
    points2: int = 5
    points3: int = 3
    max_words: int = 5
    # per loop count; two-loop memory grows steeply with Lmax while its tail is already ~1e-13 at 8
    conformal_lmax: tuple = (14, 8)

    def tolerance(self, key: str) -> float:
        if key in self.tolerances:
            return float(self.tolerances[key])
        # a global override never touches shape parameters such as sigma bands or slope slack
        if self.tol is not None and key not in ("sigmas", "decay", "harmonic_slope"):
            return float(self.tol)
        return DEFAULT_TOLERANCES[key]

    def wants(self, n: int) -> bool:
        return self.loops is None or self.loops == n

    @classmethod
    def from_mapping(cls, data: dict) -> "VerifyConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        for key in ("quad_grid1", "quad_grid2", "conformal_lmax"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)


@dataclass
class VerifyReport:
    suite: str
    checks: list
    config: dict
    seed: int
    wall_time: float
    schema_version: str = SCHEMA_VERSION

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def to_dict(self) -> dict:
        return {"schema_version": self.schema_version, "suite": self.suite, "seed": self.seed,
                "passed": self.passed, "wall_time": self.wall_time, "config": self.config,
                "checks": self.checks}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        import csv
        import io
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["id", "pass", "tolerance", "claim", "inputs_digest", "values"])
        for c in self.checks:
            w.writerow([c["id"], c["pass"], c["tolerance"], c["claim"], c["inputs_digest"],
                        json.dumps(c["values"], sort_keys=True)])
        return buf.getvalue()


# --- record helpers ----------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, (str, int, float, bool)) or x is None:
        return x
    try:
        return _jsonable(to_complex(x))
    except (TypeError, ValueError):
        return str(x)


def digest(inputs) -> str:
    text = json.dumps(_jsonable(inputs), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def record(cid: str, claim: str, inputs, values: dict, tolerance: float, passed: bool) -> dict:
    return {"id": cid, "claim": claim, "inputs_digest": digest(inputs), "values": _jsonable(values),
            "tolerance": float(tolerance), "pass": bool(passed)}


def _rel(a: complex, b: complex) -> float:
    return float(abs(a - b) / max(abs(a), abs(b)))


def _grid(t) -> hc.GridSpec:
    return hc.GridSpec(int(t[0]), int(t[1]))


def _word(d) -> list:
    return list(d.history or ())


def _wstr(d) -> str:
    return "word=" + (",".join(d.history) if d.history else "-")


def _label(i: CoeffIndex) -> list:
    return [i.k, i.twoL, i.twoN, i.twoM]


# --- suites --------------------------------------------------------------------------

def suite_normalization(cfg: VerifyConfig) -> list:
    tol = cfg.tolerance("normalization")
    target = -2j * np.pi ** 3
    out = []
    for R in (0.5, 1.0, 2.0):
        v = hc.cycle_integrate(lambda Z: 1 / hc.norm(Z) ** 2, R, hc.GridSpec(8, 12)).value
        err = _rel(v, target)
        out.append(record(f"normalization/R={R:g}", "cycle integral of dV/N^2 equals -2 pi^3 i",
                          {"R": R}, {"value": v, "target": target, "rel_error": err}, tol, err < tol))
    return out


def _orthogonality_poly(i: CoeffIndex) -> LaurentPoly:
    return tcoeff_poly(i.twoL, i.twoN, i.twoM) * LaurentPoly.Npow(i.k)


def suite_orthogonality(cfg: VerifyConfig) -> list:
    tol = cfg.tolerance("orthogonality")
    idx = list(labels(3, range(-2, 3)))
    polys = [_orthogonality_poly(i) for i in idx]
    mismatches = 0
    for (i1, p1), (i2, p2) in itertools.product(zip(idx, polys), repeat=2):
        if orthogonality_entry(i1, i2) != moment_pairing(p1, p2):
            mismatches += 1
    out = [record("orthogonality/exact", "closed-form orthogonality table equals the monomial moment oracle",
                  {"labels": [_label(i) for i in idx]}, {"pairs": len(idx) ** 2, "mismatches": mismatches},
                  0.0, mismatches == 0)]
    # quadrature Gram matrix on a grid fine enough for every product of degree <= 6
    R = 1.3
    Z, w = hc.cycle_nodes(R, hc.GridSpec(16, 12))
    V = np.stack([BasisVector.single(i.k, i.twoL, i.twoN, i.twoM).evaluate(Z) for i in idx])
    G = normalization(1) * (V * w) @ V.T
    E = np.array([[to_complex(orthogonality_entry(a, b)) for b in idx] for a in idx])
    err = float(np.max(np.abs(G - E)))
    out.append(record("orthogonality/quadrature", "quadrature Gram matrix matches the orthogonality table",
                      {"R": R, "labels": len(idx)}, {"max_abs_error": err}, tol, err < tol))
    return out


def _matrix_with_singular_values(rng, s):
    U, V = hc.random_unitary(rng, 2)
    return U @ np.diag(s) @ V


def suite_expansion(cfg: VerifyConfig) -> list:
    rng = np.random.default_rng(cfg.seed)
    out = []
    tol = cfg.tolerance("expansion")
    worst = 0.0
    for _ in range(5):
        W = _matrix_with_singular_values(rng, [1.7, 0.9])
        Z = _matrix_with_singular_values(rng, [0.5, 0.2]) @ W
        e = expand_inv_norm(W, 12)
        exact = 1 / complex(hc.norm(Z - W))
        worst = max(worst, abs(e.evaluate(Z) - exact) / abs(exact))
    out.append(record("expansion/truncation", "truncated expansion of 1/N(Z-W) at ratio 0.5, 2l <= 24",
                      {"seed": cfg.seed, "ratio": 0.5, "Lmax": 12}, {"max_rel_error": worst}, tol, worst < tol))

    # per-l decay at ratio 0.9: ZW^{-1} unitarily similar to diag(0.9, 0.5)
    rho = 0.9
    U = hc.random_unitary(rng)
    W = _matrix_with_singular_values(rng, [1.4, 0.8])
    Z = U @ np.diag([rho, 0.5]) @ U.conj().T @ W
    e = expand_inv_norm(W, 20)
    mags = np.abs(e.terms(Z))[::2]          # integer l only
    ls = np.arange(len(mags))
    sel = ls >= 10
    slope = np.polyfit(ls[sel], np.log(mags[sel]), 1)[0]
    rate = float(np.exp(slope))
    dev = abs(rate - rho ** 2) / rho ** 2
    tol = cfg.tolerance("decay")
    out.append(record("expansion/decay", "per-l decay rate of the expansion terms matches ratio^2",
                      {"seed": cfg.seed, "ratio": rho, "l_fit": [10, int(ls[-1])]},
                      {"rate": rate, "ratio_squared": rho ** 2, "relative_deviation": dev,
                       "curve": {"x": ls.tolist(), "y": mags.tolist(), "log": True}},
                      tol, dev < tol))
    return out


def suite_agreement(cfg: VerifyConfig) -> list:
    out = []
    if cfg.wants(1):
        d = one_loop()
        a = assign_radii(d, cfg.base, cfg.ratio)
        tol = cfg.tolerance("agreement1")
        for k in range(cfg.points1):
            p = sample_point(a, cfg.seed * 1000 + k)
            q = eval_quadrature(d, a, p, _grid(cfg.quad_grid1)).value
            s = eval_spectral(d, a, p, cfg.lmax).value
            err = _rel(q, s)
            out.append(record(f"agreement/n=1/point={k}", "quadrature and spectral one-loop values agree",
                              {"seed": cfg.seed, "k": k, "grid": cfg.quad_grid1, "lmax": cfg.lmax},
                              {"quadrature": q, "spectral": s, "rel_diff": err}, tol, err < tol))
    if cfg.wants(2):
        tol = cfg.tolerance("agreement2")
        for k in range(cfg.points2):
            d = two_loop_diagrams()[k % 2]
            a = assign_radii(d, cfg.base, cfg.ratio)
            p = sample_point(a, cfg.seed * 1000 + 100 + k)
            q = eval_quadrature(d, a, p, _grid(cfg.quad_grid2)).value
            s = eval_spectral(d, a, p, cfg.lmax).value
            err = _rel(q, s)
            out.append(record(f"agreement/n=2/point={k}", "quadrature and spectral two-loop values agree",
                              {"seed": cfg.seed, "k": k, "word": _word(d), "grid": cfg.quad_grid2, "lmax": cfg.lmax},
                              {"quadrature": q, "spectral": s, "rel_diff": err}, tol, err < tol))
    return out


def suite_magic(cfg: VerifyConfig) -> list:
    out = []
    if cfg.wants(2):
        ds = enumerate_diagrams(2)
        asg = [assign_radii(d, cfg.base, cfg.ratio) for d in ds]
        tol = cfg.tolerance("magic2")
        for k in range(cfg.points2):
            p = common_point(ds, asg, seed=cfg.seed * 1000 + 200 + k)
            v = [eval_spectral(d, a, p, cfg.lmax).value for d, a in zip(ds, asg)]
            err = _rel(v[0], v[1])
            out.append(record(f"magic/n=2/point={k}", "the two-loop box integrals coincide",
                              {"seed": cfg.seed, "k": k, "lmax": cfg.lmax},
                              {"values": v, "rel_diff": err}, tol, err < tol))
    if cfg.wants(3):
        ds = enumerate_diagrams(3)
        asg = [assign_radii(d, cfg.base, cfg.ratio) for d in ds]
        sig = cfg.tolerance("sigmas")
        for k in range(cfg.points3):
            p = common_point(ds, asg, seed=cfg.seed * 1000 + 300 + k)
            res = [eval_montecarlo(d, a, p, samples=cfg.samples, seed=cfg.seed * 1000 + 10 * k + j)
                   for j, (d, a) in enumerate(zip(ds, asg))]
            worst, ok = 0.0, True
            for r1, r2 in itertools.combinations(res, 2):
                z = abs(r1.value - r2.value) / math.hypot(r1.error, r2.error)
                worst = max(worst, z)
                ok = ok and z <= sig
            out.append(record(f"magic/n=3/point={k}", "all three-loop box integrals coincide within Monte Carlo error",
                              {"seed": cfg.seed, "k": k, "samples": cfg.samples},
                              {"values": [r.value for r in res], "stderr": [r.error for r in res],
                               "worst_sigma": worst}, sig, ok))
    return out


def suite_conformal(cfg: VerifyConfig) -> list:
    out = []
    for n, key in ((1, "conformal1"), (2, "conformal2")):
        if not cfg.wants(n):
            continue
        tol = cfg.tolerance(key)
        lmax = cfg.conformal_lmax[n - 1]
        for d in enumerate_diagrams(n):
            a = assign_radii(d, cfg.base, cfg.ratio)
            p = sample_point(a, cfg.seed * 1000 + 400 + n)
            R = float(np.sqrt(max(a.r.values()) * min(a.r.values())))
            for k in range(5):
                h = hc.sample_group_element(R, 0.1, cfg.seed * 1000 + 410 + k)
                try:
                    defect = conformal_check(d, a, p, h,
                                             value_fn=lambda pt: eval_spectral(d, a, pt, lmax).value)
                    ok, note = defect < tol, ""
                except BoxMagicError as e:
                    defect, ok, note = float("nan"), False, f"{type(e).__name__}: {e}"
                out.append(record(f"conformal/n={n}/{_wstr(d)}/h={k}",
                                  "the integral transforms covariantly under the conformal action",
                                  {"seed": cfg.seed, "k": k, "R": R, "word": _word(d), "lmax": lmax},
                                  {"defect": defect, "note": note}, tol, ok))
    return out


HARMONIC_STEPS = (4e-3, 2e-3, 1e-3)


def suite_harmonic(cfg: VerifyConfig) -> list:
    out = []
    tol = cfg.tolerance("harmonic")
    slack = cfg.tolerance("harmonic_slope")
    cases = [d for n, d in ((1, one_loop()), (2, from_word(["Z1"]))) if cfg.wants(n)]
    for d in cases:
        a = assign_radii(d, cfg.base, cfg.ratio)
        p = sample_point(a, cfg.seed * 1000 + 500 + d.n)
        for var in ("Z1", "Z2", "W1", "W2"):
            res = [laplacian_residual(d, a, p, var, h, cfg.lmax) for h in HARMONIC_STEPS]
            slope = float(np.polyfit(np.log(HARMONIC_STEPS), np.log(res), 1)[0])
            ok = res[-1] < tol and abs(slope - 2) < slack
            out.append(record(f"harmonic/n={d.n}/{var}", "finite-difference Laplacian of the integral vanishes like h^2",
                              {"seed": cfg.seed, "word": _word(d), "var": var, "steps": HARMONIC_STEPS},
                              {"residuals": res, "slope": slope,
                               "curve": {"x": list(HARMONIC_STEPS), "y": res, "log": True}},
                              tol, ok))
    return out


def _zh_inputs():
    return [BasisVector.single(*_label(i)) for i in labels(2, (-1, 0, 1))]


def suite_annihilation(cfg: VerifyConfig) -> list:
    tol = cfg.tolerance("annihilation")
    ninv2 = BasisVector.single(-2, 0, 0, 0)
    one = BasisVector.single(0, 0, 0, 0)
    slots = {"N^-2 x f": lambda f: (ninv2, f), "f x N^-2": lambda f: (f, ninv2),
             "1 x f": lambda f: (one, f), "f x 1": lambda f: (f, one)}
    out = []
    for n in (1, 2):
        if not cfg.wants(n):
            continue
        for d in enumerate_diagrams(n):
            for name, make in slots.items():
                worst = 0.0
                for f in _zh_inputs():
                    worst = max(worst, Lbar(d, *make(f), cfg.lmax).norm())
                out.append(record(f"annihilation/n={n}/{_wstr(d)}/{name}",
                                  "L-bar vanishes on the annihilated generators",
                                  {"word": _word(d), "slot": name, "inputs": "2l<=2, k in -1..1"},
                                  {"max_norm": worst}, tol, worst < tol))
    return out


def _duality_inputs(rng, count: int):
    """Random (f1, f2, phi1, phi2) with f in Zh (2l <= 2) and phi in H- (2l <= 2)."""
    zh = [i for i in labels(2, (-3, -2, -1))]
    hm = [(twoL, twoN, twoM) for twoL in range(3) for twoN in range(-twoL, twoL + 1, 2)
          for twoM in range(-twoL, twoL + 1, 2)]
    for _ in range(count):
        f = [BasisVector.single(*_label(zh[j])) for j in rng.choice(len(zh), 2)]
        phi = [h_minus(*hm[j]) for j in rng.choice(len(hm), 2)]
        yield f[0], f[1], phi[0], phi[1]


def suite_operators(cfg: VerifyConfig) -> list:
    out = []
    one = BasisVector.single(0, 0, 0, 0)
    if cfg.wants(1):
        tol = cfg.tolerance("identity")
        got = L(one_loop(), one, one, cfg.lmax)
        ref = TensorBasisVector.product(one, one, "H+")
        err = (got - ref).norm()
        out.append(record("operators/identity", "the one-loop operator fixes 1 x 1",
                          {"lmax": cfg.lmax}, {"coeff_norm_error": err}, tol, err < tol))
    if cfg.wants(2):
        tol = cfg.tolerance("operator_magic")
        d1, d2 = two_loop_diagrams()
        inputs = [BasisVector.single(*_label(i)) for i in labels(2, (-1,))]
        worst, count = 0.0, 0
        for f1, f2 in itertools.product(inputs, repeat=2):
            worst = max(worst, (Lbar(d1, f1, f2, cfg.lmax) - Lbar(d2, f1, f2, cfg.lmax)).norm())
            count += 1
        out.append(record("operators/magic", "the two two-loop L-bar operators agree coefficient-wise",
                          {"inputs": "2l<=2, k=-1", "lmax": cfg.lmax}, {"pairs": count, "max_norm_diff": worst},
                          tol, worst < tol))
    tol = cfg.tolerance("scalar")
    for n in (1, 2):
        if not cfg.wants(n):
            continue
        for d in enumerate_diagrams(n):
            for k in (1, 2):
                mu, res = scalar_action_check(d, k, cfg.lmax)
                out.append(record(f"operators/scalar/n={n}/{_wstr(d)}/k={k}",
                                  "the operator acts on the k-th generator by a scalar",
                                  {"word": _word(d), "k": k}, {"mu": mu, "residual": res}, tol, res < tol))
    tol = cfg.tolerance("duality")
    for n in (1, 2):
        if not cfg.wants(n):
            continue
        for d in enumerate_diagrams(n):
            rng = np.random.default_rng(cfg.seed * 1000 + 600 + n)
            worst = 0.0
            for f1, f2, p1, p2 in _duality_inputs(rng, 6):
                worst = max(worst, duality_check(d, f1, f2, p1, p2, cfg.lmax))
            out.append(record(f"operators/duality/n={n}/{_wstr(d)}",
                              "pairing L-bar against H- equals pairing L-acute against Zh",
                              {"word": _word(d), "seed": cfg.seed, "samples": 6}, {"max_defect": worst},
                              tol, worst < tol))
    return out


def _all_words(n: int):
    return itertools.product(TARGETS, repeat=n - 1)


def suite_structure(cfg: VerifyConfig) -> list:
    out = []
    bad, count = [], 0
    for n in range(1, cfg.max_words + 1):
        for word in _all_words(n):
            count += 1
            if not from_word(list(word)).degree_identities_hold():
                bad.append(list(word))
    out.append(record("structure/degrees", "vertex degree identities hold for every attachment word",
                      {"max_loops": cfg.max_words}, {"diagrams": count, "failures": bad}, 0.0, not bad))
    classes = len({canonical_form(from_word(list(w))) for w in _all_words(2)})
    out.append(record("structure/two-loop-classes", "there are exactly two two-loop diagrams up to isomorphism",
                      {}, {"classes": classes}, 0.0, classes == 2))
    tol = cfg.tolerance("radius")
    for n in (1, 2):
        if not cfg.wants(n):
            continue
        for d in enumerate_diagrams(n):
            p = sample_point(assign_radii(d, 1.2, 3.0), cfg.seed * 1000 + 700 + n)
            spread = radius_independence(d, p)
            out.append(record(f"structure/radius/n={n}/{_wstr(d)}",
                              "the integral does not depend on admissible cycle radii",
                              {"word": _word(d), "seed": cfg.seed, "ratios": [2.0, 3.0]},
                              {"rel_spread": spread}, tol, spread < tol))
    return out


SUITE_FUNCS: dict[str, Callable[[VerifyConfig], list]] = {
    "normalization": suite_normalization,
    "orthogonality": suite_orthogonality,
    "expansion": suite_expansion,
    "agreement": suite_agreement,
    "magic": suite_magic,
    "conformal": suite_conformal,
    "harmonic": suite_harmonic,
    "annihilation": suite_annihilation,
    "operators": suite_operators,
    "structure": suite_structure,
}


def run_suite(name: str, cfg: VerifyConfig | None = None) -> VerifyReport:
    """Run one suite (or ``"all"``) and collect its records sorted by id."""
    cfg = cfg or VerifyConfig()
    if name != "all" and name not in SUITE_FUNCS:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)} or all")
    t0 = time.perf_counter()
    checks = []
    for s in (SUITES if name == "all" else (name,)):
        checks.extend(SUITE_FUNCS[s](cfg))
    checks.sort(key=lambda c: c["id"])
    snapshot: dict[str, Any] = _jsonable(asdict(cfg))
    snapshot["effective_tolerances"] = {k: cfg.tolerance(k) for k in DEFAULT_TOLERANCES}
    return VerifyReport(name, checks, snapshot, cfg.seed, time.perf_counter() - t0)


__all__ = ["SCHEMA_VERSION", "SUITES", "DEFAULT_TOLERANCES", "VerifyConfig", "VerifyReport", "digest",
           "record", "run_suite"]
