"""Command-line front end: ``boxmagic diagram|eval|verify``."""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import hc
from .diagrams import (MAX_ENUMERATE, TARGETS, BoxDiagram, EvalPoint, assign_radii, canonical_form,
                       enumerate_diagrams, from_word, sample_point)
from .errors import BoxMagicError, DomainViolation
from .evaluate import evaluate
from .verify import SUITES, VerifyConfig, run_suite


def parse_word(text: str | None) -> list:
    """``"Z1,W2"`` -> ``["Z1", "W2"]``; empty or missing means the one-loop diagram."""
    if not text:
        return []
    word = [t.strip() for t in text.replace(" ", ",").split(",") if t.strip()]
    bad = [t for t in word if t not in TARGETS]
    if bad:
        raise ValueError(f"invalid attachment target(s) {bad}; expected letters from {list(TARGETS)}")
    if len(word) + 1 > MAX_ENUMERATE:
        raise ValueError(f"at most {MAX_ENUMERATE} loops are supported")
    return word


def canonical_key(d: BoxDiagram) -> str:
    form = json.dumps(canonical_form(d), default=list)
    return hashlib.sha256(form.encode()).hexdigest()[:16]


def _diagram_entry(d: BoxDiagram) -> dict:
    out = d.to_dict(explicit=True)
    out["word"] = list(d.history or ())
    out["key"] = canonical_key(d)
    return out


def cmd_diagram(args) -> int:
    if args.subcmd == "build":
        d = from_word(parse_word(args.word[0] if args.word else ""))
        print(json.dumps(_diagram_entry(d), indent=2))
    elif args.subcmd == "list":
        if not 1 <= args.loops <= MAX_ENUMERATE:
            raise ValueError(f"--loops must be between 1 and {MAX_ENUMERATE}")
        print(json.dumps([_diagram_entry(d) for d in enumerate_diagrams(args.loops)], indent=2))
    else:
        words = args.word or [""]
        print(json.dumps([{"word": parse_word(w), "key": canonical_key(from_word(parse_word(w)))}
                          for w in words], indent=2))
    return 0


def cmd_eval(args) -> int:
    d = from_word(parse_word(args.word))
    a = assign_radii(d, args.base, args.ratio)
    if args.point:
        p = EvalPoint.from_dict(json.loads(Path(args.point).read_text()))
    else:
        p = sample_point(a, args.seed)
    kw = {}
    if args.method == "spectral":
        kw["Lmax"] = args.lmax
    elif args.method == "quad":
        kw["grid"] = hc.GridSpec(*(int(x) for x in args.grid.split(",")))
    elif args.method == "mc":
        kw.update(samples=args.samples, seed=args.seed)
    res = evaluate(d, a, p, args.method, **kw)
    rec = res.to_record(word=list(d.history or ()), loops=d.n, seed=args.seed,
                        point=p.to_dict(), radii=a.r)
    print(json.dumps(rec, indent=2, sort_keys=True))
    return 0


def load_config(path: str | None) -> dict:
    if not path:
        return {}
    text = Path(path).read_text()
    if path.endswith(".json"):
        return json.loads(text)
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    data = tomllib.loads(text)
    return data.get("verify", data)


def _plot(report, directory: str) -> list:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    out = []
    Path(directory).mkdir(parents=True, exist_ok=True)
    for c in report.checks:
        curve = c["values"].get("curve") if isinstance(c["values"], dict) else None
        if not curve:
            continue
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.plot(curve["x"], curve["y"], "o-")
        if curve.get("log"):
            ax.set_yscale("log")
            if min(curve["x"]) > 0 and max(curve["x"]) / min(curve["x"]) > 3:
                ax.set_xscale("log")
        ax.set_title(c["id"])
        fname = Path(directory) / (c["id"].replace("/", "_").replace("=", "") + ".png")
        fig.tight_layout()
        fig.savefig(fname)
        plt.close(fig)
        out.append(str(fname))
    return out


def cmd_verify(args) -> int:
    data = load_config(args.config)
    for key in ("seed", "loops", "tol", "lmax", "samples", "base", "ratio"):
        v = getattr(args, key)
        if v is not None:
            data[key] = v
    cfg = VerifyConfig.from_mapping(data)
    report = run_suite(args.suite, cfg)
    text = report.to_csv() if args.csv else report.to_json()
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    if args.plot:
        for f in _plot(report, args.plot):
            print(f"wrote {f}", file=sys.stderr)
    failed = [c["id"] for c in report.checks if not c["pass"]]
    for cid in failed:
        print(f"FAIL {cid}", file=sys.stderr)
    return 0 if not failed else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="boxmagic", description="Box diagrams, evaluations and verification suites.")
    sub = ap.add_subparsers(dest="command", required=True)

    pd = sub.add_parser("diagram", help="build, list or canonicalize diagrams")
    pd.add_argument("subcmd", choices=("build", "list", "canon"))
    pd.add_argument("--word", action="append", help="attachment word such as Z2 or Z1,W2 (repeat for canon)")
    pd.add_argument("--loops", type=int, default=1)
    pd.set_defaults(func=cmd_diagram)

    pe = sub.add_parser("eval", help="evaluate a box integral at one point")
    pe.add_argument("--word", default="")
    pe.add_argument("--method", choices=("quad", "mc", "spectral"), default="spectral")
    pe.add_argument("--lmax", type=float, default=8)
    pe.add_argument("--grid", default="40,20", help="quadrature grid as N_PERIODIC,N_GAUSS")
    pe.add_argument("--samples", type=int, default=100_000)
    pe.add_argument("--seed", type=int, default=0)
    pe.add_argument("--point", help="JSON file with Z1, Z2, W1, W2 as [[[re, im], ...], ...]")
    pe.add_argument("--base", type=float, default=1.0)
    pe.add_argument("--ratio", type=float, default=2.0)
    pe.set_defaults(func=cmd_eval)

    pv = sub.add_parser("verify", help="run a verification suite")
    pv.add_argument("suite", choices=SUITES + ("all",))
    pv.add_argument("--loops", type=int)
    pv.add_argument("--seed", type=int)
    pv.add_argument("--tol", type=float, help="override every numeric threshold")
    pv.add_argument("--lmax", type=float)
    pv.add_argument("--samples", type=int)
    pv.add_argument("--base", type=float)
    pv.add_argument("--ratio", type=float)
    pv.add_argument("--config", help="TOML or JSON file with VerifyConfig fields")
    fmt = pv.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="JSON report (default)")
    fmt.add_argument("--csv", action="store_true", help="one CSV row per check")
    pv.add_argument("--output", "-o", help="write the report to a file instead of stdout")
    pv.add_argument("--plot", metavar="DIR", help="write convergence plots as PNG files (needs matplotlib)")
    pv.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DomainViolation as e:
        print(f"DomainViolation: {e}", file=sys.stderr)
        return 3
    except (BoxMagicError, ValueError) as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
