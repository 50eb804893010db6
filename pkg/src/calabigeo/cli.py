"""Command-line front end.

JSON goes to standard output (or ``--json PATH``), a short human summary to
standard error. Exit codes: 0 success, 1 usage or parse error, 2 the function
fails a mathematical precondition (domain, convexity, a required verdict).
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .calabi import DEFAULT_TOL, VERDICT_KEYS, geometry_report, verify_function
from .decompose import analyze
from .expr import DomainError, Expr, ExprSyntaxError, jet4, max_var_index, parse, to_text
from .product import CatalogError, catalog, catalog_names, join_calabi_factor
from .tensors import NotPositiveDefinite

EXIT_OK, EXIT_USAGE, EXIT_MATH = 0, 1, 2
DEFAULT_REQUIRE = ("convex", "parallel", "codazzi", "gauss", "scalar_identity")
_WIDE_ARITY = 1 << 20


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    func: str | None = None
    catalog: str | None = None
    params: str | None = None
    arity: int | None = None
    points: list[list[float]] = field(default_factory=list)
    box: list[tuple[float, float]] | None = None
    samples: int = 32
    seed: int = 0
    tol: float = DEFAULT_TOL
    json_path: str | None = None
    require: tuple[str, ...] = DEFAULT_REQUIRE

    def validate(self):
        if self.command in ("analyze", "verify"):
            if (self.func is None) == (self.catalog is None):
                raise UsageError("give exactly one of --func or --catalog")
            if self.params and self.catalog is None:
                raise UsageError("--params only applies to --catalog")
        if not self.tol > 0:
            raise UsageError("--tol must be positive")
        if self.samples < 1:
            raise UsageError("--samples must be at least 1")


# --------------------------------------------------------------------------
# argument syntax


_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_INTERVAL = re.compile(rf"\[\s*({_NUM})\s*,\s*({_NUM})\s*\]")


def parse_point(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"bad point {text!r}; expected comma-separated numbers") from None
    if not all(math.isfinite(v) for v in vals):
        raise UsageError(f"point {text!r} has non-finite coordinates")
    return vals


def parse_box(text: str) -> list[tuple[float, float]]:
    """``"[a,b]^n"`` or ``"[a1,b1]x[a2,b2]..."``."""
    s = text.replace(" ", "")
    m = re.fullmatch(rf"\[({_NUM}),({_NUM})\](?:\^(\d+))?", s)
    if m:
        reps = int(m.group(3) or 1)
        if reps < 1:
            raise UsageError("box power must be positive")
        out = [(float(m.group(1)), float(m.group(2)))] * reps
    else:
        parts = s.split("x")
        out = []
        for part in parts:
            pm = _INTERVAL.fullmatch(part)
            if pm is None:
                raise UsageError(f"bad box {text!r}; expected [a,b]^n or [a1,b1]x[a2,b2]")
            out.append((float(pm.group(1)), float(pm.group(2))))
    for a, b in out:
        if not a < b:
            raise UsageError(f"box interval [{a}, {b}] is empty")
    return out


def parse_require(text: str) -> tuple[str, ...]:
    if text == "all":
        return VERDICT_KEYS
    keys = tuple(k.strip() for k in text.split(",") if k.strip())
    bad = [k for k in keys if k not in VERDICT_KEYS]
    if bad:
        raise UsageError(f"unknown verdict(s) {', '.join(bad)}; choose from {', '.join(VERDICT_KEYS)}")
    return keys


def _finite(obj):
    """Replace NaN/inf by None so the document is strict JSON."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, np.generic):
        return _finite(obj.item())
    return obj


def dump_json(doc: dict) -> str:
    return json.dumps(_finite(doc), indent=2, allow_nan=False) + "\n"


# --------------------------------------------------------------------------
# resolving the function


def _resolve(cfg: RunConfig) -> tuple[Expr, int, list[tuple[float, float]] | None, dict]:
    if cfg.catalog is not None:
        entry = catalog(cfg.catalog, cfg.params)
        if cfg.arity is not None and cfg.arity != entry.arity:
            raise UsageError(f"--arity {cfg.arity} does not match {entry.name} (arity {entry.arity})")
        return entry.expr, entry.arity, list(entry.box), {"catalog": entry.to_json()}
    arity = cfg.arity
    if arity is None:
        if cfg.points:
            arity = len(cfg.points[0])
        elif cfg.box:
            arity = len(cfg.box)
        else:
            arity = max(1, max_var_index(parse(cfg.func, _WIDE_ARITY)))
    e = parse(cfg.func, arity)
    return e, arity, None, {"func": to_text(e)}


# --------------------------------------------------------------------------
# commands


def run_analyze(cfg: RunConfig) -> tuple[dict, int, str]:
    if not cfg.points:
        raise UsageError("analyze needs at least one --point")
    e, n, _, source = _resolve(cfg)
    for p in cfg.points:
        if len(p) != n:
            raise UsageError(f"point {p} has {len(p)} coordinates, function has arity {n}")
    results = []
    code = EXIT_OK
    lines = []
    for p in cfg.points:
        try:
            a = analyze(geometry_report(jet4(e, p, n)), seed=cfg.seed)
        except DomainError as exc:
            results.append({"point": p, "error": "domain", "message": str(exc)})
            code = EXIT_MATH
            lines.append(f"{p}: domain error: {exc}")
            continue
        except NotPositiveDefinite as exc:
            results.append({"point": p, "error": "not_convex", "message": str(exc)})
            code = EXIT_MATH
            lines.append(f"{p}: not strictly convex: {exc}")
            continue
        doc = a.to_json(cfg.tol)
        results.append(doc)
        prof = doc["profile"]
        lines.append(f"{p}: mu1={prof['mu1']:.6g} case={prof['case']} branch={prof['branch']} R={doc['scalar_R']:.6g}")
    out = {
        "command": "analyze",
        "version": __version__,
        **source,
        "arity": n,
        "seed": cfg.seed,
        "tol": cfg.tol,
        "points": results,
    }
    return out, code, "\n".join(lines)


def run_verify(cfg: RunConfig) -> tuple[dict, int, str]:
    e, n, default_box, source = _resolve(cfg)
    box = cfg.box or default_box
    if box is None:
        raise UsageError("verify needs --box for an inline function")
    if len(box) != n:
        raise UsageError(f"box has {len(box)} intervals, function has arity {n}")
    rep = verify_function(e, box, cfg.samples, cfg.seed, cfg.tol)
    doc = {"command": "verify", "version": __version__, **source, "arity": n, **rep.to_json(), "required": list(cfg.require)}
    failed = [k for k in cfg.require if not rep.verdicts.get(k, False)]
    code = EXIT_MATH if failed else EXIT_OK
    summary = " ".join(f"{k}={'yes' if v else 'no'}" for k, v in rep.verdicts.items())
    if rep.message:
        summary += f"\n{rep.message}"
    if failed:
        summary += f"\nrequired verdict(s) failed: {', '.join(failed)}"
    return doc, code, summary


def run_catalog(cfg: RunConfig, action: str, name: str | None) -> tuple[dict, int, str]:
    if action == "list":
        entries = [catalog(nm).to_json() for nm in catalog_names()]
        return {"command": "catalog list", "entries": entries}, EXIT_OK, ", ".join(catalog_names())
    entry = catalog(name, cfg.params)
    return {"command": "catalog get", **entry.to_json()}, EXIT_OK, f"{entry.name}: {to_text(entry.expr)}"


def run_product(factor: str, lam: float, shift: bool) -> tuple[dict, int, str]:
    f2 = parse(factor, _WIDE_ARITY)
    joined = join_calabi_factor(f2, lam, shifted=not shift)
    text = to_text(joined)
    n = max(1, max_var_index(joined))
    return {"command": "product join", "factor": factor, "lambda": lam, "expr": text, "arity": n}, EXIT_OK, text


# --------------------------------------------------------------------------
# argparse wiring


def _add_source(p: argparse.ArgumentParser, with_box: bool):
    p.add_argument("--func", help="potential in the expression grammar, e.g. \"-ln(x1)+x2^2/2\"")
    p.add_argument("--catalog", help="catalog entry name")
    p.add_argument("--params", help="catalog parameters, e.g. \"c=2,3;n=4\"")
    p.add_argument("--arity", type=int, help="number of variables (inferred when omitted)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--json", dest="json_path", help="write JSON here instead of standard output")
    if with_box:
        p.add_argument("--box", help="\"[a,b]^n\" or \"[a1,b1]x[a2,b2]...\" (defaults to the catalog box)")
        p.add_argument("--samples", type=int, default=32)
        p.add_argument("--require", default=",".join(DEFAULT_REQUIRE), help="verdicts that must hold for exit 0, or \"all\"")
    else:
        p.add_argument("--point", action="append", default=[], help="comma-separated coordinates (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="calabigeo", description="Invariants and classification of Calabi hypersurfaces.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add_source(sub.add_parser("analyze", help="invariants and classification at points"), with_box=False)
    _add_source(sub.add_parser("verify", help="sample a box and certify parallelism and flatness"), with_box=True)

    cat = sub.add_parser("catalog", help="built-in example potentials")
    cat_sub = cat.add_subparsers(dest="action", required=True, parser_class=_Parser)
    cat_sub.add_parser("list")
    get = cat_sub.add_parser("get")
    get.add_argument("name")
    get.add_argument("--params")
    for p in (cat, get):
        p.add_argument("--json", dest="json_path", default=argparse.SUPPRESS)

    prod = sub.add_parser("product", help="Calabi products of potentials")
    prod_sub = prod.add_subparsers(dest="action", required=True, parser_class=_Parser)
    join = prod_sub.add_parser("join", help="-(1/lambda^2) ln x1 + factor(x2, ...)")
    join.add_argument("--factor", required=True, help="factor potential written in x2, x3, ...")
    join.add_argument("--lambda", dest="lam", type=float, default=1.0)
    join.add_argument("--shift", action="store_true", help="the factor is written in x1, x2, ...; move it to x2, x3, ...")
    join.add_argument("--json", dest="json_path")
    return ap


def _config(ns) -> RunConfig:
    cfg = RunConfig(command=ns.command)
    for name in ("func", "catalog", "params", "arity", "seed", "tol", "samples", "json_path"):
        if hasattr(ns, name) and getattr(ns, name) is not None:
            setattr(cfg, name, getattr(ns, name))
    if getattr(ns, "point", None):
        cfg.points = [parse_point(p) for p in ns.point]
    if getattr(ns, "box", None):
        cfg.box = parse_box(ns.box)
    if getattr(ns, "require", None) is not None:
        cfg.require = parse_require(ns.require)
    cfg.validate()
    return cfg


# values of these flags may start with "-" (e.g. "-ln(x1)"), which argparse would
# otherwise read as an option
_VALUE_FLAGS = ("--func", "--factor", "--point", "--box", "--params")


def _glue_values(argv: list[str]) -> list[str]:
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    ns = build_parser().parse_args(_glue_values(argv))
    try:
        cfg = _config(ns)
        if ns.command == "analyze":
            doc, code, summary = run_analyze(cfg)
        elif ns.command == "verify":
            doc, code, summary = run_verify(cfg)
        elif ns.command == "catalog":
            doc, code, summary = run_catalog(cfg, ns.action, getattr(ns, "name", None))
        else:
            doc, code, summary = run_product(ns.factor, ns.lam, ns.shift)
    except (UsageError, ExprSyntaxError, CatalogError) as exc:
        print(f"calabigeo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, NotPositiveDefinite) as exc:
        print(f"calabigeo: {exc}", file=sys.stderr)
        return EXIT_MATH
    except ValueError as exc:
        print(f"calabigeo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    text = dump_json(doc)
    if cfg.json_path:
        with open(cfg.json_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if summary:
        print(summary, file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
