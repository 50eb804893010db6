"""Calabi products at the potential level, the example catalog, and pointwise
checks of the product tensor relations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations
from typing import Callable

import numpy as np

from .calabi import GeometryReport
from .expr import Expr, add, const, div, ln, mul, neg, power, shift_vars, sub, to_text, var

__all__ = [
    "CatalogEntry",
    "CatalogError",
    "ProductCheck",
    "ProductCheckError",
    "q_family",
    "join_calabi_factor",
    "catalog",
    "catalog_names",
    "parse_params",
    "product_structure_check",
    "radial_direction",
]


class CatalogError(ValueError):
    pass


class ProductCheckError(ValueError):
    pass


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    params: dict
    expr: Expr
    box: tuple[tuple[float, float], ...]
    citation: str
    box_note: str = "hand-chosen sub-box of the convexity region"

    @property
    def arity(self) -> int:
        return len(self.box)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "params": {k: (list(v) if isinstance(v, tuple) else v) for k, v in sorted(self.params.items())},
            "expr": to_text(self.expr),
            "box": [list(iv) for iv in self.box],
            "citation": self.citation,
            "box_note": self.box_note,
        }


def _sum(terms) -> Expr:
    """Left-nested sum that writes negated terms as subtractions."""
    out = const(0.0)
    for t in terms:
        if _is_zero(out):
            out = t
        elif t.op == "neg":
            out = sub(out, t.args[0])
        elif t.op in ("mul", "div") and t.args[0].op == "const" and t.args[0].value < 0:
            out = sub(out, Expr(t.op, (const(-t.args[0].value), t.args[1])))
        else:
            out = add(out, t)
    return out


def _is_zero(e: Expr) -> bool:
    return e.op == "const" and e.value == 0.0


def _terms(e: Expr) -> list[Expr]:
    """Summands of a top-level add/sub chain, with subtracted terms negated."""
    if e.op == "add":
        return _terms(e.args[0]) + _terms(e.args[1])
    if e.op == "sub":
        return _terms(e.args[0]) + [neg(t) for t in _terms(e.args[1])]
    return [e]


def _lorentz(time: int, space) -> Expr:
    """``x_time^2 - sum x_s^2``."""
    return _sum([power(var(time), 2)] + [neg(power(var(s), 2)) for s in space])


def q_family(c, n: int) -> Expr:
    """``-sum c_i ln x_i + 1/2 sum_{j>r} x_j^2`` with ``r = len(c)``."""
    c = [float(v) for v in np.atleast_1d(c)]
    r = len(c)
    if r < 1:
        raise CatalogError("q-family needs at least one coefficient")
    if any(not v > 0 for v in c):
        raise CatalogError("q-family coefficients must be positive")
    if r > n:
        raise CatalogError(f"q-family has {r} coefficients but dimension {n}")
    terms = [neg(mul(const(ci), ln(var(i + 1)))) if ci != 1.0 else neg(ln(var(i + 1))) for i, ci in enumerate(c)]
    terms += [div(power(var(j), 2), const(2.0)) for j in range(r + 1, n + 1)]
    return _sum(terms)


def join_calabi_factor(f2: Expr, lam: float, shifted: bool = True) -> Expr:
    """Graph potential of the product of a Calabi hypersurface with a point.

    ``f2`` is written in ``x2, x3, ...`` when ``shifted`` is true, otherwise in
    ``x1, x2, ...`` and is moved over by one index. The result is
    ``-(1/lam^2) ln x1 + f2``.
    """
    lam = float(lam)
    if lam == 0.0 or not math.isfinite(lam):
        raise CatalogError("lambda must be a nonzero real")
    if shifted:
        if _uses_var(f2, 1):
            raise CatalogError("factor uses x1; pass shifted=False to move it to x2..")
    else:
        f2 = shift_vars(f2, 1)
    k = 1.0 / (lam * lam)
    head = neg(ln(var(1))) if k == 1.0 else neg(mul(const(k), ln(var(1))))
    return _sum([head] + _terms(f2))


def _uses_var(e: Expr, i: int) -> bool:
    if e.op == "var":
        return e.value == i
    return any(_uses_var(a, i) for a in e.args)


# --------------------------------------------------------------------------
# parameters


def parse_params(text: str | None) -> dict:
    """``"c=2,3;n=4"`` -> ``{"c": (2.0, 3.0), "n": 4.0}``."""
    out: dict = {}
    if not text:
        return out
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        key, sep, val = chunk.partition("=")
        key = key.strip()
        if not sep or not key:
            raise CatalogError(f"bad parameter {chunk!r}; expected name=value")
        try:
            nums = tuple(float(v) for v in val.split(","))
        except ValueError:
            raise CatalogError(f"parameter {key!r} has a non-numeric value {val!r}") from None
        if key in out:
            raise CatalogError(f"parameter {key!r} given twice")
        out[key] = nums if len(nums) > 1 else nums[0]
    return out


_ALIASES = {"lam": "lambda", "λ": "lambda", "a": "alpha", "b": "beta", "g": "gamma"}


def _as_int(name: str, v, lo: int) -> int:
    if isinstance(v, tuple) or float(v) != int(v):
        raise CatalogError(f"parameter {name!r} must be an integer")
    if int(v) < lo:
        raise CatalogError(f"parameter {name!r} must be at least {lo}")
    return int(v)


def _positive(name: str, v) -> float:
    if isinstance(v, tuple) or not float(v) > 0:
        raise CatalogError(f"parameter {name!r} must be a positive real")
    return float(v)


def _nonzero(name: str, v) -> float:
    if isinstance(v, tuple) or float(v) == 0.0 or not math.isfinite(float(v)):
        raise CatalogError(f"parameter {name!r} must be a nonzero real")
    return float(v)


# --------------------------------------------------------------------------
# catalog builders


def _paraboloid(p):
    n = _as_int("n", p.get("n", 2), 1)
    e = _sum(div(power(var(i), 2), const(2.0)) for i in range(1, n + 1))
    return e, ((-1.0, 1.0),) * n, {"n": n}, "elliptic paraboloid, vanishing cubic form"


def _q(p):
    c = p.get("c", 1.0)
    c = tuple(float(v) for v in np.atleast_1d(c))
    n = _as_int("n", p.get("n", max(2, len(c))), 1)
    e = q_family(c, n)
    return e, ((1.0, 2.0),) * n, {"c": c, "n": n}, "flat canonical family Q(c_1..c_r; n)"


def _log_linear_terms(alpha, beta, gamma, lam):
    k = 1.0 / ((alpha + beta + gamma) * lam * lam)
    return [neg(mul(const(k * w), ln(var(i)))) for i, w in zip((1, 2, 3), (alpha, beta, gamma))]


def _abgl(p, names=("alpha", "beta", "gamma")):
    vals = {k: _positive(k, p.get(k, 1.0)) for k in names}
    vals["lambda"] = _nonzero("lambda", p.get("lambda", 1.0))
    return vals


def _log_linear(p):
    v = _abgl(p)
    e = _sum(_log_linear_terms(v["alpha"], v["beta"], v["gamma"], v["lambda"]))
    return e, ((1.0, 2.0),) * 3, v, "product of the surface y1^a y2^b y3^c = 1 with a point"


def _log_quadric(p):
    lam = _nonzero("lambda", p.get("lambda", 1.0))
    e = mul(const(-1.0 / (2 * lam * lam)), ln(_lorentz(3, (1, 2))))
    box = ((-0.5, 0.5), (-0.5, 0.5), (1.5, 2.5))
    return e, box, {"lambda": lam}, "product of the hyperboloid y1^2 + y2^2 - y3^2 = -1 with a point"


def _log_lorentz_4(p):
    v = _abgl(p, ("alpha", "beta"))
    alpha, beta, lam = v["alpha"], v["beta"], v["lambda"]
    k = 1.0 / ((2 * alpha + beta) * lam * lam)
    e = _sum([mul(const(-k * beta), ln(var(4))), mul(const(-k * alpha), ln(_lorentz(1, (2, 3))))])
    box = ((1.5, 2.5), (-0.5, 0.5), (-0.5, 0.5), (1.0, 2.0))
    return e, box, v, "product of (y1^2 - y2^2 - y3^2)^a y4^b = 1 with a point"


def _mixed_r6(p):
    v = _abgl(p)
    terms = _log_linear_terms(v["alpha"], v["beta"], v["gamma"], v["lambda"])
    terms += [power(var(4), 2), power(var(5), 2)]
    box = ((1.0, 2.0),) * 3 + ((-1.0, 1.0),) * 2
    return _sum(terms), box, v, "product of y1^a y2^b y3^c = 1 with an elliptic paraboloid"


def _thm47(p):
    n = _as_int("n", p.get("n", 3), 3)
    R = float(p.get("R", -2.0)) if not isinstance(p.get("R", -2.0), tuple) else math.nan
    if not R < 0:
        raise CatalogError("parameter 'R' must be negative")
    k = (n - 1) * (n - 2) / (2.0 * R)
    e = mul(const(k), ln(_lorentz(1, range(2, n + 1))))
    h = 0.5 / math.sqrt(n - 1)
    box = ((1.5, 2.5),) + ((-h, h),) * (n - 1)
    return e, box, {"n": n, "R": R}, "model hypersurface for the case with one-dimensional D3, scalar curvature R"


def _det(mat):
    """Leibniz determinant of a small matrix whose entries are (re, im) pairs of Expr."""
    k = len(mat)
    total_re, total_im = const(0.0), const(0.0)
    for perm in permutations(range(k)):
        sign = 1.0
        for i in range(k):
            for j in range(i + 1, k):
                if perm[i] > perm[j]:
                    sign = -sign
        re, im = const(sign), const(0.0)
        for i in range(k):
            a, b = mat[i][perm[i]]
            re, im = sub(mul(re, a), mul(im, b)), add(mul(re, b), mul(im, a))
        total_re, total_im = add(total_re, re), add(total_im, im)
    return total_re


def _log_det(p, hermitian: bool):
    k = _as_int("k", p.get("k", 3), 2)
    if k > 4:
        raise CatalogError("parameter 'k' must be at most 4")
    lam = _nonzero("lambda", p.get("lambda", 1.0))
    zero = const(0.0)
    mat = [[None] * k for _ in range(k)]
    for i in range(k):
        mat[i][i] = (var(i + 1), zero)
    nxt = k + 1
    for i in range(k):
        for j in range(i + 1, k):
            re = var(nxt)
            nxt += 1
            if hermitian:
                im = var(nxt)
                nxt += 1
                mat[i][j], mat[j][i] = (re, im), (re, neg(im))
            else:
                mat[i][j] = mat[j][i] = (re, zero)
    n = nxt - 1
    e = mul(const(-1.0 / (lam * lam)), ln(_det(mat)))
    off = 0.35 / (k - 1) / (math.sqrt(2) if hermitian else 1.0)
    box = ((1.0, 2.0),) * k + ((-off, off),) * (n - k)
    kind = "Hermitian" if hermitian else "real symmetric"
    cite = f"-ln det on positive {kind} {k}x{k} matrices (diagonal first, then upper entries row by row)"
    return e, box, {"k": k, "lambda": lam}, cite


_BUILDERS: dict[str, tuple[Callable, tuple[str, ...]]] = {
    "paraboloid": (_paraboloid, ("n",)),
    "q-family": (_q, ("c", "n")),
    "log-linear": (_log_linear, ("alpha", "beta", "gamma", "lambda")),
    "log-quadric": (_log_quadric, ("lambda",)),
    "log-lorentz-4": (_log_lorentz_4, ("alpha", "beta", "lambda")),
    "mixed-R6": (_mixed_r6, ("alpha", "beta", "gamma", "lambda")),
    "thm47": (_thm47, ("n", "R")),
    "log-det-sym": (lambda p: _log_det(p, False), ("k", "lambda")),
    "log-det-herm": (lambda p: _log_det(p, True), ("k", "lambda")),
}

_EMPIRICAL_BOX = {"log-lorentz-4", "log-det-sym", "log-det-herm", "thm47"}


def catalog_names() -> list[str]:
    return list(_BUILDERS)


def catalog(name: str, params: dict | str | None = None) -> CatalogEntry:
    if name not in _BUILDERS:
        raise CatalogError(f"unknown catalog entry {name!r}; known: {', '.join(_BUILDERS)}")
    if isinstance(params, str) or params is None:
        params = parse_params(params)
    params = {_ALIASES.get(k, k): v for k, v in params.items()}
    builder, allowed = _BUILDERS[name]
    extra = sorted(set(params) - set(allowed))
    if extra:
        raise CatalogError(f"{name} does not take parameter(s) {', '.join(extra)}; allowed: {', '.join(allowed)}")
    expr, box, resolved, cite = builder(params)
    note = "empirically validated sub-box" if name in _EMPIRICAL_BOX else "hand-chosen sub-box of the convexity region"
    return CatalogEntry(name, resolved, expr, tuple(box), cite, note)


# --------------------------------------------------------------------------
# product relations at a point


@dataclass
class ProductCheck:
    direction: np.ndarray
    lam: float
    residuals: dict[str, float]
    tol: float
    verdict: bool
    d2: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    d3: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    def to_json(self) -> dict:
        return {
            "direction": self.direction.tolist(),
            "lambda": self.lam,
            "residuals": dict(self.residuals),
            "verdict": self.verdict,
        }


def _as_vectors(split, n: int) -> np.ndarray:
    """Columns from a list of vectors or 1-based coordinate indices."""
    if split is None:
        return np.zeros((n, 0))
    cols = []
    for item in split:
        if np.ndim(item) == 0:
            i = int(item)
            if not 1 <= i <= n:
                raise ProductCheckError(f"coordinate index {i} out of range 1..{n}")
            cols.append(np.eye(n)[:, i - 1])
        else:
            v = np.asarray(item, float)
            if v.shape != (n,):
                raise ProductCheckError(f"split vector has shape {v.shape}, expected ({n},)")
            cols.append(v)
    return np.array(cols).T if cols else np.zeros((n, 0))


def product_structure_check(
    report: GeometryReport,
    direction,
    lam: float,
    d2=None,
    d3=None,
    tol: float = 1e-8,
) -> ProductCheck:
    """Residuals of ``A(T,T) = lam T``, ``A(T,V) = lam V``, ``A(T,W) = 0`` and ``A(V,W) = 0``.

    ``direction`` is ``T`` in coordinate components and must be G-unit. ``d2``
    and ``d3`` are spanning sets for the two complementary pieces, given as
    vectors or 1-based coordinate indices; both must be G-orthogonal to ``T``.
    Residuals are max-norms of coordinate components.
    """
    G = report.metric
    n = G.shape[0]
    T = np.asarray(direction, float)
    if T.shape != (n,):
        raise ProductCheckError(f"direction has shape {T.shape}, expected ({n},)")
    norm2 = float(T @ G @ T)
    if abs(norm2 - 1.0) > 1e-10:
        raise ProductCheckError(f"direction is not G-unit (G(T,T) = {norm2!r})")
    V = _as_vectors(d2, n)
    W = _as_vectors(d3, n)
    for label, block in (("D2", V), ("D3", W)):
        if block.size:
            gap = np.abs(T @ G @ block)
            scale = np.linalg.norm(block, axis=0) * math.sqrt(np.max(np.abs(np.diag(G))))
            if np.any(gap > 1e-8 * np.maximum(scale, 1.0)):
                raise ProductCheckError(f"{label} is not G-orthogonal to the direction")
    # A(X, Y) as a tangent vector: A^k_ij X^i Y^j
    Am = report.cubic_mixed
    AT = np.einsum("ijk,i->jk", Am, T)  # AT[j, k] = (A(T, e_j))^k
    res = {
        "TT": float(np.max(np.abs(T @ AT - lam * T))),
        "TV": float(np.max(np.abs(V.T @ AT - lam * V.T))) if V.size else 0.0,
        "TW": float(np.max(np.abs(W.T @ AT))) if W.size else 0.0,
        "VW": float(np.max(np.abs(np.einsum("ijk,ia,jb->abk", Am, V, W)))) if V.size and W.size else 0.0,
    }
    ok = all(v <= tol for v in res.values())
    return ProductCheck(T, float(lam), res, tol, ok, V, W)


def radial_direction(report: GeometryReport, lam: float) -> np.ndarray:
    """``lam * x`` read as a tangent vector: the product direction of a log-homogeneous potential."""
    return float(lam) * report.point
