"""Pointwise invariants of Calabi graph hypersurfaces.

For a strictly convex potential ``f`` the Calabi metric is the Hessian
``G_ij = f_ij`` and the cubic form is ``A_ijk = -f_ijk / 2``. Curvature is
computed twice: from the Christoffel symbols and their exact first
derivatives, and from the Gauss equation written in terms of ``A``. The two
routes share no intermediate besides the jet, so their agreement is a real
check on both.

Index conventions for the arrays in :class:`GeometryReport`:

* ``christoffel[k, i, j]`` is the coefficient of ``d/dx_k`` in ``D_i d/dx_j``.
* ``cubic_mixed[i, j, k]`` is ``A^k_ij``.
* ``nabla_cubic[i, j, k, l]`` is ``A_{ijk,l}`` (derivative slot last).
* ``riemann_*[i, j, k, l] = <R(d_j, d_i) d_k, d_l>`` so that contracting
  ``j`` with ``l`` gives the Ricci tensor and sphere-like metrics have
  positive scalar curvature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .expr import DomainError, Expr, Jet4, jet4
from .tensors import NotPositiveDefinite, max_norm, spd_factor

__all__ = [
    "GeometryReport",
    "PointResiduals",
    "VerificationReport",
    "geometry_report",
    "verify_function",
    "apply_affine",
    "SingularTransform",
    "halton_points",
    "DEFAULT_TOL",
]

DEFAULT_TOL = 1e-8


@dataclass
class GeometryReport:
    point: np.ndarray
    metric: np.ndarray
    metric_inv: np.ndarray
    christoffel: np.ndarray
    cubic: np.ndarray
    cubic_mixed: np.ndarray
    cubic_derivative: np.ndarray
    nabla_cubic: np.ndarray
    riemann_lc: np.ndarray
    riemann_gauss: np.ndarray
    ricci: np.ndarray
    scalar: float
    tchebychev: np.ndarray
    tcheb_norm2: float
    pick_J: float
    weingarten: np.ndarray
    # magnitudes of the terms that cancel in each residual, for relative tolerances
    nabla_scale: float = 0.0
    curvature_scale: float = 0.0

    @property
    def n(self) -> int:
        return len(self.point)

    def residuals(self) -> "PointResiduals":
        n = self.n
        identity = n * (n - 1) * self.pick_J - n * n * self.tcheb_norm2 if n > 1 else 0.0
        return PointResiduals(
            nabla_A=max_norm(self.nabla_cubic),
            riemann=max_norm(self.riemann_lc),
            codazzi=max_norm(self.nabla_cubic - self.nabla_cubic.swapaxes(2, 3)),
            gauss_gap=max_norm(self.riemann_lc - self.riemann_gauss),
            scalar_identity=abs(self.scalar - identity) if n > 1 else 0.0,
            nabla_scale=self.nabla_scale,
            curvature_scale=self.curvature_scale,
            scalar_scale=abs(self.scalar),
        )

    def to_json(self) -> dict:
        r = self.residuals()
        return {
            "point": self.point.tolist(),
            "metric": self.metric.tolist(),
            "fubini_pick": self.cubic.tolist(),
            "nabla_A_max": r.nabla_A,
            "riemann_max": r.riemann,
            "codazzi_max": r.codazzi,
            "gauss_gap_max": r.gauss_gap,
            "scalar_R": self.scalar,
            "pick_J": _finite_or_none(self.pick_J),
            "tcheb_norm2": self.tcheb_norm2,
        }


def _finite_or_none(x: float):
    return float(x) if math.isfinite(x) else None


def geometry_report(jet: Jet4) -> GeometryReport:
    """All Calabi invariants at the jet's base point.

    Raises :class:`NotPositiveDefinite` if the Hessian is not positive definite.
    """
    n = jet.n
    G = jet.second.dense()
    f3 = jet.third.dense()
    f4 = jet.fourth.dense()
    Ginv = spd_factor(G).inverse()

    gamma = 0.5 * np.einsum("kl,ijl->kij", Ginv, f3)
    A = -0.5 * f3
    A_mixed = np.einsum("kl,ijl->ijk", Ginv, A)
    dA = -0.5 * f4

    connection_terms = (
        np.einsum("mli,mjk->ijkl", gamma, A)
        + np.einsum("mlj,imk->ijkl", gamma, A)
        + np.einsum("mlk,ijm->ijkl", gamma, A)
    )
    nabla_A = dA - connection_terms

    # Levi-Civita route: d_i Gamma^m_jk with d_i f^{ml} = -f^{ma} f_abi f^{bl}
    dGinv = -np.einsum("ma,abi,bl->iml", Ginv, f3, Ginv)
    dgamma = 0.5 * np.einsum("iml,jkl->imjk", dGinv, f3) + 0.5 * np.einsum("ml,jkli->imjk", Ginv, f4)
    # R^m_{ijk}: component of R(d_i, d_j) d_k
    R_up = (
        np.einsum("imjk->mijk", dgamma)
        - np.einsum("jmik->mijk", dgamma)
        + np.einsum("mip,pjk->mijk", gamma, gamma)
        - np.einsum("mjp,pik->mijk", gamma, gamma)
    )
    R_low = np.einsum("lm,mijk->ijkl", G, R_up)  # <R(d_i, d_j) d_k, d_l>
    riemann_lc = R_low.transpose(1, 0, 2, 3)

    # Gauss route
    AA = np.einsum("mh,jkm,hil->ijkl", Ginv, A, A)
    riemann_gauss = AA - AA.transpose(1, 0, 2, 3)

    ricci = np.einsum("jl,ijkl->ik", Ginv, riemann_lc)
    scalar = float(np.einsum("ik,ik->", Ginv, ricci))

    tcheb = np.einsum("kl,ij,ijk->l", Ginv, Ginv, A) / n
    tcheb_norm2 = float(tcheb @ G @ tcheb)
    normA2 = float(np.einsum("il,jp,kq,ijk,lpq->", Ginv, Ginv, Ginv, A, A))
    pick_J = normA2 / (n * (n - 1)) if n > 1 else math.nan

    return GeometryReport(
        point=np.asarray(jet.point, float).copy(),
        metric=G,
        metric_inv=Ginv,
        christoffel=gamma,
        cubic=A,
        cubic_mixed=A_mixed,
        cubic_derivative=dA,
        nabla_cubic=nabla_A,
        riemann_lc=riemann_lc,
        riemann_gauss=riemann_gauss,
        ricci=ricci,
        scalar=scalar,
        tchebychev=tcheb,
        tcheb_norm2=tcheb_norm2,
        pick_J=pick_J,
        weingarten=np.zeros((n, n)),
        nabla_scale=max(max_norm(dA), max_norm(connection_terms)),
        curvature_scale=max_norm(AA),
    )


# --------------------------------------------------------------------------
# sampling verification


@dataclass
class PointResiduals:
    nabla_A: float
    riemann: float
    codazzi: float
    gauss_gap: float
    scalar_identity: float
    nabla_scale: float = 0.0
    curvature_scale: float = 0.0
    scalar_scale: float = 0.0

    def verdicts(self, tol: float) -> dict[str, bool]:
        curv = tol * (1.0 + self.curvature_scale)
        return {
            "parallel": self.nabla_A <= tol * (1.0 + self.nabla_scale),
            "flat": self.riemann <= curv,
            "codazzi": self.codazzi <= tol * (1.0 + self.nabla_scale),
            "gauss": self.gauss_gap <= curv,
            "scalar_identity": self.scalar_identity <= tol * (1.0 + self.scalar_scale + self.curvature_scale),
        }


VERDICT_KEYS = ("convex", "parallel", "flat", "codazzi", "gauss", "scalar_identity")


@dataclass
class VerificationReport:
    box: list[tuple[float, float]]
    samples: int
    seed: int
    tol: float
    points: list[np.ndarray] = field(default_factory=list)
    residuals: list[PointResiduals] = field(default_factory=list)
    reports: list[GeometryReport] = field(default_factory=list)
    rejected: list[tuple[np.ndarray, str]] = field(default_factory=list)
    verdicts: dict[str, bool] = field(default_factory=dict)
    strictly_convex: bool = True
    message: str = ""

    def max_residuals(self) -> dict[str, float]:
        keys = ("nabla_A", "riemann", "codazzi", "gauss_gap", "scalar_identity")
        return {k: max((getattr(r, k) for r in self.residuals), default=0.0) for k in keys}

    def to_json(self) -> dict:
        return {
            "box": [list(iv) for iv in self.box],
            "samples": self.samples,
            "seed": self.seed,
            "tol": self.tol,
            "accepted": len(self.points),
            "rejected": [
                {"point": p.tolist(), "reason": why} for p, why in self.rejected
            ],
            "max_residuals": self.max_residuals(),
            "verdicts": dict(self.verdicts),
            "strictly_convex": self.strictly_convex,
            "message": self.message,
            "points": [
                {**rep.to_json(), "verdicts": res.verdicts(self.tol)}
                for rep, res in zip(self.reports, self.residuals)
            ],
        }


def halton_points(box, count: int, seed: int = 0) -> np.ndarray:
    """Unscrambled Halton points in ``box``, starting at sequence index ``seed + 1``."""
    lo = np.array([a for a, _ in box], float)
    hi = np.array([b for _, b in box], float)
    engine = qmc.Halton(d=len(box), scramble=False)
    engine.fast_forward(seed + 1)
    return lo + engine.random(count) * (hi - lo)


def verify_function(
    f: Expr,
    box,
    samples: int = 32,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
) -> VerificationReport:
    """Sample ``box`` and certify convexity, parallelism, flatness and the curvature identities.

    Points where ``f`` is undefined or its Hessian is not positive definite are
    rejected and replaced by later sequence points, up to ``10 * samples``
    draws. Any rejection makes the convexity verdict false.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    box = [(float(a), float(b)) for a, b in box]
    n = len(box)
    rep = VerificationReport(box=box, samples=samples, seed=seed, tol=tol)
    candidates = halton_points(box, 10 * samples, seed)
    for x in candidates:
        if len(rep.points) == samples:
            break
        try:
            g = geometry_report(jet4(f, x, n))
        except DomainError as exc:
            rep.rejected.append((x, f"domain: {exc}"))
            continue
        except NotPositiveDefinite as exc:
            rep.rejected.append((x, f"convexity: {exc}"))
            continue
        rep.points.append(x)
        rep.reports.append(g)
        rep.residuals.append(g.residuals())

    if not rep.points:
        rep.strictly_convex = False
        rep.message = "not strictly convex on the box: every sampled point failed"
        rep.verdicts = {k: False for k in VERDICT_KEYS}
        return rep

    per_point = [r.verdicts(tol) for r in rep.residuals]
    rep.verdicts = {"convex": not rep.rejected and len(rep.points) == samples}
    for key in VERDICT_KEYS[1:]:
        rep.verdicts[key] = all(v[key] for v in per_point)
    if rep.rejected:
        rep.strictly_convex = False
        rep.message = f"{len(rep.rejected)} sampled point(s) rejected; first at {rep.rejected[0][0].tolist()}"
    return rep


# --------------------------------------------------------------------------
# affine action


class SingularTransform(ValueError):
    pass


def apply_affine(f: Expr, M, a=None, b: float = 0.0, shift=None) -> Expr:
    """Potential of the image graph under ``x -> M x + shift``.

    Returns ``g`` with ``g(M x + shift) = f(x) + a . x + b``; the graph of ``g``
    is the image of the graph of ``f`` under an element of the equivalence
    group that fixes the vertical normal.
    """
    from .expr import add, const, mul, sub, substitute, var

    M = np.atleast_2d(np.asarray(M, float))
    n = M.shape[0]
    if M.shape != (n, n):
        raise SingularTransform("M must be square")
    scale = max(max_norm(M), 1.0) ** n
    if abs(np.linalg.det(M)) <= 1e-12 * scale:
        raise SingularTransform("M is singular")
    Minv = np.linalg.inv(M)
    a = np.zeros(n) if a is None else np.asarray(a, float)
    shift = np.zeros(n) if shift is None else np.asarray(shift, float)

    y = [sub(var(j + 1), const(shift[j])) for j in range(n)]
    x_of_y = {}
    for i in range(n):
        acc = const(0.0)
        for j in range(n):
            if Minv[i, j] != 0.0:
                acc = add(acc, mul(const(Minv[i, j]), y[j]))
        x_of_y[i + 1] = acc
    out = substitute(f, x_of_y)
    for i in range(n):
        if a[i] != 0.0:
            out = add(out, mul(const(a[i]), x_of_y[i + 1]))
    return add(out, const(b))
