"""Pointwise classification of a parallel cubic form.

Pipeline at one point: maximize ``F(v) = A(v, v, v)`` on the unit sphere of
``G`` (:func:`cubic_max`), diagonalize ``A(e1, .)`` on the complement
(:func:`typical_basis`), study the bilinear map ``L`` on the ``mu1/2``
eigenspace (:func:`build_profile`) and map the outcome to one of the four
product types (:func:`classify_point`).

All heavy lifting happens in a G-orthonormal frame, where the metric is the
identity and upper and lower indices coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import brentq
from scipy.special import ndtri
from scipy.stats import qmc

from .calabi import GeometryReport
from .product import ProductCheck, product_structure_check
from .tensors import max_norm, spd_factor, symmetrize

__all__ = [
    "TypicalBasis",
    "DecompositionProfile",
    "Classification",
    "cubic_max",
    "typical_basis",
    "build_profile",
    "min_dim",
    "octonion_table",
    "octonion_product",
    "classify_point",
    "analyze",
    "frame_cubic",
    "l_identity_residuals",
    "CLUSTER_TOL",
]

CLUSTER_TOL = 1e-6
SPECTRUM_TOL = 1e-6
RANK_TOL = 1e-8


def frame_cubic(G, A) -> tuple[np.ndarray, np.ndarray]:
    """G-orthonormal frame ``E`` (columns) and the cubic form in that frame."""
    E = spd_factor(G).orthonormal_frame()
    At = np.einsum("ijk,ia,jb,kc->abc", A, E, E, E, optimize=True)
    return E, symmetrize(At)


# --------------------------------------------------------------------------
# maximizing F on the sphere


def _sphere_starts(n: int, count: int, seed: int) -> np.ndarray:
    if n == 1:
        return np.array([[1.0], [-1.0]])
    u = qmc.Halton(d=n, scramble=True, seed=seed).random(count)
    z = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _polish(At: np.ndarray, x: np.ndarray, steps: int = 8) -> np.ndarray:
    """Newton iterations on ``A(x, x) = mu x``, ``|x| = 1``; keeps the input if they do not help."""
    n = len(x)

    def resid(y):
        g = np.einsum("abc,b,c->a", At, y, y)
        return g - (g @ y) * y

    best, best_r = x, np.linalg.norm(resid(x))
    y = x.copy()
    for _ in range(steps):
        g = np.einsum("abc,b,c->a", At, y, y)
        mu = g @ y
        J = np.zeros((n + 1, n + 1))
        J[:n, :n] = 2 * np.einsum("abc,c->ab", At, y) - mu * np.eye(n)
        J[:n, n] = -y
        J[n, :n] = y
        rhs = -np.concatenate([g - mu * y, [0.5 * (y @ y - 1.0)]])
        try:
            step = np.linalg.solve(J, rhs)
        except np.linalg.LinAlgError:
            break
        y = y + step[:n]
        y /= np.linalg.norm(y)
        r = np.linalg.norm(resid(y))
        if r < best_r and np.einsum("abc,a,b,c->", At, y, y, y) >= np.einsum("abc,a,b,c->", At, best, best, best) - 1e-12:
            best, best_r = y.copy(), r
        if r < 1e-15:
            break
    return best


def _cubic_max_frame(At, restarts=64, seed=0, iters=500, tol=1e-12):
    n = At.shape[0]
    scale = float(np.linalg.norm(At))
    if scale == 0.0:
        return [np.eye(n)[0]]
    # the Hessian of F on the sphere is bounded by 2|A|_F, so this shift gives monotone ascent
    alpha = 2.0 * scale
    X = _sphere_starts(n, restarts, seed)
    for _ in range(iters):
        Y = np.einsum("abc,kb,kc->ka", At, X, X) + alpha * X
        Y /= np.linalg.norm(Y, axis=1, keepdims=True)
        done = np.max(np.linalg.norm(Y - X, axis=1)) < tol
        X = Y
        if done:
            break
    vals = np.einsum("abc,ka,kb,kc->k", At, X, X, X)
    best = float(np.max(vals))
    tie = 1e-9 * max(1.0, abs(best))
    return [_polish(At, X[k]) for k in np.flatnonzero(vals >= best - tie)]


def cubic_max(G, A, restarts: int = 64, seed: int = 0, iters: int = 500, tol: float = 1e-12) -> tuple[np.ndarray, float]:
    """Unit vector ``e1`` (coordinate components) maximizing ``A(v, v, v)`` with ``G(v, v) = 1``.

    Runs a shifted symmetric power iteration from ``restarts`` scrambled Halton
    directions in a Cholesky frame, polishes the best with Newton steps and
    breaks ties by the lexicographically largest rounded coordinate vector.
    """
    G = np.asarray(G, float)
    A = np.asarray(A, float)
    E, At = frame_cubic(G, A)
    scored = []
    for x in _cubic_max_frame(At, restarts, seed, iters, tol):
        mu = float(np.einsum("abc,a,b,c->", At, x, x, x))
        scored.append((mu, E @ x))
    best_mu = max(mu for mu, _ in scored)
    tie = 1e-9 * max(1.0, abs(best_mu))
    pool = [(mu, e) for mu, e in scored if mu >= best_mu - tie]
    mu, e1 = max(pool, key=lambda t: tuple(np.round(t[1], 8)))
    return e1, max(mu, 0.0)


# --------------------------------------------------------------------------
# typical basis


@dataclass
class TypicalBasis:
    frame: np.ndarray  # columns e_1..e_n in coordinates
    mu: np.ndarray  # mu_1, then eigenvalues of A(e1, .) on the complement, descending
    label: str  # "C_m" or "unclassified"
    m: int | None
    cluster_tol: float
    frame_residual: float = 0.0

    @property
    def mu1(self) -> float:
        return float(self.mu[0])

    @property
    def n(self) -> int:
        return len(self.mu)

    def ratios(self) -> np.ndarray:
        return self.mu[1:] / self.mu1 if self.mu1 > 0 else np.zeros(self.n - 1)


def typical_basis(G, A, e1, mu1: float, cluster_tol: float = CLUSTER_TOL) -> TypicalBasis:
    """Complete ``e1`` to a frame diagonalizing ``A(e1, .)`` and label the case."""
    G = np.asarray(G, float)
    A = np.asarray(A, float)
    n = G.shape[0]
    E, At = frame_cubic(G, A)
    x1 = np.linalg.solve(E, np.asarray(e1, float))
    x1 /= np.linalg.norm(x1)
    Q = np.linalg.qr(np.column_stack([x1, np.eye(n)]))[0][:, :n]
    Q[:, 0] = x1
    comp = Q[:, 1:]
    A1 = np.einsum("abc,a->bc", At, x1)
    M = comp.T @ A1 @ comp
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    order = np.argsort(-w, kind="stable")
    w, V = w[order], V[:, order]
    F = np.column_stack([x1, comp @ V]) if n > 1 else x1[:, None]
    mu = np.concatenate([[float(mu1)], w])
    resid = float(max_norm(F.T @ A1 @ F - np.diag(np.concatenate([[x1 @ A1 @ x1], w]))))

    eta = cluster_tol * max(1.0, abs(mu1))
    if abs(mu1) <= eta:
        label, m = "C_0", 0
        mu = np.where(np.abs(mu) <= eta, 0.0, mu)
    else:
        half = np.abs(w - 0.5 * mu1) <= eta
        zero = np.abs(w) <= eta
        if np.all(half | zero):
            m = 1 + int(np.sum(half))
            label = f"C_{m}"
        else:
            label, m = "unclassified", None
    return TypicalBasis(E @ F, mu, label, m, cluster_tol, resid)


# --------------------------------------------------------------------------
# the map L and its profile


@dataclass
class DecompositionProfile:
    m: int | None
    status: str  # "ok", "trivial", "inconsistent", "unclassified"
    d1: list[int] = field(default_factory=list)  # 0-based column indices into the typical frame
    d2: list[int] = field(default_factory=list)
    d3: list[int] = field(default_factory=list)
    L: np.ndarray = field(default_factory=lambda: np.zeros((0, 0, 0)))  # L[i, j, :] in D3 coordinates
    tau: float = 0.0
    chain: list[np.ndarray] = field(default_factory=list)  # unit vectors in D2 coordinates
    null_dims: list[int] = field(default_factory=list)
    k0: int | None = None
    p: int | None = None
    dim_imL: int | None = None
    min_ambient_dim: int | None = None
    residuals: dict = field(default_factory=dict)
    reason: str = ""

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "k0": self.k0,
            "p": self.p,
            "dim_imL": self.dim_imL,
            "tau": self.tau,
            "min_ambient_dim": self.min_ambient_dim,
            "residuals": {k: float(v) for k, v in sorted(self.residuals.items())},
            "reason": self.reason,
        }


def _basis_cubic(G, A, basis: TypicalBasis) -> np.ndarray:
    F = basis.frame
    return np.einsum("ijk,ia,jb,kc->abc", A, F, F, F, optimize=True)


def p_matrix(Lt: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``(P_v)_{ab} = <L(v, u_a), L(v, u_b)>`` for ``v`` in D2 coordinates."""
    Lv = np.einsum("a,abk->bk", v, Lt)
    return Lv @ Lv.T


def _snap(values, targets, tol):
    """Index of the target each value is within ``tol`` of, or -1."""
    out = []
    for x in values:
        hits = [i for i, t in enumerate(targets) if abs(x - t) <= tol]
        out.append(hits[0] if hits else -1)
    return out


def _split(Lt, v, tau, tol):
    """Orthonormal bases of the tau- and 0-eigenspaces of ``P_v`` on the complement of ``v``."""
    d = Lt.shape[0]
    comp = null_space(v[None, :]) if d > 1 else np.zeros((d, 0))
    if comp.shape[1] == 0:
        return comp, comp, []
    P = comp.T @ p_matrix(Lt, v) @ comp
    w, V = np.linalg.eigh(0.5 * (P + P.T))
    tags = _snap(w, (tau, 0.0), tol)
    bad = [float(x) for x, t in zip(w, tags) if t < 0]
    tau_space = comp @ V[:, [i for i, t in enumerate(tags) if t == 0]]
    zero_space = comp @ V[:, [i for i, t in enumerate(tags) if t == 1]]
    return tau_space, zero_space, bad


def l_identity_residuals(Lt: np.ndarray, mu1: float, vectors: np.ndarray) -> dict[str, float]:
    """Max residuals of the isotropy identities on the given D2 vectors (rows, orthonormal)."""
    q = 0.25 * mu1 * mu1

    def L(a, b):
        return np.einsum("i,j,ijk->k", a, b, Lt)

    def ip(x, y):
        return float(x @ y)

    k = len(vectors)
    r = {"isotropy": 0.0, "diag_offdiag": 0.0, "pair": 0.0, "triple": 0.0, "quadruple": 0.0}
    for a in range(k):
        v1 = vectors[a]
        r["isotropy"] = max(r["isotropy"], abs(ip(L(v1, v1), L(v1, v1)) - q))
        for b in range(k):
            if b == a:
                continue
            v2 = vectors[b]
            r["diag_offdiag"] = max(r["diag_offdiag"], abs(ip(L(v1, v1), L(v1, v2))))
            r["pair"] = max(r["pair"], abs(ip(L(v1, v1), L(v2, v2)) + 2 * ip(L(v1, v2), L(v1, v2)) - q))
            for c in range(k):
                if c in (a, b):
                    continue
                v3 = vectors[c]
                r["triple"] = max(r["triple"], abs(ip(L(v1, v1), L(v2, v3)) + 2 * ip(L(v1, v2), L(v1, v3))))
                for d in range(k):
                    if d in (a, b, c):
                        continue
                    v4 = vectors[d]
                    s = ip(L(v1, v2), L(v3, v4)) + ip(L(v1, v3), L(v2, v4)) + ip(L(v1, v4), L(v2, v3))
                    r["quadruple"] = max(r["quadruple"], abs(s))
    return r


def isotropy_residual(Lt: np.ndarray, mu1: float) -> float:
    """Max deviation of the fully symmetrized ``<L(.,.), L(.,.)>`` from ``mu1^2/4`` times the symmetrized ``delta delta``."""
    d = Lt.shape[0]
    Q = np.einsum("ijk,lmk->ijlm", Lt, Lt)
    I = np.eye(d)
    target = 0.25 * mu1 * mu1 * symmetrize(np.einsum("ij,lm->ijlm", I, I))
    return max_norm(symmetrize(Q) - target)


def build_profile(G, A, basis: TypicalBasis, spectrum_tol: float = SPECTRUM_TOL, rank_tol: float = RANK_TOL) -> DecompositionProfile:
    """Distributions, ``L`` table, ``P_v`` spectra and the ``(k0, p)`` chain at one point."""
    n = basis.n
    m = basis.m
    if basis.label == "unclassified":
        return DecompositionProfile(None, "unclassified", reason="spectrum of A(e1, .) does not cluster at mu1/2 and 0")
    mu1 = basis.mu1
    tau = mu1 * mu1 / 8.0
    prof = DecompositionProfile(m, "trivial", tau=tau)
    if m == 0:
        prof.d3 = list(range(n))
        return prof
    prof.d1 = [0]
    prof.d2 = list(range(1, m))
    prof.d3 = list(range(m, n))
    if m == 1:
        return prof
    if m == n:
        prof.status = "inconsistent"
        prof.reason = "D3 is empty, so the isotropy of L cannot hold"
        return prof

    B = _basis_cubic(G, A, basis)
    d2, d3 = prof.d2, prof.d3
    table = B[np.ix_(d2, d2, range(n))].copy()
    table[:, :, 0] -= 0.5 * mu1 * np.eye(len(d2))
    off = max_norm(table[:, :, : m])  # components along D1 + D2 must vanish
    Lt = table[:, :, d3]
    prof.L = Lt
    prof.residuals["orthogonality"] = off
    prof.residuals["isotropy"] = isotropy_residual(Lt, mu1)

    tol = spectrum_tol * mu1 * mu1
    q = 0.25 * mu1 * mu1
    worst = 0.0
    dim = len(d2)
    probes = list(np.eye(dim))
    rng = np.random.default_rng(0)
    for _ in range(4):
        z = rng.standard_normal(dim)
        probes.append(z / np.linalg.norm(z))
    for v in probes:
        w = np.linalg.eigvalsh(p_matrix(Lt, v))
        worst = max(worst, max(min(abs(x - t) for t in (q, tau, 0.0)) for x in w))
        worst = max(worst, float(np.linalg.norm(p_matrix(Lt, v) @ v - q * v)))
    prof.residuals["p_spectrum"] = worst

    sv = np.linalg.svd(Lt.reshape(dim * dim, -1), compute_uv=False)
    prof.dim_imL = int(np.sum(sv > rank_tol * mu1 * mu1))

    if off > tol or prof.residuals["isotropy"] > tol or worst > tol:
        prof.status = "inconsistent"
        prof.reason = "L leaves D3, fails isotropy, or P_v has eigenvalues outside {mu1^2/4, tau, 0}"
        return prof

    # chain v1, v2, ... with v_{i+1} in the running intersection of tau-eigenspaces
    v = np.eye(dim)[0]
    prof.chain = [v]
    S, Z, bad = _split(Lt, v, tau, tol)
    prof.null_dims = [Z.shape[1]]
    while S.shape[1] > 0:
        proj = S @ (S.T @ np.eye(dim))
        norms = np.linalg.norm(proj, axis=0)
        j = int(np.argmax(norms))
        v = proj[:, j] / norms[j]
        prof.chain.append(v)
        Sv, Zv, bad_v = _split(Lt, v, tau, tol)
        bad += bad_v
        prof.null_dims.append(Zv.shape[1])
        # intersection of span(S) with span(Sv), orthogonal to v
        M = np.column_stack([S, -Sv]) if Sv.shape[1] else None
        if M is None:
            S = np.zeros((dim, 0))
            break
        ns = null_space(M, rcond=1e-8)
        if ns.shape[1] == 0:
            S = np.zeros((dim, 0))
            break
        inter = S @ ns[: S.shape[1]]
        inter = inter - np.outer(v, v @ inter)
        u, s, _ = np.linalg.svd(inter, full_matrices=False)
        S = u[:, s > 1e-8]
        if len(prof.chain) > dim:
            break
    prof.k0 = len(prof.chain)
    prof.p = prof.null_dims[0]
    if bad:
        prof.status = "inconsistent"
        prof.reason = "P_v eigenvalue outside {tau, 0} on the complement of v"
        return prof
    if len(set(prof.null_dims)) != 1 or prof.k0 * (prof.p + 1) != dim:
        prof.status = "inconsistent"
        prof.reason = f"chain does not decompose D2 (null dims {prof.null_dims}, k0 {prof.k0})"
        return prof
    if prof.k0 == 1:
        prof.min_ambient_dim = m + 1
    else:
        try:
            prof.min_ambient_dim = min_dim(m, prof.k0, prof.p)
        except ValueError as exc:
            prof.status = "inconsistent"
            prof.reason = str(exc)
            return prof
    prof.status = "ok"
    return prof


# --------------------------------------------------------------------------
# dimension bounds and the octonion table


def min_dim(m: int, k0: int, p: int) -> int:
    """Least ambient dimension ``n`` for case ``C_m`` with chain data ``(k0, p)``.

    ``k0 = 1`` gives ``m + 1``. For ``k0 >= 2`` the bound depends on ``p``:
    ``m(m+1)/2``, ``(m+1)^2/4``, ``(m+1)(m+3)/8`` or 27.
    """
    if k0 < 1:
        raise ValueError("k0 must be positive")
    if k0 * (p + 1) != m - 1:
        raise ValueError(f"inconsistent data: k0 (p + 1) = {k0 * (p + 1)} but m - 1 = {m - 1}")
    if k0 == 1:
        return m + 1
    if p == 0:
        return m * (m + 1) // 2
    if p == 1:
        return (m + 1) ** 2 // 4
    if p == 3:
        return (m + 1) * (m + 3) // 8
    if p == 7:
        if m != 17 or k0 != 2:
            raise ValueError("p = 7 occurs only with m = 17 and k0 = 2")
        return 27
    raise ValueError(f"p must be one of 0, 1, 3, 7 when k0 >= 2, got {p}")


_OCT_ROWS = {
    1: (None, 3, -2, 5, -4, -7, 6),
    2: (-3, None, 1, 6, 7, -4, -5),
    3: (2, -1, None, 7, -6, 5, -4),
    4: (-5, -6, -7, None, 1, 2, 3),
    5: (4, -7, 6, -1, None, -3, 2),
    6: (7, 4, -5, -2, 3, None, -1),
    7: (-6, 5, 4, -3, -2, 1, None),
}


def octonion_table() -> dict[tuple[int, int], tuple[int, int]]:
    """``(i, j) -> (sign, k)`` with ``e_i e_j = sign e_k``; ``e_i e_i`` maps to ``(-1, 0)`` meaning ``-id``."""
    out = {}
    for i, row in _OCT_ROWS.items():
        for j, entry in enumerate(row, start=1):
            out[(i, j)] = (-1, 0) if entry is None else (1 if entry > 0 else -1, abs(entry))
    return out


def octonion_product(i: int, j: int) -> tuple[int, int]:
    return octonion_table()[(i, j)]


# --------------------------------------------------------------------------
# branch suggestion


@dataclass
class Classification:
    branch: str  # "i", "ii", "iii", "iv", "unclassified", "inconsistent"
    reason: str
    candidates: list[ProductCheck] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "branch": self.branch,
            "reason": self.reason,
            "product_candidates": [c.to_json() for c in self.candidates],
        }


def _spectrum_split(AT: np.ndarray, comp: np.ndarray, lam: float, tol: float):
    M = comp.T @ AT @ comp
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    tags = _snap(w, (lam, 0.0), tol)
    if any(t < 0 for t in tags):
        return None
    return comp @ V[:, [i for i, t in enumerate(tags) if t == 0]], comp @ V[:, [i for i, t in enumerate(tags) if t == 1]]


def product_candidates(report: GeometryReport, basis: TypicalBasis, profile: DecompositionProfile, tol: float = 1e-8) -> list[ProductCheck]:
    """Unit directions ``T`` in ``span{e1, tr L}`` satisfying the product relations.

    For ``C_1`` the direction is ``e1`` itself. Otherwise ``A(T, T)`` is
    required to be parallel to ``T`` inside the plane and the spectrum of
    ``A(T, .)`` on the complement must consist of ``F(T)`` and 0.
    """
    A = report.cubic
    E = basis.frame
    B = np.einsum("ijk,ia,jb,kc->abc", A, E, E, E, optimize=True)
    n = basis.n
    mu1 = basis.mu1
    spec_tol = CLUSTER_TOL * max(1.0, mu1)
    dirs: list[np.ndarray] = []
    if basis.m == 1:
        dirs.append(np.eye(n)[0])
    elif basis.m is not None and 2 <= basis.m < n and profile.L.size:
        trL = np.einsum("iik->k", profile.L)
        if np.linalg.norm(trL) > RANK_TOL * max(1.0, mu1):
            t = np.zeros(n)
            t[profile.d3] = trL / np.linalg.norm(trL)
            e = np.eye(n)[0]

            def g(th):
                T = math.cos(th) * e + math.sin(th) * t
                Tp = -math.sin(th) * e + math.cos(th) * t
                return float(np.einsum("abc,a,b,c->", B, T, T, Tp))

            grid = np.linspace(0.0, 2 * math.pi, 721)
            vals = [g(th) for th in grid]
            for a, b, ga, gb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
                if ga == 0.0:
                    th = a
                elif ga * gb < 0:
                    th = brentq(g, a, b, xtol=1e-15)
                else:
                    continue
                dirs.append(math.cos(th) * e + math.sin(th) * t)
    out = []
    for T in dirs:
        lam = float(np.einsum("abc,a,b,c->", B, T, T, T))
        if lam <= spec_tol:
            continue
        comp = null_space(T[None, :])
        AT = np.einsum("abc,a->bc", B, T)
        split = _spectrum_split(AT, comp, lam, spec_tol)
        if split is None:
            continue
        V, W = split
        chk = product_structure_check(report, E @ T, lam, list((E @ V).T), list((E @ W).T), tol=tol * max(1.0, lam))
        if chk.verdict and not any(np.allclose(chk.direction, c.direction, atol=1e-9) for c in out):
            out.append(chk)
    return out


def classify_point(report: GeometryReport, basis: TypicalBasis, profile: DecompositionProfile) -> Classification:
    n = basis.n
    if basis.label == "unclassified":
        return Classification("unclassified", "spectrum of A(e1, .) is not {mu1/2, 0}")
    m = basis.m
    if m == 0:
        return Classification("i", "cubic form vanishes: elliptic paraboloid")
    if profile.status in ("inconsistent", "unclassified"):
        return Classification(profile.status, profile.reason)
    cands = product_candidates(report, basis, profile)
    if m == 1:
        return Classification("iii", "case C_1: product of an (n-1)-dimensional Calabi hypersurface and a point", cands)
    if m == n - 1:
        return Classification("ii", "case C_(n-1): product of an (n-1)-dimensional centroaffine hypersurface and a point", cands)
    if profile.dim_imL == len(profile.d3):
        return Classification("ii", f"Im L fills D3 (k0={profile.k0}, p={profile.p}): product with a point", cands)
    return Classification("iv", f"Im L is a proper subspace of D3 (k0={profile.k0}, p={profile.p}): product of two factors", cands)


# --------------------------------------------------------------------------
# one-shot pipeline


@dataclass
class PointAnalysis:
    report: GeometryReport
    basis: TypicalBasis
    profile: DecompositionProfile
    classification: Classification

    def to_json(self, tol: float) -> dict:
        b, p, c = self.basis, self.profile, self.classification
        out = self.report.to_json()
        out["verdicts"] = self.report.residuals().verdicts(tol)
        out["typical_basis"] = {
            "frame": b.frame.T.tolist(),
            "mu": b.mu.tolist(),
        }
        out["profile"] = {
            "mu1": b.mu1,
            "case": b.label,
            "k0": p.k0,
            "p": p.p,
            "dim_imL": p.dim_imL,
            "tau": p.tau,
            "min_ambient_dim": p.min_ambient_dim,
            "branch": c.branch,
            "status": p.status,
            "residuals": {k: float(v) for k, v in sorted(p.residuals.items())},
        }
        out["classification"] = c.to_json()
        return out


def analyze(report: GeometryReport, seed: int = 0, restarts: int = 64) -> PointAnalysis:
    e1, mu1 = cubic_max(report.metric, report.cubic, restarts=restarts, seed=seed)
    basis = typical_basis(report.metric, report.cubic, e1, mu1)
    profile = build_profile(report.metric, report.cubic, basis)
    return PointAnalysis(report, basis, profile, classify_point(report, basis, profile))
