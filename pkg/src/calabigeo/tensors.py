"""Symmetric tensor storage and SPD linear algebra.

Fully symmetric tensors of order 2..4 are stored once per canonical
(non-decreasing) multi-index. Dense views are produced on demand for the
einsum-based contractions used everywhere else.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement, permutations, product

import numpy as np
from scipy.linalg import solve_triangular

__all__ = [
    "SymTensor",
    "SpdFactor",
    "NotPositiveDefinite",
    "ContractionError",
    "spd_factor",
    "contract",
    "raise_index",
    "lower_index",
    "max_norm",
    "symmetrize",
]


class NotPositiveDefinite(ValueError):
    """Cholesky failed; ``index`` is the 1-based pivot that was not positive."""

    def __init__(self, index: int, pivot: float):
        super().__init__(f"matrix is not positive definite (pivot {index} = {pivot!r})")
        self.index = index
        self.pivot = pivot


class ContractionError(ValueError):
    pass


@lru_cache(maxsize=None)
def multi_indices(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    return tuple(combinations_with_replacement(range(n), k))


@lru_cache(maxsize=None)
def _positions(n: int, k: int) -> dict[tuple[int, ...], int]:
    return {idx: p for p, idx in enumerate(multi_indices(n, k))}


@lru_cache(maxsize=None)
def _dense_map(n: int, k: int) -> np.ndarray:
    pos = _positions(n, k)
    out = np.empty((n,) * k, dtype=np.intp)
    for idx in product(range(n), repeat=k):
        out[idx] = pos[tuple(sorted(idx))]
    return out


@dataclass(frozen=True)
class SymTensor:
    """Fully symmetric order-``k`` tensor over ``R^n``."""

    n: int
    order: int
    data: np.ndarray

    def __post_init__(self):
        expected = math.comb(self.n + self.order - 1, self.order)
        if self.data.shape != (expected,):
            raise ValueError(
                f"order-{self.order} tensor on R^{self.n} needs {expected} entries, "
                f"got shape {self.data.shape}"
            )

    def __getitem__(self, idx) -> float:
        return float(self.data[_positions(self.n, self.order)[tuple(sorted(idx))]])

    def dense(self) -> np.ndarray:
        return self.data[_dense_map(self.n, self.order)]

    @classmethod
    def from_dense(cls, arr, atol: float | None = None) -> "SymTensor":
        """Pack a dense array; with ``atol`` set, reject asymmetric input."""
        arr = np.asarray(arr, dtype=float)
        n, k = arr.shape[0], arr.ndim
        if arr.shape != (n,) * k:
            raise ValueError("dense tensor must have equal extents")
        if atol is not None:
            gap = max_norm(arr - symmetrize(arr))
            if gap > atol:
                raise ValueError(f"tensor is not symmetric (gap {gap:.3e})")
        idx = multi_indices(n, k)
        data = np.array([arr[i] for i in idx]) if idx else np.zeros(0)
        return cls(n, k, data)

    @classmethod
    def zeros(cls, n: int, order: int) -> "SymTensor":
        return cls(n, order, np.zeros(math.comb(n + order - 1, order)))


def symmetrize(arr: np.ndarray) -> np.ndarray:
    """Average over all permutations of the axes."""
    perms = list(permutations(range(arr.ndim)))
    return sum(np.transpose(arr, p) for p in perms) / len(perms)


def max_norm(arr) -> float:
    arr = np.asarray(arr)
    return float(np.max(np.abs(arr))) if arr.size else 0.0


@dataclass(frozen=True)
class SpdFactor:
    """Lower Cholesky factor ``L`` with ``L @ L.T`` equal to the input."""

    lower: np.ndarray
    logdet: float

    @property
    def pivots(self) -> np.ndarray:
        return np.diag(self.lower).copy()

    def solve(self, b) -> np.ndarray:
        y = solve_triangular(self.lower, b, lower=True)
        return solve_triangular(self.lower.T, y, lower=False)

    def inverse(self) -> np.ndarray:
        n = self.lower.shape[0]
        inv = self.solve(np.eye(n))
        return 0.5 * (inv + inv.T)

    def orthonormal_frame(self) -> np.ndarray:
        """Columns ``E`` with ``E.T @ M @ E = I`` (i.e. ``L^{-T}``)."""
        n = self.lower.shape[0]
        return solve_triangular(self.lower.T, np.eye(n), lower=False)


def spd_factor(m, rel_tol: float = 1e-12) -> SpdFactor:
    """Cholesky factorization that reports the first non-positive pivot.

    A pivot counts as positive when its squared value exceeds
    ``rel_tol * max|m|``.
    """
    if isinstance(m, SymTensor):
        m = m.dense()
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    n = m.shape[0]
    scale = max_norm(m)
    floor = rel_tol * scale
    lower = np.zeros_like(m)
    for j in range(n):
        d = m[j, j] - lower[j, :j] @ lower[j, :j]
        if not d > floor:
            raise NotPositiveDefinite(j + 1, float(d))
        ljj = math.sqrt(d)
        lower[j, j] = ljj
        if j + 1 < n:
            lower[j + 1 :, j] = (m[j + 1 :, j] - lower[j + 1 :, :j] @ lower[j, :j]) / ljj
    return SpdFactor(lower, 2.0 * float(np.sum(np.log(np.diag(lower)))))


_SUBSCRIPTS = re.compile(r"^([a-zA-Z]*(?:,[a-zA-Z]*)*)->([a-zA-Z]*)$")


def contract(pattern: str, *operands):
    """Sum over repeated indices, e.g. ``contract("ij,i,j->", G, v, v)``.

    ``pattern`` uses einsum subscripts with an explicit output. Returns a
    float for a full contraction and an ndarray otherwise.
    """
    m = _SUBSCRIPTS.match(pattern.replace(" ", ""))
    if m is None:
        raise ContractionError(f"bad contraction pattern {pattern!r}")
    inputs = m.group(1).split(",")
    if len(inputs) != len(operands):
        raise ContractionError(f"pattern names {len(inputs)} operands, got {len(operands)}")
    arrays = [op.dense() if isinstance(op, SymTensor) else np.asarray(op, float) for op in operands]
    extent: dict[str, int] = {}
    for sub, arr in zip(inputs, arrays):
        if len(sub) != arr.ndim:
            raise ContractionError(f"operand of order {arr.ndim} given subscripts {sub!r}")
        for letter, size in zip(sub, arr.shape):
            if extent.setdefault(letter, size) != size:
                raise ContractionError(f"index {letter!r} pairs slots of length {extent[letter]} and {size}")
    for letter in m.group(2):
        if letter not in extent:
            raise ContractionError(f"output index {letter!r} does not appear in the inputs")
    out = np.einsum(pattern.replace(" ", ""), *arrays, optimize=len(arrays) > 2)
    return float(out) if np.ndim(out) == 0 else out


def raise_index(t: np.ndarray, metric_inv: np.ndarray, slot: int = -1) -> np.ndarray:
    """Contract slot ``slot`` of ``t`` with the inverse metric."""
    t = np.moveaxis(np.asarray(t, float), slot, -1)
    return np.moveaxis(t @ metric_inv.T, -1, slot)


def lower_index(t: np.ndarray, metric: np.ndarray, slot: int = -1) -> np.ndarray:
    t = np.moveaxis(np.asarray(t, float), slot, -1)
    return np.moveaxis(t @ metric.T, -1, slot)
