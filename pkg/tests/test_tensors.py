from itertools import permutations, product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from calabigeo.expr import jet4, parse
from calabigeo.tensors import (
    ContractionError,
    NotPositiveDefinite,
    SymTensor,
    contract,
    lower_index,
    max_norm,
    raise_index,
    spd_factor,
    symmetrize,
)

from oracles import loop_contract_vec


def test_identity_factor():
    f = spd_factor(np.eye(3))
    assert np.array_equal(f.lower, np.eye(3))
    assert f.logdet == 0.0


def test_pivots_of_diagonal():
    c, x = 1.0, 2.0
    f = spd_factor(np.diag([c / x**2, 1.0]))
    assert np.allclose(f.pivots, [0.5, 1.0], rtol=0, atol=1e-15)


def test_indefinite_reports_pivot():
    with pytest.raises(NotPositiveDefinite) as info:
        spd_factor(np.diag([1.0, -1.0]))
    assert info.value.index == 2


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        spd_factor(np.array([[1.0, np.nan], [np.nan, 1.0]]))


def test_factor_accepts_symtensor():
    t = SymTensor.from_dense(np.array([[2.0, 1.0], [1.0, 2.0]]))
    f = spd_factor(t)
    assert np.allclose(f.lower @ f.lower.T, t.dense(), rtol=1e-12)


def test_contract_quadratic_form():
    assert contract("ij,i,j->", np.eye(2), [3.0, 4.0], [3.0, 4.0]) == 25.0


def test_contract_trace_of_cubic_form_q12():
    j = jet4(parse("-ln(x1)+x2^2/2", 2), [1.0, 0.0])
    A = -0.5 * j.third.dense()
    Ginv = np.linalg.inv(j.hessian())
    got = contract("ijk,ij->k", A, Ginv)
    assert np.array_equal(got, loop_contract_vec(A, Ginv))
    assert np.allclose(got, [1.0, 0.0])


def test_contract_zero_tensor():
    z = SymTensor.zeros(3, 3)
    assert not contract("ijk,ij->k", z, np.eye(3)).any()


def test_contract_rejects_mismatch():
    with pytest.raises(ContractionError):
        contract("ij,j->i", np.eye(2), np.ones(3))
    with pytest.raises(ContractionError):
        contract("ij->k", np.eye(2))
    with pytest.raises(ContractionError):
        contract("ij,i->", np.eye(2))


def test_symtensor_reads_any_permutation():
    rng = np.random.default_rng(0)
    dense = symmetrize(rng.standard_normal((3, 3, 3, 3)))
    t = SymTensor.from_dense(dense, atol=1e-12)
    for idx in product(range(3), repeat=4):
        for p in permutations(idx):
            assert t[p] == t[idx]
    assert np.allclose(t.dense(), dense, rtol=0, atol=1e-15)


def test_symtensor_rejects_asymmetric_and_bad_length():
    with pytest.raises(ValueError):
        SymTensor.from_dense(np.arange(4.0).reshape(2, 2), atol=1e-12)
    with pytest.raises(ValueError):
        SymTensor(2, 3, np.zeros(3))


def _spd(n, seed):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((n, n))
    return m @ m.T + n * np.eye(n)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 4), seed=st.integers(0, 10_000), slot=st.integers(0, 2))
def test_raise_then_lower_is_identity(n, seed, slot):
    G = _spd(n, seed)
    Gi = spd_factor(G).inverse()
    t = np.random.default_rng(seed + 1).standard_normal((n,) * 3)
    back = lower_index(raise_index(t, Gi, slot), G, slot)
    assert max_norm(back - t) <= 1e-12 * max(1.0, max_norm(t)) * np.linalg.cond(G)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 4), seed=st.integers(0, 10_000))
def test_contract_matches_loops(n, seed):
    rng = np.random.default_rng(seed)
    A = symmetrize(rng.standard_normal((n, n, n)))
    B = symmetrize(rng.standard_normal((n, n, n, n)))
    G = _spd(n, seed)
    got = contract("ijk,ijkl,lm->m", A, B, G)
    want = np.zeros(n)
    size = np.zeros(n)
    for i, j, k, l, m in product(range(n), repeat=5):
        term = A[i, j, k] * B[i, j, k, l] * G[l, m]
        want[m] += term
        size[m] += abs(term)
    assert max_norm(got - want) <= 1e-12 * max(1.0, max_norm(size))


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 5), seed=st.integers(0, 10_000))
def test_cholesky_reproduces_input(n, seed):
    G = _spd(n, seed)
    f = spd_factor(G)
    assert max_norm(f.lower @ f.lower.T - G) <= 1e-12 * max_norm(G)
    assert np.all(f.pivots**2 > 1e-12 * max_norm(G))
    E = f.orthonormal_frame()
    assert max_norm(E.T @ G @ E - np.eye(n)) <= 1e-10
    assert f.logdet == pytest.approx(np.linalg.slogdet(G)[1], rel=1e-12, abs=1e-12)
