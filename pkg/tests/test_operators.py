"""Tests for operator handles, block structure, and the permutation identity.

The dense oracle for the permutation identity builds the explicit matrix
P A P^T and evaluates phi of it with the phi-core kernels.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from partexp.operators import (
    BlockDiagonalOperator,
    CallableOperator,
    DenseOperator,
    DiagonalOperator,
    IndexPermutation,
    PermutedOperator,
    apply,
    dense_phi_action,
    dense_psi_action,
    norm_estimate,
    permuted_phi_action,
    permuted_psi_action,
    zero_operator,
)
from partexp.phifuncs import phi_chain_dense, psi_apply_dense


def perm_matrix(perm: IndexPermutation) -> np.ndarray:
    n = len(perm)
    P = np.zeros((n, n))
    P[np.arange(n), perm.forward] = 1.0
    return P


def test_identity_apply():
    op = DenseOperator(np.eye(4))
    v = np.array([1.0, 2.0, -3.0, 0.5])
    np.testing.assert_array_equal(apply(op, v), v)


def test_block_diagonal_concatenates_block_products():
    rng = np.random.default_rng(1)
    B1 = rng.uniform(-1, 1, (2, 2))
    B2 = rng.uniform(-1, 1, (2, 2))
    op = BlockDiagonalOperator([DenseOperator(B1), DenseOperator(B2)])
    v = rng.uniform(-1, 1, 4)
    expected = np.concatenate([B1 @ v[:2], B2 @ v[2:]])
    np.testing.assert_allclose(apply(op, v), expected, rtol=1e-15)


def test_block_diagonal_matches_assembled_dense():
    rng = np.random.default_rng(2)
    blocks = [rng.uniform(-1, 1, (3, 3)) for _ in range(3)]
    op = BlockDiagonalOperator([DenseOperator(B) for B in blocks])
    dense = np.zeros((9, 9))
    for i, B in enumerate(blocks):
        dense[3 * i:3 * i + 3, 3 * i:3 * i + 3] = B
    v = rng.uniform(-1, 1, 9)
    assert np.max(np.abs(apply(op, v) - dense @ v)) <= 1e-13


def test_block_diagonal_pool_matches_serial():
    rng = np.random.default_rng(3)
    blocks = [DenseOperator(rng.uniform(-1, 1, (4, 4))) for _ in range(5)]
    op = BlockDiagonalOperator(blocks)
    v = rng.uniform(-1, 1, 20)
    serial = apply(op, v)
    with ThreadPoolExecutor(max_workers=3) as pool:
        parallel = apply(op, v, pool=pool)
    np.testing.assert_array_equal(serial, parallel)


def test_permuted_apply_matches_dense_product():
    rng = np.random.default_rng(4)
    inner = rng.uniform(-1, 1, (6, 6))
    perm = IndexPermutation(rng.permutation(6))
    op = PermutedOperator(DenseOperator(inner), perm)
    P = perm_matrix(perm)
    outer = P @ inner @ P.T
    v = rng.uniform(-1, 1, 6)
    np.testing.assert_allclose(apply(op, v), outer @ v, rtol=0, atol=1e-13)


def test_permutation_rejects_non_bijections():
    with pytest.raises(ValueError):
        IndexPermutation([0, 0, 1])
    with pytest.raises(ValueError):
        IndexPermutation([0, 2])
    perm = IndexPermutation([2, 0, 1])
    v = np.array([10.0, 20.0, 30.0])
    np.testing.assert_array_equal(perm.scatter(perm.gather(v)), v)
    np.testing.assert_array_equal(perm.gather(perm.scatter(v)), v)


def test_apply_rejects_length_mismatch():
    op = DenseOperator(np.eye(3))
    with pytest.raises(ValueError):
        apply(op, np.zeros(4))


@settings(max_examples=50, deadline=None)
@given(data=st.data())
def test_apply_is_linear(data):
    n = data.draw(st.integers(min_value=1, max_value=6))
    rng = np.random.default_rng(data.draw(st.integers(min_value=0, max_value=2**31)))
    op = DenseOperator(rng.uniform(-2, 2, (n, n)))
    u = rng.uniform(-1, 1, n)
    v = rng.uniform(-1, 1, n)
    a, b = rng.uniform(-2, 2, 2)
    lhs = apply(op, a * u + b * v)
    rhs = a * apply(op, u) + b * apply(op, v)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(rhs)))


# ---------------------------------------------------------------------------
# norm estimates


def test_norm_estimate_zero_operator():
    assert norm_estimate(zero_operator(5)) == 0.0


def test_norm_estimate_diagonal():
    assert norm_estimate(DenseOperator(np.diag([3.0, -5.0]))) == 5.0
    assert norm_estimate(DiagonalOperator(np.array([3.0, -5.0]))) == 5.0


def test_norm_estimate_callable_within_factor_of_dense():
    rng = np.random.default_rng(8)
    A = rng.uniform(-1, 1, (20, 20))
    A[rng.uniform(size=(20, 20)) < 0.7] = 0.0  # sparse pattern
    ref = np.linalg.norm(A, 1)
    op = CallableOperator(20, lambda v: A @ v)
    est = norm_estimate(op)
    assert ref / 20 <= est <= ref * (1 + 1e-12)


def test_norm_estimate_block_diagonal_is_max_block():
    op = BlockDiagonalOperator([
        DenseOperator(np.diag([2.0, 1.0])),
        DenseOperator(np.diag([-7.0, 0.0])),
    ])
    assert norm_estimate(op) == 7.0


# ---------------------------------------------------------------------------
# permuted phi / psi actions


def test_permuted_phi_identity_perm_is_plain():
    rng = np.random.default_rng(10)
    A = rng.uniform(-1, 1, (5, 5))
    v = rng.uniform(-1, 1, 5)
    perm = IndexPermutation.identity(5)
    out = permuted_phi_action(DenseOperator(A), perm, 2, 0.7, v)
    ref = phi_chain_dense(0.7 * A, v, 2)[2]
    np.testing.assert_allclose(out, ref, rtol=1e-13)


def test_permuted_phi_k0_scale0_is_identity():
    rng = np.random.default_rng(11)
    v = rng.uniform(-1, 1, 6)
    perm = IndexPermutation(rng.permutation(6))
    out = permuted_phi_action(DenseOperator(rng.uniform(-1, 1, (6, 6))), perm, 0, 0.0, v)
    np.testing.assert_allclose(out, v, rtol=0, atol=1e-14)


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_permuted_phi_matches_dense_oracle(k):
    rng = np.random.default_rng(12 + k)
    blocks = [rng.uniform(-1, 1, (3, 3)), rng.uniform(-1, 1, (3, 3))]
    inner = BlockDiagonalOperator([DenseOperator(B) for B in blocks])
    perm = IndexPermutation(rng.permutation(6))
    v = rng.uniform(-1, 1, 6)
    out = permuted_phi_action(inner, perm, k, 0.9, v)

    P = perm_matrix(perm)
    inner_dense = np.zeros((6, 6))
    inner_dense[:3, :3] = blocks[0]
    inner_dense[3:, 3:] = blocks[1]
    outer = P @ inner_dense @ P.T
    ref = phi_chain_dense(0.9 * outer, v, k)[k]
    assert np.linalg.norm(out - ref) <= 1e-12 * max(np.linalg.norm(ref), 1.0)


def test_permuted_psi_matches_dense_oracle():
    rng = np.random.default_rng(20)
    weights = [1.0, -0.5, 0.25]
    blocks = [rng.uniform(-1, 1, (2, 2)) for _ in range(3)]
    inner = BlockDiagonalOperator([DenseOperator(B) for B in blocks])
    perm = IndexPermutation(rng.permutation(6))
    v = rng.uniform(-1, 1, 6)
    out = permuted_psi_action(inner, perm, weights, 0.6, v)

    P = perm_matrix(perm)
    inner_dense = np.zeros((6, 6))
    for i, B in enumerate(blocks):
        inner_dense[2 * i:2 * i + 2, 2 * i:2 * i + 2] = B
    ref = psi_apply_dense(weights, 0.6 * (P @ inner_dense @ P.T), v)
    assert np.linalg.norm(out - ref) <= 1e-12 * max(np.linalg.norm(ref), 1.0)


def test_dense_phi_action_diagonal_structure():
    d = np.array([0.3, -1.2, 4.0])
    v = np.array([1.0, 2.0, 3.0])
    out = dense_phi_action(DiagonalOperator(d), 2, 0.5, v)
    ref = phi_chain_dense(np.diag(0.5 * d), v, 2)[2]
    np.testing.assert_allclose(out, ref, rtol=1e-13)


def test_dense_psi_action_matches_flat_dense():
    rng = np.random.default_rng(31)
    A = rng.uniform(-1, 1, (4, 4))
    v = rng.uniform(-1, 1, 4)
    out = dense_psi_action(DenseOperator(A), [0.5, 0.5], 1.1, v)
    ref = psi_apply_dense([0.5, 0.5], 1.1 * A, v)
    np.testing.assert_allclose(out, ref, rtol=1e-13)


def test_dense_phi_action_refuses_unstructured_callable():
    op = CallableOperator(3, lambda v: v)
    with pytest.raises(TypeError):
        dense_phi_action(op, 1, 1.0, np.ones(3))
