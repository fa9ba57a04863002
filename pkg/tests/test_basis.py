"""Structural checks of the one- and two-atom operator bases."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mqcsim import basis


def random_op(rng, dim):
    return rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))


def test_gram_matrix_is_identity_single():
    g = basis.gram_matrix(pair=False)
    assert np.max(np.abs(g - np.eye(16))) < 1e-12


def test_gram_matrix_is_identity_pair():
    g = basis.gram_matrix(pair=True)
    assert np.max(np.abs(g - np.eye(256))) < 1e-12


def test_basis_order_matches_stated_layout():
    b = basis.build_single_atom_basis()
    assert np.allclose(b[0], np.eye(4) / 2)
    assert np.allclose(np.diag(b[1]), [-0.5, 0.5, -0.5, 0.5])
    assert np.allclose(np.diag(b[2]), [0.5, 0.5, -0.5, -0.5])
    assert np.allclose(np.diag(b[3]), [-0.5, 0.5, 0.5, -0.5])
    assert np.allclose(b[4], basis.matrix_unit(1, 4))
    assert np.allclose(b[5], basis.matrix_unit(4, 1))
    assert np.allclose(b[9], basis.matrix_unit(2, 1))
    assert np.allclose(b[15], basis.matrix_unit(2, 3))


def test_ground_projector_expansion():
    # sigma_11 decomposes over the four diagonal elements only
    c = basis.expand(basis.matrix_unit(1, 1))
    assert np.allclose(c[:4], [0.5, -0.5, 0.5, -0.5])
    assert np.allclose(c[4:], 0.0)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_expand_reconstruct_roundtrip_single(seed):
    rng = np.random.default_rng(seed)
    op = random_op(rng, 4)
    assert np.allclose(basis.reconstruct(basis.expand(op)), op, atol=1e-12)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=10, deadline=None)
def test_expand_reconstruct_roundtrip_pair(seed):
    rng = np.random.default_rng(seed)
    op = random_op(rng, 16)
    assert np.allclose(basis.reconstruct(basis.expand(op)), op, atol=1e-12)


def test_pair_expansion_factorizes():
    rng = np.random.default_rng(7)
    a, b = random_op(rng, 4), random_op(rng, 4)
    cp = basis.expand(basis.pair_operator(a, b))
    ca, cb = basis.expand(a), basis.expand(b)
    assert np.allclose(cp, np.outer(ca, cb).ravel(), atol=1e-12)


def test_dagger_permutation_involution_and_action():
    for pair in (False, True):
        p = basis.dagger_permutation(pair)
        assert np.array_equal(p[p], np.arange(p.size))
    rng = np.random.default_rng(3)
    op = random_op(rng, 4)
    p = basis.dagger_permutation()
    c = basis.expand(op)
    cd = basis.expand(op.conj().T)
    assert np.allclose(cd, np.conj(c)[p], atol=1e-12)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=10, deadline=None)
def test_hermitian_coefficient_symmetry(seed):
    rng = np.random.default_rng(seed)
    op = random_op(rng, 4)
    herm = op + op.conj().T
    c = basis.expand(herm)
    p = basis.dagger_permutation()
    assert np.allclose(c[p], np.conj(c), atol=1e-12)


def test_pair_trace():
    rng = np.random.default_rng(11)
    op = random_op(rng, 16)
    assert basis.pair_trace(basis.expand(op)) == pytest.approx(np.trace(op), abs=1e-12)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=10, deadline=None)
def test_sandwich_matrix_single(seed):
    rng = np.random.default_rng(seed)
    x, y, op = (random_op(rng, 4) for _ in range(3))
    m = basis.sandwich_matrix(x, y)
    assert np.allclose(m @ basis.expand(op), basis.expand(x @ op @ y), atol=1e-11)


def test_sandwich_matrix_pair():
    rng = np.random.default_rng(5)
    x, y, op = (random_op(rng, 16) for _ in range(3))
    m = basis.sandwich_matrix(x, y)
    assert np.allclose(m @ basis.expand(op), basis.expand(x @ op @ y), atol=1e-10)


def test_kron_superop_and_factorized_apply():
    rng = np.random.default_rng(13)
    m1 = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
    m2 = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
    c = rng.standard_normal(256) + 1j * rng.standard_normal(256)
    full = basis.kron_superop(m1, m2) @ c
    fast = basis.apply_factorized(m1, m2, c)
    assert np.allclose(full, fast, atol=1e-10)
    batch = rng.standard_normal((256, 3)) + 1j * rng.standard_normal((256, 3))
    assert np.allclose(basis.apply_factorized(m1, m2, batch),
                       basis.kron_superop(m1, m2) @ batch, atol=1e-10)
    # and the index convention: kron acts as m1 on atom 1's slot
    a, b = (rng.standard_normal((4, 4)) for _ in range(2))
    ca, cb = basis.expand(a.astype(complex)), basis.expand(b.astype(complex))
    pairc = np.outer(ca, cb).ravel()
    moved = basis.apply_factorized(m1, np.eye(16), pairc)
    assert np.allclose(moved, np.outer(m1 @ ca, cb).ravel(), atol=1e-10)
