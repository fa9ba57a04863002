"""Trace-orthonormal operator bases for one and two four-level atoms.

The single-atom level scheme is a J = 0 ground state |1> and three excited
Zeeman sublevels |2>, |3>, |4> (magnetic quantum numbers m = -1, 0, +1).
Dynamical maps in this package are stored as matrices over the 16-element
operator basis assembled here: the normalized identity, three traceless
diagonal combinations, and the twelve off-diagonal matrix units.  The set is
orthonormal under the Hilbert-Schmidt product Tr{A^dag B} and closed under
Hermitian conjugation.

Two-atom operators live on the 256-element product basis Q_i (x) Q_j with
the flat index n = 16*i + j; atom 1 is the left tensor factor.
"""

from __future__ import annotations

import functools

import numpy as np

HILBERT_DIM = 4
NUM_OPS = 16
NUM_OPS_PAIR = NUM_OPS * NUM_OPS


def matrix_unit(k: int, l: int) -> np.ndarray:
    """Operator |k><l| on the four-level space, with 1-based state labels."""
    m = np.zeros((HILBERT_DIM, HILBERT_DIM), dtype=complex)
    m[k - 1, l - 1] = 1.0
    return m


@functools.cache
def build_single_atom_basis() -> np.ndarray:
    """The 16 single-atom basis operators, shape (16, 4, 4).

    Order: Id/2; the three traceless diagonal combinations with sign
    patterns (-+-+), (++--), (-++-) over (|1>,|2>,|3>,|4>), each divided
    by 2; then the matrix units sigma_14, sigma_41, sigma_13, sigma_31,
    sigma_12, sigma_21, sigma_34, sigma_43, sigma_42, sigma_24, sigma_32,
    sigma_23.  Every element's dagger is again a basis element.
    """
    diag = lambda *signs: np.diag(np.array(signs, dtype=complex))
    ops = [
        np.eye(HILBERT_DIM, dtype=complex) / 2,
        diag(-1, 1, -1, 1) / 2,
        diag(1, 1, -1, -1) / 2,
        diag(-1, 1, 1, -1) / 2,
        matrix_unit(1, 4), matrix_unit(4, 1),
        matrix_unit(1, 3), matrix_unit(3, 1),
        matrix_unit(1, 2), matrix_unit(2, 1),
        matrix_unit(3, 4), matrix_unit(4, 3),
        matrix_unit(4, 2), matrix_unit(2, 4),
        matrix_unit(3, 2), matrix_unit(2, 3),
    ]
    out = np.array(ops)
    out.flags.writeable = False
    return out


@functools.cache
def _flat_single() -> np.ndarray:
    """Row n = vec(Q_n), shape (16, 16)."""
    out = build_single_atom_basis().reshape(NUM_OPS, -1).copy()
    out.flags.writeable = False
    return out


@functools.cache
def _flat_pair() -> np.ndarray:
    """Row n = vec(Q_i (x) Q_j) with n = 16*i + j, shape (256, 256)."""
    b = build_single_atom_basis()
    # (Q_i (x) Q_j)[4a+c, 4b+d] = Q_i[a,b] * Q_j[c,d]
    prod = np.einsum("iab,jcd->ijacbd", b, b)
    out = prod.reshape(NUM_OPS_PAIR, HILBERT_DIM**2 * HILBERT_DIM**2).copy()
    out.flags.writeable = False
    return out


def pair_index(i: int, j: int) -> int:
    """Flat two-atom basis index of Q_i (x) Q_j."""
    return NUM_OPS * i + j


def _flat_for_dim(dim: int) -> np.ndarray:
    if dim == HILBERT_DIM:
        return _flat_single()
    if dim == HILBERT_DIM**2:
        return _flat_pair()
    raise ValueError(f"operator dimension {dim} is neither one- nor two-atom")


def expand(op: np.ndarray) -> np.ndarray:
    """Coefficients c_n = Tr{Q_n^dag O} of a one- or two-atom operator.

    Accepts a single operator or a batch with leading axes.
    """
    op = np.asarray(op, dtype=complex)
    flat = _flat_for_dim(op.shape[-1])
    vec = op.reshape(op.shape[:-2] + (-1,))
    return vec @ np.conj(flat).T


def reconstruct(coeffs: np.ndarray) -> np.ndarray:
    """Operator sum_n c_n Q_n from its coefficient vector."""
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.shape[-1] == NUM_OPS:
        dim = HILBERT_DIM
    elif coeffs.shape[-1] == NUM_OPS_PAIR:
        dim = HILBERT_DIM**2
    else:
        raise ValueError(f"coefficient length {coeffs.shape[-1]} not recognized")
    flat = _flat_for_dim(dim)
    return (coeffs @ flat).reshape(coeffs.shape[:-1] + (dim, dim))


def dagger_permutation(pair: bool = False) -> np.ndarray:
    """Permutation p with Q_{p[n]} = Q_n^dag.

    For any operator O with coefficients c, the coefficients of O^dag are
    conj(c)[p].  Hermitian operators therefore satisfy c[p] = conj(c).
    """
    if pair:
        p = dagger_permutation(False)
        return np.array([pair_index(p[i], p[j])
                         for i in range(NUM_OPS) for j in range(NUM_OPS)])
    b = build_single_atom_basis()
    perm = []
    for q in b:
        target = q.conj().T
        hits = [m for m in range(NUM_OPS) if np.array_equal(b[m], target)]
        if len(hits) != 1:
            raise RuntimeError("basis is not closed under Hermitian conjugation")
        perm.append(hits[0])
    return np.array(perm)


def gram_matrix(pair: bool = False) -> np.ndarray:
    """Hilbert-Schmidt Gram matrix Tr{Q_m^dag Q_n} of the basis."""
    flat = _flat_pair() if pair else _flat_single()
    return np.conj(flat) @ flat.T


def pair_operator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Two-atom operator A (x) B as a 16 x 16 matrix (atom 1 left)."""
    return np.kron(a, b)


def pair_trace(coeffs: np.ndarray) -> complex:
    """Trace of the two-atom operator with these coefficients.

    Only the (Id/2)(x)(Id/2) component carries trace, Tr = 4 c_0.
    """
    return 4.0 * coeffs[..., 0]


def sandwich_matrix(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Coefficient-space matrix of the linear map O -> X O Y.

    Accepts 4x4 (single-atom) or 16x16 (two-atom) factors; the result
    satisfies expand(X O Y) = M @ expand(O).
    """
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    flat = _flat_for_dim(x.shape[0])
    # row-major vec: vec(X O Y) = (X kron Y^T) vec(O)
    return np.conj(flat) @ np.kron(x, y.T) @ flat.T


def kron_superop(m1: np.ndarray, m2: np.ndarray) -> np.ndarray:
    """Two-atom map acting as m1 on atom 1's basis index and m2 on atom 2's.

    With the flat convention n = 16*i + j this is exactly np.kron(m1, m2).
    """
    return np.kron(m1, m2)


def apply_factorized(m1: np.ndarray, m2: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """Apply kron_superop(m1, m2) to one or more coefficient vectors.

    The leading axis (length 256) splits into (16, 16); any trailing
    axes are batch axes, so the product costs O(16^3) per vector
    instead of O(256^2).
    """
    c = coeffs.reshape((NUM_OPS, NUM_OPS) + coeffs.shape[1:])
    out = np.einsum("ik,kl...,jl->ij...", m1, c, m2, optimize=True)
    return out.reshape(coeffs.shape)
