"""Dense linear algebra building blocks."""

from __future__ import annotations

import numpy as np
import pytest

from pptbell.linalg import (
    BipartiteShape,
    eigh,
    frobenius,
    kron,
    partial_transpose,
    positive_eigenspace_projector,
    rank_with_tol,
    require_symmetric,
)


def _random_symmetric(rng, n):
    m = rng.standard_normal((n, n))
    return 0.5 * (m + m.T)


def test_eigh_matches_numpy():
    """Jacobi eigenvalues agree with LAPACK on random symmetric matrices."""
    rng = np.random.default_rng(11)
    for n in (2, 3, 5, 9, 16):
        m = _random_symmetric(rng, n)
        spec = eigh(m)
        ref = np.sort(np.linalg.eigvalsh(m))[::-1]
        assert np.max(np.abs(spec.values - ref)) < 1e-10


def test_eigh_reconstructs_and_orthonormal():
    """Eigenvector matrix is orthonormal and reconstructs the input."""
    rng = np.random.default_rng(12)
    m = _random_symmetric(rng, 8)
    spec = eigh(m)
    v = spec.vectors
    assert np.max(np.abs(v.T @ v - np.eye(8))) < 1e-12
    assert np.max(np.abs(v @ np.diag(spec.values) @ v.T - m)) < 1e-10


def test_eigh_sorted_descending():
    """Eigenvalues come back in descending order."""
    rng = np.random.default_rng(13)
    spec = eigh(_random_symmetric(rng, 7))
    assert np.all(np.diff(spec.values) <= 0)


def test_kron_matches_numpy():
    """Kronecker product agrees with numpy on random inputs."""
    rng = np.random.default_rng(14)
    a = rng.standard_normal((3, 3))
    b = rng.standard_normal((4, 4))
    assert np.array_equal(kron(a, b), np.kron(a, b))


def test_partial_transpose_involution():
    """Applying the partial transpose twice returns the input."""
    rng = np.random.default_rng(15)
    shape = BipartiteShape(3, 4)
    m = _random_symmetric(rng, shape.total)
    assert np.array_equal(partial_transpose(partial_transpose(m, shape), shape), m)


def test_partial_transpose_product_operator():
    """On a product operator the partial transpose transposes one factor."""
    rng = np.random.default_rng(16)
    a = _random_symmetric(rng, 3)
    b = rng.standard_normal((3, 3))
    m = kron(a, b)
    assert np.max(np.abs(partial_transpose(m, BipartiteShape(3, 3)) - kron(a, b.T))) < 1e-14


def test_partial_transpose_detects_entanglement():
    """The two-qubit singlet has a negative partial transpose eigenvalue."""
    psi = np.array([0.0, 1.0, -1.0, 0.0]) / np.sqrt(2.0)
    rho = np.outer(psi, psi)
    vals = eigh(partial_transpose(rho, BipartiteShape(2, 2))).values
    assert abs(vals.min() + 0.5) < 1e-12


def test_positive_eigenspace_projector():
    """Projector keeps positive directions and drops the rest."""
    m = np.diag([2.0, 0.5, 0.0, -1.0])
    p = positive_eigenspace_projector(m)
    assert np.max(np.abs(p - np.diag([1.0, 1.0, 0.0, 0.0]))) < 1e-12
    assert np.max(np.abs(p @ p - p)) < 1e-12


def test_positive_eigenspace_excludes_near_zero():
    """Eigenvalues within the tie tolerance of zero stay out of the projector."""
    m = np.diag([1.0, 1e-13, -1e-13])
    p = positive_eigenspace_projector(m, tol=1e-12)
    assert np.max(np.abs(p - np.diag([1.0, 0.0, 0.0]))) < 1e-12


def test_rank_with_tol():
    """Rank counts eigenvalues above the threshold by magnitude."""
    m = np.diag([1.0, 1e-3, 1e-9, 0.0])
    assert rank_with_tol(m, tol=1e-7) == 2


def test_frobenius_inner_product():
    """Frobenius pairing matches the trace of the product."""
    rng = np.random.default_rng(17)
    a = _random_symmetric(rng, 5)
    b = _random_symmetric(rng, 5)
    assert abs(frobenius(a, b) - np.trace(a @ b)) < 1e-12


def test_require_symmetric_rejects():
    """Asymmetric input raises."""
    m = np.array([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(ValueError):
        require_symmetric(m)


def test_bipartite_shape_validation():
    """Nonpositive dimensions are rejected."""
    with pytest.raises(ValueError):
        BipartiteShape(0, 3)
