"""Dense real linear algebra for small bipartite operators.

Everything in this package works with real symmetric matrices in double
precision; states and measurement operators never need complex entries, so
none are allowed here.  Bipartite indices follow the row-major convention
``|j,k> -> j*dim_b + k`` throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "BipartiteShape",
    "Spectrum",
    "kron",
    "partial_transpose",
    "eigh",
    "positive_eigenspace_projector",
    "rank_with_tol",
    "frobenius",
    "require_symmetric",
]

_SYM_TOL = 1e-12


@dataclass(frozen=True)
class BipartiteShape:
    """Dimensions (dim_a, dim_b) of a bipartite operator, product dim_a*dim_b."""

    dim_a: int
    dim_b: int

    def __post_init__(self) -> None:
        if self.dim_a < 1 or self.dim_b < 1:
            raise ValueError("bipartite dimensions must be positive")

    @property
    def total(self) -> int:
        return self.dim_a * self.dim_b


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition with eigenvalues sorted in descending order.

    ``vectors[:, i]`` is the unit eigenvector for ``values[i]``.
    """

    values: np.ndarray
    vectors: np.ndarray


def require_symmetric(m: np.ndarray, tol: float = _SYM_TOL, name: str = "matrix") -> np.ndarray:
    """Return ``m`` as a float array, raising if it is not square symmetric."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - m.T)) > tol * scale:
        raise ValueError(f"{name} is not symmetric within {tol:g}")
    return m


def frobenius(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius inner product <a, b> = trace(a^T b)."""
    return float(np.tensordot(a, b, axes=2))


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product in the row-major bipartite convention.

    ``kron(a, b)[(j*dB+k), (j'*dB+k')] = a[j, j'] * b[k, k']``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("kron expects two 2-d arrays")
    return np.kron(a, b)


def partial_transpose(m: np.ndarray, shape: BipartiteShape) -> np.ndarray:
    """Transpose the second tensor factor of a bipartite matrix.

    The map is an involution, preserves the trace and (for symmetric input)
    symmetry: ``out[(j,k),(j',k')] = m[(j,k'),(j',k)]``.
    """
    m = np.asarray(m, dtype=float)
    n = shape.total
    if m.shape != (n, n):
        raise ValueError(f"matrix shape {m.shape} does not match bipartite shape {n}x{n}")
    da, db = shape.dim_a, shape.dim_b
    return m.reshape(da, db, da, db).transpose(0, 3, 2, 1).reshape(n, n)


def _offdiag_norm(m: np.ndarray) -> float:
    off = m - np.diag(np.diag(m))
    return float(np.sqrt(np.sum(off * off)))


def eigh(m: np.ndarray, max_sweeps: int = 100) -> Spectrum:
    """Eigendecompose a real symmetric matrix with the cyclic Jacobi method.

    Sweeps over all (p, q) pairs applying Givens rotations until the
    off-diagonal Frobenius norm falls below ``1e-13 * ||m||_F`` or
    ``max_sweeps`` sweeps have run.  Deterministic for a fixed input, which
    keeps downstream constructions (frames, projectors) reproducible.
    """
    a = require_symmetric(m).copy()
    n = a.shape[0]
    v = np.eye(n)
    norm = float(np.sqrt(np.sum(a * a)))
    threshold = 1e-13 * norm
    if norm == 0.0:
        return Spectrum(values=np.zeros(n), vectors=v)

    for _ in range(max_sweeps):
        if _offdiag_norm(a) <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-20 * norm:
                    continue
                # Classic Jacobi rotation annihilating a[p, q].
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rp = c * a[p, :] - s * a[q, :]
                rq = s * a[p, :] + c * a[q, :]
                a[p, :], a[q, :] = rp, rq
                cp = c * a[:, p] - s * a[:, q]
                cq = s * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = cp, cq
                vp = c * v[:, p] - s * v[:, q]
                vq = s * v[:, p] + c * v[:, q]
                v[:, p], v[:, q] = vp, vq

    values = np.diag(a).copy()
    order = np.argsort(values)[::-1]
    return Spectrum(values=values[order], vectors=v[:, order])


def positive_eigenspace_projector(m: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Orthogonal projector onto the span of eigenvectors with eigenvalue > tol.

    Eigenvalues in [-tol, tol] are treated as zero and excluded, so the
    result maximizes trace(P M) over projectors of its own rank.
    """
    spec = eigh(m)
    cols = spec.vectors[:, spec.values > tol]
    return cols @ cols.T


def rank_with_tol(m: np.ndarray, tol: float = 1e-7) -> int:
    """Number of eigenvalues of a symmetric matrix with |value| > tol."""
    spec = eigh(m)
    return int(np.sum(np.abs(spec.values) > tol))
