"""Dense real matrix kernels: structured constructors, Kronecker/direct-sum
algebra, Moore-Penrose pseudoinverse, symmetric eigendecomposition and the
PSD square root.

All functions accept and return plain ``float64`` numpy arrays. Designs in
scope have at most a few dozen dimensions, so everything is dense.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NotPositiveSemidefiniteError

__all__ = [
    "SymEigen",
    "centering",
    "direct_sum",
    "kronecker",
    "moore_penrose",
    "psd_sqrt",
    "sym_eigen",
]

_EPS = np.finfo(np.float64).eps


def _as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got ndim={a.ndim}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"matrix dimensions must be >= 1, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def centering(t: int) -> np.ndarray:
    """Centering matrix I_t - J_t/t (symmetric idempotent, annihilates ones)."""
    if t < 1:
        raise DimensionError(f"centering dimension must be >= 1, got {t}")
    return np.eye(t) - np.full((t, t), 1.0 / t)


def kronecker(a, b) -> np.ndarray:
    """Kronecker product with block (i, j) equal to a[i, j] * b."""
    return np.kron(_as_matrix(a), _as_matrix(b))


def direct_sum(blocks) -> np.ndarray:
    """Block-diagonal matrix of the given blocks; off-block entries exactly 0."""
    blocks = [_as_matrix(b) for b in blocks]
    if not blocks:
        raise ValueError("direct_sum needs at least one block")
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols))
    r = c = 0
    for b in blocks:
        out[r:r + b.shape[0], c:c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out


def moore_penrose(a) -> np.ndarray:
    """Moore-Penrose pseudoinverse via SVD.

    Singular values below ``max(rows, cols) * eps * sigma_max`` are treated
    as zero, so rank-deficient inputs (including the zero matrix) are handled
    without error.
    """
    a = _as_matrix(a)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        return np.zeros((a.shape[1], a.shape[0]))
    cutoff = max(a.shape) * _EPS * s[0]
    inv = np.where(s > cutoff, 1.0 / np.where(s > cutoff, s, 1.0), 0.0)
    return (vt.T * inv) @ u.T


def _symmetry_atol(a: np.ndarray) -> float:
    # Sample covariances accumulate rounding asymmetry; scale with the input.
    return 1e-8 * (1.0 + np.linalg.norm(a, "fro"))


@dataclass(frozen=True)
class SymEigen:
    """Eigendecomposition of a symmetric matrix.

    ``values`` are sorted descending; ``vectors`` holds the matching
    orthonormal eigenvectors as columns.
    """

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.T


def sym_eigen(a) -> SymEigen:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    The input must be symmetric within ``1e-8 * (1 + ||A||_F)``; it is then
    symmetrized as (A + A') / 2 before decomposition.
    """
    a = _as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"sym_eigen needs a square matrix, got {a.shape}")
    if np.linalg.norm(a - a.T, "fro") > _symmetry_atol(a):
        raise ValueError("matrix is not symmetric within tolerance")
    sym = (a + a.T) / 2.0
    values, vectors = np.linalg.eigh(sym)
    order = np.argsort(values)[::-1]
    return SymEigen(values=values[order], vectors=np.ascontiguousarray(vectors[:, order]))


def psd_sqrt(a) -> np.ndarray:
    """Symmetric square root S of a PSD matrix, S @ S = A.

    Eigenvalues in [-atol, 0) are clamped to zero; anything below -atol
    raises :class:`NotPositiveSemidefiniteError`.
    """
    eig = sym_eigen(a)
    atol = _symmetry_atol(np.asarray(a, dtype=np.float64))
    if eig.values[-1] < -atol:
        raise NotPositiveSemidefiniteError(
            f"matrix has eigenvalue {eig.values[-1]:.3e} below -{atol:.3e}"
        )
    clamped = np.maximum(eig.values, 0.0)
    return (eig.vectors * np.sqrt(clamped)) @ eig.vectors.T
