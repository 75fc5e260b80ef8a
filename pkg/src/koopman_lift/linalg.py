"""Dense kernels for the estimator: truncated pseudoinverse and eigenpairs."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

DEFAULT_REL_TOL = 1e-10


class NumericalError(ArithmeticError):
    """A decomposition failed or produced an unusable result."""


class IllConditionedEigenbasis(NumericalError):
    def __init__(self, index: int, conditioning: float):
        super().__init__(
            f"ill-conditioned eigenbasis: eigenvalue {index} has |w^T xi|/(|w||xi|) = "
            f"{conditioning:.3e}"
        )
        self.index = index


def _check_matrix(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def pinv_truncated(m, rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse with singular values below
    ``rel_tol * sigma_max`` treated as zero."""
    m = _check_matrix(m)
    if not 0.0 < rel_tol < 1.0:
        raise ValueError("rel_tol must lie in (0, 1)")
    if m.size == 0:
        return np.zeros(m.shape[::-1])
    try:
        U, s, Vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    keep = s >= rel_tol * s[0] if s[0] > 0 else np.zeros_like(s, dtype=bool)
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (Vt.T * inv) @ U.T


def lstsq(a, b, rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    """Minimum-norm least-squares solution of ``a @ x = b``."""
    return pinv_truncated(a, rel_tol) @ np.asarray(b, dtype=float)


class EigenSystem(NamedTuple):
    """Eigenvalues with right (``xi``) and left (``w``) eigenvectors as columns,
    scaled so that ``w[:, n] @ xi[:, n] == 1``."""

    values: np.ndarray
    right: np.ndarray
    left: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.right * self.values) @ self.left.T


def eig_with_left(m, min_conditioning: float = 1e-10) -> EigenSystem:
    """Eigendecomposition with bi-orthogonally matched left eigenvectors.

    Left eigenvectors are the rows of ``inv(V)``, which fixes the pairing
    ``w_n^T xi_n = 1`` by construction. A pair whose normalised overlap
    ``|w^T xi| / (|w| |xi|)`` falls below ``min_conditioning`` signals a
    (near-)defective matrix and raises :class:`IllConditionedEigenbasis`.
    """
    m = _check_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    try:
        values, V = np.linalg.eig(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    V = V / np.linalg.norm(V, axis=0)
    try:
        W = np.linalg.inv(V).T
    except np.linalg.LinAlgError:
        raise IllConditionedEigenbasis(0, 0.0) from None
    overlap = 1.0 / (np.linalg.norm(W, axis=0) * np.linalg.norm(V, axis=0))
    bad = np.flatnonzero(overlap < min_conditioning)
    if bad.size:
        raise IllConditionedEigenbasis(int(bad[0]), float(overlap[bad[0]]))
    return EigenSystem(values, V, W)
