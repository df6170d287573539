"""Dense matrix kernels for desk-scale systems (a few thousand DOFs at most).

Thin wrappers over LAPACK (through scipy) that enforce the contracts the rest
of the package relies on: explicit singularity errors, M-orthonormal
eigenvectors, and deterministic bandwidth measurement.
"""
from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg as sla


class SingularMatrixError(np.linalg.LinAlgError):
    pass


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    pass


def _square(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    return A


def lu_factor(A):
    """Partial-pivoting LU; raises on an exactly zero pivot."""
    A = _square(A)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)  # reported as an error below
        lu, piv = sla.lu_factor(A, check_finite=True)
    if np.any(np.diag(lu) == 0.0):
        raise SingularMatrixError("matrix is singular (zero pivot)")
    return lu, piv


def lu_solve(A, b) -> np.ndarray:
    return sla.lu_solve(lu_factor(A), np.asarray(b, dtype=float))


def solve_factored(factors, b) -> np.ndarray:
    return sla.lu_solve(factors, b, check_finite=False)


def invert(A) -> np.ndarray:
    A = _square(A)
    lu, piv = lu_factor(A)
    return sla.lu_solve((lu, piv), np.eye(A.shape[0]))


def _as_matrix(M, n: int) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        if M.shape != (n,):
            raise ValueError("diagonal mass has the wrong length")
        return np.diag(M)
    return M


def sym_generalized_eig(K, M) -> tuple[np.ndarray, np.ndarray]:
    """Solve K phi = w2 M phi for symmetric K and SPD (or positive diagonal) M.

    ``M`` may be passed as a 1D array of diagonal entries. Returns ascending
    eigenvalues and M-orthonormal eigenvectors (columns).
    """
    K = _square(K)
    n = K.shape[0]
    M = _as_matrix(M, n)
    scale = max(np.abs(K).max(), 1.0)
    if np.abs(K - K.T).max() > 1e-10 * scale:
        raise ValueError("K is not symmetric")
    try:
        sla.cholesky(M, lower=True)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError("mass matrix is not positive definite") from None
    w2, phi = sla.eigh(0.5 * (K + K.T), 0.5 * (M + M.T))
    return w2, phi


def generalized_eigvals_real(A, B, imag_tol: float = 1e-6) -> np.ndarray:
    """Ascending real eigenvalues of A x = l B x for a non-symmetric pair.

    Needed for a row-sum-lumped dual scheme, where the operator (S K, D) is
    not symmetric but has a real spectrum in practice. Raises if any
    eigenvalue has a relative imaginary part above ``imag_tol``.
    """
    A = _square(A)
    B = _as_matrix(B, A.shape[0])
    lam = sla.eigvals(A, B)
    if np.any(np.abs(lam.imag) > imag_tol * np.maximum(np.abs(lam.real), 1e-300)):
        raise np.linalg.LinAlgError("spectrum has complex eigenvalues")
    return np.sort(lam.real)


def generalized_eig_real(A, B, imag_tol: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
    """Like :func:`generalized_eigvals_real` but also returns real eigenvectors."""
    A = _square(A)
    B = _as_matrix(B, A.shape[0])
    lam, vec = sla.eig(A, B)
    if np.any(np.abs(lam.imag) > imag_tol * np.maximum(np.abs(lam.real), 1e-300)):
        raise np.linalg.LinAlgError("spectrum has complex eigenvalues")
    order = np.argsort(lam.real)
    return lam.real[order], real_eigenvectors(vec[:, order])


def real_eigenvectors(vec) -> np.ndarray:
    """Rotate each column by its dominant entry's phase and keep the real part."""
    vec = np.asarray(vec)
    if not np.iscomplexobj(vec):
        return vec
    k = np.argmax(np.abs(vec), axis=0)
    phase = vec[k, np.arange(vec.shape[1])]
    return (vec / (phase / np.abs(phase))).real


def condition_number_2(A) -> float:
    A = _square(A)
    s = sla.svdvals(A)
    if s[-1] == 0.0:
        return float("inf")
    return float(s[0] / s[-1])


def bandwidth(A, tol: float = 1e-12) -> int:
    """Largest |i - j| over entries with |a_ij| > tol * max|a|."""
    A = _square(A)
    amax = np.abs(A).max()
    if amax == 0.0:
        return 0
    i, j = np.nonzero(np.abs(A) > tol * amax)
    return int(np.abs(i - j).max())
