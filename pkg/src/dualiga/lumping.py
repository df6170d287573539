"""Row-sum lumping and mass-distribution diagnostics."""
from __future__ import annotations

import numpy as np


class NonPositiveMassError(ValueError):
    """A lumped mass entry is zero or negative."""


def _square(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        return np.diag(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    return M


def row_sum_lump(M) -> np.ndarray:
    """Diagonal entries d_i = sum_j m_ij, returned as a 1D array."""
    d = _square(M).sum(axis=1)
    bad = np.flatnonzero(d <= 0.0)
    if bad.size:
        raise NonPositiveMassError(f"non-positive lumped mass at rows {bad.tolist()}")
    return d


def diagonal_mass_fraction(M) -> float:
    """Share of the total mass sitting on the main diagonal."""
    M = _square(M)
    total = M.sum()
    if total <= 0.0:
        raise ValueError("total mass must be positive")
    return float(np.trace(M) / total)


def is_diagonal(M, tol: float = 1e-12) -> bool:
    M = _square(M)
    diag = np.abs(np.diag(M))
    off = np.abs(M - np.diag(np.diag(M)))
    return bool(off.max(initial=0.0) <= tol * diag.max())


def is_diagonally_dominant(M) -> bool:
    """Strict row diagonal dominance m_ii > sum_{j != i} |m_ij|."""
    M = _square(M)
    diag = np.abs(np.diag(M))
    off = np.abs(M).sum(axis=1) - diag
    return bool(np.all(np.diag(M) > off))
