"""Cyclic Jacobi eigendecomposition for small dense symmetric matrices."""

from __future__ import annotations

import numpy as np

__all__ = ["jacobi_eigh", "psd_project"]

OFFDIAG_TOL = 1e-11


def jacobi_eigh(A, tol: float = OFFDIAG_TOL, max_sweeps: int = 60):
    """Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix.

    Sweeps Givens rotations over the upper triangle until every off-diagonal
    entry is below ``tol``.  Matches numpy.linalg.eigh up to eigenvector sign
    at these sizes, and has no dependency beyond numpy itself.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    if n and np.max(np.abs(A - A.T)) > 1e-8 * max(1.0, np.max(np.abs(A))):
        raise ValueError("matrix must be symmetric")
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    if n < 2:
        return np.diag(A).copy(), V

    for _ in range(max_sweeps):
        off = np.max(np.abs(A - np.diag(np.diag(A))))
        if off <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= tol:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                sign = 1.0 if tau >= 0.0 else -1.0
                t = sign / (abs(tau) + np.hypot(1.0, tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # similarity transform by the Givens rotation in plane (p, q)
                col_p, col_q = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p, row_q = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = A[q, p] = 0.0
                v_p, v_q = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * v_p - s * v_q
                V[:, q] = s * v_p + c * v_q

    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def psd_project(S, eigh=jacobi_eigh):
    """Nearest (Frobenius) positive semidefinite matrix: clip negative eigenvalues.

    Returns (projection, smallest eigenvalue of the input).
    """
    w, V = eigh(0.5 * (S + S.T))
    clipped = np.maximum(w, 0.0)
    return (V * clipped) @ V.T, float(w[0]) if w.size else 0.0
