"""Cyclic Jacobi eigenvalues for Hermitian matrices.

A complex Hermitian ``A + iB`` is embedded as the real symmetric matrix
``[[A, -B], [B, A]]``, whose spectrum is that of the original with every
eigenvalue doubled. The real matrix is diagonalised by sweeps of plane
rotations until the off-diagonal Frobenius norm falls below tolerance.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .errors import ValidationError


def real_embedding(h: np.ndarray) -> np.ndarray:
    a, b = h.real, h.imag
    return np.block([[a, -b], [b, a]])


@njit(cache=True)
def _off_norm(a):
    s = 0.0
    m = a.shape[0]
    for i in range(m):
        for j in range(m):
            if i != j:
                s += a[i, j] * a[i, j]
    return np.sqrt(s)


@njit(cache=True)
def _jacobi_sweeps(a, threshold, max_sweeps):
    m = a.shape[0]
    sweeps = 0
    while sweeps < max_sweeps and _off_norm(a) >= threshold:
        sweeps += 1
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(m):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(m):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
    return sweeps


def jacobi_symmetric(a: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues (ascending) of a real symmetric matrix.

    Stops once the off-diagonal norm is below ``tol * max(1, ||a||_F)``.
    """
    a = np.array(a, dtype=float, order="C")
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    threshold = tol * max(1.0, float(np.linalg.norm(a)))
    _jacobi_sweeps(a, threshold, max_sweeps)
    return np.sort(np.diag(a))


def hermitian_eigenvalues(h: np.ndarray, tol: float = 1e-12, check_tol: float = 1e-10) -> np.ndarray:
    """Eigenvalues (ascending) of a complex Hermitian matrix via the real embedding."""
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {h.shape}")
    scale = max(1.0, float(np.abs(h).max(initial=0.0)))
    if np.abs(h - h.conj().T).max(initial=0.0) > check_tol * scale:
        raise ValidationError("matrix is not Hermitian")
    doubled = jacobi_symmetric(real_embedding(h), tol=tol)
    return doubled[::2]
