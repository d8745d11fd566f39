"""Small dense symmetric-matrix numerics.

Everything here works on ``(d, d)`` numpy arrays with ``d`` small (the planner
uses ``d <= 3``).  The eigen-solver is a cyclic Jacobi sweep written on plain
Python floats: for matrices this size it is faster than a LAPACK round trip
and its result does not depend on the BLAS build.
"""

from __future__ import annotations

import math

import numpy as np

JACOBI_MAX_DIM = 8
JACOBI_OFF_TOL = 1e-12
JACOBI_MAX_SWEEPS = 64
TOL_EIG = 1e-9


class InvalidInputError(ValueError):
    """Non-finite, non-square or non-symmetric matrix input."""


class NotPSDError(ValueError):
    pass


class NotPDError(ValueError):
    pass


def as_sym(a) -> np.ndarray:
    """Return ``a`` as a float ``(d, d)`` array with exact symmetry enforced.

    Scalars and 1-element sequences become ``(1, 1)`` matrices.  Raises
    ``InvalidInputError`` for non-finite entries, a non-square shape, or an
    asymmetry larger than round-off.
    """
    m = np.array(a, dtype=float)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    elif m.ndim == 1 and m.size == 1:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise InvalidInputError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInputError("matrix has non-finite entries")
    scale = 1.0 + float(np.max(np.abs(m)))
    if float(np.max(np.abs(m - m.T))) > 1e-9 * scale:
        raise InvalidInputError("matrix is not symmetric")
    return 0.5 * (m + m.T)


def _check_finite(s: np.ndarray) -> None:
    if not np.all(np.isfinite(s)):
        raise InvalidInputError("matrix has non-finite entries")


def _jacobi(a: list[list[float]]) -> tuple[list[float], list[list[float]]]:
    # In-place cyclic Jacobi on a (copied) nested list; returns (diag, V).
    n = len(a)
    v = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    if n == 1:
        return [a[0][0]], v
    for _ in range(JACOBI_MAX_SWEEPS):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += a[p][q] * a[p][q]
        if math.sqrt(2.0 * off) < JACOBI_OFF_TOL:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p][q]
                if apq == 0.0:
                    continue
                app = a[p][p]
                aqq = a[q][q]
                theta = (aqq - app) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k][p]
                    akq = a[k][q]
                    a[k][p] = c * akp - s * akq
                    a[k][q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p][k]
                    aqk = a[q][k]
                    a[p][k] = c * apk - s * aqk
                    a[q][k] = s * apk + c * aqk
                a[p][q] = a[q][p] = 0.0
                for k in range(n):
                    vkp = v[k][p]
                    vkq = v[k][q]
                    v[k][p] = c * vkp - s * vkq
                    v[k][q] = s * vkp + c * vkq
    return [a[i][i] for i in range(n)], v


def sym_eig(s) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(lam, V)`` with ``lam`` ascending and ``V`` orthonormal so that
    ``s == V @ diag(lam) @ V.T``.
    """
    m = np.asarray(s, dtype=float)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    _check_finite(m)
    n = m.shape[0]
    if n > JACOBI_MAX_DIM:
        raise InvalidInputError(f"dimension {n} exceeds Jacobi limit {JACOBI_MAX_DIM}")
    sym = 0.5 * (m + m.T)
    diag, v = _jacobi(sym.tolist())
    order = sorted(range(n), key=lambda i: diag[i])
    lam = np.array([diag[i] for i in order])
    vecs = np.array([[v[r][i] for i in order] for r in range(n)])
    return lam, vecs


def max_singular(s) -> float:
    """Largest absolute eigenvalue of a symmetric matrix (its spectral norm)."""
    lam, _ = sym_eig(s)
    return float(max(abs(lam[0]), abs(lam[-1])))


def tol_psd(s) -> float:
    return 1e-9 * (1.0 + max_singular(s))


def is_psd(s) -> bool:
    lam, _ = sym_eig(s)
    return bool(lam[0] >= -1e-9 * (1.0 + max(abs(lam[0]), abs(lam[-1]))))


def is_pd(s) -> bool:
    lam, _ = sym_eig(s)
    return bool(lam[0] > 1e-9 * (1.0 + max(abs(lam[0]), abs(lam[-1]))))


def psd_leq(a, b) -> bool:
    """PSD ordering ``a <= b`` (i.e. ``b - a`` PSD) with the PSD tolerance."""
    return is_psd(np.asarray(b, dtype=float) - np.asarray(a, dtype=float))


def psd_sqrt(s) -> np.ndarray:
    """Symmetric PSD square root; tiny negative eigenvalues are clipped to zero."""
    lam, v = sym_eig(s)
    if lam[0] < -1e-9 * (1.0 + max(abs(lam[0]), abs(lam[-1]))):
        raise NotPSDError(f"min eigenvalue {lam[0]:.3g} is negative")
    r = (v * np.sqrt(np.clip(lam, 0.0, None))) @ v.T
    return 0.5 * (r + r.T)


def pd_inv_sqrt(s) -> np.ndarray:
    """``s^{-1/2}`` for a positive definite ``s``."""
    lam, v = sym_eig(s)
    if lam[0] <= 1e-9 * (1.0 + max(abs(lam[0]), abs(lam[-1]))):
        raise NotPDError(f"min eigenvalue {lam[0]:.3g} is not positive")
    r = (v / np.sqrt(lam)) @ v.T
    return 0.5 * (r + r.T)


def gen_eigvals(a, b) -> np.ndarray:
    """Eigenvalues of the pencil ``(a, b)``, i.e. of ``b^{-1/2} a b^{-1/2}``, ascending."""
    w = pd_inv_sqrt(b)
    lam, _ = sym_eig(w @ np.asarray(a, dtype=float) @ w)
    return lam
