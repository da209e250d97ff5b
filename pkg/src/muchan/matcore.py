"""Dense complex linear algebra kernel.

Conventions used across the package:

* Hilbert-Schmidt inner product ``<A, B> = tr(A* B)``, conjugate-linear in the
  first argument.
* Eigenvalue multiplicities are decided by clustering at a relative tolerance,
  never by exact float comparison.
* The polar retraction maps an invertible matrix to its closest unitary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import scipy.linalg

from .config import TOL_CLUSTER, TOL_HERM, TOL_RANK

__all__ = [
    "CMat",
    "SpectralData",
    "cmat",
    "dag",
    "hs_inner",
    "is_hermitian",
    "eig_herm",
    "eig_general",
    "expm",
    "svd_values",
    "polar_retract",
    "random_unitary",
]


class CMat(np.ndarray):
    """Complex matrix that rejects non-finite entries on construction."""

    def __new__(cls, data) -> "CMat":
        arr = np.array(data, dtype=complex)
        if arr.ndim != 2:
            raise ValueError(f"expected a matrix, got array of ndim {arr.ndim}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("matrix entries must be finite")
        return arr.view(cls)


def cmat(data) -> np.ndarray:
    """Validate ``data`` as a finite complex matrix and return it as an array."""
    return np.asarray(CMat(data))


def dag(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return np.conj(np.swapaxes(a, -1, -2))


def hs_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product tr(a* b), conjugate-linear in ``a``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def is_hermitian(a: np.ndarray, rtol: float = TOL_HERM) -> bool:
    """Whether ``||a - a*|| <= rtol * max(1, ||a||)`` in Frobenius norm."""
    a = np.asarray(a)
    return np.linalg.norm(a - dag(a)) <= rtol * max(1.0, np.linalg.norm(a))


# ---------------------------------------------------------------------------
# Spectral analysis
# ---------------------------------------------------------------------------


@dataclass
class SpectralData:
    """Eigenvalues with multiplicities resolved at a clustering tolerance.

    Attributes
    ----------
    eigenvalues : np.ndarray
        All eigenvalues, sorted (ascending real values for Hermitian input,
        lexicographic by (real, imag) otherwise).
    eigenvectors : np.ndarray
        Right eigenvectors as columns, aligned with ``eigenvalues``.
    cluster_values : np.ndarray
        One representative (mean) value per eigenvalue cluster.
    algebraic : np.ndarray
        Algebraic multiplicity of each cluster.
    geometric : np.ndarray
        Geometric multiplicity (eigenspace dimension) of each cluster.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    cluster_values: np.ndarray
    algebraic: np.ndarray
    geometric: np.ndarray


def _cluster(values: np.ndarray, scale: float, rtol: float) -> list:
    """Group sorted values whose gaps stay below ``rtol * max(1, scale)``."""
    tol = rtol * max(1.0, scale)
    groups = []
    for idx in np.argsort(np.abs(values), kind="stable"):
        for group in groups:
            if abs(values[idx] - values[group[0]]) <= tol:
                group.append(idx)
                break
        else:
            groups.append([idx])
    return groups


def _spectral_data(values: np.ndarray, vectors: np.ndarray, a: np.ndarray,
                   hermitian: bool, rtol: float) -> SpectralData:
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    groups = _cluster(values, scale, rtol)
    cluster_values = []
    algebraic = []
    geometric = []
    d = a.shape[0]
    tol = rtol * max(1.0, scale)
    for group in groups:
        mean = complex(np.mean(values[group]))
        cluster_values.append(mean.real if hermitian else mean)
        algebraic.append(len(group))
        if hermitian:
            geometric.append(len(group))
        else:
            sv = np.linalg.svd(a - mean * np.eye(d), compute_uv=False)
            geometric.append(int(np.sum(sv <= max(tol, TOL_RANK * max(1.0, sv[0])))))
    cv = np.asarray(cluster_values)
    order = np.lexsort((cv.imag, cv.real)) if cv.size else np.array([], dtype=int)
    cluster_values = cv[order]
    return SpectralData(
        eigenvalues=values,
        eigenvectors=vectors,
        cluster_values=cluster_values,
        algebraic=np.asarray(algebraic, dtype=int)[order],
        geometric=np.asarray(geometric, dtype=int)[order],
    )


def eig_herm(a: np.ndarray, rtol: float = TOL_CLUSTER) -> SpectralData:
    """Spectral decomposition of a Hermitian matrix.

    Eigenvalues come back real and ascending with orthonormal eigenvectors.
    Raises ``ValueError`` when ``a`` is not Hermitian within the relative
    Hermiticity tolerance.
    """
    a = cmat(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError("eig_herm needs a square matrix")
    if not is_hermitian(a):
        raise ValueError("matrix is not Hermitian within tolerance")
    values, vectors = np.linalg.eigh((a + dag(a)) / 2.0)
    return _spectral_data(values, vectors, a, hermitian=True, rtol=rtol)


def eig_general(a: np.ndarray, rtol: float = TOL_CLUSTER) -> SpectralData:
    """Spectral data of an arbitrary square matrix.

    Geometric multiplicities are kernel dimensions of ``a - lambda I`` measured
    by singular values at the clustering tolerance, so defective matrices (e.g.
    a nilpotent Jordan block) report geometric < algebraic.
    """
    a = cmat(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError("eig_general needs a square matrix")
    values, vectors = np.linalg.eig(a)
    order = np.lexsort((values.imag, values.real))
    values = values[order]
    vectors = vectors[:, order]
    return _spectral_data(values, vectors, a, hermitian=False, rtol=rtol)


# ---------------------------------------------------------------------------
# Matrix functions and factorizations
# ---------------------------------------------------------------------------


def expm(a: np.ndarray) -> np.ndarray:
    """Matrix exponential (scaling-and-squaring Pade approximant)."""
    a = cmat(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError("expm needs a square matrix")
    return np.asarray(scipy.linalg.expm(a))


def svd_values(a: np.ndarray) -> np.ndarray:
    """Singular values in descending order."""
    return np.linalg.svd(cmat(a), compute_uv=False)


def polar_retract(a: np.ndarray) -> np.ndarray:
    """Unitary polar factor of an invertible (stack of) square matrix.

    For ``a = w s v*`` returns ``w v*``, the unitary closest to ``a`` in
    Frobenius norm. Raises on (numerically) rank-deficient input. Accepts a
    leading stack dimension, in which case each slice is retracted.
    """
    a = np.asarray(a, dtype=complex)
    if a.shape[-1] != a.shape[-2]:
        raise ValueError("polar_retract needs square matrices")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    w, s, vh = np.linalg.svd(a)
    smin = np.min(s, axis=-1)
    smax = np.max(s, axis=-1)
    if np.any(smin <= TOL_RANK * np.maximum(1.0, smax)):
        raise ValueError("polar retraction undefined for rank-deficient input")
    return w @ vh


def random_unitary(d: int, seed: Union[int, np.random.Generator, None] = None) -> np.ndarray:
    """Haar-distributed ``d x d`` unitary.

    QR of a complex Ginibre matrix with the R diagonal phase-normalized, which
    makes the distribution exactly Haar. Deterministic for a fixed seed.
    """
    if d < 1:
        raise ValueError("dimension must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    phases = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * phases
