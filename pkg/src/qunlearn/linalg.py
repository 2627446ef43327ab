"""Dense complex linear algebra for small operator dimensions (2-16).

Thin wrappers around LAPACK (via numpy) that add the shape/PSD checks and
tolerance conventions the rest of the package relies on. Matrices are plain
``numpy.ndarray`` of ``complex128``; helpers here never mutate their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotPsdError, ShapeError

__all__ = [
    "SvdResult",
    "as_matrix",
    "dagger",
    "frobenius",
    "hermitian_sqrt",
    "is_psd",
    "multiply",
    "svd",
]

HERMITIAN_TOL = 1e-10
PSD_EIGENVALUE_SLACK = 1e-10
SQRT_RESIDUAL_TOL = 1e-9


def as_matrix(a) -> np.ndarray:
    """Coerce to a 2-D complex128 array and reject non-finite entries."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise ValueError("matrix contains NaN or Inf entries")
    return m


def require_square(a: np.ndarray) -> np.ndarray:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {a.shape}")
    return a


def frobenius(a) -> float:
    return float(np.linalg.norm(as_matrix(a)))


def multiply(a, b) -> np.ndarray:
    """Matrix product with an explicit inner-dimension check."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def dagger(a) -> np.ndarray:
    """Conjugate transpose."""
    return as_matrix(a).conj().T


@dataclass(frozen=True)
class SvdResult:
    """A = left_unitary @ diag(singular_values) @ right_unitary_dagger."""

    left_unitary: np.ndarray
    singular_values: np.ndarray  # non-increasing, non-negative
    right_unitary_dagger: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u, s, vh = self.left_unitary, self.singular_values, self.right_unitary_dagger
        return (u * s) @ vh


def svd(a) -> SvdResult:
    """Full singular value decomposition, singular values sorted descending.

    Raises a ``numpy.linalg.LinAlgError`` annotated with the matrix norm if
    the LAPACK iteration fails to converge.
    """
    a = as_matrix(a)
    try:
        u, s, vh = np.linalg.svd(a)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"SVD did not converge (Frobenius norm {np.linalg.norm(a):.6g})"
        ) from exc
    return SvdResult(u, s, vh)


def singular_values(a) -> np.ndarray:
    return np.linalg.svd(as_matrix(a), compute_uv=False)


def hermitian_deviation(a) -> float:
    """Frobenius norm of the anti-Hermitian part, ||A - A^dag||_F."""
    a = require_square(a)
    return float(np.linalg.norm(a - a.conj().T))


def is_psd(a, tol: float) -> bool:
    """True iff ``a`` is Hermitian within ``tol`` and has min eigenvalue >= -tol."""
    a = require_square(a)
    if hermitian_deviation(a) > tol:
        return False
    w = np.linalg.eigvalsh((a + a.conj().T) / 2)
    return bool(w.min() >= -tol)


def hermitian_sqrt(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Principal square root of a Hermitian PSD matrix.

    The input must be Hermitian within ``tol`` (Frobenius) and have
    eigenvalues >= -tol; small negative eigenvalues inside the slack are
    clipped to zero. The result S is Hermitian PSD with S @ S == a within
    1e-9.
    """
    a = require_square(a)
    if hermitian_deviation(a) > tol:
        raise NotPsdError(
            f"matrix is not Hermitian (deviation {hermitian_deviation(a):.3g} > {tol:.3g})"
        )
    w, v = np.linalg.eigh((a + a.conj().T) / 2)
    if w.min() < -tol:
        raise NotPsdError(f"matrix has negative eigenvalue {w.min():.3g}")
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    return root
