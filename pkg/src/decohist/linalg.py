"""Dense complex linear algebra primitives.

Everything in this module operates on plain ``numpy.ndarray`` values with
``complex128`` dtype.  Matrices are dense and row-major; no sparsity or
arbitrary-precision support is attempted (target dimensions stay well below
~1024).
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "ATOL_HERMITIAN",
    "ATOL_UNITARY",
    "adjoint",
    "as_matrix",
    "as_vector",
    "exp_generator",
    "herm_eig",
    "is_hermitian",
    "is_unitary",
    "kron",
    "matmul",
    "max_abs",
    "trace",
]

# Elementwise tolerance admitted on |A - A^dagger| for "Hermitian" inputs.
ATOL_HERMITIAN = 1e-12
# Elementwise tolerance on |U U^dagger - I| for "unitary" inputs.
ATOL_UNITARY = 1e-10


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` to a finite 2-D complex array (always a fresh copy)."""
    m = np.array(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def as_vector(a, name: str = "vector") -> np.ndarray:
    """Coerce ``a`` to a finite 1-D complex array (always a fresh copy)."""
    v = np.array(a, dtype=complex).reshape(-1)
    if v.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def max_abs(a) -> float:
    """Largest entry magnitude; 0.0 for empty arrays."""
    a = np.asarray(a)
    return 0.0 if a.size == 0 else float(np.max(np.abs(a)))


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an explicit inner-dimension check."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch in matmul: {a.shape} x {b.shape}")
    return a @ b


def adjoint(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return np.asarray(a, dtype=complex).conj().T


def trace(a: np.ndarray) -> complex:
    """Trace of a square matrix."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"trace requires a square matrix, got shape {a.shape}")
    return complex(np.trace(a))


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product, (a ⊗ b)[i*rb+k, j*cb+l] = a[i,j] b[k,l]."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def is_hermitian(a: np.ndarray, atol: float = ATOL_HERMITIAN) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    return max_abs(a - a.conj().T) <= atol


def is_unitary(a: np.ndarray, atol: float = ATOL_UNITARY) -> bool:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    return max_abs(a @ a.conj().T - np.eye(a.shape[0])) <= atol


def _fix_eigenvector_phases(v: np.ndarray) -> np.ndarray:
    # Make the largest-magnitude component of each column real and positive,
    # so eigenvectors are deterministic across runs (outside degeneracies).
    for j in range(v.shape[1]):
        col = v[:, j]
        i = int(np.argmax(np.abs(col)))
        pivot = col[i]
        if abs(pivot) > 0.0:
            v[:, j] = col * (abs(pivot) / pivot)
    return v


def herm_eig(a: np.ndarray, atol: float = ATOL_HERMITIAN) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(w, v)`` with eigenvalues ``w`` ascending and unitary ``v``
    satisfying ``a = v @ diag(w) @ v.conj().T``.  Eigenvector phases are fixed
    by making the largest-magnitude component of each column real-positive.

    Raises ``ValueError`` if ``a`` deviates from Hermiticity by more than
    ``atol`` elementwise.
    """
    m = as_matrix(a, "herm_eig input")
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"herm_eig requires a square matrix, got shape {m.shape}")
    defect = max_abs(m - m.conj().T)
    if defect > atol:
        raise ValueError(f"matrix is not Hermitian (max |A - A^dagger| = {defect:.3e})")
    w, v = np.linalg.eigh((m + m.conj().T) / 2.0)
    return w, _fix_eigenvector_phases(v)


def exp_generator(h: np.ndarray, t: float) -> np.ndarray:
    """Unitary exp(-i h t) for a Hermitian generator h.

    Computed through the eigendecomposition of ``h``, so the result is unitary
    to the accuracy of the eigensolver.
    """
    w, v = herm_eig(h)
    return (v * np.exp(-1j * w * float(t))) @ v.conj().T
