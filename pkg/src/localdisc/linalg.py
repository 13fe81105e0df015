"""Dense complex linear algebra for small operators.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Everything here
is a pure function; results that are cached or shared are marked read-only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import numpy.typing as npt

ComplexMatrix = npt.NDArray[np.complex128]

# Tolerance hierarchy.
CONSTRUCTION_TOL = 1e-12
CERTIFY_TOL = 1e-10
HERMITIAN_REJECT_TOL = 1e-8

PARTIES = ("A", "B")


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class NotHermitianError(ValueError):
    """A matrix required to be Hermitian is not, beyond tolerance."""


class EigenspaceError(ValueError):
    """A requested kernel direction is missing or not unique."""


def as_matrix(m: npt.ArrayLike) -> ComplexMatrix:
    """Return ``m`` as a finite 2-D complex array."""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.size == 0:
        raise DimensionError(f"expected a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def frozen(m: np.ndarray) -> np.ndarray:
    m.setflags(write=False)
    return m


def dagger(m: npt.ArrayLike) -> ComplexMatrix:
    return as_matrix(m).conj().T


def anti_hermitian_residual(m: npt.ArrayLike) -> float:
    """Frobenius norm of ``m - m^dagger``."""
    arr = as_matrix(m)
    return float(np.linalg.norm(arr - arr.conj().T))


def _require_square(m: ComplexMatrix) -> None:
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")


def hermitian(m: npt.ArrayLike, reject_tol: float = HERMITIAN_REJECT_TOL) -> ComplexMatrix:
    """Symmetrize ``m`` to ``(m + m^dagger)/2``.

    Rounding noise is absorbed; an anti-Hermitian part larger than
    ``reject_tol`` (Frobenius) raises :class:`NotHermitianError`.
    """
    arr = as_matrix(m)
    _require_square(arr)
    residual = anti_hermitian_residual(arr)
    if residual > reject_tol:
        raise NotHermitianError(f"anti-Hermitian residual {residual:.3e} exceeds {reject_tol:.1e}")
    return 0.5 * (arr + arr.conj().T)


def kron(a: npt.ArrayLike, b: npt.ArrayLike) -> ComplexMatrix:
    return np.kron(as_matrix(a), as_matrix(b))


def kron_all(factors: Sequence[npt.ArrayLike]) -> ComplexMatrix:
    out = as_matrix(factors[0])
    for f in factors[1:]:
        out = np.kron(out, as_matrix(f))
    return out


def _party_index(keep: str | int) -> int:
    if keep in (0, "A", "a"):
        return 0
    if keep in (1, "B", "b"):
        return 1
    raise ValueError(f"unknown party {keep!r}; expected 'A' or 'B'")


def partial_trace(m: npt.ArrayLike, dims: tuple[int, int], keep: str | int = "A") -> ComplexMatrix:
    """Reduced operator of a bipartite matrix on the ``keep`` party.

    Examples
    --------
    >>> rho = kron(np.diag([1, 0]), np.full((2, 2), 0.5))
    >>> np.allclose(partial_trace(rho, (2, 2), "A"), np.diag([1, 0]))
    True
    """
    arr = as_matrix(m)
    d_a, d_b = int(dims[0]), int(dims[1])
    if arr.shape != (d_a * d_b, d_a * d_b):
        raise DimensionError(f"matrix of shape {arr.shape} does not match dims ({d_a}, {d_b})")
    t = arr.reshape(d_a, d_b, d_a, d_b)
    if _party_index(keep) == 0:
        return np.einsum("ijkj->ik", t)
    return np.einsum("ijik->jk", t)


def embed(op: npt.ArrayLike, dims: tuple[int, int], party: str | int) -> ComplexMatrix:
    """Lift a single-party operator to the bipartite space (``op x I`` or ``I x op``)."""
    arr = as_matrix(op)
    idx = _party_index(party)
    if arr.shape != (dims[idx], dims[idx]):
        raise DimensionError(f"operator of shape {arr.shape} does not act on party {PARTIES[idx]} of dims {dims}")
    if idx == 0:
        return np.kron(arr, np.eye(dims[1]))
    return np.kron(np.eye(dims[0]), arr)


def fix_phase(v: npt.ArrayLike, tol: float = CONSTRUCTION_TOL) -> npt.NDArray[np.complex128]:
    """Rotate the global phase so the first non-negligible component is real positive."""
    vec = np.asarray(v, dtype=np.complex128).ravel().copy()
    scale = max(float(np.max(np.abs(vec))), 1.0) if vec.size else 1.0
    for c in vec:
        if abs(c) > tol * scale:
            return vec * (abs(c) / c)
    return vec


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: npt.NDArray[np.float64]
    # Columns are eigenvectors, ordered as ``eigenvalues`` (ascending).
    eigenvectors: ComplexMatrix

    def vector(self, i: int) -> npt.NDArray[np.complex128]:
        return self.eigenvectors[:, i]

    def reconstruct(self) -> ComplexMatrix:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def eig_hermitian(m: npt.ArrayLike, tol: float = CERTIFY_TOL) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    Eigenvectors follow the convention of :func:`fix_phase`, so identical
    input gives identical output.
    """
    arr = as_matrix(m)
    _require_square(arr)
    residual = anti_hermitian_residual(arr)
    if residual > tol:
        raise NotHermitianError(f"anti-Hermitian residual {residual:.3e} exceeds {tol:.1e}")
    vals, vecs = np.linalg.eigh(0.5 * (arr + arr.conj().T))
    vecs = np.column_stack([fix_phase(vecs[:, i]) for i in range(vecs.shape[1])])
    return EigenDecomposition(frozen(vals), frozen(vecs))


def min_eigenvalue(m: npt.ArrayLike, tol: float = CERTIFY_TOL) -> float:
    return float(eig_hermitian(m, tol).eigenvalues[0])


def is_psd(m: npt.ArrayLike, tol: float = CERTIFY_TOL) -> tuple[bool, float]:
    """Return ``(min_eigenvalue >= -tol, min_eigenvalue)``."""
    lam = min_eigenvalue(m, max(tol, CERTIFY_TOL))
    return lam >= -tol, lam


def zero_eigenvector(m: npt.ArrayLike, tol: float = CERTIFY_TOL) -> npt.NDArray[np.complex128]:
    """Unit vector spanning the kernel of ``m``.

    Raises :class:`EigenspaceError` if no eigenvalue lies within ``tol`` of
    zero, or if more than one does.
    """
    dec = eig_hermitian(m, max(tol, CERTIFY_TOL))
    hits = np.flatnonzero(np.abs(dec.eigenvalues) <= tol)
    if hits.size == 0:
        closest = float(dec.eigenvalues[np.argmin(np.abs(dec.eigenvalues))])
        raise EigenspaceError(f"no zero eigenvalue within {tol:.1e} (closest {closest:.3e})")
    if hits.size > 1:
        raise EigenspaceError(f"degenerate zero eigenspace of dimension {hits.size} within {tol:.1e}")
    return dec.vector(int(hits[0])).copy()


def projector(v: npt.ArrayLike) -> ComplexMatrix:
    vec = np.asarray(v, dtype=np.complex128).ravel()
    return np.outer(vec, vec.conj())


def sqrtm_psd(m: npt.ArrayLike) -> ComplexMatrix:
    """Principal square root of a PSD matrix; tiny negative eigenvalues are clipped."""
    dec = eig_hermitian(m, HERMITIAN_REJECT_TOL)
    vals = np.sqrt(np.clip(dec.eigenvalues, 0.0, None))
    v = dec.eigenvectors
    return (v * vals) @ v.conj().T


def inv_sqrtm_pd(m: npt.ArrayLike, floor: float = 1e-300) -> ComplexMatrix:
    dec = eig_hermitian(m, HERMITIAN_REJECT_TOL)
    vals = 1.0 / np.sqrt(np.clip(dec.eigenvalues, floor, None))
    v = dec.eigenvectors
    return (v * vals) @ v.conj().T


def trace_norm(m: npt.ArrayLike) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    return float(np.sum(np.abs(eig_hermitian(m, HERMITIAN_REJECT_TOL).eigenvalues)))


def random_unitary(dim: int, rng: np.random.Generator) -> ComplexMatrix:
    """Haar-random unitary via QR with phase correction."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_hermitian(dim: int, rng: np.random.Generator) -> ComplexMatrix:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (z + z.conj().T)
