"""Dense complex linear algebra kernel.

Log-scaled determinants, linear solves, eigenvalues and singular values of
dense complex matrices.  Everything downstream (section determinants,
spectral distribution means, stability probes) sits on these five
operations.  All arithmetic is 64-bit floating point; determinants are only
ever exposed in log-magnitude/phase form because section determinants grow
geometrically with the section size.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg


class DimensionError(ValueError):
    """Matrix shape does not fit the operation (e.g. non-square input)."""


class SingularMatrixError(ArithmeticError):
    """Factorization met a pivot too small to continue."""

    def __init__(self, message, smallest_pivot):
        super().__init__(f"{message} (smallest pivot {smallest_pivot:.3e})")
        self.smallest_pivot = smallest_pivot


class SymmetryError(ValueError):
    """Input fails the Hermitian tolerance of the self-adjoint eigenpath."""


class ConvergenceError(RuntimeError):
    """Eigenvalue/singular value iteration did not converge."""


# Pivots below this magnitude would push log|det| outside the float range.
PIVOT_UNDERFLOW = 1e-292

# Entrywise tolerance for accepting a matrix as Hermitian.
HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class DenseMatrix:
    """A complex matrix stored as a read-only row-major array.

    Entries must be finite; NaN or Inf anywhere is rejected at construction.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise DimensionError(f"expected a 2-d array, got ndim={arr.ndim}")
        arr = np.ascontiguousarray(arr, dtype=np.complex128)
        if arr.size and not np.all(np.isfinite(arr)):
            raise ValueError("matrix entries must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    @classmethod
    def from_rows(cls, rows) -> "DenseMatrix":
        return cls(np.array(rows, dtype=np.complex128))

    def __array__(self, dtype=None, copy=None):
        if dtype is not None and dtype != self.data.dtype:
            return self.data.astype(dtype)  # astype already copies
        return self.data.copy() if copy else self.data


@dataclass(frozen=True)
class LogDet:
    """Determinant in log form: det = exp(log_abs) * phase.

    ``phase`` has unit modulus unless ``singular_flag`` is set, in which case
    ``log_abs`` is -inf and ``phase`` is 0.
    """

    log_abs: float
    phase: complex
    singular_flag: bool = False

    @property
    def value(self) -> complex:
        if self.singular_flag:
            return 0j
        return math.exp(self.log_abs) * self.phase


def _as_square_array(m) -> np.ndarray:
    if not isinstance(m, DenseMatrix):
        m = DenseMatrix(np.asarray(m))
    if not m.is_square:
        raise DimensionError(f"square matrix required, got {m.rows}x{m.cols}")
    return m.data


def _lu(a: np.ndarray):
    # scipy warns on exactly-zero pivots; singularity is handled by callers.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return scipy.linalg.lu_factor(a, check_finite=False)


def lu_logdet(m) -> LogDet:
    """Log-magnitude and phase of det(m) from a pivoted LU factorization."""
    a = _as_square_array(m)
    n = a.shape[0]
    if n == 0:
        return LogDet(0.0, 1 + 0j, False)
    lu, piv = _lu(a)
    diag = np.diagonal(lu)
    absd = np.abs(diag)
    smallest = float(absd.min())
    if smallest < PIVOT_UNDERFLOW:
        return LogDet(-math.inf, 0j, True)
    log_abs = float(np.sum(np.log(absd)))
    swaps = int(np.count_nonzero(piv != np.arange(n)))
    phase = complex(np.prod(diag / absd)) * (-1.0) ** swaps
    return LogDet(log_abs, phase / abs(phase), False)


def solve(m, rhs) -> np.ndarray:
    """Solve m x = rhs with the same pivoted factorization as lu_logdet."""
    a = _as_square_array(m)
    b = np.asarray(rhs, dtype=np.complex128)
    if b.shape != (a.shape[0],):
        raise DimensionError(
            f"rhs length {b.shape} does not match matrix order {a.shape[0]}"
        )
    if a.shape[0] == 0:
        return b.copy()
    lu, piv = _lu(a)
    smallest = float(np.abs(np.diagonal(lu)).min())
    if smallest < PIVOT_UNDERFLOW:
        raise SingularMatrixError("matrix is numerically singular", smallest)
    return scipy.linalg.lu_solve((lu, piv), b, check_finite=False)


def eigvals_hermitian(m) -> np.ndarray:
    """Real eigenvalues of a Hermitian matrix, sorted ascending."""
    a = _as_square_array(m)
    if a.size:
        deviation = float(np.max(np.abs(a - a.conj().T)))
        if deviation > HERMITIAN_TOL:
            raise SymmetryError(
                f"matrix is not Hermitian: max |m - m*| = {deviation:.3e}"
            )
    return np.linalg.eigvalsh(a)


def eigvals_general(m) -> np.ndarray:
    """All eigenvalues of a square matrix (Hessenberg + shifted QR)."""
    a = _as_square_array(m)
    try:
        return np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigenvalue iteration failed: {exc}") from exc


def singular_values(m) -> np.ndarray:
    """Singular values, sorted descending, all non-negative."""
    if not isinstance(m, DenseMatrix):
        m = DenseMatrix(np.asarray(m))
    try:
        return np.linalg.svd(m.data, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"singular value iteration failed: {exc}") from exc
