"""Dense complex linear algebra: LU factorization, solves, inversion.

Thin wrapper over LAPACK (via scipy) with an explicit singularity policy:
a factorization is declared singular when any pivot falls below
1e-12 * ||A||_inf, which is how islanded admittance matrices surface
downstream as catchable errors instead of garbage solutions.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

SINGULAR_RTOL = 1e-12


class SingularMatrixError(ValueError):
    """Matrix is singular to working precision (pivot below threshold)."""


@dataclass
class LuFactors:
    """Combined LU storage with pivot permutation, as returned by lu_factor."""

    lu: np.ndarray
    piv: np.ndarray
    norm: float
    singular: bool

    @property
    def n(self) -> int:
        return self.lu.shape[0]


def _as_square_complex(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise ValueError("matrix has non-finite entries")
    return a


def lu_factor(a) -> LuFactors:
    """Factor a square complex matrix with partial (max-modulus) pivoting.

    Raises SingularMatrixError when the smallest pivot is below
    SINGULAR_RTOL * ||A||_inf.
    """
    a = _as_square_complex(a)
    norm = float(np.max(np.sum(np.abs(a), axis=1))) if a.size else 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    pivots = np.abs(np.diag(lu))
    singular = bool(a.size) and bool(np.min(pivots) < SINGULAR_RTOL * max(norm, 1e-300))
    f = LuFactors(lu=lu, piv=piv, norm=norm, singular=singular)
    if singular:
        raise SingularMatrixError(
            f"matrix singular to working precision (min pivot {np.min(pivots):.3e}, "
            f"threshold {SINGULAR_RTOL * norm:.3e})"
        )
    return f


def try_lu_factor(a) -> LuFactors:
    """Like lu_factor but returns the factors with .singular set instead of raising."""
    try:
        return lu_factor(a)
    except SingularMatrixError:
        a = _as_square_complex(a)
        norm = float(np.max(np.sum(np.abs(a), axis=1))) if a.size else 0.0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
        return LuFactors(lu=lu, piv=piv, norm=norm, singular=True)


def solve(f: LuFactors, b) -> np.ndarray:
    """Solve A x = b given factors of A. b may be a vector or matrix of columns."""
    if f.singular:
        raise SingularMatrixError("cannot solve with a singular factorization")
    b = np.asarray(b, dtype=complex)
    if b.shape[0] != f.n:
        raise ValueError(f"dimension mismatch: matrix is {f.n}x{f.n}, rhs has {b.shape[0]} rows")
    return scipy.linalg.lu_solve((f.lu, f.piv), b, check_finite=False)


def invert(a) -> np.ndarray:
    """Full inverse via LU; raises SingularMatrixError on singular input."""
    f = lu_factor(a)
    return solve(f, np.eye(f.n, dtype=complex))
