"""Dense matrix container conventions and spectral quantities.

Matrices throughout this package are 2-D ``numpy.ndarray`` objects in
float64, C (row-major) order.  :func:`as_matrix` is the single public
constructor and enforces the container invariants: two dimensions, all
entries finite.  Row-major order matters because the alternating solvers
consume the data row by row.

The spectral helpers expose the three quantities the penalty-selection
rule and the theory diagnostics need: the spectral norm (largest singular
value), the algebraically smallest eigenvalue of a symmetric matrix, and
the Frobenius norm.  Problem sizes here are small enough (n of a few
thousand) that full dense eigendecompositions are the right tool; the
smallest eigenvalue in particular is not available from plain power
iteration.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DimensionError",
    "SpectralSummary",
    "as_matrix",
    "frobenius_norm",
    "relative_asymmetry",
    "smallest_eigenvalue",
    "spectral_norm",
    "spectral_summary",
    "symmetrize_checked",
]

# Relative asymmetry tolerated before a matrix is rejected as non-symmetric.
SYMMETRY_RTOL = 1e-12


class DimensionError(ValueError):
    """Raised when a matrix has an unusable shape for the requested operation."""


def as_matrix(a, name="matrix"):
    """Validate and normalize ``a`` into the package's dense matrix form.

    Parameters
    ----------
    a : array_like
        Anything ``numpy.asarray`` accepts; must be 2-D and nonempty.
    name : str
        Used in error messages.

    Returns
    -------
    numpy.ndarray
        float64, C-contiguous, shape ``(rows, cols)`` with all entries finite.
    """
    m = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={m.ndim}")
    if m.shape[0] == 0 or m.shape[1] == 0:
        raise DimensionError(f"{name} must be nonempty, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return m


def relative_asymmetry(s):
    """``max|S - S^T|`` scaled by ``max(1, max|S|)``; 0 for exactly symmetric input."""
    s = np.asarray(s, dtype=np.float64)
    scale = max(1.0, float(np.max(np.abs(s), initial=0.0)))
    return float(np.max(np.abs(s - s.T), initial=0.0)) / scale


def symmetrize_checked(s, name="matrix", rtol=SYMMETRY_RTOL):
    """Return ``(S + S^T)/2`` if S is square and symmetric within ``rtol``.

    Similarity and Gram matrices are symmetric by construction but pick up
    rounding; anything asymmetric beyond the tolerance is a caller bug and
    is rejected rather than silently averaged away.
    """
    s = as_matrix(s, name=name)
    if s.shape[0] != s.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {s.shape}")
    asym = relative_asymmetry(s)
    if asym > rtol:
        raise ValueError(
            f"{name} is not symmetric: relative asymmetry {asym:.3e} exceeds {rtol:.1e}"
        )
    return (s + s.T) / 2.0


def spectral_norm(a):
    """Largest singular value of ``a``.

    Computed from a full dense SVD; relative accuracy is at the LAPACK
    level (far better than the 1e-8 this package relies on).
    """
    a = as_matrix(a)
    return float(np.linalg.norm(a, 2))


def smallest_eigenvalue(s):
    """Algebraically smallest eigenvalue of the symmetric matrix ``s``.

    Input is symmetrized as ``(S + S^T)/2`` after the asymmetry check.  The
    result may be negative: normalized similarity matrices are symmetric
    but in general indefinite.
    """
    s = symmetrize_checked(s)
    return float(np.linalg.eigvalsh(s)[0])


def frobenius_norm(a):
    """``sqrt(sum of squared entries)`` of ``a``."""
    a = as_matrix(a)
    return float(np.linalg.norm(a, "fro"))


@dataclass(frozen=True)
class SpectralSummary:
    """The three norms the penalty rule needs, computed in one pass.

    ``spectral_norm`` is the largest singular value, ``smallest_eigenvalue``
    the algebraically smallest eigenvalue (may be negative for indefinite
    input), ``frobenius_norm`` the entrywise 2-norm.
    """

    spectral_norm: float
    smallest_eigenvalue: float
    frobenius_norm: float


def spectral_summary(s):
    """Compute a :class:`SpectralSummary` for a symmetric matrix ``s``."""
    s = symmetrize_checked(s)
    eigs = np.linalg.eigvalsh(s)
    return SpectralSummary(
        spectral_norm=float(np.max(np.abs(eigs))),
        smallest_eigenvalue=float(eigs[0]),
        frobenius_norm=float(np.linalg.norm(s, "fro")),
    )
