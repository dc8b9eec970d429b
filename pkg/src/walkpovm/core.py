"""
Coin-space primitives shared by every other module.

Coin vectors are complex arrays of shape ``(2,)`` and coin operators complex
arrays of shape ``(2, 2)``. The basis order is always ``(H, V)``: index 0 is
horizontal polarization, index 1 is vertical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

__all__ = [
    "CoinVector",
    "CoinOperator",
    "LAMBDA",
    "IDENTITY",
    "SIGMA_X",
    "KET_H",
    "KET_V",
    "MatrixReport",
    "as_coin_vector",
    "as_coin_operator",
    "make_sic_vector",
    "make_init_state",
    "inner",
    "projector",
    "matrix_checks",
    "phase_invariant_distance",
    "trace_distance",
]

CoinVector = NDArray[np.complex128]
CoinOperator = NDArray[np.complex128]

# e^{i 2 pi / 3}
LAMBDA = complex(-0.5, np.sqrt(3.0) / 2.0)

_SQRT2 = np.sqrt(2.0)
_SQRT3 = np.sqrt(3.0)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


IDENTITY = _frozen(np.eye(2, dtype=np.complex128))
SIGMA_X = _frozen(np.array([[0, 1], [1, 0]], dtype=np.complex128))
KET_H = _frozen(np.array([1, 0], dtype=np.complex128))
KET_V = _frozen(np.array([0, 1], dtype=np.complex128))


def as_coin_vector(v: ArrayLike) -> CoinVector:
    """Coerce ``v`` to a read-only complex vector of shape (2,)."""
    arr = np.array(v, dtype=np.complex128).reshape(-1)
    if arr.shape != (2,):
        raise ValueError(f"coin vector must have 2 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("coin vector has non-finite entries")
    return _frozen(arr)


def as_coin_operator(m: ArrayLike) -> CoinOperator:
    """Coerce ``m`` to a read-only complex 2x2 matrix."""
    arr = np.array(m, dtype=np.complex128)
    if arr.shape != (2, 2):
        raise ValueError(f"coin operator must be 2x2, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("coin operator has non-finite entries")
    return _frozen(arr)


def _check_index(i: int) -> None:
    if isinstance(i, bool) or not isinstance(i, (int, np.integer)) or not 1 <= i <= 4:
        raise IndexError(f"state index must be 1, 2, 3 or 4 (got {i!r})")


def make_sic_vector(i: int) -> CoinVector:
    """
    Return the i-th vertex vector of the qubit SIC tetrahedron.

    Parameters
    ----------
    i : int
        Index in 1..4.

    Returns
    -------
    CoinVector
        ``(1, 0)`` for ``i = 1`` and ``(1, sqrt(2) * w) / sqrt(3)`` otherwise,
        with ``w = 1, LAMBDA, conj(LAMBDA)`` for ``i = 2, 3, 4``.
    """
    _check_index(i)
    if i == 1:
        return as_coin_vector([1.0, 0.0])
    w = (1.0, LAMBDA, LAMBDA.conjugate())[i - 2]
    return as_coin_vector([1.0 / _SQRT3, _SQRT2 * w / _SQRT3])


def make_init_state(i: int) -> CoinVector:
    """
    Return the initial coin state orthogonal to ``make_sic_vector(i)``.

    ``|V>`` for ``i = 1`` and ``(sqrt(2)|H> - w|V>) / sqrt(3)`` otherwise.
    """
    _check_index(i)
    if i == 1:
        return as_coin_vector([0.0, 1.0])
    w = (1.0, LAMBDA, LAMBDA.conjugate())[i - 2]
    return as_coin_vector([_SQRT2 / _SQRT3, -w / _SQRT3])


def inner(a: ArrayLike, b: ArrayLike) -> complex:
    """Inner product <a|b>, conjugate-linear in ``a``."""
    return complex(np.vdot(np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128)))


def projector(v: ArrayLike) -> CoinOperator:
    """Return ``|v><v|``."""
    v = np.asarray(v, dtype=np.complex128)
    return np.outer(v, v.conj())


@dataclass(frozen=True)
class MatrixReport:
    unitary: bool
    hermitian: bool
    psd: bool


def matrix_checks(m: ArrayLike, tol: float = 1e-12) -> MatrixReport:
    """
    Classify a coin operator as unitary / Hermitian / positive semidefinite.

    PSD implies Hermitian here: a non-Hermitian matrix is never reported PSD.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    m = np.asarray(m, dtype=np.complex128)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    n = m.shape[0]
    unitary = bool(np.max(np.abs(m.conj().T @ m - np.eye(n))) <= tol)
    hermitian = bool(np.max(np.abs(m - m.conj().T)) <= tol)
    psd = hermitian and bool(np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min() >= -tol)
    return MatrixReport(unitary=unitary, hermitian=hermitian, psd=psd)


def phase_invariant_distance(a: ArrayLike, b: ArrayLike) -> float:
    """
    ``min_phi || a - e^{i phi} b ||_F``.

    The optimal phase is ``arg Tr(b^dagger a)``; the residual is evaluated
    directly rather than through the expanded quadratic to keep full precision
    near zero.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    overlap = np.vdot(b, a)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.linalg.norm(a - phase * b))


def trace_distance(rho: ArrayLike, sigma: ArrayLike) -> float:
    """Half the trace norm of ``rho - sigma`` for Hermitian inputs."""
    d = np.asarray(rho, dtype=np.complex128) - np.asarray(sigma, dtype=np.complex128)
    d = 0.5 * (d + d.conj().T)
    return float(0.5 * np.abs(np.linalg.eigvalsh(d)).sum())
