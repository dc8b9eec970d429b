"""
Coin-state tomography from SIC-POVM outcome statistics.

Linear inversion uses the closed form for the qubit SIC,
``rho = sum_i (3 p_i - 1/2) P_i`` with ``P_i = |xi_i><xi_i|``. It is unbiased
and may return a non-positive matrix for noisy data, which is reported but
never clamped. Maximum likelihood iterates ``rho -> R rho R`` on the simplex
of density matrices and is the physical estimator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from numpy.typing import ArrayLike

from . import kernels
from .core import make_sic_vector, projector
from .experiment import CountRecord
from .povm import PovmSet

__all__ = [
    "Reconstruction",
    "forward_probs",
    "probs_by_index",
    "linear_inversion",
    "mle_reconstruct",
]

_STATUS = {kernels.CONVERGED: "converged", kernels.MAX_ITER: "max_iter", kernels.STALLED: "stalled"}


@dataclass(frozen=True)
class Reconstruction:
    rho: np.ndarray
    method: str
    iterations: int = 0
    loglik: float | None = None
    residual: float = 0.0
    status: str = "exact"
    loglik_history: np.ndarray = field(default=None, repr=False)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.rho)

    @property
    def physical(self) -> bool:
        return bool(self.eigenvalues[0] >= -1e-10)

    @property
    def converged(self) -> bool:
        return self.status in ("exact", "converged", "stalled")

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "rho": [[[float(z.real), float(z.imag)] for z in row] for row in self.rho],
            "eigenvalues": self.eigenvalues.tolist(),
            "physical": self.physical,
            "diagnostics": {
                "iterations": self.iterations,
                "loglik": self.loglik,
                "residual": self.residual,
                "status": self.status,
            },
        }


def _check_complete(povm: PovmSet, tol: float = 1e-8) -> None:
    resid = np.abs(povm.total() - np.eye(2)).max()
    if resid > tol:
        raise ValueError(f"POVM is incomplete (residual {resid:.3e})")


def forward_probs(rho: ArrayLike, povm: PovmSet, validate: bool = True) -> dict[int, float]:
    """
    Born-rule outcome probabilities ``Tr(E_x rho)``.

    With ``validate`` the input must be a trace-one PSD matrix; pass
    ``validate=False`` to push arbitrary Hermitian matrices through.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    _check_complete(povm)
    if validate:
        if abs(np.trace(rho) - 1) > 1e-8 or np.abs(rho - rho.conj().T).max() > 1e-8:
            raise ValueError("rho must be Hermitian with unit trace")
        if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0] < -1e-8:
            raise ValueError("rho is not positive semidefinite")
    return {x: float(np.trace(e @ rho).real) for x, e in povm.elements.items()}


def probs_by_index(probs: Mapping[int, float], assignment: Mapping[int, int]) -> dict[int, float]:
    """Re-key position probabilities by SIC index using a ``match_tetrahedron`` result."""
    return {assignment[x]: p for x, p in probs.items() if x in assignment}


def linear_inversion(probs: Mapping[int, float]) -> Reconstruction:
    """
    Closed-form estimate from SIC outcome probabilities keyed by index 1..4.

    Raises
    ------
    ValueError
        If the probabilities do not sum to one within 1e-6 or an index is
        missing.
    """
    if set(probs) != {1, 2, 3, 4}:
        raise ValueError(f"expected probabilities for indices 1..4, got {sorted(probs)}")
    total = sum(probs.values())
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"probabilities sum to {total:.9g}, not 1")
    rho = sum((3.0 * probs[i] - 0.5) * projector(make_sic_vector(i)) for i in range(1, 5))
    rho = 0.5 * (rho + rho.conj().T)
    return Reconstruction(rho=rho, method="linear")


def mle_reconstruct(
    counts: CountRecord,
    povm: PovmSet,
    tol: float = 1e-10,
    max_iter: int = 10_000,
    rho0: ArrayLike | None = None,
    backend=None,
) -> Reconstruction:
    """
    Maximum-likelihood density matrix for position-keyed counts.

    Iterates from ``rho0`` (default ``I/2``) until successive iterates differ
    by less than ``tol`` in Frobenius norm or ``max_iter`` is reached, in which
    case ``status`` is ``"max_iter"``. The log-likelihood history is kept in
    the result and never decreases.
    """
    if counts.total <= 0:
        raise ValueError("count record is empty")
    _check_complete(povm)
    extra = set(counts.counts) - set(povm.elements)
    if any(counts.counts[x] > 0 for x in extra):
        raise ValueError(f"counts at positions without a POVM element: {sorted(extra)}")
    pos = povm.positions
    n = np.array([counts.counts.get(x, 0) for x in pos], dtype=np.float64)
    effects = np.stack([povm.elements[x] for x in pos])
    start = np.eye(2, dtype=np.complex128) / 2 if rho0 is None else np.asarray(rho0, dtype=np.complex128)
    k = backend or kernels.active
    rho, it, hist, status = k.mle_rrr(n, effects, start, tol, max_iter)
    resid = float(np.abs(np.einsum("kab,ba->k", effects, rho).real - n / n.sum()).max())
    return Reconstruction(
        rho=rho,
        method="mle",
        iterations=int(it),
        loglik=float(hist[-1]),
        residual=resid,
        status=_STATUS[status],
        loglik_history=hist,
    )
