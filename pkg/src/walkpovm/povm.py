"""
Coin-space measurement induced by reading out the walker position.

After a unitary walk from ``|origin>|phi>``, the amplitude left at site ``x``
is ``K_x |phi>`` for a 2x2 Kraus operator ``K_x``; the probability of finding
the walker there is ``<phi|E_x|phi>`` with ``E_x = K_x^dagger K_x``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from numpy.typing import ArrayLike

from .core import KET_H, KET_V, CoinOperator, projector
from .walk import WalkerState, WalkSchedule, evolve

__all__ = [
    "PovmSet",
    "SicReport",
    "AmbiguousMatchError",
    "kraus_at",
    "kraus_operators",
    "povm_elements",
    "verify_sic",
    "match_tetrahedron",
    "canonical_sic_povm",
]

_COMPLETENESS_ERR = 1e-8


class AmbiguousMatchError(ValueError):
    """Raised when POVM elements cannot be assigned to targets uniquely."""


@dataclass(frozen=True)
class PovmSet:
    """Position-keyed POVM elements plus the digest of the generating schedule."""

    elements: Mapping[int, CoinOperator]
    source: str = ""

    def __post_init__(self):
        els = {}
        for x, e in sorted(self.elements.items()):
            e = np.array(e, dtype=np.complex128)
            e.setflags(write=False)
            els[int(x)] = e
        object.__setattr__(self, "elements", els)

    @property
    def positions(self) -> list[int]:
        return list(self.elements)

    def total(self) -> np.ndarray:
        return sum(self.elements.values(), np.zeros((2, 2), dtype=np.complex128))

    def to_json(self) -> dict:
        return {
            "source": self.source,
            "elements": {
                str(x): [[[z.real, z.imag] for z in row] for row in e]
                for x, e in self.elements.items()
            },
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "PovmSet":
        try:
            els = {
                int(x): np.array([[complex(re, im) for re, im in row] for row in rows])
                for x, rows in data["elements"].items()
            }
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed POVM JSON: {exc}") from None
        return cls(els, data.get("source", ""))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def kraus_operators(schedule: WalkSchedule) -> dict[int, CoinOperator]:
    """
    Kraus operators for every site the walk can reach.

    Column 0 of ``K_x`` is the amplitude at ``x`` for input ``|origin>|H>``,
    column 1 the amplitude for ``|origin>|V>``.
    """
    out_h = evolve(WalkerState.localized(KET_H, schedule.origin), schedule)
    out_v = evolve(WalkerState.localized(KET_V, schedule.origin), schedule)
    return {
        x: np.column_stack([out_h[x], out_v[x]])
        for x in sorted(set(out_h) | set(out_v))
    }


def kraus_at(schedule: WalkSchedule, x: int) -> CoinOperator:
    """Kraus operator for finding the walker at ``x``; zero if unreachable."""
    return kraus_operators(schedule).get(int(x), np.zeros((2, 2), dtype=np.complex128))


def povm_elements(schedule: WalkSchedule) -> PovmSet:
    """
    ``E_x = K_x^dagger K_x`` for every reachable ``x``.

    Raises
    ------
    RuntimeError
        If the elements fail to sum to the identity within 1e-8, which
        means the evolution was not unitary.
    """
    els = {}
    for x, k in kraus_operators(schedule).items():
        e = k.conj().T @ k
        els[x] = 0.5 * (e + e.conj().T)
    povm = PovmSet(els, schedule.digest())
    resid = np.abs(povm.total() - np.eye(2)).max()
    if resid > _COMPLETENESS_ERR:
        raise RuntimeError(f"POVM completeness violated by {resid:.3e}")
    return povm


@dataclass(frozen=True)
class SicReport:
    is_sic: bool
    positions: tuple[int, ...]
    rank1: dict[int, bool]
    traces: dict[int, float]
    pairwise: np.ndarray = field(repr=False)  # Tr(E_i E_j), rows/cols follow ``positions``
    completeness_residual: float = 0.0
    failures: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "is_sic": self.is_sic,
            "positions": list(self.positions),
            "rank1": {str(k): v for k, v in self.rank1.items()},
            "traces": {str(k): v for k, v in self.traces.items()},
            "pairwise": self.pairwise.tolist(),
            "completeness_residual": self.completeness_residual,
            "failures": list(self.failures),
        }


def verify_sic(povm: PovmSet, tol: float = 1e-10) -> SicReport:
    """
    Check that ``povm`` is a qubit SIC-POVM.

    Elements with trace below ``tol`` are ignored. The remaining elements must
    number four, each rank one with trace 1/2, and the normalized projectors
    ``2 E`` must have pairwise overlap ``Tr(P_i P_j) = 1/3``. Failures are
    collected in the report instead of raised.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    els = {x: e for x, e in povm.elements.items() if np.trace(e).real > tol}
    pos = tuple(els)
    failures = []
    rank1, traces = {}, {}
    for x, e in els.items():
        ev = np.linalg.eigvalsh(e)
        tr = float(ev.sum())
        traces[x] = tr
        rank1[x] = bool(ev[0] < tol * tr)
        if not rank1[x]:
            failures.append(f"element at {x} is not rank one (eigenvalues {ev[0]:.3g}, {ev[1]:.3g})")
        if abs(tr - 0.5) > tol:
            failures.append(f"element at {x} has trace {tr:.12g}, expected 1/2")
    mats = [els[x] for x in pos]
    pairwise = np.array([[np.trace(a @ b).real for b in mats] for a in mats]).reshape(len(mats), len(mats))
    if len(pos) != 4:
        failures.append(f"expected 4 nonzero elements, found {len(pos)}")
    for i, j in itertools.combinations(range(len(pos)), 2):
        if abs(4.0 * pairwise[i, j] - 1.0 / 3.0) > tol:
            failures.append(
                f"overlap of elements at {pos[i]} and {pos[j]} is {4 * pairwise[i, j]:.12g}, expected 1/3"
            )
    resid = float(np.abs(povm.total() - np.eye(2)).max())
    if resid > tol:
        failures.append(f"completeness residual {resid:.3g}")
    return SicReport(
        is_sic=not failures,
        positions=pos,
        rank1=rank1,
        traces=traces,
        pairwise=pairwise,
        completeness_residual=resid,
        failures=tuple(failures),
    )


def match_tetrahedron(
    povm: PovmSet, targets: Sequence[ArrayLike], tie_tol: float = 1e-9
) -> dict[int, int]:
    """
    Assign each POVM position to a 1-based target index.

    The bijection maximizes the total overlap ``sum Tr(E_x |t_i><t_i|)``. It is
    found by enumerating permutations, which is cheap for four outcomes.

    Raises
    ------
    AmbiguousMatchError
        If the numbers of elements and targets differ or if the two best
        assignments score within ``tie_tol`` of each other.
    """
    els = {x: e for x, e in povm.elements.items() if np.trace(e).real > 1e-12}
    pos = list(els)
    if len(pos) != len(targets):
        raise AmbiguousMatchError(
            f"{len(pos)} POVM elements cannot be matched to {len(targets)} targets"
        )
    projs = [projector(t) for t in targets]
    score = np.array([[np.trace(els[x] @ p).real for p in projs] for x in pos])
    ranked = sorted(
        ((score[np.arange(len(pos)), perm].sum(), perm) for perm in itertools.permutations(range(len(pos)))),
        key=lambda t: -t[0],
    )
    if len(ranked) > 1 and ranked[0][0] - ranked[1][0] < tie_tol:
        raise AmbiguousMatchError("two assignments have equal overlap")
    perm = ranked[0][1]
    return {x: perm[k] + 1 for k, x in enumerate(pos)}


def canonical_sic_povm() -> PovmSet:
    """``{E_i = |xi_i><xi_i| / 2}`` keyed by index 1..4."""
    from .core import make_sic_vector

    return PovmSet({i: 0.5 * projector(make_sic_vector(i)) for i in range(1, 5)}, "canonical")
