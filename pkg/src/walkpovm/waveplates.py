"""
Jones-matrix wave plates and a compiler from coin operations to plate angles.

Angles are in degrees, measured between the optic axis and the horizontal.
A plate sequence is listed in the order light traverses it, so its matrix is
the product with the last plate leftmost. Wave plates cannot produce a global
phase, so every target is matched projectively (in PU(2)).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from numpy.typing import ArrayLike
from scipy import optimize

from .core import KET_H, CoinOperator, as_coin_operator, as_coin_vector, phase_invariant_distance

__all__ = [
    "PlateSetting",
    "PlateSequence",
    "CompileError",
    "hwp",
    "qwp",
    "plate_matrix",
    "apply_sequence",
    "solve_preparation",
    "compile_coin",
    "TableEntryReport",
    "TableReport",
    "verify_table",
    "TABLE_TOL",
]

TABLE_TOL = 2e-3

_SY = np.array([[0, -1j], [1j, 0]])
_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SZ = np.diag([1.0 + 0j, -1.0])


class CompileError(ValueError):
    """Raised when no plate sequence matches a target."""


def _normalize_angle(deg: float) -> float:
    a = float(deg)
    if not -180.0 <= a < 180.0:
        a = (a + 180.0) % 360.0 - 180.0
    return 0.0 if a == 0.0 else a


@dataclass(frozen=True)
class PlateSetting:
    kind: str
    angle: float

    def __post_init__(self):
        kind = str(self.kind).upper()
        if kind not in ("HWP", "QWP"):
            raise ValueError(f"plate kind must be HWP or QWP, got {self.kind!r}")
        if not math.isfinite(self.angle):
            raise ValueError("plate angle must be finite")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "angle", _normalize_angle(self.angle))

    def matrix(self) -> CoinOperator:
        return hwp(self.angle) if self.kind == "HWP" else qwp(self.angle)

    def rounded(self, ndigits: int = 2) -> "PlateSetting":
        return PlateSetting(self.kind, round(self.angle, ndigits))

    def to_json(self) -> dict:
        return {"kind": self.kind, "angle": self.angle}

    @classmethod
    def from_json(cls, data: Mapping) -> "PlateSetting":
        return cls(data["kind"], float(data["angle"]))


PlateSequence = tuple[PlateSetting, ...]


def hwp(theta_deg: float) -> CoinOperator:
    """Half-wave plate with optic axis at ``theta_deg``."""
    t = 2.0 * math.radians(theta_deg)
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, s], [s, -c]], dtype=np.complex128)


def qwp(theta_deg: float) -> CoinOperator:
    """Quarter-wave plate with optic axis at ``theta_deg``; ``diag(1, i)`` at 0."""
    t = math.radians(theta_deg)
    c, s = math.cos(t), math.sin(t)
    off = (1 - 1j) * s * c
    return np.array([[c * c + 1j * s * s, off], [off, s * s + 1j * c * c]], dtype=np.complex128)


def plate_matrix(kind: str, theta_deg: float) -> CoinOperator:
    return PlateSetting(kind, theta_deg).matrix()


def apply_sequence(seq: Sequence[PlateSetting]) -> CoinOperator:
    """Jones matrix of a sequence; the first plate in ``seq`` acts first."""
    m = np.eye(2, dtype=np.complex128)
    for p in seq:
        m = p.matrix() @ m
    return m


# Solvers ---------------------------------------------------------------


def _single_hwp(u: np.ndarray, tol: float) -> PlateSequence | None:
    # hwp(t) = [[c, s], [s, -c]] with c = cos 2t, s = sin 2t
    c = 0.5 * (u[0, 0] - u[1, 1])
    s = 0.5 * (u[0, 1] + u[1, 0])
    w = np.array([c, s])
    if np.linalg.norm(w) < 1e-12:
        return None
    # rotate away the global phase so (c, s) is as real as possible
    k = np.vdot(w.conj(), w)
    w = w * np.exp(-0.5j * np.angle(k)) if abs(k) > 0 else w
    theta = 0.5 * math.degrees(math.atan2(w[1].real, w[0].real))
    seq = (PlateSetting("HWP", theta),)
    if phase_invariant_distance(apply_sequence(seq), u) < tol:
        return seq
    return None


def _euler_yxy(u: np.ndarray) -> tuple[float, float, float]:
    """Angles (a, b, g) with u ~ Y(a) X(b) Y(g), where P(p) = exp(-i p sigma_P / 2)."""
    v = u / np.sqrt(np.linalg.det(u))
    w = (np.trace(v) / 2).real
    ax = (1j * np.trace(v @ _SX) / 2).real
    ay = (1j * np.trace(v @ _SY) / 2).real
    az = (1j * np.trace(v @ _SZ) / 2).real
    half_sum = math.atan2(ay, w)
    half_diff = math.atan2(-az, ax)
    b = 2.0 * math.atan2(math.hypot(ax, az), math.hypot(w, ay))
    return half_sum + half_diff, b, half_sum - half_diff


def _qhq(u: np.ndarray) -> PlateSequence:
    # QWP(a) HWP(b) QWP(c) = Y(2a) X(2a + 2c - 4b) Y(-2c) up to phase
    al, be, ga = _euler_yxy(u)
    a = math.degrees(al / 2)
    c = math.degrees(-ga / 2)
    b = math.degrees((al - ga - be) / 4)
    return (PlateSetting("QWP", c), PlateSetting("HWP", b), PlateSetting("QWP", a))


_GRID = np.linspace(-90.0, 90.0, 181, endpoint=False)


def _stack(kind: str, angles: np.ndarray) -> np.ndarray:
    return np.stack([plate_matrix(kind, t) for t in angles])


_GRID_MATS = {k: _stack(k, _GRID) for k in ("HWP", "QWP")}


_FN = {"HWP": hwp, "QWP": qwp}


def _aligned_residual(m: np.ndarray, target: np.ndarray) -> np.ndarray:
    # m - e^{i phi} target with the optimal phase, as a real vector
    k = np.vdot(target, m)
    r = m - (k / abs(k) if abs(k) > 0 else 1.0) * target
    return np.concatenate([r.real.ravel(), r.imag.ravel()])


def _refine(kinds: Sequence[str], x0: Sequence[float], fn) -> PlateSequence:
    """Least-squares polish of plate angles; ``fn`` maps a matrix sequence to a residual."""
    res = optimize.least_squares(
        lambda p: fn([_FN[k](t) for k, t in zip(kinds, p)]), x0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15
    )
    return tuple(PlateSetting(k, t) for k, t in zip(kinds, res.x))


def _two_plate(u: np.ndarray, tol: float) -> PlateSequence | None:
    """Search two-plate sequences by grid + local refinement of near matches."""
    best: tuple[float, PlateSequence] | None = None
    for k1, k2 in (("HWP", "QWP"), ("QWP", "HWP"), ("QWP", "QWP")):
        prod = np.einsum("jab,ibc->ijac", _GRID_MATS[k2], _GRID_MATS[k1])  # [first i, second j]
        ov = np.abs(np.einsum("ijac,ac->ij", prod.conj(), u))
        i, j = np.unravel_index(int(np.argmax(ov)), ov.shape)
        if 2.0 - ov[i, j] > 1e-2:
            continue
        seq = _refine((k1, k2), [_GRID[i], _GRID[j]], lambda ms: _aligned_residual(ms[1] @ ms[0], u))
        d = phase_invariant_distance(apply_sequence(seq), u)
        if best is None or d < best[0]:
            best = (d, seq)
    if best is not None and best[0] < tol:
        return best[1]
    return None


def compile_coin(u: ArrayLike, tol: float = 1e-8, max_plates: int = 3) -> PlateSequence:
    """
    Find a wave-plate sequence realizing the unitary ``u`` up to global phase.

    Tries a single HWP, then two-plate sequences, then the general
    QWP-HWP-QWP form, which covers every element of U(2).

    Parameters
    ----------
    u : array_like
        2x2 unitary.
    tol : float
        Maximum phase-invariant Frobenius distance of the result.
    max_plates : int
        Upper bound on the sequence length (1, 2 or 3).

    Returns
    -------
    PlateSequence
        Plates in traversal order.

    Raises
    ------
    CompileError
        If ``u`` is not unitary or no sequence within ``max_plates`` matches.
    """
    u = as_coin_operator(u)
    if np.max(np.abs(u.conj().T @ u - np.eye(2))) > 1e-10:
        raise CompileError("target coin is not unitary")
    if (np.abs(u - u[0, 0] * np.eye(2)).max() < tol) and abs(abs(u[0, 0]) - 1) < tol:
        return ()
    seq = _single_hwp(u, tol)
    if seq is not None:
        return seq
    if max_plates >= 2:
        seq = _two_plate(u, tol)
        if seq is not None:
            return seq
    if max_plates >= 3:
        seq = _qhq(u)
        if phase_invariant_distance(apply_sequence(seq), u) < tol:
            return seq
    raise CompileError(f"no sequence of at most {max_plates} plates matches the target")


def _overlap(seq: Sequence[PlateSetting], source: np.ndarray, target: np.ndarray) -> float:
    return abs(np.vdot(target, apply_sequence(seq) @ source))


def _best_single(kind: str, source: np.ndarray, target: np.ndarray) -> PlateSequence:
    ov = np.abs(np.einsum("a,iab,b->i", target.conj(), _GRID_MATS[kind], source))
    # equivalent optima: take the smallest |angle|, positive on ties
    cand = _GRID[ov >= ov.max() - 1e-12]
    t0 = min(cand, key=lambda t: (abs(t), -t))
    return _refine((kind,), [t0], lambda ms: _aligned_residual(ms[0] @ source, target))


def solve_preparation(target: ArrayLike, source: ArrayLike = KET_H, tol: float = 1e-12) -> PlateSequence:
    """
    Plate sequence (at most two plates) taking ``source`` to ``target``.

    Single-plate solutions are preferred, an HWP before a QWP. The returned
    sequence satisfies ``|<target|M|source>| >= 1 - tol``.

    Raises
    ------
    ValueError
        If ``target`` or ``source`` is not unit norm.
    CompileError
        If no sequence of two plates reaches the target.
    """
    target = as_coin_vector(target)
    source = as_coin_vector(source)
    for v, name in ((target, "target"), (source, "source")):
        if abs(np.vdot(v, v).real - 1.0) > 1e-9:
            raise ValueError(f"{name} state is not unit norm")
    for kind in ("HWP", "QWP"):
        seq = _best_single(kind, source, target)
        if _overlap(seq, source, target) >= 1 - tol:
            return seq
    # a QWP then an HWP reaches every pure state from a linear source; the
    # other orders cover elliptical sources
    best = None
    for k1, k2 in (("QWP", "HWP"), ("HWP", "QWP"), ("QWP", "QWP")):
        m = np.einsum("jab,ibc->ijac", _GRID_MATS[k2], _GRID_MATS[k1])
        ov = np.abs(np.einsum("a,ijab,b->ij", target.conj(), m, source))
        i, j = np.unravel_index(int(np.argmax(ov)), ov.shape)
        seq = _refine(
            (k1, k2), [_GRID[i], _GRID[j]], lambda ms: _aligned_residual(ms[1] @ ms[0] @ source, target)
        )
        ov_best = _overlap(seq, source, target)
        if ov_best >= 1 - tol:
            return seq
        if best is None or ov_best > best[0]:
            best = (ov_best, seq)
    raise CompileError(f"preparation solver failed (best overlap {best[0]:.15f})")


# Table verification ------------------------------------------------------


@dataclass(frozen=True)
class TableEntryReport:
    step: int
    site: int
    plates: PlateSequence
    distance: float
    passed: bool
    order: tuple[int, ...]  # permutation of the listed plates that was used


@dataclass(frozen=True)
class TableReport:
    entries: tuple[TableEntryReport, ...]
    missing: tuple[tuple[int, int], ...]
    tol: float

    @property
    def passed(self) -> bool:
        return not self.missing and all(e.passed for e in self.entries)

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "tol": self.tol,
            "missing": [list(m) for m in self.missing],
            "entries": [
                {
                    "step": e.step,
                    "site": e.site,
                    "plates": [p.to_json() for p in e.plates],
                    "order": list(e.order),
                    "distance": e.distance,
                    "passed": e.passed,
                }
                for e in self.entries
            ],
        }


def _coin_for(schedule, step: int, site: int) -> np.ndarray:
    subs = schedule.steps[step - 1]
    hits = [sub.coins[site] for sub in subs if site in sub.coins]
    if len(hits) > 1:
        raise ValueError(f"site {site} has coins in several sub-steps of step {step}")
    return hits[0] if hits else np.eye(2, dtype=np.complex128)


def verify_table(
    schedule,
    table: Mapping[tuple[int, int], Sequence[PlateSetting]],
    tol: float = TABLE_TOL,
    try_orders: bool = True,
) -> TableReport:
    """
    Compare each ``(step, site)`` plate sequence with the schedule's coin.

    The distance is phase-invariant Frobenius. With ``try_orders`` every
    permutation of the listed plates is evaluated and the best one reported,
    since a table need not state the traversal order within a cell. Sites that
    carry a non-identity coin but have no table entry are listed as missing.
    """
    entries = []
    for (k, x), seq in sorted(table.items()):
        if not 1 <= k <= len(schedule.steps):
            raise ValueError(f"table step {k} outside schedule")
        target = _coin_for(schedule, k, x)
        seq = tuple(seq)
        perms = itertools.permutations(range(len(seq))) if try_orders else [tuple(range(len(seq)))]
        best = min(
            ((phase_invariant_distance(apply_sequence([seq[i] for i in p]), target), p) for p in perms),
            key=lambda t: t[0],
        )
        entries.append(TableEntryReport(k, x, seq, best[0], best[0] < tol, tuple(best[1])))
    missing = []
    for k, _, sub in schedule.substeps():
        for x, m in sub.coins.items():
            if (k, x) not in table and phase_invariant_distance(m, np.eye(2)) > tol:
                missing.append((k, x))
    return TableReport(tuple(entries), tuple(sorted(set(missing))), tol)
