"""
Noisy model of the photonic experiment.

Imperfect interference is modeled by damping the coherences between distinct
walker positions by the visibility after every step. Wave-plate angle errors
are drawn once per run (a systematic setting error) and applied to every
coin whose plate settings the schedule records. Detection is multinomial.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from numpy.typing import ArrayLike

from . import kernels
from .core import CoinOperator
from .walk import WalkerState, WalkSchedule
from .waveplates import PlateSetting, apply_sequence

__all__ = [
    "NoiseModel",
    "WalkerDensity",
    "CountRecord",
    "evolve_density",
    "noisy_coins",
    "sample_counts",
    "l1_distance",
    "bootstrap_errors",
    "counts_from_frequencies",
]

NOMINAL_VISIBILITY = 0.992
NOMINAL_SHOTS = 32_000


@dataclass(frozen=True)
class NoiseModel:
    visibility: float = 1.0
    angle_jitter_deg: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.visibility <= 1.0:
            raise ValueError(f"visibility must lie in [0, 1], got {self.visibility}")
        if not self.angle_jitter_deg >= 0.0:
            raise ValueError(f"angle jitter must be non-negative, got {self.angle_jitter_deg}")


class WalkerDensity:
    """
    Walker+coin density operator on a contiguous window of sites.

    ``matrix[i, a, j, c]`` is the entry between site ``lo + i`` with coin
    ``a`` and site ``lo + j`` with coin ``c``.
    """

    def __init__(self, lo: int, matrix: ArrayLike):
        m = np.array(matrix, dtype=np.complex128)
        if m.ndim != 4 or m.shape[1] != 2 or m.shape[3] != 2 or m.shape[0] != m.shape[2]:
            raise ValueError(f"density matrix must have shape (L, 2, L, 2), got {m.shape}")
        m.setflags(write=False)
        self.lo = int(lo)
        self.matrix = m

    @classmethod
    def from_state(cls, state: WalkerState) -> "WalkerDensity":
        if len(state) == 0:
            raise ValueError("empty state")
        lo, hi = min(state), max(state)
        psi = np.zeros((hi - lo + 1, 2), dtype=np.complex128)
        for x, v in state.items():
            psi[x - lo] = v
        return cls(lo, np.einsum("ia,jc->iajc", psi, psi.conj()))

    @classmethod
    def from_coin(cls, coin_rho: ArrayLike, position: int = 0) -> "WalkerDensity":
        """``|position><position|`` tensored with a 2x2 coin density matrix."""
        return cls(position, np.asarray(coin_rho, dtype=np.complex128).reshape(1, 2, 1, 2))

    @property
    def positions(self) -> range:
        return range(self.lo, self.lo + self.matrix.shape[0])

    def block(self, x: int, y: int) -> np.ndarray:
        i, j = x - self.lo, y - self.lo
        n = self.matrix.shape[0]
        if 0 <= i < n and 0 <= j < n:
            return self.matrix[i, :, j, :]
        return np.zeros((2, 2), dtype=np.complex128)

    @property
    def entries(self) -> dict[tuple[int, int], np.ndarray]:
        """Nonzero blocks keyed by ``(x, x')``."""
        out = {}
        for i, x in enumerate(self.positions):
            for j, y in enumerate(self.positions):
                b = self.matrix[i, :, j, :]
                if np.any(b != 0):
                    out[(x, y)] = b
        return out

    def as_matrix(self) -> np.ndarray:
        n = self.matrix.shape[0]
        return self.matrix.reshape(2 * n, 2 * n)

    def trace(self) -> float:
        return float(np.trace(self.as_matrix()).real)

    def hermiticity_error(self) -> float:
        m = self.as_matrix()
        return float(np.abs(m - m.conj().T).max())

    def min_eigenvalue(self) -> float:
        m = self.as_matrix()
        return float(np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min())

    def position_distribution(self) -> dict[int, float]:
        diag = np.einsum("iaia->i", self.matrix).real
        return {x: float(p) for x, p in zip(self.positions, diag) if p > 0}

    def padded(self, n: int) -> "WalkerDensity":
        return WalkerDensity(self.lo - n, np.pad(self.matrix, ((n, n), (0, 0), (n, n), (0, 0))))

    def trimmed(self) -> "WalkerDensity":
        occ = np.flatnonzero(np.einsum("iaia->i", np.abs(self.matrix)) > 0)
        if occ.size == 0:
            return self
        a, b = occ[0], occ[-1] + 1
        return WalkerDensity(self.lo + a, self.matrix[a:b, :, a:b, :])


def noisy_coins(schedule: WalkSchedule, jitter_deg: float, rng: np.random.Generator) -> list[list[dict[int, CoinOperator]]]:
    """
    Coin maps with plate-angle errors folded in.

    Each recorded plate gets one Gaussian angle offset. The perturbed coin is
    ``M(angles + offsets) M(angles)^dagger C``, which equals ``C`` at zero
    jitter even where the plates only match ``C`` up to a phase.
    """
    out = []
    for s in schedule.steps:
        layer = []
        for sub in s:
            coins = dict(sub.coins)
            if jitter_deg > 0 and sub.plates:
                for x, seq in sub.plates.items():
                    if not seq:
                        continue
                    offs = rng.normal(0.0, jitter_deg, size=len(seq))
                    moved = [PlateSetting(p.kind, p.angle + o) for p, o in zip(seq, offs)]
                    err = apply_sequence(moved) @ apply_sequence(seq).conj().T
                    coins[x] = err @ coins.get(x, np.eye(2, dtype=np.complex128))
            layer.append(coins)
        out.append(layer)
    return out


def evolve_density(
    rho0: WalkerDensity, schedule: WalkSchedule, noise: NoiseModel = NoiseModel(), backend=None
) -> WalkerDensity:
    """
    Evolve a walker+coin density operator through ``schedule`` under ``noise``.

    Every step applies its (possibly angle-perturbed) unitary and then
    multiplies each off-diagonal position block by ``noise.visibility``.
    """
    k = backend or kernels.active
    rng = np.random.default_rng(noise.seed)
    layers = noisy_coins(schedule, noise.angle_jitter_deg, rng)
    rho = rho0.padded(schedule.n_shifts)
    lo, m = rho.lo, np.array(rho.matrix)
    n = m.shape[0]
    for step_layers in layers:
        for coins in step_layers:
            arr = np.tile(np.eye(2, dtype=np.complex128), (n, 1, 1))
            for x, c in coins.items():
                if 0 <= x - lo < n:
                    arr[x - lo] = c
            m = k.density_substep(m, arr)
        if noise.visibility != 1.0:
            m = k.damp_offdiagonal(m, noise.visibility)
    return WalkerDensity(lo, m).trimmed()


@dataclass(frozen=True)
class CountRecord:
    """Coincidence counts per position; ``reconstructed`` marks counts rebuilt from frequencies."""

    counts: Mapping[int, int]
    seed: int | None = None
    reconstructed: bool = False
    total: int = field(init=False)

    def __post_init__(self):
        counts = {}
        for x, c in sorted(self.counts.items()):
            c = int(c)
            if c < 0:
                raise ValueError(f"negative count at position {x}")
            counts[int(x)] = c
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "total", sum(counts.values()))

    def frequencies(self) -> dict[int, float]:
        if self.total == 0:
            raise ValueError("empty count record")
        return {x: c / self.total for x, c in self.counts.items()}

    def to_json(self) -> dict:
        return {
            "counts": {str(x): c for x, c in self.counts.items()},
            "total": self.total,
            "seed": self.seed,
            "reconstructed": self.reconstructed,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "CountRecord":
        try:
            rec = cls({int(x): c for x, c in data["counts"].items()}, data.get("seed"),
                      bool(data.get("reconstructed", False)))
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise ValueError(f"malformed count record: {exc}") from None
        if "total" in data and int(data["total"]) != rec.total:
            raise ValueError(f"count record total {data['total']} != sum of counts {rec.total}")
        return rec

    def to_csv(self, sigma: Mapping[int, float] | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["position", "count", "frequency", "sigma"])
        freqs = self.frequencies()
        for x, c in self.counts.items():
            s = "" if sigma is None else repr(float(sigma[x]))
            w.writerow([x, c, repr(freqs[x]), s])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, seed: int | None = None) -> "CountRecord":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows or "position" not in rows[0] or "count" not in rows[0]:
            raise ValueError("count CSV needs 'position' and 'count' columns")
        return cls({int(r["position"]): int(r["count"]) for r in rows}, seed)


def _check_distribution(dist: Mapping[int, float], tol: float) -> None:
    vals = np.array(list(dist.values()), dtype=float)
    if vals.size == 0 or not np.all(np.isfinite(vals)) or np.any(vals < -tol):
        raise ValueError("invalid probability distribution")
    if abs(vals.sum() - 1.0) > tol:
        raise ValueError(f"distribution sums to {vals.sum():.12g}, not 1")


def sample_counts(dist: Mapping[int, float], n: int, seed: int) -> CountRecord:
    """Multinomial draw of ``n`` detections; deterministic in ``seed``."""
    if n <= 0:
        raise ValueError("number of shots must be positive")
    _check_distribution(dist, 1e-9)
    pos = sorted(dist)
    p = np.clip(np.array([dist[x] for x in pos], dtype=float), 0.0, None)
    p /= p.sum()
    draw = np.random.default_rng(seed).multinomial(n, p)
    return CountRecord(dict(zip(pos, draw.tolist())), seed)


def l1_distance(p_exp: Mapping[int, float], p_th: Mapping[int, float], tol: float = 1e-6) -> float:
    """Half the l1 distance between two distributions over the union of supports."""
    _check_distribution(p_exp, tol)
    _check_distribution(p_th, tol)
    keys = set(p_exp) | set(p_th)
    return 0.5 * math.fsum(abs(p_exp.get(x, 0.0) - p_th.get(x, 0.0)) for x in keys)


def bootstrap_errors(record: CountRecord, trials: int = 1000, seed: int = 0) -> dict[int, float]:
    """
    Per-position standard deviation of the frequency under multinomial
    resampling at the empirical frequencies.
    """
    if trials < 100:
        raise ValueError("bootstrap needs at least 100 trials")
    if record.total == 0:
        raise ValueError("empty count record")
    pos = list(record.counts)
    f = np.array([record.counts[x] for x in pos], dtype=float) / record.total
    draws = np.random.default_rng(seed).multinomial(record.total, f, size=trials) / record.total
    sd = draws.std(axis=0, ddof=1)
    return {x: float(s) for x, s in zip(pos, sd)}


def counts_from_frequencies(freqs: Mapping[int, float], n: int = NOMINAL_SHOTS) -> CountRecord:
    """Rebuild integer counts as ``round(p * n)``; flagged as reconstructed."""
    return CountRecord({x: int(round(p * n)) for x, p in freqs.items()}, None, reconstructed=True)


def sic_input_density(i: int) -> WalkerDensity:
    """``|0><0|`` tensored with the i-th initial coin projector."""
    from .core import make_init_state, projector

    return WalkerDensity.from_coin(projector(make_init_state(i)))
