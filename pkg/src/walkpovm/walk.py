"""
Split-step discrete-time quantum walk on the integer line.

A step is an ordered list of sub-steps. Each sub-step applies a site-dependent
coin layer (identity on unlisted sites) and is followed by the conditional
shift that moves ``|H>`` one site right and ``|V>`` one site left. States are
stored sparsely, so no lattice bounds are ever declared.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import numpy as np
from numpy.typing import ArrayLike

from .core import (
    IDENTITY,
    SIGMA_X,
    CoinOperator,
    CoinVector,
    as_coin_operator,
    as_coin_vector,
)

__all__ = [
    "PRUNE_TOL",
    "WalkerState",
    "SubStep",
    "WalkSchedule",
    "ScheduleError",
    "COIN_ALIASES",
    "shift",
    "apply_coin_layer",
    "step",
    "evolve",
    "position_distribution",
    "sic_schedule",
    "identity_schedule",
]

PRUNE_TOL = 1e-15
_UNITARY_TOL = 1e-10

_S2 = np.sqrt(2.0)
_S3 = np.sqrt(3.0)

# Named coins of the three-step SIC schedule. ``Ck_j`` is the coin of step k,
# sub-step j at its non-sigma_x site; the ``Hk_j`` spellings are accepted too.
COIN_ALIASES: dict[str, CoinOperator] = {
    "I": IDENTITY,
    "X": SIGMA_X,
    "C1_2": as_coin_operator(np.array([[1, -1], [-1, -1]]) / _S2),
    "C2_1": as_coin_operator(np.array([[-1, 1], [1, 1]]) / _S2),
    "C2_2": as_coin_operator(np.array([[_S2, 1], [1, -_S2]]) / _S3),
    "C3_1": as_coin_operator(
        np.array(
            [
                [np.exp(-1j * np.pi / 3), np.exp(1j * np.pi / 6)],
                [np.exp(1j * np.pi / 3), np.exp(-1j * np.pi / 6)],
            ]
        )
        / _S2
    ),
}
for _k in ("1_2", "2_1", "2_2", "3_1"):
    COIN_ALIASES["H" + _k] = COIN_ALIASES["C" + _k]


class ScheduleError(ValueError):
    """Raised for malformed schedules or non-unitary coins."""


def _prune(vec: np.ndarray) -> np.ndarray | None:
    vec = np.where(np.abs(vec) < PRUNE_TOL, 0.0, vec)
    if not vec.any():
        return None
    return vec


class WalkerState(Mapping[int, CoinVector]):
    """
    Immutable sparse walker+coin state: position -> coin amplitudes.

    Only positions with a nonzero coin vector are stored; looking up any other
    position yields the zero vector.
    """

    __slots__ = ("_amps",)

    def __init__(self, amplitudes: Mapping[int, ArrayLike] | None = None):
        amps: dict[int, np.ndarray] = {}
        for x, v in (amplitudes or {}).items():
            vec = _prune(np.array(v, dtype=np.complex128).reshape(2))
            if vec is not None:
                vec.setflags(write=False)
                amps[int(x)] = vec
        self._amps = dict(sorted(amps.items()))

    @classmethod
    def localized(cls, coin: ArrayLike, position: int = 0) -> "WalkerState":
        """``|position>|coin>``."""
        return cls({position: as_coin_vector(coin)})

    def __getitem__(self, x: int) -> CoinVector:
        try:
            return self._amps[x]
        except KeyError:
            if not isinstance(x, (int, np.integer)):
                raise
            return np.zeros(2, dtype=np.complex128)

    def __contains__(self, x: object) -> bool:
        return x in self._amps

    def __iter__(self) -> Iterator[int]:
        return iter(self._amps)

    def __len__(self) -> int:
        return len(self._amps)

    def __repr__(self) -> str:
        body = ", ".join(f"{x}: [{v[0]:.6g}, {v[1]:.6g}]" for x, v in self._amps.items())
        return f"WalkerState({{{body}}})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WalkerState):
            return NotImplemented
        return self._amps.keys() == other._amps.keys() and all(
            np.array_equal(v, other._amps[x]) for x, v in self._amps.items()
        )

    __hash__ = None  # type: ignore[assignment]

    def __add__(self, other: "WalkerState") -> "WalkerState":
        out = {x: v.copy() for x, v in self._amps.items()}
        for x, v in other.items():
            out[x] = out[x] + v if x in out else v
        return WalkerState(out)

    def __mul__(self, c: complex) -> "WalkerState":
        return WalkerState({x: c * v for x, v in self._amps.items()})

    __rmul__ = __mul__

    @property
    def support(self) -> list[int]:
        return list(self._amps)

    def norm2(self) -> float:
        return float(sum(np.vdot(v, v).real for v in self._amps.values()))

    def to_json(self) -> dict:
        return {
            str(x): [[v[0].real, v[0].imag], [v[1].real, v[1].imag]]
            for x, v in self._amps.items()
        }

    @classmethod
    def from_json(cls, data: Mapping[str, list]) -> "WalkerState":
        amps = {}
        for key, pairs in data.items():
            try:
                amps[int(key)] = [complex(re, im) for re, im in pairs]
            except (TypeError, ValueError) as exc:
                raise ValueError(f"bad amplitude entry at position {key!r}: {pairs!r}") from exc
        return cls(amps)


def _parse_coin(raw, where: str) -> CoinOperator:
    if isinstance(raw, str):
        try:
            return COIN_ALIASES[raw]
        except KeyError:
            raise ScheduleError(f"{where}: unknown coin alias {raw!r}") from None
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError):
        raise ScheduleError(f"{where}: coin must be an alias or [re, im] pairs") from None
    if arr.shape == (4, 2) or arr.shape == (2, 2, 2):
        arr = arr.reshape(4, 2)
    else:
        raise ScheduleError(f"{where}: coin must be 4 [re, im] pairs, got shape {arr.shape}")
    return as_coin_operator((arr[:, 0] + 1j * arr[:, 1]).reshape(2, 2))


def _coin_to_json(m: CoinOperator) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(m).reshape(4)]


def _is_unitary(m: np.ndarray) -> bool:
    return float(np.max(np.abs(m.conj().T @ m - IDENTITY))) <= _UNITARY_TOL


@dataclass(frozen=True, eq=False)
class SubStep:
    """
    One coin layer of a split-step walk, followed implicitly by a shift.

    ``coins`` maps positions to unitary 2x2 coins; identity elsewhere.
    ``plates`` optionally records the wave-plate sequence realizing each coin
    (a ``PlateSequence`` per site); the noisy simulator perturbs those angles.
    """

    coins: Mapping[int, CoinOperator] = field(default_factory=dict)
    plates: Mapping[int, tuple] | None = None

    def __post_init__(self):
        coins = {}
        for x, m in self.coins.items():
            m = as_coin_operator(m)
            if not _is_unitary(m):
                raise ScheduleError(f"coin at site {x} is not unitary")
            coins[int(x)] = m
        object.__setattr__(self, "coins", dict(sorted(coins.items())))
        if self.plates is not None:
            object.__setattr__(
                self, "plates", {int(x): tuple(seq) for x, seq in sorted(self.plates.items())}
            )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SubStep):
            return NotImplemented
        return (
            self.coins.keys() == other.coins.keys()
            and all(np.array_equal(m, other.coins[x]) for x, m in self.coins.items())
            and self.plates == other.plates
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class WalkSchedule:
    """Ordered steps of sub-steps, starting from ``origin``."""

    steps: tuple[tuple[SubStep, ...], ...]
    origin: int = 0

    def __post_init__(self):
        steps = tuple(tuple(s) for s in self.steps)
        if not steps or any(len(s) == 0 for s in steps):
            raise ScheduleError("schedule needs at least one step, each with at least one sub-step")
        for s in steps:
            for sub in s:
                if not isinstance(sub, SubStep):
                    raise ScheduleError(f"expected SubStep, got {type(sub).__name__}")
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "origin", int(self.origin))

    @property
    def n_shifts(self) -> int:
        return sum(len(s) for s in self.steps)

    def substeps(self) -> Iterator[tuple[int, int, SubStep]]:
        """Yield ``(step_number, substep_number, SubStep)``, both 1-based."""
        for k, s in enumerate(self.steps, start=1):
            for j, sub in enumerate(s, start=1):
                yield k, j, sub

    def to_json(self) -> dict:
        steps = []
        for s in self.steps:
            subs = []
            for sub in s:
                entry: dict = {"coins": {str(x): _coin_to_json(m) for x, m in sub.coins.items()}}
                if sub.plates is not None:
                    entry["plates"] = {
                        str(x): [p.to_json() for p in seq] for x, seq in sub.plates.items()
                    }
                subs.append(entry)
            steps.append(subs)
        return {"origin": self.origin, "steps": steps}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()

    @classmethod
    def from_json(cls, data: Mapping) -> "WalkSchedule":
        from .waveplates import PlateSetting

        if not isinstance(data, Mapping):
            raise ScheduleError("schedule: top level must be an object")
        if "steps" not in data:
            raise ScheduleError("schedule: missing field 'steps'")
        origin = data.get("origin", 0)
        if isinstance(origin, bool) or not isinstance(origin, int):
            raise ScheduleError(f"schedule.origin: expected integer, got {origin!r}")
        raw_steps = data["steps"]
        if not isinstance(raw_steps, list):
            raise ScheduleError("schedule.steps: expected a list")
        steps = []
        for k, raw_step in enumerate(raw_steps):
            if not isinstance(raw_step, list):
                raise ScheduleError(f"schedule.steps[{k}]: expected a list of sub-steps")
            subs = []
            for j, raw_sub in enumerate(raw_step):
                where = f"schedule.steps[{k}][{j}]"
                if not isinstance(raw_sub, Mapping) or not isinstance(raw_sub.get("coins", {}), Mapping):
                    raise ScheduleError(f"{where}.coins: expected an object")
                coins = {}
                for key, raw in raw_sub.get("coins", {}).items():
                    try:
                        x = int(key)
                    except ValueError:
                        raise ScheduleError(f"{where}.coins: bad site key {key!r}") from None
                    coins[x] = _parse_coin(raw, f"{where}.coins[{key}]")
                plates = None
                if "plates" in raw_sub:
                    try:
                        plates = {
                            int(key): tuple(PlateSetting.from_json(p) for p in seq)
                            for key, seq in raw_sub["plates"].items()
                        }
                    except (TypeError, ValueError, KeyError, AttributeError) as exc:
                        raise ScheduleError(f"{where}.plates: {exc}") from None
                try:
                    subs.append(SubStep(coins, plates))
                except ScheduleError as exc:
                    raise ScheduleError(f"{where}.coins: {exc}") from None
            steps.append(subs)
        return cls(steps, origin)

    @classmethod
    def loads(cls, text: str) -> "WalkSchedule":
        return cls.from_json(json.loads(text))


def shift(state: WalkerState) -> WalkerState:
    """Move ``|H>`` amplitude one site right and ``|V>`` amplitude one site left."""
    out: dict[int, np.ndarray] = {}
    for x, (h, v) in state.items():
        if h != 0:
            out.setdefault(x + 1, np.zeros(2, dtype=np.complex128))[0] += h
        if v != 0:
            out.setdefault(x - 1, np.zeros(2, dtype=np.complex128))[1] += v
    return WalkerState(out)


def apply_coin_layer(state: WalkerState, layer: SubStep | Mapping[int, ArrayLike]) -> WalkerState:
    """Multiply the coin vector at every listed site by that site's coin."""
    if not isinstance(layer, SubStep):
        layer = SubStep(layer)
    coins = layer.coins
    return WalkerState({x: (coins[x] @ v if x in coins else v) for x, v in state.items()})


def step(state: WalkerState, step_spec: Iterable[SubStep]) -> WalkerState:
    """One full step: for each sub-step, its coin layer then a shift."""
    for sub in step_spec:
        state = shift(apply_coin_layer(state, sub))
    return state


def evolve(initial: WalkerState, schedule: WalkSchedule) -> WalkerState:
    """Apply every step of ``schedule`` in order."""
    state = initial
    for s in schedule.steps:
        state = step(state, s)
    return state


def position_distribution(state: WalkerState, tol: float = 1e-9) -> dict[int, float]:
    """
    Probability of finding the walker at each stored position.

    Raises
    ------
    ValueError
        If the state's norm deviates from one by more than ``tol``.
    """
    n2 = state.norm2()
    if abs(n2 - 1.0) > tol:
        raise ValueError(f"state is not normalized (norm^2 = {n2:.12g})")
    return {x: float(np.vdot(v, v).real) for x, v in state.items()}


def sic_schedule(with_plates: bool = True) -> WalkSchedule:
    """
    The three-step, two-sub-step schedule realizing the qubit SIC-POVM.

    Sub-step 1 acts at site 0, sub-step 2 at sites +1 and -1. With
    ``with_plates`` each coin also carries the wave-plate settings that realize
    it in the optical network (the step-3 site-0 coin is an HWP followed by a
    QWP in traversal order).
    """
    from .waveplates import PlateSetting

    a = COIN_ALIASES
    coins = [
        ({0: a["I"]}, {1: a["C1_2"], -1: a["X"]}),
        ({0: a["C2_1"]}, {1: a["C2_2"], -1: a["X"]}),
        ({0: a["C3_1"]}, {1: a["I"], -1: a["X"]}),
    ]
    hwp = lambda t: PlateSetting("HWP", t)  # noqa: E731
    qwp = lambda t: PlateSetting("QWP", t)  # noqa: E731
    atan_angle = float(np.degrees(np.arctan(1 / _S2)) / 2)
    plates = [
        ({0: ()}, {1: (hwp(-22.5),), -1: (hwp(45.0),)}),
        ({0: (hwp(67.5),)}, {1: (hwp(atan_angle),), -1: (hwp(45.0),)}),
        ({0: (hwp(52.5), qwp(45.0))}, {1: (), -1: (hwp(45.0),)}),
    ]
    steps = []
    for (c1, c2), (p1, p2) in zip(coins, plates):
        if with_plates:
            steps.append((SubStep(c1, p1), SubStep(c2, p2)))
        else:
            steps.append((SubStep(c1), SubStep(c2)))
    return WalkSchedule(steps, origin=0)


def identity_schedule(n_steps: int = 1, substeps: int = 2, origin: int = 0) -> WalkSchedule:
    """A schedule whose every coin is the identity (pure conditional shifts)."""
    return WalkSchedule([[SubStep({})] * substeps] * n_steps, origin=origin)
