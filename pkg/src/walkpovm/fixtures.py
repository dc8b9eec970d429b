"""Reference data for the three-step SIC walk, embedded so that
verification runs without external files."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .waveplates import PlateSetting

_L = lambda t: PlateSetting("HWP", t)  # noqa: E731
_Q = lambda t: PlateSetting("QWP", t)  # noqa: E731

_s3 = 1 / np.sqrt(3)

# (step, site) -> plates, angles rounded to 0.01 degree; an empty tuple means no plate.
PLATE_TABLE = {
    (1, 0): (),
    (1, 1): (_L(-22.5),),
    (1, -1): (_L(45.0),),
    (2, 0): (_L(67.5),),
    (2, 1): (_L(17.63),),
    (2, -1): (_L(45.0),),
    (3, 0): (_L(52.5), _Q(45.0)),
    (3, 1): (),
    (3, -1): (_L(45.0),),
}

# initial state index -> preparation plate acting on |H>
PREPARATION = {
    1: _L(45.0),
    2: _L(-17.63),
    3: _Q(-152.63),
    4: _Q(117.37),
}

# measured P(x) for x = 0, 2, 4, 6 and the reported 1-norm distance d
MEASURED_ROWS = {
    1: ({0: 0.3246, 2: 0.3277, 4: 0.3327, 6: 0.0149}, 0.0149),
    2: ({0: 0.3398, 2: 0.3135, 4: 0.0345, 6: 0.3123}, 0.0401),
    3: ({0: 0.0335, 2: 0.3137, 4: 0.3432, 6: 0.3104}, 0.0425),
    4: ({0: 0.3158, 2: 0.0329, 4: 0.3419, 6: 0.3094}, 0.0415),
}

# final walker amplitudes (coin |H>) after three steps from |0>|psi_i>
FINAL_STATES = {
    1: {4: -_s3, 2: -1j * _s3, 0: 1j * _s3},
    2: {6: _s3, 2: -np.exp(-1j * np.pi / 3) * _s3, 0: -np.exp(1j * np.pi / 3) * _s3},
    3: {6: _s3, 4: -np.exp(-1j * np.pi / 6) * _s3, 2: -_s3},
    4: {6: _s3, 4: -np.exp(1j * np.pi / 6) * _s3, 0: -_s3},
}

FORBIDDEN_SITE = {1: 6, 2: 4, 3: 0, 4: 2}

# position -> SIC index
SIC_ASSIGNMENT = {6: 1, 4: 2, 0: 3, 2: 4}

VISIBILITY = 0.992
SHOTS = 32_000


@dataclass
class Fixtures:
    plate_table: dict = field(default_factory=lambda: dict(PLATE_TABLE))
    preparation: dict = field(default_factory=lambda: dict(PREPARATION))
    measured_rows: dict = field(default_factory=lambda: dict(MEASURED_ROWS))
    final_states: dict = field(default_factory=lambda: {k: dict(v) for k, v in FINAL_STATES.items()})
    forbidden_site: dict = field(default_factory=lambda: dict(FORBIDDEN_SITE))
    sic_assignment: dict = field(default_factory=lambda: dict(SIC_ASSIGNMENT))
    visibility: float = VISIBILITY
    shots: int = SHOTS


def theory_distribution(i: int, fixtures: Fixtures | None = None) -> dict[int, float]:
    fx = fixtures or Fixtures()
    return {x: abs(a) ** 2 for x, a in fx.final_states[i].items()}
