"""Qubit SIC-POVM realized by a three-step split-step photonic quantum walk."""

__version__ = "0.1.0"

from .core import (
    inner,
    make_init_state,
    make_sic_vector,
    matrix_checks,
    phase_invariant_distance,
    projector,
    trace_distance,
)
from .experiment import (
    CountRecord,
    NoiseModel,
    WalkerDensity,
    bootstrap_errors,
    evolve_density,
    l1_distance,
    sample_counts,
)
from .kernels import BACKEND
from .povm import PovmSet, kraus_at, match_tetrahedron, povm_elements, verify_sic
from .tomography import Reconstruction, forward_probs, linear_inversion, mle_reconstruct
from .walk import (
    SubStep,
    WalkerState,
    WalkSchedule,
    apply_coin_layer,
    evolve,
    sic_schedule,
    position_distribution,
    shift,
    step,
)
from .waveplates import PlateSetting, apply_sequence, compile_coin, hwp, qwp, solve_preparation, verify_table

__all__ = [
    "BACKEND",
    "CountRecord",
    "NoiseModel",
    "PlateSetting",
    "PovmSet",
    "Reconstruction",
    "SubStep",
    "WalkSchedule",
    "WalkerDensity",
    "WalkerState",
    "apply_coin_layer",
    "apply_sequence",
    "bootstrap_errors",
    "compile_coin",
    "evolve",
    "evolve_density",
    "forward_probs",
    "hwp",
    "inner",
    "kraus_at",
    "l1_distance",
    "linear_inversion",
    "make_init_state",
    "make_sic_vector",
    "match_tetrahedron",
    "matrix_checks",
    "mle_reconstruct",
    "sic_schedule",
    "phase_invariant_distance",
    "position_distribution",
    "povm_elements",
    "projector",
    "qwp",
    "sample_counts",
    "shift",
    "solve_preparation",
    "step",
    "trace_distance",
    "verify_sic",
    "verify_table",
]
