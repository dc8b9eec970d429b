"""
End-to-end checks of the library against the embedded reference data.

Each ``criterion_*`` function returns a :class:`CriterionResult`; the
``verify-paper`` command and ``tests/test_acceptance.py`` both run them.
Tolerances are fixed here and nowhere else.
"""

from __future__ import annotations

import cmath
import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import make_init_state, make_sic_vector, projector, trace_distance
from .experiment import (
    NoiseModel,
    WalkerDensity,
    bootstrap_errors,
    counts_from_frequencies,
    evolve_density,
    l1_distance,
    sample_counts,
)
from .fixtures import Fixtures, theory_distribution
from .povm import canonical_sic_povm, match_tetrahedron, povm_elements, verify_sic
from .tomography import forward_probs, linear_inversion, mle_reconstruct
from .walk import WalkerState, evolve, sic_schedule, position_distribution
from .waveplates import TABLE_TOL, apply_sequence, verify_table

__all__ = ["CriterionResult", "CRITERIA", "run_all", "random_density", "random_pure"]


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    parts: tuple[tuple[str, bool, str], ...] = ()

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number}. {self.name}: {self.detail}"


def random_pure(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return v / np.linalg.norm(v)


def random_density(rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    r = g @ g.conj().T
    return r / np.trace(r).real


def _result(number, name, parts) -> CriterionResult:
    passed = all(ok for _, ok, _ in parts)
    bad = [f"{label}: {msg}" for label, ok, msg in parts if not ok]
    detail = "; ".join(bad) if bad else "; ".join(f"{label}: {msg}" for label, _, msg in parts[:3])
    return CriterionResult(number, name, passed, detail, tuple(parts))


def criterion_1(fx: Fixtures) -> CriterionResult:
    """Final states after three steps match the reference amplitudes."""
    parts = []
    sched = sic_schedule()
    t0 = time.perf_counter()
    finals = {i: evolve(WalkerState.localized(make_init_state(i)), sched) for i in range(1, 5)}
    elapsed = time.perf_counter() - t0
    for i, final in finals.items():
        expected = fx.final_states[i]
        sites = sorted(set(final) | set(expected))
        got = {x: complex(final[x][0]) for x in sites}
        v_leak = max(abs(final[x][1]) for x in sites)
        mod_err = max(abs(abs(got[x]) - abs(expected.get(x, 0))) for x in sites)
        ref = max(expected, key=lambda x: abs(expected[x]))
        phase_err = 0.0
        for x, a in expected.items():
            if abs(a) > 0:
                want = cmath.phase(a / expected[ref])
                have = cmath.phase(got[x] / got[ref]) if abs(got[x]) > 0 and abs(got[ref]) > 0 else math.inf
                phase_err = max(phase_err, abs((have - want + math.pi) % (2 * math.pi) - math.pi))
        forbidden = abs(final[fx.forbidden_site[i]]).max()
        ok = mod_err < 1e-10 and phase_err < 1e-10 and forbidden < 1e-12 and v_leak < 1e-10
        parts.append((f"psi_{i}", ok, f"|amp| err {mod_err:.1e}, phase err {phase_err:.1e}, forbidden {forbidden:.1e}"))
    parts.append(("runtime", elapsed < 0.5, f"{elapsed * 1e3:.1f} ms"))
    return _result(1, "final-state golden test", parts)


def criterion_2(fx: Fixtures) -> CriterionResult:
    """Extracted POVM equals the SIC tetrahedron under the reference assignment."""
    povm = povm_elements(sic_schedule())
    targets = [make_sic_vector(i) for i in range(1, 5)]
    assignment = match_tetrahedron(povm, targets)
    parts = [("assignment", assignment == fx.sic_assignment, str(dict(sorted(assignment.items()))))]
    err = max(
        np.abs(povm.elements[x] - 0.5 * projector(make_sic_vector(i))).max() for x, i in fx.sic_assignment.items()
    )
    parts.append(("elements", err < 1e-10, f"max entry err {err:.1e}"))
    others = [x for x in povm.positions if x not in fx.sic_assignment]
    stray = max((np.abs(povm.elements[x]).max() for x in others), default=0.0)
    parts.append(("support", stray < 1e-10, f"stray weight {stray:.1e}"))
    rep = verify_sic(povm, 1e-10)
    parts.append(("completeness", rep.completeness_residual < 1e-10, f"{rep.completeness_residual:.1e}"))
    off = rep.pairwise[~np.eye(len(rep.positions), dtype=bool)]
    overlap_err = float(np.abs(4 * off - 1 / 3).max())
    parts.append(("pairwise", overlap_err < 1e-10 and rep.is_sic, f"Tr(P_i P_j) err {overlap_err:.1e}"))
    return _result(2, "POVM identity", parts)


def criterion_3(fx: Fixtures, n_states: int = 100, seed: int = 3) -> CriterionResult:
    """Born rule on the extracted POVM reproduces the evolved distribution."""
    sched = sic_schedule()
    povm = povm_elements(sched)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_states):
        phi = random_pure(rng)
        dist = position_distribution(evolve(WalkerState.localized(phi), sched))
        probs = forward_probs(projector(phi), povm)
        for x in set(dist) | set(probs):
            worst = max(worst, abs(dist.get(x, 0.0) - probs.get(x, 0.0)))
    return _result(3, "measurement-model oracle", [("max deviation", worst < 1e-10, f"{worst:.1e} over {n_states} states")])


def criterion_4(fx: Fixtures) -> CriterionResult:
    """The plate table reproduces the coins; preparation plates produce psi_i."""
    sched = sic_schedule(with_plates=False)
    rep = verify_table(sched, fx.plate_table, tol=TABLE_TOL, try_orders=True)
    parts = []
    for e in rep.entries:
        parts.append((f"step {e.step} site {e.site}", e.passed, f"{e.distance:.2e}"))
    if rep.missing:
        parts.append(("missing", False, str(list(rep.missing))))
    h = np.array([1, 0], dtype=complex)
    for i, plate in fx.preparation.items():
        ov = abs(np.vdot(make_init_state(i), apply_sequence([plate]) @ h))
        parts.append((f"prep psi_{i}", ov >= 1 - 1e-4, f"overlap {ov:.8f}"))
    worst = max(e.distance for e in rep.entries)
    res = _result(4, "plate table verification", parts)
    if res.passed:
        res = CriterionResult(4, res.name, True, f"{len(rep.entries)} entries, worst distance {worst:.2e}; 4 preparations", res.parts)
    return res


def criterion_5(fx: Fixtures) -> CriterionResult:
    """1-norm distance of the measured rows to theory matches the reference d."""
    parts = []
    for i, (row, d_pub) in fx.measured_rows.items():
        d = l1_distance(row, theory_distribution(i, fx), tol=1e-3)
        parts.append((f"psi_{i}", abs(d - d_pub) <= 5e-4, f"d = {d:.5f} vs {d_pub}"))
    return _result(5, "1-norm distance reproduction", parts)


def criterion_6(fx: Fixtures, n_seeds: int = 200) -> CriterionResult:
    """Noise sanity: ideal model exact; nominal noise gives a bracketed d."""
    sched = sic_schedule()
    t0 = time.perf_counter()
    parts = []
    for i in range(1, 5):
        rho0 = WalkerDensity.from_coin(projector(make_init_state(i)))
        ideal = evolve_density(rho0, sched, NoiseModel(1.0, 0.0, 0)).position_distribution()
        d0 = l1_distance(ideal, theory_distribution(i, fx))
        parts.append((f"ideal psi_{i}", d0 < 1e-10, f"d = {d0:.1e}"))
    for i in range(1, 5):
        rho0 = WalkerDensity.from_coin(projector(make_init_state(i)))
        th = theory_distribution(i, fx)
        ds = []
        for seed in range(n_seeds):
            dist = evolve_density(rho0, sched, NoiseModel(fx.visibility, 0.1, seed)).position_distribution()
            rec = sample_counts(dist, fx.shots, seed)
            ds.append(l1_distance(rec.frequencies(), th))
        med = float(np.median(ds))
        parts.append((f"noisy psi_{i}", 0.003 <= med <= 0.08, f"median d = {med:.4f}"))
    elapsed = time.perf_counter() - t0
    parts.append(("runtime", elapsed < 30.0, f"{elapsed:.1f} s"))
    return _result(6, "noise sanity", parts)


def criterion_7(fx: Fixtures, n_trials: int = 100, seed: int = 7) -> CriterionResult:
    """Linear inversion is exact; MLE recovers pure states at the nominal count level."""
    rng = np.random.default_rng(seed)
    sic = canonical_sic_povm()
    worst = 0.0
    for _ in range(n_trials):
        rho = random_density(rng)
        back = linear_inversion(forward_probs(rho, sic)).rho
        worst = max(worst, float(np.abs(back - rho).max()))
    parts = [("linear inversion", worst < 1e-10, f"max err {worst:.1e}")]

    povm = povm_elements(sic_schedule())
    good, monotone = 0, True
    for trial in range(n_trials):
        psi = random_pure(rng)
        rho = projector(psi)
        rec = sample_counts(forward_probs(rho, povm), fx.shots, seed=1000 + trial)
        est = mle_reconstruct(rec, povm)
        good += trace_distance(est.rho, rho) < 0.03
        monotone &= bool(np.all(np.diff(est.loglik_history) >= 0))
    parts.append(("MLE accuracy", good >= 0.95 * n_trials, f"{good}/{n_trials} within 0.03"))
    parts.append(("MLE monotone", monotone, "log-likelihood non-decreasing" if monotone else "decrease seen"))
    return _result(7, "tomography round-trip", parts)


def criterion_8(fx: Fixtures) -> CriterionResult:
    """Bootstrap error bars match the binomial standard deviation."""
    n = fx.shots
    rec = counts_from_frequencies({0: 1 / 3, 2: 1 / 3, 4: 1 / 3}, n)
    sig = bootstrap_errors(rec, trials=2000, seed=8)
    want = math.sqrt((1 / 3) * (2 / 3) / n)
    rel = max(abs(s / want - 1) for s in sig.values())
    return _result(8, "statistical calibration", [("sigma", rel <= 0.2, f"sigma {np.mean(list(sig.values())):.5f} vs {want:.5f} ({rel:.1%})")])


CRITERIA: dict[int, Callable[[Fixtures], CriterionResult]] = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
}


def run_all(fixtures: Fixtures | None = None) -> list[CriterionResult]:
    fx = fixtures or Fixtures()
    return [fn(fx) for fn in CRITERIA.values()]
