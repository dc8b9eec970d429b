import numpy as np
import pytest

from walkpovm.core import make_init_state, make_sic_vector, projector, trace_distance
from walkpovm.experiment import CountRecord, sample_counts
from walkpovm.fixtures import SHOTS, SIC_ASSIGNMENT
from walkpovm.povm import PovmSet, canonical_sic_povm, povm_elements
from walkpovm.tomography import Reconstruction, forward_probs, linear_inversion, mle_reconstruct, probs_by_index
from walkpovm.walk import sic_schedule

from .conftest import random_pure

SIC_POVM = povm_elements(sic_schedule())
SIC = canonical_sic_povm()


def _random_density(rng):
    g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    r = g @ g.conj().T
    return r / np.trace(r).real


def _sic_index_probs(rho):
    return probs_by_index(forward_probs(rho, SIC), {x: x for x in SIC.positions})


def test_canonical_povm_keys():
    assert SIC.positions == [1, 2, 3, 4]


def test_forward_maximally_mixed():
    assert forward_probs(np.eye(2) / 2, SIC) == pytest.approx({i: 0.25 for i in range(1, 5)}, abs=1e-15)


def test_forward_psi1_sic_povm():
    p = forward_probs(projector(make_init_state(1)), SIC_POVM)
    assert p == pytest.approx({0: 1 / 3, 2: 1 / 3, 4: 1 / 3, 6: 0.0}, abs=1e-12)


def test_forward_xi1():
    p = forward_probs(projector(make_sic_vector(1)), SIC_POVM)
    inv = {i: x for x, i in SIC_ASSIGNMENT.items()}
    assert p[inv[1]] == pytest.approx(0.5, abs=1e-12)
    for i in (2, 3, 4):
        assert p[inv[i]] == pytest.approx(1 / 6, abs=1e-12)


def test_forward_validation():
    with pytest.raises(ValueError):
        forward_probs(np.diag([1.5, -0.5]), SIC)
    with pytest.raises(ValueError):
        forward_probs(np.eye(2), SIC)
    with pytest.raises(ValueError):
        forward_probs(np.eye(2) / 2, PovmSet({0: np.eye(2) / 2}))
    assert sum(forward_probs(np.diag([1.5, -0.5]), SIC, validate=False).values()) == pytest.approx(1.0)


def test_linear_examples():
    np.testing.assert_allclose(linear_inversion({i: 0.25 for i in range(1, 5)}).rho, np.eye(2) / 2, atol=1e-15)
    r = linear_inversion({1: 1 / 2, 2: 1 / 6, 3: 1 / 6, 4: 1 / 6})
    np.testing.assert_allclose(r.rho, projector(make_sic_vector(1)), atol=1e-15)
    assert r.method == "linear" and r.physical


def test_linear_round_trip_states(rng):
    for _ in range(100):
        rho = _random_density(rng)
        np.testing.assert_allclose(linear_inversion(_sic_index_probs(rho)).rho, rho, atol=1e-10)


def test_linear_round_trip_hermitian_unit_trace(rng):
    # informational completeness holds beyond the state space
    for _ in range(100):
        h = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        h = h + h.conj().T
        h = h - (np.trace(h) - 1) * np.eye(2) / 2
        p = probs_by_index(forward_probs(h, SIC, validate=False), {x: x for x in SIC.positions})
        np.testing.assert_allclose(linear_inversion(p).rho, h, atol=1e-10)


def test_linear_reports_unphysical():
    r = linear_inversion({1: 0.7, 2: 0.3, 3: 0.0, 4: 0.0})
    assert not r.physical
    assert r.eigenvalues[0] < 0
    assert np.trace(r.rho).real == pytest.approx(1.0)


@pytest.mark.parametrize("probs", [{1: 0.5, 2: 0.5, 3: 0.5, 4: 0.5}, {1: 1.0, 2: 0.0, 3: 0.0}])
def test_linear_rejects(probs):
    with pytest.raises(ValueError):
        linear_inversion(probs)


def test_probs_by_index_sic():
    p = probs_by_index(forward_probs(projector(make_sic_vector(2)), SIC_POVM), SIC_ASSIGNMENT)
    assert p[2] == pytest.approx(0.5)


def test_mle_fixed_point(backend):
    rec = CountRecord({x: 8000 for x in SIC_POVM.positions})
    r = mle_reconstruct(rec, SIC_POVM, backend=backend)
    np.testing.assert_allclose(r.rho, np.eye(2) / 2, atol=1e-8)
    assert r.status == "converged" and r.converged


def test_mle_zero_count_outcome(backend):
    rec = CountRecord({0: 10000, 2: 10000, 4: 10000, 6: 0})
    r = mle_reconstruct(rec, SIC_POVM, backend=backend)
    assert r.eigenvalues[0] >= -1e-12
    assert np.trace(r.rho).real == pytest.approx(1.0, abs=1e-10)
    assert trace_distance(r.rho, projector(make_init_state(1))) < 1e-3


def test_mle_psi2_at_nominal_counts(backend):
    rho = projector(make_init_state(2))
    p = forward_probs(rho, SIC_POVM)
    good = sum(
        trace_distance(mle_reconstruct(sample_counts(p, SHOTS, s), SIC_POVM, backend=backend).rho, rho) < 0.03
        for s in range(100)
    )
    assert good >= 95


def test_mle_invariants_and_monotone(rng, backend):
    for seed in range(30):
        rho = projector(random_pure(rng)) if seed % 2 else _random_density(rng)
        rec = sample_counts(forward_probs(rho, SIC_POVM), int(rng.integers(50, 5000)), seed)
        r = mle_reconstruct(rec, SIC_POVM, backend=backend)
        assert np.all(np.diff(r.loglik_history) >= 0)
        assert np.abs(r.rho - r.rho.conj().T).max() < 1e-10
        assert np.trace(r.rho).real == pytest.approx(1.0, abs=1e-10)
        assert r.eigenvalues[0] >= -1e-10
        assert r.iterations == len(r.loglik_history) - 1


def test_mle_max_iter_flag(backend):
    rec = sample_counts(forward_probs(projector(make_init_state(3)), SIC_POVM), 1000, 0)
    r = mle_reconstruct(rec, SIC_POVM, max_iter=2, backend=backend)
    assert r.status == "max_iter" and not r.converged
    assert r.iterations == 2


def test_mle_input_errors():
    with pytest.raises(ValueError):
        mle_reconstruct(CountRecord({0: 0}), SIC_POVM)
    with pytest.raises(ValueError):
        mle_reconstruct(CountRecord({1: 5, 0: 5}), SIC_POVM)
    with pytest.raises(ValueError):
        mle_reconstruct(CountRecord({0: 5}), PovmSet({0: np.eye(2) / 2}))


def test_mle_error_scaling(rng):
    # median trace distance should fall like 1/sqrt(N)
    ns = [1_000, 10_000, 100_000]
    states = [projector(random_pure(rng)) for _ in range(40)]
    med = []
    for n in ns:
        ds = [
            trace_distance(mle_reconstruct(sample_counts(forward_probs(r, SIC_POVM), n, 17 * k + n), SIC_POVM).rho, r)
            for k, r in enumerate(states)
        ]
        med.append(np.median(ds))
    slope = np.polyfit(np.log(ns), np.log(med), 1)[0]
    assert -1.0 <= slope <= -0.25


def test_reconstruction_json():
    r = linear_inversion({i: 0.25 for i in range(1, 5)})
    d = r.to_json()
    assert d["method"] == "linear" and d["physical"]
    assert d["rho"][0][0] == pytest.approx([0.5, 0.0], abs=1e-15)
    assert type(d["rho"][0][0][0]) is float
    assert isinstance(r, Reconstruction)
