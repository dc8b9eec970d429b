import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from walkpovm.core import KET_H, KET_V, SIGMA_X, make_init_state
from walkpovm.walk import (
    COIN_ALIASES,
    ScheduleError,
    SubStep,
    WalkerState,
    WalkSchedule,
    apply_coin_layer,
    evolve,
    identity_schedule,
    sic_schedule,
    position_distribution,
    shift,
    step,
)

from .conftest import haar_unitary, random_pure
from .oracles import dense_vector, dense_walk_unitary, sic_coin_layers

S2 = np.sqrt(2)


def as_dict(state):
    return {x: np.asarray(v) for x, v in state.items()}


def assert_state_close(a, b, atol=1e-12):
    for x in set(a) | set(b):
        np.testing.assert_allclose(a[x], b[x], atol=atol)


def test_shift_examples():
    assert_state_close(shift(WalkerState.localized(KET_H)), WalkerState({1: KET_H}))
    assert_state_close(shift(WalkerState.localized(KET_V)), WalkerState({-1: KET_V}))
    plus = WalkerState.localized(np.array([1, 1]) / S2)
    out = shift(plus)
    assert sorted(out) == [-1, 1]
    np.testing.assert_allclose(out[1], [1 / S2, 0])
    np.testing.assert_allclose(out[-1], [0, 1 / S2])


def test_coin_layer_examples():
    out = apply_coin_layer(WalkerState({-1: KET_V}), {-1: SIGMA_X})
    assert_state_close(out, WalkerState({-1: KET_H}))
    out = apply_coin_layer(WalkerState.localized(KET_H), {1: SIGMA_X})
    assert_state_close(out, WalkerState.localized(KET_H))
    # multiply the step-1, site +1 coin onto |H>
    out = apply_coin_layer(WalkerState({1: KET_H}), {1: COIN_ALIASES["C1_2"]})
    np.testing.assert_allclose(out[1], np.array([1, -1]) / S2, atol=1e-15)


def test_non_unitary_coin_rejected():
    with pytest.raises(ScheduleError):
        apply_coin_layer(WalkerState.localized(KET_H), {0: np.diag([1, 0.5])})


def test_step_examples():
    sched = sic_schedule()
    out = step(WalkerState.localized(KET_V), sched.steps[0])
    assert_state_close(out, WalkerState.localized(KET_H))
    out = step(WalkerState.localized(KET_H), identity_schedule().steps[0])
    assert_state_close(out, WalkerState({2: KET_H}))


def test_step_preserves_norm(rng):
    sched = WalkSchedule([[SubStep({x: haar_unitary(rng) for x in range(-3, 4)})] * 2])
    s = WalkerState({x: random_pure(rng) / np.sqrt(5) for x in range(-2, 3)})
    assert step(s, sched.steps[0]).norm2() == pytest.approx(s.norm2(), abs=1e-12)


@pytest.mark.parametrize("i", [1, 2, 3, 4])
def test_evolve_matches_dense_oracle(i):
    lo, hi = -7, 7
    u = dense_walk_unitary(sic_coin_layers(), lo, hi)
    want = u @ dense_vector({0: make_init_state(i)}, lo, hi)
    got = evolve(WalkerState.localized(make_init_state(i)), sic_schedule())
    np.testing.assert_allclose(dense_vector(as_dict(got), lo, hi), want, atol=1e-14)


def test_final_state_examples():
    s3 = np.sqrt(3)
    out = evolve(WalkerState.localized(make_init_state(1)), sic_schedule())
    want = {4: -1 / s3, 2: -1j / s3, 0: 1j / s3}
    for x, a in want.items():
        np.testing.assert_allclose(out[x], [a, 0], atol=1e-15)
    assert sorted(out) == [0, 2, 4]
    out = evolve(WalkerState.localized(make_init_state(2)), sic_schedule())
    want = {6: 1 / s3, 2: -np.exp(-1j * np.pi / 3) / s3, 0: -np.exp(1j * np.pi / 3) / s3}
    for x, a in want.items():
        np.testing.assert_allclose(out[x], [a, 0], atol=1e-15)
    out = evolve(WalkerState.localized(make_init_state(4)), sic_schedule())
    assert np.abs(out[2]).max() < 1e-12


def test_position_distribution_examples():
    s = sic_schedule()
    d = position_distribution(evolve(WalkerState.localized(make_init_state(1)), s))
    assert d.get(6, 0.0) == 0.0
    for x in (0, 2, 4):
        assert d[x] == pytest.approx(1 / 3, abs=1e-15)
    assert position_distribution(WalkerState.localized(KET_H)) == {0: 1.0}
    d = position_distribution(evolve(WalkerState.localized(make_init_state(3)), s))
    assert d.get(0, 0.0) == 0.0
    assert [d[x] for x in (2, 4, 6)] == pytest.approx([1 / 3] * 3, abs=1e-15)


def test_position_distribution_rejects_unnormalized():
    with pytest.raises(ValueError):
        position_distribution(WalkerState.localized([1, 1]))


def test_forbidden_sites_exact():
    for i, x in zip(range(1, 5), (6, 4, 0, 2)):
        out = evolve(WalkerState.localized(make_init_state(i)), sic_schedule())
        assert np.abs(out[x]).max() < 1e-12


def _random_schedule(rng, n_steps, n_sub):
    return WalkSchedule(
        [[SubStep({x: haar_unitary(rng) for x in range(-4, 5)}) for _ in range(n_sub)] for _ in range(n_steps)]
    )


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_steps=st.integers(1, 4), n_sub=st.integers(1, 3))
def test_unitarity_and_parity(seed, n_steps, n_sub):
    rng = np.random.default_rng(seed)
    sched = _random_schedule(rng, n_steps, n_sub)
    out = evolve(WalkerState.localized(random_pure(rng)), sched)
    assert out.norm2() == pytest.approx(1.0, abs=1e-12)
    k = n_steps * n_sub
    assert all((x - k) % 2 == 0 and abs(x) <= k for x in out)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_linearity(seed):
    rng = np.random.default_rng(seed)
    sched = _random_schedule(rng, 3, 2)
    s1 = WalkerState({x: random_pure(rng) for x in (-1, 0, 2)})
    s2 = WalkerState({x: random_pure(rng) for x in (0, 1)})
    a, b = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
    lhs = evolve(a * s1 + b * s2, sched)
    rhs = a * evolve(s1, sched) + b * evolve(s2, sched)
    assert_state_close(lhs, rhs, atol=1e-12)


def test_sic_support_is_even_and_bounded():
    for i in range(1, 5):
        out = evolve(WalkerState.localized(make_init_state(i)), sic_schedule())
        assert all(x % 2 == 0 and -6 <= x <= 6 for x in out)


def test_more_than_two_substeps():
    sched = identity_schedule(n_steps=2, substeps=3)
    out = evolve(WalkerState.localized(KET_V), sched)
    assert sorted(out) == [-6]


def test_state_pruning():
    s = WalkerState({0: [1e-16, 0], 1: [1, 0]})
    assert list(s) == [1]
    assert np.array_equal(s[5], [0, 0])


def test_schedule_json_round_trip_is_bit_exact(rng):
    sched = _random_schedule(rng, 2, 2)
    text = sched.dumps()
    back = WalkSchedule.loads(text)
    assert back.dumps() == text
    for (_, _, a), (_, _, b) in zip(sched.substeps(), back.substeps()):
        for x in a.coins:
            assert np.array_equal(a.coins[x], b.coins[x])
    sched = sic_schedule()
    assert WalkSchedule.loads(sched.dumps()) == sched


def test_schedule_aliases_expand():
    doc = {"origin": 0, "steps": [[{"coins": {"0": "I"}}, {"coins": {"1": "C1_2", "-1": "X"}}],
                                  [{"coins": {"0": "H2_1"}}, {"coins": {"1": "H2_2", "-1": "X"}}],
                                  [{"coins": {"0": "C3_1"}}, {"coins": {"1": "I", "-1": "X"}}]]}
    sched = WalkSchedule.from_json(doc)
    assert sched.digest() == sic_schedule(with_plates=False).digest()


def test_schedule_accepts_nested_pairs():
    m = [[[0, 0], [1, 0]], [[1, 0], [0, 0]]]
    sched = WalkSchedule.from_json({"steps": [[{"coins": {"0": m}}]]})
    assert np.array_equal(sched.steps[0][0].coins[0], SIGMA_X)


@pytest.mark.parametrize(
    "doc, field",
    [
        ({}, "steps"),
        ({"steps": []}, "at least one step"),
        ({"steps": [[{"coins": {"0": "Q"}}]]}, "steps[0][0].coins[0]"),
        ({"steps": [[{"coins": {"a": "X"}}]]}, "bad site key"),
        ({"steps": [[{"coins": {"0": [[1, 0]]}}]]}, "steps[0][0].coins[0]"),
        ({"steps": [[{"coins": {"0": [[2, 0], [0, 0], [0, 0], [1, 0]]}}]]}, "not unitary"),
        ({"origin": "x", "steps": [[{}]]}, "origin"),
    ],
)
def test_schedule_errors_name_field(doc, field):
    with pytest.raises(ScheduleError, match=field.replace("[", r"\[").replace("]", r"\]")):
        WalkSchedule.from_json(doc)


def test_walker_state_json_round_trip(rng):
    s = WalkerState({x: random_pure(rng) for x in (-3, 0, 4)})
    back = WalkerState.from_json(json.loads(json.dumps(s.to_json())))
    assert back == s
