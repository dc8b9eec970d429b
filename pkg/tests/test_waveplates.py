import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from walkpovm.core import IDENTITY, KET_H, SIGMA_X, make_init_state, phase_invariant_distance
from walkpovm.fixtures import PLATE_TABLE
from walkpovm.walk import COIN_ALIASES, sic_schedule
from walkpovm.waveplates import (
    CompileError,
    PlateSetting,
    apply_sequence,
    compile_coin,
    hwp,
    qwp,
    solve_preparation,
    verify_table,
)

from .conftest import haar_unitary, random_pure

H, Q = (lambda t: PlateSetting("HWP", t)), (lambda t: PlateSetting("QWP", t))
S2 = np.sqrt(2)
ARCTAN_ANGLE = np.degrees(np.arctan(1 / S2)) / 2  # 17.632...


def test_hwp_examples():
    np.testing.assert_allclose(hwp(45), SIGMA_X, atol=1e-15)
    np.testing.assert_allclose(hwp(0), np.diag([1, -1]))
    np.testing.assert_allclose(hwp(-22.5), np.array([[1, -1], [-1, -1]]) / S2, atol=1e-15)
    assert np.linalg.det(hwp(13.0)) == pytest.approx(-1)


def test_qwp_examples():
    np.testing.assert_allclose(qwp(0), np.diag([1, 1j]))
    np.testing.assert_allclose(qwp(90), np.diag([1j, 1]), atol=1e-15)
    np.testing.assert_allclose(qwp(45), 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]]), atol=1e-15)


@settings(max_examples=100)
@given(theta=st.floats(-720, 720))
def test_plate_properties(theta):
    h, q = hwp(theta), qwp(theta)
    assert np.abs(h.conj().T @ h - IDENTITY).max() < 1e-12
    assert np.abs(h - h.conj().T).max() < 1e-12
    assert np.abs(h @ h - IDENTITY).max() < 1e-12
    assert np.abs(q.conj().T @ q - IDENTITY).max() < 1e-12
    assert phase_invariant_distance(q @ q, hwp(theta)) < 1e-12


def test_plate_angle_normalized():
    assert PlateSetting("hwp", 190).angle == pytest.approx(-170)
    assert PlateSetting("QWP", -180).angle == -180
    assert PlateSetting("QWP", 180).angle == -180
    assert PlateSetting("HWP", 17.63).angle == 17.63
    with pytest.raises(ValueError):
        PlateSetting("LWP", 0)


def test_apply_sequence_examples():
    np.testing.assert_allclose(apply_sequence([H(45), H(45)]), IDENTITY, atol=1e-15)
    assert phase_invariant_distance(apply_sequence([H(52.5), Q(45)]), COIN_ALIASES["C3_1"]) < 1e-12
    np.testing.assert_array_equal(apply_sequence([]), IDENTITY)


def test_apply_sequence_order():
    # last plate leftmost
    np.testing.assert_allclose(apply_sequence([H(10), Q(30)]), qwp(30) @ hwp(10))


def test_preparation_examples():
    seq = solve_preparation(make_init_state(1))
    assert len(seq) == 1 and seq[0].kind == "HWP" and seq[0].angle == pytest.approx(45, abs=1e-9)
    seq = solve_preparation(make_init_state(2))
    assert seq[0].kind == "HWP" and len(seq) == 1
    assert seq[0].angle == pytest.approx(-17.63, abs=0.01)
    for i, ref_angle in ((3, -152.63), (4, 117.37)):
        seq = solve_preparation(make_init_state(i))
        assert len(seq) == 1 and seq[0].kind == "QWP"
        # QWP angles are defined modulo 180 degrees
        assert (seq[0].angle - ref_angle + 90) % 180 - 90 == pytest.approx(0, abs=0.01)


def test_reference_preparation_angles_produce_states():
    for i, plate in ((1, H(45)), (2, H(-17.63)), (3, Q(-152.63)), (4, Q(117.37))):
        ov = abs(np.vdot(make_init_state(i), plate.matrix() @ KET_H))
        assert ov >= 1 - 1e-4


def test_preparation_round_trip(rng):
    for _ in range(200):
        target = random_pure(rng)
        seq = solve_preparation(target)
        assert len(seq) <= 2
        assert abs(np.vdot(target, apply_sequence(seq) @ KET_H)) >= 1 - 1e-9


def test_preparation_general_source(rng):
    for _ in range(20):
        src, target = random_pure(rng), random_pure(rng)
        seq = solve_preparation(target, source=src)
        assert abs(np.vdot(target, apply_sequence(seq) @ src)) >= 1 - 1e-9


def test_preparation_rejects_unnormalized():
    with pytest.raises(ValueError):
        solve_preparation([1, 1])


def test_compile_examples():
    assert compile_coin(SIGMA_X) == (H(45),)
    seq = compile_coin(COIN_ALIASES["C2_2"])
    assert len(seq) == 1 and seq[0].kind == "HWP"
    assert seq[0].angle == pytest.approx(17.63, abs=0.01)
    seq = compile_coin(COIN_ALIASES["C3_1"])
    assert 2 <= len(seq) <= 3
    assert phase_invariant_distance(apply_sequence(seq), COIN_ALIASES["C3_1"]) < 1e-8
    assert compile_coin(IDENTITY) == ()


def test_compile_rejects_non_unitary():
    with pytest.raises(CompileError):
        compile_coin(np.diag([1, 2]))


def test_compile_round_trip_haar(rng):
    for _ in range(200):
        u = haar_unitary(rng)
        seq = compile_coin(u)
        assert len(seq) <= 3
        assert phase_invariant_distance(apply_sequence(seq), u) < 1e-8


def test_compile_three_plate_form_only(rng):
    for _ in range(50):
        u = haar_unitary(rng)
        seq = compile_coin(u, max_plates=3)
        assert phase_invariant_distance(apply_sequence(seq), u) < 1e-8


def test_compile_max_plates_one_fails_for_generic(rng):
    with pytest.raises(CompileError):
        compile_coin(haar_unitary(rng), max_plates=1)


def test_compile_two_plate_targets(rng):
    for _ in range(10):
        a, b = rng.uniform(-90, 90, size=2)
        u = qwp(b) @ hwp(a)
        seq = compile_coin(u)
        assert len(seq) <= 2
        assert phase_invariant_distance(apply_sequence(seq), u) < 1e-8


@pytest.mark.parametrize("step", [1, 2, 3])
def test_table_i_rows(step):
    sched = sic_schedule(with_plates=False)
    rows = {k: v for k, v in PLATE_TABLE.items() if k[0] == step}
    rep = verify_table(sched, rows)
    assert all(e.passed for e in rep.entries)


def test_table_step3_order_is_hwp_first():
    rep = verify_table(sic_schedule(with_plates=False), {(3, 0): PLATE_TABLE[(3, 0)]}, try_orders=True)
    e = rep.entries[0]
    assert e.order == (0, 1) and e.distance < 1e-12
    # the other traversal order does not realize the coin
    rev = verify_table(sic_schedule(with_plates=False), {(3, 0): PLATE_TABLE[(3, 0)][::-1]}, try_orders=False)
    assert not rev.passed


def test_table_reports_missing_entries():
    rep = verify_table(sic_schedule(with_plates=False), {(1, 1): (H(-22.5),)})
    assert (2, 0) in rep.missing and (3, 0) in rep.missing
    assert not rep.passed


def test_table_detects_wrong_angle():
    rep = verify_table(sic_schedule(with_plates=False), {**PLATE_TABLE, (2, 1): (H(18.0),)})
    bad = [e for e in rep.entries if not e.passed]
    assert [(e.step, e.site) for e in bad] == [(2, 1)]


def test_compile_sic_schedule_reproduces_table():
    sched = sic_schedule(with_plates=False)
    for k, _, sub in sched.substeps():
        for x, coin in sub.coins.items():
            seq = compile_coin(coin)
            assert phase_invariant_distance(apply_sequence(seq), coin) < 1e-8
            assert len(seq) <= len(PLATE_TABLE[(k, x)])
    assert compile_coin(COIN_ALIASES["C1_2"])[0].angle == pytest.approx(-22.5)
    assert ARCTAN_ANGLE == pytest.approx(17.63, abs=0.005)
