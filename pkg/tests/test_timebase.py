import itertools

import pytest
from hypothesis import given, strategies as st

from otpforge.timebase import (
    STEP, SyncModel, delta_probability, fit_phases, parse_duration, parse_instant, press_schedule,
)

phases = st.integers(0, STEP - 1)
instants = st.integers(0, 10**9)


def test_phase_bounds():
    SyncModel(0), SyncModel(63)
    for bad in (-1, 64):
        with pytest.raises(ValueError):
            SyncModel(bad)


def test_reversed_arguments_raise():
    with pytest.raises(ValueError):
        SyncModel(3).step_delta(10, 11)


def test_zero_elapsed_is_zero():
    assert SyncModel(17).step_delta(500, 500) == 0


@given(phases, instants, st.integers(0, 10**6), st.integers(0, 10**6))
def test_additive(phase, t0, d1, d2):
    m = SyncModel(phase)
    t1, t2 = t0 + d1, t0 + d1 + d2
    assert m.step_delta(t2, t0) == m.step_delta(t2, t1) + m.step_delta(t1, t0)


@given(phases, instants, st.integers(0, 10**6))
def test_two_valued(phase, t, d):
    f = SyncModel(phase).step_delta(t + d, t)
    assert d // STEP <= f <= -(-d // STEP)


def test_delta_probability_matches_phase_enumeration():
    # over all phases, the fraction where the count rounds up is (d mod 64)/64
    for d in (0, 1, 50, 63, 64, 65, 100, 1827):
        up = sum(d % STEP > 0 and SyncModel(p).step_delta(d, 0) == -(-d // STEP) for p in range(STEP))
        assert up / STEP == delta_probability(d)


def test_fit_phases_roundtrip():
    times = [0, 51, 103, 190, 900]
    for phase in range(STEP):
        m = SyncModel(phase)
        deltas = [m.step_delta(b, a) for a, b in itertools.pairwise(times)]
        assert phase in fit_phases(times, deltas)


@pytest.mark.parametrize("text,value", [
    ("0:50", 50.0), ("0:50+", 50.5), ("1:54+", 114.5), ("10:46+", 646.5), ("7:59+", 479.5),
    ("12", 12.0), ("57.5", 57.5), (30, 30.0),
])
def test_parse_duration(text, value):
    assert parse_duration(text) == value


def test_plus_offset_configurable_and_instant_truncates():
    assert parse_duration("0:50+", plus_offset=0.25) == 50.25
    assert parse_instant("7:59+") == 479
    assert parse_instant("8:00+") == 480


@pytest.mark.parametrize("bad", ["", "abc", "1:2:3", "-5", "0:50++"])
def test_parse_duration_rejects(bad):
    with pytest.raises(ValueError):
        parse_duration(bad)


def test_press_schedule_quantises():
    assert press_schedule(50.5, 5) == [0, 50, 101, 151, 202]
    assert press_schedule(64, 3, start=10) == [10, 74, 138]
