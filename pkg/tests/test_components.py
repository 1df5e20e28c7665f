import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gridmc.components import (
    GeneratorState,
    GenStatus,
    LineState,
    LineStatus,
    LoadStatus,
    ProtectionState,
    ProtectionStatus,
    RestorationQueue,
    TransitionError,
    generator_step,
    line_permanent_failure_step,
    line_reconnect_check,
    load_demand,
    manual_reclose,
    minutes_to_restore,
    protection_step,
    reconnect_angle_limit,
    restoration_rate,
    restoration_schedule,
    restored_mw,
    transition,
    trip_line,
)
from gridmc.model import Generator, Line


def test_load_demand_formula():
    assert load_demand(100.0, 0.8, 0.05) == pytest.approx(84.0)
    assert load_demand(100.0, 0.8, 0.05, shed=4.0) == pytest.approx(80.0)
    assert load_demand(100.0, 0.8, 0.0, shed=500.0) == 0.0
    assert load_demand(100.0, 0.8, 0.0, status=LoadStatus.DISCONNECTED) == 0.0


def test_restoration_stage_rates():
    assert restoration_rate(0) == 10.0
    assert restoration_rate(29.999) == 10.0
    assert restoration_rate(30) == 33.3
    assert restoration_rate(60) == 66.6
    assert restoration_rate(90) == 83.3
    assert restoration_rate(1000) == 83.3


def test_restored_mw_breakpoints():
    # Stage capacities: 300, 999 and 1998 MW.
    assert restored_mw(30) == pytest.approx(300.0)
    assert restored_mw(60) == pytest.approx(1299.0)
    assert restored_mw(90) == pytest.approx(3297.0)
    assert restored_mw(100) == pytest.approx(3297.0 + 833.0)


@given(st.floats(0, 5000))
def test_restoration_time_inverts_amount(mw):
    assert restored_mw(minutes_to_restore(mw)) == pytest.approx(mw, rel=1e-12, abs=1e-9)


@given(st.lists(st.floats(0.1, 500), min_size=1, max_size=15))
def test_schedule_is_increasing(demands):
    times = restoration_schedule(demands)
    assert all(b > a for a, b in zip(times, times[1:]))


def test_restoration_queue_fifo_and_stop():
    q = RestorationQueue()
    for i in (4, 2, 9):
        q.push(i)
    assert q.head() == 4
    t = q.begin_head(1.0, 300.0)
    assert t == pytest.approx(1.5)
    assert q.complete_head() == 4
    t2 = q.begin_head(1.5, 999.0)
    assert t2 == pytest.approx(2.0)
    q.stop()
    assert not q.active and q.head() == 2


def test_transition_table_rejects_illegal_moves():
    assert transition(LoadStatus.CONNECTED, LoadStatus.DISCONNECTED) is LoadStatus.DISCONNECTED
    with pytest.raises(TransitionError):
        transition(LineStatus.IN_SERVICE, LineStatus.IN_SERVICE)
    with pytest.raises(TransitionError):
        transition(LineStatus.OUT_OVERLOAD, LineStatus.UNDER_REPAIR)


def test_generator_cycle():
    g = Generator("G", "1", 100.0, 1, failure_rate=8760 * 0.01, repair_rate=0.04)
    rng = np.random.default_rng(0)
    s = GeneratorState()
    s2, ev = generator_step(g, s, 5.0, rng)
    assert s2.status is GenStatus.FORCED_DOWN and ev[0][1] == "GenUp" and ev[0][0] > 5.0
    s3, ev = generator_step(g, s2, ev[0][0], rng)
    assert s3.status is GenStatus.UP and ev[0][1] == "GenDown"


def test_never_failing_generator_schedules_nothing_after_repair():
    g = Generator("G", "1", 100.0, 1, failure_rate=0.0, repair_rate=1.0)
    s, ev = generator_step(g, GeneratorState(GenStatus.FORCED_DOWN), 0.0, np.random.default_rng(0))
    assert s.status is GenStatus.UP and ev == []


def line(rating=100.0, x=0.1):
    return Line("L", "1", "2", x, rating, reclose_delay=1.0)


def test_protection_alarm_then_clear():
    ln, ls, ps = line(), LineState(), ProtectionState()
    rng = np.random.default_rng(0)
    assert protection_step(ln, 100.0, ls, ps, 1.4, rng)[0] == "alarm"
    assert 100.0 <= ls.threshold <= 140.0
    assert ps.status is ProtectionStatus.ALARM
    assert protection_step(ln, 99.0, ls, ps, 1.4, rng) == ["clear"]
    assert ls.threshold == math.inf


def test_protection_trips_above_threshold():
    ln, ls, ps = line(), LineState(), ProtectionState()
    acts = protection_step(ln, 141.0, ls, ps, 1.4, np.random.default_rng(0))
    assert acts == ["alarm", "trip"]
    events = trip_line(ln, ls, ps, 3.0)
    assert ls.status is LineStatus.OUT_OVERLOAD and events == [(4.0, "ManualReclose")]


def test_reconnect_angle_rule():
    ln = line(rating=100.0, x=0.1)
    assert reconnect_angle_limit(ln, 0.9) == pytest.approx(9.0)
    ls = LineState(LineStatus.OUT_OVERLOAD, trip_time=2.0)
    ok, ev = line_reconnect_check(ln, 9.5, 0.0, 2.1, ls, 0.9)
    assert not ok and ev == [(3.0, "ManualReclose")]
    ok, ev = line_reconnect_check(ln, 8.9, 0.0, 2.2, ls, 0.9)
    assert ok and ls.status is LineStatus.IN_SERVICE


def test_manual_reclose_and_failure_cycle():
    ln = Line("L", "1", "2", 0.1, 100.0, failure_rate=1.0, repair_rate=0.1)
    ls = LineState(LineStatus.OUT_OVERLOAD)
    manual_reclose(ls)
    assert ls.status is LineStatus.IN_SERVICE
    rng = np.random.default_rng(0)
    ev = line_permanent_failure_step(ln, ls, 0.0, rng)
    assert ls.status is LineStatus.UNDER_REPAIR and ev[0][1] == "LineRepair"
    ev = line_permanent_failure_step(ln, ls, ev[0][0], rng)
    assert ls.status is LineStatus.IN_SERVICE and ev[0][1] == "LinePermFail"
