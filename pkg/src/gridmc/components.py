"""State machines of loads, generators, lines and protection devices, plus
the staged restoration queue.

Transitions go through `transition`, which refuses any edge that is not
in the allowed set of the machine.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .model import Generator, Line
from .stochastic import per_hour, sample_exponential, sample_outage_threshold


class OutageCause(Enum):
    GENERATION_INADEQUACY = 0
    SYSTEM_SPLITTING = 1
    OPERATOR_INTERVENTION = 2


CAUSES = tuple(OutageCause)


class LoadStatus(Enum):
    CONNECTED = "connected"
    PARTIALLY_SHED = "partially_shed"
    DISCONNECTED = "disconnected"
    WAITING = "waiting_for_restoration"


class GenStatus(Enum):
    UP = "up"
    FORCED_DOWN = "forced_down"


class LineStatus(Enum):
    IN_SERVICE = "in_service"
    OUT_OVERLOAD = "out_overload"
    OUT_FAILURE = "out_permanent_failure"
    UNDER_REPAIR = "under_repair"
    WAITING_RECONNECTION = "waiting_reconnection"


class ProtectionStatus(Enum):
    IDLE = "idle"
    ALARM = "alarm_sent"


ALLOWED = {
    LoadStatus: {
        (LoadStatus.CONNECTED, LoadStatus.PARTIALLY_SHED),
        (LoadStatus.PARTIALLY_SHED, LoadStatus.CONNECTED),
        (LoadStatus.PARTIALLY_SHED, LoadStatus.PARTIALLY_SHED),  # further shedding
        (LoadStatus.CONNECTED, LoadStatus.DISCONNECTED),
        (LoadStatus.PARTIALLY_SHED, LoadStatus.DISCONNECTED),
        (LoadStatus.DISCONNECTED, LoadStatus.WAITING),
        (LoadStatus.WAITING, LoadStatus.DISCONNECTED),  # restoration paused
        (LoadStatus.WAITING, LoadStatus.CONNECTED),
    },
    GenStatus: {
        (GenStatus.UP, GenStatus.FORCED_DOWN),
        (GenStatus.FORCED_DOWN, GenStatus.UP),
    },
    LineStatus: {
        (LineStatus.IN_SERVICE, LineStatus.OUT_OVERLOAD),
        (LineStatus.OUT_OVERLOAD, LineStatus.IN_SERVICE),
        (LineStatus.IN_SERVICE, LineStatus.OUT_FAILURE),
        (LineStatus.OUT_FAILURE, LineStatus.UNDER_REPAIR),
        (LineStatus.UNDER_REPAIR, LineStatus.WAITING_RECONNECTION),
        (LineStatus.WAITING_RECONNECTION, LineStatus.IN_SERVICE),
    },
    ProtectionStatus: {
        (ProtectionStatus.IDLE, ProtectionStatus.ALARM),
        (ProtectionStatus.ALARM, ProtectionStatus.IDLE),
    },
}


class TransitionError(RuntimeError):
    pass


def transition(old: Enum, new: Enum) -> Enum:
    if (old, new) not in ALLOWED[type(old)]:
        raise TransitionError(f"{type(old).__name__}: {old.value} -> {new.value} is not allowed")
    return new


# Loads ---------------------------------------------------------------------

SERVED = (LoadStatus.CONNECTED, LoadStatus.PARTIALLY_SHED)


def load_demand(peak: float, gamma: float, rho: float, shed: float = 0.0, status: LoadStatus = LoadStatus.CONNECTED) -> float:
    """Served demand gamma * peak * (1 + rho) - shed, floored at 0.

    Disconnected loads are not served and return 0.
    """
    if status not in SERVED:
        return 0.0
    return max(gamma * peak * (1.0 + rho) - shed, 0.0)


# Restoration ---------------------------------------------------------------

STAGE_ENDS = (30.0, 60.0, 90.0)  # minutes since the process started
STAGE_RATES = (10.0, 33.3, 66.6, 83.3)  # MW/min


def restoration_rate(minutes: float) -> float:
    """Overall reconnection rate in MW/min after `minutes` of restoration."""
    if minutes < 0:
        raise ValueError(f"elapsed restoration time must be >= 0, got {minutes}")
    for end, rate in zip(STAGE_ENDS, STAGE_RATES):
        if minutes < end:
            return rate
    return STAGE_RATES[-1]


def restored_mw(minutes: float) -> float:
    """Cumulative MW the process can reconnect within `minutes`."""
    if minutes < 0:
        raise ValueError(f"elapsed restoration time must be >= 0, got {minutes}")
    total, start = 0.0, 0.0
    for end, rate in zip(STAGE_ENDS, STAGE_RATES):
        if minutes <= end:
            return total + rate * (minutes - start)
        total += rate * (end - start)
        start = end
    return total + STAGE_RATES[-1] * (minutes - start)


def minutes_to_restore(mw: float) -> float:
    """Inverse of `restored_mw`: elapsed minutes at which `mw` is reached."""
    if mw < 0:
        raise ValueError("restored amount must be >= 0")
    total, start = 0.0, 0.0
    for end, rate in zip(STAGE_ENDS, STAGE_RATES):
        cap = rate * (end - start)
        if mw <= total + cap:
            return start + (mw - total) / rate
        total += cap
        start = end
    return start + (mw - total) / STAGE_RATES[-1]


@dataclass
class RestorationQueue:
    """FIFO of disconnected loads for one control area.

    While a process is active, loads are reconnected one after another at
    the staged overall rate measured from `start` (hours).
    """

    pending: deque = field(default_factory=deque)
    start: float | None = None
    restored: float = 0.0  # MW reconnected in the current process
    head_target: float | None = None  # cumulative MW at which the head is back

    @property
    def active(self) -> bool:
        return self.start is not None

    def push(self, load: int) -> None:
        self.pending.append(load)

    def head(self) -> int | None:
        return self.pending[0] if self.pending else None

    def begin_head(self, t: float, demand: float) -> float:
        """Start restoring the head load; returns its reconnection time (hours)."""
        if self.start is None:
            self.start, self.restored = t, 0.0
        self.head_target = self.restored + max(demand, 0.0)
        return self.start + minutes_to_restore(self.head_target) / 60.0

    def complete_head(self) -> int:
        load = self.pending.popleft()
        self.restored = self.head_target
        self.head_target = None
        return load

    def stop(self) -> None:
        self.start, self.restored, self.head_target = None, 0.0, None


def restoration_schedule(demands, start: float = 0.0) -> list[float]:
    """Reconnection times (hours) of loads restored back to back from `start`."""
    q = RestorationQueue()
    times = []
    for k, d in enumerate(demands):
        q.push(k)
        times.append(q.begin_head(start, d))
        q.complete_head()
    return times


# Generators ----------------------------------------------------------------

@dataclass
class GeneratorState:
    status: GenStatus = GenStatus.UP
    output: float = 0.0
    next_transition: float = math.inf


def generator_step(gen: Generator, state: GeneratorState, t: float, rng: np.random.Generator):
    """Fire the scheduled up/down transition of `gen` at time `t` (hours).

    Returns the new state and the events to schedule as (time, kind).
    """
    if state.status is GenStatus.UP:
        new = GeneratorState(transition(state.status, GenStatus.FORCED_DOWN), 0.0)
        new.next_transition = t + sample_exponential(gen.repair_rate, rng)
        return new, [(new.next_transition, "GenUp")]
    new = GeneratorState(transition(state.status, GenStatus.UP), 0.0)
    new.next_transition = t + sample_exponential(per_hour(gen.failure_rate), rng)
    events = [] if math.isinf(new.next_transition) else [(new.next_transition, "GenDown")]
    return new, events


# Lines and protection --------------------------------------------------------

@dataclass
class LineState:
    status: LineStatus = LineStatus.IN_SERVICE
    threshold: float = math.inf  # MW trip level of the active overload episode
    next_transition: float = math.inf
    trip_time: float = math.nan


@dataclass
class ProtectionState:
    status: ProtectionStatus = ProtectionStatus.IDLE
    flow: float = 0.0


def protection_step(line: Line, flow: float, lstate: LineState, pstate: ProtectionState, beta: float, rng) -> list[str]:
    """Protection reaction to a newly computed flow on an in-service line.

    Returns the actions taken, in order, from "alarm", "clear" and "trip".
    A new trip threshold is drawn each time an alarm episode starts.
    """
    if lstate.status is not LineStatus.IN_SERVICE:
        raise ValueError(f"line {line.id} is not in service")
    pstate.flow = abs(flow)
    actions = []
    if pstate.flow >= line.rating:
        if pstate.status is ProtectionStatus.IDLE:
            pstate.status = transition(pstate.status, ProtectionStatus.ALARM)
            lstate.threshold = sample_outage_threshold(line.rating, beta, rng)
            actions.append("alarm")
        if pstate.flow >= lstate.threshold:
            actions.append("trip")
    elif pstate.status is ProtectionStatus.ALARM:
        pstate.status = transition(pstate.status, ProtectionStatus.IDLE)
        lstate.threshold = math.inf
        actions.append("clear")
    return actions


def trip_line(line: Line, lstate: LineState, pstate: ProtectionState, t: float):
    """Protection opens the breaker; the manual reclose is scheduled."""
    lstate.status = transition(lstate.status, LineStatus.OUT_OVERLOAD)
    lstate.trip_time = t
    lstate.threshold = math.inf
    lstate.next_transition = t + line.reclose_delay
    if pstate.status is ProtectionStatus.ALARM:
        pstate.status = transition(pstate.status, ProtectionStatus.IDLE)
    pstate.flow = 0.0
    return [(lstate.next_transition, "ManualReclose")]


def reconnect_angle_limit(line: Line, eta: float) -> float:
    """Largest angle difference (x_pu * MW) that allows automatic reconnection."""
    return eta * line.x * line.rating


def line_reconnect_check(line: Line, theta_a: float, theta_b: float, t: float, state: LineState, eta: float):
    """Reconnect a tripped line if the angle across it is small enough.

    Otherwise the line stays out and the manual reclose at trip time plus
    the reclose delay (scheduled at trip) stands. Returns
    (reconnected, events).
    """
    if state.status is not LineStatus.OUT_OVERLOAD:
        raise ValueError(f"line {line.id} is not out on overload")
    if abs(theta_a - theta_b) < reconnect_angle_limit(line, eta):
        state.status = transition(state.status, LineStatus.IN_SERVICE)
        state.next_transition = math.inf
        return True, []
    return False, [(state.trip_time + line.reclose_delay, "ManualReclose")]


def manual_reclose(state: LineState) -> None:
    state.status = transition(state.status, LineStatus.IN_SERVICE)
    state.next_transition = math.inf


def line_permanent_failure_step(line: Line, state: LineState, t: float, rng):
    """Advance the random-failure cycle of a line at time `t`.

    An in-service line fails and goes under repair; a repaired line is
    reconnected without conditions and draws its next failure time.
    """
    if state.status is LineStatus.IN_SERVICE:
        state.status = transition(state.status, LineStatus.OUT_FAILURE)
        state.status = transition(state.status, LineStatus.UNDER_REPAIR)
        state.next_transition = t + sample_exponential(line.repair_rate, rng)
        return [(state.next_transition, "LineRepair")]
    if state.status is LineStatus.UNDER_REPAIR:
        state.status = transition(state.status, LineStatus.WAITING_RECONNECTION)
        state.status = transition(state.status, LineStatus.IN_SERVICE)
        state.next_transition = t + sample_exponential(per_hour(line.failure_rate), rng)
        if math.isinf(state.next_transition):
            return []
        return [(state.next_transition, "LinePermFail")]
    raise ValueError(f"line {line.id}: no random-failure transition from {state.status.value}")
