"""Grid-operator agents reacting to line overload alarms.

An alarm on a tie-line reaches both area operators, who first need
`contact_delay` minutes to reach each other; the responsible operator
then needs `response_delay` minutes to find a solution before the
corrective LP is executed. Intra-area alarms skip the contact phase.
Each alarmed line gets its own procedure and timers; a procedure is
dropped when its alarm clears or the line trips.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .model import NetworkModel


class OperatorStatus(Enum):
    IDLE = 0
    ALARMED = 1
    CONTACTING = 2
    FINDING_SOLUTION = 3
    EXECUTING = 4


@dataclass
class Procedure:
    line: int
    alarm_time: float  # hours
    episode: int
    tie: bool
    responsible: int  # area index
    stage: OperatorStatus = OperatorStatus.ALARMED


@dataclass
class OperatorState:
    area: int
    contact_delay: float  # minutes
    response_delay: float  # minutes
    procedures: dict[int, Procedure] = field(default_factory=dict)

    @property
    def status(self) -> OperatorStatus:
        if not self.procedures:
            return OperatorStatus.IDLE
        return max((p.stage for p in self.procedures.values()), key=lambda s: s.value)

    @property
    def pending_alarms(self) -> set[int]:
        return set(self.procedures)


class OperatorDesk:
    """All operators of a system plus the line -> operator responsibility map."""

    def __init__(self, model: NetworkModel, contact_delay: float | None = None, response_delay: float | None = None):
        self.model = model
        self.operators = [
            OperatorState(
                i,
                a.contact_delay if contact_delay is None else contact_delay,
                a.response_delay if response_delay is None else response_delay,
            )
            for i, a in enumerate(model.areas)
        ]
        arr = model.arrays
        ai = model.area_index
        self.line_areas = [
            (int(arr.bus_area[arr.line_from[k]]), int(arr.bus_area[arr.line_to[k]])) for k in range(len(model.lines))
        ]
        self.responsible = [ai[model.responsible_area(ln)] for ln in model.lines]

    def on_alarm(self, line: int, t: float, episode: int) -> list[tuple[float, str, int, int]]:
        """Register an overload alarm; returns events (time, kind, line, episode)."""
        a, b = self.line_areas[line]
        tie = a != b
        resp = self.responsible[line]
        op = self.operators[resp]
        if tie:
            for k in (a, b):
                self.operators[k].procedures[line] = Procedure(line, t, episode, True, resp, OperatorStatus.CONTACTING)
            return [(t + op.contact_delay / 60.0, "OperatorContactDone", line, episode)]
        op.procedures[line] = Procedure(line, t, episode, False, resp, OperatorStatus.FINDING_SOLUTION)
        return [(t + op.response_delay / 60.0, "OperatorSolutionDone", line, episode)]

    def procedure(self, line: int, episode: int) -> Procedure | None:
        p = self.operators[self.responsible[line]].procedures.get(line)
        return p if p is not None and p.episode == episode else None

    def on_contact_done(self, line: int, t: float, episode: int) -> list[tuple[float, str, int, int]]:
        p = self.procedure(line, episode)
        if p is None:
            return []
        for k in set(self.line_areas[line]):
            q = self.operators[k].procedures.get(line)
            if q is not None and k != p.responsible:
                # The other operator has handed the line over.
                del self.operators[k].procedures[line]
        p.stage = OperatorStatus.FINDING_SOLUTION
        return [(t + self.operators[p.responsible].response_delay / 60.0, "OperatorSolutionDone", line, episode)]

    def on_solution_done(self, line: int, episode: int) -> Procedure | None:
        """Move the procedure to execution; None if it was cancelled."""
        p = self.procedure(line, episode)
        if p is not None:
            p.stage = OperatorStatus.EXECUTING
        return p

    def finish(self, line: int) -> None:
        self.cancel(line)

    def cancel(self, line: int) -> None:
        for k in set(self.line_areas[line]):
            self.operators[k].procedures.pop(line, None)

    def execution_time(self, line: int, t: float) -> float:
        """Time at which a corrective action for an alarm raised at `t` runs."""
        a, b = self.line_areas[line]
        op = self.operators[self.responsible[line]]
        delay = op.response_delay + (op.contact_delay if a != b else 0.0)
        return t + delay / 60.0
