"""Static network description and topology queries.

The model is immutable once built. Everything that changes during a
simulated year (line status, generator availability, load states) lives
in the engine's state object, so one model can be shared by all
replications.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

HOURS_PER_YEAR = 8760.0


def id_key(ident: str):
    """Sort key that orders numeric ids numerically and the rest lexically."""
    return (0, int(ident), "") if ident.isdigit() else (1, 0, ident)


@dataclass(frozen=True)
class Bus:
    id: str
    area: str


@dataclass(frozen=True)
class Line:
    id: str
    from_bus: str
    to_bus: str
    x: float  # per unit on the system base
    rating: float  # MW
    failure_rate: float = 0.0  # 1/year
    repair_rate: float = 1.0  # 1/hour
    reclose_delay: float = 1.0  # hours
    responsible_area: str | None = None


@dataclass(frozen=True)
class Generator:
    id: str
    bus: str
    capacity: float  # MW
    priority: int = 1
    failure_rate: float = 0.0  # 1/year
    repair_rate: float = 1.0  # 1/hour


@dataclass(frozen=True)
class Load:
    id: str
    bus: str
    peak_demand: float  # MW


@dataclass(frozen=True)
class ControlArea:
    id: str
    contact_delay: float = 2.0  # minutes
    response_delay: float = 15.0  # minutes


@dataclass(frozen=True)
class Params:
    beta: float = 1.4
    eta: float = 0.9
    xi: float = 0.8
    shed_weight: float = 10000.0
    sigma: float = 0.0192


@dataclass(frozen=True)
class NetworkModel:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    generators: tuple[Generator, ...]
    loads: tuple[Load, ...]
    areas: tuple[ControlArea, ...]
    params: Params = field(default_factory=Params)
    base_mva: float = 100.0

    def __post_init__(self):
        # Canonical bus order is by id; island references rely on it.
        object.__setattr__(self, "buses", tuple(sorted(self.buses, key=lambda b: id_key(b.id))))
        for name in ("lines", "generators", "loads", "areas"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    @cached_property
    def bus_index(self) -> dict[str, int]:
        return {b.id: i for i, b in enumerate(self.buses)}

    @cached_property
    def area_index(self) -> dict[str, int]:
        return {a.id: i for i, a in enumerate(self.areas)}

    @cached_property
    def arrays(self) -> "ModelArrays":
        return ModelArrays.build(self)

    def area_of_line(self, line: Line) -> tuple[str, str]:
        bi = self.bus_index
        return self.buses[bi[line.from_bus]].area, self.buses[bi[line.to_bus]].area

    def responsible_area(self, line: Line) -> str:
        """Area whose operator handles an overload of `line`.

        Tie-lines default to the lower-ordered of the two areas.
        """
        a, b = self.area_of_line(line)
        if line.responsible_area is not None:
            return line.responsible_area
        return min(a, b, key=id_key)

    def scaled(self, loading_level: float) -> "NetworkModel":
        """Peak demands and generator capacities multiplied by `loading_level`."""
        if loading_level <= 0:
            raise ValueError(f"loading level must be positive, got {loading_level}")
        if loading_level == 1.0:
            return self
        return replace(
            self,
            generators=tuple(replace(g, capacity=g.capacity * loading_level) for g in self.generators),
            loads=tuple(replace(d, peak_demand=d.peak_demand * loading_level) for d in self.loads),
        )


def apply_loading_level(model: NetworkModel, loading_level: float) -> NetworkModel:
    return model.scaled(loading_level)


@dataclass(frozen=True)
class ModelArrays:
    """Index arrays derived from a model, for vectorized work in the engine."""

    line_from: np.ndarray
    line_to: np.ndarray
    line_x: np.ndarray
    line_rating: np.ndarray
    gen_bus: np.ndarray
    gen_cap: np.ndarray
    gen_priority: np.ndarray
    gen_area: np.ndarray
    load_bus: np.ndarray
    load_peak: np.ndarray
    load_area: np.ndarray
    bus_area: np.ndarray
    gen_priority_order: np.ndarray  # generator indices sorted by (priority, index)

    @classmethod
    def build(cls, model: NetworkModel) -> "ModelArrays":
        bi = model.bus_index
        ai = model.area_index
        bus_area = np.array([ai[b.area] for b in model.buses], dtype=np.int64)
        gen_bus = np.array([bi[g.bus] for g in model.generators], dtype=np.int64)
        load_bus = np.array([bi[d.bus] for d in model.loads], dtype=np.int64)
        prio = np.array([g.priority for g in model.generators], dtype=np.int64)
        return cls(
            line_from=np.array([bi[ln.from_bus] for ln in model.lines], dtype=np.int64),
            line_to=np.array([bi[ln.to_bus] for ln in model.lines], dtype=np.int64),
            line_x=np.array([ln.x for ln in model.lines], dtype=float),
            line_rating=np.array([ln.rating for ln in model.lines], dtype=float),
            gen_bus=gen_bus,
            gen_cap=np.array([g.capacity for g in model.generators], dtype=float),
            gen_priority=prio,
            gen_area=bus_area[gen_bus] if len(gen_bus) else np.zeros(0, dtype=np.int64),
            load_bus=load_bus,
            load_peak=np.array([d.peak_demand for d in model.loads], dtype=float),
            load_area=bus_area[load_bus] if len(load_bus) else np.zeros(0, dtype=np.int64),
            bus_area=bus_area,
            gen_priority_order=np.lexsort((np.arange(len(prio)), prio)).astype(np.int64),
        )


def validate(model: NetworkModel) -> list[str]:
    """Return the invariant violations of `model`; empty means well-formed."""
    problems: list[str] = []
    area_ids = [a.id for a in model.areas]
    problems += _duplicates("area", area_ids)
    areas = set(area_ids)
    bus_ids = [b.id for b in model.buses]
    problems += _duplicates("bus", bus_ids)
    buses = set(bus_ids)
    for b in model.buses:
        if b.area not in areas:
            problems.append(f"bus {b.id}: unknown area {b.area}")
    if not model.buses:
        problems.append("model has no buses")

    problems += _duplicates("line", [ln.id for ln in model.lines])
    for ln in model.lines:
        for end in (ln.from_bus, ln.to_bus):
            if end not in buses:
                problems.append(f"line {ln.id}: dangling reference to bus {end}")
        if ln.from_bus == ln.to_bus:
            problems.append(f"line {ln.id}: self-loop at bus {ln.from_bus}")
        if not ln.x > 0:
            problems.append(f"line {ln.id}: reactance must be > 0, got {ln.x}")
        if not ln.rating > 0:
            problems.append(f"line {ln.id}: rating must be > 0, got {ln.rating}")
        if ln.failure_rate < 0:
            problems.append(f"line {ln.id}: negative failure rate")
        if not ln.repair_rate > 0:
            problems.append(f"line {ln.id}: repair rate must be > 0")
        if ln.reclose_delay < 0:
            problems.append(f"line {ln.id}: negative reclose delay")
        if ln.responsible_area is not None:
            if ln.responsible_area not in areas:
                problems.append(f"line {ln.id}: unknown responsible area {ln.responsible_area}")
            elif ln.from_bus in buses and ln.to_bus in buses:
                if ln.responsible_area not in model.area_of_line(ln):
                    problems.append(f"line {ln.id}: responsible area {ln.responsible_area} is not an end area")

    problems += _duplicates("generator", [g.id for g in model.generators])
    for g in model.generators:
        if g.bus not in buses:
            problems.append(f"generator {g.id}: dangling reference to bus {g.bus}")
        if not g.capacity > 0:
            problems.append(f"generator {g.id}: capacity must be > 0, got {g.capacity}")
        if g.priority < 1:
            problems.append(f"generator {g.id}: priority must be a positive integer")
        if g.failure_rate < 0:
            problems.append(f"generator {g.id}: negative failure rate")
        if not g.repair_rate > 0:
            problems.append(f"generator {g.id}: repair rate must be > 0")

    problems += _duplicates("load", [d.id for d in model.loads])
    for d in model.loads:
        if d.bus not in buses:
            problems.append(f"load {d.id}: dangling reference to bus {d.bus}")
        if not d.peak_demand > 0:
            problems.append(f"load {d.id}: peak demand must be > 0, got {d.peak_demand}")

    p = model.params
    if not p.beta > 1:
        problems.append(f"params: beta must be > 1, got {p.beta}")
    if not 0 <= p.eta <= 1:
        problems.append(f"params: eta must lie in [0, 1], got {p.eta}")
    if not 0 < p.xi <= 1:
        problems.append(f"params: xi must lie in (0, 1], got {p.xi}")
    if not p.shed_weight > 0:
        problems.append("params: shed weight must be > 0")
    if p.sigma < 0:
        problems.append("params: sigma must be >= 0")
    if not model.base_mva > 0:
        problems.append("base MVA must be > 0")
    return problems


def _duplicates(kind: str, ids: Sequence[str]) -> list[str]:
    seen: set[str] = set()
    out = []
    for i in ids:
        if i in seen:
            out.append(f"duplicate {kind} id {i}")
        seen.add(i)
    return out


def island_labels(n_bus: int, line_from: np.ndarray, line_to: np.ndarray, in_service: np.ndarray) -> np.ndarray:
    """Label every bus with its island number.

    Islands are numbered in order of their smallest bus index, so the
    labelling is deterministic for a given topology.
    """
    adj: list[list[int]] = [[] for _ in range(n_bus)]
    for k in np.flatnonzero(in_service):
        a, b = int(line_from[k]), int(line_to[k])
        adj[a].append(b)
        adj[b].append(a)
    labels = np.full(n_bus, -1, dtype=np.int64)
    n = 0
    for start in range(n_bus):
        if labels[start] >= 0:
            continue
        labels[start] = n
        stack = [start]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if labels[v] < 0:
                    labels[v] = n
                    stack.append(v)
        n += 1
    return labels


def connected_components(model: NetworkModel, in_service_lines: Iterable[str] | None = None) -> list[list[str]]:
    """Partition the buses into islands joined by in-service lines.

    With `in_service_lines=None` every line is taken to be in service.
    Islands are sorted by their smallest bus id, members by id.
    """
    arr = model.arrays
    if in_service_lines is None:
        mask = np.ones(len(model.lines), dtype=bool)
    else:
        wanted = set(in_service_lines)
        known = {ln.id for ln in model.lines}
        unknown = wanted - known
        if unknown:
            raise KeyError(f"unknown line ids: {sorted(unknown)}")
        mask = np.array([ln.id in wanted for ln in model.lines], dtype=bool)
    labels = island_labels(model.n_bus, arr.line_from, arr.line_to, mask)
    islands: list[list[str]] = [[] for _ in range(int(labels.max()) + 1 if len(labels) else 0)]
    for i, lab in enumerate(labels):
        islands[lab].append(model.buses[i].id)
    return islands


def island_balance(
    model: NetworkModel,
    island: Iterable[str],
    gen_available: Sequence[bool],
    load_demand: Sequence[float],
) -> tuple[float, float]:
    """Available capacity and connected demand on an island, in MW.

    `gen_available` and `load_demand` are indexed like `model.generators`
    and `model.loads`; disconnected loads carry a demand of 0.
    """
    members = {model.bus_index[b] for b in island}
    if not members:
        raise ValueError("island must contain at least one bus")
    arr = model.arrays
    cap = sum(arr.gen_cap[j] for j in range(len(arr.gen_cap)) if gen_available[j] and arr.gen_bus[j] in members)
    dem = sum(load_demand[i] for i in range(len(arr.load_bus)) if arr.load_bus[i] in members)
    return float(cap), float(dem)
