"""Discrete-event simulation of one operating year and the Monte Carlo driver.

Hourly ticks move the demand profile and draw the per-area demand
deviation; generator and line failures happen at continuous times in
between. After every state-changing event the system is settled: islands
are recomputed, separated islands are balanced, generation is dispatched,
flows are solved and the protection devices react, repeating until no
line trips or recloses any more.
"""
from __future__ import annotations

import heapq
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import opf
from .components import (
    CAUSES,
    LineState,
    LineStatus,
    LoadStatus,
    OutageCause,
    ProtectionState,
    ProtectionStatus,
    RestorationQueue,
    GeneratorState,
    GenStatus,
    generator_step,
    line_permanent_failure_step,
    line_reconnect_check,
    manual_reclose,
    protection_step,
    transition,
    trip_line,
)
from .dispatch import dispatch, shed_to_fit
from .model import NetworkModel, validate
from .operators import OperatorDesk
from .powerflow import DirectSolver, Topology, sensitivity_factors, solve_dc_flow, topology
from .splitting import handle_split, split_children
from .stats import BlackoutRecord
from .stochastic import initial_state, per_hour, rng_stream, sample_demand_deviation, sample_exponential

log = logging.getLogger(__name__)

EPS = 1e-9  # MW

HOUR_TICK, GEN_DOWN, GEN_UP, LINE_FAIL, LINE_REPAIR, MANUAL_RECLOSE, CONTACT_DONE, SOLUTION_DONE, RESTORED = range(9)
EVENT_NAMES = (
    "HourTick",
    "GenDown",
    "GenUp",
    "LinePermFail",
    "LineRepair",
    "ManualReclose",
    "OperatorContactDone",
    "OperatorSolutionDone",
    "RestorationComplete",
)
_KIND = {name: code for code, name in enumerate(EVENT_NAMES)}

CONNECTED, PARTIAL, DISCONNECTED, WAITING = range(4)
_CODE = {
    LoadStatus.CONNECTED: CONNECTED,
    LoadStatus.PARTIALLY_SHED: PARTIAL,
    LoadStatus.DISCONNECTED: DISCONNECTED,
    LoadStatus.WAITING: WAITING,
}


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    operator: bool = True
    response_delay: float | None = None  # minutes, overrides every area
    contact_delay: float | None = None  # minutes, overrides every area
    flow_method: str = "direct"  # or "iterative"
    debug: bool = False
    max_settle_rounds: int = 1000


@dataclass
class ReplicationResult:
    year: int
    records: list[BlackoutRecord]
    energy_by_cause: np.ndarray  # MWh
    integrated_unserved: float  # MWh, integrated load by load
    overloads: np.ndarray  # alarm episodes per line
    counts: dict[str, int] = field(default_factory=dict)
    aborted: bool = False
    message: str = ""

    @property
    def energy(self) -> float:
        return float(self.energy_by_cause.sum())


class FlowCache:
    """Topologies, factorizations and sensitivities keyed by line status."""

    def __init__(self, model: NetworkModel, max_entries: int = 4096):
        self.model = model
        self.max_entries = max_entries
        self._topos: dict[bytes, Topology] = {}
        self._solvers: dict[bytes, DirectSolver] = {}
        self._sens: dict[bytes, object] = {}
        self.plans: dict = {}  # dispatch layouts per topology and unit availability

    def topology(self, mask: np.ndarray) -> Topology:
        key = mask.tobytes()
        topo = self._topos.get(key)
        if topo is None:
            if len(self._topos) >= self.max_entries:
                self._topos.clear()
                self._solvers.clear()
                self._sens.clear()
            topo = self._topos[key] = topology(self.model, mask)
        return topo

    def solver(self, topo: Topology) -> DirectSolver:
        s = self._solvers.get(topo.fingerprint)
        if s is None:
            s = self._solvers[topo.fingerprint] = DirectSolver(self.model, topo)
        return s

    def sensitivities(self, topo: Topology):
        s = self._sens.get(topo.fingerprint)
        if s is None:
            s = self._sens[topo.fingerprint] = sensitivity_factors(self.model, topo, solver=self.solver(topo))
        return s


class Simulation:
    """State of one simulated year and its event loop."""

    def __init__(
        self,
        model: NetworkModel,
        profile: np.ndarray,
        config: SimConfig,
        rng: np.random.Generator,
        year: int = 0,
        cache: FlowCache | None = None,
    ):
        self.model = model
        self.arr = arr = model.arrays
        self.profile = np.asarray(profile, dtype=float)
        if self.profile.ndim != 2 or self.profile.shape[1] != len(model.areas):
            raise ValueError("profile must have one column per control area")
        self.config = config
        self.rng = rng
        self.year = year
        self.cache = cache or FlowCache(model)
        self.horizon = float(self.profile.shape[0])
        n_gen, n_line, n_load, n_area = len(model.generators), len(model.lines), len(model.loads), len(model.areas)

        self.clock = 0.0
        self.queue: list = []
        self.seq = 0

        self.gens = [GeneratorState() for _ in range(n_gen)]
        self.gen_up = np.ones(n_gen, dtype=bool)
        self.gen_out = np.zeros(n_gen)
        self.gen_offset = np.zeros(n_gen)
        self.corrective = False
        prio_order = sorted(range(n_gen), key=lambda j: (arr.gen_priority[j], j))
        self._gen_prio_order = np.array(prio_order, dtype=np.int64)

        self.lines = [LineState() for _ in range(n_line)]
        self.prot = [ProtectionState() for _ in range(n_line)]
        self.in_service = np.ones(n_line, dtype=bool)
        self.alarm = np.zeros(n_line, dtype=bool)
        self.threshold = np.full(n_line, np.inf)
        self.alarm_episode = np.zeros(n_line, dtype=np.int64)
        self.status_token = np.zeros(n_line, dtype=np.int64)
        self.fail_token = np.zeros(n_line, dtype=np.int64)
        self.overloads = np.zeros(n_line, dtype=np.int64)
        self.tripped: set[int] = set()  # superset of the lines out on overload

        self.load_state = [LoadStatus.CONNECTED] * n_load
        self.load_code = np.zeros(n_load, dtype=np.int64)
        self.load_shed = np.zeros(n_load)
        self.load_cause = np.full(n_load, -1, dtype=np.int64)
        self.full_demand = np.zeros(n_load)
        self._served: np.ndarray | None = None
        self.gamma = np.zeros(n_area)
        self.rho = np.zeros(n_area)
        self.queues = [RestorationQueue() for _ in range(n_area)]
        self.restore_token = np.zeros(n_area, dtype=np.int64)

        self.desk = OperatorDesk(model, config.contact_delay, config.response_delay) if config.operator else None

        self.topo = self.cache.topology(self.in_service)
        self.flows = np.zeros(n_line)
        self.theta = np.zeros(model.n_bus)
        self.injections = np.zeros(model.n_bus)
        self._theta_valid = False

        self.unserved_load = np.zeros(n_load)
        self.unserved_rate = np.zeros(len(CAUSES))
        self.energy_by_cause = np.zeros(len(CAUSES))
        self.integrated = 0.0
        self.last_accrual = 0.0
        self.records: list[BlackoutRecord] = []
        self.open_record: BlackoutRecord | None = None
        self.counts = {name: 0 for name in EVENT_NAMES}
        self.counts.update(trips=0, splits=0, corrective_actions=0, lp_infeasible=0, reconnections=0)

    # Scheduling ------------------------------------------------------------

    def push(self, time: float, kind: int, idx: int = 0, token: int = 0) -> None:
        if time < self.clock:
            raise SimulationError(f"event {EVENT_NAMES[kind]} scheduled in the past ({time} < {self.clock})")
        self.seq += 1
        heapq.heappush(self.queue, (time, self.seq, kind, idx, token))

    def _push_named(self, events, idx: int, token: int = 0) -> None:
        for time, name in events:
            if math.isfinite(time):
                self.push(time, _KIND[name], idx, token)

    # Initialization ----------------------------------------------------------

    def _initialize(self) -> None:
        for j, g in enumerate(self.model.generators):
            up, dt = initial_state(per_hour(g.failure_rate), g.repair_rate, self.rng)
            self.gens[j].status = GenStatus.UP if up else GenStatus.FORCED_DOWN
            self.gens[j].next_transition = dt
            self.gen_up[j] = up
            if math.isfinite(dt):
                self.push(dt, GEN_DOWN if up else GEN_UP, j)
        for k, ln in enumerate(self.model.lines):
            up, dt = initial_state(per_hour(ln.failure_rate), ln.repair_rate, self.rng)
            state = self.lines[k]
            if not up:
                state.status = transition(state.status, LineStatus.OUT_FAILURE)
                state.status = transition(state.status, LineStatus.UNDER_REPAIR)
                self.in_service[k] = False
            state.next_transition = dt
            if math.isfinite(dt):
                self.push(dt, LINE_FAIL if up else LINE_REPAIR, k, self.fail_token[k])
        self.topo = self.cache.topology(self.in_service)
        self.push(0.0, HOUR_TICK, 0)

    # Main loop ---------------------------------------------------------------

    def run(self) -> ReplicationResult:
        self._initialize()
        handlers = {
            HOUR_TICK: self._on_hour,
            GEN_DOWN: self._on_gen,
            GEN_UP: self._on_gen,
            LINE_FAIL: self._on_line_fail,
            LINE_REPAIR: self._on_line_repair,
            MANUAL_RECLOSE: self._on_reclose,
            CONTACT_DONE: self._on_contact,
            SOLUTION_DONE: self._on_solution,
            RESTORED: self._on_restored,
        }
        while self.queue and self.queue[0][0] < self.horizon:
            time, _, kind, idx, token = heapq.heappop(self.queue)
            if time < self.clock:
                raise SimulationError("event causality violated")
            self._accrue(time)
            self.clock = time
            self.counts[EVENT_NAMES[kind]] += 1
            if handlers[kind](idx, token):
                self.settle()
        self._accrue(self.horizon)
        if self.open_record is not None:
            self.open_record.end = self.horizon
            self.open_record.truncated = True
            self.records.append(self.open_record)
            self.open_record = None
        return ReplicationResult(
            self.year,
            self.records,
            self.energy_by_cause.copy(),
            self.integrated,
            self.overloads.copy(),
            dict(self.counts),
        )

    # Event handlers return True when the system must be settled. ------------

    def _on_hour(self, hour: int, _token: int) -> bool:
        self.gamma = self.profile[hour]
        self.rho = np.asarray(sample_demand_deviation(self.model.params.sigma, self.rng, len(self.model.areas)))
        arr = self.arr
        self.full_demand = arr.load_peak * self.gamma[arr.load_area] * (1.0 + self.rho[arr.load_area])
        self._served = None
        if hour + 1 < self.horizon:
            self.push(float(hour + 1), HOUR_TICK, hour + 1)
        if self.corrective:
            self._maybe_end_correction()
        return True

    def _on_gen(self, j: int, _token: int) -> bool:
        new, events = generator_step(self.model.generators[j], self.gens[j], self.clock, self.rng)
        self.gens[j] = new
        self.gen_up[j] = new.status is GenStatus.UP
        self.gen_out[j] = 0.0
        self.gen_offset[j] = 0.0
        self._push_named(events, j)
        return True

    def _on_line_fail(self, k: int, token: int) -> bool:
        if token != self.fail_token[k]:
            return False
        state = self.lines[k]
        line = self.model.lines[k]
        if state.status is not LineStatus.IN_SERVICE:
            # The random-failure clock only runs in service; memorylessness lets us redraw.
            dt = sample_exponential(per_hour(line.failure_rate), self.rng)
            if math.isfinite(dt):
                self.push(self.clock + dt, LINE_FAIL, k, token)
            return False
        self._clear_alarm(k)
        events = line_permanent_failure_step(line, state, self.clock, self.rng)
        self.in_service[k] = False
        self.status_token[k] += 1
        self.fail_token[k] += 1
        self._push_named(events, k, self.fail_token[k])
        return True

    def _on_line_repair(self, k: int, token: int) -> bool:
        if token != self.fail_token[k]:
            return False
        events = line_permanent_failure_step(self.model.lines[k], self.lines[k], self.clock, self.rng)
        self.in_service[k] = True
        self.status_token[k] += 1
        self.fail_token[k] += 1
        self._push_named(events, k, self.fail_token[k])
        return True

    def _on_reclose(self, k: int, token: int) -> bool:
        if token != self.status_token[k] or self.lines[k].status is not LineStatus.OUT_OVERLOAD:
            return False
        manual_reclose(self.lines[k])
        self.in_service[k] = True
        self.status_token[k] += 1
        self.counts["reconnections"] += 1
        return True

    def _on_contact(self, k: int, episode: int) -> bool:
        if self.desk is not None:
            for time, name, line, ep in self.desk.on_contact_done(k, self.clock, episode):
                self.push(time, _KIND[name], line, ep)
        return False

    def _on_solution(self, k: int, episode: int) -> bool:
        if self.desk is None or self.desk.on_solution_done(k, episode) is None:
            return False
        acted = False
        if self.in_service[k] and self.alarm[k] and self.alarm_episode[k] == episode:
            acted = self.execute_corrective_action(k)
        self.desk.finish(k)
        return acted

    def _on_restored(self, area: int, token: int) -> bool:
        if token != self.restore_token[area]:
            return False
        i = self.queues[area].complete_head()
        self._set_load(i, LoadStatus.CONNECTED)
        self.load_cause[i] = -1
        return True

    # Loads -------------------------------------------------------------------

    def _set_load(self, i: int, new: LoadStatus) -> None:
        self.load_state[i] = transition(self.load_state[i], new)
        self.load_code[i] = _CODE[new]
        self._served = None

    def served(self) -> np.ndarray:
        """Demand currently supplied per load (read-only, memoized)."""
        if self._served is None:
            code = self.load_code
            partial = np.maximum(self.full_demand - self.load_shed, 0.0)
            self._served = np.where(code == CONNECTED, self.full_demand, np.where(code == PARTIAL, partial, 0.0))
            self._served.flags.writeable = False
        return self._served

    def _disconnect(self, i: int, cause: OutageCause) -> None:
        self._set_load(i, LoadStatus.DISCONNECTED)
        self.load_shed[i] = 0.0
        self._served = None
        self.load_cause[i] = cause.value
        self.queues[self.arr.load_area[i]].push(i)

    # Settling ----------------------------------------------------------------

    def settle(self) -> None:
        """Bring dispatch, flows and protection into agreement at the current time."""
        reconnected: set[int] = set()
        for _ in range(self.config.max_settle_rounds):
            topo = self.cache.topology(self.in_service)
            if topo is not self.topo:
                children = split_children(self.topo, topo)
                self.topo = topo
                if children:
                    self._handle_split(children)
            self._rebalance()
            self._restoration()
            self._solve_flows()
            if self._protection():
                continue
            if self._reconnect_checks(reconnected):
                continue
            break
        else:
            raise SimulationError("cascade did not settle")
        self._update_unserved()
        if self.config.debug:
            self.check_coherence()

    def _handle_split(self, children) -> None:
        self.counts["splits"] += 1
        event = handle_split(self.model, self.topo, children, self.gen_up, self.served(), self.clock, self.rng)
        for i in event.disconnected:
            self._disconnect(i, OutageCause.SYSTEM_SPLITTING)

    def _island_totals(self, served):
        labels = self.topo.labels
        arr = self.arr
        cap = np.bincount(labels[arr.gen_bus], weights=arr.gen_cap * self.gen_up, minlength=self.topo.n_islands)
        dem = np.bincount(labels[arr.load_bus], weights=served, minlength=self.topo.n_islands)
        return cap, dem

    def _rebalance(self) -> None:
        served = self.served()
        cap, dem = self._island_totals(served)
        short = np.flatnonzero(dem > cap + EPS)
        if len(short):
            load_island = self.topo.labels[self.arr.load_bus]
            for k in short:
                on = np.flatnonzero(load_island == k)
                for i in shed_to_fit({int(i): float(served[i]) for i in on}, float(cap[k]), self.rng):
                    self._disconnect(i, OutageCause.GENERATION_INADEQUACY)
            served = self.served()
        out = dispatch(self.model, self.topo, self.gen_up, served, self.cache.plans).output
        if self.corrective:
            out = self._apply_offsets(out, served)
        self.gen_out = out

    def _apply_offsets(self, base: np.ndarray, served: np.ndarray) -> np.ndarray:
        arr = self.arr
        cap = arr.gen_cap * self.gen_up
        out = np.clip(base + self.gen_offset * self.gen_up, 0.0, cap)
        labels = self.topo.labels
        gen_island = labels[arr.gen_bus]
        _, dem = self._island_totals(served)
        got = np.bincount(gen_island, weights=out, minlength=self.topo.n_islands)
        for k in np.flatnonzero(np.abs(dem - got) > EPS):
            gap = float(dem[k] - got[k])
            order = [j for j in self._gen_prio_order if gen_island[j] == k and self.gen_up[j]]
            if gap < 0:
                order.reverse()
            for j in order:
                if abs(gap) <= EPS:
                    break
                if gap > 0:
                    step = min(gap, cap[j] - out[j])
                else:
                    step = -min(-gap, out[j])
                out[j] += step
                gap -= step
        return out

    def _restoration(self) -> None:
        served = self.served()
        cap, dem = self._island_totals(served)
        labels = self.topo.labels
        for a, q in enumerate(self.queues):
            head = q.head()
            if head is None:
                if q.active:
                    q.stop()
                continue
            island = labels[self.arr.load_bus[head]]
            feasible = cap[island] + EPS >= dem[island] + self.full_demand[head]
            if self.load_code[head] == WAITING:
                if not feasible:
                    self._set_load(head, LoadStatus.DISCONNECTED)
                    q.stop()
                    self.restore_token[a] += 1
                continue
            if feasible:
                self._set_load(head, LoadStatus.WAITING)
                done = q.begin_head(self.clock, float(self.full_demand[head]))
                self.restore_token[a] += 1
                self.push(max(done, self.clock), RESTORED, a, self.restore_token[a])
            elif q.active:
                q.stop()

    def _solve_flows(self) -> None:
        arr = self.arr
        served = self.served()
        inj = np.bincount(arr.gen_bus, weights=self.gen_out, minlength=self.model.n_bus)
        inj -= np.bincount(arr.load_bus, weights=served, minlength=self.model.n_bus)
        self.injections = inj
        if self.config.flow_method == "direct":
            self.flows = self.cache.solver(self.topo).flows(inj)
            self._theta_valid = False
        else:
            sol = solve_dc_flow(self.model, self.topo, inj, method=self.config.flow_method)
            self.flows, self.theta = sol.flows, sol.theta
            self._theta_valid = True

    def _angles(self) -> np.ndarray:
        if not self._theta_valid:
            self.theta = self.cache.solver(self.topo).theta(self.injections)
            self._theta_valid = True
        return self.theta

    def _protection(self) -> bool:
        """Alarm, clear or trip lines on the new flows; True if anything tripped."""
        arr = self.arr
        absf = np.abs(self.flows)
        over = self.in_service & (absf >= arr.line_rating)
        touched = np.flatnonzero(over | (self.alarm & self.in_service))
        if len(touched) == 0:
            return False
        beta = self.model.params.beta
        trips = []
        for k in touched:
            k = int(k)
            actions = protection_step(self.model.lines[k], self.flows[k], self.lines[k], self.prot[k], beta, self.rng)
            for act in actions:
                if act == "alarm":
                    self.alarm[k] = True
                    self.threshold[k] = self.lines[k].threshold
                    self.alarm_episode[k] += 1
                    self.overloads[k] += 1
                    if self.desk is not None:
                        for time, name, line, ep in self.desk.on_alarm(k, self.clock, int(self.alarm_episode[k])):
                            self.push(time, _KIND[name], line, ep)
                elif act == "clear":
                    self._clear_alarm(k)
                elif act == "trip":
                    trips.append(k)
        for k in trips:
            self._clear_alarm(k)
            events = trip_line(self.model.lines[k], self.lines[k], self.prot[k], self.clock)
            self.in_service[k] = False
            self.status_token[k] += 1
            self._push_named(events, k, self.status_token[k])
            self.tripped.add(k)
            self.counts["trips"] += 1
        return bool(trips)

    def _clear_alarm(self, k: int) -> None:
        if self.alarm[k]:
            self.alarm[k] = False
            self.threshold[k] = np.inf
            if self.prot[k].status is ProtectionStatus.ALARM:
                self.prot[k].status = transition(self.prot[k].status, ProtectionStatus.IDLE)
            self.lines[k].threshold = math.inf
            if self.desk is not None:
                self.desk.cancel(k)

    def _reconnect_checks(self, done: set[int]) -> bool:
        self.tripped = {k for k in self.tripped if self.lines[k].status is LineStatus.OUT_OVERLOAD}
        tripped = [k for k in sorted(self.tripped) if k not in done and self.lines[k].status is LineStatus.OUT_OVERLOAD]
        if not tripped:
            return False
        arr = self.arr
        labels = self.topo.labels
        theta = None
        changed = False
        eta = self.model.params.eta
        for k in tripped:
            a, b = int(arr.line_from[k]), int(arr.line_to[k])
            if labels[a] != labels[b]:
                continue  # angles in different islands are not comparable
            if theta is None:
                theta = self._angles()
            ok, _ = line_reconnect_check(self.model.lines[k], theta[a], theta[b], self.clock, self.lines[k], eta)
            if ok:
                self.in_service[k] = True
                self.status_token[k] += 1
                self.counts["reconnections"] += 1
                done.add(k)
                changed = True
        return changed

    # Operator actions -----------------------------------------------------

    def execute_corrective_action(self, k: int) -> bool:
        """Relieve the overload on line `k` by redispatch and, if needed, shedding."""
        if abs(self.flows[k]) < self.arr.line_rating[k]:
            return False
        served = self.served()
        topo = self.topo
        problem = opf.build_problem(
            self.model, topo, self.flows, self.gen_out, self.gen_up, served, k, sens=self.cache.sensitivities(topo)
        )
        sol = opf.solve(problem)
        if not sol.optimal:
            self.counts["lp_infeasible"] += 1
            log.debug("corrective LP for line %s: %s %s", self.model.lines[k].id, sol.status, sol.message)
            return False
        self.counts["corrective_actions"] += 1
        cap = self.arr.gen_cap
        self.gen_out[problem.gen_idx] = np.clip(self.gen_out[problem.gen_idx] + sol.delta_gen, 0.0, cap[problem.gen_idx])
        for i, dd in zip(problem.load_idx, sol.delta_shed):
            if dd > EPS:
                self._set_load(int(i), LoadStatus.PARTIALLY_SHED)
                self.load_shed[i] += dd
                self._served = None
                self.load_cause[i] = OutageCause.OPERATOR_INTERVENTION.value
        base = dispatch(self.model, topo, self.gen_up, self.served(), self.cache.plans).output
        self.gen_offset = np.where(self.gen_up, self.gen_out - base, 0.0)
        self.corrective = True
        return True

    def _maybe_end_correction(self) -> None:
        """Undo corrective measures once the plain dispatch is overload-free again."""
        partial = self.load_code == PARTIAL
        served = np.where(partial, self.full_demand, self.served())
        cap, dem = self._island_totals(served)
        if np.any(dem > cap + EPS):
            return
        out = dispatch(self.model, self.topo, self.gen_up, served, self.cache.plans).output
        arr = self.arr
        inj = np.bincount(arr.gen_bus, weights=out, minlength=self.model.n_bus)
        inj -= np.bincount(arr.load_bus, weights=served, minlength=self.model.n_bus)
        flows = self.cache.solver(self.topo).flows(inj)
        if np.any(self.in_service & (np.abs(flows) >= arr.line_rating)):
            return
        for i in np.flatnonzero(partial):
            self._set_load(int(i), LoadStatus.CONNECTED)
            self.load_shed[i] = 0.0
            self.load_cause[i] = -1
        self._served = None
        self.gen_offset[:] = 0.0
        self.corrective = False

    # Accounting ----------------------------------------------------------------

    def _update_unserved(self) -> None:
        code = self.load_code
        out = (code == DISCONNECTED) | (code == WAITING)
        un = np.where(out, self.full_demand, 0.0)
        un += np.where(code == PARTIAL, np.minimum(self.load_shed, self.full_demand), 0.0)
        self.unserved_load = un
        has = self.load_cause >= 0
        self.unserved_rate = np.bincount(self.load_cause[has], weights=un[has], minlength=len(CAUSES))
        total = float(un.sum())
        if total > EPS:
            if self.open_record is None:
                self.open_record = BlackoutRecord(self.clock, self.clock, np.zeros(len(CAUSES)), 0.0, self.year)
            self.open_record.max_unserved = max(self.open_record.max_unserved, total)
        elif self.open_record is not None:
            self.open_record.end = self.clock
            self.records.append(self.open_record)
            self.open_record = None

    def _accrue(self, t: float) -> None:
        dt = t - self.last_accrual
        if dt > 0:
            if self.open_record is not None:
                delta = self.unserved_rate * dt
                self.energy_by_cause += delta
                self.open_record.energy_by_cause += delta
            self.integrated += float(self.unserved_load.sum()) * dt
            self.last_accrual = t

    def check_coherence(self) -> None:
        """Assert that outputs, flows and load states agree with each other."""
        arr = self.arr
        served = self.served()
        cap = arr.gen_cap * self.gen_up
        if np.any(self.gen_out < -1e-6) or np.any(self.gen_out > cap + 1e-6):
            raise SimulationError("generator output outside its bounds")
        labels = self.topo.labels
        got = np.bincount(labels[arr.gen_bus], weights=self.gen_out, minlength=self.topo.n_islands)
        _, dem = self._island_totals(served)
        if np.any(np.abs(got - dem) > 1e-6):
            raise SimulationError("island generation and demand differ")
        inj = np.bincount(arr.gen_bus, weights=self.gen_out, minlength=self.model.n_bus)
        inj -= np.bincount(arr.load_bus, weights=served, minlength=self.model.n_bus)
        ref = DirectSolver(self.model, self.topo).flows(inj)
        if np.any(np.abs(ref - self.flows) > 1e-6):
            raise SimulationError("stored flows do not match the current injections")
        if np.any(self.in_service & (np.abs(self.flows) >= self.threshold)):
            raise SimulationError("a line above its trip level is still in service")
        for i, s in enumerate(self.load_state):
            if (self.load_shed[i] > 0) != (s is LoadStatus.PARTIALLY_SHED):
                raise SimulationError(f"load {i}: shed amount inconsistent with state {s.value}")


def run_year(
    model: NetworkModel,
    profile: np.ndarray,
    config: SimConfig,
    rng: np.random.Generator,
    year: int = 0,
    cache: FlowCache | None = None,
) -> ReplicationResult:
    """Simulate one year; solver failures abort the replication with a diagnostic."""
    sim = Simulation(model, profile, config, rng, year, cache)
    try:
        return sim.run()
    except (SimulationError, np.linalg.LinAlgError, ValueError) as exc:
        log.warning("year %d aborted: %s", year, exc)
        return ReplicationResult(
            year, [], np.zeros(len(CAUSES)), 0.0, np.zeros(len(model.lines), dtype=np.int64),
            dict(sim.counts), aborted=True, message=str(exc),
        )


_WORKER: dict = {}


def _worker_init(model, profile, config, seed):
    _WORKER.update(model=model, profile=profile, config=config, seed=seed, cache=FlowCache(model))


def _worker_run(year: int) -> ReplicationResult:
    w = _WORKER
    return run_year(w["model"], w["profile"], w["config"], rng_stream(w["seed"], year), year, w["cache"])


def run_monte_carlo(
    model: NetworkModel,
    profile: np.ndarray,
    config: SimConfig,
    years: int,
    seed: int,
    workers: int = 1,
    progress=None,
) -> list[ReplicationResult]:
    """Run `years` independent replications on streams (seed, 1..years).

    Results are ordered by year and do not depend on `workers`.
    """
    if years < 1:
        raise ValueError(f"number of years must be >= 1, got {years}")
    problems = validate(model)
    if problems:
        raise ValueError("invalid network model: " + "; ".join(problems))
    indices = range(1, years + 1)
    results: list[ReplicationResult] = []
    if workers <= 1:
        cache = FlowCache(model)
        for y in indices:
            results.append(run_year(model, profile, config, rng_stream(seed, y), y, cache))
            if progress is not None:
                progress(len(results), years)
        return results
    with ProcessPoolExecutor(workers, initializer=_worker_init, initargs=(model, profile, config, seed)) as pool:
        for res in pool.map(_worker_run, indices, chunksize=max(1, years // (4 * workers))):
            results.append(res)
            if progress is not None:
                progress(len(results), years)
    return sorted(results, key=lambda r: r.year)
