"""Corrective redispatch / load-shedding LP for a line overload.

The operator minimizes weighted generator redispatch plus heavily
weighted load shedding, keeping every line in its scope within
xi * rating. Redispatch |dP| is linearized as dP = up - down with both
parts non-negative. Shedding dD raises the net injection at its bus.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from . import simplex
from .model import NetworkModel
from .powerflow import DirectSolver, SensitivityFactors, Topology, sensitivity_factors

NEAR, ONE_AWAY, FAR = 1.0, 10.0, 100.0
VERIFY_TOL = 1e-6  # MW


class StaleSensitivityError(ValueError):
    pass


@dataclass
class CorrectiveLpProblem:
    target: int  # overloaded line index
    tie_line: bool
    gen_idx: np.ndarray
    gen_output: np.ndarray
    gen_cap: np.ndarray
    load_idx: np.ndarray
    load_demand: np.ndarray
    bus_weight: np.ndarray  # per bus
    line_idx: np.ndarray  # constrained lines
    line_flow: np.ndarray
    line_limit: np.ndarray  # xi * rating
    sens: np.ndarray  # rows line_idx, columns buses
    gen_bus: np.ndarray
    load_bus: np.ndarray
    shed_weight: float
    fingerprint: bytes = b""

    @property
    def n_gen(self) -> int:
        return len(self.gen_idx)

    @property
    def n_load(self) -> int:
        return len(self.load_idx)

    def cost(self) -> np.ndarray:
        wg = self.bus_weight[self.gen_bus]
        wd = self.bus_weight[self.load_bus] * self.shed_weight
        return np.concatenate([wg, wg, wd])

    def bounds(self) -> np.ndarray:
        head = np.maximum(self.gen_cap - self.gen_output, 0.0)
        return np.concatenate([head, np.maximum(self.gen_output, 0.0), np.maximum(self.load_demand, 0.0)])

    def matrices(self):
        """(A_ub, b_ub, A_eq, b_eq) over the variables [up, down, shed]."""
        sg = self.sens[:, self.gen_bus]
        sd = self.sens[:, self.load_bus]
        row = np.hstack([sg, -sg, sd])
        A_ub = np.vstack([row, -row])
        b_ub = np.concatenate([self.line_limit - self.line_flow, self.line_limit + self.line_flow])
        A_eq = np.concatenate([np.ones(self.n_gen), -np.ones(self.n_gen), np.ones(self.n_load)])[None, :]
        return A_ub, b_ub, A_eq, np.zeros(1)

    def variable_names(self) -> list[str]:
        return (
            [f"up_{j}" for j in self.gen_idx]
            + [f"down_{j}" for j in self.gen_idx]
            + [f"shed_{i}" for i in self.load_idx]
        )


@dataclass
class CorrectiveLpSolution:
    delta_gen: np.ndarray  # MW per problem generator
    delta_shed: np.ndarray  # MW per problem load
    objective: float
    status: str
    iterations: int = 0
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == simplex.OPTIMAL


def distance_weights(model: NetworkModel, topo: Topology, target: int) -> tuple[np.ndarray, bool]:
    """Per-bus weights for an overload on line `target` and whether it is a tie-line."""
    arr = model.arrays
    a, b = int(arr.line_from[target]), int(arr.line_to[target])
    area_a, area_b = arr.bus_area[a], arr.bus_area[b]
    if area_a != area_b:
        w = np.full(model.n_bus, FAR)
        near = {a, b}
        live = np.flatnonzero(topo.in_service)
        for k in live:
            f, t = int(arr.line_from[k]), int(arr.line_to[k])
            if f in near:
                w[t] = ONE_AWAY
            if t in near:
                w[f] = ONE_AWAY
        w[a] = w[b] = NEAR
        return w, True
    return np.where(arr.bus_area == area_a, NEAR, FAR), False


def scope_lines(model: NetworkModel, topo: Topology, target: int) -> np.ndarray:
    """In-service lines constrained when relieving `target`.

    Tie-line overloads constrain every line inside the two areas
    (tie-lines between them included); intra-area overloads only the
    area's own lines. Only the target's island is considered.
    """
    arr = model.arrays
    areas = {int(arr.bus_area[arr.line_from[target]]), int(arr.bus_area[arr.line_to[target]])}
    fa = arr.bus_area[arr.line_from]
    ta = arr.bus_area[arr.line_to]
    inside = np.isin(fa, list(areas)) & np.isin(ta, list(areas))
    island = topo.labels[arr.line_from[target]]
    same = topo.labels[arr.line_from] == island
    return np.flatnonzero(inside & same & topo.in_service)


def build_problem(
    model: NetworkModel,
    topo: Topology,
    flows,
    gen_output,
    gen_available,
    load_demand,
    target: int,
    sens: SensitivityFactors | None = None,
    solver: DirectSolver | None = None,
) -> CorrectiveLpProblem:
    """Assemble the corrective LP for an overload on line `target`.

    `load_demand` is the currently served demand per load. When the target
    is no longer overloaded the constraint set is left empty.
    """
    arr = model.arrays
    p = model.params
    flows = np.asarray(flows, dtype=float)
    if sens is not None and sens.fingerprint != topo.fingerprint:
        raise StaleSensitivityError("sensitivity factors were computed for another topology")
    if not topo.in_service[target]:
        raise ValueError(f"line {model.lines[target].id} is out of service")
    weights, tie = distance_weights(model, topo, target)
    island = topo.labels[arr.line_from[target]]
    gen_available = np.asarray(gen_available, dtype=bool)
    gen_idx = np.flatnonzero(gen_available & (topo.labels[arr.gen_bus] == island))
    demand = np.asarray(load_demand, dtype=float)
    load_ok = (demand > 0) & (topo.labels[arr.load_bus] == island)
    if not tie:
        load_ok &= arr.load_area == arr.bus_area[arr.line_from[target]]
    load_idx = np.flatnonzero(load_ok)

    if abs(flows[target]) >= arr.line_rating[target]:
        lines = scope_lines(model, topo, target)
    else:
        lines = np.zeros(0, dtype=np.int64)
    if sens is None:
        sens = sensitivity_factors(model, topo, solver=solver)
    pos = {int(k): r for r, k in enumerate(sens.line_idx)}
    missing = [model.lines[k].id for k in lines if int(k) not in pos]
    if missing:
        raise ValueError(f"sensitivity factors lack lines {missing}")
    rows = sens.matrix[[pos[int(k)] for k in lines]] if len(lines) else np.zeros((0, model.n_bus))
    return CorrectiveLpProblem(
        target=int(target),
        tie_line=tie,
        gen_idx=gen_idx,
        gen_output=np.asarray(gen_output, dtype=float)[gen_idx],
        gen_cap=arr.gen_cap[gen_idx],
        load_idx=load_idx,
        load_demand=demand[load_idx],
        bus_weight=weights,
        line_idx=lines,
        line_flow=flows[lines],
        line_limit=p.xi * arr.line_rating[lines],
        sens=rows,
        gen_bus=arr.gen_bus[gen_idx],
        load_bus=arr.load_bus[load_idx],
        shed_weight=p.shed_weight,
        fingerprint=topo.fingerprint,
    )


def solve(problem: CorrectiveLpProblem, rule: str = "dantzig") -> CorrectiveLpSolution:
    ng, nd = problem.n_gen, problem.n_load
    if len(problem.line_idx) == 0:
        return CorrectiveLpSolution(np.zeros(ng), np.zeros(nd), 0.0, simplex.OPTIMAL)
    A_ub, b_ub, A_eq, b_eq = problem.matrices()
    try:
        res = simplex.linprog(problem.cost(), A_ub, b_ub, A_eq, b_eq, problem.bounds(), rule=rule)
    except (FloatingPointError, np.linalg.LinAlgError) as exc:  # pragma: no cover - defensive
        return CorrectiveLpSolution(np.zeros(ng), np.zeros(nd), np.inf, simplex.INFEASIBLE, 0, f"numerical failure: {exc}")
    x = res.x
    dp = x[:ng] - x[ng : 2 * ng]
    dd = x[2 * ng :]
    return CorrectiveLpSolution(dp, dd, res.objective, res.status, res.iterations, res.message)


@dataclass
class ConstraintReport:
    balance: float
    bound_violation: float
    line_violation: float
    post_flow_violation: float | None = None
    details: list[str] = field(default_factory=list)

    def ok(self, tol: float = VERIFY_TOL) -> bool:
        worst = [self.balance, self.bound_violation, self.line_violation]
        if self.post_flow_violation is not None:
            worst.append(self.post_flow_violation)
        return max(worst) <= tol


def verify_solution(
    problem: CorrectiveLpProblem,
    solution: CorrectiveLpSolution,
    model: NetworkModel | None = None,
    topo: Topology | None = None,
    injections=None,
) -> ConstraintReport:
    """Residuals of the balance, bounds and line constraints.

    With `model`, `topo` and the pre-action `injections`, the action is also
    applied and the flows re-solved, checking the scope lines directly.
    """
    dp, dd = solution.delta_gen, solution.delta_shed
    details = []
    balance = abs(float(dp.sum() + dd.sum()))
    lo = np.concatenate([-problem.gen_output, np.zeros(problem.n_load)])
    hi = np.concatenate([problem.gen_cap - problem.gen_output, problem.load_demand])
    v = np.concatenate([dp, dd])
    bound = float(np.maximum(np.maximum(lo - v, v - hi), 0.0).max(initial=0.0))
    delta_inj = np.zeros(len(problem.bus_weight))
    np.add.at(delta_inj, problem.gen_bus, dp)
    np.add.at(delta_inj, problem.load_bus, dd)
    predicted = problem.line_flow + problem.sens @ delta_inj
    line = float(np.maximum(np.abs(predicted) - problem.line_limit, 0.0).max(initial=0.0))
    if balance > VERIFY_TOL:
        details.append(f"balance residual {balance:.3g} MW")
    if bound > VERIFY_TOL:
        details.append(f"bound violation {bound:.3g} MW")
    if line > VERIFY_TOL:
        details.append(f"line limit violation {line:.3g} MW")
    post = None
    if model is not None and topo is not None and injections is not None:
        flows = DirectSolver(model, topo).flows(np.asarray(injections, dtype=float) + delta_inj)
        post = float(np.maximum(np.abs(flows[problem.line_idx]) - problem.line_limit, 0.0).max(initial=0.0))
        if post > VERIFY_TOL:
            details.append(f"re-solved flow violation {post:.3g} MW")
    return ConstraintReport(balance, bound, line, post, details)


def dump_problem(problem: CorrectiveLpProblem, out=None) -> str:
    """Plain-text listing of the LP for cross-checking with other solvers.

    Layout: a FORMAT line, then `VAR name lower upper cost` rows, then one
    row per constraint: `EQ|LE name rhs var:coef ...` (zero coefficients
    omitted). All variables have lower bound 0.
    """
    names = problem.variable_names()
    c = problem.cost()
    ub = problem.bounds()
    A_ub, b_ub, A_eq, b_eq = problem.matrices() if len(problem.line_idx) else (
        np.zeros((0, len(names))), np.zeros(0), *problem.matrices()[2:]
    )
    buf = io.StringIO()
    buf.write("FORMAT v1 corrective-lp\n")
    buf.write(f"TARGET {problem.target} {'tie' if problem.tie_line else 'intra'}\n")
    for name, u, cost in zip(names, ub, c):
        buf.write(f"VAR {name} 0 {u:.10g} {cost:.10g}\n")

    def emit(kind, tag, coefs, rhs):
        terms = " ".join(f"{names[k]}:{coefs[k]:.12g}" for k in np.flatnonzero(coefs))
        buf.write(f"{kind} {tag} {rhs:.12g} {terms}\n")

    for r in range(len(b_eq)):
        emit("EQ", f"balance{r}", A_eq[r], b_eq[r])
    n_lines = len(problem.line_idx)
    for r in range(len(b_ub)):
        k = problem.line_idx[r % n_lines]
        emit("LE", f"line{k}{'+' if r < n_lines else '-'}", A_ub[r], b_ub[r])
    text = buf.getvalue()
    if out is not None:
        if hasattr(out, "write"):
            out.write(text)
        else:
            with open(out, "w") as fh:
                fh.write(text)
    return text
