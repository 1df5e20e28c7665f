"""DC power flow per island and linear line sensitivity factors.

Angles are kept in the unit that makes the flow relation read
P = (theta_a - theta_b) / x with P in MW and x in per unit, i.e. theta is
per-unit reactance times MW. Dividing by the system base gives radians.

Two solution paths exist: the bus-by-bus fixed-point sweep (each bus
angle is the reactance-weighted mean of its neighbours plus its own
injection) and a direct factorization of the reduced susceptance matrix
per island. The direct path is the oracle for the sweep and its fallback.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .model import NetworkModel, island_labels

BALANCE_TOL = 1e-6  # MW, per island
SWEEP_TOL = 1e-9
MAX_SWEEPS = 100_000


class UnbalancedIslandError(ValueError):
    pass


@dataclass(frozen=True)
class Topology:
    """Live connectivity: in-service mask, island labels and references."""

    in_service: np.ndarray
    labels: np.ndarray
    refs: tuple[int, ...]  # reference bus index per island
    fingerprint: bytes

    @property
    def n_islands(self) -> int:
        return len(self.refs)

    def members(self, island: int) -> np.ndarray:
        return np.flatnonzero(self.labels == island)


def topology(model: NetworkModel, in_service=None) -> Topology:
    arr = model.arrays
    if in_service is None:
        mask = np.ones(len(model.lines), dtype=bool)
    else:
        mask = np.asarray(in_service, dtype=bool).copy()
    labels = island_labels(model.n_bus, arr.line_from, arr.line_to, mask)
    n = int(labels.max()) + 1
    # Labels follow the smallest bus index, so the first member is the reference.
    refs = tuple(int(np.argmax(labels == k)) for k in range(n))
    mask.setflags(write=False)
    labels.setflags(write=False)
    return Topology(mask, labels, refs, hashlib.blake2b(np.packbits(mask).tobytes(), digest_size=12).digest())


@dataclass
class FlowSolution:
    theta: np.ndarray  # per bus, x_pu * MW
    flows: np.ndarray  # per line, MW; 0 for lines out of service
    refs: tuple[int, ...]
    method: str = "direct"
    sweeps: int = 0

    def angles_rad(self, base_mva: float) -> np.ndarray:
        return self.theta / base_mva


def net_injections(model: NetworkModel, gen_output, load_demand) -> np.ndarray:
    """Per-bus generation minus demand, MW."""
    arr = model.arrays
    inj = np.bincount(arr.gen_bus, weights=np.asarray(gen_output, dtype=float), minlength=model.n_bus)
    inj -= np.bincount(arr.load_bus, weights=np.asarray(load_demand, dtype=float), minlength=model.n_bus)
    return inj


def check_balance(topo: Topology, injections: np.ndarray, tol: float = BALANCE_TOL) -> None:
    sums = np.bincount(topo.labels, weights=injections, minlength=topo.n_islands)
    bad = np.flatnonzero(np.abs(sums) > tol * max(1.0, np.abs(injections).max(initial=0.0)))
    if len(bad):
        k = int(bad[0])
        raise UnbalancedIslandError(f"island {k} has net injection {sums[k]:.6g} MW")


def line_flows(model: NetworkModel, topo: Topology, theta: np.ndarray) -> np.ndarray:
    arr = model.arrays
    flows = (theta[arr.line_from] - theta[arr.line_to]) / arr.line_x
    return np.where(topo.in_service, flows, 0.0)


class DirectSolver:
    """Per-topology factorization: theta = Z @ P, flows = PTDF @ P.

    Z is block-diagonal over islands with zero rows and columns at each
    island reference, so the reference absorbs the island's balance.
    """

    def __init__(self, model: NetworkModel, topo: Topology, refs: tuple[int, ...] | None = None):
        self.model = model
        self.topo = topo
        self.refs = topo.refs if refs is None else tuple(refs)
        arr = model.arrays
        n = model.n_bus
        b = np.where(topo.in_service, 1.0 / arr.line_x, 0.0)
        B = np.zeros((n, n))
        np.add.at(B, (arr.line_from, arr.line_from), b)
        np.add.at(B, (arr.line_to, arr.line_to), b)
        np.add.at(B, (arr.line_from, arr.line_to), -b)
        np.add.at(B, (arr.line_to, arr.line_from), -b)
        Z = np.zeros((n, n))
        for k, ref in enumerate(self.refs):
            members = topo.members(k)
            if topo.labels[ref] != k:
                raise ValueError(f"reference bus {ref} is not in island {k}")
            others = members[members != ref]
            if len(others):
                Z[np.ix_(others, others)] = np.linalg.inv(B[np.ix_(others, others)])
        self.Z = Z
        ptdf = (Z[arr.line_from] - Z[arr.line_to]) / arr.line_x[:, None]
        ptdf[~topo.in_service] = 0.0
        self.ptdf = ptdf

    def theta(self, injections: np.ndarray) -> np.ndarray:
        return self.Z @ injections

    def flows(self, injections: np.ndarray) -> np.ndarray:
        return self.ptdf @ injections


def _sweep_solve(model: NetworkModel, topo: Topology, injections: np.ndarray, tol: float, max_sweeps: int):
    """Gauss-Seidel sweeps of the bus fixed point; references held at 0."""
    arr = model.arrays
    n = model.n_bus
    nbrs: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for k in np.flatnonzero(topo.in_service):
        a, b, y = int(arr.line_from[k]), int(arr.line_to[k]), 1.0 / float(arr.line_x[k])
        nbrs[a].append((b, y))
        nbrs[b].append((a, y))
    refs = set(topo.refs)
    order = [a for a in range(n) if a not in refs and nbrs[a]]
    ysum = [sum(y for _, y in nbrs[a]) for a in range(n)]
    inj = [float(v) for v in injections]
    theta = [0.0] * n
    for sweep in range(1, max_sweeps + 1):
        delta = 0.0
        for a in order:
            acc = inj[a]
            for b, y in nbrs[a]:
                acc += y * theta[b]
            new = acc / ysum[a]
            d = abs(new - theta[a])
            if d > delta:
                delta = d
            theta[a] = new
        if delta < tol:
            return np.array(theta), sweep, True
    return np.array(theta), max_sweeps, False


def solve_dc_flow(
    model: NetworkModel,
    topo: Topology,
    injections,
    method: str = "iterative",
    tol: float = SWEEP_TOL,
    max_sweeps: int = MAX_SWEEPS,
) -> FlowSolution:
    """Solve bus angles and line flows for balanced per-island injections.

    `method="iterative"` runs the fixed-point sweep and falls back to the
    direct factorization if it does not converge within `max_sweeps`.
    """
    injections = np.asarray(injections, dtype=float)
    check_balance(topo, injections)
    if method == "iterative":
        theta, sweeps, ok = _sweep_solve(model, topo, injections, tol, max_sweeps)
        if ok:
            return FlowSolution(theta, line_flows(model, topo, theta), topo.refs, "iterative", sweeps)
    elif method != "direct":
        raise ValueError(f"unknown method {method!r}")
    theta = DirectSolver(model, topo).theta(injections)
    return FlowSolution(theta, line_flows(model, topo, theta), topo.refs, "direct")


@dataclass
class FlowReport:
    max_residual: float  # MW, nodal balance
    max_discrepancy: float  # MW, flows against the direct solution
    residuals: np.ndarray = field(repr=False, default=None)

    def ok(self, tol: float = 1e-6) -> bool:
        return self.max_residual <= tol and self.max_discrepancy <= tol


def verify_flow(solution: FlowSolution, model: NetworkModel, topo: Topology, injections) -> FlowReport:
    """Nodal conservation residual of `solution` and its gap to the direct solve."""
    arr = model.arrays
    injections = np.asarray(injections, dtype=float)
    flows = line_flows(model, topo, solution.theta)
    outflow = np.bincount(arr.line_from, weights=flows, minlength=model.n_bus)
    outflow -= np.bincount(arr.line_to, weights=flows, minlength=model.n_bus)
    residuals = outflow - injections
    # Each island's reference absorbs only the island total, which is zero when balanced.
    direct = DirectSolver(model, topo).flows(injections)
    return FlowReport(
        float(np.abs(residuals).max(initial=0.0)),
        float(np.abs(solution.flows - direct).max(initial=0.0)),
        residuals,
    )


@dataclass(frozen=True)
class SensitivityFactors:
    line_idx: np.ndarray  # rows: model line indices in scope
    matrix: np.ndarray  # d flow / d injection, rows by line_idx, columns by bus
    fingerprint: bytes

    def predict(self, delta_injection: np.ndarray) -> np.ndarray:
        return self.matrix @ delta_injection


def sensitivity_factors(
    model: NetworkModel,
    topo: Topology,
    scope=None,
    refs: tuple[int, ...] | None = None,
    solver: DirectSolver | None = None,
) -> SensitivityFactors:
    """Flow change on each scope line per MW injected at each bus.

    The island reference absorbs the balancing injection. `scope` holds
    model line indices (all in-service lines when omitted).
    """
    if scope is None:
        idx = np.flatnonzero(topo.in_service)
    else:
        idx = np.asarray(sorted(scope), dtype=np.int64)
        out = [model.lines[k].id for k in idx if not topo.in_service[k]]
        if out:
            raise ValueError(f"scope lines out of service: {out}")
    if solver is None or (refs is not None and tuple(refs) != solver.refs):
        solver = DirectSolver(model, topo, refs)
    return SensitivityFactors(idx, solver.ptdf[idx].copy(), topo.fingerprint)
