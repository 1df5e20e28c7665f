"""Priority-list generation dispatch and load disconnection to restore balance."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .model import NetworkModel
from .powerflow import Topology


@dataclass
class DispatchResult:
    output: np.ndarray  # MW per generator
    unserved: np.ndarray  # MW per area
    feasible: np.ndarray  # per island


def priority_fill(demand: float, caps: Sequence[float], priorities: Sequence[int]) -> tuple[list[float], float]:
    """Fill `demand` tier by tier, splitting each tier equally with capping.

    Returns the outputs (same order as `caps`) and the uncovered demand.
    """
    n = len(caps)
    out = [0.0] * n
    remaining = float(demand)
    if remaining <= 0 or n == 0:
        return out, max(remaining, 0.0)
    order = sorted(range(n), key=lambda j: (priorities[j], j))
    i = 0
    while i < n and remaining > 0:
        p = priorities[order[i]]
        tier = []
        while i < n and priorities[order[i]] == p:
            tier.append(order[i])
            i += 1
        total = sum(caps[j] for j in tier)
        if total <= remaining:
            for j in tier:
                out[j] = float(caps[j])
            remaining -= total
            continue
        # Water-filling: units capped below the equal share drop out.
        k = len(tier)
        for j in sorted(tier, key=lambda j: (caps[j], j)):
            share = remaining / k
            if caps[j] <= share:
                out[j] = float(caps[j])
                remaining -= caps[j]
                k -= 1
            else:
                out[j] = share
        remaining = 0.0
    return out, max(remaining, 0.0)


def dispatch_island(
    area_demand: Mapping[int, float],
    units: Mapping[int, Sequence[int]],
    caps: Sequence[float],
    priorities: Sequence[int],
) -> tuple[dict[int, float], dict[int, float]]:
    """Dispatch one island.

    `area_demand` maps area -> connected demand on the island and `units`
    maps area -> available generator indices on the island. Areas short of
    capacity are helped by the others, largest surplus first.
    Returns (output by generator index, unserved demand by area).
    """
    area_cap = {k: sum(caps[j] for j in units.get(k, ())) for k in set(area_demand) | set(units)}
    target = {k: min(area_demand.get(k, 0.0), area_cap[k]) for k in area_cap}
    deficit = {k: area_demand.get(k, 0.0) - target[k] for k in area_cap}
    surplus = sorted(((area_cap[k] - target[k], k) for k in area_cap), key=lambda s: (-s[0], s[1]))
    for k in sorted(d for d in deficit if deficit[d] > 0):
        for idx, (spare, helper) in enumerate(surplus):
            if deficit[k] <= 0:
                break
            if helper == k or spare <= 0:
                continue
            give = min(spare, deficit[k])
            target[helper] += give
            deficit[k] -= give
            surplus[idx] = (spare - give, helper)
    output: dict[int, float] = {}
    for k, gens in units.items():
        gens = list(gens)
        out, _ = priority_fill(target[k], [caps[j] for j in gens], [priorities[j] for j in gens])
        output.update(zip(gens, out))
    return output, {k: v for k, v in deficit.items() if v > 0}


def _share_out(area_demand: list[float], area_cap: list[float]) -> tuple[list[float], list[float]]:
    """Per-area generation targets with cross-area help, largest surplus first."""
    target = [min(d, c) for d, c in zip(area_demand, area_cap)]
    deficit = [d - t for d, t in zip(area_demand, target)]
    if not any(v > 0 for v in deficit):
        return target, deficit
    spare = [c - t for c, t in zip(area_cap, target)]
    helpers = sorted(range(len(spare)), key=lambda a: (-spare[a], a))
    for a in range(len(deficit)):
        for h in helpers:
            if deficit[a] <= 0:
                break
            if h == a or spare[h] <= 0:
                continue
            give = min(spare[h], deficit[a])
            target[h] += give
            spare[h] -= give
            deficit[a] -= give
    return target, deficit


class FillPlan:
    """Tier layout of a fixed set of units (sorted by priority) for repeated filling."""

    __slots__ = ("units", "caps", "tiers", "total")

    def __init__(self, units, caps, priorities):
        self.units = np.asarray(units, dtype=np.int64)
        self.caps = [float(c) for c in caps]
        prio = [int(p) for p in priorities]
        self.tiers = []  # (lo, hi, capacity before the tier, sorted tier caps)
        lo, before = 0, 0.0
        while lo < len(prio):
            hi = lo
            while hi < len(prio) and prio[hi] == prio[lo]:
                hi += 1
            tier = self.caps[lo:hi]
            self.tiers.append((lo, hi, before, sorted(tier)))
            before += sum(tier)
            lo = hi
        self.total = before

    def fill(self, demand: float) -> list[float]:
        caps = self.caps
        if demand >= self.total:
            return list(caps)
        out = [0.0] * len(caps)
        for lo, hi, before, srt in self.tiers:
            remaining = demand - before
            if remaining <= 0:
                break
            tier_cap = sum(srt)
            if tier_cap <= remaining:
                out[lo:hi] = caps[lo:hi]
                continue
            # Water level: the smallest units saturate, the rest share what is left.
            k = len(srt)
            level = remaining / k
            for c in srt:
                if c > level:
                    break
                remaining -= c
                k -= 1
                level = remaining / k if k else c
            out[lo:hi] = [min(c, level) for c in caps[lo:hi]]
            break
        return out


def dispatch(model: NetworkModel, topo: Topology, gen_available, load_demand, plans: dict | None = None) -> DispatchResult:
    """Priority-list dispatch for every island of `topo`.

    `load_demand` is the connected demand per load (0 when disconnected).
    Same rules as `dispatch_island`, with the unit layouts cached in
    `plans` across calls when given.
    """
    arr = model.arrays
    n_areas = len(model.areas)
    n_isl = topo.n_islands
    demand = np.asarray(load_demand, dtype=float)
    avail = np.asarray(gen_available, dtype=bool)
    caps = arr.gen_cap
    output = np.zeros(len(caps))
    unserved = np.zeros(n_areas)
    feasible = np.ones(n_isl, dtype=bool)

    load_key = topo.labels[arr.load_bus] * n_areas + arr.load_area
    dem = np.bincount(load_key, weights=np.maximum(demand, 0.0), minlength=n_isl * n_areas).tolist()
    if plans is None:
        plans = {}
    plan_key = (topo.fingerprint, avail.tobytes())
    layout = plans.get(plan_key)
    if layout is None:
        gen_key = topo.labels[arr.gen_bus] * n_areas + arr.gen_area
        order = arr.gen_priority_order
        okey = gen_key[order]
        oavail = avail[order]
        cap = np.bincount(gen_key, weights=caps * avail, minlength=n_isl * n_areas).tolist()
        layout = {"cap": cap}
        for key in np.unique(okey[oavail]).tolist():
            sel = order[(okey == key) & oavail]
            layout[key] = FillPlan(sel, caps[sel], arr.gen_priority[sel])
        if len(plans) > 20000:
            plans.clear()
        plans[plan_key] = layout
    cap = layout["cap"]
    for k in range(n_isl):
        row = dem[k * n_areas:(k + 1) * n_areas]
        if not any(v > 0 for v in row):
            continue
        target, deficit = _share_out(row, cap[k * n_areas:(k + 1) * n_areas])
        for a, v in enumerate(deficit):
            if v > 0:
                unserved[a] += v
                feasible[k] = False
        for a, t in enumerate(target):
            if t > 0:
                plan = layout[k * n_areas + a]
                output[plan.units] = plan.fill(t)
    return DispatchResult(output, unserved, feasible)


def shed_to_fit(
    demands: Mapping[int, float], capacity: float, rng: np.random.Generator, tol: float = 1e-9
) -> list[int]:
    """Disconnect loads in a uniformly random order until demand <= capacity.

    Returns the disconnected load keys in disconnection order. The stop is
    greedy: no load is taken once the remaining demand fits.
    """
    keys = sorted(k for k, v in demands.items() if v > 0)
    total = sum(demands[k] for k in keys)
    if total <= capacity + tol:
        return []
    picked = []
    for pos in rng.permutation(len(keys)):
        k = keys[pos]
        picked.append(k)
        total -= demands[k]
        if total <= capacity + tol:
            break
    return picked
