"""Load and generation balance of islands created by a network separation.

A child island short of generation loses randomly chosen loads, one at a
time, until its demand fits its capacity. A child with surplus only has
its generator outputs reduced; the dispatch that follows does that.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dispatch import shed_to_fit
from .model import NetworkModel
from .powerflow import Topology


@dataclass
class SplitEvent:
    time: float
    children: list[int]  # island numbers in the new topology
    imbalance: dict[int, float]  # capacity - demand per child, MW, before handling
    disconnected: list[int] = field(default_factory=list)  # load indices, in order
    curtailed: float = 0.0  # MW of generation the children must shed


def split_children(old: Topology, new: Topology) -> list[int]:
    """Islands of `new` that are strict parts of an island of `old`."""
    if old.fingerprint == new.fingerprint:
        return []
    old_sizes = np.bincount(old.labels, minlength=old.n_islands)
    new_sizes = np.bincount(new.labels, minlength=new.n_islands)
    children = []
    for k in range(new.n_islands):
        first = int(np.argmax(new.labels == k))
        if new_sizes[k] < old_sizes[old.labels[first]]:
            children.append(k)
    return children


def handle_split(
    model: NetworkModel,
    topo: Topology,
    children,
    gen_available,
    served,
    t: float,
    rng: np.random.Generator,
    gen_output=None,
) -> SplitEvent:
    """Balance each child island; returns the loads to disconnect.

    `served` is the current served demand per load (0 when disconnected),
    counted at its reduced value for partially shed loads.
    """
    arr = model.arrays
    served = np.asarray(served, dtype=float)
    cap_by_island = np.bincount(
        topo.labels[arr.gen_bus], weights=arr.gen_cap * np.asarray(gen_available, dtype=float), minlength=topo.n_islands
    )
    load_island = topo.labels[arr.load_bus]
    event = SplitEvent(t, sorted(int(c) for c in children), {})
    for k in event.children:
        on = np.flatnonzero(load_island == k)
        demand = float(served[on].sum())
        cap = float(cap_by_island[k])
        event.imbalance[k] = cap - demand
        if demand > cap:
            event.disconnected += shed_to_fit({int(i): float(served[i]) for i in on}, cap, rng)
        elif gen_output is not None:
            on_gen = topo.labels[arr.gen_bus] == k
            event.curtailed += max(float(np.asarray(gen_output)[on_gen].sum()) - demand, 0.0)
    return event
