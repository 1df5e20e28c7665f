import numpy as np
import pytest

from gridmc.io import load_rts96
from gridmc.model import Bus, ControlArea, Generator, Line, Load, NetworkModel, Params


def make_model(n_bus, edges, gens=(), loads=(), areas=None, params=None):
    """Small model: `edges` are (from, to, x, rating); buses are "1".."n"."""
    area_of = areas or {}
    area_ids = sorted(set(area_of.values()) | {"A"})
    buses = [Bus(str(i + 1), area_of.get(i + 1, "A")) for i in range(n_bus)]
    lines = [Line(f"L{k + 1}", str(a), str(b), x, r) for k, (a, b, x, r) in enumerate(edges)]
    generators = [
        Generator(f"G{k + 1}", str(bus), cap, prio) for k, (bus, cap, prio) in enumerate(gens)
    ]
    ld = [Load(f"D{k + 1}", str(bus), peak) for k, (bus, peak) in enumerate(loads)]
    return NetworkModel(
        tuple(buses), tuple(lines), tuple(generators), tuple(ld),
        tuple(ControlArea(a) for a in area_ids), params or Params(),
    )


def two_bus():
    return make_model(2, [(1, 2, 0.1, 200.0)], gens=[(1, 150.0, 1)], loads=[(2, 100.0)])


def triangle():
    return make_model(
        3,
        [(1, 2, 0.1, 100.0), (2, 3, 0.2, 100.0), (1, 3, 0.25, 100.0)],
        gens=[(1, 300.0, 1), (2, 100.0, 2)],
        loads=[(2, 60.0), (3, 120.0)],
    )


def random_connected(rng, n_bus, extra_edges, n_gens=3, n_loads=4):
    """Random spanning tree plus extra chords; positive reactances."""
    edges = []
    seen = set()
    for b in range(2, n_bus + 1):
        a = int(rng.integers(1, b))
        edges.append((a, b))
        seen.add((a, b))
    tries = 0
    while len(edges) < n_bus - 1 + extra_edges and tries < 1000:
        tries += 1
        a, b = sorted(rng.choice(np.arange(1, n_bus + 1), 2, replace=False).tolist())
        if (a, b) not in seen:
            seen.add((a, b))
            edges.append((a, b))
    branches = [(a, b, float(rng.uniform(0.01, 0.5)), 1000.0) for a, b in edges]
    gens = [(int(rng.integers(1, n_bus + 1)), 500.0, 1) for _ in range(n_gens)]
    loads = [(int(rng.integers(1, n_bus + 1)), float(rng.uniform(10, 100))) for _ in range(n_loads)]
    return make_model(n_bus, branches, gens, loads)


def balanced_injections(rng, n):
    p = rng.normal(0, 100, n)
    return p - p.mean()


@pytest.fixture(scope="session")
def rts96():
    return load_rts96()


# One line per acceptance criterion, printed after the run.
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
