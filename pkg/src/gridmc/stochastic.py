"""Random sampling for the simulator.

All rates are per hour inside the engine; yearly rates from the network
file are divided by 8760 on ingest (see `per_hour`).
"""
from __future__ import annotations

import math

import numpy as np

from .model import HOURS_PER_YEAR


def rng_stream(seed: int, stream_id: int) -> np.random.Generator:
    """Independent generator for replication `stream_id` of a run seeded with `seed`."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(stream_id)])))


def per_hour(rate_per_year: float) -> float:
    return rate_per_year / HOURS_PER_YEAR


def sample_exponential(rate: float, rng: np.random.Generator | None = None, u: float | None = None) -> float:
    """Draw from F(t) = 1 - exp(-rate t) by inverting the CDF.

    A zero rate means the transition never happens and returns infinity.
    `u` may be given to fix the uniform draw.
    """
    if rate < 0:
        raise ValueError(f"rate must be >= 0, got {rate}")
    if rate == 0:
        return math.inf
    if u is None:
        u = rng.random()
    # 1 - u lies in (0, 1], so the sample is finite and >= 0.
    t = -math.log1p(-u) / rate
    return t if t > 0 else math.ulp(0.0)


def steady_state_up_probability(failure_rate: float, repair_rate: float) -> float:
    """Stationary probability mu / (lambda + mu) that a two-state unit is up."""
    if failure_rate < 0:
        raise ValueError("failure rate must be >= 0")
    if repair_rate <= 0:
        raise ValueError("repair rate must be > 0")
    return repair_rate / (failure_rate + repair_rate)


def sample_outage_threshold(rating: float, beta: float, rng: np.random.Generator) -> float:
    """Trip level of an overloaded line, uniform on [rating, beta * rating]."""
    if beta <= 1:
        raise ValueError(f"beta must be > 1, got {beta}")
    return rating * (1.0 + (beta - 1.0) * rng.random())


def sample_demand_deviation(sigma: float, rng: np.random.Generator, size: int | None = None):
    """Relative demand deviation rho ~ N(0, sigma^2); one draw per control area."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return 0.0 if size is None else np.zeros(size)
    return rng.normal(0.0, sigma, size)


def initial_state(failure_rate: float, repair_rate: float, rng: np.random.Generator) -> tuple[bool, float]:
    """Stationary draw of a two-state component at t = 0.

    Returns (is_up, time to the next transition). Rates are per hour;
    the residual time is memoryless so the draw is exactly stationary.
    """
    up = rng.random() < steady_state_up_probability(failure_rate, repair_rate)
    return up, sample_exponential(failure_rate if up else repair_rate, rng)
