"""Disk-model spectrum-opportunity predicates.

A transmission from tx to rx sees an opportunity iff no primary receiver lies
within r_i of tx and no primary transmitter lies within R_i of rx. Blocking is
boundary inclusive. Communication links require the opportunity in both
directions, which reduces to a per-endpoint condition: an endpoint is "clear"
iff no primary receiver is within r_i of it and no primary transmitter is
within R_i of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .geometry import BoxRegion
from .pointprocess import (PrimarySlotRealization, SeededRng, SimulationParams,
                           sample_primary_slot)


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo estimate with its standard error and sample size."""

    value: float
    stderr: float
    n_trials: int


@dataclass
class OpportunityContext:
    primary: PrimarySlotRealization
    r_i: float
    R_i: float

    def __post_init__(self):
        if self.r_i < 0 or self.R_i < 0:
            raise ValueError("interference radii must be >= 0")


def has_opportunity(tx, rx, ctx: OpportunityContext) -> bool:
    """Unidirectional opportunity from tx to rx (asymmetric in general)."""
    if ctx.primary.rx_index.query_any(tx, ctx.r_i):
        return False
    if ctx.primary.tx_index.query_any(rx, ctx.R_i):
        return False
    return True


def has_bidirectional_opportunity(a, b, ctx: OpportunityContext) -> bool:
    """Opportunity in both directions; symmetric in (a, b)."""
    return has_opportunity(a, b, ctx) and has_opportunity(b, a, ctx)


def clear_mask(points: np.ndarray, realization: PrimarySlotRealization,
               r_i: float, R_i: float) -> np.ndarray:
    """Per-node clear status against one primary realization.

    A node is clear iff its nearest primary receiver is farther than r_i and
    its nearest primary transmitter is farther than R_i. An edge is a
    communication link iff both endpoints are clear.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    mask = np.ones(len(points), dtype=bool)
    if len(points) == 0 or realization.n_pairs == 0:
        return mask
    d_rx, _ = cKDTree(realization.rx_points).query(points, k=1)
    d_tx, _ = cKDTree(realization.tx_points).query(points, k=1)
    return (d_rx > r_i) & (d_tx > R_i)


def pair_region(center, hop_length: float, params: SimulationParams) -> BoxRegion:
    # Primaries farther than max(r_i, R_i) from either endpoint cannot block
    # the pair, so a local window around it suffices (sample_primary_slot adds
    # its own padding for receivers whose transmitter falls outside).
    margin = max(params.r_i, params.R_i, params.r_p)
    half = hop_length / 2 + margin
    return BoxRegion.square(half, center=center)


def estimate_p0(hop_length: float, params: SimulationParams, region: BoxRegion,
                n_trials: int, rng: SeededRng) -> Estimate:
    """Monte Carlo probability of a bidirectional opportunity at a fixed hop.

    The test pair sits at the window center, separated by hop_length along x;
    each trial draws a fresh, independent primary realization.
    """
    if not (0 <= hop_length <= params.r_p):
        raise ValueError("hop_length must be in [0, r_p]")
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    cx, cy = region.center
    a = (cx - hop_length / 2, cy)
    b = (cx + hop_length / 2, cy)
    local = pair_region(region.center, hop_length, params)
    stream = rng.child("p0")
    hits = 0
    for t in range(n_trials):
        realization = sample_primary_slot(params, local, t, stream)
        ctx = OpportunityContext(realization, params.r_i, params.R_i)
        if has_bidirectional_opportunity(a, b, ctx):
            hits += 1
    p = hits / n_trials
    stderr = math.sqrt(p * (1 - p) / n_trials)
    return Estimate(p, stderr, n_trials)
