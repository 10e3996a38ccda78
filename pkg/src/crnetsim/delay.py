"""Minimum-multihop-delay flooding over the slotted communication graphs.

With zero propagation delay a message spreads instantaneously through each
slot's communication components; with positive delay it hops edge by edge
inside a slot, each hop costing tau, and may not straddle a slot boundary.
No contention is modeled, so flooding yields the MMD exactly.
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import distance
from .graph import CommGraph, TopoGraph, build_comm_graph, giant_component
from .pointprocess import (SecondaryNetwork, SeededRng, SimulationParams,
                           sample_primary_slot)

STATUS_REACHED = "reached"
STATUS_HORIZON = "horizon"
STATUS_UNREACHABLE = "unreachable"


@dataclass
class TraceRecord:
    slot: int
    newly_informed: int
    comm_edges: int
    giant_present: bool


@dataclass
class FloodResult:
    """Earliest reception time per node from a single source."""

    source: int
    arrival_time: np.ndarray     # seconds; np.inf where not reached
    slots_used: int
    horizon_slots: int
    topo_reachable: np.ndarray   # nodes in the source's topological component
    trace: list[TraceRecord] | None = field(default=None)

    def reached(self) -> np.ndarray:
        return np.isfinite(self.arrival_time)

    def statuses(self) -> np.ndarray:
        out = np.where(self.reached(), STATUS_REACHED,
                       np.where(self.topo_reachable, STATUS_HORIZON,
                                STATUS_UNREACHABLE))
        return out


def _slot_dijkstra(topo: TopoGraph, clear: np.ndarray, arrival: np.ndarray,
                   informed: np.ndarray, slot: int, params: SimulationParams) -> np.ndarray:
    """Earliest-arrival traversal inside one slot; returns newly informed mask.

    A node holding the message at absolute time s forwards over a communication
    edge completing at max(s, slot start) + tau, provided the hop finishes
    before the slot ends. Ties break on (time, node id).
    """
    tau, t_s = params.tau, params.T_s
    slot_start = slot * t_s
    slot_end = (slot + 1) * t_s
    time = np.full(topo.n, np.inf)
    heap = []
    for u in np.nonzero(informed & clear)[0]:
        s = max(arrival[u], slot_start)
        if s + tau <= slot_end:
            time[u] = s
            heap.append((s, int(u)))
    heapq.heapify(heap)
    while heap:
        s, u = heapq.heappop(heap)
        if s > time[u]:
            continue
        cand = s + tau
        if cand > slot_end:
            continue
        for v in topo.neighbors_of(u):
            if clear[v] and cand < time[v]:
                time[v] = cand
                heapq.heappush(heap, (cand, int(v)))
    newly = np.isfinite(time) & ~informed
    arrival[newly] = time[newly]
    return newly


def flood(network: SecondaryNetwork, topo: TopoGraph, source: int,
          params: SimulationParams, horizon_slots: int, rng: SeededRng,
          record_trace: bool = False) -> FloodResult:
    """Flood a message from source; fresh primary realization every slot.

    Stops once every node in the source's topological component is informed,
    or at the horizon.
    """
    if not (0 <= source < network.n):
        raise ValueError(f"source {source} not in network of size {network.n}")
    if horizon_slots < 1:
        raise ValueError("horizon_slots must be >= 1")
    arrival = np.full(network.n, np.inf)
    arrival[source] = 0.0
    informed = np.zeros(network.n, dtype=bool)
    informed[source] = True
    target = topo.component_label == topo.component_label[source]
    trace: list[TraceRecord] | None = [] if record_trace else None
    slots_used = 0
    for t in range(horizon_slots):
        if informed[target].all():
            break
        realization = sample_primary_slot(params, network.region, t, rng)
        comm = build_comm_graph(topo, realization, params)
        if params.tau == 0:
            informed_labels = np.unique(comm.component_label[informed])
            newly = np.isin(comm.component_label, informed_labels) & ~informed
            arrival[newly] = t * params.T_s
        else:
            newly = _slot_dijkstra(topo, comm.clear, arrival, informed, t, params)
        informed |= newly
        slots_used = t + 1
        if trace is not None:
            trace.append(TraceRecord(t, int(newly.sum()), len(comm.edges),
                                     giant_component(comm, network.region) is not None))
    return FloodResult(source, arrival, slots_used, horizon_slots, target, trace)


@dataclass
class RatioCurve:
    """Per-destination (distance, MMD/distance) pairs, sorted by distance."""

    distances: np.ndarray        # km
    ratios: np.ndarray           # s/km
    n_horizon: int               # reachable but not reached before the horizon
    n_unreachable: int           # outside the source's topological component


def mmd_ratio_curve(result: FloodResult, network: SecondaryNetwork) -> RatioCurve:
    points = network.points
    src = points[result.source]
    d = np.hypot(points[:, 0] - src[0], points[:, 1] - src[1])
    reached = result.reached()
    sel = reached & (d > 0)
    sel[result.source] = False
    order = np.argsort(d[sel], kind="stable")
    statuses = result.statuses()
    return RatioCurve(
        distances=d[sel][order],
        ratios=(result.arrival_time[sel] / d[sel])[order],
        n_horizon=int(np.sum(statuses == STATUS_HORIZON)),
        n_unreachable=int(np.sum(statuses == STATUS_UNREACHABLE)),
    )


@dataclass(frozen=True)
class RateFit:
    """Median MMD-to-distance ratio over a distance band, with dispersion."""

    band: tuple[float, float]
    rate: float                  # s/km
    iqr: float
    n_points: int


def fit_scaling_rate(curve: RatioCurve, band: tuple[float, float],
                     min_points: int = 30) -> RateFit:
    lo, hi = band
    sel = (curve.distances >= lo) & (curve.distances < hi)
    n = int(sel.sum())
    if n < min_points:
        raise ValueError(f"band [{lo}, {hi}) has only {n} points; "
                         f"need >= {min_points}")
    vals = curve.ratios[sel]
    q1, q3 = np.percentile(vals, [25, 75])
    return RateFit((lo, hi), float(np.median(vals)), float(q3 - q1), n)


def export_flood_csv(result: FloodResult, network: SecondaryNetwork, path: str):
    """FloodResult as CSV: node_id,x_km,y_km,distance_km,arrival_s,status."""
    points = network.points
    src = points[result.source]
    statuses = result.statuses()
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["node_id", "x_km", "y_km", "distance_km", "arrival_s", "status"])
        for i in range(network.n):
            arr = result.arrival_time[i]
            w.writerow([i, repr(float(points[i, 0])), repr(float(points[i, 1])),
                        repr(distance(points[i], src)),
                        repr(float(arr)) if math.isfinite(arr) else "",
                        statuses[i]])
