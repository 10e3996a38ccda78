"""Topological and per-slot communication graphs over the secondary network.

The topological graph links secondaries within distance r_p of each other.
The communication graph of a slot keeps exactly the topological edges whose
endpoints both see a bidirectional opportunity in that slot's realization.
Component labels are canonical: the smallest node id in the component.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .geometry import BoxRegion
from .opportunity import Estimate, clear_mask
from .pointprocess import (PrimarySlotRealization, SecondaryNetwork, SeededRng,
                           SimulationParams, sample_primary_slot,
                           sample_secondary_network)


class UnionFind:
    """Union-find with path compression and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True

    def labels(self) -> np.ndarray:
        """Canonical per-element labels: smallest element of each set."""
        n = len(self.parent)
        roots = np.fromiter((self.find(i) for i in range(n)), dtype=np.int64, count=n)
        canon = np.full(n, n, dtype=np.int64)
        np.minimum.at(canon, roots, np.arange(n, dtype=np.int64))
        return canon[roots]


def _component_labels(n: int, edges: np.ndarray) -> np.ndarray:
    """Canonical component labels (min node id) from an undirected edge array."""
    if n == 0:
        return np.empty(0, dtype=np.int64)
    if len(edges) == 0:
        return np.arange(n, dtype=np.int64)
    adj = coo_matrix((np.ones(len(edges), dtype=np.int8),
                      (edges[:, 0], edges[:, 1])), shape=(n, n))
    _, raw = connected_components(adj, directed=False)
    canon = np.full(raw.max() + 1, n, dtype=np.int64)
    np.minimum.at(canon, raw, np.arange(n, dtype=np.int64))
    return canon[raw]


def _csr_adjacency(n: int, edges: np.ndarray):
    """Symmetric CSR adjacency (indptr, neighbors) from undirected edges."""
    if len(edges) == 0:
        return np.zeros(n + 1, dtype=np.int64), np.empty(0, dtype=np.int64)
    both = np.concatenate((edges, edges[:, ::-1]))
    order = np.lexsort((both[:, 1], both[:, 0]))
    both = both[order]
    counts = np.bincount(both[:, 0], minlength=n)
    indptr = np.concatenate(([0], np.cumsum(counts)))
    return indptr.astype(np.int64), both[:, 1].astype(np.int64)


@dataclass
class TopoGraph:
    """r_p-disk graph over the secondary users (boundary inclusive)."""

    network: SecondaryNetwork
    r_p: float
    edges: np.ndarray            # (m, 2) with u < v, lexicographically sorted
    indptr: np.ndarray
    neighbors: np.ndarray
    component_label: np.ndarray

    @property
    def points(self) -> np.ndarray:
        return self.network.points

    @property
    def n(self) -> int:
        return self.network.n

    def neighbors_of(self, u: int) -> np.ndarray:
        return self.neighbors[self.indptr[u]:self.indptr[u + 1]]

    def component_sizes(self) -> dict[int, int]:
        labels, counts = np.unique(self.component_label, return_counts=True)
        return dict(zip(labels.tolist(), counts.tolist()))


@dataclass
class CommGraph:
    """Per-slot communication graph: topo edges between clear endpoints."""

    topo: TopoGraph
    slot: int
    clear: np.ndarray            # per-node clear status this slot
    edges: np.ndarray
    component_label: np.ndarray

    @property
    def points(self) -> np.ndarray:
        return self.topo.points

    @property
    def n(self) -> int:
        return self.topo.n

    @property
    def r_p(self) -> float:
        return self.topo.r_p

    @property
    def network(self) -> SecondaryNetwork:
        return self.topo.network

    def component_sizes(self) -> dict[int, int]:
        labels, counts = np.unique(self.component_label, return_counts=True)
        return dict(zip(labels.tolist(), counts.tolist()))


def disk_graph_edges(points: np.ndarray, r_p: float) -> np.ndarray:
    """All u < v pairs with distance <= r_p, lexicographically sorted."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(points) < 2:
        return np.empty((0, 2), dtype=np.int64)
    pairs = cKDTree(points).query_pairs(r_p, output_type="ndarray")
    if len(pairs) == 0:
        return np.empty((0, 2), dtype=np.int64)
    pairs = np.sort(pairs, axis=1)
    return pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))].astype(np.int64)


def build_topo_graph(network: SecondaryNetwork, r_p: float) -> TopoGraph:
    edges = disk_graph_edges(network.points, r_p)
    indptr, neighbors = _csr_adjacency(network.n, edges)
    labels = _component_labels(network.n, edges)
    return TopoGraph(network, r_p, edges, indptr, neighbors, labels)


def build_comm_graph(topo: TopoGraph, realization: PrimarySlotRealization,
                     params: SimulationParams) -> CommGraph:
    clear = clear_mask(topo.points, realization, params.r_i, params.R_i)
    if len(topo.edges):
        keep = clear[topo.edges[:, 0]] & clear[topo.edges[:, 1]]
        edges = topo.edges[keep]
    else:
        edges = topo.edges
    labels = _component_labels(topo.n, edges)
    return CommGraph(topo, realization.slot, clear, edges, labels)


def _side_masks(points, inside, rect: BoxRegion, orientation: str, r_p: float):
    if orientation == "left-right":
        entry = inside & (points[:, 0] - rect.x_min <= r_p / 2)
        exit_ = inside & (rect.x_max - points[:, 0] <= r_p / 2)
    elif orientation == "top-bottom":
        entry = inside & (rect.y_max - points[:, 1] <= r_p / 2)
        exit_ = inside & (points[:, 1] - rect.y_min <= r_p / 2)
    else:
        raise ValueError(f"unknown orientation {orientation!r}")
    return entry, exit_


def _restricted_labels(graph, rect: BoxRegion):
    points = graph.points
    inside = rect.contains(points)
    edges = graph.edges
    if len(edges):
        keep = inside[edges[:, 0]] & inside[edges[:, 1]]
        edges = edges[keep]
    labels = _component_labels(len(points), edges)
    return inside, labels


def crossing_exists(graph, rect: BoxRegion, orientation: str, r_p: float) -> bool:
    """Whether a chain of graph edges spans rect between opposite sides.

    All chain nodes must lie inside rect; the first/last node must be within
    r_p/2 of the entry/exit side.
    """
    inside, labels = _restricted_labels(graph, rect)
    entry, exit_ = _side_masks(graph.points, inside, rect, orientation, r_p)
    if not entry.any() or not exit_.any():
        return False
    return bool(np.intersect1d(labels[entry], labels[exit_]).size)


def giant_component(graph, region: BoxRegion):
    """Finite-window giant-component proxy.

    Returns the full-graph component label of the component that crosses the
    central sub-box (region shrunk by r_p) both left-right and top-bottom, or
    None if no component does.
    """
    r_p = graph.r_p
    rect = region.shrunk(r_p)
    points = graph.points
    inside, labels = _restricted_labels(graph, rect)
    if not inside.any():
        return None
    lr_entry, lr_exit = _side_masks(points, inside, rect, "left-right", r_p)
    tb_entry, tb_exit = _side_masks(points, inside, rect, "top-bottom", r_p)
    spanning = np.intersect1d(labels[lr_entry], labels[lr_exit])
    spanning = np.intersect1d(spanning, labels[tb_entry])
    spanning = np.intersect1d(spanning, labels[tb_exit])
    if spanning.size == 0:
        return None
    if spanning.size > 1:
        # several candidates: take the largest, smallest label on ties
        sizes = np.array([(labels[inside] == s).sum() for s in spanning])
        spanning = spanning[sizes == sizes.max()]
    rep = int(spanning.min())  # canonical label is itself a member node id
    return int(graph.component_label[rep])


def theta_estimate(params: SimulationParams, region: BoxRegion, n_slots: int,
                   rng: SeededRng) -> Estimate:
    """Average fraction of central-box nodes lying in the giant comm component.

    Each slot draws a fresh (network, primary realization) pair.
    """
    if n_slots < 1:
        raise ValueError("n_slots must be >= 1")
    central = region.shrunk(params.r_p)
    fracs = np.zeros(n_slots)
    for t in range(n_slots):
        stream = rng.child("theta", t)
        network = sample_secondary_network(params, region, stream)
        topo = build_topo_graph(network, params.r_p)
        realization = sample_primary_slot(params, region, 0, stream)
        comm = build_comm_graph(topo, realization, params)
        giant = giant_component(comm, region)
        if giant is None:
            continue
        in_box = central.contains(network.points)
        if not in_box.any():
            continue
        fracs[t] = np.mean(comm.component_label[in_box] == giant)
    value = float(np.mean(fracs))
    stderr = float(np.std(fracs, ddof=1) / np.sqrt(n_slots)) if n_slots > 1 else 0.0
    return Estimate(value, stderr, n_slots)


def write_edge_list(graph, path: str):
    """Debug dump: `nodes N edges M` header plus `u v` pairs, with a sidecar
    `<path>.nodes` file of `id x y` coordinates."""
    edges = graph.edges
    with open(path, "w", newline="\n") as f:
        f.write(f"nodes {graph.n} edges {len(edges)}\n")
        for u, v in edges:
            f.write(f"{u} {v}\n")
    base, ext = os.path.splitext(path)
    with open(base + ".nodes" + ext, "w", newline="\n") as f:
        for i, (x, y) in enumerate(graph.points):
            f.write(f"{i} {float(x)!r} {float(y)!r}\n")
