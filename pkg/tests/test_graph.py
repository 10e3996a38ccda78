import math
import os

import numpy as np
import pytest

from crnetsim.geometry import BoxRegion, SpatialIndex
from crnetsim.graph import (UnionFind, build_comm_graph, build_topo_graph,
                            crossing_exists, disk_graph_edges, giant_component,
                            theta_estimate, write_edge_list)
from crnetsim.pointprocess import (PrimarySlotRealization, SecondaryNetwork,
                                   SeededRng, SimulationParams,
                                   sample_primary_slot,
                                   sample_secondary_network)

PARAMS = SimulationParams(lambda_s=700, lambda_pt=10, r_p=0.05, r_i=0.08,
                          R_p=0.05, R_i=0.08)


def _network(points, r_p=0.05):
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    lo = float(points.min()) - 1.0 if len(points) else -1.0
    hi = float(points.max()) + 1.0 if len(points) else 1.0
    region = BoxRegion(lo, hi, lo, hi)
    return SecondaryNetwork(points, region, SpatialIndex(points, r_p))


def _oracle_edges(points, r_p):
    out = set()
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            if math.hypot(*(points[i] - points[j])) <= r_p:
                out.add((i, j))
    return out


def _oracle_components(n, edges):
    adj = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    labels = [-1] * n
    for start in range(n):
        if labels[start] != -1:
            continue
        stack = [start]
        labels[start] = start
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if labels[v] == -1:
                    labels[v] = start
                    stack.append(v)
    return labels


def test_union_find_merges_and_labels():
    uf = UnionFind(6)
    assert uf.union(0, 1)
    assert uf.union(4, 5)
    assert uf.union(1, 4)
    assert not uf.union(0, 5)
    assert uf.find(5) == uf.find(0)
    assert uf.labels().tolist() == [0, 0, 2, 3, 0, 0]


def test_disk_edges_match_bruteforce():
    gen = np.random.default_rng(20)
    for _ in range(20):
        points = gen.uniform(0, 0.4, size=(gen.integers(0, 80), 2))
        edges = disk_graph_edges(points, 0.05)
        assert {tuple(e) for e in edges} == _oracle_edges(points, 0.05)
        # canonical ordering: u < v, sorted lexicographically
        if len(edges):
            assert (edges[:, 0] < edges[:, 1]).all()
            assert np.array_equal(edges, edges[np.lexsort((edges[:, 1],
                                                           edges[:, 0]))])


def test_disk_edges_include_exact_distance():
    points = np.array([[0.0, 0.0], [0.05, 0.0], [0.1000001, 0.0]])
    assert {tuple(e) for e in disk_graph_edges(points, 0.05)} == {(0, 1)}


def test_component_labels_are_canonical():
    gen = np.random.default_rng(21)
    points = gen.uniform(0, 0.5, size=(120, 2))
    topo = build_topo_graph(_network(points), 0.05)
    labels = _oracle_components(len(points), topo.edges)
    # canonical label of a component is its smallest node id
    canon = {}
    for i, lab in enumerate(labels):
        canon.setdefault(lab, i)
    expected = [canon[lab] for lab in labels]
    assert topo.component_label.tolist() == expected


def test_neighbors_are_symmetric_and_complete():
    gen = np.random.default_rng(22)
    points = gen.uniform(0, 0.3, size=(60, 2))
    topo = build_topo_graph(_network(points), 0.05)
    edge_set = {tuple(e) for e in topo.edges}
    for u in range(topo.n):
        for v in topo.neighbors_of(u):
            assert (min(u, v), max(u, v)) in edge_set
    assert sum(len(topo.neighbors_of(u)) for u in range(topo.n)) == 2 * len(topo.edges)


def test_comm_graph_keeps_only_clear_endpoints():
    # chain of three nodes; a primary transmitter sits on the middle one
    points = np.array([[0.0, 0.0], [0.04, 0.0], [0.08, 0.0]])
    topo = build_topo_graph(_network(points), 0.05)
    assert {tuple(e) for e in topo.edges} == {(0, 1), (1, 2)}
    tx = np.array([[0.04, 0.0]])
    rx = np.array([[9.0, 9.0]])
    realization = PrimarySlotRealization(0, tx, rx, SpatialIndex(tx, 0.08),
                                         SpatialIndex(rx, 0.08))
    comm = build_comm_graph(topo, realization, PARAMS)
    assert comm.clear.tolist() == [False, False, False]  # R_i covers all three
    assert len(comm.edges) == 0
    assert comm.component_label.tolist() == [0, 1, 2]


def test_comm_graph_with_no_primaries_equals_topo():
    net = sample_secondary_network(PARAMS, BoxRegion.square(0.5), SeededRng(23))
    topo = build_topo_graph(net, PARAMS.r_p)
    realization = sample_primary_slot(PARAMS.replace(lambda_pt=0.0), net.region,
                                      0, SeededRng(24))
    comm = build_comm_graph(topo, realization, PARAMS)
    assert np.array_equal(comm.edges, topo.edges)
    assert np.array_equal(comm.component_label, topo.component_label)


def _chain(xs, y=0.0):
    return np.array([[x, y] for x in xs])


def test_crossing_detects_spanning_chain():
    rect = BoxRegion(0, 1, 0, 1)
    r_p = 0.05
    xs = np.arange(0.02, 1.0, 0.04)
    points = _chain(xs, y=0.5)
    g = build_topo_graph(_network(points), r_p)
    assert crossing_exists(g, rect, "left-right", r_p)
    assert not crossing_exists(g, rect, "top-bottom", r_p)


def test_crossing_fails_on_gap_or_margin():
    rect = BoxRegion(0, 1, 0, 1)
    r_p = 0.05
    xs = list(np.arange(0.02, 0.5, 0.04)) + list(np.arange(0.56, 1.0, 0.04))
    g = build_topo_graph(_network(_chain(xs, 0.5)), r_p)
    assert not crossing_exists(g, rect, "left-right", r_p)  # 0.06 gap
    xs = np.arange(0.03, 0.97, 0.04)  # last node 0.95, farther than r_p/2 from x=1
    g = build_topo_graph(_network(_chain(xs, 0.5)), r_p)
    assert not crossing_exists(g, rect, "left-right", r_p)


def test_crossing_ignores_nodes_outside_rect():
    rect = BoxRegion(0, 1, 0, 1)
    r_p = 0.05
    # the chain detours outside the rectangle halfway through
    xs = np.arange(0.02, 1.0, 0.04)
    points = _chain(xs, y=0.5)
    points[len(points) // 2, 1] = 1.2
    g = build_topo_graph(_network(points), r_p)
    assert not crossing_exists(g, rect, "left-right", r_p)


def test_crossing_rejects_bad_orientation():
    g = build_topo_graph(_network(np.zeros((1, 2))), 0.05)
    with pytest.raises(ValueError):
        crossing_exists(g, BoxRegion(0, 1, 0, 1), "diagonal", 0.05)


def test_giant_component_present_when_dense():
    params = PARAMS.replace(lambda_s=1500)
    region = BoxRegion.square(0.6)
    net = sample_secondary_network(params, region, SeededRng(25))
    topo = build_topo_graph(net, params.r_p)
    label = giant_component(topo, region)
    assert label is not None
    sizes = topo.component_sizes()
    assert sizes[label] == max(sizes.values())


def test_giant_component_absent_when_sparse():
    params = PARAMS.replace(lambda_s=30)
    region = BoxRegion.square(0.6)
    net = sample_secondary_network(params, region, SeededRng(26))
    topo = build_topo_graph(net, params.r_p)
    assert giant_component(topo, region) is None


def test_theta_estimate_bounds_and_easy_cases():
    region = BoxRegion.square(0.6)
    dense = theta_estimate(PARAMS.replace(lambda_s=1500, lambda_pt=0.0),
                           region, 6, SeededRng(27))
    assert 0.9 < dense.value <= 1.0
    sparse = theta_estimate(PARAMS.replace(lambda_s=30), region, 6, SeededRng(28))
    assert sparse.value == 0.0
    with pytest.raises(ValueError):
        theta_estimate(PARAMS, region, 0, SeededRng(0))


def test_write_edge_list_roundtrip(tmp_path):
    points = np.array([[0.0, 0.0], [0.04, 0.0], [0.5, 0.5]])
    topo = build_topo_graph(_network(points), 0.05)
    path = os.path.join(tmp_path, "edges.txt")
    write_edge_list(topo, path)
    lines = open(path).read().splitlines()
    assert lines[0] == "nodes 3 edges 1"
    assert lines[1:] == ["0 1"]
    node_lines = open(os.path.join(tmp_path, "edges.nodes.txt")).read().splitlines()
    assert len(node_lines) == 3
    i, x, y = node_lines[2].split()
    assert (int(i), float(x), float(y)) == (2, 0.5, 0.5)
