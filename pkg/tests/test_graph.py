import numpy as np
import pytest

from ilat.generator import generate, seed_graph
from ilat.graph import (
    FormatError,
    GraphError,
    MemoryGuardError,
    check_memory,
    co_degree,
    common_neighbor_count,
    degree,
    from_adjacency,
    from_edge_list,
    graphs_equal,
    nodes_from_mask,
    non_neighbors,
    read_binary,
    read_edge_list,
    write_binary,
    write_edge_list,
)

C4_EDGES = [(0, 1), (1, 2), (2, 3), (3, 0)]


def test_from_edge_list_c4():
    g = from_edge_list(4, C4_EDGES)
    assert (g.n, g.edge_count) == (4, 4)
    assert g.has_edge(0, 1) and g.has_edge(3, 0) and not g.has_edge(0, 2)


def test_from_edge_list_k1_and_k3():
    k1 = from_edge_list(1, [])
    assert (k1.n, k1.edge_count) == (1, 0)
    k3 = from_edge_list(3, [(0, 1), (1, 2), (0, 2)])
    assert k3.degrees.tolist() == [2, 2, 2]


@pytest.mark.parametrize(
    "edges, msg",
    [([(0, 4)], "outside"), ([(1, 1)], "self-loop"), ([(0, 1), (1, 0)], "duplicated")],
)
def test_from_edge_list_rejects(edges, msg):
    with pytest.raises(GraphError, match=msg):
        from_edge_list(4, edges)


def test_from_adjacency_rejects_asymmetric():
    m = np.zeros((3, 3), dtype=bool)
    m[0, 1] = True
    with pytest.raises(GraphError):
        from_adjacency(m)


def test_non_neighbors():
    c4 = from_edge_list(4, C4_EDGES)
    assert nodes_from_mask(non_neighbors(c4, 0), 4).tolist() == [2]
    k3 = seed_graph("k3")
    assert nodes_from_mask(non_neighbors(k3, 1), 3).tolist() == []
    g1, _ = generate(seed_graph("k1"), 1)
    assert nodes_from_mask(non_neighbors(g1, 0), 2).tolist() == [1]


def test_degree_and_co_degree():
    c4 = seed_graph("c4")
    assert (degree(c4, 0), co_degree(c4, 0)) == (2, 1)
    k1 = seed_graph("k1")
    assert (degree(k1, 0), co_degree(k1, 0)) == (0, 0)
    g1, _ = generate(c4, 1)
    assert degree(g1, 0) == 3


def test_common_neighbor_count():
    c4 = seed_graph("c4")
    assert common_neighbor_count(c4, 0, 2) == 2
    assert common_neighbor_count(c4, 0, 1) == 0
    g2, _ = generate(c4, 2)
    for x in range(8):
        assert common_neighbor_count(g2, x, g2.anti_clone(x)) == 0
    with pytest.raises(GraphError):
        common_neighbor_count(c4, 1, 1)


def test_anti_clone_ids():
    g, _ = generate(seed_graph("c4"), 3)
    assert g.anti_clone(0, 1) == 4
    assert g.anti_clone(4, 2) == 12
    assert g.anti_clone(12) == 28
    assert g.parent[28] == 12 and g.birth_step[28] == 3
    with pytest.raises(GraphError):
        g.anti_clone(12, 2)


def test_graph_is_read_only():
    g = seed_graph("c4")
    with pytest.raises(ValueError):
        g.rows[0, 0] = 0


def test_memory_guard():
    with pytest.raises(MemoryGuardError):
        check_memory(1 << 20, budget=1 << 20)
    with pytest.raises(MemoryGuardError):
        generate(seed_graph("c4"), 20, budget=1 << 24)


def test_binary_round_trip(tmp_path):
    g, _ = generate(seed_graph("c7"), 5)
    path = tmp_path / "g.bin"
    write_binary(g, path)
    h = read_binary(path)
    assert graphs_equal(g, h)
    assert h.step == 5 and h.seed_descriptor == "c7"
    assert h.parent[0] == -1 and h.parent[7] == 0


def test_binary_header_layout(tmp_path):
    path = tmp_path / "g.bin"
    write_binary(seed_graph("k1"), path)
    data = path.read_bytes()
    assert data[:4] == b"ILAT"
    assert int.from_bytes(data[4:6], "little") == 1
    assert int.from_bytes(data[10:18], "little") == 1  # n
    assert data[-16:-8] == b"\xff" * 8  # parent sentinel


@pytest.mark.parametrize(
    "mutate",
    [
        lambda b: b"XLAT" + b[4:],
        lambda b: b[:4] + (9).to_bytes(2, "little") + b[6:],
        lambda b: b[:-3],
        lambda b: b + b"\0",
    ],
    ids=["magic", "version", "truncated", "trailing"],
)
def test_binary_corruption(tmp_path, mutate):
    path = tmp_path / "g.bin"
    write_binary(seed_graph("c4"), path)
    path.write_bytes(mutate(path.read_bytes()))
    with pytest.raises(FormatError):
        read_binary(path)


def test_edge_list_round_trip(tmp_path):
    g, _ = generate(seed_graph("k3"), 1)  # trailing isolated nodes
    path = tmp_path / "e.txt"
    write_edge_list(g, path)
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    pairs = [tuple(map(int, ln.split())) for ln in lines]
    assert pairs == sorted(pairs) and all(u < v for u, v in pairs)
    n, edges = read_edge_list(path)
    assert n == 6 and edges == [(0, 1), (0, 2), (1, 2)]
