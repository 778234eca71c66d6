from fractions import Fraction

import numpy as np
import pytest

from ilat.generator import (
    degree_class_fraction,
    generate,
    generate_sequence,
    ilat_step,
    predicted_degree_classes,
    predicted_edge_count,
    seed_graph,
)
from ilat.graph import GraphError


def test_step_k3_is_k3_plus_isolated():
    g = ilat_step(seed_graph("k3"))
    assert (g.n, g.edge_count) == (6, 3)
    assert g.degrees.tolist() == [2, 2, 2, 0, 0, 0]


def test_step_k1():
    g = ilat_step(seed_graph("k1"))
    assert (g.n, g.edge_count) == (2, 0)


def test_step_c4_matches_hand_simulation():
    g = ilat_step(seed_graph("c4"))
    assert (g.n, g.edge_count) == (8, 8)
    for x in range(4):
        assert g.neighbors(x + 4).tolist() == [(x + 2) % 4]


def test_step_definition_on_dense():
    prev = seed_graph("p4")
    g = ilat_step(prev)
    a, b = prev.to_bool(), g.to_bool()
    n = prev.n
    comp = ~a & ~np.eye(n, dtype=bool)
    assert np.array_equal(b[:n, :n], a)
    assert np.array_equal(b[n:, :n], comp)
    assert not b[n:, n:].any()


def test_generate_trace_c4():
    _, trace = generate(seed_graph("c4"), 2)
    assert [r.n for r in trace.rows] == [4, 8, 16]
    assert [r.e for r in trace.rows] == [4, 8, 48]
    assert trace.rows[0].e_predicted is None
    assert trace.rows[2].density == Fraction(48, 120)


def test_generate_zero_steps():
    seed = seed_graph("c7")
    g, trace = generate(seed, 0)
    assert g is seed and len(trace.rows) == 1


def test_generate_k3_trace():
    _, trace = generate(seed_graph("k3"), 1)
    assert [r.e for r in trace.rows] == [3, 3]


def test_generate_sequence_keeps_all():
    graphs, trace = generate_sequence(seed_graph("c4"), 3)
    assert [g.n for g in graphs] == [4, 8, 16, 32]
    assert [g.step for g in graphs] == [0, 1, 2, 3]
    assert "e_pred" in trace.table()


@pytest.mark.parametrize("n, e, expected", [(4, 4, 8), (1, 0, 0), (4, 6, 6)])
def test_predicted_edge_count(n, e, expected):
    assert predicted_edge_count(n, e) == expected


def test_predicted_edge_count_rejects_impossible():
    with pytest.raises(ValueError):
        predicted_edge_count(4, 7)


def test_degree_class_fractions():
    assert degree_class_fraction(1) == Fraction(1, 2)
    assert degree_class_fraction(2) == Fraction(1, 4)
    assert degree_class_fraction(3) == Fraction(3, 8)
    vals = [degree_class_fraction(k) for k in range(1, 40)]
    assert all(Fraction(1, 4) <= a <= Fraction(1, 2) for a in vals)
    assert abs(vals[-1] - Fraction(1, 3)) < Fraction(1, 10**10)


def test_predicted_classes_conventions():
    n = 1024
    exact = predicted_degree_classes(8, n, 3)
    assert [(p.count, p.degree) for p in exact] == [(512, 511), (256, 256), (128, 383)]
    alternating = predicted_degree_classes(8, n, 3, convention="alternating")
    assert [(p.count, p.degree) for p in alternating] == [(512, 510), (256, 258), (128, 382)]


def test_predicted_classes_needs_k_below_t():
    with pytest.raises(ValueError):
        predicted_degree_classes(3, 32, 3)


@pytest.mark.parametrize("desc, n, e", [("c4", 4, 4), ("P4", 4, 3), ("k1", 1, 0), ("k5", 5, 10), ("c7", 7, 7)])
def test_seed_descriptors(desc, n, e):
    g = seed_graph(desc)
    assert (g.n, g.edge_count) == (n, e)


def test_seed_file(tmp_path):
    p = tmp_path / "s.txt"
    p.write_text("# n=5\n0 1\n1 2\n")
    g = seed_graph(f"file:{p}")
    assert (g.n, g.edge_count) == (5, 2)


@pytest.mark.parametrize("desc", ["q4", "c2", "file:/nonexistent/seed.txt", ""])
def test_bad_seed(desc):
    with pytest.raises(GraphError):
        seed_graph(desc)
