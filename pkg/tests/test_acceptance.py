"""Acceptance criteria, one test per clause, tagged with ``criterion(n)``.

Run with ``pytest tests/test_acceptance.py -v``; the terminal summary prints
one PASS/FAIL line per criterion.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
import pytest

from conftest import SEEDS, graph, sequence
from ilat import games, metrics, spectral
from ilat.generator import predicted_degree_classes, seed_graph
from ilat.graph import from_edge_list, graphs_equal, read_binary, write_binary

criterion = pytest.mark.criterion
T_RANGE = range(0, 11)


@lru_cache(maxsize=None)
def exact_distances(seed: str, t: int) -> metrics.DistanceSummary:
    return metrics.distance_summary(graph(seed, t), "exact")


@lru_cache(maxsize=None)
def sampled_c4_t12() -> metrics.DistanceSummary:
    return metrics.distance_summary(graph("c4", 12), "sampled", pair_budget=10**6, rng_seed=42)


# --- 1: edge recurrence -------------------------------------------------------


@criterion(1)
@pytest.mark.parametrize("seed", SEEDS)
def test_edge_recurrence_exact(seed):
    _, trace = sequence(seed)
    for prev, row in zip(trace.rows, trace.rows[1:]):
        assert row.e == prev.n**2 - prev.e - prev.n, f"step {row.step}"


# --- 2: limiting density ------------------------------------------------------


@criterion(2)
@pytest.mark.parametrize("seed", SEEDS)
def test_density_near_two_fifths(seed):
    d8 = float(metrics.density(graph(seed, 8)))
    d10 = float(metrics.density(graph(seed, 10)))
    assert abs(d8 - 0.4) <= 0.005, d8
    assert abs(d10 - 0.4) <= 0.001, d10


@criterion(2)
def test_series_identity_stated_form():
    b = metrics.limiting_density_terms(30)
    s = metrics.limiting_density_series(30)
    bad = [k for k in range(1, 31) if Fraction(5, 4) * s[k - 1] - b[k - 1] != Fraction(1, 2)]
    assert not bad, f"(5/4)S_k - b_k != 1/2 for k in {bad}; k=1 gives {Fraction(5, 4) * s[0] - b[0]}"


# --- 3: degree classes ------------------------------------------------------------


@criterion(3)
@pytest.mark.parametrize("seed", SEEDS)
def test_degree_classes_at_t8(seed):
    g = graph(seed, 8)
    counts = metrics.degree_histogram(g, 0).counts
    preds = predicted_degree_classes(8, g.n, 5, convention="alternating")
    wrong = [(p.k, p.degree, counts.get(p.degree, 0), p.count) for p in preds if counts.get(p.degree, 0) != p.count]
    assert not wrong, f"(k, predicted degree, nodes found, nodes expected): {wrong}"


# --- 4: diameter ---------------------------------------------------------------


@criterion(4)
@pytest.mark.parametrize("seed", SEEDS)
def test_diameter_three(seed):
    diam = {t: exact_distances(seed, t).diameter for t in range(2, 11)}
    wrong = {t: d for t, d in diam.items() if d != 3}
    assert not wrong, f"diameters differing from 3: {wrong}"


@criterion(4)
def test_k3_g1_disconnected():
    assert math.isinf(exact_distances("k3", 1).diameter)


@criterion(4)
@pytest.mark.parametrize("seed", SEEDS)
def test_antipode_witnesses(seed):
    for t in range(1, 11):
        g = graph(seed, t)
        pairs = metrics.antipode_check(g)
        assert len(pairs) == g.n // 2
        x, xp = pairs[0]
        d = metrics.bfs_distances(g, x)[xp]
        assert d == -1 or d >= 3


# --- 5: mean distance -------------------------------------------------------------


@criterion(5)
@pytest.mark.parametrize("seed, t", [("c4", 10), ("k1", 12)])
def test_mean_distance_exact(seed, t):
    g = graph(seed, t)
    assert g.n == 4096
    s = metrics.distance_summary(g, "exact") if t > 10 else exact_distances(seed, t)
    assert abs(s.mean_distance - 1.6) <= 0.02, s.mean_distance


@criterion(5)
def test_mean_distance_sampled_n16384():
    s = sampled_c4_t12()
    assert graph("c4", 12).n == 16384 and s.pairs_examined == 10**6
    assert abs(s.mean_distance - 1.6) <= 0.02
    assert abs(s.mean_distance - 1.6) <= 3 * s.std_error, (s.mean_distance, s.std_error)


# --- 6: domination ------------------------------------------------------------------


@criterion(6)
@pytest.mark.parametrize("seed", SEEDS)
def test_domination_number_three(seed):
    found = {t: games.domination_number_exact(graph(seed, t)) for t in range(3, 9)}
    wrong = {t: (r.gamma, r.witness) for t, r in found.items() if r.gamma != 3}
    assert not wrong, f"gamma != 3 (t: gamma, dominating set): {wrong}"


@criterion(6)
@pytest.mark.parametrize("seed", SEEDS)
def test_domination_exhaustive_t3(seed):
    g = graph(seed, 3)
    assert g.n <= 64
    res = games.domination_number_exact(g, max_size=3, budget=math.comb(g.n, 3))
    assert res.method == "exhaustive" and res.gamma == 3, res.as_dict()


# --- 7: cop number --------------------------------------------------------------


@criterion(7)
@pytest.mark.parametrize("seed", SEEDS)
def test_cop_number_two(seed):
    for t in (2, 3):
        g = graph(seed, t)
        if g.n <= 128:
            assert games.cop_number_exact(g).cop_number == 2, t


@criterion(7)
def test_cop_number_special_cases():
    assert games.cop_number_exact(graph("k3", 1)).cop_number == 4
    assert games.cop_number_exact(seed_graph("k3")).cop_number == 1
    trees = [
        seed_graph("p4"),
        seed_graph("p9"),
        from_edge_list(7, [(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6)]),
        from_edge_list(6, [(0, i) for i in range(1, 6)]),
    ]
    assert all(games.cop_number_exact(t).cop_number == 1 for t in trees)


@criterion(7)
@pytest.mark.parametrize("seed", SEEDS)
def test_scripted_two_cops(seed):
    for t in range(2, 8):
        g = graph(seed, t)
        tr = games.two_cop_scripted_strategy(g)
        assert tr.captured and tr.cop_moves <= 3, (t, tr.findings)
        if g.n <= 128:
            assert games.cop_number_exact(g).cop_number == 2


# --- 8: local clustering ----------------------------------------------------------


@criterion(8)
def test_seed_node_clustering_c4():
    g = graph("c4", 10)
    vals = [metrics.local_clustering(g, v) for v in range(4)]
    assert all(abs(c - 0.4) <= 0.02 for c in vals), vals


@criterion(8)
def test_clustering_recurrence_converges():
    rng = np.random.default_rng(42)
    for c0, c2 in rng.random((100, 2)):
        c, cc = metrics.clustering_fixed_point(float(c0), float(c2), 200)[-1]
        assert abs(c - 0.4) <= 1e-9 and abs(cc - 0.4) <= 1e-9


# --- 9: global clustering ----------------------------------------------------------


@criterion(9)
def test_global_clustering_interval():
    rep = metrics.clustering_report(graph("c4", 10))
    inside = [name for name, v in (("mean_local", rep.mean_local), ("transitivity", rep.transitivity))
              if 0.1100 < v < 0.1244]
    assert inside, f"finding: mean_local={rep.mean_local:.4f}, transitivity={rep.transitivity:.4f}"


# --- 10: spectral gap ---------------------------------------------------------------


@lru_cache(maxsize=None)
def gap_report(t: int, method: str) -> spectral.SpectralReport:
    return spectral.spectral_gap(graph("c4", t), method)


SPECTRAL_TS = ((6, "dense"), (8, "iterative"), (9, "iterative"), (10, "iterative"))


@criterion(10)
def test_gap_lower_threshold():
    gaps = {t: gap_report(t, m).gap for t, m in SPECTRAL_TS}
    assert all(g >= 0.55 for g in gaps.values()), gaps


@criterion(10)
def test_gap_approaches_three_fifths():
    gaps = [gap_report(t, m).gap for t, m in SPECTRAL_TS]
    dist = [abs(g - 0.6) for g in gaps]
    assert all(b <= a for a, b in zip(dist, dist[1:])), f"gap sequence {gaps}"


@criterion(10)
def test_youngest_half_bound():
    bound10 = spectral.youngest_half_bound(graph("c4", 10))
    assert abs(float(bound10) - 0.6) <= 0.01, float(bound10)
    for t, m in SPECTRAL_TS:
        assert gap_report(t, m).gap >= float(spectral.youngest_half_bound(graph("c4", t))) - 1e-6


@criterion(10)
@pytest.mark.parametrize("t, method", SPECTRAL_TS)
def test_mixing_lemma_sets(t, method):
    g = graph("c4", t)
    lam = gap_report(t, method).gap
    rng = np.random.default_rng(42 + t)
    sets = [spectral.youngest_half(g)] + [np.flatnonzero(rng.random(g.n) < 0.5) for _ in range(1000)]
    failed = [i for i, x in enumerate(sets) if not spectral.mixing_lemma_check(g, x, lam)[0]]
    assert not failed


@criterion(10)
@pytest.mark.parametrize("t", [6, 8, 9])
def test_dense_iterative_agreement(t):
    dense = gap_report(t, "dense")
    it = gap_report(t, "iterative")
    assert abs(dense.gap - it.gap) <= 1e-6


# --- 11: property suite --------------------------------------------------------------


@criterion(11)
@pytest.mark.parametrize("seed", SEEDS + ("c4-t12",))
def test_structural_properties(seed, tmp_path):
    cases = [("c4", 12)] if seed == "c4-t12" else [(seed, t) for t in T_RANGE]
    for s, t in cases:
        g = graph(s, t)
        a = g.to_bool()
        assert np.array_equal(a, a.T) and not a.diagonal().any(), (s, t)
        if t >= 1:
            h = g.n // 2
            assert not a[h:, h:].any(), (s, t)
            one = a[:h, :h] ^ a[:h, h:]
            np.fill_diagonal(one, True)
            assert one.all(), (s, t)
        del a
        path = tmp_path / f"{s}-{t}.bin"
        write_binary(g, path)
        assert graphs_equal(g, read_binary(path)), (s, t)
        path.unlink()


@criterion(11)
@pytest.mark.parametrize("seed", SEEDS)
def test_distance_trichotomy(seed):
    bad = {}
    for t in range(2, 11):
        s = exact_distances(seed, t)
        if s.pairs_unreachable or s.pairs_beyond3:
            bad[t] = (s.pairs_beyond3, s.pairs_unreachable)
    assert not bad, f"(pairs beyond 3, unreachable pairs) per t: {bad}"


@criterion(11)
def test_distance_trichotomy_sampled_t12():
    s = sampled_c4_t12()
    assert s.pairs_unreachable == 0 and s.pairs_beyond3 == 0
