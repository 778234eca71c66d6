"""Density, distances, degree histograms and clustering over packed graphs."""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Callable, Iterator

import numpy as np

from .generator import DegreeClassPrediction, predicted_degree_classes
from .graph import IlatGraph, GraphError, nodes_from_mask, non_neighbors, unpack_rows

EXACT_DISTANCE_MAX_N = 8192
DEFAULT_PAIR_BUDGET = 1_000_000
DEFAULT_RNG_SEED = 42
_BLOCK_WORDS = 1 << 22


def _blocks(n: int, words: int) -> Iterator[tuple[int, int]]:
    size = max(1, min(n, _BLOCK_WORDS // max(1, n * words)))
    for a in range(0, n, size):
        yield a, min(n, a + size)


def _map_blocks(fn: Callable[[int, int], object], g: IlatGraph, workers: int = 1) -> list:
    spans = list(_blocks(g.n, g.words))
    if workers <= 1 or len(spans) == 1:
        return [fn(a, b) for a, b in spans]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ab: fn(*ab), spans))


def common_neighbor_block(g: IlatGraph, a: int, b: int, lo: int = 0) -> np.ndarray:
    """``cn[i - a, j - lo] = |N(i) ∩ N(j)|`` for ``i in [a, b)``, ``j >= lo``."""
    block = g.rows[a:b]
    return np.bitwise_count(block[:, None, :] & g.rows[None, lo:, :]).sum(-1, dtype=np.int32)


# --- density -----------------------------------------------------------------


def density(g: IlatGraph) -> Fraction:
    if g.n < 2:
        raise GraphError("density needs at least two nodes")
    return Fraction(g.edge_count, comb(g.n, 2))


def limiting_density_terms(k_terms: int) -> list[Fraction]:
    """``b_1 .. b_k`` with ``b_0 = 0`` and ``b_i = (1/2^{i-1} - b_{i-1}) / 4``."""
    if k_terms < 1:
        raise ValueError("k_terms must be at least 1")
    b = [Fraction(0)]
    for i in range(1, k_terms + 1):
        b.append((Fraction(1, 2 ** (i - 1)) - b[-1]) / 4)
    return b[1:]


def limiting_density_series(k_terms: int) -> list[Fraction]:
    """Partial sums ``S_1 .. S_k`` of the ``b_i`` series; the limit is 2/5."""
    sums, acc = [], Fraction(0)
    for term in limiting_density_terms(k_terms):
        acc += term
        sums.append(acc)
    return sums


def series_identity_residuals(k_terms: int) -> list[tuple[Fraction, Fraction]]:
    """Per k, residuals of the stated and the exact partial-sum identities.

    Stated: ``(5/4) S_k - b_k - 1/2``. Exact: ``(5/4) S_k - b_k/4 - (1/2 - 2^{-(k+1)})``,
    which is what the recurrence actually satisfies for finite k.
    """
    terms = limiting_density_terms(k_terms)
    sums = limiting_density_series(k_terms)
    out = []
    for k, (s, b) in enumerate(zip(sums, terms), 1):
        stated = Fraction(5, 4) * s - b - Fraction(1, 2)
        exact = Fraction(5, 4) * s - b / 4 - (Fraction(1, 2) - Fraction(1, 2 ** (k + 1)))
        out.append((stated, exact))
    return out


# --- degree histogram --------------------------------------------------------


@dataclass
class DegreeHistogram:
    counts: dict[int, int]
    predictions: list[DegreeClassPrediction]
    matched: list[int]
    mismatched: list[int]
    residual_mass: int

    def rows(self) -> list[tuple[int, int, int | None, int | None]]:
        """``(degree, count, predicted_count, class_k)`` sorted by degree."""
        by_degree = {p.degree: p for p in self.predictions}
        out = []
        for d in sorted(set(self.counts) | set(by_degree)):
            p = by_degree.get(d)
            out.append((d, self.counts.get(d, 0), p.count if p else None, p.k if p else None))
        return out


def degree_histogram(
    g: IlatGraph, max_k: int | None = None, *, convention: str = "exact"
) -> DegreeHistogram:
    """Exact histogram plus comparison with the predicted classes ``k <= max_k``.

    ``max_k`` defaults to ``t - 3``; no comparison is made below step 4.
    """
    counts = dict(Counter(g.degrees.tolist()))
    if max_k is None:
        max_k = g.step - 3
    preds = []
    if max_k >= 1:
        preds = predicted_degree_classes(g.step, g.n, max_k, convention=convention)
    matched, mismatched = [], []
    for p in preds:
        (matched if counts.get(p.degree, 0) == p.count else mismatched).append(p.k)
    residual = g.n - sum(p.count for p in preds)
    return DegreeHistogram(counts, preds, matched, mismatched, residual)


# --- distances ---------------------------------------------------------------


@dataclass
class DistanceSummary:
    histogram: dict[int, int]
    pairs_unreachable: int
    mode: str
    pairs_examined: int
    mean_distance: float
    std_error: float | None = None
    rng_seed: int | None = None

    @property
    def pairs_d1(self) -> int:
        return self.histogram.get(1, 0)

    @property
    def pairs_d2(self) -> int:
        return self.histogram.get(2, 0)

    @property
    def pairs_d3(self) -> int:
        return self.histogram.get(3, 0)

    @property
    def pairs_beyond3(self) -> int:
        return sum(c for d, c in self.histogram.items() if d > 3)

    @property
    def diameter(self) -> float:
        """Largest finite distance, ``inf`` when some pair is unreachable."""
        if self.pairs_unreachable:
            return math.inf
        return max((d for d, c in self.histogram.items() if c), default=0)

    def as_dict(self) -> dict:
        diam = self.diameter
        return {
            "mode": self.mode,
            "pairs_examined": self.pairs_examined,
            "pairs_d1": self.pairs_d1,
            "pairs_d2": self.pairs_d2,
            "pairs_d3": self.pairs_d3,
            "pairs_beyond3": self.pairs_beyond3,
            "pairs_unreachable": self.pairs_unreachable,
            "histogram": {str(d): c for d, c in sorted(self.histogram.items())},
            "diameter": "inf" if math.isinf(diam) else int(diam),
            "mean_distance": self.mean_distance,
            "std_error": self.std_error,
            "rng_seed": self.rng_seed,
        }


def bfs_distances(g: IlatGraph, source: int) -> np.ndarray:
    """Distances from ``source`` (-1 where unreachable), frontier ORs over bit rows."""
    dist = np.full(g.n, -1, dtype=np.int64)
    dist[source] = 0
    visited = np.zeros(g.words, dtype=np.uint64)
    visited[source >> 6] |= np.uint64(1) << np.uint64(source & 63)
    frontier = np.array([source])
    level = 0
    while frontier.size:
        level += 1
        reach = np.bitwise_or.reduce(g.rows[frontier], axis=0) & ~visited
        visited |= reach
        frontier = nodes_from_mask(reach, g.n)
        dist[frontier] = level
    return dist


def _two_step_ball(g: IlatGraph, x: int) -> np.ndarray:
    """Mask of nodes reachable from ``x`` by a walk of length exactly 2."""
    nbrs = g.neighbors(x)
    if nbrs.size == 0:
        return np.zeros(g.words, dtype=np.uint64)
    return np.bitwise_or.reduce(g.rows[nbrs], axis=0)


def _far_distances(g: IlatGraph, x: int, ys: np.ndarray) -> np.ndarray:
    """Distances for pairs ``(x, y)`` already known to be > 2 (-1 = unreachable)."""
    ball = _two_step_ball(g, x)
    hit = np.bitwise_count(g.rows[ys] & ball).sum(-1) > 0
    out = np.full(len(ys), 3, dtype=np.int64)
    if not hit.all():
        dist = bfs_distances(g, x)
        out[~hit] = dist[ys[~hit]]
    return out


def _exact_block(g: IlatGraph, a: int, b: int) -> Counter:
    cn = common_neighbor_block(g, a, b, lo=a)
    adj = unpack_rows(g.rows[a:b], g.n)[:, a:].astype(bool)
    span = b - a
    upper = np.triu(np.ones((span, g.n - a), dtype=bool), k=1)
    hist: Counter = Counter()
    hist[1] += int((adj & upper).sum())
    d2 = ~adj & (cn > 0) & upper
    hist[2] += int(d2.sum())
    rest = ~adj & ~d2 & upper
    for i in np.flatnonzero(rest.any(axis=1)):
        ys = np.flatnonzero(rest[i]) + a
        for d, c in Counter(_far_distances(g, a + int(i), ys).tolist()).items():
            hist[d] += c
    return hist


def _mean(hist: dict[int, int]) -> float:
    reach = sum(c for d, c in hist.items() if d > 0)
    if reach == 0:
        return math.nan
    return sum(d * c for d, c in hist.items() if d > 0) / reach


def distance_summary(
    g: IlatGraph,
    mode: str = "auto",
    *,
    pair_budget: int = DEFAULT_PAIR_BUDGET,
    rng_seed: int = DEFAULT_RNG_SEED,
    workers: int = 1,
) -> DistanceSummary:
    """Classify node pairs as distance 1 / 2 / 3 / farther / unreachable.

    Adjacency and one AND+popcount settle distances 1 and 2; only the rest
    go through the two-step ball test and, failing that, a BFS. ``auto``
    picks exact for ``n <= 8192`` and sampling otherwise.
    """
    if mode == "auto":
        mode = "exact" if g.n <= EXACT_DISTANCE_MAX_N else "sampled"
    if mode == "exact":
        hist: Counter = Counter()
        for part in _map_blocks(lambda a, b: _exact_block(g, a, b), g, workers):
            hist.update(part)
        unreachable = hist.pop(-1, 0)
        hist = {d: c for d, c in hist.items() if c}
        return DistanceSummary(hist, unreachable, "exact", comb(g.n, 2), _mean(hist))
    if mode != "sampled":
        raise ValueError(f"unknown distance mode {mode!r}")
    return _sampled_summary(g, pair_budget, rng_seed)


def _sampled_summary(g: IlatGraph, pair_budget: int, rng_seed: int) -> DistanceSummary:
    if pair_budget < 1000:
        raise ValueError("sampled distance mode needs pair_budget >= 1000")
    if g.n < 2:
        raise GraphError("sampling needs at least two nodes")
    rng = np.random.default_rng(rng_seed)
    xs = rng.integers(0, g.n, size=pair_budget)
    ys = rng.integers(0, g.n - 1, size=pair_budget)
    ys = ys + (ys >= xs)  # uniform over ordered pairs with x != y
    d = np.zeros(pair_budget, dtype=np.int64)
    chunk = max(1, (1 << 21) // g.words)
    for a in range(0, pair_budget, chunk):
        x, y = xs[a : a + chunk], ys[a : a + chunk]
        adj = (g.rows[x, y >> 6] >> (y & 63).astype(np.uint64)) & np.uint64(1)
        cn = np.bitwise_count(g.rows[x] & g.rows[y]).sum(-1)
        d[a : a + chunk] = np.where(adj == 1, 1, np.where(cn > 0, 2, 0))
    far = np.flatnonzero(d == 0)
    by_source: dict[int, list[int]] = {}
    for i in far:
        by_source.setdefault(int(xs[i]), []).append(int(i))
    for x, idx in by_source.items():
        idx_arr = np.asarray(idx)
        d[idx_arr] = _far_distances(g, x, ys[idx_arr])
    unreachable = int((d == -1).sum())
    reach = d[d > 0].astype(float)
    hist = {int(k): int(c) for k, c in zip(*np.unique(d[d > 0], return_counts=True))}
    mean = float(reach.mean()) if reach.size else math.nan
    se = float(reach.std(ddof=1) / math.sqrt(reach.size)) if reach.size > 1 else math.nan
    return DistanceSummary(hist, unreachable, "sampled", pair_budget, mean, se, rng_seed)


def antipode_check(g: IlatGraph) -> list[tuple[int, int]]:
    """Every newest pair ``(x, x')``; raises if one is adjacent or shares a neighbour."""
    if g.step < 1:
        raise GraphError("antipode check needs step >= 1: no anti-clones exist")
    half = g.n // 2
    x = np.arange(half)
    shared = np.bitwise_count(g.rows[:half] & g.rows[half:]).sum(-1)
    adj = (g.rows[x, (x + half) >> 6] >> ((x + half) & 63).astype(np.uint64)) & np.uint64(1)
    bad = np.flatnonzero((shared > 0) | (adj == 1))
    if bad.size:
        raise AssertionError(f"anti-clone pairs within distance 2: {[(int(i), int(i) + half) for i in bad[:5]]}")
    return [(int(i), int(i) + half) for i in x]


# --- clustering --------------------------------------------------------------


def _edges_within(g: IlatGraph, mask: np.ndarray) -> int:
    members = nodes_from_mask(mask, g.n)
    if members.size == 0:
        return 0
    return int(np.bitwise_count(g.rows[members] & mask).sum()) // 2


def _edges_between(g: IlatGraph, mask_a: np.ndarray, mask_b: np.ndarray) -> int:
    members = nodes_from_mask(mask_a, g.n)
    if members.size == 0:
        return 0
    return int(np.bitwise_count(g.rows[members] & mask_b).sum())


def local_clustering(g: IlatGraph, v: int) -> float:
    d = int(g.degrees[v])
    if d < 2:
        return 0.0
    return _edges_within(g, g.rows[v]) / comb(d, 2)


def triangles_per_node(g: IlatGraph, workers: int = 1) -> np.ndarray:
    """Triangles through each node: ``sum over u in N(v) of |N(u) ∩ N(v)| / 2``."""

    def block(a: int, b: int) -> np.ndarray:
        cn = common_neighbor_block(g, a, b)
        adj = unpack_rows(g.rows[a:b], g.n)
        return (cn * adj).sum(1, dtype=np.int64) // 2

    parts = _map_blocks(block, g, workers)
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)


@dataclass
class TrackedTriple:
    node: int
    c: float  # density inside N(v)
    c_non: float  # density inside N^c(v)
    c_cross: float  # density between N(v) and N^c(v)


@dataclass
class ClusteringReport:
    local: np.ndarray
    mean_local: float
    transitivity: float
    triangles: int
    wedges: int
    tracked: TrackedTriple | None = None
    extra: dict = field(default_factory=dict)


def tracked_triple(g: IlatGraph, v: int) -> TrackedTriple:
    deg = int(g.degrees[v])
    co = g.n - deg - 1
    if deg < 2 or co < 2:
        raise GraphError(f"tracked node {v} needs degree >= 2 and co-degree >= 2 (has {deg}, {co})")
    nbr = g.rows[v]
    non = non_neighbors(g, v)
    return TrackedTriple(
        node=int(v),
        c=_edges_within(g, nbr) / comb(deg, 2),
        c_non=_edges_within(g, non) / comb(co, 2),
        c_cross=_edges_between(g, nbr, non) / (deg * co),
    )


def clustering_report(g: IlatGraph, tracked: int | None = None, workers: int = 1) -> ClusteringReport:
    tri = triangles_per_node(g, workers)
    deg = g.degrees.astype(np.int64)
    wedge = deg * (deg - 1) // 2
    local = np.where(wedge > 0, tri / np.maximum(wedge, 1), 0.0)
    total_wedges = int(wedge.sum())
    transitivity = float(tri.sum() / total_wedges) if total_wedges else 0.0
    return ClusteringReport(
        local=local,
        mean_local=float(local.mean()) if g.n else 0.0,
        transitivity=transitivity,
        triangles=int(tri.sum()) // 3,
        wedges=total_wedges,
        tracked=None if tracked is None else tracked_triple(g, tracked),
    )


def clustering_fixed_point(c0: float, c2_0: float, iterations: int) -> list[tuple[float, float]]:
    """Iterate ``c <- c/4 + (1 - c'')/2`` and ``c'' <- (3c'' + 2/5)/4`` together."""
    if not (0 <= c0 <= 1 and 0 <= c2_0 <= 1):
        raise ValueError("starting values must lie in [0, 1]")
    seq = [(c0, c2_0)]
    c, c2 = c0, c2_0
    for _ in range(iterations):
        c, c2 = c / 4 + (1 - c2) / 2, (3 * c2 + 0.4) / 4
        seq.append((c, c2))
    return seq
