"""Claim-by-claim verification of an ILAT sequence."""

from __future__ import annotations

import math
import platform
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from . import games, metrics, spectral
from .generator import GenerationTrace, generate_sequence, seed_graph
from .graph import DEFAULT_MEMORY_BUDGET, IlatGraph, graphs_equal, read_binary, unpack_rows, write_binary

PASS, FAIL, NA, FINDING = "pass", "fail", "n/a", "finding"

GLOBAL_CLUSTERING_INTERVAL = (0.1100, 0.1244)
DENSITY_TOLERANCE = {8: 0.005, 10: 0.001}


@dataclass
class Claim:
    claim_id: str
    locus: str
    measured: Any
    expected: Any
    tolerance: Any
    status: str
    note: str = ""

    def as_dict(self) -> dict:
        return {
            "claim_id": self.claim_id,
            "locus": self.locus,
            "measured": self.measured,
            "expected": self.expected,
            "tolerance": self.tolerance,
            "status": self.status,
            "note": self.note,
        }


@dataclass
class Budgets:
    memory: int = DEFAULT_MEMORY_BUDGET
    pair_budget: int = metrics.DEFAULT_PAIR_BUDGET
    cop_max_n: int = 128
    exact_distance_max_n: int = metrics.EXACT_DISTANCE_MAX_N
    dense_spectral_max_n: int = spectral.DENSE_MAX_N
    mixing_samples: int = 1000
    workers: int = 1


@dataclass
class VerifyReport:
    seed: str
    t_max: int
    rng_seed: int
    budgets: Budgets
    claims: list[Claim] = field(default_factory=list)
    trace: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.status in (PASS, NA) for c in self.claims)

    def as_dict(self) -> dict:
        return {
            "environment": {
                "seed_graph": self.seed,
                "t_max": self.t_max,
                "rng_seed": self.rng_seed,
                "budgets": vars(self.budgets),
                "python": platform.python_version(),
                "numpy": np.__version__,
            },
            "summary": {
                s: sum(c.status == s for c in self.claims) for s in (PASS, FAIL, NA, FINDING)
            },
            "claims": [c.as_dict() for c in self.claims],
            "trace": self.trace,
        }


def _status(ok: bool) -> str:
    return PASS if ok else FAIL


def _f(x: float) -> float:
    return float(round(float(x), 12))


# --- individual claims -------------------------------------------------------


def claim_edge_recurrence(trace: GenerationTrace) -> Claim:
    rows = [r for r in trace.rows if r.e_predicted is not None]
    bad = [r.step for r in rows if r.e != r.e_predicted]
    return Claim(
        "edge-recurrence",
        "edge recurrence e_{t+1} = n_t^2 - e_t - n_t",
        [[r.step, r.e] for r in rows],
        [[r.step, r.e_predicted] for r in rows],
        0,
        _status(not bad) if rows else NA,
    )


def claim_densification(trace: GenerationTrace) -> Claim:
    rows = [r for r in trace.rows if r.step >= 2]
    if len(rows) < 2:
        return Claim("densification", "densification theorem", None, "e/n strictly increasing", 0, NA)
    ratios = [Fraction(r.e, r.n) for r in rows]
    increasing = all(b > a for a, b in zip(ratios, ratios[1:]))
    n0 = trace.rows[0].n
    floor = min(float(q) / 2**r.step for q, r in zip(ratios, rows))
    return Claim(
        "densification",
        "densification theorem",
        {"e_over_n": [_f(q) for q in ratios], "fitted_c": _f(floor)},
        {"strictly_increasing": True, "c_at_least": 0.1 * n0},
        0,
        _status(increasing and floor >= 0.1 * n0),
    )


def claim_density_limit(graphs: list[IlatGraph]) -> Claim:
    measured, ok, any_ran = {}, True, False
    for t, tol in DENSITY_TOLERANCE.items():
        if t < len(graphs):
            d = float(metrics.density(graphs[t]))
            measured[str(t)] = _f(d)
            ok &= abs(d - 0.4) <= tol
            any_ran = True
    return Claim(
        "density-limit",
        "limiting density 2/5",
        measured,
        0.4,
        {str(k): v for k, v in DENSITY_TOLERANCE.items()},
        _status(ok) if any_ran else NA,
    )


def claim_series_limit(k_terms: int = 30) -> Claim:
    sums = metrics.limiting_density_series(k_terms)
    first = next((k for k, s in enumerate(sums, 1) if abs(s - Fraction(2, 5)) <= Fraction(1, 10**6)), None)
    return Claim(
        "density-series-limit",
        "limiting density series sum b_i = 2/5",
        {"S_k": _f(sums[-1]), "first_k_within_1e-6": first},
        0.4,
        1e-6,
        _status(abs(sums[-1] - Fraction(2, 5)) <= Fraction(1, 10**6)),
    )


def claim_series_identity(k_terms: int = 30) -> Claim:
    res = metrics.series_identity_residuals(k_terms)
    stated_bad = [k for k, (s, _) in enumerate(res, 1) if s != 0]
    exact_bad = [k for k, (_, e) in enumerate(res, 1) if e != 0]
    return Claim(
        "density-series-identity",
        "limiting density proof identity (5/4)S_k - b_k = 1/2",
        {"k_violating_stated": stated_bad, "k_violating_exact": exact_bad,
         "stated_residual_k1": str(res[0][0])},
        "0 for every k <= %d" % k_terms,
        0,
        _status(not stated_bad),
        "exact finite-k identity is (5/4)S_k - b_k/4 = 1/2 - 2^-(k+1)",
    )


def claim_degree_classes(g: IlatGraph, convention: str, max_k: int | None = None) -> Claim:
    cid = "degree-classes" if convention == "alternating" else "degree-classes-derived"
    if max_k is None:
        max_k = g.step - 3
    if max_k < 1:
        return Claim(cid, "degree class derivation", None, None, 0, NA, "needs t >= 4")
    h = metrics.degree_histogram(g, max_k, convention=convention)
    return Claim(
        cid,
        "degree class derivation",
        {str(p.k): [h.counts.get(p.degree, 0), p.degree] for p in h.predictions},
        {str(p.k): [p.count, p.degree] for p in h.predictions},
        0,
        _status(not h.mismatched),
        f"t={g.step}, correction convention {convention!r}",
    )


def claim_diameter(graphs: list[IlatGraph], budgets: Budgets) -> tuple[Claim, dict]:
    measured, ok, summaries = {}, True, {}
    for t, g in enumerate(graphs):
        if t < 2 or g.n > budgets.exact_distance_max_n:
            continue
        s = metrics.distance_summary(g, "exact", workers=budgets.workers)
        summaries[t] = s
        diam = s.diameter
        measured[str(t)] = "inf" if math.isinf(diam) else int(diam)
        ok &= diam == 3
    status = _status(ok) if measured else NA
    return Claim("diameter", "diameter-3 theorem", measured, 3, 0, status), summaries


def claim_antipodes(graphs: list[IlatGraph]) -> Claim:
    counts = {}
    try:
        for t, g in enumerate(graphs[1:], 1):
            counts[str(t)] = len(metrics.antipode_check(g))
    except AssertionError as exc:
        return Claim("antipodes", "diameter lower bound d(x, x') >= 3", counts, "n/2 pairs", 0, FAIL, str(exc))
    expected = {str(t): graphs[t].n // 2 for t in range(1, len(graphs))}
    return Claim("antipodes", "diameter lower bound d(x, x') >= 3", counts, expected, 0,
                 _status(counts == expected) if counts else NA)


def claim_mean_distance(graphs: list[IlatGraph], budgets: Budgets, rng_seed: int, cached: dict) -> Claim:
    if len(graphs) <= 10:
        return Claim("mean-distance", "average distance limit 1.6", None, 1.6, 0.02, NA, "needs t >= 10")
    t = len(graphs) - 1
    g = graphs[t]
    s = cached.get(t)
    if s is None:
        mode = "exact" if g.n <= budgets.exact_distance_max_n else "sampled"
        s = metrics.distance_summary(g, mode, pair_budget=budgets.pair_budget, rng_seed=rng_seed,
                                     workers=budgets.workers)
    ok = abs(s.mean_distance - 1.6) <= 0.02
    if s.mode == "sampled":
        ok &= abs(s.mean_distance - 1.6) <= 3 * s.std_error
    return Claim(
        "mean-distance",
        "average distance limit 1.6",
        {"t": t, "L_t": _f(s.mean_distance), "mode": s.mode,
         "std_error": None if s.std_error is None else _f(s.std_error)},
        1.6,
        0.02 if s.mode == "exact" else "0.02 and 3 standard errors",
        _status(ok),
    )


def claim_domination(graphs: list[IlatGraph]) -> Claim:
    measured, ok = {}, True
    for t in range(3, min(8, len(graphs) - 1) + 1):
        g = graphs[t]
        res = games.domination_number_exact(g, max_size=3)
        measured[str(t)] = {"gamma": res.gamma, "witness": list(res.witness), "method": res.method}
        ok &= res.gamma == 3
    return Claim("domination", "domination number 3", measured, 3, 0, _status(ok) if measured else NA)


def claim_cop_number(graphs: list[IlatGraph], budgets: Budgets) -> Claim:
    measured, ok = {}, True
    for t in (2, 3):
        if t < len(graphs) and graphs[t].n <= budgets.cop_max_n:
            res = games.cop_number_exact(graphs[t], k_max=3)
            measured[str(t)] = res.as_dict()
            ok &= res.cop_number == 2
    return Claim("cop-number", "cop number 2 theorem", measured, 2, 0, _status(ok) if measured else NA)


def claim_g1_cop_number(graphs: list[IlatGraph]) -> Claim | None:
    """For a complete seed K_m, G_1 is K_m plus m isolated nodes: cop number m + 1."""
    g0 = graphs[0]
    if len(graphs) < 2 or g0.n < 2 or g0.edge_count != g0.n * (g0.n - 1) // 2:
        return None
    res = games.cop_number_exact(graphs[1], k_max=g0.n + 1)
    return Claim("g1-cop-number", "cop number of G_1 for a complete seed", res.as_dict(), g0.n + 1, 0,
                 _status(res.cop_number == g0.n + 1))


def claim_scripted_cops(graphs: list[IlatGraph], budgets: Budgets) -> Claim:
    measured, ok = {}, True
    for t, g in enumerate(graphs):
        if t < 2 or g.n > budgets.cop_max_n:
            continue
        tr = games.two_cop_scripted_strategy(g)
        exact = games.cop_number_exact(g, k_max=3).cop_number
        agree = tr.captured == (exact is not None and exact <= 2)
        measured[str(t)] = {"captured": tr.captured, "cop_moves": tr.cop_moves,
                            "adversary": tr.adversary, "exact_cop_number": exact,
                            "findings": tr.findings}
        ok &= tr.captured and tr.cop_moves <= 3 and agree
    return Claim("scripted-cops", "two-cop capture strategy", measured,
                 "capture within 3 cop moves, agreeing with the exact solver", 0,
                 _status(ok) if measured else NA)


def claim_local_clustering(graphs: list[IlatGraph]) -> Claim:
    if len(graphs) <= 10:
        return Claim("local-clustering", "old-node local clustering 0.4", None, 0.4, 0.02, NA, "needs t >= 10")
    g = graphs[10]
    vals = [metrics.local_clustering(g, v) for v in range(graphs[0].n)]
    return Claim("local-clustering", "old-node local clustering 0.4",
                 {"t": 10, "seed_nodes": [_f(v) for v in vals]}, 0.4, 0.02,
                 _status(all(abs(v - 0.4) <= 0.02 for v in vals)))


def claim_clustering_fixed_point(rng_seed: int, starts: int = 100, iterations: int = 200) -> Claim:
    rng = np.random.default_rng(rng_seed)
    worst = 0.0
    for c0, c2 in rng.random((starts, 2)):
        c, cc = metrics.clustering_fixed_point(float(c0), float(c2), iterations)[-1]
        worst = max(worst, abs(c - 0.4), abs(cc - 0.4))
    return Claim("clustering-fixed-point", "local clustering recurrences",
                 {"max_error": worst, "starts": starts, "iterations": iterations},
                 [0.4, 0.4], 1e-9, _status(worst <= 1e-9))


def claim_global_clustering(graphs: list[IlatGraph], budgets: Budgets, cached: dict) -> Claim:
    if len(graphs) <= 10:
        return Claim("global-clustering", "global clustering bounds", None,
                     list(GLOBAL_CLUSTERING_INTERVAL), "open interval", NA, "needs t >= 10")
    rep = cached.get(10) or metrics.clustering_report(graphs[10], workers=budgets.workers)
    lo, hi = GLOBAL_CLUSTERING_INTERVAL
    inside = [name for name, v in (("mean_local", rep.mean_local), ("transitivity", rep.transitivity))
              if lo < v < hi]
    return Claim(
        "global-clustering",
        "global clustering bounds",
        {"t": 10, "mean_local": _f(rep.mean_local), "transitivity": _f(rep.transitivity),
         "inside_interval": inside},
        list(GLOBAL_CLUSTERING_INTERVAL),
        "open interval",
        PASS if inside else FINDING,
        "" if inside else "neither global clustering definition lies in the interval",
    )


def random_subsets(n: int, count: int, rng: np.random.Generator) -> list[np.ndarray]:
    return [np.flatnonzero(rng.random(n) < 0.5) for _ in range(count)]


def claim_spectral(graphs: list[IlatGraph], budgets: Budgets, rng_seed: int) -> list[Claim]:
    rng = np.random.default_rng(rng_seed)
    gaps, bounds, agreement, mixing_ok, mixing_detail = {}, {}, {}, True, {}
    tested = [t for t in (6, 8, 9, 10) if t < len(graphs)]
    for t in tested:
        g = graphs[t]
        dense = spectral.spectral_gap(g, "dense") if g.n <= budgets.dense_spectral_max_n else None
        it = spectral.spectral_gap(g, "iterative", rng_seed=rng_seed) if t >= 8 else None
        rep = it or dense
        gaps[str(t)] = _f(rep.gap)
        bounds[str(t)] = _f(spectral.youngest_half_bound(g))
        if dense is not None and it is not None:
            agreement[str(t)] = abs(dense.gap - it.gap)
        sets = [spectral.youngest_half(g)] + random_subsets(g.n, budgets.mixing_samples, rng)
        fails = sum(not spectral.mixing_lemma_check(g, x, rep.gap)[0] for x in sets)
        mixing_detail[str(t)] = {"sets": len(sets), "failures": fails}
        mixing_ok &= fails == 0
    if not tested:
        na = Claim("spectral-gap", "spectral gap lower bound 3/5", None, ">= 0.55", 0, NA, "needs t >= 6")
        return [na]
    bseq = [bounds[str(t)] for t in tested]
    monotone = all(b <= a for a, b in zip(bseq, bseq[1:]))
    dominated = all(gaps[k] >= bounds[k] - 1e-6 for k in gaps)
    dist = [abs(gaps[str(t)] - 0.6) for t in tested]
    claims = [
        Claim("spectral-gap", "spectral gap lower bound 3/5", gaps, ">= 0.55", 0,
              _status(all(v >= 0.55 for v in gaps.values()))),
        Claim("spectral-gap-trend", "spectral gap lower bound 3/5", gaps,
              "|gap - 0.6| non-increasing over tested t", 0,
              _status(all(b <= a for a, b in zip(dist, dist[1:]))) if len(tested) > 1 else NA,
              "the gap tends to lambda_max - 1, about 0.68, not to 3/5"),
        Claim("youngest-half-bound", "spectral gap lower bound 3/5",
              bounds, "decreasing towards 0.6; within 0.01 at t=10", 0.01,
              _status(monotone and dominated and all(v >= 0.6 for v in bseq)
                      and (10 not in tested or abs(bounds["10"] - 0.6) <= 0.01)),
              "gap >= bound at every tested t; the gap itself stays near 0.68"),
        Claim("mixing-lemma", "expander mixing lemma", mixing_detail, "all sets hold", 0, _status(mixing_ok)),
    ]
    if agreement:
        claims.append(Claim("spectral-agreement", "spectral gap lower bound 3/5",
                            {k: _f(v) for k, v in agreement.items()}, 0, 1e-6,
                            _status(all(v <= 1e-6 for v in agreement.values()))))
    return claims


def property_checks(g: IlatGraph) -> dict[str, bool]:
    """Structural invariants of one generated graph."""
    dense = unpack_rows(g.rows, g.n).astype(bool)
    out = {
        "symmetric": bool(np.array_equal(dense, dense.T)),
        "irreflexive": not dense.diagonal().any(),
        "degree_partition": bool(np.all(g.degrees + (g.n - g.degrees - 1) + 1 == g.n)),
    }
    if g.step >= 1:
        half = g.n // 2
        out["youngest_independent"] = not dense[half:, half:].any()
        pair = dense[:half, :half] ^ dense[:half, half:]  # x ~ y xor x ~ y'
        np.fill_diagonal(pair, True)
        out["one_of_pair"] = bool(pair.all())
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "g.bin"
        write_binary(g, path)
        out["binary_round_trip"] = graphs_equal(g, read_binary(path))
    return out


def claim_properties(graphs: list[IlatGraph], budgets: Budgets) -> Claim:
    measured, ok = {}, True
    for t, g in enumerate(graphs):
        if g.n > budgets.exact_distance_max_n:
            continue
        checks = property_checks(g)
        bad = [k for k, v in checks.items() if not v]
        measured[str(t)] = bad
        ok &= not bad
    return Claim("properties", "model definition invariants", measured, "no violated invariant", 0, _status(ok))


def run_verify(seed: str, t_max: int, rng_seed: int = 42, budgets: Budgets | None = None) -> VerifyReport:
    budgets = budgets or Budgets()
    graphs, trace = generate_sequence(seed_graph(seed, budget=budgets.memory), t_max, budget=budgets.memory)
    report = VerifyReport(seed, t_max, rng_seed, budgets, trace=trace.as_list())
    claims = report.claims
    claims.append(claim_edge_recurrence(trace))
    claims.append(claim_densification(trace))
    claims.append(claim_density_limit(graphs))
    claims.append(claim_series_limit())
    claims.append(claim_series_identity())
    last = graphs[-1]
    claims.append(claim_degree_classes(last, "alternating"))
    claims.append(claim_degree_classes(last, "exact"))
    diam, summaries = claim_diameter(graphs, budgets)
    claims.append(diam)
    claims.append(claim_antipodes(graphs))
    claims.append(claim_mean_distance(graphs, budgets, rng_seed, summaries))
    claims.append(claim_domination(graphs))
    claims.append(claim_cop_number(graphs, budgets))
    g1 = claim_g1_cop_number(graphs)
    if g1 is not None:
        claims.append(g1)
    claims.append(claim_scripted_cops(graphs, budgets))
    claims.append(claim_local_clustering(graphs))
    claims.append(claim_clustering_fixed_point(rng_seed))
    claims.append(claim_global_clustering(graphs, budgets, {}))
    claims.extend(claim_spectral(graphs, budgets, rng_seed))
    claims.append(claim_properties(graphs, budgets))
    return report
