"""The ILAT step, multi-step generation, and analytic cross-checks."""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from .graph import (
    DEFAULT_MEMORY_BUDGET,
    GraphError,
    IlatGraph,
    check_memory,
    from_edge_list,
    read_edge_list,
    tail_mask,
    words_for,
)


class InternalInconsistencyError(RuntimeError):
    """Simulated edge count disagrees with the edge recurrence."""


def _or_shifted(dst: np.ndarray, src: np.ndarray, offset: int) -> None:
    """OR the bit rows ``src`` into ``dst`` starting at bit ``offset``."""
    q, r = divmod(offset, 64)
    w = src.shape[1]
    if r == 0:
        dst[:, q : q + w] |= src
        return
    lo = np.left_shift(src, np.uint64(r))
    hi = np.right_shift(src, np.uint64(64 - r))
    dst[:, q : q + w] |= lo
    span = min(w, dst.shape[1] - q - 1)
    if span > 0:
        dst[:, q + 1 : q + 1 + span] |= hi[:, :span]


def ilat_step(g: IlatGraph, *, budget: int = DEFAULT_MEMORY_BUDGET) -> IlatGraph:
    """Add the anti-clone ``x' = x + n`` of every node, adjacent to ``N^c(x)``."""
    n = g.n
    m = 2 * n
    check_memory(m, budget)
    comp = ~g.rows & tail_mask(n)
    ids = np.arange(n)
    comp[ids, ids >> 6] &= ~np.left_shift(np.uint64(1), (ids & 63).astype(np.uint64))

    rows = np.zeros((m, words_for(m)), dtype=np.uint64)
    w = g.words
    rows[:n, :w] = g.rows
    _or_shifted(rows[:n], comp, n)  # x ~ y' for y in N^c(x)
    rows[n:, :w] = comp  # x' ~ N^c(x)

    birth = np.concatenate([g.birth_step, np.full(n, g.step + 1, dtype=np.uint32)])
    parent = np.concatenate([g.parent, ids.astype(np.int64)])
    return IlatGraph(
        rows=rows,
        birth_step=birth,
        parent=parent,
        step=g.step + 1,
        seed_descriptor=g.seed_descriptor,
    )


def predicted_edge_count(n_t: int, e_t: int) -> int:
    """Edges after one ILAT step: ``n^2 - e - n``."""
    if not 0 <= e_t <= comb(n_t, 2):
        raise ValueError(f"e={e_t} is impossible for n={n_t}")
    return n_t * n_t - e_t - n_t


@dataclass(frozen=True)
class TraceRow:
    step: int
    n: int
    e: int
    e_predicted: int | None
    density: Fraction | None

    def as_dict(self) -> dict:
        return {
            "step": self.step,
            "n": self.n,
            "e": self.e,
            "e_predicted": self.e_predicted,
            "density": None if self.density is None else float(self.density),
            "density_exact": None if self.density is None else str(self.density),
        }


@dataclass
class GenerationTrace:
    rows: list[TraceRow]

    def append(self, g: IlatGraph) -> None:
        pred = None
        if self.rows:
            prev = self.rows[-1]
            pred = predicted_edge_count(prev.n, prev.e)
        dens = Fraction(g.edge_count, comb(g.n, 2)) if g.n >= 2 else None
        row = TraceRow(g.step, g.n, g.edge_count, pred, dens)
        if pred is not None and pred != row.e:
            raise InternalInconsistencyError(
                f"step {row.step}: simulated e={row.e} but recurrence gives {pred}"
            )
        self.rows.append(row)

    def table(self) -> str:
        lines = [f"{'t':>3} {'n':>8} {'e':>12} {'e_pred':>12} {'D_t':>9}"]
        for r in self.rows:
            pred = "-" if r.e_predicted is None else str(r.e_predicted)
            dens = "-" if r.density is None else f"{float(r.density):.6f}"
            lines.append(f"{r.step:>3} {r.n:>8} {r.e:>12} {pred:>12} {dens:>9}")
        return "\n".join(lines)

    def as_list(self) -> list[dict]:
        return [r.as_dict() for r in self.rows]


def generate(
    seed: IlatGraph, steps: int, *, budget: int = DEFAULT_MEMORY_BUDGET
) -> tuple[IlatGraph, GenerationTrace]:
    if steps < 0:
        raise ValueError("steps must be non-negative")
    check_memory(seed.n << steps, budget)
    trace = GenerationTrace([])
    g = seed
    trace.append(g)
    for _ in range(steps):
        g = ilat_step(g, budget=budget)
        trace.append(g)
    return g, trace


def generate_sequence(
    seed: IlatGraph, steps: int, *, budget: int = DEFAULT_MEMORY_BUDGET
) -> tuple[list[IlatGraph], GenerationTrace]:
    """Like :func:`generate` but keeps every ``G_0 .. G_steps``."""
    check_memory(seed.n << steps, budget)
    trace = GenerationTrace([])
    graphs = [seed]
    trace.append(seed)
    for _ in range(steps):
        graphs.append(ilat_step(graphs[-1], budget=budget))
        trace.append(graphs[-1])
    return graphs, trace


# --- degree classes ----------------------------------------------------------


@dataclass(frozen=True)
class DegreeClassPrediction:
    k: int
    count: int
    degree: int
    fraction: Fraction  # a_k
    correction: int


def degree_class_fraction(k: int) -> Fraction:
    """``a_1 = 1/2``, ``a_k = 1/2 - a_{k-1}/2``."""
    if k < 1:
        raise ValueError("class index starts at 1")
    a = Fraction(1, 2)
    for _ in range(k - 1):
        a = Fraction(1, 2) - a / 2
    return a


def degree_class_correction(k: int, convention: str = "exact") -> int:
    """Additive offset to ``a_k * n_t``.

    ``"exact"`` follows from ``deg_t(x') = n_{t-1} - 1 - deg_{t-1}(x)``:
    -1 for odd k, 0 for even k. ``"alternating"`` is the stated rule
    ``-2, +2, -2, ...``.
    """
    if convention == "exact":
        return -1 if k % 2 else 0
    if convention == "alternating":
        return -2 if k % 2 else 2
    raise ValueError(f"unknown convention {convention!r}")


def predicted_degree_classes(
    t: int, n_t: int, max_k: int, *, convention: str = "exact"
) -> list[DegreeClassPrediction]:
    """Class ``k`` holds ``n_t / 2^k`` nodes of degree ``a_k n_t + correction``."""
    if max_k >= t:
        raise ValueError(f"degree classes are only derived for k < t (got k={max_k}, t={t})")
    out = []
    for k in range(1, max_k + 1):
        if n_t % (1 << k):
            raise ValueError(f"n_t={n_t} is not divisible by 2^{k}")
        a = degree_class_fraction(k)
        corr = degree_class_correction(k, convention)
        out.append(DegreeClassPrediction(k, n_t >> k, int(a * n_t) + corr, a, corr))
    return out


# --- seed descriptors --------------------------------------------------------


def _cycle(n: int) -> list[tuple[int, int]]:
    if n < 3:
        raise GraphError("cycles need at least 3 nodes")
    return [(i, (i + 1) % n) for i in range(n)]


def _path(n: int) -> list[tuple[int, int]]:
    if n < 1:
        raise GraphError("paths need at least 1 node")
    return [(i, i + 1) for i in range(n - 1)]


def _complete(n: int) -> list[tuple[int, int]]:
    if n < 1:
        raise GraphError("complete graphs need at least 1 node")
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


_FAMILIES = {"c": _cycle, "p": _path, "k": _complete}


def seed_graph(descriptor: str, *, budget: int = DEFAULT_MEMORY_BUDGET) -> IlatGraph:
    """Parse ``cN``/``pN``/``kN`` or ``file:<path>`` into a seed graph."""
    desc = descriptor.strip()
    if desc.startswith("file:"):
        path = desc[5:]
        try:
            n, edges = read_edge_list(path)
        except OSError as exc:
            raise GraphError(f"cannot read seed file {path!r}: {exc}") from exc
        return from_edge_list(n, edges, seed_descriptor=desc, budget=budget)
    m = re.fullmatch(r"([ckp])(\d+)", desc.lower())
    if not m:
        raise GraphError(f"unknown seed descriptor {descriptor!r}")
    n = int(m.group(2))
    return from_edge_list(n, _FAMILIES[m.group(1)](n), seed_descriptor=desc.lower(), budget=budget)
