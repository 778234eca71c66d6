"""Domination number and cop number: exhaustive solvers and ILAT certificates."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .graph import GraphError, IlatGraph, nodes_from_mask, tail_mask, unpack_rows

DOMINATION_PAIR_MAX_N = 4096
DOMINATION_SET_BUDGET = 5_000_000
# largest component size the k-cop solver accepts, per k
COP_SOLVER_MAX_N = {1: 2048, 2: 128, 3: 48, 4: 32}


class BudgetExceeded(RuntimeError):
    """Exhaustive search would exceed the configured budget."""


class NoDominatingSetWithin(LookupError):
    """Every set up to the requested size fails to dominate."""


# --- domination --------------------------------------------------------------


def _closed_rows(g: IlatGraph) -> np.ndarray:
    closed = g.rows.copy()
    ids = np.arange(g.n)
    closed[ids, ids >> 6] |= np.left_shift(np.uint64(1), (ids & 63).astype(np.uint64))
    return closed


def is_dominating_set(g: IlatGraph, nodes) -> bool:
    nodes = [int(v) for v in nodes]
    if not nodes:
        raise ValueError("dominating set candidate is empty")
    cover = np.bitwise_or.reduce(np.stack([g.closed_neighborhood_mask(v) for v in nodes]), axis=0)
    return bool(np.array_equal(cover, tail_mask(g.n)))


def max_pair_cover(g: IlatGraph) -> tuple[int, tuple[int, int] | None]:
    """Largest ``|N[u] ∪ N[v]|`` over distinct pairs, with a maximising pair."""
    if g.n < 2:
        return (g.n, None)
    closed = _closed_rows(g)
    best, arg = -1, None
    for u in range(g.n - 1):
        sizes = np.bitwise_count(closed[u] | closed[u + 1 :]).sum(-1)
        j = int(sizes.argmax())
        if sizes[j] > best:
            best, arg = int(sizes[j]), (u, u + 1 + j)
    return best, arg


def _find_dominating_set(g: IlatGraph, size: int, closed: np.ndarray) -> tuple[int, ...] | None:
    full = tail_mask(g.n)
    n = g.n
    if size == 1:
        hits = np.flatnonzero((closed == full).all(axis=1))
        return (int(hits[0]),) if hits.size else None
    for prefix in itertools.combinations(range(n - 1), size - 1):
        last = prefix[-1]
        if last + 1 >= n:
            continue
        cover = np.bitwise_or.reduce(closed[list(prefix)], axis=0)
        done = ((closed[last + 1 :] | cover) == full).all(axis=1)
        hits = np.flatnonzero(done)
        if hits.size:
            return prefix + (last + 1 + int(hits[0]),)
    return None


def construct_domination_witness(g: IlatGraph, x: int = 0, k: int | None = None) -> tuple[int, int, int]:
    """``{x, x', x''}``: ``x'`` is the step-``k`` anti-clone of ``x``, ``x''`` the next one of ``x'``.

    ``k`` defaults to the step after ``x`` was born.
    """
    if g.step < 3:
        raise GraphError(f"domination witness needs step >= 3 (graph is at step {g.step})")
    born = int(g.birth_step[x])
    k = born + 1 if k is None else k
    if not (born + 1 <= k <= g.step - 1):
        raise GraphError(f"node {x} (born {born}) has no anti-clone chain at steps {k}, {k + 1}")
    x1 = g.anti_clone(x, k)
    x2 = g.anti_clone(x1, k + 1)
    return (int(x), x1, x2)


@dataclass
class DominationResult:
    gamma: int
    witness: tuple[int, ...]
    method: str  # "exhaustive" | "constructive+refutation"

    def as_dict(self) -> dict:
        return {"gamma": self.gamma, "witness": list(self.witness), "method": self.method}


def domination_number_exact(
    g: IlatGraph, max_size: int = 3, *, budget: int = DOMINATION_SET_BUDGET
) -> DominationResult:
    """Smallest dominating set size up to ``max_size``.

    Sizes 1 and 2 are always searched exhaustively. For an ILAT graph at
    step >= 3 whose size-3 search is over budget, the lineage witness
    settles size 3 instead.
    """
    if g.n == 0:
        raise GraphError("empty graph")
    closed = _closed_rows(g)
    for size in range(1, max_size + 1):
        if size > g.n:
            break
        if size <= 2 and g.n > DOMINATION_PAIR_MAX_N:
            raise BudgetExceeded(f"pair refutation limited to n <= {DOMINATION_PAIR_MAX_N}")
        if size >= 3 and comb(g.n, size) > budget:
            if size == 3 and g.step >= 3:
                wit = construct_domination_witness(g)
                if not is_dominating_set(g, wit):
                    raise AssertionError(f"lineage witness {wit} does not dominate")
                return DominationResult(3, wit, "constructive+refutation")
            raise BudgetExceeded(f"C({g.n}, {size}) sets exceed the budget of {budget}")
        found = _find_dominating_set(g, size, closed)
        if found is not None:
            return DominationResult(size, found, "exhaustive")
    raise NoDominatingSetWithin(f"no dominating set of size <= {max_size}")


# --- cops and robbers --------------------------------------------------------


def connected_components(g: IlatGraph) -> list[np.ndarray]:
    seen = np.zeros(g.n, dtype=bool)
    comps = []
    for s in range(g.n):
        if seen[s]:
            continue
        reach = np.zeros(g.words, dtype=np.uint64)
        reach[s >> 6] |= np.uint64(1) << np.uint64(s & 63)
        frontier = np.array([s])
        while frontier.size:
            new = np.bitwise_or.reduce(g.rows[frontier], axis=0) & ~reach
            reach |= new
            frontier = nodes_from_mask(new, g.n)
        members = nodes_from_mask(reach, g.n)
        seen[members] = True
        comps.append(members)
    return comps


def _closed_dense(g: IlatGraph) -> np.ndarray:
    a = unpack_rows(g.rows, g.n).astype(np.float32)
    a[np.diag_indices(g.n)] = 1.0
    return a


def _any_along(closed: np.ndarray, table: np.ndarray, axis: int) -> np.ndarray:
    """``out[..., i, ...] = any_j closed[i, j] & table[..., j, ...]`` on ``axis``."""
    moved = np.moveaxis(table, axis, 0)
    shape = moved.shape
    prod = closed @ moved.reshape(shape[0], -1).astype(np.float32)
    return np.moveaxis((prod > 0).reshape(shape), 0, axis)


@dataclass
class _Solved:
    k: int
    cop_win: np.ndarray  # cops to move, indexed (c_1, ..., c_k, r)
    states: int


def _solve_k(closed: np.ndarray, k: int) -> _Solved:
    """Backward induction for k cops; states with ordered cop tuples."""
    n = closed.shape[0]
    grids = np.indices((n,) * (k + 1), sparse=True)
    captured = np.zeros((n,) * (k + 1), dtype=bool)
    for i in range(k):
        captured |= grids[i] == grids[k]
    rob_lose = captured.copy()  # robber to move
    cop_win = captured.copy()  # cops to move
    while True:
        t = rob_lose
        for axis in range(k):
            t = _any_along(closed, t, axis)
        new_cop = captured | t
        escape = _any_along(closed, ~new_cop, k)
        new_rob = captured | ~escape
        if np.array_equal(new_cop, cop_win) and np.array_equal(new_rob, rob_lose):
            break
        cop_win, rob_lose = new_cop, new_rob
    return _Solved(k, cop_win, 2 * n ** (k + 1))


def _winning_placement(solved: _Solved) -> tuple[int, ...] | None:
    wins = solved.cop_win.all(axis=-1)
    hits = np.argwhere(wins)
    return tuple(int(v) for v in hits[0]) if hits.size else None


@dataclass
class CopGameResult:
    cop_number: int | None  # None when > k_max
    win_table_size: int
    certificate: tuple[int, ...]
    components: list[dict] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "cop_number": self.cop_number,
            "win_table_size": self.win_table_size,
            "certificate": list(self.certificate),
            "components": self.components,
        }


def component_cop_number(
    g: IlatGraph, k_max: int, limits: dict[int, int] = COP_SOLVER_MAX_N
) -> tuple[int | None, tuple[int, ...], int]:
    """Cop number of a connected graph: (value or None, placement, states)."""
    closed = _closed_dense(g)
    states = 0
    for k in range(1, k_max + 1):
        if g.n <= k:
            return k, tuple(range(g.n)), states
        if g.n > limits.get(k, 0):
            raise BudgetExceeded(f"{k}-cop solver limited to n <= {limits.get(k, 0)} (component has {g.n})")
        solved = _solve_k(closed, k)
        states += solved.states
        place = _winning_placement(solved)
        if place is not None:
            return k, place, states
    return None, (), states


def cop_number_exact(
    g: IlatGraph, k_max: int = 4, *, limits: dict[int, int] = COP_SOLVER_MAX_N
) -> CopGameResult:
    """Minimal winning number of cops, summed over connected components.

    Cops place first, the robber answers, then cops move first; either side
    may stay put and capture is co-location.
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    total, cert, states, comps = 0, [], 0, []
    for members in connected_components(g):
        budget = k_max - total
        if budget < 1:
            return CopGameResult(None, states, tuple(cert), comps)
        sub = g.induced(members) if len(members) < g.n else g
        c, place, used = component_cop_number(sub, budget, limits)
        states += used
        comps.append({"size": int(len(members)), "cop_number": c})
        if c is None:
            return CopGameResult(None, states, tuple(cert), comps)
        total += c
        cert.extend(int(members[p]) for p in place)
    return CopGameResult(total, states, tuple(cert), comps)


# --- scripted two-cop strategy -----------------------------------------------


@dataclass
class Transcript:
    captured: bool
    cop_moves: int
    turns: list[dict]
    adversary: str
    v: int
    matching_ok: bool
    findings: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "captured": self.captured,
            "cop_moves": self.cop_moves,
            "adversary": self.adversary,
            "v": self.v,
            "matching_ok": self.matching_ok,
            "findings": self.findings,
            "turns": self.turns,
        }


class _Script:
    """Cops on ``v`` and ``v'``; after the robber settles on ``u'``, switch to ``x, x'``."""

    def __init__(self, g: IlatGraph, v: int):
        self.g = g
        self.half = g.n // 2
        self.v = v
        self.vp = v + self.half
        self.dense = g.to_bool()
        self.findings: list[str] = []

    def start(self) -> tuple[int, int]:
        return (self.v, self.vp)

    def _pick_x(self, r: int) -> int | None:
        u = r - self.half
        d = self.dense
        old = np.arange(self.half)
        ok = ~d[u, :self.half] & ~d[self.v, :self.half] & (old != u) & (old != self.v)
        hits = np.flatnonzero(ok)
        return int(hits[0]) if hits.size else None

    def respond(self, cops: tuple[int, int], r: int, move_no: int) -> tuple[int, int] | None:
        """Next cop positions, or None when the script has no valid move."""
        d = self.dense
        for i, c in enumerate(cops):
            if c == r or d[c, r]:
                nxt = list(cops)
                nxt[i] = r
                return tuple(nxt)
        if move_no != 1 or r < self.half:
            return None
        x = self._pick_x(r)
        if x is None:
            return None
        xp = x + self.half
        # perfect matching v -> x', v' -> x
        if not (d[self.v, xp] and d[self.vp, x]):
            return None
        return (xp, x)


def _robber_options(dense: np.ndarray, r: int) -> list[int]:
    return [r] + [int(y) for y in np.flatnonzero(dense[r])]


def _robber_value(script: _Script, cops, r, move_no, horizon) -> int:
    """Cop moves the script needs to capture a best-responding robber (horizon+1 = escape)."""
    if r in cops:
        return move_no - 1
    if move_no > horizon:
        return horizon + 1
    nxt = script.respond(cops, r, move_no)
    if nxt is None:
        return horizon + 1
    if r in nxt:
        return move_no
    return max(_robber_value(script, nxt, y, move_no + 1, horizon) for y in _robber_options(script.dense, r))


def _choose_v(g: IlatGraph, dense: np.ndarray) -> tuple[int, bool]:
    """First old node ``v`` for which every robber refuge ``u'`` admits an ``x``.

    The refuges against cops on ``v, v'`` are the ``u'`` with ``u ~ v``; the
    needed ``x`` exists iff ``N[u] ∪ N[v]`` misses some node of ``G_{t-1}``.
    """
    half = g.n // 2
    old = dense[:half, :half]
    for v in range(half):
        us = np.flatnonzero(old[v])
        if us.size == 0:
            return v, True
        free = ~old[us] & ~old[v]
        free[np.arange(us.size), us] = False
        free[:, v] = False
        if free.any(axis=1).all():
            return v, True
    return 0, False


def two_cop_scripted_strategy(
    g: IlatGraph, *, horizon: int = 3, exhaustive_max_n: int = 128
) -> Transcript:
    """Play the two-cop lineage strategy against an adversarial robber.

    Small graphs get an exhaustive best-response robber; larger ones a greedy
    robber that picks the refuge and moves that keep it away from both cops.
    """
    if g.step < 2:
        raise GraphError(f"scripted strategy needs step >= 2 (graph is at step {g.step})")
    dense = g.to_bool()
    v, matching_ok = _choose_v(g, dense)
    script = _Script(g, v)
    findings = []
    if not matching_ok:
        findings.append("no v in G_{t-1} admits a common non-neighbour x for every robber refuge")
    cops = script.start()
    exhaustive = g.n <= exhaustive_max_n

    def value(r: int) -> int:
        if exhaustive:
            return _robber_value(script, cops, r, 1, horizon)
        return _greedy_value(dense, cops, r)

    start = max(range(g.n), key=value)
    turns = [
        {"mover": "cop0", "from": None, "to": cops[0]},
        {"mover": "cop1", "from": None, "to": cops[1]},
        {"mover": "robber", "from": None, "to": start},
    ]
    r, move_no, captured = start, 1, start in cops
    while not captured and move_no <= horizon:
        nxt = script.respond(cops, r, move_no)
        if nxt is None:
            findings.append(f"script has no move at cop move {move_no} (robber on {r})")
            break
        for i in range(2):
            turns.append({"mover": f"cop{i}", "from": cops[i], "to": nxt[i]})
        cops = nxt
        if r in cops:
            captured = True
            break
        move_no += 1
        opts = _robber_options(dense, r)
        if exhaustive:
            r_next = max(opts, key=lambda y: _robber_value(script, cops, y, move_no, horizon))
        else:
            r_next = max(opts, key=lambda y: _greedy_value(dense, cops, y))
        turns.append({"mover": "robber", "from": r, "to": r_next})
        r = r_next
        if r in cops:
            captured = True
    cop_moves = sum(1 for t in turns if t["mover"] == "cop0" and t["from"] is not None)
    return Transcript(
        captured=captured,
        cop_moves=cop_moves,
        turns=turns,
        adversary="exhaustive" if exhaustive else "greedy",
        v=v,
        matching_ok=matching_ok,
        findings=findings,
    )


def _greedy_value(dense: np.ndarray, cops, r: int) -> int:
    """Robber heuristic: 0 if on a cop, 1 if next to one, else 2 + non-neighbours of cops."""
    if r in cops:
        return 0
    if any(dense[c, r] for c in cops):
        return 1
    return 2 + int((~dense[list(cops)].any(axis=0)).sum())
