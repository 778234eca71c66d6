"""Dense bit-packed undirected graphs with birth-step lineage.

Row ``i`` of :attr:`IlatGraph.rows` is the neighbourhood of node ``i`` packed
into little-endian 64-bit words: bit ``j % 64`` of word ``j // 64``. Every
kernel in the package works on these rows with AND/OR + popcount.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

DEFAULT_MEMORY_BUDGET = 2 * 1024**3
NO_PARENT = -1

_MAGIC = b"ILAT"
_FORMAT_VERSION = 1
_PARENT_SENTINEL = np.uint64(0xFFFF_FFFF_FFFF_FFFF)


class GraphError(ValueError):
    """Invalid graph construction or query."""


class MemoryGuardError(GraphError):
    """The bit matrix would exceed the configured memory budget."""


class FormatError(GraphError):
    """Corrupt or incompatible binary graph file."""


def words_for(n: int) -> int:
    return max(1, (n + 63) // 64)


def matrix_bytes(n: int) -> int:
    return n * words_for(n) * 8


def check_memory(n: int, budget: int = DEFAULT_MEMORY_BUDGET) -> None:
    need = matrix_bytes(n)
    if need > budget:
        raise MemoryGuardError(
            f"graph with n={n} needs {need} bytes of adjacency bits, "
            f"over the budget of {budget} bytes"
        )


def popcount_rows(words: np.ndarray) -> np.ndarray:
    """Popcount along the last axis."""
    return np.bitwise_count(words).sum(axis=-1, dtype=np.int64)


def mask_from_nodes(nodes: Iterable[int], n: int) -> np.ndarray:
    mask = np.zeros(words_for(n), dtype=np.uint64)
    idx = np.fromiter(nodes, dtype=np.int64)
    if idx.size:
        if idx.min() < 0 or idx.max() >= n:
            raise GraphError(f"node set has ids outside [0, {n})")
        np.bitwise_or.at(mask, idx >> 6, np.left_shift(np.uint64(1), (idx & 63).astype(np.uint64)))
    return mask


def nodes_from_mask(mask: np.ndarray, n: int) -> np.ndarray:
    bits = np.unpackbits(mask.view(np.uint8), bitorder="little", count=n)
    return np.flatnonzero(bits)


def unpack_rows(rows: np.ndarray, n: int) -> np.ndarray:
    """Unpack packed rows to a ``(len(rows), n)`` uint8 0/1 array."""
    return np.unpackbits(
        np.ascontiguousarray(rows).view(np.uint8), axis=-1, bitorder="little", count=n
    )


def pack_bool(matrix: np.ndarray) -> np.ndarray:
    """Pack a boolean ``(m, n)`` matrix into ``(m, words_for(n))`` uint64 rows."""
    m, n = matrix.shape
    w = words_for(n)
    packed = np.packbits(matrix.astype(bool), axis=1, bitorder="little")
    out = np.zeros((m, w * 8), dtype=np.uint8)
    out[:, : packed.shape[1]] = packed
    return out.view("<u8").astype(np.uint64)


def tail_mask(n: int) -> np.ndarray:
    """Word mask with exactly the first ``n`` bits set."""
    mask = np.full(words_for(n), np.uint64(0xFFFF_FFFF_FFFF_FFFF), dtype=np.uint64)
    rem = n % 64
    if n == 0:
        mask[:] = 0
    elif rem:
        mask[-1] = np.uint64((1 << rem) - 1)
    return mask


@dataclass(frozen=True, eq=False)
class IlatGraph:
    """One graph ``G_t`` of an ILAT sequence.

    Node ids are ordered by birth step and the anti-clone of ``j`` created
    when the graph had ``m`` nodes gets id ``j + m``. Instances are read-only;
    the arrays are flagged non-writeable so sharing across threads is safe.
    """

    rows: np.ndarray
    birth_step: np.ndarray
    parent: np.ndarray
    step: int = 0
    seed_descriptor: str = ""
    _degrees: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        n = len(self.birth_step)
        if self.rows.shape != (n, words_for(n)) or self.rows.dtype != np.uint64:
            raise GraphError(f"rows must be uint64 with shape ({n}, {words_for(n)})")
        if self.parent.shape != (n,):
            raise GraphError("parent array length differs from node count")
        for arr in (self.rows, self.birth_step, self.parent):
            arr.flags.writeable = False
        degrees = popcount_rows(self.rows)
        degrees.flags.writeable = False
        object.__setattr__(self, "_degrees", degrees)

    @property
    def n(self) -> int:
        return len(self.birth_step)

    @property
    def words(self) -> int:
        return self.rows.shape[1]

    @property
    def edge_count(self) -> int:
        return int(self._degrees.sum()) // 2

    @property
    def degrees(self) -> np.ndarray:
        return self._degrees

    @property
    def seed_size(self) -> int:
        return self.n >> self.step

    def _check(self, x: int) -> int:
        x = int(x)
        if not 0 <= x < self.n:
            raise GraphError(f"node {x} out of range for n={self.n}")
        return x

    def has_edge(self, x: int, y: int) -> bool:
        x, y = self._check(x), self._check(y)
        return bool((int(self.rows[x, y >> 6]) >> (y & 63)) & 1)

    def neighbors(self, x: int) -> np.ndarray:
        return nodes_from_mask(self.rows[self._check(x)], self.n)

    def closed_neighborhood_mask(self, x: int) -> np.ndarray:
        x = self._check(x)
        row = self.rows[x].copy()
        row[x >> 6] |= np.uint64(1) << np.uint64(x & 63)
        return row

    def anti_clone(self, x: int, at_step: int | None = None) -> int:
        """Id of the anti-clone of ``x`` created at ``at_step`` (default: newest step)."""
        x = self._check(x)
        at_step = self.step if at_step is None else at_step
        if not 1 <= at_step <= self.step:
            raise GraphError(f"no ILAT step {at_step} in a graph at step {self.step}")
        before = self.seed_size << (at_step - 1)
        if x >= before:
            raise GraphError(f"node {x} did not exist before step {at_step}")
        return x + before

    def edges(self) -> Iterator[tuple[int, int]]:
        for u in range(self.n):
            for v in self.neighbors(u):
                if v > u:
                    yield u, int(v)

    def to_bool(self) -> np.ndarray:
        return unpack_rows(self.rows, self.n).astype(bool)

    def induced(self, nodes: Sequence[int]) -> "IlatGraph":
        """Induced subgraph on ``nodes`` (relabelled 0..k-1, lineage dropped)."""
        idx = np.asarray(nodes, dtype=np.int64)
        sub = unpack_rows(self.rows[idx], self.n)[:, idx].astype(bool)
        return from_adjacency(sub, seed_descriptor=f"induced({self.seed_descriptor})")

    def relabeled(self, perm: Sequence[int]) -> "IlatGraph":
        """Graph with node ``i`` renamed ``perm[i]`` (lineage dropped)."""
        perm = np.asarray(perm, dtype=np.int64)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(len(perm))
        dense = self.to_bool()[np.ix_(inv, inv)]
        return from_adjacency(dense, seed_descriptor=f"relabeled({self.seed_descriptor})")


def non_neighbors(g: IlatGraph, x: int) -> np.ndarray:
    """Bitmask of ``N^c(x)``: nodes other than ``x`` not adjacent to it."""
    x = g._check(x)
    mask = ~g.rows[x] & tail_mask(g.n)
    mask[x >> 6] &= ~(np.uint64(1) << np.uint64(x & 63))
    return mask


def degree(g: IlatGraph, x: int) -> int:
    return int(g.degrees[g._check(x)])


def co_degree(g: IlatGraph, x: int) -> int:
    return g.n - degree(g, x) - 1


def common_neighbor_count(g: IlatGraph, x: int, y: int) -> int:
    x, y = g._check(x), g._check(y)
    if x == y:
        raise GraphError("common_neighbor_count needs two distinct nodes")
    return int(np.bitwise_count(g.rows[x] & g.rows[y]).sum())


def from_adjacency(
    matrix: np.ndarray,
    *,
    seed_descriptor: str = "",
    budget: int = DEFAULT_MEMORY_BUDGET,
) -> IlatGraph:
    matrix = np.asarray(matrix, dtype=bool)
    n = matrix.shape[0]
    if matrix.shape != (n, n):
        raise GraphError("adjacency matrix must be square")
    if not np.array_equal(matrix, matrix.T):
        raise GraphError("adjacency matrix is not symmetric")
    if matrix.diagonal().any():
        raise GraphError("adjacency matrix has self-loops")
    check_memory(n, budget)
    return IlatGraph(
        rows=pack_bool(matrix),
        birth_step=np.zeros(n, dtype=np.uint32),
        parent=np.full(n, NO_PARENT, dtype=np.int64),
        step=0,
        seed_descriptor=seed_descriptor,
    )


def from_edge_list(
    n: int,
    edges: Iterable[tuple[int, int]],
    *,
    seed_descriptor: str = "",
    budget: int = DEFAULT_MEMORY_BUDGET,
) -> IlatGraph:
    """Build a seed graph ``G_0`` from an edge list."""
    if n < 0:
        raise GraphError("node count must be non-negative")
    check_memory(n, budget)
    dense = np.zeros((n, n), dtype=bool)
    for u, v in edges:
        u, v = int(u), int(v)
        if not (0 <= u < n and 0 <= v < n):
            raise GraphError(f"edge ({u}, {v}) has an endpoint outside [0, {n})")
        if u == v:
            raise GraphError(f"edge ({u}, {v}) is a self-loop")
        if dense[u, v]:
            raise GraphError(f"edge ({u}, {v}) is duplicated")
        dense[u, v] = dense[v, u] = True
    return from_adjacency(dense, seed_descriptor=seed_descriptor, budget=budget)


# --- binary and text formats -------------------------------------------------


def write_binary(g: IlatGraph, path: str | Path) -> None:
    desc = g.seed_descriptor.encode("utf-8")
    parent = g.parent.astype(np.int64).view(np.uint64).copy()
    parent[g.parent == NO_PARENT] = _PARENT_SENTINEL
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<HIQ", _FORMAT_VERSION, g.step, g.n))
        fh.write(struct.pack("<I", len(desc)))
        fh.write(desc)
        fh.write(g.birth_step.astype("<u4").tobytes())
        fh.write(parent.astype("<u8").tobytes())
        fh.write(g.rows.astype("<u8").tobytes())


def read_binary(path: str | Path, *, budget: int = DEFAULT_MEMORY_BUDGET) -> IlatGraph:
    data = Path(path).read_bytes()
    if data[:4] != _MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r}")
    try:
        version, step, n = struct.unpack_from("<HIQ", data, 4)
        if version != _FORMAT_VERSION:
            raise FormatError(f"{path}: unsupported format version {version}")
        check_memory(n, budget)
        off = 4 + struct.calcsize("<HIQ")
        (dlen,) = struct.unpack_from("<I", data, off)
        off += 4
        desc = data[off : off + dlen].decode("utf-8")
        off += dlen
        birth = np.frombuffer(data, dtype="<u4", count=n, offset=off).astype(np.uint32)
        off += 4 * n
        raw_parent = np.frombuffer(data, dtype="<u8", count=n, offset=off)
        off += 8 * n
        w = words_for(n)
        rows = np.frombuffer(data, dtype="<u8", count=n * w, offset=off).astype(np.uint64)
        off += 8 * n * w
    except (struct.error, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"{path}: truncated or corrupt graph file ({exc})") from exc
    if off != len(data):
        raise FormatError(f"{path}: {len(data) - off} trailing bytes")
    parent = np.where(raw_parent == _PARENT_SENTINEL, NO_PARENT, raw_parent.astype(np.int64))
    return IlatGraph(
        rows=rows.reshape(n, w),
        birth_step=birth,
        parent=parent.astype(np.int64),
        step=int(step),
        seed_descriptor=desc,
    )


def write_edge_list(g: IlatGraph, path: str | Path) -> None:
    with open(path, "w") as fh:
        fh.write(f"# n={g.n}\n")  # keeps trailing isolated nodes on re-import
        for u, v in g.edges():
            fh.write(f"{u} {v}\n")


def read_edge_list(path: str | Path) -> tuple[int, list[tuple[int, int]]]:
    """Parse a ``u v`` per line file; ``# n=<count>`` pins the node count."""
    n = None
    edges: list[tuple[int, int]] = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip().replace(" ", "")
            if body.startswith("n="):
                n = int(body[2:])
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphError(f"{path}:{lineno}: expected 'u v', got {line!r}")
        edges.append((int(parts[0]), int(parts[1])))
    if n is None:
        n = 1 + max((max(e) for e in edges), default=-1)
    return n, edges


def graphs_equal(a: IlatGraph, b: IlatGraph) -> bool:
    return (
        a.step == b.step
        and a.seed_descriptor == b.seed_descriptor
        and np.array_equal(a.rows, b.rows)
        and np.array_equal(a.birth_step, b.birth_step)
        and np.array_equal(a.parent, b.parent)
    )
