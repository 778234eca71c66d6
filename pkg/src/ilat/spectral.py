"""Normalized Laplacian spectral gap and expander-mixing checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .graph import GraphError, IlatGraph, mask_from_nodes, nodes_from_mask, unpack_rows

DENSE_MAX_N = 2048
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 10_000  # Lanczos restarts


class ConvergenceError(RuntimeError):
    """The iterative eigensolver did not converge."""


@dataclass
class SpectralReport:
    lambda_1: float
    lambda_max: float
    gap: float
    vol_G: int
    vol_X: int
    vol_Xbar: int
    mixing_bound: float | None
    method: str
    dropped_isolated: int = 0
    iterations: int = 0
    residual: float = 0.0
    spectrum: np.ndarray | None = field(default=None, repr=False)

    def as_dict(self) -> dict:
        return {
            "lambda_1": self.lambda_1,
            "lambda_max": self.lambda_max,
            "gap": self.gap,
            "vol_G": self.vol_G,
            "vol_X": self.vol_X,
            "vol_Xbar": self.vol_Xbar,
            "mixing_bound": self.mixing_bound,
            "method": self.method,
            "dropped_isolated": self.dropped_isolated,
            "iterations": self.iterations,
            "residual": self.residual,
        }


def volumes(g: IlatGraph, nodes) -> tuple[int, int, int]:
    """``(vol(X), vol(V \\ X), vol(G))`` as exact degree sums."""
    idx = np.unique(np.asarray(list(nodes), dtype=np.int64))
    vol_g = int(g.degrees.sum())
    vol_x = int(g.degrees[idx].sum()) if idx.size else 0
    return vol_x, vol_g - vol_x, vol_g


def internal_edge_volume(g: IlatGraph, nodes) -> int:
    """``e(X, X) = 2 |E(X)|``."""
    mask = mask_from_nodes(nodes, g.n)
    members = nodes_from_mask(mask, g.n)
    if members.size == 0:
        return 0
    return int(np.bitwise_count(g.rows[members] & mask).sum())


def mixing_lemma_check(g: IlatGraph, nodes, lam: float, *, rtol: float = 1e-9) -> tuple[bool, float]:
    """Check ``|e(X,X) - vol(X)^2/vol(G)| <= lam vol(X) vol(X̄)/vol(G)``; returns (holds, slack)."""
    vol_x, vol_xbar, vol_g = volumes(g, nodes)
    if vol_g == 0:
        raise GraphError("mixing lemma needs a graph with at least one edge")
    e_xx = internal_edge_volume(g, nodes)
    lhs = abs(e_xx - vol_x * vol_x / vol_g)
    rhs = lam * vol_x * vol_xbar / vol_g
    slack = rhs - lhs
    return slack >= -rtol * vol_g, slack


def youngest_half(g: IlatGraph) -> np.ndarray:
    if g.step < 1:
        raise GraphError("youngest half is undefined at step 0")
    return np.arange(g.n // 2, g.n)


def youngest_half_bound(g: IlatGraph) -> Fraction:
    """``vol(X) / vol(X̄)`` for the newest anti-clones ``X`` (an independent set)."""
    x = youngest_half(g)
    if internal_edge_volume(g, x):
        raise AssertionError("youngest generation is not independent")
    vol_x, vol_xbar, _ = volumes(g, x)
    if vol_xbar == 0:
        raise GraphError("older half has zero volume")
    return Fraction(vol_x, vol_xbar)


def _active_nodes(g: IlatGraph, isolated_policy: str) -> np.ndarray:
    active = np.flatnonzero(g.degrees > 0)
    if active.size < g.n and isolated_policy == "reject":
        raise GraphError(f"{g.n - active.size} isolated nodes; normalized Laplacian undefined")
    if isolated_policy not in ("drop", "reject"):
        raise ValueError(f"unknown isolated-node policy {isolated_policy!r}")
    if active.size < 2:
        raise GraphError("spectral gap needs at least two non-isolated nodes")
    return active


def _gap(l1: float, lmax: float) -> float:
    return max(abs(l1 - 1), abs(lmax - 1))


def _base_report(g: IlatGraph, l1, lmax, method, dropped, **kw) -> SpectralReport:
    vol_g = int(g.degrees.sum())
    if g.step >= 1:
        vol_x, vol_xbar, _ = volumes(g, youngest_half(g))
        bound = vol_x / vol_xbar if vol_xbar else None
    else:
        vol_x, vol_xbar, bound = 0, vol_g, None
    return SpectralReport(
        lambda_1=float(l1),
        lambda_max=float(lmax),
        gap=_gap(l1, lmax),
        vol_G=vol_g,
        vol_X=vol_x,
        vol_Xbar=vol_xbar,
        mixing_bound=bound,
        method=method,
        dropped_isolated=dropped,
        **kw,
    )


def laplacian_spectrum(g: IlatGraph, isolated_policy: str = "drop") -> np.ndarray:
    """All eigenvalues of ``I - D^{-1/2} A D^{-1/2}`` ascending (dense)."""
    active = _active_nodes(g, isolated_policy)
    a = unpack_rows(g.rows[active], g.n)[:, active].astype(np.float64)
    s = 1.0 / np.sqrt(g.degrees[active].astype(np.float64))
    m = a * s[:, None] * s[None, :]
    return np.sort(1.0 - np.linalg.eigvalsh(m))


def _spectral_dense(g: IlatGraph, isolated_policy: str) -> SpectralReport:
    if g.n > DENSE_MAX_N:
        raise GraphError(f"dense spectral method limited to n <= {DENSE_MAX_N}")
    lam = laplacian_spectrum(g, isolated_policy)
    active = int((g.degrees > 0).sum())
    rep = _base_report(g, lam[1], lam[-1], "dense", g.n - active)
    rep.spectrum = lam
    return rep


_BYTE_BITS = ((np.arange(256)[:, None] >> np.arange(8)) & 1).astype(np.float64)


class _Operator:
    """Deflated ``D^{-1/2} A D^{-1/2}`` applied straight from the packed bit rows.

    Each matvec builds, for every adjacency byte column ``b``, a 256-entry
    table of partial sums of ``x`` over the 8 nodes that byte covers; a row
    product is then one table lookup per byte. Columns of dropped nodes get
    weight 0, so no column slicing is needed.
    """

    def __init__(self, g: IlatGraph, active: np.ndarray):
        self.n = g.n
        self.active = active
        self.bytes = g.rows.view(np.uint8)[active]
        self.nb = self.bytes.shape[1]
        self.offsets = (np.arange(self.nb) * 256).astype(np.int32)
        self.scale = 1.0 / np.sqrt(g.degrees[active].astype(np.float64))
        self.principal = np.sqrt(g.degrees[active].astype(np.float64))
        self.principal /= np.linalg.norm(self.principal)
        self.chunk = max(1, (1 << 21) // self.nb)
        self.matvecs = 0

    def deflate(self, v: np.ndarray) -> np.ndarray:
        return v - self.principal * (self.principal @ v)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        self.matvecs += 1
        x = np.zeros(self.nb * 8)
        x[self.active] = self.deflate(np.asarray(v, dtype=np.float64).ravel()) * self.scale
        table = (x.reshape(self.nb, 8) @ _BYTE_BITS.T).ravel()
        out = np.empty(self.active.size)
        for a in range(0, self.active.size, self.chunk):
            idx = self.bytes[a : a + self.chunk].astype(np.int32) + self.offsets
            out[a : a + self.chunk] = table[idx].sum(axis=1)
        return self.deflate(out * self.scale)


def _spectral_iterative(
    g: IlatGraph, tol: float, max_iter: int, isolated_policy: str, rng_seed: int
) -> SpectralReport:
    """Both ends of the deflated spectrum by Lanczos (ARPACK ``eigsh``, ``which="BE"``).

    ``sqrt(deg)`` spans the trivial eigenvector, so after projecting it out
    the largest eigenvalue is ``1 - λ_1`` and the smallest is ``1 - λ_max``.
    """
    active = _active_nodes(g, isolated_policy)
    m = active.size
    if m < 4:  # ARPACK needs k < ncv <= n
        lam = laplacian_spectrum(g, isolated_policy)
        return _base_report(g, lam[1], lam[-1], "iterative", g.n - m)
    op = _Operator(g, active)
    lin = LinearOperator((m, m), matvec=op.matvec, dtype=np.float64)
    v0 = op.deflate(np.random.default_rng(rng_seed).standard_normal(m))
    try:
        vals, vecs = eigsh(lin, k=2, which="BE", v0=v0, tol=tol, maxiter=max_iter)
    except ArpackNoConvergence as exc:
        raise ConvergenceError(f"Lanczos did not converge within {max_iter} restarts") from exc
    res = max(float(np.linalg.norm(op.matvec(vecs[:, i]) - vals[i] * vecs[:, i])) for i in range(2))
    lo, hi = float(vals.min()), float(vals.max())
    return _base_report(g, 1.0 - hi, 1.0 - lo, "iterative", g.n - m, iterations=op.matvecs, residual=res)


def spectral_gap(
    g: IlatGraph,
    method: str = "auto",
    *,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    isolated_policy: str = "drop",
    rng_seed: int = 42,
) -> SpectralReport:
    """``λ = max(|λ_1 - 1|, |λ_{n-1} - 1|)`` of the normalized Laplacian."""
    if method == "auto":
        method = "dense" if g.n <= DENSE_MAX_N else "iterative"
    if method == "dense":
        return _spectral_dense(g, isolated_policy)
    if method == "iterative":
        return _spectral_iterative(g, tol, max_iter, isolated_policy, rng_seed)
    raise ValueError(f"unknown spectral method {method!r}")
