"""Report figures, rendered off-screen to PNG."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 3.8),
    "figure.dpi": 120,
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.bbox": "tight",
}


def _figure():
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
    return fig, ax


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(STYLE):
        fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def density_trace(trace_rows: Iterable[dict], path: Path) -> Path:
    rows = [r for r in trace_rows if r["density"] is not None]
    fig, ax = _figure()
    ax.plot([r["step"] for r in rows], [r["density"] for r in rows], "o-", label="$D_t$")
    ax.axhline(0.4, color="k", ls="--", lw=0.8, label="2/5")
    ax.set_xlabel("step t")
    ax.set_ylabel("density")
    ax.legend()
    return _save(fig, path)


def degree_histogram(rows: list[tuple[int, int, int | None, int | None]], path: Path) -> Path:
    """``rows`` as produced by ``DegreeHistogram.rows()``."""
    fig, ax = _figure()
    deg = np.array([r[0] for r in rows])
    cnt = np.array([r[1] for r in rows])
    ax.bar(deg, cnt, width=max(1.0, (deg.max() - deg.min()) / 200 if deg.size else 1.0), label="measured")
    pred = [(r[0], r[2]) for r in rows if r[2] is not None]
    if pred:
        ax.plot(*zip(*pred), "rx", label="predicted class")
    ax.set_yscale("log")
    ax.set_xlabel("degree")
    ax.set_ylabel("nodes")
    ax.legend()
    return _save(fig, path)


def distance_distribution(histogram: dict[int, int], unreachable: int, path: Path) -> Path:
    fig, ax = _figure()
    ds = sorted(d for d in histogram if d > 0)
    labels = [str(d) for d in ds]
    counts = [histogram[d] for d in ds]
    if unreachable:
        labels.append("inf")
        counts.append(unreachable)
    ax.bar(labels, counts)
    ax.set_xlabel("distance")
    ax.set_ylabel("pairs")
    return _save(fig, path)


def spectrum(eigenvalues: np.ndarray, gap: float, path: Path) -> Path:
    fig, ax = _figure()
    ax.hist(eigenvalues, bins=min(100, max(10, eigenvalues.size // 10)))
    for x in (1 - gap, 1 + gap):
        ax.axvline(x, color="r", ls="--", lw=0.8)
    ax.set_xlabel("normalized Laplacian eigenvalue")
    ax.set_ylabel("multiplicity")
    return _save(fig, path)


def clustering_by_birth(birth_step: np.ndarray, local: np.ndarray, path: Path) -> Path:
    fig, ax = _figure()
    steps = np.unique(birth_step)
    ax.boxplot([local[birth_step == s] for s in steps], positions=steps, widths=0.6)
    ax.axhline(0.4, color="k", ls="--", lw=0.8)
    ax.set_xlabel("birth step")
    ax.set_ylabel("local clustering")
    return _save(fig, path)
