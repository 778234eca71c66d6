from __future__ import annotations

from collections import defaultdict
from functools import lru_cache

import pytest

from ilat.generator import generate_sequence, seed_graph

SEEDS = ("c4", "p4", "k1", "k3", "c7", "k5")


@lru_cache(maxsize=None)
def sequence(seed: str, t_max: int = 10):
    """G_0..G_t_max for a seed, generated once per session."""
    graphs, trace = generate_sequence(seed_graph(seed), t_max)
    return tuple(graphs), trace


@lru_cache(maxsize=None)
def graph(seed: str, t: int):
    if t <= 10:
        return sequence(seed)[0][t]
    return sequence(seed, t)[0][t]


_outcomes: dict[int, list[tuple[str, str]]] = defaultdict(list)


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for mark in getattr(report, "criterion_marks", ()):
        _outcomes[mark].append((report.nodeid, report.outcome))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    rep.criterion_marks = tuple(m.args[0] for m in item.iter_markers("criterion"))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(_outcomes):
        results = _outcomes[crit]
        failed = [nid.split("::")[-1] for nid, out in results if out != "passed"]
        status = "PASS" if not failed else "FAIL"
        line = f"criterion {crit:>2}: {status}  ({len(results) - len(failed)}/{len(results)} clauses)"
        if failed:
            line += "  failing: " + ", ".join(failed)
        tr.write_line(line)
