from __future__ import annotations

import functools

import numpy as np
import pytest

from guaranet import kernels
from guaranet.generator import generate_snapshot, load_preset
from guaranet.graph import Enterprise, GuaranteeEdge, build_snapshot

ACCEPTANCE_LINES: list[str] = []


def make_snapshot(arcs, n=None, month="2009-01", amount=1.0, ids=None, **attrs):
    """Snapshot on nodes n00..n{n-1} from (guarantor, debtor) index pairs.

    ``attrs`` may hold per-node sequences for asset, liability, loan,
    credit_line, listed, defaulted.
    """
    arcs = list(arcs)
    if n is None:
        n = 1 + max((max(a, b) for a, b in arcs), default=-1)
    if ids is None:
        ids = [f"n{i:03d}" for i in range(n)]
    ents = []
    for i in range(n):
        kw = {"asset": 100.0, "liability": 60.0, "loan": 10.0, "credit_line": 20.0}
        for key, values in attrs.items():
            kw[key] = values[i]
        ents.append(Enterprise(ids[i], **kw))
    edges = [GuaranteeEdge(ids[a], ids[b], amount, month) for a, b in arcs]
    return build_snapshot(month, ents, edges)


def random_arcs(rng: np.random.Generator, n: int, mean_degree: float = 1.5,
                mutual_share: float = 0.2, triangles: int = 2):
    """Sparse random digraph with some planted mutual pairs and mutual triangles."""
    arcs = set()
    m = rng.poisson(mean_degree * n)
    for _ in range(m):
        a, b = (int(x) for x in rng.integers(0, n, 2))
        if a != b:
            arcs.add((a, b))
            if rng.random() < mutual_share:
                arcs.add((b, a))
    for _ in range(triangles if n >= 3 else 0):
        a, b, c = (int(x) for x in rng.choice(n, 3, replace=False))
        arcs |= {(a, b), (b, a), (b, c), (c, b), (a, c), (c, a)}
    return sorted(arcs)


@functools.lru_cache(maxsize=None)
def preset_snapshot(name: str, seed: int = 0):
    return generate_snapshot(load_preset(name, seed))


@pytest.fixture(params=sorted(kernels.available_backends()))
def backend(request):
    return kernels.available_backends()[request.param]


@pytest.fixture
def acceptance():
    def record(criterion: str, passed: bool, detail: str):
        line = f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
