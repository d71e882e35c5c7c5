import numpy as np
import pytest

from guaranet import kernels
from guaranet.metrics import undirected

from conftest import make_snapshot, random_arcs

BACKENDS = kernels.available_backends()
both = pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled extension not built")


def test_backend_flag():
    assert kernels.BACKEND in BACKENDS


def test_mix64_reference_values(backend):
    # splitmix64 outputs for state 0, from the reference C implementation.
    assert backend.mix64(0) == 0xE220A8397B1DCDAF
    assert backend.stream_seed(1, 2, 3) == backend.mix64(backend.mix64(1 ^ 2) ^ 3)


def graph(seed, n=120):
    rng = np.random.default_rng(seed)
    arcs = random_arcs(rng, n, mean_degree=2.0)
    lev = rng.uniform(0.3, 0.9, n)
    return make_snapshot(arcs, n=n, liability=(100 * lev).tolist(), amount=15.0)


def cascade_args(snap, seeds, literal=False, thresholds=None, rng=5):
    return (snap.in_indptr, snap.in_indices, snap.in_amounts, snap.liability, snap.asset,
            snap.defaulted.view(np.uint8), np.asarray(seeds, dtype=np.int64), 1.0, 0.5,
            literal, rng, thresholds)


@both
@pytest.mark.parametrize("seed", range(8))
def test_cascade_identical(seed):
    snap = graph(seed)
    py, cc = BACKENDS["python"], BACKENDS["compiled"]
    for literal in (False, True):
        for thr in (None, np.random.default_rng(seed).random(snap.N)):
            a = py.cascade(*cascade_args(snap, [0, 3, 9], literal, thr, seed))
            b = cc.cascade(*cascade_args(snap, [0, 3, 9], literal, thr, seed))
            assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


@both
def test_importance_identical():
    snap = graph(3, n=60)
    args = (snap.in_indptr, snap.in_indices, snap.in_amounts, snap.liability, snap.asset,
            np.arange(60, dtype=np.int64), 7, 1.0, 0.5, 99)
    a = BACKENDS["python"].importance(*args)
    b = BACKENDS["compiled"].importance(*args)
    assert np.array_equal(a, b)


@both
def test_swap_identical():
    snap = graph(1, n=200)
    src, dst, _ = snap.edge_arrays()
    d1, d2 = dst.copy(), dst.copy()
    r1 = BACKENDS["python"].swap_edges(src.copy(), d1, snap.N, 500, 50_000, 17)
    r2 = BACKENDS["compiled"].swap_edges(src.copy(), d2, snap.N, 500, 50_000, 17)
    assert tuple(r1) == tuple(r2) and np.array_equal(d1, d2)


@both
def test_bfs_and_neighbor_arcs_identical():
    snap = graph(2, n=150)
    u = undirected(snap)
    ip, ix = u.indptr.astype(np.int64), u.indices.astype(np.int64)
    src = np.arange(snap.N, dtype=np.int64)
    for x, y in zip(BACKENDS["python"].bfs_sources(ip, ix, src),
                    BACKENDS["compiled"].bfs_sources(ip, ix, src)):
        assert np.array_equal(x, y)
    a = BACKENDS["python"].neighbor_arcs(snap.out_indptr, snap.out_indices, ip, ix)
    b = BACKENDS["compiled"].neighbor_arcs(snap.out_indptr, snap.out_indices, ip, ix)
    assert np.array_equal(a, b)


def test_cascade_counts_match_state(backend):
    snap = graph(4)
    state, counts = backend.cascade(*cascade_args(snap, [1, 2]))
    assert counts[0] == 2 and counts.sum() == state.sum()
    assert np.all(counts[1:] > 0)


def test_env_forces_python_backend():
    import os
    import subprocess
    import sys
    env = dict(os.environ, GUARANET_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", "from guaranet import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
