"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py --preset phase3 --repeat 3
"""

import argparse
import time

import numpy as np

from guaranet import kernels
from guaranet.generator import generate_snapshot, load_preset
from guaranet.metrics import undirected


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def workloads(snap, backend, args):
    seeds = np.sort(np.random.default_rng(0).choice(snap.N, size=snap.N // 20, replace=False))
    u = undirected(snap)
    ip, ix = u.indptr.astype(np.int64), u.indices.astype(np.int64)
    src, dst, _ = snap.edge_arrays()
    sources = np.arange(min(args.importance_nodes, snap.N), dtype=np.int64)
    bfs_src = np.arange(min(args.bfs_sources, snap.N), dtype=np.int64)

    def cascades():
        for r in range(args.cascades):
            backend.cascade(snap.in_indptr, snap.in_indices, snap.in_amounts, snap.liability,
                            snap.asset, snap.defaulted.view(np.uint8), seeds, 1.0, 0.5,
                            False, r, None)

    def importance():
        backend.importance(snap.in_indptr, snap.in_indices, snap.in_amounts, snap.liability,
                           snap.asset, sources, 50, 1.0, 0.5, 1)

    def swaps():
        backend.swap_edges(src.copy(), dst.copy(), snap.N, snap.E, 100 * snap.E, 3)

    def bfs():
        backend.bfs_sources(ip, ix, bfs_src)

    def arcs():
        backend.neighbor_arcs(snap.out_indptr, snap.out_indices, ip, ix)

    return {
        f"cascade x{args.cascades}": cascades,
        f"importance {sources.size} nodes x50": importance,
        "edge swaps (E)": swaps,
        f"bfs {bfs_src.size} sources": bfs,
        "neighbor arcs": arcs,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="phase3")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--cascades", type=int, default=20)
    ap.add_argument("--importance-nodes", type=int, default=2000)
    ap.add_argument("--bfs-sources", type=int, default=20)
    args = ap.parse_args()

    snap = generate_snapshot(load_preset(args.preset, args.seed))
    backends = kernels.available_backends()
    print(f"{args.preset}: N={snap.N} E={snap.E}; backends: {', '.join(backends)}")
    table = {name: {k: best_of(fn, args.repeat) for k, fn in workloads(snap, b, args).items()}
             for name, b in backends.items()}
    print(f"{'kernel':32s}" + "".join(f"{n:>12s}" for n in backends) + "     speedup")
    for k in table["python"]:
        row = [table[n][k] for n in backends]
        speed = f"{row[0] / row[-1]:10.1f}x" if len(row) > 1 else ""
        print(f"{k:32s}" + "".join(f"{t:11.4f}s" for t in row) + speed)


if __name__ == "__main__":
    main()
