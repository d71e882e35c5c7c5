"""Pure-Python implementations of the hot kernels.

These define the reference semantics. The compiled module ``_ckernels``
mirrors every function here and must return bit-identical results,
including the random streams, so either backend can be swapped in.
"""

from collections import deque
from math import exp

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_TO_UNIT = 1.0 / 9007199254740992.0  # 2**-53
_EXP_LIMIT = 700.0


def mix64(x):
    """splitmix64 finaliser applied to ``x + GOLDEN``."""
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def stream_seed(master, a, b=0):
    """Seed for the independent stream keyed by (master, a, b)."""
    return mix64(mix64((master & MASK64) ^ (a & MASK64)) ^ (b & MASK64))


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, seed):
        self.state = seed & MASK64

    def next(self):
        self.state = (self.state + GOLDEN) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _M1) & MASK64
        z = ((z ^ (z >> 27)) * _M2) & MASK64
        return z ^ (z >> 31)

    def uniform(self):
        return (self.next() >> 11) * _TO_UNIT


def fermi(liability, exposure, asset, k, delta):
    x = -k * ((liability + exposure) / asset - delta)
    if x > _EXP_LIMIT:
        return 0.0
    return 1.0 / (1.0 + exp(x))


def _cascade_core(indptr, indices, amounts, liability, asset, state, exposure,
                  frontier, k, delta, literal, rng, thresholds, touched):
    """Run a cascade in place from an already-marked step-0 frontier.

    ``state``/``exposure`` are modified; every node whose entries change is
    appended to ``touched`` so callers can reset the workspace cheaply.
    Returns the per-step counts after step 0.
    """
    n = len(state)
    counts = []
    mark = bytearray(n)
    while True:
        candidates = []
        for j in frontier:
            for e in range(indptr[j], indptr[j + 1]):
                i = indices[e]
                if exposure[i] == 0.0:
                    touched.append(i)
                exposure[i] += amounts[e]
                if not state[i] and not mark[i]:
                    mark[i] = 1
                    candidates.append(i)
        if literal:
            for i in candidates:
                mark[i] = 0
            candidates = [i for i in range(n) if not state[i]]
        new = []
        for i in candidates:
            mark[i] = 0
            p = fermi(liability[i], exposure[i], asset[i], k, delta)
            u = thresholds[i] if thresholds is not None else rng.uniform()
            if u < p:
                new.append(i)
        if not new:
            return counts
        for i in new:
            state[i] = 1
            touched.append(i)
        counts.append(len(new))
        frontier = new


def cascade(in_indptr, in_indices, in_amounts, liability, asset, defaulted0,
            seeds, k, delta, literal, rng_seed, thresholds=None):
    """One default cascade.

    Returns ``(state, counts)``: the final uint8 default indicator and the
    newly defaulted count per step, step 0 included.
    """
    indptr = in_indptr.tolist()
    indices = in_indices.tolist()
    amounts = in_amounts.tolist()
    state = bytearray(np.asarray(defaulted0, dtype=np.uint8).tobytes())
    for s in seeds.tolist():
        state[s] = 1
    frontier = [i for i in range(len(state)) if state[i]]
    exposure = [0.0] * len(state)
    thr = thresholds.tolist() if thresholds is not None else None
    counts = [len(frontier)]
    counts += _cascade_core(indptr, indices, amounts, liability.tolist(), asset.tolist(),
                            state, exposure, frontier, k, delta, bool(literal),
                            SplitMix64(rng_seed), thr, [])
    return np.frombuffer(bytes(state), dtype=np.uint8).copy(), np.array(counts, dtype=np.int64)


def importance(in_indptr, in_indices, in_amounts, liability, asset, sources,
               runs, k, delta, master_seed):
    """Mean number of extra defaults over ``runs`` single-source cascades.

    Run ``r`` for source ``i`` uses the stream ``stream_seed(master, i, r)``.
    Initial default flags are not consulted.
    """
    indptr = in_indptr.tolist()
    indices = in_indices.tolist()
    amounts = in_amounts.tolist()
    lia = liability.tolist()
    ast = asset.tolist()
    n = len(lia)
    state = bytearray(n)
    exposure = [0.0] * n
    out = np.zeros(len(sources), dtype=np.float64)
    for pos, src in enumerate(sources.tolist()):
        total = 0
        for r in range(runs):
            touched = [src]
            state[src] = 1
            counts = _cascade_core(indptr, indices, amounts, lia, ast, state, exposure,
                                   [src], k, delta, False,
                                   SplitMix64(stream_seed(master_seed, src, r)), None, touched)
            total += sum(counts)
            for i in touched:
                state[i] = 0
                exposure[i] = 0.0
        out[pos] = total / runs
    return out


def swap_edges(src, dst, n, nswap, max_tries, rng_seed):
    """Degree-preserving debtor swaps on arrays modified in place.

    Returns ``(swaps_done, tries_used)``.
    """
    m = len(src)
    s = src.tolist()
    d = dst.tolist()
    keys = {a * n + b for a, b in zip(s, d)}
    rng = SplitMix64(rng_seed)
    done = tries = 0
    while done < nswap and tries < max_tries:
        tries += 1
        e1 = rng.next() % m
        e2 = rng.next() % m
        if e1 == e2:
            continue
        a, b = s[e1], d[e1]
        c, dd = s[e2], d[e2]
        if a == dd or c == b or b == dd:
            continue
        k1 = a * n + dd
        k2 = c * n + b
        if k1 in keys or k2 in keys:
            continue
        keys.discard(a * n + b)
        keys.discard(c * n + dd)
        keys.add(k1)
        keys.add(k2)
        d[e1] = dd
        d[e2] = b
        done += 1
    dst[:] = d
    return done, tries


def bfs_sources(indptr, indices, sources):
    """BFS from each source on an unweighted graph given in CSR form.

    Returns per-source arrays ``(distance_sum, reached, eccentricity,
    farthest)``; ``reached`` excludes the source itself.
    """
    ip = indptr.tolist()
    ix = indices.tolist()
    n = len(ip) - 1
    k = len(sources)
    dsum = np.zeros(k, dtype=np.int64)
    reached = np.zeros(k, dtype=np.int64)
    ecc = np.zeros(k, dtype=np.int64)
    far = np.zeros(k, dtype=np.int64)
    dist = [-1] * n
    for pos, s in enumerate(sources.tolist()):
        dist[s] = 0
        seen = [s]
        queue = deque([s])
        total = 0
        last = s
        while queue:
            u = queue.popleft()
            du = dist[u] + 1
            for e in range(ip[u], ip[u + 1]):
                v = ix[e]
                if dist[v] < 0:
                    dist[v] = du
                    total += du
                    seen.append(v)
                    queue.append(v)
                    last = v
        dsum[pos] = total
        reached[pos] = len(seen) - 1
        ecc[pos] = dist[last]
        far[pos] = last
        for v in seen:
            dist[v] = -1
    return dsum, reached, ecc, far


def neighbor_arcs(out_indptr, out_indices, nb_indptr, nb_indices):
    """Directed arcs among each node's distinct (in or out) neighbours."""
    op = out_indptr.tolist()
    ox = out_indices.tolist()
    nbp = nb_indptr.tolist()
    nbx = nb_indices.tolist()
    n = len(op) - 1
    mark = [0] * n
    out = np.zeros(n, dtype=np.int64)
    for i in range(n):
        stamp = i + 1
        nbs = nbx[nbp[i]:nbp[i + 1]]
        if len(nbs) < 2:
            continue
        for u in nbs:
            mark[u] = stamp
        cnt = 0
        for u in nbs:
            for e in range(op[u], op[u + 1]):
                w = ox[e]
                if w != i and mark[w] == stamp:
                    cnt += 1
        out[i] = cnt
    return out
