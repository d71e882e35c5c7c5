# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# distutils: language = c++
"""Compiled kernels. Semantics and random streams match ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp
from libc.stdint cimport uint64_t, int64_t, uint8_t
from libcpp.vector cimport vector
from libcpp.unordered_set cimport unordered_set

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double TO_UNIT = 1.0 / 9007199254740992.0
cdef double EXP_LIMIT = 700.0


cdef inline uint64_t _mix(uint64_t x) nogil:
    cdef uint64_t z = x + GOLDEN
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t _next(uint64_t* state) nogil:
    state[0] = state[0] + GOLDEN
    cdef uint64_t z = state[0]
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double _uniform(uint64_t* state) nogil:
    return <double>(_next(state) >> 11) * TO_UNIT


cdef inline double _fermi(double liability, double exposure, double asset,
                          double k, double delta) nogil:
    cdef double x = -k * ((liability + exposure) / asset - delta)
    if x > EXP_LIMIT:
        return 0.0
    return 1.0 / (1.0 + exp(x))


def mix64(x):
    return _mix(<uint64_t>(x & 0xFFFFFFFFFFFFFFFF))


def stream_seed(master, a, b=0):
    cdef uint64_t m = <uint64_t>(master & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t ua = <uint64_t>(a & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t ub = <uint64_t>(b & 0xFFFFFFFFFFFFFFFF)
    return _mix(_mix(m ^ ua) ^ ub)


cdef void _cascade_core(const int64_t[::1] indptr, const int64_t[::1] indices,
                        const double[::1] amounts, const double[::1] liability,
                        const double[::1] asset, uint8_t[::1] state,
                        double[::1] exposure, uint8_t[::1] mark,
                        vector[int64_t]& frontier, double k, double delta,
                        bint literal, uint64_t* rng, const double[::1] thresholds,
                        bint use_thresholds, vector[int64_t]& touched,
                        vector[int64_t]& counts) nogil:
    cdef Py_ssize_t n = state.shape[0]
    cdef vector[int64_t] candidates
    cdef vector[int64_t] new
    cdef int64_t j, i, e
    cdef size_t a
    cdef double p, u
    while True:
        candidates.clear()
        for a in range(frontier.size()):
            j = frontier[a]
            for e in range(indptr[j], indptr[j + 1]):
                i = indices[e]
                if exposure[i] == 0.0:
                    touched.push_back(i)
                exposure[i] += amounts[e]
                if not state[i] and not mark[i]:
                    mark[i] = 1
                    candidates.push_back(i)
        if literal:
            for a in range(candidates.size()):
                mark[candidates[a]] = 0
            candidates.clear()
            for i in range(n):
                if not state[i]:
                    candidates.push_back(i)
        new.clear()
        for a in range(candidates.size()):
            i = candidates[a]
            mark[i] = 0
            p = _fermi(liability[i], exposure[i], asset[i], k, delta)
            if use_thresholds:
                u = thresholds[i]
            else:
                u = _uniform(rng)
            if u < p:
                new.push_back(i)
        if new.size() == 0:
            return
        for a in range(new.size()):
            state[new[a]] = 1
            touched.push_back(new[a])
        counts.push_back(<int64_t>new.size())
        frontier.swap(new)


def cascade(const int64_t[::1] in_indptr, const int64_t[::1] in_indices,
            const double[::1] in_amounts, const double[::1] liability,
            const double[::1] asset, defaulted0, const int64_t[::1] seeds,
            double k, double delta, bint literal, rng_seed, thresholds=None):
    cdef Py_ssize_t n = liability.shape[0]
    cdef cnp.ndarray state_arr = np.array(defaulted0, dtype=np.uint8, copy=True)
    cdef uint8_t[::1] state = state_arr
    cdef double[::1] exposure = np.zeros(n, dtype=np.float64)
    cdef uint8_t[::1] mark = np.zeros(n, dtype=np.uint8)
    cdef const double[::1] thr
    cdef bint use_thr = thresholds is not None
    if use_thr:
        thr = np.ascontiguousarray(thresholds, dtype=np.float64)
    else:
        thr = np.zeros(1, dtype=np.float64)
    cdef uint64_t rng = <uint64_t>(rng_seed & 0xFFFFFFFFFFFFFFFF)
    cdef vector[int64_t] frontier, touched, counts
    cdef Py_ssize_t s, i
    for s in range(seeds.shape[0]):
        state[seeds[s]] = 1
    for i in range(n):
        if state[i]:
            frontier.push_back(i)
    counts.push_back(<int64_t>frontier.size())
    with nogil:
        _cascade_core(in_indptr, in_indices, in_amounts, liability, asset, state,
                      exposure, mark, frontier, k, delta, literal, &rng, thr,
                      use_thr, touched, counts)
    out_counts = np.empty(counts.size(), dtype=np.int64)
    cdef int64_t[::1] oc = out_counts
    for i in range(<Py_ssize_t>counts.size()):
        oc[i] = counts[i]
    return state_arr, out_counts


def importance(const int64_t[::1] in_indptr, const int64_t[::1] in_indices,
               const double[::1] in_amounts, const double[::1] liability,
               const double[::1] asset, const int64_t[::1] sources, int runs,
               double k, double delta, master_seed):
    cdef Py_ssize_t n = liability.shape[0]
    cdef uint8_t[::1] state = np.zeros(n, dtype=np.uint8)
    cdef double[::1] exposure = np.zeros(n, dtype=np.float64)
    cdef uint8_t[::1] mark = np.zeros(n, dtype=np.uint8)
    cdef double[::1] thr = np.zeros(1, dtype=np.float64)
    out_arr = np.zeros(sources.shape[0], dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef uint64_t master = <uint64_t>(master_seed & 0xFFFFFFFFFFFFFFFF)
    cdef vector[int64_t] frontier, touched, counts
    cdef Py_ssize_t pos, a
    cdef int r
    cdef int64_t src, total
    cdef uint64_t rng
    with nogil:
        for pos in range(sources.shape[0]):
            src = sources[pos]
            total = 0
            for r in range(runs):
                touched.clear()
                counts.clear()
                frontier.clear()
                touched.push_back(src)
                frontier.push_back(src)
                state[src] = 1
                rng = _mix(_mix(master ^ <uint64_t>src) ^ <uint64_t>r)
                _cascade_core(in_indptr, in_indices, in_amounts, liability, asset,
                              state, exposure, mark, frontier, k, delta, False,
                              &rng, thr, False, touched, counts)
                for a in range(<Py_ssize_t>counts.size()):
                    total += counts[a]
                for a in range(<Py_ssize_t>touched.size()):
                    state[touched[a]] = 0
                    exposure[touched[a]] = 0.0
            out[pos] = <double>total / runs
    return out_arr


def swap_edges(const int64_t[::1] src, int64_t[::1] dst, int64_t n, int64_t nswap,
               int64_t max_tries, rng_seed):
    cdef Py_ssize_t m = src.shape[0]
    cdef unordered_set[int64_t] keys
    cdef uint64_t rng = <uint64_t>(rng_seed & 0xFFFFFFFFFFFFFFFF)
    cdef int64_t done = 0, tries = 0
    cdef Py_ssize_t e1, e2, i
    cdef int64_t a, b, c, d, k1, k2
    keys.reserve(2 * m + 1)
    for i in range(m):
        keys.insert(src[i] * n + dst[i])
    with nogil:
        while done < nswap and tries < max_tries:
            tries += 1
            e1 = <Py_ssize_t>(_next(&rng) % <uint64_t>m)
            e2 = <Py_ssize_t>(_next(&rng) % <uint64_t>m)
            if e1 == e2:
                continue
            a = src[e1]
            b = dst[e1]
            c = src[e2]
            d = dst[e2]
            if a == d or c == b or b == d:
                continue
            k1 = a * n + d
            k2 = c * n + b
            if keys.count(k1) or keys.count(k2):
                continue
            keys.erase(a * n + b)
            keys.erase(c * n + d)
            keys.insert(k1)
            keys.insert(k2)
            dst[e1] = d
            dst[e2] = b
            done += 1
    return done, tries


def bfs_sources(const int64_t[::1] indptr, const int64_t[::1] indices,
                const int64_t[::1] sources):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t k = sources.shape[0]
    dsum_a = np.zeros(k, dtype=np.int64)
    reached_a = np.zeros(k, dtype=np.int64)
    ecc_a = np.zeros(k, dtype=np.int64)
    far_a = np.zeros(k, dtype=np.int64)
    cdef int64_t[::1] dsum = dsum_a, reached = reached_a, ecc = ecc_a, far = far_a
    cdef int64_t[::1] dist = np.full(n, -1, dtype=np.int64)
    cdef int64_t[::1] queue = np.empty(max(n, 1), dtype=np.int64)
    cdef Py_ssize_t pos, head, tail, e, q
    cdef int64_t s, u, v, du, total, last
    with nogil:
        for pos in range(k):
            s = sources[pos]
            dist[s] = 0
            queue[0] = s
            head = 0
            tail = 1
            total = 0
            last = s
            while head < tail:
                u = queue[head]
                head += 1
                du = dist[u] + 1
                for e in range(indptr[u], indptr[u + 1]):
                    v = indices[e]
                    if dist[v] < 0:
                        dist[v] = du
                        total += du
                        queue[tail] = v
                        tail += 1
                        last = v
            dsum[pos] = total
            reached[pos] = tail - 1
            ecc[pos] = dist[last]
            far[pos] = last
            for q in range(tail):
                dist[queue[q]] = -1
    return dsum_a, reached_a, ecc_a, far_a


def neighbor_arcs(const int64_t[::1] out_indptr, const int64_t[::1] out_indices,
                  const int64_t[::1] nb_indptr, const int64_t[::1] nb_indices):
    cdef Py_ssize_t n = out_indptr.shape[0] - 1
    cdef int64_t[::1] mark = np.zeros(n, dtype=np.int64)
    out_a = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] out = out_a
    cdef Py_ssize_t i, a, e
    cdef int64_t u, w, stamp, cnt
    with nogil:
        for i in range(n):
            if nb_indptr[i + 1] - nb_indptr[i] < 2:
                continue
            stamp = i + 1
            for a in range(nb_indptr[i], nb_indptr[i + 1]):
                mark[nb_indices[a]] = stamp
            cnt = 0
            for a in range(nb_indptr[i], nb_indptr[i + 1]):
                u = nb_indices[a]
                for e in range(out_indptr[u], out_indptr[u + 1]):
                    w = out_indices[e]
                    if w != i and mark[w] == stamp:
                        cnt += 1
            out[i] = cnt
    return out_a
