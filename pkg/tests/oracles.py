"""Slow, obviously-correct reference implementations used as test oracles.

They work on plain Python sets of (guarantor, debtor) index pairs and share
no code with the package.
"""

from __future__ import annotations

import itertools
from collections import deque


def undirected_adj(n, arcs):
    adj = [set() for _ in range(n)]
    for a, b in arcs:
        adj[a].add(b)
        adj[b].add(a)
    return adj


def bfs(adj, s):
    dist = {s: 0}
    q = deque([s])
    while q:
        u = q.popleft()
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                q.append(v)
    return dist


def components(n, arcs):
    adj = undirected_adj(n, arcs)
    seen, comps = set(), []
    for s in range(n):
        if s not in seen:
            comp = set(bfs(adj, s))
            seen |= comp
            comps.append(comp)
    return comps


def clustering(n, arcs):
    arcset = set(arcs)
    adj = undirected_adj(n, arcs)
    total = 0.0
    for i in range(n):
        nb = adj[i]
        k = len(nb)
        if k < 2:
            continue
        links = sum(1 for x in nb for y in nb if x != y and (x, y) in arcset)
        total += links / (k * (k - 1))
    return total / n


def couple_ratio(n, arcs):
    arcset = set(arcs)
    count = 0
    for comp in components(n, arcs):
        if len(comp) == 2:
            a, b = sorted(comp)
            if (a, b) in arcset and (b, a) in arcset:
                count += 2
    return count / n


def triad_ratio(n, arcs):
    arcset = set(arcs)
    adj = undirected_adj(n, arcs)
    # A triple is connected iff some member is adjacent to the other two.
    triples = set()
    for b in range(n):
        for a, c in itertools.combinations(sorted(adj[b]), 2):
            triples.add(frozenset((a, b, c)))
    full = 0
    for t in triples:
        if all((x, y) in arcset for x in t for y in t if x != y):
            full += 1
    return full / len(triples) if triples else 0.0


def giant_paths(n, arcs):
    comps = components(n, arcs)
    giant = max(comps, key=len)
    adj = undirected_adj(n, arcs)
    total = pairs = diameter = 0
    for s in giant:
        for t, d in bfs(adj, s).items():
            if t != s:
                total += d
                pairs += 1
                diameter = max(diameter, d)
    return (total / pairs if pairs else 0.0), diameter, len(giant)


def reverse_reachable(n, arcs, seeds):
    """Nodes that can reach a seed along guarantor->debtor arcs."""
    guarantors = [[] for _ in range(n)]
    for a, b in arcs:
        guarantors[b].append(a)
    seen = set(seeds)
    q = deque(seeds)
    while q:
        u = q.popleft()
        for g in guarantors[u]:
            if g not in seen:
                seen.add(g)
                q.append(g)
    return seen
