"""Topological and financial metrics of guarantee-network snapshots."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, fields
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from . import kernels
from .graph import CANONICAL_PHASES, NetworkSnapshot, PhaseWindow, phase_partition
from .powerlaw import FitError, PowerLawFit, powerlaw_fit

log = logging.getLogger(__name__)


class MetricError(ValueError):
    """Metric undefined for the given snapshot (too small, no edges, ...)."""


@dataclass(frozen=True)
class DegreeStats:
    average_degree: float
    in_histogram: np.ndarray
    out_histogram: np.ndarray
    max_in: int
    max_out: int


@dataclass(frozen=True)
class ComponentSummary:
    count: int
    giant_size: int
    giant_share: float
    sizes: np.ndarray  # descending
    labels: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class PathStats:
    average_length: float
    diameter: int
    giant_size: int
    exact: bool


@dataclass(frozen=True)
class HubSummary:
    guarantor_hubs: frozenset
    debtor_hubs: frozenset
    overlap: float


@dataclass(frozen=True)
class FinancialAggregates:
    avg_liability: float
    avg_loan: float
    avg_credit_line: float
    avg_debt_to_asset: float
    listed_ratio: float


def _require_nodes(snapshot: NetworkSnapshot, n: int = 1) -> None:
    if snapshot.N < n:
        raise MetricError(f"snapshot {snapshot.month} has {snapshot.N} nodes; need at least {n}")


def adjacency(snapshot: NetworkSnapshot) -> sparse.csr_matrix:
    src, dst, _ = snapshot.edge_arrays()
    data = np.ones(src.size, dtype=np.int8)
    return sparse.csr_matrix((data, (src, dst)), shape=(snapshot.N, snapshot.N))


def undirected(snapshot: NetworkSnapshot) -> sparse.csr_matrix:
    """Simple undirected projection, one entry per connected pair."""
    a = adjacency(snapshot)
    u = (a + a.T).tocsr()
    u.data[:] = 1
    u.sort_indices()
    return u


def degree_stats(snapshot: NetworkSnapshot) -> DegreeStats:
    if snapshot.N < 1:
        raise MetricError("degree statistics of an empty snapshot are undefined")
    ind, outd = snapshot.in_degree(), snapshot.out_degree()
    return DegreeStats(
        average_degree=snapshot.E / snapshot.N,
        in_histogram=np.bincount(ind, minlength=1),
        out_histogram=np.bincount(outd, minlength=1),
        max_in=int(ind.max()),
        max_out=int(outd.max()),
    )


def density(snapshot: NetworkSnapshot) -> float:
    n = snapshot.N
    if n < 2:
        raise MetricError(f"density needs at least 2 nodes, got {n}")
    return snapshot.E / (n * (n - 1))


def clustering_per_node(snapshot: NetworkSnapshot, definition: str = "neighbors") -> np.ndarray:
    """Per-node directed clustering coefficient.

    ``"neighbors"``: arcs among the k distinct (in or out) neighbours of a
    node over the k(k-1) possible arcs. ``"fagiolo"``: the triangle-based
    directed coefficient (A+A^T)^3_ii / 2[d(d-1) - 2 d_mutual], the one
    networkx reports for directed graphs.
    """
    if definition == "neighbors":
        u = undirected(snapshot)
        arcs = kernels.neighbor_arcs(
            snapshot.out_indptr, snapshot.out_indices,
            u.indptr.astype(np.int64), u.indices.astype(np.int64),
        )
        k = np.diff(u.indptr).astype(np.float64)
        possible = k * (k - 1)
        out = np.zeros(snapshot.N)
        np.divide(arcs, possible, out=out, where=possible > 0)
        return out
    if definition == "fagiolo":
        a = adjacency(snapshot).astype(np.float64)
        b = (a + a.T).tocsr()
        cycles = np.asarray((b @ b).multiply(b).sum(axis=1)).ravel()
        dtot = snapshot.in_degree() + snapshot.out_degree()
        dmut = np.asarray(a.multiply(a.T).sum(axis=1)).ravel()
        denom = 2.0 * (dtot * (dtot - 1) - 2 * dmut)
        out = np.zeros(snapshot.N)
        np.divide(cycles, denom, out=out, where=denom > 0)
        return out
    raise ValueError(f"unknown clustering definition {definition!r}")


def clustering_directed(snapshot: NetworkSnapshot, definition: str = "neighbors") -> float:
    _require_nodes(snapshot)
    return float(clustering_per_node(snapshot, definition).mean())


def components(snapshot: NetworkSnapshot) -> ComponentSummary:
    """Weakly connected components."""
    if snapshot.N == 0:
        return ComponentSummary(0, 0, 0.0, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))
    count, labels = connected_components(adjacency(snapshot), directed=True, connection="weak")
    sizes = np.bincount(labels, minlength=count)
    giant = int(sizes.max())
    return ComponentSummary(int(count), giant, giant / snapshot.N,
                            np.sort(sizes)[::-1].astype(np.int64), labels.astype(np.int64))


def _couple_nodes(snapshot: NetworkSnapshot, labels: np.ndarray, sizes: np.ndarray) -> int:
    # A two-node weak component with two arcs must be a mutual pair.
    src, _, _ = snapshot.edge_arrays()
    arcs = np.bincount(labels[src], minlength=sizes.size)
    return 2 * int(np.count_nonzero((sizes == 2) & (arcs == 2)))


def reciprocal_couple_ratio(snapshot: NetworkSnapshot, comps: ComponentSummary | None = None) -> float:
    """Share of nodes sitting in isolated mutually-guaranteeing pairs."""
    _require_nodes(snapshot)
    if comps is None:
        comps = components(snapshot)
    sizes = np.bincount(comps.labels, minlength=comps.count)
    return _couple_nodes(snapshot, comps.labels, sizes) / snapshot.N


def rewire(snapshot: NetworkSnapshot, rewires: int, rng_seed: int,
           max_tries_factor: int = 100) -> NetworkSnapshot:
    """Degree-preserving randomisation by swapping debtor endpoints.

    Each swap picks two arcs a->b, c->d and replaces them with a->d, c->b,
    rejecting swaps that would create a self-guarantee or a duplicate arc.
    ``rewires`` counts accepted swaps. Each arc slot keeps its amount, so
    amounts are only meaningful in aggregate on the rewired graph.
    """
    if snapshot.E < 2:
        raise MetricError(f"need at least 2 edges to rewire, got {snapshot.E}")
    src, dst, amt = snapshot.edge_arrays()
    src = src.copy()
    new_dst = dst.copy()
    if rewires > 0:
        done, tries = kernels.swap_edges(src, new_dst, snapshot.N, int(rewires),
                                         int(max_tries_factor) * int(rewires),
                                         kernels.mix64(int(rng_seed)))
        if done < rewires:
            log.warning("rewire: %d of %d swaps accepted after %d tries", done, rewires, tries)
    return NetworkSnapshot(snapshot.month, snapshot.ids, snapshot.asset, snapshot.liability,
                           snapshot.loan, snapshot.credit_line, snapshot.listed,
                           snapshot.defaulted, src, new_dst, amt)


def null_model_couple_ratio(snapshot: NetworkSnapshot, rewires: int, rng_seed: int) -> float:
    if snapshot.E < 2:
        raise MetricError(f"need at least 2 edges to rewire, got {snapshot.E}")
    if rewires == 0:
        return reciprocal_couple_ratio(snapshot)
    return reciprocal_couple_ratio(rewire(snapshot, rewires, rng_seed))


def giant_path_stats(snapshot: NetworkSnapshot, exact_threshold: int = 20_000,
                     sample_pairs: int = 1_000_000, rng_seed: int = 0,
                     comps: ComponentSummary | None = None) -> PathStats:
    """Mean shortest path length and diameter of the giant weak component.

    Edge direction is ignored. Giants up to ``exact_threshold`` nodes get an
    all-pairs BFS. Larger ones run BFS from random sources until about
    ``sample_pairs`` pairs are covered, followed by a few double sweeps; the
    diameter is then a lower bound and ``exact`` is False.
    """
    if comps is None:
        comps = components(snapshot)
    if comps.giant_size == 0:
        raise MetricError(f"snapshot {snapshot.month} has no giant component")
    sizes = np.bincount(comps.labels, minlength=comps.count)
    giant_nodes = np.flatnonzero(comps.labels == int(np.argmax(sizes)))
    n = giant_nodes.size
    if n == 1:
        return PathStats(0.0, 0, 1, True)
    sub = undirected(snapshot)[giant_nodes][:, giant_nodes].tocsr()
    sub.sort_indices()
    indptr = sub.indptr.astype(np.int64)
    indices = sub.indices.astype(np.int64)

    if n <= exact_threshold:
        dsum, reached, ecc, _ = kernels.bfs_sources(indptr, indices, np.arange(n, dtype=np.int64))
        return PathStats(float(dsum.sum() / reached.sum()), int(ecc.max()), n, True)

    rng = np.random.default_rng(rng_seed)
    n_sources = min(n, max(1, math.ceil(sample_pairs / (n - 1))))
    sources = rng.choice(n, size=n_sources, replace=False).astype(np.int64)
    dsum, reached, ecc, far = kernels.bfs_sources(indptr, indices, sources)
    average = float(dsum.sum() / reached.sum())
    diameter = int(ecc.max())
    start = int(far[int(np.argmax(ecc))])
    for _ in range(4):
        _, _, e2, f2 = kernels.bfs_sources(indptr, indices, np.array([start], dtype=np.int64))
        if int(e2[0]) <= diameter:
            break
        diameter = int(e2[0])
        start = int(f2[0])
    return PathStats(average, diameter, n, False)


def _triangles(m: sparse.csr_matrix) -> int:
    return int(round((m @ m).multiply(m).sum() / 6))


def mutual_triad_ratio(snapshot: NetworkSnapshot) -> float:
    """Fully connected triples (all six arcs) over connected triples.

    A connected triple is an unordered node triple whose undirected
    projection has at least two edges. Returns 0.0 when there are none.
    """
    _require_nodes(snapshot, 3)
    a = adjacency(snapshot).astype(np.int64)
    u = undirected(snapshot).astype(np.int64)
    k = np.diff(u.indptr).astype(np.int64)
    connected = int((k * (k - 1) // 2).sum()) - 2 * _triangles(u)
    if connected == 0:
        return 0.0
    mutual = a.multiply(a.T).tocsr()
    return _triangles(mutual) / connected


def hubs(snapshot: NetworkSnapshot, percentile: float = 0.01) -> HubSummary:
    """Guarantor hubs (top out-degree) and debtor hubs (top in-degree).

    A node is a hub when its degree reaches the (1 - percentile) quantile;
    ties at the threshold are all included. ``overlap`` is the Jaccard index
    of the two hub sets.
    """
    if not 0 < percentile <= 1:
        raise ValueError("percentile must lie in (0, 1]")
    _require_nodes(snapshot)
    if snapshot.N < 100:
        warnings.warn(f"hub percentile on only {snapshot.N} nodes is dominated by ties",
                      stacklevel=2)
    ids = np.array(snapshot.ids, dtype=object)

    def top(deg):
        thr = np.quantile(deg, 1.0 - percentile)
        return frozenset(ids[deg >= thr].tolist())

    g = top(snapshot.out_degree())
    d = top(snapshot.in_degree())
    union = g | d
    return HubSummary(g, d, len(g & d) / len(union) if union else 0.0)


def financial_aggregates(snapshot: NetworkSnapshot) -> FinancialAggregates:
    if snapshot.N == 0:
        nan = float("nan")
        return FinancialAggregates(nan, nan, nan, nan, nan)
    return FinancialAggregates(
        avg_liability=float(snapshot.liability.mean()),
        avg_loan=float(snapshot.loan.mean()),
        avg_credit_line=float(snapshot.credit_line.mean()),
        avg_debt_to_asset=float((snapshot.liability / snapshot.asset).mean()),
        listed_ratio=float(snapshot.listed.mean()),
    )


@dataclass(frozen=True)
class MetricOptions:
    x_min_mode: str = "fixed"
    x_min: int = 1
    fit_method: str = "mle"
    path_exact_threshold: int = 20_000
    path_sample_pairs: int = 1_000_000
    hub_percentile: float = 0.01
    clustering_definition: str = "neighbors"
    rng_seed: int = 0


@dataclass
class MetricsReport:
    """Every scalar metric of one snapshot. ``None`` marks an undefined value."""

    month: str
    nodes: int
    edges: int
    avg_degree: float
    density: float | None
    lambda_in: float | None
    lambda_out: float | None
    clustering: float
    reciprocity: float
    mutual_triad_ratio: float | None
    giant_size: int
    giant_share: float
    component_count: int
    avg_path_length: float
    diameter: int
    diameter_exact: bool
    avg_liability: float
    avg_loan: float
    avg_credit_line: float
    avg_debt_to_asset: float
    listed_ratio: float
    guarantor_hubs: int
    debtor_hubs: int
    hub_overlap: float
    fit_in: PowerLawFit | None = field(default=None, repr=False)
    fit_out: PowerLawFit | None = field(default=None, repr=False)

    @classmethod
    def scalar_names(cls) -> list[str]:
        return [f.name for f in fields(cls) if f.name not in ("month", "fit_in", "fit_out")]

    def scalars(self) -> dict:
        return {name: getattr(self, name) for name in self.scalar_names()}


def _try_fit(deg, options: MetricOptions, what: str, month: str) -> PowerLawFit | None:
    try:
        return powerlaw_fit(deg, options.x_min_mode, options.x_min, options.fit_method)
    except FitError as exc:
        log.info("%s: no %s power-law fit (%s)", month, what, exc)
        return None


def metrics_report(snapshot: NetworkSnapshot, options: MetricOptions = MetricOptions()) -> MetricsReport:
    ds = degree_stats(snapshot)
    comps = components(snapshot)
    paths = giant_path_stats(snapshot, options.path_exact_threshold,
                             options.path_sample_pairs, options.rng_seed, comps)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        hub = hubs(snapshot, options.hub_percentile)
    fin = financial_aggregates(snapshot)
    fit_in = _try_fit(snapshot.in_degree(), options, "in-degree", snapshot.month)
    fit_out = _try_fit(snapshot.out_degree(), options, "out-degree", snapshot.month)
    return MetricsReport(
        month=snapshot.month,
        nodes=snapshot.N,
        edges=snapshot.E,
        avg_degree=ds.average_degree,
        density=density(snapshot) if snapshot.N >= 2 else None,
        lambda_in=fit_in.exponent if fit_in else None,
        lambda_out=fit_out.exponent if fit_out else None,
        clustering=clustering_directed(snapshot, options.clustering_definition),
        reciprocity=reciprocal_couple_ratio(snapshot, comps),
        mutual_triad_ratio=mutual_triad_ratio(snapshot) if snapshot.N >= 3 else None,
        giant_size=comps.giant_size,
        giant_share=comps.giant_share,
        component_count=comps.count,
        avg_path_length=paths.average_length,
        diameter=paths.diameter,
        diameter_exact=paths.exact,
        avg_liability=fin.avg_liability,
        avg_loan=fin.avg_loan,
        avg_credit_line=fin.avg_credit_line,
        avg_debt_to_asset=fin.avg_debt_to_asset,
        listed_ratio=fin.listed_ratio,
        guarantor_hubs=len(hub.guarantor_hubs),
        debtor_hubs=len(hub.debtor_hubs),
        hub_overlap=hub.overlap,
        fit_in=fit_in,
        fit_out=fit_out,
    )


@dataclass
class Timeseries:
    reports: list[MetricsReport]
    errors: dict[str, str]
    # window label -> metric -> (mean, sample sd or None)
    summary: dict[str, dict[str, tuple[float | None, float | None]]]
    unassigned: list[str]


SUMMARY_EXCLUDE = ("diameter_exact",)


def summarize(values: Sequence) -> tuple[float | None, float | None]:
    vals = [float(v) for v in values if v is not None and not (isinstance(v, float) and math.isnan(v))]
    if not vals:
        return None, None
    mean = float(np.mean(vals))
    sd = float(np.std(vals, ddof=1)) if len(vals) > 1 else None
    return mean, sd


def metrics_timeseries(dynamic: Sequence[NetworkSnapshot],
                       windows: Sequence[PhaseWindow] = CANONICAL_PHASES,
                       options: MetricOptions = MetricOptions()) -> Timeseries:
    """Per-month reports plus per-window mean and sample SD of every scalar.

    A month whose metrics fail is recorded in ``errors`` and skipped.
    Windows without any successful month are left out of the summary.
    """
    if len(dynamic) == 0:
        raise MetricError("metrics_timeseries needs at least one snapshot")
    reports, errors = [], {}
    for snap in dynamic:
        try:
            reports.append(metrics_report(snap, options))
        except Exception as exc:  # keep going, report per month
            errors[snap.month] = f"{type(exc).__name__}: {exc}"
            log.warning("metrics failed for %s: %s", snap.month, exc)
    by_month = {r.month: r for r in reports}
    part = phase_partition(dynamic, windows)
    names = [n for n in MetricsReport.scalar_names() if n not in SUMMARY_EXCLUDE]
    summary = {}
    for label, snaps in part.windows.items():
        rows = [by_month[s.month] for s in snaps if s.month in by_month]
        if not rows:
            continue
        summary[label] = {name: summarize([getattr(r, name) for r in rows]) for name in names}
    return Timeseries(reports, errors, summary, [s.month for s in part.unassigned])
