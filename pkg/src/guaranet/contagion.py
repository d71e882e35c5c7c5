"""Fermi default-probability cascades on guarantee networks.

An enterprise i defaults with probability

    P_i = 1 / (1 + exp(-k * ((L_i + S_i) / A_i - delta)))

where S_i is the total amount i guarantees for debtors that have already
defaulted. Seeds default at step 0. At each later step only enterprises
with a debtor that defaulted in the previous step are rolled; the cascade
stops at the first step without new defaults.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .graph import Enterprise, NetworkSnapshot

log = logging.getLogger(__name__)

SCENARIOS = ("random", "top_in_degree", "top_loan", "top_importance")
DEFAULT_P = (0.01, 0.05, 0.10)


class ContagionError(ValueError):
    pass


@dataclass(frozen=True)
class ContagionParams:
    k: float = 1.0
    delta: float = 0.5
    p: float = 0.05
    scenario: str = "random"
    runs: int = 10_000
    seed: int = 0
    importance_runs_per_node: int = 50
    # "triggered": roll only guarantors of fresh defaults; "literal": roll
    # every surviving enterprise at every step.
    mode: str = "triggered"
    # "fixed" uses delta as given; "mean_leverage" uses the snapshot mean L/A.
    delta_mode: str = "fixed"

    def validate(self) -> None:
        if not self.k > 0:
            raise ContagionError(f"k must be positive, got {self.k}")
        if not 0 < self.p < 1:
            raise ContagionError(f"p must lie in (0, 1), got {self.p}")
        if self.runs < 1:
            raise ContagionError("runs must be >= 1")
        if self.importance_runs_per_node < 1:
            raise ContagionError("importance_runs_per_node must be >= 1")
        if self.scenario not in SCENARIOS:
            raise ContagionError(f"unknown scenario {self.scenario!r}")
        if self.mode not in ("triggered", "literal"):
            raise ContagionError(f"unknown mode {self.mode!r}")
        if self.delta_mode not in ("fixed", "mean_leverage"):
            raise ContagionError(f"unknown delta_mode {self.delta_mode!r}")


@dataclass(frozen=True)
class ContagionResult:
    month: str
    seeds: tuple[str, ...]
    step_counts: tuple[int, ...]  # newly defaulted per step, step 0 first
    defaulted: np.ndarray = field(repr=False)  # bool mask in snapshot order
    nodes: int = 0

    @property
    def final_size(self) -> int:
        return int(sum(self.step_counts))

    @property
    def steps(self) -> int:
        """Index of the first step that produced no new default."""
        return len(self.step_counts)

    @property
    def failure_ratio(self) -> float:
        return self.final_size / self.nodes

    @property
    def net_failure_ratio(self) -> float:
        return (self.final_size - self.step_counts[0]) / self.nodes

    def to_bytes(self) -> bytes:
        head = "|".join([self.month, ",".join(self.seeds), ",".join(map(str, self.step_counts))])
        return head.encode() + b"|" + np.packbits(self.defaulted).tobytes()

    def __eq__(self, other) -> bool:
        if not isinstance(other, ContagionResult):
            return NotImplemented
        return self.to_bytes() == other.to_bytes()

    __hash__ = None


@dataclass(frozen=True)
class MonteCarloSummary:
    month: str
    scenario: str
    p: float
    mean_final_ratio: float
    sd: float | None
    runs: int
    mean_net_ratio: float

    @property
    def standard_error(self) -> float | None:
        return None if self.sd is None else self.sd / math.sqrt(self.runs)


def _fermi(liability: float, exposure: float, asset: float, k: float, delta: float) -> float:
    x = -k * ((liability + exposure) / asset - delta)
    if x > 700.0:
        return 0.0
    return 1.0 / (1.0 + math.exp(x))


def default_probability(enterprise: Enterprise, defaulted_guaranteed_amount: float = 0.0,
                        params: ContagionParams = ContagionParams()) -> float:
    if not enterprise.asset > 0:
        raise ContagionError(f"enterprise {enterprise.id!r}: asset must be positive")
    if defaulted_guaranteed_amount < 0:
        raise ContagionError("defaulted guaranteed amount must be >= 0")
    return _fermi(enterprise.liability, defaulted_guaranteed_amount, enterprise.asset,
                  params.k, params.delta)


def effective_delta(snapshot: NetworkSnapshot, params: ContagionParams) -> float:
    if params.delta_mode == "mean_leverage":
        return float((snapshot.liability / snapshot.asset).mean())
    return params.delta


def seed_count(p: float, n: int) -> int:
    # Guard against p*n landing a hair above an integer, e.g. 0.07 * 100.
    return max(1, math.ceil(p * n - 1e-9))


def _top(score: np.ndarray, m: int) -> np.ndarray:
    order = np.lexsort((np.arange(score.size), -score))
    return np.sort(order[:m])


def select_seed_indices(snapshot: NetworkSnapshot, scenario: str, p: float, rng_seed: int = 0,
                        importance: np.ndarray | Mapping[str, float] | None = None) -> np.ndarray:
    n = snapshot.N
    m = seed_count(p, n)
    if m > n:
        raise ContagionError(f"cannot pick {m} seeds from {n} nodes")
    if scenario == "random":
        rng = np.random.default_rng(rng_seed)
        return np.sort(rng.choice(n, size=m, replace=False)).astype(np.int64)
    if scenario == "top_in_degree":
        return _top(snapshot.in_degree().astype(np.float64), m)
    if scenario == "top_loan":
        return _top(snapshot.loan, m)
    if scenario == "top_importance":
        if importance is None:
            raise ContagionError("top_importance needs an importance table")
        if isinstance(importance, Mapping):
            score = np.array([importance[i] for i in snapshot.ids], dtype=np.float64)
        else:
            score = np.asarray(importance, dtype=np.float64)
            if score.shape != (n,):
                raise ContagionError("importance array must have one entry per node")
        return _top(score, m)
    raise ContagionError(f"unknown scenario {scenario!r}")


def select_seeds(snapshot: NetworkSnapshot, scenario: str, p: float, rng_seed: int = 0,
                 importance=None) -> list[str]:
    """Seed ids for one scenario; top-k ties go to the smaller id."""
    idx = select_seed_indices(snapshot, scenario, p, rng_seed, importance)
    return [snapshot.ids[i] for i in idx]


def _run(snapshot, seed_idx, params, rng_seed, thresholds=None):
    delta = effective_delta(snapshot, params)
    state, counts = kernels.cascade(
        snapshot.in_indptr, snapshot.in_indices, snapshot.in_amounts,
        snapshot.liability, snapshot.asset, snapshot.defaulted.view(np.uint8),
        seed_idx, float(params.k), float(delta), params.mode == "literal",
        int(rng_seed) & 0xFFFFFFFFFFFFFFFF, thresholds,
    )
    return state, counts


def run_cascade(snapshot: NetworkSnapshot, seeds: Iterable[str], params: ContagionParams = ContagionParams(),
                rng_seed: int = 0, thresholds: np.ndarray | None = None) -> ContagionResult:
    """Simulate one cascade from ``seeds``.

    Enterprises already flagged as defaulted in the snapshot count as
    defaulted at step 0. With ``thresholds`` (one uniform per node, in
    snapshot order) every roll of node i compares against the same draw,
    which couples runs with different seed sets.
    """
    seeds = list(seeds)
    if not seeds:
        raise ContagionError("seed set is empty")
    seed_idx = np.unique(np.array([snapshot.index(s) for s in seeds], dtype=np.int64))
    if thresholds is not None:
        thresholds = np.ascontiguousarray(thresholds, dtype=np.float64)
        if thresholds.shape != (snapshot.N,):
            raise ContagionError("thresholds must have one entry per node")
    state, counts = _run(snapshot, seed_idx, params, rng_seed, thresholds)
    mask = state.astype(bool)
    mask.flags.writeable = False
    return ContagionResult(
        month=snapshot.month,
        seeds=tuple(snapshot.ids[i] for i in seed_idx),
        step_counts=tuple(int(c) for c in counts),
        defaulted=mask,
        nodes=snapshot.N,
    )


def importance_scores(snapshot: NetworkSnapshot, params: ContagionParams = ContagionParams(),
                      runs_per_node: int | None = None, rng_seed: int = 0,
                      nodes: Sequence[int] | None = None) -> np.ndarray:
    """Expected number of extra defaults caused by each node defaulting alone.

    Returns an array in snapshot order (or aligned with ``nodes`` when a
    subset of node indices is given). Initial default flags are ignored.
    """
    runs = params.importance_runs_per_node if runs_per_node is None else runs_per_node
    if runs < 1:
        raise ContagionError("runs_per_node must be >= 1")
    sources = np.arange(snapshot.N, dtype=np.int64) if nodes is None else np.asarray(nodes, dtype=np.int64)
    return kernels.importance(
        snapshot.in_indptr, snapshot.in_indices, snapshot.in_amounts,
        snapshot.liability, snapshot.asset, sources, int(runs),
        float(params.k), float(effective_delta(snapshot, params)),
        kernels.mix64(int(rng_seed)),
    )


def _run_streams(master: int, run: int) -> tuple[int, int]:
    a, b = np.random.SeedSequence([master, run]).generate_state(2, dtype=np.uint64)
    return int(a), int(b)


def monte_carlo(snapshot: NetworkSnapshot, params: ContagionParams,
                importance: np.ndarray | None = None,
                record: list | None = None) -> MonteCarloSummary:
    """Repeat cascades and summarise the final failure ratio.

    The random scenario redraws its seed set every run; targeted scenarios
    keep one seed set and vary only the default rolls. Run r draws from
    streams derived from (params.seed, r), so the summary does not depend on
    execution order. Per-run ``(run, final_ratio, steps)`` tuples are
    appended to ``record`` when given.
    """
    params.validate()
    if snapshot.N == 0:
        raise ContagionError("empty snapshot")
    if params.scenario == "top_importance" and importance is None:
        importance = importance_scores(snapshot, params, rng_seed=params.seed)
    fixed = None
    if params.scenario != "random":
        fixed = select_seed_indices(snapshot, params.scenario, params.p, params.seed, importance)
    # Integer counts keep the reduction exact and order independent.
    finals = np.empty(params.runs, dtype=np.int64)
    extra = np.empty(params.runs, dtype=np.int64)
    n = snapshot.N
    for r in range(params.runs):
        seed_stream, roll_stream = _run_streams(params.seed, r)
        seeds = fixed if fixed is not None else select_seed_indices(
            snapshot, "random", params.p, seed_stream)
        _, counts = _run(snapshot, seeds, params, roll_stream)
        finals[r] = int(counts.sum())
        extra[r] = finals[r] - int(counts[0])
        if record is not None:
            record.append((r, finals[r] / n, int(counts.size)))
    sd = float(np.std(finals, ddof=1)) / n if params.runs > 1 else None
    return MonteCarloSummary(snapshot.month, params.scenario, params.p,
                             int(finals.sum()) / (params.runs * n), sd, params.runs,
                             int(extra.sum()) / (params.runs * n))


@dataclass
class SweepResult:
    rows: list[MonteCarloSummary]
    errors: dict[tuple[str, str, float], str]


def scenario_sweep(dynamic: Sequence[NetworkSnapshot], scenarios: Sequence[str] = SCENARIOS,
                   ps: Sequence[float] = DEFAULT_P,
                   params: ContagionParams = ContagionParams()) -> SweepResult:
    """Monte Carlo summary for every (month, scenario, p) cell.

    Importance scores are computed once per month and shared across p.
    A failing cell is recorded in ``errors`` and the sweep continues.
    """
    if len(dynamic) == 0 or not scenarios or not ps:
        raise ContagionError("sweep needs at least one month, scenario and p")
    rows, errors = [], {}
    for snap in dynamic:
        importance = None
        for scenario in scenarios:
            if scenario == "top_importance" and importance is None:
                try:
                    importance = importance_scores(snap, params, rng_seed=params.seed)
                except Exception as exc:
                    for p in ps:
                        errors[(snap.month, scenario, p)] = f"{type(exc).__name__}: {exc}"
                    continue
            for p in ps:
                cell = replace(params, scenario=scenario, p=p)
                try:
                    rows.append(monte_carlo(snap, cell, importance))
                except Exception as exc:
                    errors[(snap.month, scenario, p)] = f"{type(exc).__name__}: {exc}"
                    log.warning("sweep cell %s/%s/%s failed: %s", snap.month, scenario, p, exc)
    return SweepResult(rows, errors)

