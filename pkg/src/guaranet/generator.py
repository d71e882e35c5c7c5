"""Synthetic guarantee networks calibrated to phase-level statistics.

Structure: a share of the nodes is paired into isolated mutual-guarantee
couples; the remaining nodes are wired with a directed configuration model
whose in- and out-degree sequences follow discrete power laws. Financial
attributes are log-normal, with leverage drawn from a beta distribution.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, replace
from importlib import resources
from typing import Sequence

import numpy as np

from .graph import DynamicNetwork, NetworkSnapshot, ValidationError, month_from_index, month_index
from .powerlaw import sample_discrete_powerlaw, truncated_mean

log = logging.getLogger(__name__)

PHASE_PRESETS = ("phase1", "phase2", "phase3", "phase4")
DYNAMIC_PRESETS = ("canonical63",)


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GeneratorConfig:
    nodes: int
    avg_degree: float
    lambda_in: float
    lambda_out: float
    couple_share: float
    month: str = "2007-01"
    hub_overlap_share: float = 0.0
    liability_mean: float = 130000.0
    loan_mean: float = 40000.0
    credit_line_mean: float = 70000.0
    debt_to_asset: float = 0.6
    listed_prob: float = 0.045
    asset_sigma: float = 1.0
    loan_sigma: float = 1.0
    credit_line_sigma: float = 1.0
    leverage_concentration: float = 20.0
    seed: int = 0

    def validate(self) -> None:
        if self.nodes < 10:
            raise ValidationError(f"nodes must be >= 10, got {self.nodes}")
        if not (self.lambda_in > 1 and self.lambda_out > 1):
            raise ValidationError("power-law exponents must exceed 1")
        if not 0 <= self.couple_share <= 1:
            raise ValidationError("couple_share must lie in [0, 1]")
        if not 0 <= self.hub_overlap_share <= 1:
            raise ValidationError("hub_overlap_share must lie in [0, 1]")
        if self.avg_degree < 0 or self.avg_degree * self.nodes > self.nodes * (self.nodes - 1):
            raise ValidationError(f"average degree {self.avg_degree} infeasible for {self.nodes} nodes")
        if not 0 < self.debt_to_asset < 1:
            raise ValidationError("debt_to_asset must lie in (0, 1)")
        if not 0 <= self.listed_prob <= 1:
            raise ValidationError("listed_prob must lie in [0, 1]")
        for name in ("liability_mean", "loan_mean", "credit_line_mean"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratorConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in data.items() if k in known})

    def to_dict(self) -> dict:
        return asdict(self)


def _preset_json(name: str) -> dict:
    try:
        text = resources.files("guaranet").joinpath("presets", f"{name}.json").read_text()
    except FileNotFoundError:
        raise KeyError(f"unknown preset {name!r}") from None
    return json.loads(text)


def load_preset(name: str, seed: int | None = None) -> GeneratorConfig:
    """Single-month generator configuration for a phase preset."""
    if name not in PHASE_PRESETS:
        raise KeyError(f"unknown phase preset {name!r}; choose from {PHASE_PRESETS}")
    cfg = GeneratorConfig.from_dict(_preset_json(name))
    return cfg if seed is None else replace(cfg, seed=seed)


def _degree_values(rng, alpha, total, kmax, reserved_ones, slots):
    """Power-law degree values summing exactly to ``total``.

    Values are drawn until their running sum reaches ``total``; the last one
    is trimmed. ``reserved_ones`` of the ones are removed (they belong to
    couple nodes) and the rest must fit into ``slots`` nodes.
    """
    if total == 0:
        return np.zeros(0, dtype=np.int64) if reserved_ones == 0 else None
    mean = truncated_mean(alpha, 1, kmax)
    batch = int(total / mean * 1.2) + 64
    values = sample_discrete_powerlaw(rng, alpha, batch, 1, kmax)
    csum = np.cumsum(values)
    while csum[-1] < total:
        more = sample_discrete_powerlaw(rng, alpha, batch, 1, kmax)
        values = np.concatenate([values, more])
        csum = np.cumsum(values)
    cut = int(np.searchsorted(csum, total))
    values = values[: cut + 1].copy()
    values[-1] -= csum[cut] - total
    ones = np.flatnonzero(values == 1)
    if ones.size < reserved_ones:
        return None
    keep = np.ones(values.size, dtype=bool)
    keep[ones[:reserved_ones]] = False
    values = values[keep]
    if values.size > slots:
        return None
    return values


def _wire(rng, src, dst, n, max_rounds=50):
    """Repair self-loops and duplicate arcs by random debtor swaps; drop leftovers."""
    m = src.size
    if m == 0:
        return src, dst
    for _ in range(max_rounds):
        keys = src * n + dst
        order = np.argsort(keys, kind="stable")
        sk = keys[order]
        bad = src == dst
        bad[order[1:][sk[1:] == sk[:-1]]] = True
        bad_idx = np.flatnonzero(bad)
        if bad_idx.size == 0:
            return src, dst
        partners = rng.integers(0, m, size=bad_idx.size)
        for i, j in zip(bad_idx.tolist(), partners.tolist()):
            dst[i], dst[j] = dst[j], dst[i]
    keys = src * n + dst
    _, first = np.unique(keys, return_index=True)
    keep = np.zeros(m, dtype=bool)
    keep[first] = True
    keep &= src != dst
    log.info("configuration model: dropped %d unrepairable arcs", int((~keep).sum()))
    return src[keep], dst[keep]


def _lognormal(rng, mean, sigma, size):
    return rng.lognormal(math.log(mean) - sigma * sigma / 2, sigma, size)


def generate_snapshot(config: GeneratorConfig, ids: Sequence[str] | None = None,
                      max_attempts: int = 100) -> NetworkSnapshot:
    """Draw one calibrated snapshot. Deterministic for a given config."""
    config.validate()
    n = config.nodes
    rng = np.random.default_rng(config.seed)
    if ids is None:
        ids = [f"E{i:07d}" for i in range(n)]
    if len(ids) != n or len(set(ids)) != n:
        raise GenerationError("ids must be unique and match the node count")

    n_couple = 2 * int(config.couple_share * n // 2)
    rest = n - n_couple
    e_total = int(round(config.avg_degree * n))
    e_rest = e_total - n_couple
    if e_rest < 0:
        raise GenerationError(
            f"average degree {config.avg_degree} cannot cover {n_couple} couple nodes")
    kmax = max(rest - 1, 1)

    out_vals = in_vals = None
    for _ in range(max_attempts):
        if rest < 2 and e_rest > 0:
            break
        out_vals = _degree_values(rng, config.lambda_out, e_total, kmax, n_couple, rest)
        in_vals = _degree_values(rng, config.lambda_in, e_total, kmax, n_couple, rest)
        if out_vals is not None and in_vals is not None:
            break
    if out_vals is None or in_vals is None:
        raise GenerationError(f"no feasible degree sequence after {max_attempts} attempts")

    order = rng.permutation(n)
    couple_nodes = order[:n_couple]
    rest_nodes = order[n_couple:]

    out_deg = np.zeros(rest, dtype=np.int64)
    out_deg[rng.choice(rest, size=out_vals.size, replace=False)] = out_vals
    in_deg = np.zeros(rest, dtype=np.int64)
    in_sorted = np.sort(in_vals)[::-1]
    slots = rng.permutation(rest)
    n_shared = int(round(config.hub_overlap_share * math.ceil(0.01 * n)))
    n_shared = min(n_shared, in_sorted.size)
    if n_shared:
        # Place the largest in-degrees on the largest guarantors.
        top_out = np.lexsort((rng.random(rest), -out_deg))[:n_shared]
        rng.shuffle(top_out)
        mask = np.ones(rest, dtype=bool)
        mask[top_out] = False
        slots = np.concatenate([top_out, slots[mask[slots]]])
    in_deg[slots[: in_sorted.size]] = in_sorted

    src = np.repeat(np.arange(rest, dtype=np.int64), out_deg)
    dst = np.repeat(np.arange(rest, dtype=np.int64), in_deg)
    rng.shuffle(dst)
    src, dst = _wire(rng, src, dst, rest)
    src = rest_nodes[src]
    dst = rest_nodes[dst]

    a, b = couple_nodes[0::2], couple_nodes[1::2]
    src = np.concatenate([src, a, b])
    dst = np.concatenate([dst, b, a])

    asset = _lognormal(rng, config.liability_mean / config.debt_to_asset, config.asset_sigma, n)
    c = config.leverage_concentration
    for _ in range(max_attempts):
        lev = rng.beta(config.debt_to_asset * c, (1 - config.debt_to_asset) * c, n)
        if abs(lev.mean() - config.debt_to_asset) <= 0.02:
            break
    else:
        raise GenerationError("could not match the target debt-to-asset ratio")
    liability = lev * asset
    loan = _lognormal(rng, config.loan_mean, config.loan_sigma, n)
    credit_line = _lognormal(rng, config.credit_line_mean, config.credit_line_sigma, n)
    listed = rng.random(n) < config.listed_prob

    indeg = np.bincount(dst, minlength=n)
    amount = loan[dst] / indeg[dst]

    # The snapshot keeps nodes in sorted-id order; remap positions accordingly.
    id_arr = np.asarray(ids, dtype=object)
    rank = np.empty(n, dtype=np.int64)
    sorted_pos = np.argsort(id_arr.astype(str), kind="stable")
    rank[sorted_pos] = np.arange(n)
    perm = sorted_pos
    snap = NetworkSnapshot(
        config.month, id_arr[perm].tolist(), asset[perm], liability[perm], loan[perm],
        credit_line[perm], listed[perm], np.zeros(n, dtype=bool),
        rank[src], rank[dst], amount,
    )
    validate_generated(snap)
    return snap


def validate_generated(snap: NetworkSnapshot) -> None:
    src, dst, amt = snap.edge_arrays()
    if np.any(src == dst):
        raise GenerationError("generated a self-guarantee")
    keys = src * snap.N + dst
    if np.unique(keys).size != keys.size:
        raise GenerationError("generated a duplicate arc")
    if np.any(snap.asset <= 0) or np.any(snap.liability < 0) or np.any(amt < 0):
        raise GenerationError("generated attributes violate domain invariants")


def _interp(months: list[int], values: list[float], m: int) -> float:
    return float(np.interp(m, months, values))


def dynamic_configs(preset: str = "canonical63", seed: int = 0) -> tuple[list[GeneratorConfig], float]:
    """Per-month configs for a dynamic preset plus its node survival fraction.

    Phase parameters are anchored at each phase preset's month and linearly
    interpolated in between; the node count follows its own anchor path.
    """
    if preset not in DYNAMIC_PRESETS:
        raise KeyError(f"unknown dynamic preset {preset!r}; choose from {DYNAMIC_PRESETS}")
    data = _preset_json(preset)
    phases = [GeneratorConfig.from_dict(_preset_json(p)) for p in data["anchors"]]
    anchor_m = [month_index(c.month) for c in phases]
    path = sorted((month_index(k), v) for k, v in data["node_path"].items())
    path_m = [p[0] for p in path]
    path_n = [p[1] for p in path]
    numeric = [f for f in GeneratorConfig.__dataclass_fields__
               if f not in ("nodes", "month", "seed")]
    configs = []
    for m in range(month_index(data["start"]), month_index(data["end"]) + 1):
        values = {f: _interp(anchor_m, [getattr(c, f) for c in phases], m) for f in numeric}
        values["nodes"] = int(round(_interp(path_m, path_n, m)))
        values["month"] = month_from_index(m)
        values["seed"] = int(np.random.SeedSequence([seed, m]).generate_state(1)[0])
        configs.append(GeneratorConfig(**values))
    return configs, float(data.get("survival", 0.9))


def generate_dynamic(configs: Sequence[GeneratorConfig], survival: float = 0.9,
                     seed: int = 0) -> DynamicNetwork:
    """Generate consecutive months, carrying over a share of enterprise ids.

    Month t reuses ``floor(survival * N_{t-1})`` ids from month t-1 (capped
    at N_t) and mints fresh ids for the rest.
    """
    if not configs:
        raise GenerationError("need at least one month")
    if not 0 <= survival <= 1:
        raise ValidationError("survival must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    snaps = []
    prev: list[str] = []
    counter = 0
    for cfg in configs:
        keep = min(cfg.nodes, int(math.floor(survival * len(prev))))
        carried = sorted(rng.choice(prev, size=keep, replace=False).tolist()) if keep else []
        fresh = [f"E{counter + i:07d}" for i in range(cfg.nodes - keep)]
        counter += len(fresh)
        ids = carried + fresh
        try:
            snap = generate_snapshot(cfg, ids)
        except (GenerationError, ValidationError) as exc:
            raise GenerationError(f"{cfg.month}: {exc}") from exc
        snaps.append(snap)
        prev = ids
    return DynamicNetwork(snaps)


def generate_preset(name: str, seed: int = 0) -> DynamicNetwork:
    """A phase preset as a one-month dynamic, or a full dynamic preset."""
    if name in PHASE_PRESETS:
        return DynamicNetwork([generate_snapshot(load_preset(name, seed))])
    configs, survival = dynamic_configs(name, seed)
    return generate_dynamic(configs, survival, seed)
