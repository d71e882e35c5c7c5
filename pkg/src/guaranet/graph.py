"""Monthly snapshot data model for directed loan-guarantee networks.

An arc goes from the guarantor to the debtor it guarantees. Snapshots are
stored in compressed sparse row form in both directions so that metric and
simulation kernels can walk either side without rebuilding anything.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np


class GraphError(Exception):
    """Base class for graph construction errors."""


class StructuralError(GraphError):
    """An edge references an enterprise that is not in the snapshot."""


class ValidationError(GraphError):
    """An enterprise or edge violates a domain invariant."""


class ConfigurationError(GraphError):
    """Inconsistent configuration, e.g. overlapping phase windows."""


_MONTH_RE = re.compile(r"^\d{4}-(0[1-9]|1[0-2])$")


def check_month(month: str) -> str:
    if not isinstance(month, str) or not _MONTH_RE.match(month):
        raise ValidationError(f"month must be 'YYYY-MM', got {month!r}")
    return month


def month_index(month: str) -> int:
    """Months since year 0, so consecutive months differ by one."""
    year, mon = check_month(month).split("-")
    return int(year) * 12 + int(mon) - 1


def month_from_index(index: int) -> str:
    return f"{index // 12:04d}-{index % 12 + 1:02d}"


def month_range(start: str, end: str) -> list[str]:
    return [month_from_index(i) for i in range(month_index(start), month_index(end) + 1)]


@dataclass(frozen=True)
class Enterprise:
    """A client enterprise. Currency fields are in ten-thousand RMB."""

    id: str
    asset: float
    liability: float = 0.0
    loan: float = 0.0
    credit_line: float = 0.0
    listed: bool = False
    defaulted: bool = False

    def validate(self) -> None:
        if not (self.asset > 0):
            raise ValidationError(f"enterprise {self.id!r}: asset must be positive, got {self.asset}")
        for name in ("liability", "loan", "credit_line"):
            value = getattr(self, name)
            if not (value >= 0):
                raise ValidationError(f"enterprise {self.id!r}: {name} must be >= 0, got {value}")

    @property
    def leverage(self) -> float:
        return self.liability / self.asset


@dataclass(frozen=True)
class GuaranteeEdge:
    guarantor_id: str
    debtor_id: str
    amount: float
    month: str

    def validate(self) -> None:
        if self.guarantor_id == self.debtor_id:
            raise ValidationError(f"self-guarantee on {self.guarantor_id!r} in {self.month}")
        if not (self.amount >= 0):
            raise ValidationError(
                f"edge {self.guarantor_id!r}->{self.debtor_id!r}: amount must be >= 0, got {self.amount}"
            )


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


def _csr(src: np.ndarray, dst: np.ndarray, amount: np.ndarray, n: int):
    order = np.lexsort((dst, src))
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return indptr, dst[order].astype(np.int64), amount[order].astype(np.float64)


class NetworkSnapshot:
    """Immutable directed guarantee network for one month.

    Nodes are held in sorted-id order; position in that order is the node
    index used by every array attribute. ``out_*`` arrays map a guarantor to
    its debtors, ``in_*`` arrays map a debtor to its guarantors.
    """

    __slots__ = (
        "month", "ids", "_index", "asset", "liability", "loan", "credit_line",
        "listed", "defaulted", "out_indptr", "out_indices", "out_amounts",
        "in_indptr", "in_indices", "in_amounts", "_src", "_dst", "_amt",
    )

    def __init__(self, month, ids, asset, liability, loan, credit_line, listed,
                 defaulted, src, dst, amount):
        # Trusted constructor; use build_snapshot() for validated input.
        n = len(ids)
        object.__setattr__(self, "month", month)
        object.__setattr__(self, "ids", tuple(ids))
        object.__setattr__(self, "_index", {nid: i for i, nid in enumerate(self.ids)})
        for name, arr, dtype in (
            ("asset", asset, np.float64), ("liability", liability, np.float64),
            ("loan", loan, np.float64), ("credit_line", credit_line, np.float64),
            ("listed", listed, np.bool_), ("defaulted", defaulted, np.bool_),
        ):
            object.__setattr__(self, name, _readonly(np.asarray(arr, dtype=dtype)))
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        amount = np.asarray(amount, dtype=np.float64)
        order = np.lexsort((dst, src))
        object.__setattr__(self, "_src", _readonly(src[order]))
        object.__setattr__(self, "_dst", _readonly(dst[order]))
        object.__setattr__(self, "_amt", _readonly(amount[order]))
        for prefix, a, b in (("out", src, dst), ("in", dst, src)):
            indptr, indices, amounts = _csr(a, b, amount, n)
            object.__setattr__(self, f"{prefix}_indptr", _readonly(indptr))
            object.__setattr__(self, f"{prefix}_indices", _readonly(indices))
            object.__setattr__(self, f"{prefix}_amounts", _readonly(amounts))

    def __setattr__(self, name, value):
        raise AttributeError("NetworkSnapshot is immutable")

    @property
    def N(self) -> int:
        return len(self.ids)

    @property
    def E(self) -> int:
        return int(self._src.shape[0])

    def __repr__(self) -> str:
        return f"NetworkSnapshot(month={self.month!r}, N={self.N}, E={self.E})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, NetworkSnapshot):
            return NotImplemented
        if self.month != other.month or self.ids != other.ids:
            return False
        names = ("asset", "liability", "loan", "credit_line", "listed", "defaulted",
                 "_src", "_dst", "_amt")
        return all(np.array_equal(getattr(self, a), getattr(other, a)) for a in names)

    __hash__ = None

    def index(self, node_id: str) -> int:
        try:
            return self._index[node_id]
        except KeyError:
            raise KeyError(f"unknown enterprise id {node_id!r} in {self.month}") from None

    def __contains__(self, node_id: str) -> bool:
        return node_id in self._index

    def out_degree(self) -> np.ndarray:
        return np.diff(self.out_indptr)

    def in_degree(self) -> np.ndarray:
        return np.diff(self.in_indptr)

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(guarantor index, debtor index, amount), sorted by (guarantor, debtor)."""
        return self._src, self._dst, self._amt

    def enterprise(self, node_id: str) -> Enterprise:
        i = self.index(node_id)
        return Enterprise(
            id=node_id, asset=float(self.asset[i]), liability=float(self.liability[i]),
            loan=float(self.loan[i]), credit_line=float(self.credit_line[i]),
            listed=bool(self.listed[i]), defaulted=bool(self.defaulted[i]),
        )

    def enterprises(self) -> Iterator[Enterprise]:
        for nid in self.ids:
            yield self.enterprise(nid)

    def edges(self) -> Iterator[GuaranteeEdge]:
        ids = self.ids
        for s, d, a in zip(self._src.tolist(), self._dst.tolist(), self._amt.tolist()):
            yield GuaranteeEdge(ids[s], ids[d], a, self.month)

    def with_defaults(self, defaulted) -> "NetworkSnapshot":
        """Copy of this snapshot with a different initial default state."""
        return NetworkSnapshot(
            self.month, self.ids, self.asset, self.liability, self.loan,
            self.credit_line, self.listed, np.asarray(defaulted, dtype=bool),
            self._src, self._dst, self._amt,
        )


def build_snapshot(month: str, enterprises: Iterable[Enterprise],
                   edges: Iterable[GuaranteeEdge]) -> NetworkSnapshot:
    """Validate and assemble one month's network.

    Parallel edges for the same (guarantor, debtor) pair are merged by
    summing their amounts. Enterprises without edges are kept.
    """
    check_month(month)
    ents = sorted(enterprises, key=lambda e: e.id)
    for a, b in zip(ents, ents[1:]):
        if a.id == b.id:
            raise ValidationError(f"duplicate enterprise id {a.id!r} in {month}")
    for e in ents:
        e.validate()
    index = {e.id: i for i, e in enumerate(ents)}

    merged: dict[tuple[int, int], float] = {}
    for edge in edges:
        edge.validate()
        try:
            key = (index[edge.guarantor_id], index[edge.debtor_id])
        except KeyError:
            raise StructuralError(
                f"edge {edge.guarantor_id!r}->{edge.debtor_id!r} in {month} references an unknown enterprise"
            ) from None
        merged[key] = merged.get(key, 0.0) + float(edge.amount)

    if merged:
        keys = np.array(list(merged.keys()), dtype=np.int64)
        src, dst = keys[:, 0], keys[:, 1]
        amt = np.fromiter(merged.values(), dtype=np.float64, count=len(merged))
    else:
        src = dst = np.zeros(0, dtype=np.int64)
        amt = np.zeros(0)

    return NetworkSnapshot(
        month, [e.id for e in ents],
        [e.asset for e in ents], [e.liability for e in ents], [e.loan for e in ents],
        [e.credit_line for e in ents], [e.listed for e in ents], [e.defaulted for e in ents],
        src, dst, amt,
    )


def neighbors(snapshot: NetworkSnapshot, node_id: str, direction: str = "out") -> set[tuple[str, float]]:
    """Debtors guaranteed by ``node_id`` (out) or its guarantors (in), with amounts."""
    i = snapshot.index(node_id)
    if direction == "out":
        indptr, indices, amounts = snapshot.out_indptr, snapshot.out_indices, snapshot.out_amounts
    elif direction == "in":
        indptr, indices, amounts = snapshot.in_indptr, snapshot.in_indices, snapshot.in_amounts
    else:
        raise ValueError(f"direction must be 'out' or 'in', got {direction!r}")
    lo, hi = indptr[i], indptr[i + 1]
    return {(snapshot.ids[j], float(a)) for j, a in zip(indices[lo:hi], amounts[lo:hi])}


class DynamicNetwork(Sequence):
    """Snapshots in strictly increasing month order."""

    def __init__(self, snapshots: Iterable[NetworkSnapshot] = ()):
        self._snapshots = tuple(snapshots)
        months = [month_index(s.month) for s in self._snapshots]
        if any(b <= a for a, b in zip(months, months[1:])):
            raise ValidationError("snapshot months must be strictly increasing")

    def __getitem__(self, i):
        return self._snapshots[i]

    def __len__(self) -> int:
        return len(self._snapshots)

    @property
    def months(self) -> list[str]:
        return [s.month for s in self._snapshots]

    def __repr__(self) -> str:
        if not self._snapshots:
            return "DynamicNetwork([])"
        return f"DynamicNetwork({self.months[0]}..{self.months[-1]}, {len(self)} months)"


@dataclass(frozen=True)
class PhaseWindow:
    label: str
    start: str
    end: str

    def __post_init__(self):
        if month_index(self.start) > month_index(self.end):
            raise ConfigurationError(f"window {self.label}: start {self.start} after end {self.end}")

    def contains(self, month: str) -> bool:
        return month_index(self.start) <= month_index(month) <= month_index(self.end)


CANONICAL_PHASES = (
    PhaseWindow("phase1", "2007-01", "2008-08"),
    PhaseWindow("phase2", "2008-09", "2008-11"),
    PhaseWindow("phase3", "2008-12", "2010-12"),
    PhaseWindow("phase4", "2011-01", "2012-03"),
)


@dataclass
class PhasePartition:
    windows: dict[str, list[NetworkSnapshot]]
    unassigned: list[NetworkSnapshot]

    def sizes(self) -> dict[str, int]:
        return {label: len(snaps) for label, snaps in self.windows.items()}


def phase_partition(dynamic: Iterable[NetworkSnapshot],
                    windows: Sequence[PhaseWindow] = CANONICAL_PHASES) -> PhasePartition:
    """Assign each snapshot to the window containing its month."""
    spans = sorted((month_index(w.start), month_index(w.end), w.label) for w in windows)
    for (s0, e0, a), (s1, e1, b) in zip(spans, spans[1:]):
        if s1 <= e0:
            raise ConfigurationError(f"phase windows {a} and {b} overlap")
    labels = [w.label for w in windows]
    if len(set(labels)) != len(labels):
        raise ConfigurationError("phase window labels must be unique")

    out: dict[str, list[NetworkSnapshot]] = {w.label: [] for w in windows}
    unassigned = []
    for snap in dynamic:
        for w in windows:
            if w.contains(snap.month):
                out[w.label].append(snap)
                break
        else:
            unassigned.append(snap)
    return PhasePartition(out, unassigned)
