"""CSV interchange for nodes, edges, metrics and simulation summaries.

Node and edge files carry floats at full round-trip precision so that an
export/ingest cycle reproduces the snapshot exactly. Derived outputs
(metrics, summaries) use 6 significant digits.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Sequence

from .graph import (DynamicNetwork, Enterprise, GraphError, GuaranteeEdge, NetworkSnapshot,
                    ValidationError, build_snapshot, check_month)

NODE_COLUMNS = ("id", "month", "asset", "liability", "loan", "credit_line", "listed")
EDGE_COLUMNS = ("guarantor_id", "debtor_id", "amount", "month")
SIM_COLUMNS = ("month", "scenario", "p", "mean_final_ratio", "sd", "runs", "mean_net_ratio")


class FormatError(ValueError):
    """Malformed file: missing column, duplicate key."""


class RowError(ValidationError):
    """A single bad row; carries its 1-based line number."""

    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.line = line


def fmt(value) -> str:
    """6-significant-digit rendering for derived outputs; empty for missing."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return f"{value:.6g}"
    return str(value)


def atomic_write(path: Path | str, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    atomic_write(path, buf.getvalue())


def _reader(path):
    fh = open(path, newline="", encoding="utf-8")
    reader = csv.DictReader(fh)
    if reader.fieldnames is None:
        fh.close()
        raise FormatError(f"{path}: missing header row")
    return fh, reader


def _check_columns(path, fieldnames, required):
    for col in required:
        if col not in fieldnames:
            raise FormatError(f"{path}: missing column {col!r}")


def _number(path, line, row, col) -> float:
    try:
        value = float(row[col])
    except (TypeError, ValueError):
        raise RowError(path, line, f"{col} is not numeric: {row[col]!r}") from None
    if math.isnan(value):
        raise RowError(path, line, f"{col} is NaN")
    return value


def parse_nodes_csv(path, errors: list | None = None) -> dict[str, list[Enterprise]]:
    """Enterprises grouped by month.

    With ``errors`` given, bad rows are appended there and skipped instead
    of raising.
    """
    fh, reader = _reader(path)
    out: dict[str, list[Enterprise]] = defaultdict(list)
    seen: set[tuple[str, str]] = set()
    with fh:
        _check_columns(path, reader.fieldnames, NODE_COLUMNS)
        for line, row in enumerate(reader, start=2):
            try:
                month = row["month"]
                try:
                    check_month(month)
                except ValidationError as exc:
                    raise RowError(path, line, str(exc)) from None
                key = (row["id"], month)
                if not row["id"]:
                    raise RowError(path, line, "empty id")
                if key in seen:
                    raise FormatError(f"{path}:{line}: duplicate enterprise {row['id']!r} in {month}")
                listed = row["listed"].strip()
                if listed not in ("0", "1"):
                    raise RowError(path, line, f"listed must be 0 or 1, got {listed!r}")
                ent = Enterprise(
                    id=row["id"],
                    asset=_number(path, line, row, "asset"),
                    liability=_number(path, line, row, "liability"),
                    loan=_number(path, line, row, "loan"),
                    credit_line=_number(path, line, row, "credit_line"),
                    listed=listed == "1",
                )
                try:
                    ent.validate()
                except ValidationError as exc:
                    raise RowError(path, line, str(exc)) from None
            except (RowError, FormatError) as exc:
                if errors is None:
                    raise
                errors.append(str(exc))
                continue
            seen.add(key)
            out[month].append(ent)
    return dict(out)


def parse_edges_csv(path, errors: list | None = None) -> list[GuaranteeEdge]:
    fh, reader = _reader(path)
    out = []
    with fh:
        _check_columns(path, reader.fieldnames, EDGE_COLUMNS)
        for line, row in enumerate(reader, start=2):
            try:
                try:
                    check_month(row["month"])
                except ValidationError as exc:
                    raise RowError(path, line, str(exc)) from None
                edge = GuaranteeEdge(row["guarantor_id"], row["debtor_id"],
                                     _number(path, line, row, "amount"), row["month"])
                try:
                    edge.validate()
                except ValidationError as exc:
                    raise RowError(path, line, str(exc)) from None
            except RowError as exc:
                if errors is None:
                    raise
                errors.append(str(exc))
                continue
            out.append(edge)
    return out


def assemble(nodes: dict[str, list[Enterprise]], edges: Sequence[GuaranteeEdge],
             errors: list | None = None) -> DynamicNetwork:
    """Build one snapshot per month present in the node file."""
    by_month: dict[str, list[GuaranteeEdge]] = defaultdict(list)
    for e in edges:
        by_month[e.month].append(e)
    orphan = sorted(set(by_month) - set(nodes))
    if orphan:
        msg = f"edges reference months without node rows: {', '.join(orphan)}"
        if errors is None:
            raise FormatError(msg)
        errors.append(msg)
    snaps = []
    for month in sorted(nodes):
        try:
            snaps.append(build_snapshot(month, nodes[month], by_month.get(month, ())))
        except GraphError as exc:
            if errors is None:
                raise
            errors.append(f"{month}: {exc}")
    return DynamicNetwork(snaps)


def input_paths(path) -> tuple[Path, Path]:
    path = Path(path)
    if path.is_dir():
        return path / "nodes.csv", path / "edges.csv"
    raise FileNotFoundError(f"{path} is not a directory containing nodes.csv and edges.csv")


def load_dynamic(path, errors: list | None = None) -> DynamicNetwork:
    nodes_path, edges_path = input_paths(path)
    nodes = parse_nodes_csv(nodes_path, errors)
    edges = parse_edges_csv(edges_path, errors)
    return assemble(nodes, edges, errors)


def write_network(dynamic: Iterable[NetworkSnapshot], out_dir) -> None:
    """Export snapshots as nodes.csv / edges.csv with round-trip floats."""
    out_dir = Path(out_dir)
    node_rows, edge_rows = [], []
    for snap in dynamic:
        for e in snap.enterprises():
            node_rows.append((e.id, snap.month, repr(e.asset), repr(e.liability), repr(e.loan),
                              repr(e.credit_line), "1" if e.listed else "0"))
        for e in snap.edges():
            edge_rows.append((e.guarantor_id, e.debtor_id, repr(e.amount), e.month))
    write_csv(out_dir / "nodes.csv", NODE_COLUMNS, node_rows)
    write_csv(out_dir / "edges.csv", EDGE_COLUMNS, edge_rows)


def write_json(path, payload) -> None:
    atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
