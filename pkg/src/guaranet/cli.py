"""Command-line entry point: ``guaranet <subcommand> ...``.

Exit status is 0 on success, 1 when input fails validation and 2 on usage
errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from . import csvio
from .contagion import DEFAULT_P, SCENARIOS, ContagionParams, scenario_sweep
from .generator import (DYNAMIC_PRESETS, PHASE_PRESETS, GenerationError, GeneratorConfig,
                        generate_preset, generate_snapshot)
from .graph import CANONICAL_PHASES, DynamicNetwork, GraphError, PhaseWindow
from .metrics import MetricOptions, MetricsReport, metrics_timeseries

log = logging.getLogger("guaranet")

PRESETS = PHASE_PRESETS + DYNAMIC_PRESETS


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    input: str | None = None
    preset: str | None = None
    seed: int = 0
    out: str | None = None
    windows: list[PhaseWindow] = field(default_factory=lambda: list(CANONICAL_PHASES))
    metrics: MetricOptions = field(default_factory=MetricOptions)
    contagion: ContagionParams = field(default_factory=ContagionParams)
    scenarios: tuple[str, ...] = SCENARIOS
    ps: tuple[float, ...] = DEFAULT_P
    generator: GeneratorConfig | None = None

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        cfg = cls()
        for key in ("input", "preset", "seed", "out"):
            if key in data:
                setattr(cfg, key, data[key])
        if "windows" in data:
            cfg.windows = [PhaseWindow(w["label"], w["start"], w["end"]) for w in data["windows"]]
        if "metrics" in data:
            cfg.metrics = _dataclass_update(cfg.metrics, data["metrics"])
        if "contagion" in data:
            cfg.contagion = _dataclass_update(cfg.contagion, data["contagion"])
        if "scenarios" in data:
            cfg.scenarios = tuple(data["scenarios"])
        if "p" in data:
            cfg.ps = tuple(float(p) for p in data["p"])
        if "generator" in data:
            cfg.generator = GeneratorConfig.from_dict(data["generator"])
        return cfg

    def check_source(self) -> None:
        if (self.input is None) == (self.preset is None):
            raise UsageError("exactly one of --in or --preset is required")


def _dataclass_update(obj, data: dict):
    known = {f.name for f in fields(obj)}
    unknown = set(data) - known
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return replace(obj, **data)


def _load_source(cfg: RunConfig) -> DynamicNetwork:
    cfg.check_source()
    if cfg.preset is not None:
        if cfg.preset not in PRESETS:
            raise UsageError(f"unknown preset {cfg.preset!r}; choose from {', '.join(PRESETS)}")
        return generate_preset(cfg.preset, cfg.seed)
    return csvio.load_dynamic(cfg.input)


def _require_out(cfg: RunConfig) -> Path:
    if not cfg.out:
        raise UsageError("--out is required")
    return Path(cfg.out)


def cmd_generate(cfg: RunConfig, args) -> int:
    out = _require_out(cfg)
    if cfg.generator is not None and cfg.preset is None:
        dynamic = DynamicNetwork([generate_snapshot(replace(cfg.generator, seed=cfg.seed))])
    else:
        if cfg.preset is None:
            raise UsageError("generate needs --preset or a config with a 'generator' section")
        cfg.input = None
        dynamic = _load_source(cfg)
    csvio.write_network(dynamic, out)
    log.info("wrote %d month(s) to %s", len(dynamic), out)
    return 0


def _validate(path) -> tuple[DynamicNetwork, list[str]]:
    errors: list[str] = []
    dynamic = csvio.load_dynamic(path, errors)
    return dynamic, errors


def cmd_ingest(cfg: RunConfig, args) -> int:
    if cfg.input is None:
        raise UsageError("ingest needs --in")
    out = _require_out(cfg)
    dynamic, errors = _validate(cfg.input)
    if errors:
        for e in errors:
            print(e, file=sys.stderr)
        return 1
    csvio.write_network(dynamic, out)
    csvio.write_json(out / "manifest.json", {
        "months": [{"month": s.month, "nodes": s.N, "edges": s.E} for s in dynamic],
    })
    return 0


def cmd_validate(cfg: RunConfig, args) -> int:
    if cfg.input is None:
        raise UsageError("validate needs --in")
    dynamic, errors = _validate(cfg.input)
    for e in errors:
        print(e)
    print(f"{len(dynamic)} month(s) valid, {len(errors)} problem(s)")
    return 1 if errors else 0


def metric_rows(reports: list[MetricsReport]):
    names = MetricsReport.scalar_names()
    header = ["month"] + names
    rows = [[r.month] + [csvio.fmt(getattr(r, n)) for n in names] for r in reports]
    return header, rows


def phase_rows(summary: dict):
    labels = list(summary)
    header = ["metric"] + [f"{lab}_{stat}" for lab in labels for stat in ("mean", "sd")]
    names = list(next(iter(summary.values()))) if summary else []
    rows = []
    for name in names:
        row = [name]
        for lab in labels:
            mean, sd = summary[lab][name]
            row += [csvio.fmt(mean), csvio.fmt(sd)]
        rows.append(row)
    return header, rows


def cmd_metrics(cfg: RunConfig, args) -> int:
    out = _require_out(cfg)
    dynamic = _load_source(cfg)
    if len(dynamic) == 0:
        print("no snapshots to analyse", file=sys.stderr)
        return 1
    ts = metrics_timeseries(dynamic, cfg.windows, cfg.metrics)
    header, rows = metric_rows(ts.reports)
    csvio.write_csv(out / "metrics.csv", header, rows)
    header, rows = phase_rows(ts.summary)
    csvio.write_csv(out / "phase_summary.csv", header, rows)
    if ts.errors:
        csvio.write_csv(out / "metric_errors.csv", ["month", "error"], sorted(ts.errors.items()))
    return 0


def cmd_simulate(cfg: RunConfig, args) -> int:
    out = _require_out(cfg)
    dynamic = _load_source(cfg)
    params = replace(cfg.contagion, seed=cfg.seed)
    for s in cfg.scenarios:
        if s not in SCENARIOS:
            raise UsageError(f"unknown scenario {s!r}")
    params.validate()
    result = scenario_sweep(dynamic, cfg.scenarios, cfg.ps, params)
    rows = [(r.month, r.scenario, csvio.fmt(r.p), csvio.fmt(r.mean_final_ratio), csvio.fmt(r.sd),
             r.runs, csvio.fmt(r.mean_net_ratio)) for r in result.rows]
    csvio.write_csv(out / "simulation_summary.csv", csvio.SIM_COLUMNS, rows)
    payload = {
        "params": {"k": params.k, "delta": params.delta, "runs": params.runs, "seed": params.seed,
                   "mode": params.mode, "delta_mode": params.delta_mode,
                   "importance_runs_per_node": params.importance_runs_per_node},
        "summaries": [dict(zip(csvio.SIM_COLUMNS, row)) for row in rows],
        "errors": [{"month": m, "scenario": s, "p": csvio.fmt(p), "error": e}
                   for (m, s, p), e in sorted(result.errors.items())],
    }
    csvio.write_json(out / "simulation_summary.json", payload)
    return 0


def cmd_report(cfg: RunConfig, args) -> int:
    out = _require_out(cfg)
    if not args.metrics or not args.simulation:
        raise UsageError("report needs --metrics and --simulation directories")
    mdir, sdir = Path(args.metrics), Path(args.simulation)
    for src in (mdir / "metrics.csv", mdir / "phase_summary.csv", sdir / "simulation_summary.csv"):
        if not src.exists():
            print(f"missing {src}", file=sys.stderr)
            return 1
    out.mkdir(parents=True, exist_ok=True)
    for src in (mdir / "metrics.csv", mdir / "phase_summary.csv", sdir / "simulation_summary.csv"):
        csvio.atomic_write(out / src.name, src.read_text(encoding="utf-8"))

    # One column per scenario x p, one row per month.
    with open(sdir / "simulation_summary.csv", newline="", encoding="utf-8") as fh:
        sim = list(csv.DictReader(fh))
    curves = sorted({(r["scenario"], r["p"]) for r in sim}, key=lambda c: (c[0], float(c[1])))
    table: dict[str, dict] = {}
    for r in sim:
        table.setdefault(r["month"], {})[(r["scenario"], r["p"])] = r["mean_final_ratio"]
    header = ["month"] + [f"{s}_p{p}" for s, p in curves]
    rows = [[m] + [table[m].get(c, "") for c in curves] for m in sorted(table)]
    csvio.write_csv(out / "contagion_timeseries.csv", header, rows)
    return 0


COMMANDS = {
    "ingest": cmd_ingest,
    "validate": cmd_validate,
    "metrics": cmd_metrics,
    "generate": cmd_generate,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="guaranet", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="{" + ",".join(COMMANDS) + "}")
    sub.required = True

    def common(p, source=True):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        if source:
            p.add_argument("--in", dest="input", help="directory with nodes.csv and edges.csv")
            p.add_argument("--preset", choices=PRESETS)

    common(sub.add_parser("ingest", help="validate CSV input and write a normalised store"))
    common(sub.add_parser("validate", help="report invariant violations in CSV input"))
    common(sub.add_parser("generate", help="write a synthetic network as CSV"))

    p = sub.add_parser("metrics", help="per-month metrics and phase summary")
    common(p)
    p.add_argument("--xmin-mode", choices=("fixed", "scan"))
    p.add_argument("--x-min", type=int)
    p.add_argument("--path-exact-threshold", type=int)
    p.add_argument("--path-samples", type=int)
    p.add_argument("--hub-percentile", type=float)
    p.add_argument("--no-windows", action="store_true", help="skip the phase summary windows")

    p = sub.add_parser("simulate", help="Monte Carlo scenario sweep")
    common(p)
    p.add_argument("--scenarios", nargs="+")
    p.add_argument("--p", nargs="+", type=float)
    p.add_argument("--runs", type=int)
    p.add_argument("--k", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--importance-runs", type=int)
    p.add_argument("--mode", choices=("triggered", "literal"))
    p.add_argument("--delta-mode", choices=("fixed", "mean_leverage"))

    p = sub.add_parser("report", help="merge metrics and simulation outputs")
    common(p, source=False)
    p.add_argument("--metrics", help="output directory of the metrics command")
    p.add_argument("--simulation", help="output directory of the simulate command")
    return parser


def _resolve(args) -> RunConfig:
    cfg = RunConfig.from_json(args.config) if getattr(args, "config", None) else RunConfig()
    for key in ("input", "preset", "seed", "out"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    m = {}
    for arg, key in (("xmin_mode", "x_min_mode"), ("x_min", "x_min"),
                     ("path_exact_threshold", "path_exact_threshold"),
                     ("path_samples", "path_sample_pairs"), ("hub_percentile", "hub_percentile")):
        if getattr(args, arg, None) is not None:
            m[key] = getattr(args, arg)
    if m:
        cfg.metrics = replace(cfg.metrics, **m)
    if getattr(args, "no_windows", False):
        cfg.windows = []
    c = {}
    for arg, key in (("runs", "runs"), ("k", "k"), ("delta", "delta"),
                     ("importance_runs", "importance_runs_per_node"), ("mode", "mode"),
                     ("delta_mode", "delta_mode")):
        if getattr(args, arg, None) is not None:
            c[key] = getattr(args, arg)
    if c:
        cfg.contagion = replace(cfg.contagion, **c)
    if getattr(args, "scenarios", None):
        cfg.scenarios = tuple(args.scenarios)
    if getattr(args, "p", None):
        cfg.ps = tuple(args.p)
    cfg.metrics = replace(cfg.metrics, rng_seed=cfg.seed)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _resolve(args)
        return COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"guaranet {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (GraphError, csvio.FormatError, GenerationError, FileNotFoundError) as exc:
        print(f"guaranet {args.command}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"guaranet {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
