"""Command-line entry point.

Exit codes: 0 ok, 1 usage, 2 validation, 3 check failure, 4 I/O.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from tabnav import __version__
from tabnav.agents.agent import ALGORITHMS
from tabnav.agents.state import HyperparamError
from tabnav.cli.checks import run_checks
from tabnav.cli.config_io import (
    apply_overrides, config_from_document, config_to_document,
)
from tabnav.cli.outputs import (
    line_chart_svg, points_csv, records_csv, snapshot_document, to_json, write_field_map, write_text,
)
from tabnav.env.graph import SpecError
from tabnav.env.io import edit_to_dict, spec_from_dict, spec_to_dict
from tabnav.env.presets import CatalogError, load_preset, preset_names
from tabnav.experiments.config import EXPERIMENTS, ConfigError, ExperimentResult, default_config
from tabnav.experiments.protocols import COMMUNITY_MODEL, run_experiment

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_CHECK, EXIT_IO = 0, 1, 2, 3, 4
OUT_ENV = "NEURONAV_OUT"

REPLICATE_ALGORITHMS = {
    "revaluation": ALGORITHMS,
    "transfer-reward": ("TD-Q", "TD-SR", "Dyna-SR", "MBV"),
    "transfer-structure": ("TD-Q", "TD-SR", "Dyna-SR", "MBV"),
    "place-grid": ("TD-SR",),
    "community": ("TD-SR",),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tabnav", description="Tabular RL environments, agents and replication protocols.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command")

    run = sub.add_parser("run", help="run one experiment config")
    run.add_argument("--config", required=True, help="JSON experiment config")
    run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                     help="override a config key (repeatable)")
    run.add_argument("--seed", type=int, help="master seed (overrides the config)")
    run.add_argument("--out", help=f"output directory (default: ${OUT_ENV})")
    run.add_argument("--jobs", type=int, default=1, help="worker processes for independent runs")
    run.add_argument("--snapshot", action="store_true", help="also export the first run's agent tables")

    rep = sub.add_parser("replicate", help="run a replication protocol across its algorithms")
    rep.add_argument("name", choices=EXPERIMENTS)
    rep.add_argument("--check", action="store_true", help="fail (exit 3) unless the expected results hold")
    rep.add_argument("--seed", type=int, default=0, help="master seed")
    rep.add_argument("--out", help=f"output directory (default: ${OUT_ENV})")
    rep.add_argument("--jobs", type=int, default=1, help="worker processes for independent runs")

    preset = sub.add_parser("preset", help="list or export named environments")
    psub = preset.add_subparsers(dest="preset_command")
    psub.add_parser("list", help="list preset names")
    exp = psub.add_parser("export", help="print a preset as an environment definition")
    exp.add_argument("name")

    val = sub.add_parser("validate", help="check an experiment config or environment definition")
    val.add_argument("--config", required=True)
    return p


def _out_dir(arg: str | None) -> Path:
    path = arg or os.environ.get(OUT_ENV)
    if not path:
        raise UsageError(f"no output directory: pass --out or set {OUT_ENV}")
    return Path(path)


def _read_json(path: str):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from None


def write_results(name: str, results: dict[str, ExperimentResult], out: Path,
                  checks=None) -> None:
    """Write records, summary, maps, point sets and charts for ``results``."""
    out.mkdir(parents=True, exist_ok=True)
    first = next(iter(results.values()))
    records = [row for r in results.values() for row in r.records]
    write_text(out / "records.csv", records_csv(records, first.metric_columns))
    doc = {
        "experiment": name,
        "version": __version__,
        "seed": first.config.master_seed,
        "algorithms": {
            label: {"config": config_to_document(r.config), "summary": r.summary}
            for label, r in results.items()
        },
    }
    if checks is not None:
        doc["checks"] = [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in checks]
    write_text(out / "summary.json", to_json(doc) + "\n")
    for label, r in results.items():
        prefix = "" if len(results) == 1 else f"{label}_"
        for map_name, grid in r.field_maps.items():
            write_field_map(grid, out / "maps" / f"{prefix}{map_name}.pgm")
        for pts_name, pts in r.points.items():
            write_text(out / "points" / f"{prefix}{pts_name}.csv", points_csv(pts))
        if r.snapshot is not None:
            write_text(out / f"{prefix}snapshot.json", to_json(snapshot_document(r.snapshot)) + "\n")
    if name.startswith("transfer-"):
        series = {label: r.summary["mean_steps"] for label, r in results.items()}
        svg = line_chart_svg(series, f"{name}: mean steps to goal", "episode", "steps",
                             marker_x=first.config.edit_episode)
        write_text(out / "steps.svg", svg)


def _label(result: ExperimentResult) -> str:
    return COMMUNITY_MODEL if result.config.experiment == "community" else result.config.algorithm


def cmd_run(args) -> int:
    doc = _read_json(args.config)
    doc = apply_overrides(doc, args.set)
    if args.seed is not None:
        doc["master_seed"] = args.seed
    config = config_from_document(doc)
    out = _out_dir(args.out)
    result = run_experiment(config, workers=args.jobs, snapshot=args.snapshot)
    write_results(config.experiment, {_label(result): result}, out)
    print(f"wrote {config.experiment} ({_label(result)}) results to {out}")
    return EXIT_OK


def replicate(name: str, seed: int, workers: int = 1) -> dict[str, ExperimentResult]:
    results = {}
    for alg in REPLICATE_ALGORITHMS[name]:
        result = run_experiment(default_config(name, algorithm=alg, master_seed=seed), workers=workers)
        results[_label(result)] = result
    return results


def cmd_replicate(args) -> int:
    out = _out_dir(args.out)
    results = replicate(args.name, args.seed, args.jobs)
    checks = run_checks(args.name, results) if args.check else None
    write_results(args.name, results, out, checks)
    print(f"wrote {args.name} results to {out}")
    if checks is not None:
        for c in checks:
            print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}")
        if not all(c.passed for c in checks):
            return EXIT_CHECK
    return EXIT_OK


def cmd_preset(args) -> int:
    if args.preset_command == "list":
        for name in preset_names():
            spec, info = load_preset(name)
            print(f"{name}\t{spec.n_states} states\t{info.description}")
        return EXIT_OK
    if args.preset_command == "export":
        spec, info = load_preset(args.name)
        meta = {"name": args.name, "citation": info.citation, "description": info.description}
        if info.community_labels is not None:
            meta["community_labels"] = list(info.community_labels)
        if info.edits:
            meta["edits"] = {k: [edit_to_dict(e) for e in v] for k, v in info.edits.items()}
        if info.notes:
            meta["notes"] = {k: list(v) if isinstance(v, tuple) else v for k, v in info.notes.items()}
        sys.stdout.write(to_json(spec_to_dict(spec, meta)) + "\n")
        return EXIT_OK
    raise UsageError("preset needs a subcommand: list or export <name>")


def cmd_validate(args) -> int:
    doc = _read_json(args.config)
    if isinstance(doc, dict) and "type" in doc:
        spec = spec_from_dict(doc)
        print(f"ok: {doc['type']} environment with {spec.n_states} states")
        return EXIT_OK
    config = config_from_document(doc)
    print(f"ok: {config.experiment} config for {config.algorithm}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required")
        handler = {"run": cmd_run, "replicate": cmd_replicate, "preset": cmd_preset,
                   "validate": cmd_validate}[args.command]
        return handler(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except (ConfigError, SpecError, HyperparamError, CatalogError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
