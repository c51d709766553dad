"""Command-line front end: sample runs, build LONs, compute metrics,
compare encodings, and export annotated graphs.

Exit codes: 0 ok, 2 bad configuration or flags, 3 evaluation backend
failure, 4 input file schema mismatch.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .core import canonical_json_bytes, fnv1a_64
from .encodings import Encoding
from .errors import ConfigError, EvalBackendFailure, LonscapeError, SchemaMismatchError
from .evaluate import EvaluatorConfig, EvaluatorKind, make_evaluator
from .exports import export_csv, export_dot, export_graphml
from .lon import (
    Lon,
    build_lon,
    classify_quartiles,
    fitness_deltas,
    lon_summary,
    read_lon,
    write_lon,
)
from .sampler import IlsConfig, RunLog, ils_run
from .stats import compare_encodings

CONFIG_SCHEMA = 1
MANIFEST_SCHEMA = 1


@dataclass(frozen=True)
class ExperimentConfig:
    ils: IlsConfig
    evaluator: EvaluatorConfig
    out: str = "out"

    def to_json(self) -> dict:
        obj = {"schema": CONFIG_SCHEMA, "out": self.out}
        obj.update(self.ils.to_json())
        obj["evaluator"] = self.evaluator.to_json()
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        if obj.get("schema") != CONFIG_SCHEMA:
            raise ConfigError(f"config schema must be {CONFIG_SCHEMA}, got {obj.get('schema')!r}")
        if "encoding" not in obj:
            raise ConfigError("config needs an encoding")
        try:
            ils = IlsConfig.from_json(obj)
            evaluator = EvaluatorConfig.from_json(obj.get("evaluator", {}))
        except (ValueError, KeyError) as e:
            raise ConfigError(f"invalid config: {e}") from e
        return cls(ils=ils, evaluator=evaluator, out=obj.get("out", "out"))

    def digest(self) -> str:
        """Hash of everything that shapes the results; the output path is
        excluded so moving an experiment does not change its identity."""
        obj = {k: v for k, v in self.to_json().items() if k != "out"}
        return f"{fnv1a_64(canonical_json_bytes(obj)):016x}"


def load_experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    obj: dict = {"schema": CONFIG_SCHEMA}
    if args.config:
        try:
            obj = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError as e:
            raise ConfigError(f"config file not found: {args.config}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file is not JSON: {e}") from e
    if args.encoding:
        obj["encoding"] = args.encoding
    if args.runs is not None:
        obj["runs"] = args.runs
    if args.seed is not None:
        obj["base_seed"] = args.seed
    if args.out:
        obj["out"] = args.out
    evaluator = obj.setdefault("evaluator", {})
    if args.evaluator:
        evaluator["kind"] = args.evaluator
    if args.external_cmd:
        evaluator["external_command"] = args.external_cmd
        evaluator.setdefault("kind", "external")
    if "encoding" not in obj:
        raise ConfigError("an encoding is required (flag --encoding or config file)")
    return ExperimentConfig.from_json(obj)


def _sample_one(payload: tuple[int, dict]) -> tuple[int, list[str]]:
    run_id, obj = payload
    cfg = ExperimentConfig.from_json(obj)
    with make_evaluator(cfg.evaluator) as evaluate_tree:
        log = ils_run(run_id, cfg.ils, evaluate_tree)
    return run_id, log.to_json_lines()


def cmd_sample(args: argparse.Namespace) -> int:
    cfg = load_experiment_config(args)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = args.jobs or os.cpu_count() or 1
    payloads = [(run_id, cfg.to_json()) for run_id in range(cfg.ils.runs)]
    if jobs == 1:
        results = [_sample_one(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sample_one, payloads))
    files = []
    for run_id, lines in sorted(results):
        name = f"run_{run_id:03d}.jsonl"
        (out_dir / name).write_text("\n".join(lines) + "\n", encoding="utf-8")
        files.append(name)
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "kind": "manifest",
        "config": cfg.to_json(),
        "config_digest": cfg.digest(),
        "files": files,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, separators=(",", ":")) + "\n", encoding="utf-8"
    )
    print(f"wrote {len(files)} run logs to {out_dir}")
    return 0


def read_log_dir(log_dir: Path) -> tuple[list[RunLog], str]:
    manifest_path = log_dir / "manifest.json"
    if not manifest_path.exists():
        raise SchemaMismatchError(f"no manifest.json in {log_dir}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if manifest.get("schema") != MANIFEST_SCHEMA or manifest.get("kind") != "manifest":
        raise SchemaMismatchError("manifest has the wrong schema or kind")
    logs = []
    for name in manifest["files"]:
        with open(log_dir / name, encoding="utf-8") as handle:
            logs.append(RunLog.read(handle))
    return logs, manifest.get("config_digest", "")


def cmd_build(args: argparse.Namespace) -> int:
    logs, digest = read_log_dir(Path(args.logs))
    lon = build_lon(logs, config_digest=digest)
    out = Path(args.out) if args.out else Path(args.logs) / "lon.json"
    write_lon(lon, out)
    print(f"wrote LON with {len(lon.nodes)} nodes, {len(lon.edges)} edges to {out}")
    return 0


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_metric_csv(path: Path, rows: list[tuple[str, object]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["metric", "value"])
        for name, value in rows:
            writer.writerow([name, _format_value(value)])


def cmd_metrics(args: argparse.Namespace) -> int:
    lon = read_lon(args.lon)
    out_dir = Path(args.out) if args.out else Path(args.lon).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = lon_summary(lon)
    _write_metric_csv(
        out_dir / "lon_metrics.csv",
        [
            ("nodes", summary.nodes),
            ("edges", summary.edges),
            ("components", summary.components),
            ("path length", summary.path_length),
            ("degree", summary.degree),
            ("infeasible", summary.infeasible_pct),
        ],
    )
    if lon.run_stats is None:
        raise SchemaMismatchError("LON file carries no run statistics")
    stats = lon.run_stats
    _write_metric_csv(
        out_dir / "run_stats.csv",
        [
            ("mutation acceptance", stats.mutation_acceptance_pct),
            ("design acceptance", stats.design_acceptance_pct),
            ("unique designs", stats.unique_designs),
            ("attempted mutations", stats.attempted_mutations),
        ],
    )
    print(f"wrote lon_metrics.csv and run_stats.csv to {out_dir}")
    return 0


def _comparison_label(lon: Lon, used: set[str]) -> str:
    label = lon.encoding.value
    suffix = 2
    while label in used:
        label = f"{lon.encoding.value}#{suffix}"
        suffix += 1
    used.add(label)
    return label


def metric_samples_for(lon: Lon) -> dict[str, list[float]]:
    return {
        "all_fitness": [n.fitness.value for _, n in sorted(lon.nodes.items())],
        "max_fitness": [r.max_fitness for r in lon.run_summaries],
        "evaluations": [float(r.evaluations) for r in lon.run_summaries],
        "median_delta": fitness_deltas(lon),
        "chain_length": [float(r.chain_length) for r in lon.run_summaries],
    }


def cmd_compare(args: argparse.Namespace) -> int:
    if len(args.lons) < 2:
        raise ConfigError("compare needs at least two LON files")
    samples: dict[str, dict[str, list[float]]] = {}
    used: set[str] = set()
    for path in args.lons:
        lon = read_lon(path)
        samples[_comparison_label(lon, used)] = metric_samples_for(lon)
    rows = compare_encodings(samples)
    out = Path(args.out) if args.out else Path("compare.csv")
    with open(out, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["first", "second", "metric", "u", "p", "stars"])
        for row in rows:
            writer.writerow(
                [
                    row.first,
                    row.second,
                    row.metric,
                    repr(row.u_statistic),
                    repr(row.p_value),
                    row.stars.value,
                ]
            )
    print(f"wrote {len(rows)} comparisons to {out}")
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    lons = [read_lon(path) for path in args.lons]
    # Pooled quartiles across everything provided, as in the figures.
    classify_quartiles(lons)
    out_dir = Path(args.out) if args.out else Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)
    used: set[str] = set()
    for lon in lons:
        label = _comparison_label(lon, used)
        if args.format == "graphml":
            export_graphml(lon, out_dir / f"{label}.graphml")
        elif args.format == "dot":
            export_dot(lon, out_dir / f"{label}.dot")
        else:
            export_csv(lon, out_dir / f"{label}_nodes.csv", out_dir / f"{label}_edges.csv")
    print(f"exported {len(lons)} graph(s) as {args.format} to {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lonscape",
        description="Sample and analyse local optima networks of robot design landscapes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sample = sub.add_parser("sample", help="run iterated local search and write run logs")
    sample.add_argument("--config", help="experiment config JSON (flags override it)")
    sample.add_argument("--encoding", choices=[e.value for e in Encoding])
    sample.add_argument("--runs", type=int)
    sample.add_argument("--seed", type=int, help="base seed; run k is seeded with base + k")
    sample.add_argument("--evaluator", choices=[k.value for k in EvaluatorKind])
    sample.add_argument("--external-cmd", help="command line of an external evaluator backend")
    sample.add_argument("--jobs", type=int, help="worker processes (default: CPU count)")
    sample.add_argument("--out", help="output directory for run logs")
    sample.set_defaults(func=cmd_sample)

    build = sub.add_parser("build", help="merge run logs into a LON file")
    build.add_argument("logs", help="directory containing manifest.json and run logs")
    build.add_argument("--out", help="LON output file (default: <logs>/lon.json)")
    build.set_defaults(func=cmd_build)

    metrics = sub.add_parser("metrics", help="write LON and run statistics CSV tables")
    metrics.add_argument("lon", help="LON file")
    metrics.add_argument("--out", help="output directory (default: beside the LON)")
    metrics.set_defaults(func=cmd_metrics)

    compare = sub.add_parser("compare", help="pairwise U tests between LONs")
    compare.add_argument("lons", nargs="+", help="two or more LON files")
    compare.add_argument("--out", help="comparison CSV (default: compare.csv)")
    compare.set_defaults(func=cmd_compare)

    export = sub.add_parser("export", help="export annotated graphs")
    export.add_argument("lons", nargs="+", help="LON files; quartiles pool across all")
    export.add_argument("--format", choices=["graphml", "dot", "csv"], default="graphml")
    export.add_argument("--out", help="output directory")
    export.set_defaults(func=cmd_export)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except EvalBackendFailure as e:
        print(f"backend failure: {e}", file=sys.stderr)
        return 3
    except SchemaMismatchError as e:
        print(f"schema mismatch: {e}", file=sys.stderr)
        return 4
    except LonscapeError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"io error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
