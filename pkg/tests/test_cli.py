"""End-to-end CLI: sample, build, metrics, compare, export, exit codes."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import networkx as nx

from lonscape.cli import ExperimentConfig, main
from lonscape.encodings import Encoding
from lonscape.evaluate import EvaluatorConfig
from lonscape.lon import read_lon
from lonscape.sampler import IlsConfig

from test_lon import check_dot_syntax


def small_config(encoding="direct", out="out", runs=2, base_seed=0) -> dict:
    return {
        "schema": 1,
        "encoding": encoding,
        "runs": runs,
        "base_seed": base_seed,
        "ls_stall_budget": 8,
        "perturbation_strength": 3,
        "run_stall_limit": 3,
        "run_iteration_limit": 4,
        "evaluator": {"kind": "surrogate"},
        "out": out,
    }


def write_config(tmp_path: Path, name="config.json", **kwargs) -> Path:
    path = tmp_path / name
    path.write_text(json.dumps(small_config(**kwargs)), encoding="utf-8")
    return path


def sample_build(tmp_path: Path, encoding="direct", base_seed=0, runs=2) -> Path:
    out = tmp_path / f"{encoding}_{base_seed}"
    cfg = write_config(
        tmp_path, name=f"cfg_{encoding}_{base_seed}.json",
        encoding=encoding, out=str(out), runs=runs, base_seed=base_seed,
    )
    assert main(["sample", "--config", str(cfg), "--jobs", "1"]) == 0
    assert main(["build", str(out)]) == 0
    return out / "lon.json"


class TestExperimentConfig:
    def test_lossless_round_trip(self):
        cfg = ExperimentConfig(
            ils=IlsConfig(encoding=Encoding.LSYSTEM, base_seed=5, runs=7),
            evaluator=EvaluatorConfig(),
            out="somewhere",
        )
        again = ExperimentConfig.from_json(cfg.to_json())
        assert again == cfg
        assert again.to_json() == cfg.to_json()

    def test_digest_ignores_out_dir(self):
        a = ExperimentConfig(IlsConfig(encoding=Encoding.DIRECT), EvaluatorConfig(), out="x")
        b = ExperimentConfig(IlsConfig(encoding=Encoding.DIRECT), EvaluatorConfig(), out="y")
        assert a.digest() == b.digest()

    def test_digest_tracks_seed(self):
        a = ExperimentConfig(IlsConfig(encoding=Encoding.DIRECT, base_seed=0), EvaluatorConfig())
        b = ExperimentConfig(IlsConfig(encoding=Encoding.DIRECT, base_seed=1), EvaluatorConfig())
        assert a.digest() != b.digest()

    def test_explicit_rates_round_trip(self):
        from lonscape.encodings import MutationRates

        cfg = ExperimentConfig(
            ils=IlsConfig(encoding=Encoding.CPPN, rates=MutationRates(0.1, 0.3, 0.5)),
            evaluator=EvaluatorConfig(),
        )
        again = ExperimentConfig.from_json(cfg.to_json())
        assert again == cfg


class TestSample:
    def test_writes_logs_and_manifest(self, tmp_path):
        out = tmp_path / "logs"
        cfg = write_config(tmp_path, out=str(out))
        assert main(["sample", "--config", str(cfg), "--jobs", "1"]) == 0
        assert (out / "run_000.jsonl").exists()
        assert (out / "run_001.jsonl").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["kind"] == "manifest"
        assert manifest["files"] == ["run_000.jsonl", "run_001.jsonl"]
        assert len(manifest["config_digest"]) == 16

    def test_single_run(self, tmp_path):
        out = tmp_path / "one"
        cfg = write_config(tmp_path, out=str(out), runs=1)
        assert main(["sample", "--config", str(cfg), "--jobs", "1"]) == 0
        assert json.loads((out / "manifest.json").read_text())["files"] == ["run_000.jsonl"]

    def test_deterministic_logs(self, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        cfg_a = write_config(tmp_path, name="a.json", out=str(out_a))
        cfg_b = write_config(tmp_path, name="b.json", out=str(out_b))
        assert main(["sample", "--config", str(cfg_a), "--jobs", "1"]) == 0
        assert main(["sample", "--config", str(cfg_b), "--jobs", "2"]) == 0
        for name in ("run_000.jsonl", "run_001.jsonl"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_flags_override_config(self, tmp_path):
        out = tmp_path / "flagged"
        cfg = write_config(tmp_path, encoding="direct", out=str(tmp_path / "ignored"))
        assert (
            main(
                [
                    "sample",
                    "--config",
                    str(cfg),
                    "--encoding",
                    "lsystem",
                    "--runs",
                    "1",
                    "--out",
                    str(out),
                    "--jobs",
                    "1",
                ]
            )
            == 0
        )
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["encoding"] == "lsystem"
        assert manifest["config"]["runs"] == 1

    def test_missing_encoding_is_config_error(self, tmp_path):
        assert main(["sample", "--runs", "1", "--out", str(tmp_path / "x")]) == 2

    def test_bad_config_json(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json", encoding="utf-8")
        assert main(["sample", "--config", str(bad)]) == 2

    def test_external_backend_failure_exit_code(self, tmp_path):
        out = tmp_path / "ext"
        cfg_obj = small_config(out=str(out), runs=1)
        cfg_obj["evaluator"] = {
            "kind": "external",
            "external_command": f"{sys.executable} -c 'print(1)'",
            "timeout": 5.0,
        }
        cfg = tmp_path / "ext.json"
        cfg.write_text(json.dumps(cfg_obj), encoding="utf-8")
        assert main(["sample", "--config", str(cfg), "--jobs", "1"]) == 3


class TestBuildAndMetrics:
    def test_build_produces_lon(self, tmp_path):
        lon_path = sample_build(tmp_path)
        lon = read_lon(lon_path)
        assert len(lon.run_summaries) == 2
        assert len(lon.nodes) >= 1
        assert lon.config_digest

    def test_build_without_manifest(self, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        assert main(["build", str(empty)]) == 4

    def test_metrics_row_sets(self, tmp_path):
        lon_path = sample_build(tmp_path)
        out = tmp_path / "metrics"
        assert main(["metrics", str(lon_path), "--out", str(out)]) == 0
        lon_rows = (out / "lon_metrics.csv").read_text().strip().splitlines()
        assert [r.split(",")[0] for r in lon_rows] == [
            "metric",
            "nodes",
            "edges",
            "components",
            "path length",
            "degree",
            "infeasible",
        ]
        run_rows = (out / "run_stats.csv").read_text().strip().splitlines()
        assert [r.split(",")[0] for r in run_rows] == [
            "metric",
            "mutation acceptance",
            "design acceptance",
            "unique designs",
            "attempted mutations",
        ]

    def test_metrics_on_wrong_file(self, tmp_path):
        not_lon = tmp_path / "x.json"
        not_lon.write_text('{"schema": 1, "kind": "other"}', encoding="utf-8")
        assert main(["metrics", str(not_lon)]) == 4

    def test_pipeline_byte_identical(self, tmp_path):
        outputs = []
        for attempt in ("first", "second"):
            base = tmp_path / attempt
            out = base / "logs"
            cfg = write_config(base.parent, name=f"{attempt}.json", out=str(out))
            assert main(["sample", "--config", str(cfg), "--jobs", "1"]) == 0
            assert main(["build", str(out)]) == 0
            metrics_dir = base / "metrics"
            assert main(["metrics", str(out / "lon.json"), "--out", str(metrics_dir)]) == 0
            outputs.append(
                (
                    (metrics_dir / "lon_metrics.csv").read_bytes(),
                    (metrics_dir / "run_stats.csv").read_bytes(),
                    (out / "lon.json").read_bytes(),
                )
            )
        assert outputs[0] == outputs[1]


class TestCompare:
    def test_pairwise_table(self, tmp_path):
        lon_a = sample_build(tmp_path, encoding="direct")
        lon_b = sample_build(tmp_path, encoding="lsystem")
        out = tmp_path / "compare.csv"
        assert main(["compare", str(lon_a), str(lon_b), "--out", str(out)]) == 0
        rows = out.read_text().strip().splitlines()
        assert rows[0] == "first,second,metric,u,p,stars"
        metrics = {r.split(",")[2] for r in rows[1:]}
        assert metrics == {
            "all_fitness",
            "max_fitness",
            "evaluations",
            "median_delta",
            "chain_length",
        }

    def test_needs_two_files(self, tmp_path):
        lon_a = sample_build(tmp_path, encoding="direct", base_seed=3)
        assert main(["compare", str(lon_a)]) == 2

    def test_same_encoding_twice_gets_distinct_labels(self, tmp_path):
        lon_a = sample_build(tmp_path, encoding="direct", base_seed=0)
        lon_b = sample_build(tmp_path, encoding="direct", base_seed=50)
        out = tmp_path / "cmp.csv"
        assert main(["compare", str(lon_a), str(lon_b), "--out", str(out)]) == 0
        rows = out.read_text().strip().splitlines()[1:]
        assert all(row.split(",")[0] != row.split(",")[1] for row in rows)


class TestExport:
    def test_graphml(self, tmp_path):
        lon_path = sample_build(tmp_path)
        out = tmp_path / "exports"
        assert main(["export", str(lon_path), "--format", "graphml", "--out", str(out)]) == 0
        graph = nx.read_graphml(str(out / "direct.graphml"))
        lon = read_lon(lon_path)
        assert graph.number_of_nodes() == len(lon.nodes)
        assert all("quartile_class" in graph.nodes[n] for n in graph.nodes)

    def test_dot(self, tmp_path):
        lon_path = sample_build(tmp_path)
        out = tmp_path / "exports"
        assert main(["export", str(lon_path), "--format", "dot", "--out", str(out)]) == 0
        check_dot_syntax((out / "direct.dot").read_text(encoding="utf-8"))

    def test_csv(self, tmp_path):
        lon_path = sample_build(tmp_path)
        out = tmp_path / "exports"
        assert main(["export", str(lon_path), "--format", "csv", "--out", str(out)]) == 0
        assert (out / "direct_nodes.csv").exists()
        assert (out / "direct_edges.csv").exists()

    def test_pooled_quartiles_across_lons(self, tmp_path):
        lon_a = sample_build(tmp_path, encoding="direct")
        lon_b = sample_build(tmp_path, encoding="cppn")
        out = tmp_path / "pooled"
        assert (
            main(["export", str(lon_a), str(lon_b), "--format", "graphml", "--out", str(out)])
            == 0
        )
        assert (out / "direct.graphml").exists()
        assert (out / "cppn.graphml").exists()
