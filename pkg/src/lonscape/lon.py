"""Merged local optima networks and their graph metrics.

Nodes are accepted local optima keyed by genotype hash; edges are the
perturb-then-climb transitions between them, weighted by how often each
was followed. Only neutral or improving transitions exist by
construction, so every metric here may assume monotone edges.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .encodings import Encoding
from .errors import (
    DanglingTransitionError,
    EmptyInputError,
    NoReachablePairsError,
    SchemaMismatchError,
)
from .evaluate import Fitness
from .sampler import RunLog, RunStatistics, run_statistics

LON_SCHEMA = 1


class QuartileClass(str, Enum):
    LOW = "low"
    MID = "mid"
    HIGH = "high"


@dataclass
class LonNode:
    id: int
    fitness: Fitness
    phenotype_hash: int
    design_hash: int
    runs: set[int]
    quartile_class: QuartileClass | None = None


@dataclass(frozen=True)
class RunSummary:
    """Per-run scalars kept alongside the graph for comparison plots."""

    run_id: int
    chain_length: int
    max_fitness: float
    evaluations: int

    def to_json(self) -> dict:
        return {
            "run_id": self.run_id,
            "chain_length": self.chain_length,
            "max_fitness": self.max_fitness,
            "evaluations": self.evaluations,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RunSummary":
        return cls(obj["run_id"], obj["chain_length"], obj["max_fitness"], obj["evaluations"])


@dataclass
class Lon:
    encoding: Encoding
    nodes: dict[int, LonNode]
    edges: dict[tuple[int, int], int]
    config_digest: str = ""
    run_stats: RunStatistics | None = None
    run_summaries: list[RunSummary] = field(default_factory=list)

    def to_json(self) -> dict:
        nodes = [
            {
                "id": f"{n.id:016x}",
                "fitness": n.fitness.to_json(),
                "phenotype_hash": f"{n.phenotype_hash:016x}",
                "design_hash": f"{n.design_hash:016x}",
                "runs": sorted(n.runs),
            }
            for n in sorted(self.nodes.values(), key=lambda n: n.id)
        ]
        edges = [
            {"src": f"{s:016x}", "dst": f"{d:016x}", "weight": w}
            for (s, d), w in sorted(self.edges.items())
        ]
        return {
            "schema": LON_SCHEMA,
            "kind": "lon",
            "encoding": self.encoding.value,
            "config_digest": self.config_digest,
            "nodes": nodes,
            "edges": edges,
            "run_stats": None if self.run_stats is None else self.run_stats.to_json(),
            "runs": [r.to_json() for r in self.run_summaries],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Lon":
        if obj.get("schema") != LON_SCHEMA or obj.get("kind") != "lon":
            raise SchemaMismatchError(
                f"expected a lon file with schema {LON_SCHEMA}, got "
                f"kind={obj.get('kind')!r} schema={obj.get('schema')!r}"
            )
        nodes = {}
        for item in obj["nodes"]:
            node_id = int(item["id"], 16)
            nodes[node_id] = LonNode(
                id=node_id,
                fitness=Fitness.from_json(item["fitness"]),
                phenotype_hash=int(item["phenotype_hash"], 16),
                design_hash=int(item["design_hash"], 16),
                runs=set(item["runs"]),
            )
        edges = {
            (int(e["src"], 16), int(e["dst"], 16)): e["weight"] for e in obj["edges"]
        }
        run_stats = obj.get("run_stats")
        return cls(
            encoding=Encoding(obj["encoding"]),
            nodes=nodes,
            edges=edges,
            config_digest=obj.get("config_digest", ""),
            run_stats=None if run_stats is None else RunStatistics.from_json(run_stats),
            run_summaries=[RunSummary.from_json(r) for r in obj.get("runs", [])],
        )


def write_lon(lon: Lon, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(lon.to_json(), sort_keys=True, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )


def read_lon(path: str | Path) -> Lon:
    return Lon.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def build_lon(logs: list[RunLog], config_digest: str = "") -> Lon:
    """Amalgamate run trajectories: nodes merge by genotype hash, transition
    multiplicities accumulate into edge weights, self-loops included."""
    if not logs:
        raise EmptyInputError("build_lon needs at least one run log")
    nodes: dict[int, LonNode] = {}
    edges: dict[tuple[int, int], int] = {}
    for log in logs:
        index_to_hash = {}
        for entry in log.entries:
            index_to_hash[entry.node_index] = entry.genotype_hash
            node = nodes.get(entry.genotype_hash)
            if node is None:
                nodes[entry.genotype_hash] = LonNode(
                    id=entry.genotype_hash,
                    fitness=entry.fitness,
                    phenotype_hash=entry.phenotype_hash,
                    design_hash=entry.design_hash,
                    runs={log.run_id},
                )
            else:
                node.runs.add(log.run_id)
        for src, dst in log.transitions:
            if src not in index_to_hash or dst not in index_to_hash:
                raise DanglingTransitionError(
                    f"run {log.run_id}: transition ({src}, {dst}) references a missing entry"
                )
            key = (index_to_hash[src], index_to_hash[dst])
            edges[key] = edges.get(key, 0) + 1
    return Lon(
        encoding=logs[0].encoding,
        nodes=nodes,
        edges=edges,
        config_digest=config_digest,
        run_stats=run_statistics(logs),
        run_summaries=[
            RunSummary(
                run_id=log.run_id,
                chain_length=len(log.entries),
                max_fitness=log.max_fitness,
                evaluations=log.counters.evaluations,
            )
            for log in logs
        ],
    )


def weakly_connected_components(lon: Lon) -> list[set[int]]:
    """Partition of the nodes, edge direction ignored (iterative DFS)."""
    undirected: dict[int, set[int]] = {i: set() for i in lon.nodes}
    for src, dst in lon.edges:
        undirected[src].add(dst)
        undirected[dst].add(src)
    seen: set[int] = set()
    components: list[set[int]] = []
    for start in sorted(lon.nodes):
        if start in seen:
            continue
        component = set()
        stack = [start]
        while stack:
            i = stack.pop()
            if i in seen:
                continue
            seen.add(i)
            component.add(i)
            stack.extend(undirected[i] - seen)
        components.append(component)
    return components


def average_path_length(lon: Lon) -> float:
    """Mean directed shortest-path length over reachable ordered pairs,
    unit edge weights, self-loops ignored."""
    adjacency: dict[int, list[int]] = {i: [] for i in lon.nodes}
    for src, dst in lon.edges:
        if src != dst:
            adjacency[src].append(dst)
    total = 0
    pairs = 0
    for start in lon.nodes:
        distance = {start: 0}
        frontier = [start]
        depth = 0
        while frontier:
            depth += 1
            nxt = []
            for i in frontier:
                for j in adjacency[i]:
                    if j not in distance:
                        distance[j] = depth
                        nxt.append(j)
            frontier = nxt
        total += sum(d for node, d in distance.items() if node != start)
        pairs += len(distance) - 1
    if pairs == 0:
        raise NoReachablePairsError("no ordered pair of nodes is connected")
    return total / pairs


def mean_degree(lon: Lon) -> float:
    """Average of in-degree plus out-degree; a self-loop adds one to each."""
    if not lon.nodes:
        raise EmptyInputError("mean_degree needs at least one node")
    degree = {i: 0 for i in lon.nodes}
    for src, dst in lon.edges:
        degree[src] += 1
        degree[dst] += 1
    return sum(degree.values()) / len(lon.nodes)


def infeasible_pct(lon: Lon) -> float:
    """Percentage of nodes whose robot tripped the kill-switch."""
    if not lon.nodes:
        return 0.0
    killed = sum(1 for n in lon.nodes.values() if n.fitness.killed)
    return 100.0 * killed / len(lon.nodes)


def chain_lengths(logs: list[RunLog]) -> list[int]:
    """Distinct accepted local optima per run, one value per run."""
    return [len(log.entries) for log in logs]


def fitness_deltas(lon: Lon) -> list[float]:
    """Median edge fitness gain within each component, skipping edgeless ones.

    Components are visited in discovery order (smallest node id first), so
    the result is deterministic.
    """
    component_of: dict[int, int] = {}
    components = weakly_connected_components(lon)
    for index, component in enumerate(components):
        for node in component:
            component_of[node] = index
    per_component: dict[int, list[float]] = {}
    for src, dst in lon.edges:
        delta = max(0.0, lon.nodes[dst].fitness.value - lon.nodes[src].fitness.value)
        per_component.setdefault(component_of[src], []).append(delta)
    return [
        statistics.median(per_component[i])
        for i in range(len(components))
        if i in per_component
    ]


@dataclass(frozen=True)
class QuartileThresholds:
    q1: float
    q3: float

    def classify(self, fitness: float) -> QuartileClass:
        if fitness < self.q1:
            return QuartileClass.LOW
        if fitness >= self.q3:
            return QuartileClass.HIGH
        return QuartileClass.MID


def classify_quartiles(lons: list[Lon]) -> QuartileThresholds:
    """Pool node fitness across the given LONs, split at Q1/Q3 (linear
    interpolation), and stamp each node's class in place."""
    values = [n.fitness.value for lon in lons for n in lon.nodes.values()]
    if not values:
        raise EmptyInputError("classify_quartiles needs at least one node")
    q1, q3 = np.percentile(values, [25.0, 75.0], method="linear")
    thresholds = QuartileThresholds(q1=float(q1), q3=float(q3))
    for lon in lons:
        for node in lon.nodes.values():
            node.quartile_class = thresholds.classify(node.fitness.value)
    return thresholds


def monotonicity_violations(lon: Lon, tolerance: float = 1e-9) -> list[tuple[int, int]]:
    """Edges whose destination is more than tolerance worse than the source."""
    return [
        (src, dst)
        for src, dst in lon.edges
        if lon.nodes[dst].fitness.value < lon.nodes[src].fitness.value - tolerance
    ]


@dataclass(frozen=True)
class LonSummary:
    """The LON-level statistics row set."""

    nodes: int
    edges: int
    components: int
    path_length: float | None
    degree: float
    infeasible_pct: float


def lon_summary(lon: Lon) -> LonSummary:
    try:
        path_length = average_path_length(lon)
    except NoReachablePairsError:
        path_length = None
    return LonSummary(
        nodes=len(lon.nodes),
        edges=len(lon.edges),
        components=len(weakly_connected_components(lon)),
        path_length=path_length,
        degree=mean_degree(lon),
        infeasible_pct=infeasible_pct(lon),
    )
