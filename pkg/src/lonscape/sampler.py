"""Iterated local search over a design encoding, logging local optima.

One run: hill-climb from a random genotype with a first-improvement rule
(equal neighbours are adopted, only strict improvement resets the stall
budget), then repeat perturb-and-climb cycles, accepting candidates that
are at least as fit as the incumbent. Accepted optima become trajectory
entries keyed by genotype hash; accepted moves become transitions,
including self-loops back to the incumbent.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, TextIO

from .core import PhenotypeTree, RngStream, hash_design, hash_phenotype
from .encodings import (
    Encoding,
    Genotype,
    MutationRates,
    default_rates,
    express,
    genotype_from_json,
    genotype_hash,
    mutation_bundle,
    random_genotype,
)
from .errors import EmptyInputError, SchemaMismatchError
from .evaluate import Fitness, SurrogateEvaluator

EvaluateTree = Callable[[PhenotypeTree], Fitness]

RUN_LOG_SCHEMA = 1


@dataclass(frozen=True)
class IlsConfig:
    encoding: Encoding
    base_seed: int = 0
    runs: int = 30
    ls_stall_budget: int = 100
    perturbation_strength: int = 3
    run_stall_limit: int = 30
    run_iteration_limit: int = 100
    rates: MutationRates | None = None
    fitness_equality_tolerance: float = 1e-9

    def __post_init__(self):
        object.__setattr__(self, "encoding", Encoding(self.encoding))
        for name in ("runs", "ls_stall_budget", "run_stall_limit", "run_iteration_limit"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.perturbation_strength < 0:
            raise ValueError("perturbation_strength must be >= 0")
        if self.fitness_equality_tolerance < 0:
            raise ValueError("fitness_equality_tolerance must be >= 0")

    @property
    def effective_rates(self) -> MutationRates:
        return self.rates if self.rates is not None else default_rates(self.encoding)

    def to_json(self) -> dict:
        return {
            "encoding": self.encoding.value,
            "base_seed": self.base_seed,
            "runs": self.runs,
            "ls_stall_budget": self.ls_stall_budget,
            "perturbation_strength": self.perturbation_strength,
            "run_stall_limit": self.run_stall_limit,
            "run_iteration_limit": self.run_iteration_limit,
            "rates": None if self.rates is None else self.rates.to_json(),
            "fitness_equality_tolerance": self.fitness_equality_tolerance,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "IlsConfig":
        rates = obj.get("rates")
        return cls(
            encoding=Encoding(obj["encoding"]),
            base_seed=obj.get("base_seed", 0),
            runs=obj.get("runs", 30),
            ls_stall_budget=obj.get("ls_stall_budget", 100),
            perturbation_strength=obj.get("perturbation_strength", 3),
            run_stall_limit=obj.get("run_stall_limit", 30),
            run_iteration_limit=obj.get("run_iteration_limit", 100),
            rates=None if rates is None else MutationRates.from_json(rates),
            fitness_equality_tolerance=obj.get("fitness_equality_tolerance", 1e-9),
        )


@dataclass
class RunCounters:
    attempted_mutations: int = 0
    accepted_mutations: int = 0
    accepted_design_changes: int = 0
    evaluations: int = 0
    unique_design_hashes: set[int] = field(default_factory=set)

    def to_json(self) -> dict:
        return {
            "attempted_mutations": self.attempted_mutations,
            "accepted_mutations": self.accepted_mutations,
            "accepted_design_changes": self.accepted_design_changes,
            "evaluations": self.evaluations,
            "unique_design_hashes": sorted(f"{h:016x}" for h in self.unique_design_hashes),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RunCounters":
        return cls(
            attempted_mutations=obj["attempted_mutations"],
            accepted_mutations=obj["accepted_mutations"],
            accepted_design_changes=obj["accepted_design_changes"],
            evaluations=obj["evaluations"],
            unique_design_hashes={int(h, 16) for h in obj["unique_design_hashes"]},
        )


@dataclass(frozen=True)
class TrajectoryEntry:
    node_index: int
    fitness: Fitness
    genotype_hash: int
    phenotype_hash: int
    design_hash: int
    genotype: Genotype

    def to_json(self) -> dict:
        return {
            "kind": "entry",
            "node": self.node_index,
            "fitness": self.fitness.to_json(),
            "genotype_hash": f"{self.genotype_hash:016x}",
            "phenotype_hash": f"{self.phenotype_hash:016x}",
            "design_hash": f"{self.design_hash:016x}",
            "genotype": self.genotype.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TrajectoryEntry":
        return cls(
            node_index=obj["node"],
            fitness=Fitness.from_json(obj["fitness"]),
            genotype_hash=int(obj["genotype_hash"], 16),
            phenotype_hash=int(obj["phenotype_hash"], 16),
            design_hash=int(obj["design_hash"], 16),
            genotype=genotype_from_json(obj["genotype"]),
        )


@dataclass
class RunLog:
    run_id: int
    encoding: Encoding
    seed: int
    entries: list[TrajectoryEntry]
    transitions: list[tuple[int, int]]
    counters: RunCounters

    @property
    def max_fitness(self) -> float:
        return max(e.fitness.value for e in self.entries)

    def to_json_lines(self) -> list[str]:
        records: list[dict] = [
            {
                "schema": RUN_LOG_SCHEMA,
                "kind": "header",
                "run_id": self.run_id,
                "encoding": self.encoding.value,
                "seed": self.seed,
            }
        ]
        records.extend(e.to_json() for e in self.entries)
        records.extend({"kind": "transition", "src": s, "dst": d} for s, d in self.transitions)
        records.append({"kind": "counters", **self.counters.to_json()})
        return [json.dumps(r, sort_keys=True, separators=(",", ":")) for r in records]

    @classmethod
    def from_json_lines(cls, lines: Iterable[str]) -> "RunLog":
        header = None
        entries: list[TrajectoryEntry] = []
        transitions: list[tuple[int, int]] = []
        counters = None
        for line in lines:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            kind = obj.get("kind")
            if kind == "header":
                if obj.get("schema") != RUN_LOG_SCHEMA:
                    raise SchemaMismatchError(f"run log schema {obj.get('schema')!r}")
                header = obj
            elif kind == "entry":
                entries.append(TrajectoryEntry.from_json(obj))
            elif kind == "transition":
                transitions.append((obj["src"], obj["dst"]))
            elif kind == "counters":
                counters = RunCounters.from_json(obj)
            else:
                raise SchemaMismatchError(f"unknown run log record {kind!r}")
        if header is None or counters is None:
            raise SchemaMismatchError("run log missing header or counters record")
        return cls(
            run_id=header["run_id"],
            encoding=Encoding(header["encoding"]),
            seed=header["seed"],
            entries=entries,
            transitions=transitions,
            counters=counters,
        )

    def write(self, stream: TextIO) -> None:
        for line in self.to_json_lines():
            stream.write(line + "\n")

    @classmethod
    def read(cls, stream: TextIO) -> "RunLog":
        return cls.from_json_lines(stream)


def local_search(
    g: Genotype,
    cfg: IlsConfig,
    rng: RngStream,
    evaluate_tree: EvaluateTree | None = None,
    counters: RunCounters | None = None,
) -> tuple[Genotype, Fitness]:
    """First-improvement hill climb: an equal-or-better neighbour is adopted
    immediately; the stall budget resets only on strict improvement."""
    evaluate_tree = evaluate_tree or SurrogateEvaluator()
    counters = counters if counters is not None else RunCounters()
    rates = cfg.effective_rates
    tol = cfg.fitness_equality_tolerance

    tree = express(g)
    incumbent_fit = evaluate_tree(tree)
    counters.evaluations += 1
    incumbent_design = hash_design(tree)
    counters.unique_design_hashes.add(incumbent_design)
    incumbent = g

    stall = 0
    while stall < cfg.ls_stall_budget:
        neighbour = mutation_bundle(incumbent, rates, rng)
        neighbour_tree = express(neighbour)
        neighbour_fit = evaluate_tree(neighbour_tree)
        neighbour_design = hash_design(neighbour_tree)
        counters.attempted_mutations += 1
        counters.evaluations += 1
        counters.unique_design_hashes.add(neighbour_design)
        stall += 1
        if neighbour_fit.value >= incumbent_fit.value - tol:
            counters.accepted_mutations += 1
            if neighbour_design != incumbent_design:
                counters.accepted_design_changes += 1
            if neighbour_fit.value > incumbent_fit.value + tol:
                stall = 0
            incumbent = neighbour
            incumbent_fit = neighbour_fit
            incumbent_design = neighbour_design
    return incumbent, incumbent_fit


def perturb(g: Genotype, cfg: IlsConfig, rng: RngStream) -> Genotype:
    """The mutation bundle applied perturbation_strength times in sequence."""
    rates = cfg.effective_rates
    for _ in range(cfg.perturbation_strength):
        g = mutation_bundle(g, rates, rng)
    return g


def ils_run(
    run_id: int,
    cfg: IlsConfig,
    evaluate_tree: EvaluateTree | None = None,
) -> RunLog:
    """One seeded ILS trajectory of accepted local optima and transitions.

    Candidates at least as fit as the incumbent are accepted; rejected
    candidates leave no edge. Entries are deduplicated by genotype hash,
    so escaping back to a known optimum records a repeat transition
    rather than a new node.
    """
    seed = cfg.base_seed + run_id
    rng = RngStream(seed)
    evaluate_tree = evaluate_tree or SurrogateEvaluator()
    counters = RunCounters()

    incumbent, incumbent_fit = local_search(
        random_genotype(cfg.encoding, rng), cfg, rng, evaluate_tree, counters
    )
    entries: list[TrajectoryEntry] = []
    transitions: list[tuple[int, int]] = []
    node_of: dict[int, int] = {}

    def register(g: Genotype, fit: Fitness) -> int:
        g_hash = genotype_hash(g)
        node = node_of.get(g_hash)
        if node is None:
            tree = express(g)
            node = len(entries)
            node_of[g_hash] = node
            entries.append(
                TrajectoryEntry(
                    node_index=node,
                    fitness=fit,
                    genotype_hash=g_hash,
                    phenotype_hash=hash_phenotype(tree),
                    design_hash=hash_design(tree),
                    genotype=g,
                )
            )
        return node

    incumbent_node = register(incumbent, incumbent_fit)
    tol = cfg.fitness_equality_tolerance

    stall = 0
    iterations = 0
    while stall < cfg.run_stall_limit and iterations < cfg.run_iteration_limit:
        iterations += 1
        candidate, candidate_fit = local_search(
            perturb(incumbent, cfg, rng), cfg, rng, evaluate_tree, counters
        )
        if candidate_fit.value >= incumbent_fit.value - tol:
            node = register(candidate, candidate_fit)
            transitions.append((incumbent_node, node))
            if candidate_fit.value > incumbent_fit.value + tol:
                stall = 0
            else:
                stall += 1
            incumbent, incumbent_fit, incumbent_node = candidate, candidate_fit, node
        else:
            stall += 1

    return RunLog(
        run_id=run_id,
        encoding=cfg.encoding,
        seed=seed,
        entries=entries,
        transitions=transitions,
        counters=counters,
    )


@dataclass(frozen=True)
class RunStatistics:
    """The run-level summary row set: acceptance rates and design coverage."""

    mutation_acceptance_pct: float
    design_acceptance_pct: float
    unique_designs: int
    attempted_mutations: int

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "RunStatistics":
        return cls(
            mutation_acceptance_pct=obj["mutation_acceptance_pct"],
            design_acceptance_pct=obj["design_acceptance_pct"],
            unique_designs=obj["unique_designs"],
            attempted_mutations=obj["attempted_mutations"],
        )


def run_statistics(logs: list[RunLog]) -> RunStatistics:
    """Aggregate counters across runs; design coverage is a set union."""
    if not logs:
        raise EmptyInputError("run_statistics needs at least one run log")
    attempted = sum(log.counters.attempted_mutations for log in logs)
    accepted = sum(log.counters.accepted_mutations for log in logs)
    design_changes = sum(log.counters.accepted_design_changes for log in logs)
    designs: set[int] = set()
    for log in logs:
        designs |= log.counters.unique_design_hashes
    return RunStatistics(
        mutation_acceptance_pct=100.0 * accepted / attempted if attempted else 0.0,
        design_acceptance_pct=100.0 * design_changes / accepted if accepted else 0.0,
        unique_designs=len(designs),
        attempted_mutations=attempted,
    )
