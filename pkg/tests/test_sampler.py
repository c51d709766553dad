"""Iterated local search: hill-climb semantics, run logs, and statistics."""

from __future__ import annotations

import io

import pytest

from lonscape.core import RngStream, validate_tree
from lonscape.encodings import Encoding, MutationRates, express, genotype_hash, random_genotype
from lonscape.errors import EmptyInputError
from lonscape.evaluate import Fitness
from lonscape.sampler import (
    IlsConfig,
    RunCounters,
    RunLog,
    ils_run,
    local_search,
    perturb,
    run_statistics,
)


def constant_evaluator(value: float = 10.0):
    return lambda tree: Fitness(value, killed=False)


def small_cfg(encoding=Encoding.DIRECT, **overrides) -> IlsConfig:
    defaults = dict(
        encoding=encoding,
        base_seed=0,
        runs=2,
        ls_stall_budget=20,
        run_stall_limit=5,
        run_iteration_limit=8,
    )
    defaults.update(overrides)
    return IlsConfig(**defaults)


class TestConfiguredDefaults:
    def test_ils_budget_defaults(self):
        cfg = IlsConfig(encoding=Encoding.DIRECT)
        assert cfg.runs == 30
        assert cfg.ls_stall_budget == 100
        assert cfg.perturbation_strength == 3
        assert cfg.run_stall_limit == 30
        assert cfg.run_iteration_limit == 100
        assert cfg.fitness_equality_tolerance == 1e-9

    def test_tuned_rates_per_encoding(self):
        from lonscape.encodings import default_rates

        direct = default_rates(Encoding.DIRECT)
        lsystem = default_rates(Encoding.LSYSTEM)
        cppn = default_rates(Encoding.CPPN)
        assert (direct.controller_rate, direct.design_rate) == (0.32, 0.16)
        assert (lsystem.controller_rate, lsystem.design_rate) == (0.16, 0.04)
        assert (cppn.controller_rate, cppn.design_rate) == (0.02, 0.02)
        assert direct.gaussian_sigma == lsystem.gaussian_sigma == cppn.gaussian_sigma == 0.2

    def test_evaluator_defaults(self):
        from lonscape.evaluate import EvaluatorConfig

        cfg = EvaluatorConfig()
        assert cfg.kill_speed == 0.04
        assert cfg.scale == 25.0
        assert cfg.timeout == 120.0


class TestLocalSearch:
    def test_constant_fitness_stops_after_stall_budget(self):
        # Equal neighbours are adopted but never reset the stall counter,
        # so a flat landscape samples exactly the stall budget.
        cfg = IlsConfig(encoding=Encoding.DIRECT, ls_stall_budget=100)
        counters = RunCounters()
        rng = RngStream(0)
        g = random_genotype(Encoding.DIRECT, rng)
        _, fit = local_search(g, cfg, rng, constant_evaluator(), counters)
        assert counters.attempted_mutations == 100
        assert counters.evaluations == 101
        assert counters.accepted_mutations == 100
        assert fit.value == 10.0

    def test_result_never_worse_than_start(self):
        for seed in range(10):
            cfg = small_cfg()
            rng = RngStream(seed)
            g = random_genotype(Encoding.DIRECT, rng)
            from lonscape.evaluate import evaluate

            start = evaluate(express(g))
            _, fit = local_search(g, cfg, rng)
            assert fit.value >= start.value - cfg.fitness_equality_tolerance

    def test_counter_inequalities(self):
        cfg = small_cfg(encoding=Encoding.LSYSTEM)
        counters = RunCounters()
        rng = RngStream(3)
        local_search(random_genotype(Encoding.LSYSTEM, rng), cfg, rng, None, counters)
        assert counters.attempted_mutations >= counters.accepted_mutations
        assert counters.accepted_design_changes <= counters.accepted_mutations
        assert counters.evaluations == counters.attempted_mutations + 1


class TestPerturb:
    def test_strength_zero_is_identity(self):
        cfg = small_cfg(perturbation_strength=0)
        g = random_genotype(Encoding.LSYSTEM, RngStream(4))
        assert perturb(g, cfg, RngStream(5)).to_json() == g.to_json()

    def test_zero_rates_identity_at_any_strength(self):
        cfg = small_cfg(rates=MutationRates(0.0, 0.0), perturbation_strength=3)
        g = random_genotype(Encoding.DIRECT, RngStream(6))
        assert perturb(g, cfg, RngStream(7)).to_json() == g.to_json()

    def test_result_expresses_valid_tree(self):
        cfg = small_cfg(encoding=Encoding.CPPN)
        rng = RngStream(8)
        g = random_genotype(Encoding.CPPN, rng)
        for _ in range(20):
            g = perturb(g, cfg, rng)
            assert validate_tree(express(g)) == []


class TestIlsRun:
    def test_constant_fitness_stops_at_stall_limit(self):
        # Every candidate is accepted as equal, so the 30-iteration stall
        # trigger fires before the 100-iteration cap.
        cfg = IlsConfig(encoding=Encoding.DIRECT, ls_stall_budget=10)
        log = ils_run(0, cfg, constant_evaluator())
        assert len(log.transitions) == 30
        assert len(log.entries) <= 31

    def test_transitions_are_monotone(self):
        cfg = small_cfg()
        for run_id in range(3):
            log = ils_run(run_id, cfg)
            by_node = {e.node_index: e for e in log.entries}
            for src, dst in log.transitions:
                assert (
                    by_node[dst].fitness.value
                    >= by_node[src].fitness.value - cfg.fitness_equality_tolerance
                )

    def test_entry_fitness_non_decreasing(self):
        cfg = small_cfg(encoding=Encoding.LSYSTEM)
        log = ils_run(1, cfg)
        values = [e.fitness.value for e in log.entries]
        assert all(b >= a - cfg.fitness_equality_tolerance for a, b in zip(values, values[1:]))

    def test_deterministic_reruns(self):
        cfg = small_cfg(encoding=Encoding.CPPN, base_seed=11)
        a = ils_run(2, cfg)
        b = ils_run(2, cfg)
        assert a.to_json_lines() == b.to_json_lines()

    def test_seed_derivation(self):
        cfg = small_cfg(base_seed=100)
        log = ils_run(7, cfg)
        assert log.seed == 107

    def test_entry_count_bounded(self):
        cfg = small_cfg()
        log = ils_run(0, cfg)
        assert len(log.entries) <= cfg.run_iteration_limit + 1

    def test_entries_deduplicated_by_genotype_hash(self):
        cfg = small_cfg()
        for run_id in range(3):
            log = ils_run(run_id, cfg)
            hashes = [e.genotype_hash for e in log.entries]
            assert len(hashes) == len(set(hashes))
            assert [e.genotype_hash for e in log.entries] == [
                genotype_hash(e.genotype) for e in log.entries
            ]


class TestRunLogSerialization:
    def test_round_trip(self):
        cfg = small_cfg(encoding=Encoding.LSYSTEM)
        log = ils_run(0, cfg)
        buf = io.StringIO()
        log.write(buf)
        buf.seek(0)
        again = RunLog.read(buf)
        assert again.to_json_lines() == log.to_json_lines()
        assert again.counters == log.counters
        assert again.max_fitness == log.max_fitness


class TestRunStatistics:
    def test_empty_input_raises(self):
        with pytest.raises(EmptyInputError):
            run_statistics([])

    def test_zero_acceptance(self):
        log = RunLog(
            run_id=0,
            encoding=Encoding.DIRECT,
            seed=0,
            entries=[],
            transitions=[],
            counters=RunCounters(attempted_mutations=50, evaluations=51),
        )
        stats = run_statistics([log])
        assert stats.mutation_acceptance_pct == 0.0
        assert stats.design_acceptance_pct == 0.0

    def test_disjoint_design_sets_union(self):
        a = RunLog(
            0, Encoding.DIRECT, 0, [], [], RunCounters(unique_design_hashes={1, 2, 3})
        )
        b = RunLog(
            1, Encoding.DIRECT, 1, [], [], RunCounters(unique_design_hashes={4, 5, 6, 7})
        )
        assert run_statistics([a, b]).unique_designs == 7

    def test_rates_add_up(self):
        counters = RunCounters(
            attempted_mutations=200,
            accepted_mutations=50,
            accepted_design_changes=20,
            evaluations=201,
            unique_design_hashes={1},
        )
        stats = run_statistics([RunLog(0, Encoding.DIRECT, 0, [], [], counters)])
        assert stats.mutation_acceptance_pct == pytest.approx(25.0)
        assert stats.design_acceptance_pct == pytest.approx(40.0)
        assert stats.attempted_mutations == 200
