"""Surrogate fitness, kill-switch mapping, and the external backend client."""

from __future__ import annotations

import dataclasses
import math
import sys

import pytest

from lonscape.core import ControllerParams, PhenotypeNode, PhenotypeTree, RngStream
from lonscape.errors import EvalBackendFailure, EvalTimeout, InvalidTreeError, ProtocolError
from lonscape.evaluate import (
    EvaluatorConfig,
    EvaluatorKind,
    ExternalEvaluator,
    Fitness,
    SurrogateEvaluator,
    evaluate,
    external_evaluate,
    fitness_from_distance,
    fitness_from_velocity,
    make_evaluator,
    surrogate_velocity,
)

from conftest import make_circle, make_controller, make_rect, random_valid_tree, single_node_tree


class TestFitnessType:
    def test_killed_pins_default(self):
        with pytest.raises(ValueError):
            Fitness(7.0, killed=True)
        assert Fitness(5.0, killed=True).value == 5.0

    def test_range_enforced(self):
        with pytest.raises(ValueError):
            Fitness(-1.0, killed=False)
        with pytest.raises(ValueError):
            Fitness(101.0, killed=False)

    def test_round_trip(self):
        f = Fitness(12.5, killed=False)
        assert Fitness.from_json(f.to_json()) == f


class TestSurrogateVelocity:
    def test_zero_amplitude_zero_velocity(self):
        tree = single_node_tree(
            make_circle(controller=make_controller(alpha=0.0, theta=0.1, delta=0.3, epsilon=1.0))
        )
        assert surrogate_velocity(tree) == 0.0

    def test_single_circle_reference_value(self):
        # area pi*0.25, full amplitude, full frequency, no offset: pi/4.
        tree = single_node_tree(
            make_circle(
                radius=0.5,
                controller=make_controller(alpha=1.0, theta=0.1, delta=0.37, epsilon=0.0),
            )
        )
        assert surrogate_velocity(tree) == pytest.approx(0.7853981634, abs=1e-9)

    def test_child_in_phase_has_full_sync(self):
        c = make_controller(alpha=1.0, theta=0.1, delta=0.25, epsilon=0.0)
        root = PhenotypeNode(0, 0, None, 0, 0, make_circle(radius=0.5, controller=c))
        child = PhenotypeNode(1, 0, 0, 0, 1, make_circle(radius=0.5, controller=c))
        tree = PhenotypeTree((root, child))
        solo = single_node_tree(make_circle(radius=0.5, controller=c))
        assert surrogate_velocity(tree) == pytest.approx(surrogate_velocity(solo), abs=1e-12)

    def test_two_node_hand_computed(self):
        root_c = ControllerParams(alpha=0.5, theta=0.05, delta=0.1, epsilon=0.2)
        child_c = ControllerParams(alpha=-0.8, theta=-0.1, delta=0.9, epsilon=-0.5)
        root = PhenotypeNode(0, 4, None, 0, 0, make_rect(width=0.8, height=0.6, controller=root_c))
        child = PhenotypeNode(1, 0, 0, 1, 1, make_circle(radius=0.3, controller=child_c))
        tree = PhenotypeTree((root, child))
        term_root = 0.48 * 0.5 * 0.5 * (1.0 - 0.2 / math.pi) * 1.0
        term_child = (
            math.pi * 0.09 * 0.8 * 1.0 * (1.0 - 0.5 / math.pi) * math.cos((0.9 - 0.1) / 2.0) ** 2
        )
        assert surrogate_velocity(tree) == pytest.approx((term_root + term_child) / 2.0, abs=1e-12)

    def test_rejects_invalid_tree(self):
        bad = PhenotypeTree(
            (
                PhenotypeNode(0, 0, None, 0, 0, make_circle()),
                PhenotypeNode(1, 0, 7, 0, 1, make_circle()),
            )
        )
        with pytest.raises(InvalidTreeError):
            surrogate_velocity(bad)

    def test_amplitude_monotonicity(self):
        rng = RngStream(55)
        for _ in range(200):
            tree = random_valid_tree(rng)
            pick = rng.randint(len(tree.nodes))
            node = tree.nodes[pick]
            c = node.controller
            boosted = dataclasses.replace(
                node,
                module=dataclasses.replace(
                    node.module,
                    controller=ControllerParams(
                        alpha=math.copysign(min(1.0, abs(c.alpha) + 0.2), c.alpha or 1.0),
                        theta=c.theta,
                        delta=c.delta,
                        epsilon=c.epsilon,
                    ),
                ),
            )
            nodes = list(tree.nodes)
            nodes[pick] = boosted
            assert surrogate_velocity(PhenotypeTree(tuple(nodes))) >= surrogate_velocity(tree) - 1e-15


class TestKillSwitchMapping:
    def test_zero_velocity_is_killed(self):
        assert fitness_from_velocity(0.0, EvaluatorConfig()) == Fitness(5.0, killed=True)

    def test_boundary_is_alive(self):
        # Kill only strictly below the minimum speed.
        f = fitness_from_velocity(0.04, EvaluatorConfig())
        assert f == Fitness(1.0, killed=False)
        assert fitness_from_velocity(0.039999, EvaluatorConfig()).killed

    def test_cap_at_100(self):
        assert fitness_from_velocity(10.0, EvaluatorConfig()).value == 100.0

    def test_evaluate_is_pure(self):
        tree = random_valid_tree(RngStream(56))
        assert evaluate(tree) == evaluate(tree)

    def test_fitness_range_property(self):
        rng = RngStream(57)
        for _ in range(10_000):
            f = evaluate(random_valid_tree(rng, max_nodes=6))
            assert 0.0 <= f.value <= 100.0
            if f.killed:
                assert f.value == 5.0


class TestExternalMapping:
    def test_distance_passes_through_unscaled(self):
        f = fitness_from_distance(50.0, False, EvaluatorConfig())
        assert f == Fitness(50.0, killed=False)

    def test_backend_kill_flag_wins(self):
        assert fitness_from_distance(80.0, True, EvaluatorConfig()) == Fitness(5.0, killed=True)

    def test_slow_distance_killed(self):
        assert fitness_from_distance(0.01, False, EvaluatorConfig()).killed

    def test_distance_capped(self):
        assert fitness_from_distance(250.0, False, EvaluatorConfig()).value == 100.0


BACKEND_TEMPLATE = """
import json, sys, time
print(json.dumps({handshake}), flush=True)
for line in sys.stdin:
    req = json.loads(line)
    {body}
"""


def write_backend(tmp_path, body, handshake=None, name="backend.py"):
    handshake = handshake or {"protocol": "lonscape-eval", "version": 1}
    script = tmp_path / name
    script.write_text(
        BACKEND_TEMPLATE.format(handshake=handshake, body=body), encoding="utf-8"
    )
    return f"{sys.executable} {script}"


def external_config(command, timeout=10.0):
    return EvaluatorConfig(kind=EvaluatorKind.EXTERNAL, external_command=command, timeout=timeout)


ECHO_50 = 'print(json.dumps({"id": req["id"], "distance": 50.0, "killed": False}), flush=True)'


class TestExternalEvaluator:
    def test_echo_distance(self, tmp_path):
        cmd = write_backend(tmp_path, ECHO_50)
        with ExternalEvaluator(external_config(cmd)) as backend:
            f = backend(single_node_tree())
        assert f == Fitness(50.0, killed=False)

    def test_killed_reply(self, tmp_path):
        body = 'print(json.dumps({"id": req["id"], "distance": 0.0, "killed": True}), flush=True)'
        cmd = write_backend(tmp_path, body)
        with ExternalEvaluator(external_config(cmd)) as backend:
            assert backend(single_node_tree()) == Fitness(5.0, killed=True)

    def test_ids_increment_and_match(self, tmp_path):
        # Use the request id as the distance so matching is observable.
        body = 'print(json.dumps({"id": req["id"], "distance": float(req["id"] + 10), "killed": False}), flush=True)'
        cmd = write_backend(tmp_path, body)
        with ExternalEvaluator(external_config(cmd)) as backend:
            tree = single_node_tree()
            assert backend(tree).value == 10.0
            assert backend(tree).value == 11.0
            assert backend(tree).value == 12.0

    def test_malformed_response(self, tmp_path):
        cmd = write_backend(tmp_path, 'print("not json", flush=True)')
        with pytest.raises(ProtocolError):
            with ExternalEvaluator(external_config(cmd)) as backend:
                backend(single_node_tree())

    def test_wrong_id(self, tmp_path):
        body = 'print(json.dumps({"id": 999, "distance": 1.0, "killed": False}), flush=True)'
        cmd = write_backend(tmp_path, body)
        with pytest.raises(ProtocolError):
            with ExternalEvaluator(external_config(cmd)) as backend:
                backend(single_node_tree())

    def test_bad_handshake(self, tmp_path):
        cmd = write_backend(tmp_path, ECHO_50, handshake={"protocol": "other", "version": 9})
        with pytest.raises(ProtocolError):
            ExternalEvaluator(external_config(cmd))

    def test_error_reply(self, tmp_path):
        body = 'print(json.dumps({"id": req["id"], "error": "boom"}), flush=True)'
        cmd = write_backend(tmp_path, body)
        with pytest.raises(EvalBackendFailure):
            with ExternalEvaluator(external_config(cmd)) as backend:
                backend(single_node_tree())

    def test_backend_death(self, tmp_path):
        cmd = write_backend(tmp_path, "sys.exit(0)")
        with pytest.raises(EvalBackendFailure):
            with ExternalEvaluator(external_config(cmd)) as backend:
                backend(single_node_tree())

    def test_timeout(self, tmp_path):
        cmd = write_backend(tmp_path, "time.sleep(60)")
        with pytest.raises(EvalTimeout):
            with ExternalEvaluator(external_config(cmd, timeout=0.3)) as backend:
                backend(single_node_tree())

    def test_one_shot_helper(self, tmp_path):
        cmd = write_backend(tmp_path, ECHO_50)
        assert external_evaluate(single_node_tree(), external_config(cmd)).value == 50.0


class TestMakeEvaluator:
    def test_surrogate_default(self):
        ev = make_evaluator()
        assert isinstance(ev, SurrogateEvaluator)
        tree = single_node_tree()
        assert ev(tree) == evaluate(tree)

    def test_external_requires_command(self):
        with pytest.raises(ValueError):
            EvaluatorConfig(kind=EvaluatorKind.EXTERNAL)
