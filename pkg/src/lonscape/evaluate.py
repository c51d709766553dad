"""Fitness evaluation: a deterministic locomotion surrogate plus an
external-backend client speaking line-delimited JSON over stdio.

Fitness lives on a 0-100 scale. Robots slower than the kill speed are
terminated early and pinned to the default fitness of 5.0; note a live
crawl can legitimately score below that default, so infeasibility is the
``killed`` flag, never a value comparison.
"""

from __future__ import annotations

import json
import math
import queue
import shlex
import subprocess
import threading
from dataclasses import dataclass
from enum import Enum

from .core import PhenotypeTree, validate_tree
from .errors import (
    EvalBackendFailure,
    EvalTimeout,
    InvalidTreeError,
    ProtocolError,
)

KILL_DEFAULT_FITNESS = 5.0
FITNESS_CAP = 100.0

PROTOCOL_NAME = "lonscape-eval"
PROTOCOL_VERSION = 1


class EvaluatorKind(str, Enum):
    SURROGATE = "surrogate"
    EXTERNAL = "external"


@dataclass(frozen=True)
class Fitness:
    value: float
    killed: bool

    def __post_init__(self):
        if self.killed and self.value != KILL_DEFAULT_FITNESS:
            raise ValueError("killed robots carry the default fitness")
        if not (0.0 <= self.value <= FITNESS_CAP):
            raise ValueError(f"fitness {self.value} outside [0, {FITNESS_CAP}]")

    def to_json(self) -> dict:
        return {"value": self.value, "killed": self.killed}

    @classmethod
    def from_json(cls, obj: dict) -> "Fitness":
        return cls(obj["value"], obj["killed"])


@dataclass(frozen=True)
class EvaluatorConfig:
    kind: EvaluatorKind = EvaluatorKind.SURROGATE
    kill_speed: float = 0.04
    scale: float = 25.0
    external_command: str | None = None
    timeout: float = 120.0

    def __post_init__(self):
        if self.kill_speed <= 0.0:
            raise ValueError("kill_speed must be positive")
        if self.scale <= 0.0:
            raise ValueError("scale must be positive")
        if self.kind is EvaluatorKind.EXTERNAL and not self.external_command:
            raise ValueError("external evaluator needs a command")

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "kill_speed": self.kill_speed,
            "scale": self.scale,
            "external_command": self.external_command,
            "timeout": self.timeout,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EvaluatorConfig":
        return cls(
            kind=EvaluatorKind(obj.get("kind", "surrogate")),
            kill_speed=obj.get("kill_speed", 0.04),
            scale=obj.get("scale", 25.0),
            external_command=obj.get("external_command"),
            timeout=obj.get("timeout", 120.0),
        )


def surrogate_velocity(tree: PhenotypeTree) -> float:
    """Deterministic stand-in for a physics rollout.

    Mean per-module contribution of area * |amplitude| * normalized
    |frequency| * offset penalty * phase synchronisation with the parent
    (the root is fully synchronised with itself).
    """
    violations = validate_tree(tree)
    if violations:
        raise InvalidTreeError([str(v) for v in violations])
    by_index = {n.node_index: n for n in tree.nodes}
    total = 0.0
    for n in tree.nodes:
        c = n.controller
        if n.parent_index is None:
            sync = 1.0
        else:
            half_lag = (c.delta - by_index[n.parent_index].controller.delta) / 2.0
            sync = math.cos(half_lag) ** 2
        total += (
            n.module.area()
            * abs(c.alpha)
            * (abs(c.theta) / 0.1)
            * (1.0 - abs(c.epsilon) / math.pi)
            * sync
        )
    return total / len(tree.nodes)


def fitness_from_velocity(velocity: float, cfg: EvaluatorConfig) -> Fitness:
    """Kill strictly below the minimum speed, else scale and cap."""
    if velocity < cfg.kill_speed:
        return Fitness(KILL_DEFAULT_FITNESS, killed=True)
    return Fitness(min(FITNESS_CAP, cfg.scale * velocity), killed=False)


def fitness_from_distance(distance: float, killed: bool, cfg: EvaluatorConfig) -> Fitness:
    """Map an external backend reply; the distance is already on the 0-100 axis."""
    if killed or distance < cfg.kill_speed:
        return Fitness(KILL_DEFAULT_FITNESS, killed=True)
    return Fitness(min(FITNESS_CAP, distance), killed=False)


def evaluate(tree: PhenotypeTree, cfg: EvaluatorConfig | None = None) -> Fitness:
    """Surrogate fitness of a tree under the kill-switch mapping."""
    cfg = cfg or EvaluatorConfig()
    return fitness_from_velocity(surrogate_velocity(tree), cfg)


class SurrogateEvaluator:
    """Callable evaluator over the pure surrogate; trivially shareable."""

    def __init__(self, cfg: EvaluatorConfig | None = None):
        self.cfg = cfg or EvaluatorConfig()

    def __call__(self, tree: PhenotypeTree) -> Fitness:
        return evaluate(tree, self.cfg)

    def __enter__(self) -> "SurrogateEvaluator":
        return self

    def __exit__(self, *exc) -> None:
        pass

    def close(self) -> None:
        pass


class ExternalEvaluator:
    """One backend subprocess, owned by exactly one in-flight run.

    The backend must greet with a handshake line and then answer each
    request line with a response line carrying the same id.
    """

    def __init__(self, cfg: EvaluatorConfig):
        if cfg.kind is not EvaluatorKind.EXTERNAL:
            raise ValueError("ExternalEvaluator needs an external config")
        self.cfg = cfg
        self._next_id = 0
        self._proc = subprocess.Popen(
            shlex.split(cfg.external_command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        try:
            self._handshake()
        except Exception:
            self.close()
            raise

    def _pump(self) -> None:
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)  # EOF marker

    def _next_line(self) -> str:
        try:
            line = self._lines.get(timeout=self.cfg.timeout)
        except queue.Empty:
            self.close()
            raise EvalTimeout(f"no backend reply within {self.cfg.timeout}s")
        if line is None:
            raise EvalBackendFailure("backend closed its output")
        return line

    def _handshake(self) -> None:
        line = self._next_line()
        try:
            greeting = json.loads(line)
        except json.JSONDecodeError as e:
            raise ProtocolError(f"handshake is not JSON: {line!r}") from e
        if not isinstance(greeting, dict):
            raise ProtocolError(f"handshake is not an object: {greeting!r}")
        if greeting.get("protocol") != PROTOCOL_NAME or greeting.get("version") != PROTOCOL_VERSION:
            raise ProtocolError(f"unexpected handshake: {greeting!r}")

    def __call__(self, tree: PhenotypeTree) -> Fitness:
        request_id = self._next_id
        self._next_id += 1
        request = {"id": request_id, "op": "evaluate", "phenotype": tree.to_json()}
        try:
            self._proc.stdin.write(json.dumps(request) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, ValueError) as e:
            raise EvalBackendFailure("backend pipe is closed") from e
        line = self._next_line()
        try:
            response = json.loads(line)
        except json.JSONDecodeError as e:
            raise ProtocolError(f"response is not JSON: {line!r}") from e
        if not isinstance(response, dict):
            raise ProtocolError(f"response is not an object: {response!r}")
        if response.get("id") != request_id:
            raise ProtocolError(
                f"response id {response.get('id')!r} does not match request {request_id}"
            )
        if "error" in response:
            raise EvalBackendFailure(f"backend error: {response['error']}")
        if "distance" not in response or "killed" not in response:
            raise ProtocolError(f"response missing fields: {response!r}")
        distance = response["distance"]
        if not isinstance(distance, (int, float)) or isinstance(distance, bool) or not math.isfinite(distance):
            raise ProtocolError(f"distance is not a finite number: {distance!r}")
        return fitness_from_distance(float(distance), bool(response["killed"]), self.cfg)

    def close(self) -> None:
        if self._proc.poll() is None:
            self._proc.kill()
        self._proc.wait()
        if self._proc.stdin:
            self._proc.stdin.close()

    def __enter__(self) -> "ExternalEvaluator":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def external_evaluate(tree: PhenotypeTree, cfg: EvaluatorConfig) -> Fitness:
    """One-shot external evaluation: spawn, handshake, evaluate, close."""
    with ExternalEvaluator(cfg) as backend:
        return backend(tree)


def make_evaluator(cfg: EvaluatorConfig | None = None):
    """Build the evaluator callable picked by the config."""
    cfg = cfg or EvaluatorConfig()
    if cfg.kind is EvaluatorKind.SURROGATE:
        return SurrogateEvaluator(cfg)
    return ExternalEvaluator(cfg)
