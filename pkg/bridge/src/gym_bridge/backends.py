"""Episode backends: the built-in kinematic stand-in and external plugs.

A backend turns a parsed phenotype into (distance, killed), where
distance lives on the 0-100 course axis and killed reflects the
minimum-speed kill-switch.
"""

from __future__ import annotations

import importlib
import math
from dataclasses import dataclass

from .phenotype import Phenotype


class BackendUnavailable(RuntimeError):
    """The requested backend cannot start in this environment."""


@dataclass(frozen=True)
class BridgeConfig:
    kill_speed: float = 0.04
    episode_steps: int = 600
    kill_window: int = 25
    step_gain: float = 12.0
    terrain_seed: int = 0
    course_length: float = 100.0


class KinematicBackend:
    """Deterministic episode without physics: per-step progress is the mean
    absolute change of the module controller waves, stopped early when the
    windowed speed falls below the kill threshold."""

    def __init__(self, config: BridgeConfig):
        self.config = config

    def evaluate(self, phenotype: Phenotype) -> tuple[float, bool]:
        cfg = self.config
        controllers = [m.controller for m in phenotype.modules]

        def wave(c, t: float) -> float:
            return c.alpha * math.sin(c.theta * t + c.delta) + c.epsilon

        previous = [wave(c, 0.0) for c in controllers]
        position = 0.0
        window: list[float] = []
        killed = False
        for t in range(1, cfg.episode_steps + 1):
            current = [wave(c, float(t)) for c in controllers]
            step = cfg.step_gain * sum(
                abs(now - before) for now, before in zip(current, previous)
            ) / len(controllers)
            previous = current
            position += step
            window.append(step)
            if len(window) > cfg.kill_window:
                window.pop(0)
            if len(window) == cfg.kill_window and sum(window) / cfg.kill_window < cfg.kill_speed:
                killed = True
                break
            if position >= cfg.course_length:
                break
        return min(cfg.course_length, position), killed


# The physics delegation is a plug: a module exposing make_backend(config)
# returning an object with evaluate(phenotype) -> (distance, killed). The
# conventional plug name below is what --backend gym2d resolves to; writing
# it requires the gym_rem2D repository and Box2D to be installed.
GYM2D_PLUG = "gym_bridge_gym2d:make_backend"


def load_plug(spec: str, config: BridgeConfig):
    module_name, _, attr = spec.partition(":")
    attr = attr or "make_backend"
    try:
        module = importlib.import_module(module_name)
    except ImportError as e:
        raise BackendUnavailable(
            f"backend module {module_name!r} is not importable: {e}"
        ) from e
    factory = getattr(module, attr, None)
    if factory is None:
        raise BackendUnavailable(f"backend module {module_name!r} has no {attr!r}")
    return factory(config)


def make_backend(name: str, config: BridgeConfig):
    if name == "kinematic":
        return KinematicBackend(config)
    if name == "gym2d":
        return load_plug(GYM2D_PLUG, config)
    if ":" in name:
        return load_plug(name, config)
    raise BackendUnavailable(f"unknown backend {name!r}")
