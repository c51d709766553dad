"""Mutation rates and the palette perturbations shared by all encodings."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum

from ..core import (
    ALPHA_RANGE,
    ANGLE_RANGE,
    DELTA_RANGE,
    EPSILON_RANGE,
    HEIGHT_RANGE,
    RADIUS_RANGE,
    THETA_RANGE,
    WIDTH_RANGE,
    ControllerParams,
    Module,
    ModuleKind,
    ModuleList,
    RngStream,
    clamp,
)


class Encoding(str, Enum):
    DIRECT = "direct"
    LSYSTEM = "lsystem"
    CPPN = "cppn"


@dataclass(frozen=True)
class MutationRates:
    """Per-operator application rates plus the Gaussian step width."""

    controller_rate: float
    design_rate: float
    gaussian_sigma: float = 0.2

    def __post_init__(self):
        if not (0.0 <= self.controller_rate <= 1.0):
            raise ValueError(f"controller_rate {self.controller_rate} outside [0, 1]")
        if not (0.0 <= self.design_rate <= 1.0):
            raise ValueError(f"design_rate {self.design_rate} outside [0, 1]")
        if self.gaussian_sigma <= 0.0:
            raise ValueError("gaussian_sigma must be positive")

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "MutationRates":
        return cls(obj["controller_rate"], obj["design_rate"], obj.get("gaussian_sigma", 0.2))


# Tuned rates from the morpho-evolution literature, one set per encoding.
DEFAULT_RATES = {
    Encoding.DIRECT: MutationRates(controller_rate=0.32, design_rate=0.16),
    Encoding.LSYSTEM: MutationRates(controller_rate=0.16, design_rate=0.04),
    Encoding.CPPN: MutationRates(controller_rate=0.02, design_rate=0.02),
}


def default_rates(encoding: Encoding | str) -> MutationRates:
    return DEFAULT_RATES[Encoding(encoding)]


def _perturbed(value: float, lo: float, hi: float, sigma: float, rng: RngStream) -> float:
    return clamp(value + rng.normal(sigma), lo, hi)


def mutate_module_geometry(ml: ModuleList, rates: MutationRates, rng: RngStream) -> ModuleList:
    """Gaussian-perturb shape fields and connection angles, each gated by design_rate."""
    modules = []
    for m in ml.modules:
        changes: dict = {}
        if m.kind is ModuleKind.CIRCLE:
            if rng.random() < rates.design_rate:
                changes["radius"] = _perturbed(m.radius, *RADIUS_RANGE, rates.gaussian_sigma, rng)
        else:
            if rng.random() < rates.design_rate:
                changes["width"] = _perturbed(m.width, *WIDTH_RANGE, rates.gaussian_sigma, rng)
            if rng.random() < rates.design_rate:
                changes["height"] = _perturbed(m.height, *HEIGHT_RANGE, rates.gaussian_sigma, rng)
        if rng.random() < rates.design_rate:
            changes["connection_angle"] = _perturbed(
                m.connection_angle, *ANGLE_RANGE, rates.gaussian_sigma, rng
            )
        modules.append(dataclasses.replace(m, **changes) if changes else m)
    return ModuleList(tuple(modules))


def mutate_module_controllers(ml: ModuleList, rates: MutationRates, rng: RngStream) -> ModuleList:
    """Gaussian-perturb each controller parameter, gated by controller_rate."""
    ranges = (ALPHA_RANGE, THETA_RANGE, DELTA_RANGE, EPSILON_RANGE)
    modules = []
    for m in ml.modules:
        c = m.controller
        params = [c.alpha, c.theta, c.delta, c.epsilon]
        touched = False
        for i, (lo, hi) in enumerate(ranges):
            if rng.random() < rates.controller_rate:
                params[i] = _perturbed(params[i], lo, hi, rates.gaussian_sigma, rng)
                touched = True
        if touched:
            modules.append(
                dataclasses.replace(m, controller=ControllerParams(*params))
            )
        else:
            modules.append(m)
    return ModuleList(tuple(modules))
