"""L-System encoding: eight symbols, three substitution slots per rule."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from ..core import (
    MAX_DEPTH_LEVELS,
    MAX_NODES,
    MODULE_COUNT,
    SITES,
    ModuleList,
    PhenotypeNode,
    PhenotypeTree,
    RngStream,
    random_module_list,
)
from ..errors import InvalidGenotypeError
from .common import MutationRates, mutate_module_geometry

Rule = tuple[int | None, int | None, int | None]


@dataclass(frozen=True)
class LSystemGenotype:
    """One rule per symbol; an empty slot grows nothing at that site."""

    axiom: int
    rules: tuple[Rule, ...]
    module_list: ModuleList

    def __post_init__(self):
        if not (0 <= self.axiom < MODULE_COUNT):
            raise InvalidGenotypeError(f"axiom {self.axiom} outside [0, {MODULE_COUNT})")
        if len(self.rules) != MODULE_COUNT:
            raise InvalidGenotypeError(f"need {MODULE_COUNT} rules, got {len(self.rules)}")
        for s, rule in enumerate(self.rules):
            if len(rule) != len(SITES):
                raise InvalidGenotypeError(f"rule {s} has {len(rule)} slots")
            for sym in rule:
                if sym is not None and not (0 <= sym < MODULE_COUNT):
                    raise InvalidGenotypeError(f"rule {s} substitutes unknown symbol {sym}")

    def to_json(self) -> dict:
        return {
            "schema": 1,
            "encoding": "lsystem",
            "axiom": self.axiom,
            "rules": [list(rule) for rule in self.rules],
            "module_list": self.module_list.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LSystemGenotype":
        rules = tuple(tuple(rule) for rule in obj["rules"])
        return cls(obj["axiom"], rules, ModuleList.from_json(obj["module_list"]))


def express_lsystem(g: LSystemGenotype) -> PhenotypeTree:
    """Breadth-first expansion of the axiom against the depth and size caps.

    Children are attached in site order; once a node would exceed the size
    cap, it and everything after it is dropped.
    """
    nodes = [
        PhenotypeNode(
            node_index=0,
            module_index=g.axiom,
            parent_index=None,
            site=0,
            depth=0,
            module=g.module_list[g.axiom],
        )
    ]
    queue: deque[int] = deque([0])
    while queue:
        parent = nodes[queue.popleft()]
        if parent.depth + 1 >= MAX_DEPTH_LEVELS:
            continue
        for site in SITES:
            symbol = g.rules[parent.module_index][site]
            if symbol is None:
                continue
            if len(nodes) >= MAX_NODES:
                queue.clear()
                break
            index = len(nodes)
            nodes.append(
                PhenotypeNode(
                    node_index=index,
                    module_index=symbol,
                    parent_index=parent.node_index,
                    site=site,
                    depth=parent.depth + 1,
                    module=g.module_list[symbol],
                )
            )
            queue.append(index)
    return PhenotypeTree(tuple(nodes))


def random_lsystem(rng: RngStream) -> LSystemGenotype:
    """Uniform axiom; each slot empty with probability 0.5, else uniform."""
    module_list = random_module_list(rng)
    axiom = rng.randint(MODULE_COUNT)
    rules = []
    for _ in range(MODULE_COUNT):
        slots = []
        for _ in SITES:
            if rng.random() < 0.5:
                slots.append(None)
            else:
                slots.append(rng.randint(MODULE_COUNT))
        rules.append(tuple(slots))
    return LSystemGenotype(axiom, tuple(rules), module_list)


def mutate_lsystem(g: LSystemGenotype, rates: MutationRates, rng: RngStream) -> LSystemGenotype:
    """Toggle rule slots at the design rate, then perturb the palette."""
    rules = []
    for rule in g.rules:
        slots = []
        for sym in rule:
            if rng.random() < rates.design_rate:
                slots.append(rng.randint(MODULE_COUNT) if sym is None else None)
            else:
                slots.append(sym)
        rules.append(tuple(slots))
    module_list = mutate_module_geometry(g.module_list, rates, rng)
    return LSystemGenotype(g.axiom, tuple(rules), module_list)
