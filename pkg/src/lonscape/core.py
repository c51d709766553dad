"""Shared domain types for modular 2D robot designs.

A robot is a directed tree of modules. Each module is a circle or a
rectangle with a sine-wave controller; a list of eight modules (four
circles, then four rectangles) is the palette every encoding draws from.
This module also owns the canonical byte serialization used for design
and phenotype hashing, and the deterministic RNG wrapper every stochastic
operation takes as an explicit argument.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import InvalidTreeError

# Structural limits for phenotype trees.
MAX_DEPTH_LEVELS = 7          # levels 0..6; a node at depth 6 may not have children
MAX_NODES = 40
MAX_CHILDREN = 3
SITES = (0, 1, 2)

# Inclusive parameter ranges.
ALPHA_RANGE = (-1.0, 1.0)
THETA_RANGE = (-0.1, 0.1)
DELTA_RANGE = (-1.0, 1.0)
EPSILON_RANGE = (-math.pi, math.pi)
RADIUS_RANGE = (0.25, 0.5)
WIDTH_RANGE = (0.5, 1.0)
HEIGHT_RANGE = (0.5, 1.0)
ANGLE_RANGE = (-math.pi, math.pi)

MODULE_COUNT = 8
CIRCLE_SLOTS = range(0, 4)
RECTANGLE_SLOTS = range(4, 8)

# Fixed-point quantization used by the canonical byte layout: six decimal
# places, below Gaussian-mutation resolution but above float noise.
QUANT_SCALE = 10**6

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = 0xFFFFFFFFFFFFFFFF


def clamp(value: float, lo: float, hi: float) -> float:
    return lo if value < lo else hi if value > hi else value


def fnv1a_64(data: bytes) -> int:
    """FNV-1a 64-bit hash; stable across runs and platforms."""
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _U64
    return h


class RngStream:
    """Deterministic random stream owned by exactly one run.

    Wraps numpy's PCG64 bit generator. Identical seeds produce identical
    draw sequences on every platform. Per-run streams are derived as
    ``base_seed + run_index``.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def random(self) -> float:
        return float(self._gen.random())

    def uniform(self, lo: float, hi: float) -> float:
        return float(self._gen.uniform(lo, hi))

    def normal(self, sigma: float) -> float:
        return float(self._gen.normal(0.0, sigma))

    def randint(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        return int(self._gen.integers(0, n))


@dataclass(frozen=True)
class ControllerParams:
    """Sine-wave controller: amplitude * sin(frequency * t + phase) + offset."""

    alpha: float
    theta: float
    delta: float
    epsilon: float

    def __post_init__(self):
        _check_range("alpha", self.alpha, ALPHA_RANGE)
        _check_range("theta", self.theta, THETA_RANGE)
        _check_range("delta", self.delta, DELTA_RANGE)
        _check_range("epsilon", self.epsilon, EPSILON_RANGE)

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "theta": self.theta,
            "delta": self.delta,
            "epsilon": self.epsilon,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ControllerParams":
        return cls(obj["alpha"], obj["theta"], obj["delta"], obj["epsilon"])


def _check_range(name: str, value: float, rng: tuple[float, float]) -> None:
    if not (rng[0] <= value <= rng[1]):
        raise ValueError(f"{name}={value!r} outside [{rng[0]}, {rng[1]}]")


def controller_wave(c: ControllerParams, t: float) -> float:
    """Controller output at step t: alpha * sin(theta * t + delta) + epsilon."""
    return c.alpha * math.sin(c.theta * t + c.delta) + c.epsilon


class ModuleKind(str, Enum):
    CIRCLE = "circle"
    RECTANGLE = "rectangle"


@dataclass(frozen=True)
class Module:
    """One reusable body part: geometry, attachment angle, and controller."""

    kind: ModuleKind
    connection_angle: float
    controller: ControllerParams
    radius: float | None = None
    width: float | None = None
    height: float | None = None

    def __post_init__(self):
        _check_range("connection_angle", self.connection_angle, ANGLE_RANGE)
        if self.kind is ModuleKind.CIRCLE:
            if self.radius is None or self.width is not None or self.height is not None:
                raise ValueError("circle modules carry exactly a radius")
            _check_range("radius", self.radius, RADIUS_RANGE)
        else:
            if self.width is None or self.height is None or self.radius is not None:
                raise ValueError("rectangle modules carry exactly width and height")
            _check_range("width", self.width, WIDTH_RANGE)
            _check_range("height", self.height, HEIGHT_RANGE)

    def area(self) -> float:
        if self.kind is ModuleKind.CIRCLE:
            return math.pi * self.radius * self.radius
        return self.width * self.height

    def to_json(self) -> dict:
        obj: dict = {"kind": self.kind.value, "connection_angle": self.connection_angle}
        if self.kind is ModuleKind.CIRCLE:
            obj["radius"] = self.radius
        else:
            obj["width"] = self.width
            obj["height"] = self.height
        obj["controller"] = self.controller.to_json()
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "Module":
        kind = ModuleKind(obj["kind"])
        return cls(
            kind=kind,
            connection_angle=obj["connection_angle"],
            controller=ControllerParams.from_json(obj["controller"]),
            radius=obj.get("radius"),
            width=obj.get("width"),
            height=obj.get("height"),
        )


@dataclass(frozen=True)
class ModuleList:
    """The palette of eight modules: indices 0-3 circles, 4-7 rectangles."""

    modules: tuple[Module, ...]

    def __post_init__(self):
        if len(self.modules) != MODULE_COUNT:
            raise ValueError(f"module list must hold exactly {MODULE_COUNT} modules")
        for i in CIRCLE_SLOTS:
            if self.modules[i].kind is not ModuleKind.CIRCLE:
                raise ValueError(f"module {i} must be a circle")
        for i in RECTANGLE_SLOTS:
            if self.modules[i].kind is not ModuleKind.RECTANGLE:
                raise ValueError(f"module {i} must be a rectangle")

    def __getitem__(self, index: int) -> Module:
        return self.modules[index]

    def to_json(self) -> list[dict]:
        return [m.to_json() for m in self.modules]

    @classmethod
    def from_json(cls, obj: Sequence[dict]) -> "ModuleList":
        return cls(tuple(Module.from_json(m) for m in obj))


def random_controller(rng: RngStream) -> ControllerParams:
    return ControllerParams(
        alpha=rng.uniform(*ALPHA_RANGE),
        theta=rng.uniform(*THETA_RANGE),
        delta=rng.uniform(*DELTA_RANGE),
        epsilon=rng.uniform(*EPSILON_RANGE),
    )


def random_module_list(rng: RngStream) -> ModuleList:
    """Fresh palette: geometry, angles, and controllers uniform in range."""
    modules = []
    for _ in CIRCLE_SLOTS:
        modules.append(
            Module(
                kind=ModuleKind.CIRCLE,
                radius=rng.uniform(*RADIUS_RANGE),
                connection_angle=rng.uniform(*ANGLE_RANGE),
                controller=random_controller(rng),
            )
        )
    for _ in RECTANGLE_SLOTS:
        modules.append(
            Module(
                kind=ModuleKind.RECTANGLE,
                width=rng.uniform(*WIDTH_RANGE),
                height=rng.uniform(*HEIGHT_RANGE),
                connection_angle=rng.uniform(*ANGLE_RANGE),
                controller=random_controller(rng),
            )
        )
    return ModuleList(tuple(modules))


@dataclass(frozen=True)
class PhenotypeNode:
    """One placed module in an expressed robot.

    ``module`` is resolved at expression time: geometry comes from the
    palette entry, the controller may be overridden by the encoding.
    The root carries site 0 by convention.
    """

    node_index: int
    module_index: int
    parent_index: int | None
    site: int
    depth: int
    module: Module

    @property
    def controller(self) -> ControllerParams:
        return self.module.controller


@dataclass(frozen=True)
class PhenotypeTree:
    """Directed tree of placed modules; the unit of evaluation and hashing.

    Construction does not enforce the structural invariants; run
    ``validate_tree`` to collect violations as data.
    """

    nodes: tuple[PhenotypeNode, ...]

    def __len__(self) -> int:
        return len(self.nodes)

    def children_by_site(self) -> dict[int, dict[int, int]]:
        """parent index -> {site -> child index} (first claimant wins duplicates)."""
        children: dict[int, dict[int, int]] = {n.node_index: {} for n in self.nodes}
        for n in self.nodes:
            if n.parent_index is not None and n.parent_index in children:
                children[n.parent_index].setdefault(n.site, n.node_index)
        return children

    def to_json(self) -> dict:
        nodes = []
        for n in self.nodes:
            obj = {
                "index": n.node_index,
                "module_index": n.module_index,
                "parent": n.parent_index,
                "site": n.site,
                "depth": n.depth,
            }
            obj.update(n.module.to_json())
            nodes.append(obj)
        return {"schema": 1, "nodes": nodes}

    @classmethod
    def from_json(cls, obj: dict) -> "PhenotypeTree":
        nodes = []
        for item in obj["nodes"]:
            nodes.append(
                PhenotypeNode(
                    node_index=item["index"],
                    module_index=item["module_index"],
                    parent_index=item["parent"],
                    site=item["site"],
                    depth=item["depth"],
                    module=Module.from_json(item),
                )
            )
        return cls(tuple(nodes))


@dataclass(frozen=True)
class Violation:
    """One violated tree invariant; violations are data, not exceptions."""

    code: str
    detail: str

    def __str__(self) -> str:
        return f"{self.code}: {self.detail}"


def validate_tree(tree: PhenotypeTree) -> list[Violation]:
    """Check every structural invariant and return all violations found."""
    violations: list[Violation] = []
    nodes = tree.nodes
    if not nodes:
        return [Violation("NOT_A_TREE", "tree has no nodes")]

    index_to_node = {n.node_index: n for n in nodes}
    if len(index_to_node) != len(nodes):
        violations.append(Violation("NOT_A_TREE", "duplicate node indices"))

    if len(nodes) > MAX_NODES:
        violations.append(
            Violation("SIZE_EXCEEDED", f"{len(nodes)} nodes (max {MAX_NODES})")
        )

    roots = [n for n in nodes if n.parent_index is None]
    if len(roots) != 1:
        violations.append(Violation("NOT_A_TREE", f"{len(roots)} roots (need exactly 1)"))

    children_count: dict[int, int] = {}
    seen_sites: set[tuple[int, int]] = set()
    for n in nodes:
        if not (0 <= n.module_index < MODULE_COUNT):
            violations.append(
                Violation("BAD_MODULE_INDEX", f"node {n.node_index}: {n.module_index}")
            )
        if n.site not in SITES:
            violations.append(Violation("BAD_SITE", f"node {n.node_index}: site {n.site}"))
        if n.parent_index is None:
            if n.depth != 0:
                violations.append(
                    Violation("BAD_DEPTH", f"root {n.node_index} has depth {n.depth}")
                )
            continue
        parent = index_to_node.get(n.parent_index)
        if parent is None or n.parent_index == n.node_index:
            violations.append(
                Violation("NOT_A_TREE", f"node {n.node_index}: bad parent {n.parent_index}")
            )
            continue
        children_count[n.parent_index] = children_count.get(n.parent_index, 0) + 1
        key = (n.parent_index, n.site)
        if key in seen_sites:
            violations.append(
                Violation("SITE_CONFLICT", f"parent {n.parent_index} site {n.site} reused")
            )
        seen_sites.add(key)
        if n.depth != parent.depth + 1:
            violations.append(
                Violation(
                    "BAD_DEPTH",
                    f"node {n.node_index}: depth {n.depth}, parent depth {parent.depth}",
                )
            )

    for parent_index, count in children_count.items():
        if count > MAX_CHILDREN:
            violations.append(
                Violation("CHILDREN_EXCEEDED", f"node {parent_index} has {count} children")
            )

    max_depth = max(n.depth for n in nodes)
    if max_depth >= MAX_DEPTH_LEVELS:
        violations.append(
            Violation("DEPTH_EXCEEDED", f"depth {max_depth} (max level {MAX_DEPTH_LEVELS - 1})")
        )

    # Reachability from the root proves there are no detached cycles.
    if len(roots) == 1 and not any(v.code == "NOT_A_TREE" for v in violations):
        reached: set[int] = set()
        stack = [roots[0].node_index]
        children: dict[int, list[int]] = {n.node_index: [] for n in nodes}
        for n in nodes:
            if n.parent_index is not None:
                children[n.parent_index].append(n.node_index)
        while stack:
            i = stack.pop()
            if i in reached:
                continue
            reached.add(i)
            stack.extend(children[i])
        if len(reached) != len(nodes):
            violations.append(
                Violation("NOT_A_TREE", f"{len(nodes) - len(reached)} nodes unreachable from root")
            )

    return violations


def quantize(value: float) -> int:
    """Fixed-point value at six decimal places."""
    return int(round(value * QUANT_SCALE))


def canonical_bytes(tree: PhenotypeTree, include_controllers: bool) -> bytes:
    """Deterministic byte serialization of a valid tree.

    Layout (documented bit-exactly so alternate implementations hash
    identically): nodes in preorder, children visited in site order
    0,1,2. Per node:

      depth      1 unsigned byte
      site       1 unsigned byte (root emits 0)
      kind       1 byte: 0x00 circle, 0x01 rectangle
      geometry   big-endian signed 64-bit fixed-point (x * 10^6, rounded):
                 circle    -> radius, connection_angle
                 rectangle -> width, height, connection_angle
      controller iff include_controllers, same fixed-point encoding:
                 alpha, theta, delta, epsilon

    The per-node depth byte makes the layout injective: a preorder
    node sequence plus depths reconstructs the tree shape exactly.
    """
    violations = validate_tree(tree)
    if violations:
        raise InvalidTreeError([str(v) for v in violations])

    index_to_node = {n.node_index: n for n in tree.nodes}
    children = tree.children_by_site()
    root = next(n for n in tree.nodes if n.parent_index is None)

    out = bytearray()
    stack = [root.node_index]
    while stack:
        n = index_to_node[stack.pop()]
        kind_byte = 0 if n.module.kind is ModuleKind.CIRCLE else 1
        out += struct.pack(">BBB", n.depth, n.site, kind_byte)
        if n.module.kind is ModuleKind.CIRCLE:
            geometry = (n.module.radius, n.module.connection_angle)
        else:
            geometry = (n.module.width, n.module.height, n.module.connection_angle)
        for value in geometry:
            out += struct.pack(">q", quantize(value))
        if include_controllers:
            c = n.module.controller
            for value in (c.alpha, c.theta, c.delta, c.epsilon):
                out += struct.pack(">q", quantize(value))
        # Push in reverse site order so site 0 pops first (preorder).
        for site in sorted(children[n.node_index], reverse=True):
            stack.append(children[n.node_index][site])
    return bytes(out)


def hash_phenotype(tree: PhenotypeTree) -> int:
    """64-bit id covering geometry and controllers."""
    return fnv1a_64(canonical_bytes(tree, include_controllers=True))


def hash_design(tree: PhenotypeTree) -> int:
    """64-bit id covering geometry only; controller changes do not move it."""
    return fnv1a_64(canonical_bytes(tree, include_controllers=False))


def canonical_json_bytes(obj) -> bytes:
    """Stable JSON encoding (sorted keys, no whitespace) for hashing."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")
