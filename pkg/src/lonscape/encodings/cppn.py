"""CPPN encoding: a feed-forward pattern network queried per connection site."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from enum import Enum

from ..core import (
    ALPHA_RANGE,
    DELTA_RANGE,
    EPSILON_RANGE,
    MAX_DEPTH_LEVELS,
    MAX_NODES,
    MODULE_COUNT,
    SITES,
    THETA_RANGE,
    ControllerParams,
    ModuleList,
    PhenotypeNode,
    PhenotypeTree,
    RngStream,
    clamp,
    random_module_list,
)
from ..errors import CycleDetectedError, InvalidGenotypeError
from .common import MutationRates, mutate_module_geometry

N_INPUTS = 3
N_OUTPUTS = 6
WEIGHT_RANGE = (-3.0, 3.0)


class Activation(str, Enum):
    GAUSSIAN = "gaussian"
    SINE = "sine"
    SIGMOID = "sigmoid"
    IDENTITY = "identity"


ACTIVATION_ORDER = (
    Activation.GAUSSIAN,
    Activation.SINE,
    Activation.SIGMOID,
    Activation.IDENTITY,
)


class NodeRole(str, Enum):
    INPUT = "input"
    HIDDEN = "hidden"
    OUTPUT = "output"


def sigmoid(x: float) -> float:
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def apply_activation(kind: Activation, x: float) -> float:
    if kind is Activation.GAUSSIAN:
        return math.exp(-(x * x))
    if kind is Activation.SINE:
        return math.sin(x)
    if kind is Activation.SIGMOID:
        return sigmoid(x)
    return x


@dataclass(frozen=True)
class CppnNode:
    id: int
    role: NodeRole
    activation: Activation
    bias: float


@dataclass(frozen=True)
class CppnConnection:
    src: int
    dst: int
    weight: float
    enabled: bool


@dataclass(frozen=True)
class CppnGenotype:
    nodes: tuple[CppnNode, ...]
    connections: tuple[CppnConnection, ...]
    module_list: ModuleList

    def __post_init__(self):
        ids = {n.id for n in self.nodes}
        if len(ids) != len(self.nodes):
            raise InvalidGenotypeError("duplicate CPPN node ids")
        n_in = sum(1 for n in self.nodes if n.role is NodeRole.INPUT)
        n_out = sum(1 for n in self.nodes if n.role is NodeRole.OUTPUT)
        if n_in != N_INPUTS or n_out != N_OUTPUTS:
            raise InvalidGenotypeError(
                f"need {N_INPUTS} inputs and {N_OUTPUTS} outputs, got {n_in}/{n_out}"
            )
        for c in self.connections:
            if c.src not in ids or c.dst not in ids:
                raise InvalidGenotypeError(f"connection {c.src}->{c.dst} references unknown node")
        if _has_enabled_cycle(self):
            raise InvalidGenotypeError("enabled connections contain a cycle")

    def inputs(self) -> list[CppnNode]:
        return [n for n in self.nodes if n.role is NodeRole.INPUT]

    def outputs(self) -> list[CppnNode]:
        return [n for n in self.nodes if n.role is NodeRole.OUTPUT]

    def hidden(self) -> list[CppnNode]:
        return [n for n in self.nodes if n.role is NodeRole.HIDDEN]

    def to_json(self) -> dict:
        return {
            "schema": 1,
            "encoding": "cppn",
            "nodes": [
                {"id": n.id, "role": n.role.value, "activation": n.activation.value, "bias": n.bias}
                for n in self.nodes
            ],
            "connections": [
                {"from": c.src, "to": c.dst, "weight": c.weight, "enabled": c.enabled}
                for c in self.connections
            ],
            "module_list": self.module_list.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CppnGenotype":
        nodes = tuple(
            CppnNode(n["id"], NodeRole(n["role"]), Activation(n["activation"]), n["bias"])
            for n in obj["nodes"]
        )
        connections = tuple(
            CppnConnection(c["from"], c["to"], c["weight"], c["enabled"])
            for c in obj["connections"]
        )
        return cls(nodes, connections, ModuleList.from_json(obj["module_list"]))


def _enabled_adjacency(g: CppnGenotype) -> dict[int, list[int]]:
    adj: dict[int, list[int]] = {n.id: [] for n in g.nodes}
    for c in g.connections:
        if c.enabled:
            adj[c.src].append(c.dst)
    return adj


def _has_enabled_cycle(g: CppnGenotype) -> bool:
    adj = _enabled_adjacency(g)
    indegree = {n.id: 0 for n in g.nodes}
    for src, dsts in adj.items():
        for d in dsts:
            indegree[d] += 1
    ready = [i for i, d in indegree.items() if d == 0]
    seen = 0
    while ready:
        i = ready.pop()
        seen += 1
        for d in adj[i]:
            indegree[d] -= 1
            if indegree[d] == 0:
                ready.append(d)
    return seen != len(g.nodes)


def _reaches(adj: dict[int, list[int]], start: int, goal: int) -> bool:
    stack = [start]
    seen = {start}
    while stack:
        i = stack.pop()
        if i == goal:
            return True
        for d in adj[i]:
            if d not in seen:
                seen.add(d)
                stack.append(d)
    return False


class CompiledCppn:
    """Topological evaluation plan, built once and queried many times.

    Expression queries the same network for every connection site, so the
    order and incoming-edge lists are precomputed here.
    """

    def __init__(self, g: CppnGenotype):
        adj = _enabled_adjacency(g)
        indegree = {n.id: 0 for n in g.nodes}
        incoming: dict[int, list[tuple[int, float]]] = {n.id: [] for n in g.nodes}
        for c in g.connections:
            if c.enabled:
                indegree[c.dst] += 1
                incoming[c.dst].append((c.src, c.weight))
        by_id = {n.id: n for n in g.nodes}
        ready = [i for i, d in indegree.items() if d == 0]
        order: list[int] = []
        while ready:
            i = ready.pop()
            order.append(i)
            for d in adj[i]:
                indegree[d] -= 1
                if indegree[d] == 0:
                    ready.append(d)
        if len(order) != len(g.nodes):
            raise CycleDetectedError("enabled connections contain a cycle")
        self._input_ids = [n.id for n in g.inputs()]
        self._output_ids = [n.id for n in g.outputs()]
        # (id, activation, bias, incoming) for everything downstream of inputs
        self._steps = [
            (i, by_id[i].activation, by_id[i].bias, incoming[i])
            for i in order
            if by_id[i].role is not NodeRole.INPUT
        ]

    def forward(self, inputs: tuple[float, float, float]) -> list[float]:
        values: dict[int, float] = dict(zip(self._input_ids, inputs))
        for node_id, activation, bias, incoming in self._steps:
            total = bias
            for src, weight in incoming:
                total += weight * values[src]
            values[node_id] = apply_activation(activation, total)
        return [values[i] for i in self._output_ids]


def cppn_forward(g: CppnGenotype, inputs: tuple[float, float, float]) -> list[float]:
    """Evaluate the network in topological order over enabled connections.

    Input nodes pass their input value through unchanged; every other node
    computes activation(bias + sum of enabled weighted inputs).
    """
    return CompiledCppn(g).forward((float(inputs[0]), float(inputs[1]), float(inputs[2])))


def _controller_from_outputs(outputs: list[float]) -> ControllerParams:
    """Squash raw outputs o2..o5 onto the controller parameter ranges."""
    spans = (ALPHA_RANGE, THETA_RANGE, DELTA_RANGE, EPSILON_RANGE)
    params = []
    for raw, (lo, hi) in zip(outputs[2:6], spans):
        s = sigmoid(raw)
        params.append(clamp(lo + (hi - lo) * s, lo, hi))
    return ControllerParams(*params)


def _module_index_from_output(raw: float) -> int:
    return min(max(int(math.floor(sigmoid(raw) * MODULE_COUNT)), 0), MODULE_COUNT - 1)


def express_cppn(g: CppnGenotype) -> PhenotypeTree:
    """Query the network per open site, breadth-first, against the caps.

    The root always exists: it takes module 0's geometry and the controller
    from a query at (depth 0, parent module 0, angle 0). For a site k on a
    parent p the query inputs are (child depth, p's module index, nominal
    site angle (k-1)*pi/2 plus p's connection angle); output 0 gates the
    attachment, output 1 selects the module, outputs 2..5 set the controller.
    """
    net = CompiledCppn(g)
    root_outputs = net.forward((0.0, 0.0, 0.0))
    root_module = dataclasses.replace(
        g.module_list[0], controller=_controller_from_outputs(root_outputs)
    )
    nodes = [
        PhenotypeNode(
            node_index=0,
            module_index=0,
            parent_index=None,
            site=0,
            depth=0,
            module=root_module,
        )
    ]
    queue = [0]
    cursor = 0
    full = False
    while cursor < len(queue) and not full:
        parent = nodes[queue[cursor]]
        cursor += 1
        depth = parent.depth + 1
        if depth >= MAX_DEPTH_LEVELS:
            continue
        for site in SITES:
            angle = (site - 1) * (math.pi / 2.0) + parent.module.connection_angle
            outputs = net.forward((float(depth), float(parent.module_index), angle))
            if outputs[0] <= 0.0:
                continue
            if len(nodes) >= MAX_NODES:
                full = True
                break
            module_index = _module_index_from_output(outputs[1])
            module = dataclasses.replace(
                g.module_list[module_index], controller=_controller_from_outputs(outputs)
            )
            index = len(nodes)
            nodes.append(
                PhenotypeNode(
                    node_index=index,
                    module_index=module_index,
                    parent_index=parent.node_index,
                    site=site,
                    depth=depth,
                    module=module,
                )
            )
            queue.append(index)
    return PhenotypeTree(tuple(nodes))


def random_cppn(rng: RngStream) -> CppnGenotype:
    """Inputs fully connected to sigmoid outputs; no hidden nodes."""
    module_list = random_module_list(rng)
    nodes = [CppnNode(i, NodeRole.INPUT, Activation.IDENTITY, 0.0) for i in range(N_INPUTS)]
    for i in range(N_OUTPUTS):
        nodes.append(
            CppnNode(N_INPUTS + i, NodeRole.OUTPUT, Activation.SIGMOID, rng.uniform(-1.0, 1.0))
        )
    connections = []
    for src in range(N_INPUTS):
        for dst in range(N_INPUTS, N_INPUTS + N_OUTPUTS):
            connections.append(CppnConnection(src, dst, rng.uniform(-1.0, 1.0), True))
    return CppnGenotype(tuple(nodes), tuple(connections), module_list)


def add_connection_op(
    nodes: list[CppnNode], connections: list[CppnConnection], rng: RngStream
) -> None:
    """Connect a random feed-forward pair; no-op when no acyclic pair is left."""
    existing = {(c.src, c.dst) for c in connections}
    adj: dict[int, list[int]] = {n.id: [] for n in nodes}
    for c in connections:
        if c.enabled:
            adj[c.src].append(c.dst)
    candidates = [
        (u.id, v.id)
        for u in nodes
        if u.role is not NodeRole.OUTPUT
        for v in nodes
        if v.role is not NodeRole.INPUT
        and u.id != v.id
        and (u.id, v.id) not in existing
        and not _reaches(adj, v.id, u.id)
    ]
    if candidates:
        src, dst = candidates[rng.randint(len(candidates))]
        connections.append(CppnConnection(src, dst, rng.uniform(-1.0, 1.0), True))


def delete_connection_op(
    nodes: list[CppnNode], connections: list[CppnConnection], rng: RngStream
) -> None:
    if connections:
        connections.pop(rng.randint(len(connections)))


def add_node_op(
    nodes: list[CppnNode], connections: list[CppnConnection], rng: RngStream
) -> None:
    """Split a random enabled connection: disable it, bridge through a new
    hidden node with weight 1 in and the old weight out."""
    enabled = [i for i, c in enumerate(connections) if c.enabled]
    if not enabled:
        return
    slot = enabled[rng.randint(len(enabled))]
    old = connections[slot]
    new_id = max(n.id for n in nodes) + 1
    activation = ACTIVATION_ORDER[rng.randint(len(ACTIVATION_ORDER))]
    nodes.append(CppnNode(new_id, NodeRole.HIDDEN, activation, rng.uniform(-1.0, 1.0)))
    connections[slot] = dataclasses.replace(old, enabled=False)
    connections.append(CppnConnection(old.src, new_id, 1.0, True))
    connections.append(CppnConnection(new_id, old.dst, old.weight, True))


def delete_node_op(
    nodes: list[CppnNode], connections: list[CppnConnection], rng: RngStream
) -> None:
    hidden = [n for n in nodes if n.role is NodeRole.HIDDEN]
    if not hidden:
        return
    victim = hidden[rng.randint(len(hidden))]
    nodes[:] = [n for n in nodes if n.id != victim.id]
    connections[:] = [c for c in connections if victim.id not in (c.src, c.dst)]


def replace_bias_op(
    nodes: list[CppnNode], connections: list[CppnConnection], rng: RngStream
) -> None:
    biased = [i for i, n in enumerate(nodes) if n.role is not NodeRole.INPUT]
    if biased:
        slot = biased[rng.randint(len(biased))]
        nodes[slot] = dataclasses.replace(nodes[slot], bias=rng.uniform(-1.0, 1.0))


STRUCTURAL_OPS = (
    add_connection_op,
    delete_connection_op,
    add_node_op,
    delete_node_op,
    replace_bias_op,
)


def mutate_cppn(g: CppnGenotype, rates: MutationRates, rng: RngStream) -> CppnGenotype:
    """NEAT-style structural mutation plus weight and palette perturbation.

    The five structural operations fire independently at the design rate,
    in the fixed order add connection, delete connection, add node, delete
    node, replace bias; operations that cannot apply are no-ops. Afterwards
    each weight is Gaussian-perturbed at the design rate and clamped, and
    the palette geometry is perturbed as in the other encodings.
    """
    nodes = list(g.nodes)
    connections = list(g.connections)

    for op in STRUCTURAL_OPS:
        if rng.random() < rates.design_rate:
            op(nodes, connections, rng)

    for i, c in enumerate(connections):
        if rng.random() < rates.design_rate:
            weight = clamp(c.weight + rng.normal(rates.gaussian_sigma), *WEIGHT_RANGE)
            connections[i] = dataclasses.replace(c, weight=weight)

    module_list = mutate_module_geometry(g.module_list, rates, rng)
    return CppnGenotype(tuple(nodes), tuple(connections), module_list)
