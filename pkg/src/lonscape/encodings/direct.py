"""Direct encoding: the genotype is the module tree itself."""

from __future__ import annotations

import dataclasses
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
    validate_tree,
)
from ..errors import InvalidGenotypeError
from .common import MutationRates, mutate_module_geometry


@dataclass(frozen=True)
class DirectNode:
    index: int
    module_index: int
    parent: int | None
    site: int


@dataclass(frozen=True)
class DirectGenotype:
    nodes: tuple[DirectNode, ...]
    module_list: ModuleList

    def __post_init__(self):
        indices = {n.index for n in self.nodes}
        if len(indices) != len(self.nodes):
            raise InvalidGenotypeError("duplicate node indices")
        for n in self.nodes:
            if not (0 <= n.module_index < MODULE_COUNT):
                raise InvalidGenotypeError(f"node {n.index}: module index {n.module_index}")
            if n.site not in SITES:
                raise InvalidGenotypeError(f"node {n.index}: site {n.site}")
            if n.parent is not None and n.parent not in indices:
                raise InvalidGenotypeError(f"node {n.index}: missing parent {n.parent}")

    def to_json(self) -> dict:
        return {
            "schema": 1,
            "encoding": "direct",
            "nodes": [
                {"index": n.index, "module": n.module_index, "parent": n.parent, "site": n.site}
                for n in self.nodes
            ],
            "module_list": self.module_list.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DirectGenotype":
        nodes = tuple(
            DirectNode(n["index"], n["module"], n["parent"], n["site"]) for n in obj["nodes"]
        )
        return cls(nodes, ModuleList.from_json(obj["module_list"]))


def express_direct(g: DirectGenotype) -> PhenotypeTree:
    """One-to-one copy: geometry and controller resolved from the palette."""
    by_index = {n.index: n for n in g.nodes}
    depths: dict[int, int] = {}

    def depth_of(i: int) -> int:
        if i in depths:
            return depths[i]
        chain = []
        cur = i
        while cur not in depths:
            chain.append(cur)
            parent = by_index[cur].parent
            if parent is None:
                depths[cur] = 0
                break
            if parent in chain:
                raise InvalidGenotypeError(f"parent cycle through node {cur}")
            cur = parent
        for node in reversed(chain):
            parent = by_index[node].parent
            if parent is not None:
                depths[node] = depths[parent] + 1
        return depths[i]

    nodes = tuple(
        PhenotypeNode(
            node_index=n.index,
            module_index=n.module_index,
            parent_index=n.parent,
            site=n.site,
            depth=depth_of(n.index),
            module=g.module_list[n.module_index],
        )
        for n in g.nodes
    )
    tree = PhenotypeTree(nodes)
    violations = validate_tree(tree)
    if violations:
        raise InvalidGenotypeError("genotype expresses an invalid tree: " + str(violations))
    return tree


def random_direct(rng: RngStream) -> DirectGenotype:
    """Root plus each site filled independently with probability 0.5."""
    module_list = random_module_list(rng)
    nodes = [DirectNode(index=0, module_index=rng.randint(MODULE_COUNT), parent=None, site=0)]
    for site in SITES:
        if rng.random() < 0.5:
            nodes.append(
                DirectNode(
                    index=len(nodes),
                    module_index=rng.randint(MODULE_COUNT),
                    parent=0,
                    site=site,
                )
            )
    return DirectGenotype(tuple(nodes), module_list)


def mutate_direct(g: DirectGenotype, rates: MutationRates, rng: RngStream) -> DirectGenotype:
    """Subtree removals, site additions, then palette geometry perturbation.

    Removals fire at half the design rate (a removed node takes its whole
    subtree with it). Additions are decided over the open sites left after
    removal; cap-violating additions are skipped.
    """
    by_index = {n.index: n for n in g.nodes}
    children: dict[int, list[DirectNode]] = {n.index: [] for n in g.nodes}
    root = None
    for n in g.nodes:
        if n.parent is None:
            root = n
        else:
            children[n.parent].append(n)

    removal_seeds = [
        n.index
        for n in g.nodes
        if n.parent is not None and rng.random() < rates.design_rate / 2.0
    ]
    removed: set[int] = set()
    for seed in removal_seeds:
        stack = [seed]
        while stack:
            i = stack.pop()
            if i in removed:
                continue
            removed.add(i)
            stack.extend(c.index for c in children[i])

    kept = [n for n in g.nodes if n.index not in removed]
    depths: dict[int, int] = {root.index: 0}
    order = [root]
    frontier = [root.index]
    kept_children: dict[int, dict[int, DirectNode]] = {n.index: {} for n in kept}
    for n in kept:
        if n.parent is not None:
            kept_children[n.parent][n.site] = n
    while frontier:
        nxt = []
        for p in frontier:
            for site in SITES:
                child = kept_children[p].get(site)
                if child is not None:
                    depths[child.index] = depths[p] + 1
                    order.append(child)
                    nxt.append(child.index)
        frontier = nxt

    # Additions over the open sites of the post-removal tree, in
    # breadth-first (parent, site) order; new sites are not re-examined.
    new_nodes: list[tuple[int, int, int]] = []  # (parent old index, site, module index)
    count = len(order)
    for n in order:
        if depths[n.index] + 1 >= MAX_DEPTH_LEVELS:
            continue
        for site in SITES:
            if site in kept_children[n.index]:
                continue
            if rng.random() < rates.design_rate:
                module_index = rng.randint(MODULE_COUNT)
                if count < MAX_NODES:
                    new_nodes.append((n.index, site, module_index))
                    count += 1

    renumber = {n.index: i for i, n in enumerate(order)}
    rebuilt = [
        DirectNode(
            index=renumber[n.index],
            module_index=n.module_index,
            parent=None if n.parent is None else renumber[n.parent],
            site=n.site,
        )
        for n in order
    ]
    for parent_old, site, module_index in new_nodes:
        rebuilt.append(
            DirectNode(
                index=len(rebuilt),
                module_index=module_index,
                parent=renumber[parent_old],
                site=site,
            )
        )

    module_list = mutate_module_geometry(g.module_list, rates, rng)
    return DirectGenotype(tuple(rebuilt), module_list)
