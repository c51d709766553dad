"""Shared builders for hand-specified phenotype trees and palettes."""

from __future__ import annotations

import pytest

from lonscape.core import (
    ControllerParams,
    Module,
    ModuleKind,
    ModuleList,
    PhenotypeNode,
    PhenotypeTree,
    RngStream,
    random_module_list,
)


def make_controller(alpha=0.5, theta=0.05, delta=0.1, epsilon=0.2) -> ControllerParams:
    return ControllerParams(alpha=alpha, theta=theta, delta=delta, epsilon=epsilon)


def make_circle(radius=0.3, angle=0.0, controller=None) -> Module:
    return Module(
        kind=ModuleKind.CIRCLE,
        radius=radius,
        connection_angle=angle,
        controller=controller or make_controller(),
    )


def make_rect(width=0.8, height=0.6, angle=0.0, controller=None) -> Module:
    return Module(
        kind=ModuleKind.RECTANGLE,
        width=width,
        height=height,
        connection_angle=angle,
        controller=controller or make_controller(),
    )


def single_node_tree(module=None) -> PhenotypeTree:
    node = PhenotypeNode(
        node_index=0,
        module_index=0,
        parent_index=None,
        site=0,
        depth=0,
        module=module or make_circle(),
    )
    return PhenotypeTree((node,))


def tree_from_edges(parents: list[tuple[int | None, int]], modules=None) -> PhenotypeTree:
    """Build a tree from (parent, site) pairs, one per node in index order."""
    nodes = []
    depths: dict[int, int] = {}
    for index, (parent, site) in enumerate(parents):
        depth = 0 if parent is None else depths[parent] + 1
        depths[index] = depth
        module = modules[index] if modules else make_circle()
        nodes.append(
            PhenotypeNode(
                node_index=index,
                module_index=0,
                parent_index=parent,
                site=site,
                depth=depth,
                module=module,
            )
        )
    return PhenotypeTree(tuple(nodes))


def random_valid_tree(rng: RngStream, max_nodes: int = 12) -> PhenotypeTree:
    """Grow a random valid tree by attaching at random open sites."""
    palette = random_module_list(rng)
    target = 1 + rng.randint(max_nodes)
    nodes = [
        PhenotypeNode(
            node_index=0,
            module_index=rng.randint(8),
            parent_index=None,
            site=0,
            depth=0,
            module=palette[rng.randint(8)],
        )
    ]
    open_sites = [(0, s) for s in (0, 1, 2)]
    while open_sites and len(nodes) < min(target, 40):
        parent, site = open_sites.pop(rng.randint(len(open_sites)))
        depth = nodes[parent].depth + 1
        if depth > 6:
            continue
        module_index = rng.randint(8)
        index = len(nodes)
        nodes.append(
            PhenotypeNode(
                node_index=index,
                module_index=module_index,
                parent_index=parent,
                site=site,
                depth=depth,
                module=palette[module_index],
            )
        )
        open_sites.extend((index, s) for s in (0, 1, 2))
    return PhenotypeTree(tuple(nodes))


@pytest.fixture
def rng() -> RngStream:
    return RngStream(1234)
