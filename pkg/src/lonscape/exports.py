"""Graph and table exports: GraphML, DOT, and CSV views of a LON.

Visual attributes follow the three-level fitness colouring: pale purple
below the pooled first quartile, light purple inside the interquartile
range, dark purple at or above the third quartile. Node size is
proportional to fitness. Layout itself is left to external graph tools.
"""

from __future__ import annotations

import csv
from pathlib import Path

import networkx as nx

from .lon import Lon, QuartileClass

QUARTILE_COLORS = {
    QuartileClass.LOW: "#e8dff2",
    QuartileClass.MID: "#b39ddb",
    QuartileClass.HIGH: "#4a148c",
    None: "#c0c0c0",
}

# DOT node width in inches per fitness unit; 25 fitness = 1 inch.
SIZE_PER_FITNESS = 0.04


def node_size(fitness_value: float) -> float:
    return round(SIZE_PER_FITNESS * fitness_value, 6)


def _node_attributes(lon: Lon) -> list[tuple[int, dict]]:
    rows = []
    for node_id in sorted(lon.nodes):
        n = lon.nodes[node_id]
        rows.append(
            (
                node_id,
                {
                    "fitness": n.fitness.value,
                    "killed": n.fitness.killed,
                    "quartile_class": n.quartile_class.value if n.quartile_class else "",
                    "color": QUARTILE_COLORS[n.quartile_class],
                    "size": node_size(n.fitness.value),
                    "runs": ",".join(str(r) for r in sorted(n.runs)),
                    "phenotype_hash": f"{n.phenotype_hash:016x}",
                    "design_hash": f"{n.design_hash:016x}",
                },
            )
        )
    return rows


def export_graphml(lon: Lon, path: str | Path) -> None:
    graph = nx.DiGraph()
    for node_id, attrs in _node_attributes(lon):
        graph.add_node(f"{node_id:016x}", **attrs)
    for (src, dst), weight in sorted(lon.edges.items()):
        graph.add_edge(f"{src:016x}", f"{dst:016x}", weight=weight)
    nx.write_graphml(graph, str(path))


def export_dot(lon: Lon, path: str | Path) -> None:
    lines = ["digraph lon {", "  node [style=filled, shape=circle, fixedsize=true];"]
    for node_id, attrs in _node_attributes(lon):
        width = max(attrs["size"], 0.05)
        lines.append(
            f'  "{node_id:016x}" [label="", fillcolor="{attrs["color"]}", '
            f'width={width}, fitness={attrs["fitness"]!r}, '
            f'quartile="{attrs["quartile_class"]}", runs="{attrs["runs"]}"];'
        )
    for (src, dst), weight in sorted(lon.edges.items()):
        lines.append(f'  "{src:016x}" -> "{dst:016x}" [weight={weight}];')
    lines.append("}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def export_csv(lon: Lon, nodes_path: str | Path, edges_path: str | Path) -> None:
    with open(nodes_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            [
                "id",
                "fitness",
                "killed",
                "quartile_class",
                "color",
                "size",
                "runs",
                "phenotype_hash",
                "design_hash",
            ]
        )
        for node_id, attrs in _node_attributes(lon):
            writer.writerow(
                [
                    f"{node_id:016x}",
                    repr(attrs["fitness"]),
                    attrs["killed"],
                    attrs["quartile_class"],
                    attrs["color"],
                    repr(attrs["size"]),
                    attrs["runs"],
                    attrs["phenotype_hash"],
                    attrs["design_hash"],
                ]
            )
    with open(edges_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["src", "dst", "weight"])
        for (src, dst), weight in sorted(lon.edges.items()):
            writer.writerow([f"{src:016x}", f"{dst:016x}", weight])
