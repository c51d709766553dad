"""Parsing of phenotype JSON (schema 1) into plain module records.

The bridge deliberately does not import the sampling toolkit; the JSON
schema on the wire is the only contract between the two sides.
"""

from __future__ import annotations

from dataclasses import dataclass

PHENOTYPE_SCHEMA = 1


class PhenotypeFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Controller:
    alpha: float
    theta: float
    delta: float
    epsilon: float


@dataclass(frozen=True)
class PlacedModule:
    index: int
    module_index: int
    parent: int | None
    site: int
    depth: int
    kind: str
    controller: Controller
    radius: float | None = None
    width: float | None = None
    height: float | None = None


@dataclass(frozen=True)
class Phenotype:
    modules: tuple[PlacedModule, ...]


def parse_phenotype(obj: dict) -> Phenotype:
    if not isinstance(obj, dict):
        raise PhenotypeFormatError("phenotype must be an object")
    if obj.get("schema") != PHENOTYPE_SCHEMA:
        raise PhenotypeFormatError(f"unsupported phenotype schema {obj.get('schema')!r}")
    nodes = obj.get("nodes")
    if not isinstance(nodes, list) or not nodes:
        raise PhenotypeFormatError("phenotype needs a non-empty node list")
    modules = []
    for item in nodes:
        try:
            controller = Controller(
                alpha=float(item["controller"]["alpha"]),
                theta=float(item["controller"]["theta"]),
                delta=float(item["controller"]["delta"]),
                epsilon=float(item["controller"]["epsilon"]),
            )
            kind = item["kind"]
            if kind not in ("circle", "rectangle"):
                raise PhenotypeFormatError(f"unknown module kind {kind!r}")
            modules.append(
                PlacedModule(
                    index=int(item["index"]),
                    module_index=int(item["module_index"]),
                    parent=None if item["parent"] is None else int(item["parent"]),
                    site=int(item["site"]),
                    depth=int(item["depth"]),
                    kind=kind,
                    controller=controller,
                    radius=float(item["radius"]) if kind == "circle" else None,
                    width=float(item["width"]) if kind == "rectangle" else None,
                    height=float(item["height"]) if kind == "rectangle" else None,
                )
            )
        except PhenotypeFormatError:
            raise
        except (KeyError, TypeError, ValueError) as e:
            raise PhenotypeFormatError(f"malformed phenotype node: {e}") from e
    return Phenotype(tuple(modules))
