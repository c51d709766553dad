"""The three design encodings and their shared mutation/expression surface.

A genotype is one of ``DirectGenotype``, ``LSystemGenotype`` or
``CppnGenotype``. The dispatchers here are what the sampler uses: one
mutation bundle equals one design pass plus one controller pass (CPPN
controllers live inside the network, so its controller pass is a no-op).
"""

from __future__ import annotations

import dataclasses
from typing import Union

from ..core import PhenotypeTree, RngStream, canonical_json_bytes, fnv1a_64
from ..errors import InvalidGenotypeError
from .common import (
    DEFAULT_RATES,
    Encoding,
    MutationRates,
    default_rates,
    mutate_module_controllers,
    mutate_module_geometry,
)
from .cppn import (
    Activation,
    CppnConnection,
    CppnGenotype,
    CppnNode,
    NodeRole,
    cppn_forward,
    express_cppn,
    mutate_cppn,
    random_cppn,
)
from .direct import DirectGenotype, DirectNode, express_direct, mutate_direct, random_direct
from .lsystem import LSystemGenotype, express_lsystem, mutate_lsystem, random_lsystem

Genotype = Union[DirectGenotype, LSystemGenotype, CppnGenotype]

__all__ = [
    "Activation",
    "CppnConnection",
    "CppnGenotype",
    "CppnNode",
    "DEFAULT_RATES",
    "DirectGenotype",
    "DirectNode",
    "Encoding",
    "Genotype",
    "LSystemGenotype",
    "MutationRates",
    "NodeRole",
    "cppn_forward",
    "default_rates",
    "encoding_of",
    "express",
    "express_cppn",
    "express_direct",
    "express_lsystem",
    "genotype_from_json",
    "genotype_hash",
    "mutate_controllers",
    "mutate_cppn",
    "mutate_design",
    "mutate_direct",
    "mutate_lsystem",
    "mutation_bundle",
    "random_cppn",
    "random_direct",
    "random_genotype",
    "random_lsystem",
]


def encoding_of(g: Genotype) -> Encoding:
    if isinstance(g, DirectGenotype):
        return Encoding.DIRECT
    if isinstance(g, LSystemGenotype):
        return Encoding.LSYSTEM
    if isinstance(g, CppnGenotype):
        return Encoding.CPPN
    raise InvalidGenotypeError(f"not a genotype: {type(g).__name__}")


def random_genotype(encoding: Encoding | str, rng: RngStream) -> Genotype:
    encoding = Encoding(encoding)
    if encoding is Encoding.DIRECT:
        return random_direct(rng)
    if encoding is Encoding.LSYSTEM:
        return random_lsystem(rng)
    return random_cppn(rng)


def express(g: Genotype) -> PhenotypeTree:
    """Deterministic genotype-to-phenotype mapping."""
    if isinstance(g, DirectGenotype):
        return express_direct(g)
    if isinstance(g, LSystemGenotype):
        return express_lsystem(g)
    if isinstance(g, CppnGenotype):
        return express_cppn(g)
    raise InvalidGenotypeError(f"not a genotype: {type(g).__name__}")


def mutate_design(g: Genotype, rates: MutationRates, rng: RngStream) -> Genotype:
    if isinstance(g, DirectGenotype):
        return mutate_direct(g, rates, rng)
    if isinstance(g, LSystemGenotype):
        return mutate_lsystem(g, rates, rng)
    if isinstance(g, CppnGenotype):
        return mutate_cppn(g, rates, rng)
    raise InvalidGenotypeError(f"not a genotype: {type(g).__name__}")


def mutate_controllers(g: Genotype, rates: MutationRates, rng: RngStream) -> Genotype:
    """Gaussian-perturb palette controllers; no-op for CPPN genotypes,
    whose controller parameters are network outputs."""
    if isinstance(g, CppnGenotype):
        return g
    module_list = mutate_module_controllers(g.module_list, rates, rng)
    return dataclasses.replace(g, module_list=module_list)


def mutation_bundle(g: Genotype, rates: MutationRates, rng: RngStream) -> Genotype:
    """One neighbourhood step: design mutation then controller mutation."""
    return mutate_controllers(mutate_design(g, rates, rng), rates, rng)


def genotype_hash(g: Genotype) -> int:
    """Stable 64-bit id over the genotype's canonical JSON form."""
    return fnv1a_64(canonical_json_bytes(g.to_json()))


def genotype_from_json(obj: dict) -> Genotype:
    kind = obj.get("encoding")
    if kind == "direct":
        return DirectGenotype.from_json(obj)
    if kind == "lsystem":
        return LSystemGenotype.from_json(obj)
    if kind == "cppn":
        return CppnGenotype.from_json(obj)
    raise InvalidGenotypeError(f"unknown encoding {kind!r}")
