"""monolin: exact linearization of monomial p-group actions on rational
function fields, with machine-checkable certificates."""

__version__ = "0.1.0"

from .cyclotomic import Root, FFEmbedding, find_prime, make_embedding
from .pcgroup import (
    PcGroup,
    parse_group_spec,
    collect,
    verify_consistency,
    nilpotency_class,
    check_abc,
    commutator_data,
)
from .lattice import hnf, DiagonalAction, invariant_lattice, fixed_generators, brute_check
from .action import GroupAction, MonomialMap, induce_representation


def __getattr__(name):  # pipeline pulls in everything; import lazily
    if name in ("run_class2", "run_g1", "run_g2", "binomial_kl", "match_metacyclic"):
        from . import pipeline

        return getattr(pipeline, name)
    raise AttributeError(name)

__all__ = [
    "Root",
    "FFEmbedding",
    "find_prime",
    "make_embedding",
    "PcGroup",
    "parse_group_spec",
    "collect",
    "verify_consistency",
    "nilpotency_class",
    "check_abc",
    "commutator_data",
    "hnf",
    "DiagonalAction",
    "invariant_lattice",
    "fixed_generators",
    "brute_check",
    "GroupAction",
    "MonomialMap",
    "induce_representation",
    "run_class2",
    "run_g1",
    "run_g2",
    "binomial_kl",
    "match_metacyclic",
]
