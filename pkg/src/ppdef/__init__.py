"""Decide primitive positive, existential positive and existential definability
over finitely bounded ordered homogeneous structures via canonical behaviors."""

from .age import (BaseStructure, FinStruct, Signature, TypeRep, assemble, builtin,
                  enumerate_age, enumerate_types, subtype, validate_base)
from .behavior import Behavior, SearchProblem, extend, search
from .deciders import (DEFINABLE, INCONCLUSIVE, NOT_DEFINABLE, DeciderConfig, Decision,
                       Problem, arity_bound, check_identity, decide)
from .formula import RelationDef, parse
from .oracle import brute_partial_witness, pp_semantics, replay, synthesize_pp

__all__ = [
    "BaseStructure", "FinStruct", "Signature", "TypeRep", "assemble", "builtin",
    "enumerate_age", "enumerate_types", "subtype", "validate_base",
    "Behavior", "SearchProblem", "extend", "search",
    "DEFINABLE", "INCONCLUSIVE", "NOT_DEFINABLE", "DeciderConfig", "Decision",
    "Problem", "arity_bound", "check_identity", "decide",
    "RelationDef", "parse",
    "brute_partial_witness", "pp_semantics", "replay", "synthesize_pp",
]
