"""Decision procedures for pp / ep / existential definability and the identity check."""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .age import BaseStructure, enumerate_types
from .behavior import (SIGGERS_IDENTITY, Behavior, InvalidProblem, SearchProblem,
                       check_identities, search)
from .csp import Budget, ResourceLimit
from .formula import RelationDef

DEFINABLE = "DEFINABLE"
NOT_DEFINABLE = "NOT-DEFINABLE"
INCONCLUSIVE = "INCONCLUSIVE"

SATISFIED = "SATISFIED"
UNSATISFIED = "UNSATISFIED"

MODES = ("pp", "ep", "ex")


@dataclass(frozen=True)
class Problem:
    base: BaseStructure
    target: RelationDef
    theta: tuple[RelationDef, ...]
    mode: str

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidProblem(f"unknown mode {self.mode!r}")
        for rel in (self.target,) + tuple(self.theta):
            if rel.arity < 1:
                raise InvalidProblem(f"relation {rel.name} has arity {rel.arity}")
        object.__setattr__(self, "theta", tuple(self.theta))

    @property
    def k(self) -> int:
        return self.target.arity

    def with_mode(self, mode: str) -> "Problem":
        return Problem(self.base, self.target, self.theta, mode)


@dataclass
class DeciderConfig:
    node_budget: Optional[int] = 2_000_000
    time_budget_ms: Optional[int] = None
    max_constraints: Optional[int] = 3_000_000
    # try witnesses on subsets of the target types before the full search
    staged: bool = True
    # fast path only: a miss at the capped arity still runs the full search
    arity_cap: bool = False


@dataclass
class Decision:
    verdict: str
    witness: Optional[Behavior] = None
    search_problem: Optional[SearchProblem] = None
    synthesized: object = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def decided(self) -> bool:
        return self.verdict != INCONCLUSIVE


def target_types(problem: Problem) -> list:
    return sorted(problem.target.type_set)


def arity_bound(problem: Problem) -> int:
    """Arity of the witness the pp search looks for: the number of base types inside the target."""
    return max(1, len(problem.target.type_set))


def arity_cap(base: BaseStructure) -> int:
    """``2*o(2) - 1`` with ``o(2)`` the number of base 2-types."""
    return 2 * len(enumerate_types(base, 2)) - 1


def _budget(config: DeciderConfig, started: float) -> Budget:
    return Budget(config.node_budget, config.time_budget_ms, config.max_constraints, started)


def _short_circuit(problem: Problem) -> Optional[str]:
    types = problem.target.type_set
    if not types:
        return "empty target"
    if len(types) == len(enumerate_types(problem.base, problem.k)):
        return "full target"
    for rel in problem.theta:
        if rel.arity == problem.k and rel.type_set == types:
            return f"target equals {rel.name}"
    return None


def _stages(problem: Problem, config: DeciderConfig) -> list[tuple]:
    types = target_types(problem)
    if problem.mode != "pp":
        return [(c,) for c in types]
    m = len(types)
    stages: list[tuple] = []
    if config.staged:
        sizes = [1, 2] if m > 2 else [1]
        if config.arity_cap:
            cap = arity_cap(problem.base)
            if 2 < cap < m:
                sizes.append(cap)
        for size in sizes:
            stages.extend(itertools.combinations(types, size))
    stages.append(tuple(types))
    return list(dict.fromkeys(stages))


def decide(problem: Problem, config: DeciderConfig | None = None) -> Decision:
    """Decide definability of the target from the template in the problem's mode.

    A witness is a behavior found by search; DEFINABLE needs every search
    of the final stage (and, in ep/ex mode, every constant type) to be
    exhausted.  Any resource limit makes the answer INCONCLUSIVE.
    """
    config = config or DeciderConfig()
    started = time.monotonic()
    diagnostics: dict = {"searches": []}
    reason = _short_circuit(problem)
    if reason:
        diagnostics["short_circuit"] = reason
        return Decision(DEFINABLE, diagnostics=diagnostics)
    stages = _stages(problem, config)
    full = tuple(target_types(problem))
    limited = None
    for constants in stages:
        sp = SearchProblem(problem.base, constants, problem.mode, problem.theta, problem.target)
        stats: dict = {"arity": len(constants)}
        try:
            witness = search(sp, _budget(config, started), stats)
        except ResourceLimit as exc:
            stats["limit"] = str(exc)
            diagnostics["searches"].append(stats)
            limited = str(exc)
            if problem.mode == "pp" and constants != full:
                continue  # a smaller stage is only a shortcut
            break
        diagnostics["searches"].append(stats)
        if witness is not None:
            diagnostics["elapsed_s"] = round(time.monotonic() - started, 3)
            return Decision(NOT_DEFINABLE, witness, sp, diagnostics=diagnostics)
    diagnostics["elapsed_s"] = round(time.monotonic() - started, 3)
    if limited is not None:
        diagnostics["limit"] = limited
        return Decision(INCONCLUSIVE, diagnostics=diagnostics)
    return Decision(DEFINABLE, diagnostics=diagnostics)


@dataclass
class IdentityResult:
    verdict: str
    witness: Optional[Behavior] = None
    search_problem: Optional[SearchProblem] = None
    diagnostics: dict = field(default_factory=dict)


def check_identity(base: BaseStructure, gamma: Sequence[RelationDef],
                   config: DeciderConfig | None = None,
                   identities=(SIGGERS_IDENTITY,)) -> IdentityResult:
    """Search a 4-ary behavior preserving ``gamma`` with sigma(t1,t2,t3,t3) = sigma(t2,t3,t1,t2)."""
    config = config or DeciderConfig()
    started = time.monotonic()
    sp = SearchProblem.identity(base, tuple(gamma), identities)
    stats: dict = {}
    try:
        witness = search(sp, _budget(config, started), stats)
    except ResourceLimit as exc:
        stats["limit"] = str(exc)
        return IdentityResult(INCONCLUSIVE, None, sp, stats)
    stats["elapsed_s"] = round(time.monotonic() - started, 3)
    if witness is None:
        return IdentityResult(UNSATISFIED, None, sp, stats)
    bad = check_identities(witness, identities)
    if bad:
        raise AssertionError(f"identity witness fails post-check at {bad}")
    return IdentityResult(SATISFIED, witness, sp, stats)
