"""Seeded random small problems for regression and invariance experiments."""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterator, Optional

from .age import BaseStructure, builtin
from .deciders import MODES, Problem
from .formula import And, Atom, Equality, Not, Or, RelationDef, to_text
from .pointed import pointed_count


@dataclass
class RandomConfig:
    seed: int = 20240601
    max_arity: int = 3
    max_atoms: int = 3
    # skip problems whose search would need more grid cells than this
    max_cost: int = 4000
    bases: tuple[str, ...] = ("dense_linear_order", "ordered_random_graph")


def random_formula(rng: random.Random, base: BaseStructure, k: int, max_atoms: int):
    sig = base.signature
    atoms = []
    for _ in range(rng.randint(1, max_atoms)):
        if k > 1 and rng.random() < 0.25:
            i, j = rng.sample(range(k), 2)
            a = Equality(i, j)
        else:
            name, arity = rng.choice(sig.symbols)
            a = Atom(name, tuple(rng.randrange(k) for _ in range(arity)))
        atoms.append(Not(a) if rng.random() < 0.3 else a)
    ast = atoms[0]
    for a in atoms[1:]:
        ast = And(ast, a) if rng.random() < 0.6 else Or(ast, a)
    return ast


def estimated_cost(problem: Problem, limit: int) -> Optional[int]:
    """Cells of the largest search the decider would run, or ``None`` above ``limit``.

    pp mode multiplies the pointed working-arity spaces of all target
    types; ep/ex mode takes the largest single space.
    """
    base = problem.base
    n = base.n_param
    total = 1
    for c in sorted(problem.target.type_set):
        size = pointed_count(base, c, n, limit)
        if size is None:
            return None
        total = total * size if problem.mode == "pp" else max(total, size)
        if total > limit:
            return None
    return total


def random_problems(count: int, config: RandomConfig | None = None,
                    modes=MODES) -> Iterator[tuple[int, Problem]]:
    """``count`` problems ``(index, problem)``; targets are non-trivial and the search affordable."""
    config = config or RandomConfig()
    rng = random.Random(config.seed)
    made = 0
    tries = 0
    while made < count:
        tries += 1
        if tries > 200 * count:
            raise RuntimeError("random problem filter is too strict")
        base = builtin(rng.choice(config.bases))
        k = rng.randint(1, config.max_arity)
        p = rng.randint(1, config.max_arity)
        t_ast = random_formula(rng, base, k, config.max_atoms)
        s_ast = random_formula(rng, base, p, config.max_atoms)
        mode = rng.choice(modes)
        target = RelationDef.from_ast("R0", t_ast, k, base)
        source = RelationDef.from_ast("R1", s_ast, p, base)
        problem = Problem(base, target, (source,), mode)
        if not target.type_set or not source.type_set:
            continue
        if estimated_cost(problem, config.max_cost) is None:
            continue
        yield made, problem
        made += 1


def describe(problem: Problem) -> str:
    order = problem.base.order
    src = ", ".join(f"{r.name}/{r.arity} := {to_text(r.ast, order)}" for r in problem.theta)
    return (f"[{problem.base.name}] {problem.mode} R0/{problem.target.arity} := "
            f"{to_text(problem.target.ast, order)} from {src}")
