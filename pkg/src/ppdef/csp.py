"""A small finite-domain solver for extensional (table) constraints.

Domains are bitmasks over value indices.  Propagation enforces generalized
arc consistency per constraint; revisions are memoized on the tuple of
scope domains, which pays off because the behavior search reuses a handful
of tables across hundreds of thousands of scopes.
"""
from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence


class ResourceLimit(RuntimeError):
    """The configured node, time or size budget ran out before the search finished."""


@dataclass
class Budget:
    nodes: Optional[int] = None
    time_ms: Optional[int] = None
    max_constraints: Optional[int] = None
    started: float = field(default_factory=time.monotonic)

    def check_size(self, count: int) -> None:
        if self.max_constraints is not None and count > self.max_constraints:
            raise ResourceLimit(f"problem needs more than {self.max_constraints} constraints")

    def check(self, nodes: int) -> None:
        if self.nodes is not None and nodes > self.nodes:
            raise ResourceLimit(f"node budget {self.nodes} exhausted")
        if self.time_ms is not None and (time.monotonic() - self.started) * 1000 > self.time_ms:
            raise ResourceLimit(f"time budget {self.time_ms} ms exhausted")


class TableCSP:
    def __init__(self) -> None:
        self.domains: list[int] = []
        self.tables: list[tuple[tuple[int, ...], ...]] = []
        self._table_ids: dict = {}
        self.scopes: list[tuple[int, ...]] = []
        self.ctable: list[int] = []
        self.watch: list[list[int]] = []
        self._seen: set = set()
        self._memo: dict = {}
        self.nodes = 0

    def add_var(self, mask: int) -> int:
        self.domains.append(mask)
        self.watch.append([])
        return len(self.domains) - 1

    def add_vars(self, count: int, mask: int) -> None:
        self.domains.extend([mask] * count)
        self.watch.extend([] for _ in range(count))

    def restrict(self, var: int, mask: int) -> None:
        self.domains[var] &= mask

    def table(self, tuples) -> int:
        key = tuple(sorted(set(tuple(t) for t in tuples)))
        tid = self._table_ids.get(key)
        if tid is None:
            tid = self._table_ids[key] = len(self.tables)
            self.tables.append(key)
        return tid

    def add(self, scope: Sequence[int], tid: int) -> None:
        scope = tuple(scope)
        if len(set(scope)) != len(scope):
            scope, tid = self._compress(scope, tid)
        if len(scope) == 1:
            mask = 0
            for (v,) in self.tables[tid]:
                mask |= 1 << v
            self.domains[scope[0]] &= mask
            return
        key = (scope, tid)
        if key in self._seen:
            return
        self._seen.add(key)
        cid = len(self.scopes)
        self.scopes.append(scope)
        self.ctable.append(tid)
        for v in scope:
            self.watch[v].append(cid)

    def _compress(self, scope: tuple[int, ...], tid: int) -> tuple[tuple[int, ...], int]:
        unique = tuple(dict.fromkeys(scope))
        first = [scope.index(v) for v in unique]
        rows = []
        for row in self.tables[tid]:
            if all(row[i] == row[scope.index(v)] for i, v in enumerate(scope)):
                rows.append(tuple(row[i] for i in first))
        return unique, self.table(rows)

    @property
    def size(self) -> int:
        return len(self.scopes)

    # ------------------------------------------------------------------

    def _revise(self, tid: int, masks: tuple[int, ...]):
        key = (tid, masks)
        res = self._memo.get(key, False)
        if res is not False:
            return res
        support = [0] * len(masks)
        for row in self.tables[tid]:
            for j, v in enumerate(row):
                if not masks[j] >> v & 1:
                    break
            else:
                for j, v in enumerate(row):
                    support[j] |= 1 << v
        res = None if 0 in support else tuple(support)
        self._memo[key] = res
        return res

    def propagate(self, doms: list[int], cids) -> bool:
        queue = deque(cids)
        queued = set(queue)
        scopes, ctable, watch = self.scopes, self.ctable, self.watch
        while queue:
            c = queue.popleft()
            queued.discard(c)
            scope = scopes[c]
            masks = tuple(doms[v] for v in scope)
            res = self._revise(ctable[c], masks)
            if res is None:
                return False
            if res != masks:
                for v, old, new in zip(scope, masks, res):
                    if old != new:
                        doms[v] = new
                        for d in watch[v]:
                            if d != c and d not in queued:
                                queued.add(d)
                                queue.append(d)
        return True

    def solve(self, budget: Budget | None = None,
              value_order: Callable[[int], Sequence[int]] | None = None,
              var_order: Sequence[int] | None = None) -> Optional[list[int]]:
        """First solution in the fixed exploration order, or ``None`` if none exists."""
        budget = budget or Budget()
        self.nodes = 0
        budget.check(self.nodes)
        doms = list(self.domains)
        if 0 in doms or not self.propagate(doms, range(self.size)):
            return None
        order = list(var_order) if var_order is not None else list(range(len(doms)))
        stack: list = []
        pos = 0
        while True:
            while pos < len(order) and doms[order[pos]] & (doms[order[pos]] - 1) == 0:
                pos += 1
            if pos == len(order):
                return [d.bit_length() - 1 for d in doms]
            var = order[pos]
            dom = doms[var]
            preferred = list(value_order(var)) if value_order else []
            rest = [v for v in range(dom.bit_length()) if v not in preferred]
            values = [v for v in preferred + rest if dom >> v & 1]
            stack.append((doms, pos, var, values, 0))
            while stack:
                base_doms, pos, var, values, i = stack.pop()
                if i >= len(values):
                    continue
                stack.append((base_doms, pos, var, values, i + 1))
                self.nodes += 1
                budget.check(self.nodes)
                trial = list(base_doms)
                trial[var] = 1 << values[i]
                if self.propagate(trial, self.watch[var]):
                    doms = trial
                    break
            else:
                return None
