"""Greedy heuristic: anchor on the most critical stack, grow, repeat.

Each cycle picks the remaining target with the greatest current height
(ties go to the rightmost stack), seeds the batch with the topmost target of
that stack that can be retrieved on its own, then scans candidates in
canonical order and adds every legal one, restarting the scan after each
acceptance.  A candidate is legal when it is accessible, extends the batch
under one of the growth rules, and leaves the residual instance feasible.

Why the seed exists and is safe: in a feasible state the lowest remaining
target of any stack has no remaining target under it, so feasibility gives
every stack to its left at least its height minus one, which makes it
singleton-retrievable.  Retrieving the seed lowers its stack by one, but that
stack still reaches the critical height minus one, and every target to the
right sits no higher than the critical height, so their demands stay met.

Cost: every acceptance triggers one rescan of at most n candidates with O(1)
checks plus an O(m) refresh, and there are n acceptances overall, so the run
is O(n (n + m)) on top of sorting candidates once per cycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import Layout, Rule, canonical_key, plan_cycle
from .model import (
    InfeasibleError,
    Instance,
    SliceState,
    Solution,
    check_feasibility,
)

__all__ = ["CandidateRecord", "CycleTrace", "GreedyTrace", "solve_greedy"]


@dataclass(frozen=True)
class CandidateRecord:
    target: int
    accepted: bool
    reason: str  # rule name when accepted


@dataclass
class CycleTrace:
    critical: int
    seed: int
    batch: tuple[int, ...] = ()
    records: list[CandidateRecord] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "critical": self.critical,
            "seed": self.seed,
            "batch": list(self.batch),
            "records": [
                {"target": r.target, "accepted": r.accepted, "reason": r.reason}
                for r in self.records
            ],
        }


@dataclass
class GreedyTrace:
    """Per cycle: critical target, seed, acceptances in order, and the
    rejections of the final scan that closed the cycle."""

    cycles: list[CycleTrace] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"cycles": [c.to_dict() for c in self.cycles]}

    def replay(self, instance: Instance) -> Solution:
        state = SliceState(instance)
        plans = []
        for cyc in self.cycles:
            plans.append(plan_cycle(state, cyc.batch))
            state = state.after(cyc.batch)
        return Solution(tuple(plans))


class _Cycle:
    """Growth bookkeeping for one cycle."""

    def __init__(self, state: SliceState, layout: Layout, seed: int):
        inst = state.instance
        self.inst = inst
        self.layout = layout
        self.S = layout.stack[seed]
        self.h = layout.row[seed]
        self.inside = {(self.S, self.h)}
        self.prefix = {self.h: 1 if self.S == 1 else 0}
        self.members = [seed]
        # residual heights and top demands once the batch is gone
        self.height = [0] + list(state.heights)
        self.left = set(layout.todo)
        self.left.discard(seed)
        self.height[self.S] -= 1
        self.demand = [-math.inf] * (inst.m + 2)
        for t in range(1, inst.m + 1):
            self._refresh_demand(t)
        self.suffix = [-math.inf] * (inst.m + 2)
        self._refresh_suffix()

    def _refresh_demand(self, t: int):
        _, _, members = self.inst.demand_table[t - 1]
        self.demand[t] = next((need for b, need in members if b in self.left), -math.inf)

    def _refresh_suffix(self):
        m = self.inst.m
        for t in range(m, 0, -1):
            self.suffix[t] = max(self.demand[t], self.suffix[t + 1])

    def check(self, c: int) -> tuple[Rule | None, str]:
        lay = self.layout
        s, r = lay.stack[c], lay.row[c]
        if lay.left_min[s] < r - 1:
            return None, "not accessible"
        h = self.h
        if r == h:
            rule = Rule.SAME_ROW
        elif r > h:
            k = self.prefix.get(r - 1, 0)
            if k < s:
                return None, f"position ({k + 1}, {r - 1}) not in batch"
            rule = Rule.ROW_ABOVE
        else:
            k = self.prefix.get(r, 0)
            if s > 1 and k < s - 1:
                return None, f"position ({k + 1}, {r}) not in batch"
            if r < h - 1 and (s, r + 1) not in self.inside:
                return None, f"position ({s}, {r + 1}) not in batch"
            rule = Rule.ROW_BELOW_ADJACENT if r == h - 1 else Rule.ROW_BELOW_DEEP
        # only stacks right of s lose support when s drops by one
        if self.height[s] - 1 < self.suffix[s + 1]:
            return None, "breaks feasibility"
        return rule, rule.value

    def accept(self, c: int):
        lay = self.layout
        s, r = lay.stack[c], lay.row[c]
        self.inside.add((s, r))
        k = self.prefix.get(r, 0)
        while (k + 1, r) in self.inside:
            k += 1
        self.prefix[r] = k
        self.members.append(c)
        self.left.discard(c)
        self.height[s] -= 1
        self._refresh_demand(s)
        self._refresh_suffix()


def solve_greedy(instance: Instance) -> tuple[Solution, GreedyTrace]:
    if not check_feasibility(instance):
        raise InfeasibleError("instance is infeasible")
    state = SliceState(instance)
    trace = GreedyTrace()
    plans = []
    while not state.is_complete:
        lay = Layout(state)
        stack, row = lay.stack, lay.row
        critical = max(lay.todo, key=lambda b: (row[b], stack[b]))
        S = stack[critical]
        seed = max(
            (b for b in lay.todo if stack[b] == S and lay.left_min[S] >= row[b] - 1),
            key=lambda b: row[b],
        )
        h = row[seed]
        cyc = _Cycle(state, lay, seed)
        ct = CycleTrace(critical, seed)
        cands = sorted(
            (b for b in lay.todo
             if b != seed and (stack[b] < S or (stack[b] == S and row[b] < h))),
            key=lambda b: canonical_key(h, stack[b], row[b]),
        )
        pending = list(cands)
        while True:
            rejected = []
            for k, c in enumerate(pending):
                rule, why = cyc.check(c)
                if rule is None:
                    rejected.append(CandidateRecord(c, False, why))
                    continue
                cyc.accept(c)
                ct.records.append(CandidateRecord(c, True, why))
                pending = pending[:k] + pending[k + 1:]
                break
            else:
                ct.records.extend(rejected)
                break
        ct.batch = tuple(cyc.members)
        plan = plan_cycle(state, cyc.members)
        plans.append(plan)
        trace.cycles.append(ct)
        state = state.after(cyc.members)
    return Solution(tuple(plans)), trace
