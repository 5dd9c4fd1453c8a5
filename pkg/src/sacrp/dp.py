"""Exact solver: shortest path over retrieved-set states.

States are bitmasks over target indices.  Every transition retrieves one
single-cycle batch, so popcount strictly increases and states can be
relaxed stage by stage.
"""

from __future__ import annotations

import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .geometry import Layout, iter_batch_masks, plan_cycle
from .model import (
    InfeasibleError,
    Instance,
    SacrpError,
    SliceState,
    Solution,
    SparseView,
    check_feasibility,
    derive_sparse,
    state_feasible,
)

__all__ = [
    "DpOptions",
    "DpStats",
    "solve_dp",
    "dominance_rule_1",
    "dominance_rule_2",
    "dominance_rule_3",
]

MAX_TARGETS = 28


@dataclass(frozen=True)
class DpOptions:
    rule1: bool = True
    rule2: bool = True
    rule3: bool = True
    time_limit: float = 600.0
    parallel: bool = False
    workers: int = 4
    prune_infeasible: bool = True
    max_targets: int = MAX_TARGETS

    def __post_init__(self):
        if not self.time_limit > 0:
            raise ValueError("time limit must be positive")

    @classmethod
    def no_dominance(cls, **kw) -> "DpOptions":
        return cls(rule1=False, rule2=False, rule3=False, **kw)


@dataclass
class DpStats:
    total_states: int
    explored_states: int = 0
    generated_transitions: int = 0
    elapsed: float = 0.0
    timed_out: bool = False
    dominance: dict[str, int] = field(default_factory=lambda: {"rule1": 0, "rule2": 0, "rule3": 0})

    def to_dict(self) -> dict:
        return {
            "total_states": self.total_states,
            "explored_states": self.explored_states,
            "generated_transitions": self.generated_transitions,
            "runtime_ms": round(self.elapsed * 1000.0, 3),
            "timed_out": self.timed_out,
            "dominance": dict(self.dominance),
        }


def _accessible(layout: Layout, b: int) -> bool:
    return layout.left_min[layout.stack[b]] >= layout.row[b] - 1


def dominance_rule_1(state: SliceState, layout: Layout | None = None) -> int | None:
    """A target that must be retrieved alone and is best retrieved now.

    It has to be the only remaining target in its stack, lie strictly higher
    than every other remaining target, sit in the leftmost stack that still
    holds targets, and be accessible.  Under these conditions it can never
    share a cycle, and its own cost never drops by waiting.
    """
    layout = layout or Layout(state)
    if not layout.todo:
        return None
    stack, row = layout.stack, layout.row
    b = max(layout.todo, key=lambda x: row[x])
    if any(x != b and row[x] >= row[b] for x in layout.todo):
        return None
    if any(x != b and stack[x] <= stack[b] for x in layout.todo):
        return None
    return b if _accessible(layout, b) else None


def _rule2_pairs(layout: Layout) -> list[tuple[int, int]]:
    """(lower bit, upper bit) for stacked pairs that are both accessible."""
    pairs = []
    for (s, r), lower in layout.grid.items():
        upper = layout.grid.get((s, r + 1))
        if upper is not None and _accessible(layout, lower) and _accessible(layout, upper):
            pairs.append((1 << lower, 1 << upper))
    return pairs


def dominance_rule_2(
    state: SliceState,
    batch: int,
    layout: Layout | None = None,
    pairs: list[tuple[int, int]] | None = None,
    batches: dict[int, int] | None = None,
) -> bool:
    """Prune a batch taking a target while lifting the target directly on it.

    ``batch`` is a bitmask.  Both targets of the pair must be accessible on
    their own in ``state``.  Taking the upper target instead leaves the same
    physical layout, so the batch is pruned only when that swapped batch is
    itself a single cycle from ``state`` costing no more.  ``batches`` maps
    every batch mask of ``state`` to its energy.
    """
    layout = layout or Layout(state)
    if pairs is None:
        pairs = _rule2_pairs(layout)
    if batches is None:
        sparse = derive_sparse(state.instance)
        batches = {m: e for m, e, _ in iter_batch_masks(layout, sparse)}
    energy = batches.get(batch)
    if energy is None:
        return False
    for lo, up in pairs:
        if batch & lo and not batch & up:
            swapped = batches.get(batch ^ lo ^ up)
            if swapped is not None and swapped <= energy:
                return True
    return False


def dominance_rule_3(
    state: SliceState,
    with_i: int,
    without_i: int,
    layout: Layout | None = None,
    feasible: dict[int, bool] | None = None,
    batches: dict[int, int] | None = None,
) -> bool:
    """Whether the sibling batch ``with_i`` dominates ``without_i``.

    Both are bitmasks; ``with_i`` must add exactly one target ``i`` that is
    alone in its stack, shares its row with a member further left, has no
    remaining target in the stacks strictly between them, and leaves the
    rest of the instance feasible.

    One more condition keeps the swap argument valid: after ``with_i`` no
    remaining target right of ``i`` sits above the row of ``i``, so any
    completion that takes ``i`` later stays valid with ``i`` dropped.
    """
    diff = with_i & ~without_i
    if diff == 0 or diff & (diff - 1) or without_i & ~with_i:
        return False
    layout = layout or Layout(state)
    i = diff.bit_length() - 1
    stack, row = layout.stack, layout.row
    s_i, r_i = stack[i], row[i]
    if any(x != i and stack[x] == s_i for x in layout.todo):
        return False
    partners = [x for x in layout.todo if without_i >> x & 1 and row[x] == r_i and stack[x] < s_i]
    if not partners:
        return False
    s_left = max(stack[x] for x in partners)
    if any(s_left < stack[x] < s_i for x in layout.todo):
        return False
    below = state.instance.below
    for x in layout.todo:
        if stack[x] > s_i and not with_i >> x & 1:
            if row[x] - (below[x] & with_i).bit_count() > r_i:
                return False
    if batches is None:
        sparse = derive_sparse(state.instance)
        batches = {m: e for m, e, _ in iter_batch_masks(layout, sparse)}
    if with_i not in batches or without_i not in batches:
        return False
    return _feasible_after(state.instance, state.mask | with_i, feasible)


def _feasible_after(instance: Instance, mask: int, cache: dict[int, bool] | None) -> bool:
    if cache is None:
        return state_feasible(instance, mask)
    ok = cache.get(mask)
    if ok is None:
        ok = cache[mask] = state_feasible(instance, mask)
    return ok


class _Expander:
    def __init__(self, instance: Instance, options: DpOptions, sparse: SparseView):
        self.instance = instance
        self.options = options
        self.sparse = sparse
        self.feasible: dict[int, bool] = {}

    def __call__(self, mask: int):
        """Outgoing arcs of one state plus per-rule prune counts."""
        inst, opt = self.instance, self.options
        state = SliceState.from_mask(inst, mask)
        layout = Layout(state)
        pruned = {"rule1": 0, "rule2": 0, "rule3": 0}
        if opt.rule1:
            forced = dominance_rule_1(state, layout)
            if forced is not None:
                pruned["rule1"] = 1
                arcs = [(mask | 1 << forced, self._single_energy(layout, forced), 1 << forced)]
                return self._feasible(mask, arcs), pruned
        batches = {}
        for bmask, energy, _ in iter_batch_masks(layout, self.sparse):
            batches[bmask] = energy
        pairs = _rule2_pairs(layout) if opt.rule2 else []
        per_stack = Counter(layout.stack[b] for b in layout.todo)
        loners = [b for b in layout.todo if per_stack[layout.stack[b]] == 1]
        arcs = []
        for bmask, energy in batches.items():
            if opt.rule2 and dominance_rule_2(state, bmask, layout, pairs, batches):
                pruned["rule2"] += 1
                continue
            if opt.rule3 and self._rule3(state, layout, bmask, batches, loners):
                pruned["rule3"] += 1
                continue
            arcs.append((mask | bmask, energy, bmask))
        return self._feasible(mask, arcs), pruned

    def _single_energy(self, layout: Layout, b: int) -> int:
        for bmask, energy, _ in iter_batch_masks(layout, self.sparse):
            if bmask == 1 << b:
                return energy
        raise AssertionError("forced target is not singleton-retrievable")

    def _rule3(self, state, layout, bmask, batches, loners) -> bool:
        # only targets alone in their stack can satisfy the rule
        for i in loners:
            if bmask >> i & 1:
                continue
            bigger = bmask | 1 << i
            if bigger in batches and dominance_rule_3(state, bigger, bmask, layout, self.feasible, batches):
                return True
        return False

    def _feasible(self, mask, arcs):
        if not self.options.prune_infeasible:
            return arcs
        return [a for a in arcs if _feasible_after(self.instance, a[0], self.feasible)]


def solve_dp(instance: Instance, options: DpOptions | None = None) -> tuple[Solution | None, DpStats]:
    """Minimum-energy solution, or ``(None, stats)`` if the time limit hits."""
    options = options or DpOptions()
    n = instance.n
    if n > options.max_targets:
        raise SacrpError(f"dynamic program capped at {options.max_targets} targets, got {n}")
    if not check_feasibility(instance):
        raise InfeasibleError("instance is infeasible")
    stats = DpStats(total_states=1 << n)
    start = time.perf_counter()
    deadline = start + options.time_limit
    expand = _Expander(instance, options, derive_sparse(instance))

    dist = {0: 0}
    parent: dict[int, tuple[int, int]] = {}
    stages: list[set[int]] = [set() for _ in range(n + 1)]
    stages[0].add(0)
    pool = ThreadPoolExecutor(options.workers) if options.parallel else None
    try:
        for k in range(n):
            masks = sorted(stages[k])
            stages[k] = set()
            if pool is not None:
                results = pool.map(expand, masks)
            else:
                results = map(expand, masks)
            for mask, (arcs, pruned) in zip(masks, results):
                if time.perf_counter() > deadline:
                    stats.timed_out = True
                    break
                stats.explored_states += 1
                for rule, count in pruned.items():
                    stats.dominance[rule] += count
                base = dist[mask]
                for succ, energy, bmask in arcs:
                    stats.generated_transitions += 1
                    cand = base + energy
                    old = dist.get(succ)
                    if old is None or cand < old:
                        dist[succ] = cand
                        parent[succ] = (mask, bmask)
                        stages[succ.bit_count()].add(succ)
            if stats.timed_out:
                break
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    full = instance.full_mask
    if not stats.timed_out:
        stats.explored_states += 1  # the terminal state
    stats.elapsed = time.perf_counter() - start
    if stats.timed_out:
        return None, stats
    if full not in dist:
        raise InfeasibleError("no complete retrieval found")

    arcs = []
    mask = full
    while mask:
        prev, bmask = parent[mask]
        arcs.append((prev, bmask))
        mask = prev
    cycles = []
    for prev, bmask in reversed(arcs):
        state = SliceState.from_mask(instance, prev)
        cycles.append(plan_cycle(state, [b for b in range(n) if bmask >> b & 1]))
    solution = Solution(tuple(cycles))
    assert solution.total_energy == dist[full]
    return solution, stats
