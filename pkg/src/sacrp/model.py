"""Instances, slice states, cycle simulation and energy accounting.

Conventions used throughout the package:

* stacks are numbered ``1..m`` from the entry side; heights ``1..h`` from the
  bottom.  Tuples indexed by stack (heights, clearances) use position
  ``t - 1`` for stack ``t``.
* targets are numbered ``0..n-1`` in pick-list order.
* a stack's *clearance* is the number of ULs left unlifted at the start of a
  cycle; everything strictly above it is lifted for the whole cycle.
* to retrieve a target sitting at height ``h`` in stack ``t`` the residual
  height of ``t`` must equal ``h`` and every stack left of ``t`` must have
  residual height exactly ``h - 1`` (the shuttle rides on top of them).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

__all__ = [
    "SacrpError",
    "InstanceError",
    "AccessibilityError",
    "SolutionError",
    "InfeasibleError",
    "Instance",
    "SliceState",
    "CyclePlan",
    "Solution",
    "SparseView",
    "parse_instance",
    "write_instance",
    "check_feasibility",
    "feasibility_violations",
    "state_feasible",
    "infer_clearances",
    "simulate_cycle",
    "simulate_solution",
    "batch_anchor",
    "derive_sparse",
    "cycle_energy_closed_form",
    "parse_solution",
    "write_solution",
    "load_solution",
]


class SacrpError(Exception):
    """Base class for all domain errors raised by this package."""


class InstanceError(SacrpError, ValueError):
    pass


class SolutionError(SacrpError):
    pass


class InfeasibleError(SacrpError):
    pass


class AccessibilityError(SolutionError):
    """A retrieval step violated one of the two accessibility conditions.

    ``condition`` is ``"a"`` when the target is not the residual top of its
    own stack and ``"b"`` when a stack nearer the entry side does not offer a
    passage at the right level.
    """

    def __init__(self, message: str, *, step: int, target: int, condition: str, stack: int):
        super().__init__(message)
        self.step = step
        self.target = target
        self.condition = condition
        self.stack = stack


# ---------------------------------------------------------------------------
# instances


@dataclass(frozen=True)
class Instance:
    stacks: tuple[int, ...]
    targets: tuple[tuple[int, int], ...]

    def __post_init__(self):
        stacks = tuple(int(h) for h in self.stacks)
        targets = tuple((int(s), int(h)) for s, h in self.targets)
        object.__setattr__(self, "stacks", stacks)
        object.__setattr__(self, "targets", targets)
        if not stacks:
            raise InstanceError("a slice needs at least one stack")
        for t, h in enumerate(stacks, start=1):
            if h < 1:
                raise InstanceError(f"stack {t} has non-positive height {h}")
        seen = set()
        for b, (s, h) in enumerate(targets):
            if not 1 <= s <= len(stacks):
                raise InstanceError(f"target {b} lies in unknown stack {s}")
            if not 1 <= h <= stacks[s - 1]:
                raise InstanceError(
                    f"target {b} at height {h} exceeds stack {s} of height {stacks[s - 1]}"
                )
            if (s, h) in seen:
                raise InstanceError(f"duplicate target position ({s}, {h})")
            seen.add((s, h))

    @property
    def m(self) -> int:
        return len(self.stacks)

    @property
    def n(self) -> int:
        return len(self.targets)

    def stack_of(self, b: int) -> int:
        return self.targets[b][0]

    def height_of(self, b: int) -> int:
        return self.targets[b][1]

    @cached_property
    def stack_members(self) -> tuple[tuple[int, ...], ...]:
        """Target indices per stack (0-based stack index), bottom to top."""
        per = [[] for _ in self.stacks]
        for b, (s, _) in enumerate(self.targets):
            per[s - 1].append(b)
        return tuple(tuple(sorted(p, key=lambda b: self.targets[b][1])) for p in per)

    @cached_property
    def below(self) -> tuple[int, ...]:
        """Bitmask, per target, of the targets initially below it in its stack."""
        out = [0] * self.n
        for members in self.stack_members:
            acc = 0
            for b in members:
                out[b] = acc
                acc |= 1 << b
        return tuple(out)

    @cached_property
    def above(self) -> tuple[int, ...]:
        out = [0] * self.n
        for members in self.stack_members:
            acc = 0
            for b in reversed(members):
                out[b] = acc
                acc |= 1 << b
        return tuple(out)

    @cached_property
    def stack_masks(self) -> tuple[int, ...]:
        return tuple(sum(1 << b for b in members) for members in self.stack_members)

    @cached_property
    def demand_table(self) -> tuple[tuple[int, int, tuple[tuple[int, int], ...]], ...]:
        """Per stack: height, target mask, and (target, demand) top to bottom.

        The demand of a target is the least height every stack to its left
        must keep for it to stay reachable.
        """
        R = self.max_level
        return tuple(
            (
                h,
                self.stack_masks[t],
                tuple((b, self.targets[b][1] - R[b] - 1) for b in reversed(self.stack_members[t])),
            )
            for t, h in enumerate(self.stacks)
        )

    @cached_property
    def max_level(self) -> tuple[int, ...]:
        """Number of targets initially below each target (its maximum retrieval level)."""
        return tuple(mask.bit_count() for mask in self.below)

    @property
    def full_mask(self) -> int:
        return (1 << self.n) - 1


def parse_instance(text: str) -> Instance:
    """Read an instance from its JSON document form."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"malformed instance document: {exc}") from None
    if not isinstance(doc, dict):
        raise InstanceError("instance document must be a JSON object")
    if doc.get("version", 1) != 1:
        raise InstanceError(f"unsupported instance version {doc.get('version')!r}")
    stacks = doc.get("stacks")
    targets = doc.get("targets", [])
    if not isinstance(stacks, list) or not all(isinstance(h, int) for h in stacks):
        raise InstanceError("'stacks' must be a list of integers")
    if not isinstance(targets, list):
        raise InstanceError("'targets' must be a list")
    pos = []
    for k, item in enumerate(targets):
        if not isinstance(item, dict) or not isinstance(item.get("stack"), int) \
                or not isinstance(item.get("height"), int):
            raise InstanceError(f"target entry {k} needs integer 'stack' and 'height'")
        pos.append((item["stack"], item["height"]))
    return Instance(tuple(stacks), tuple(pos))


def write_instance(instance: Instance) -> str:
    doc = {
        "version": 1,
        "stacks": list(instance.stacks),
        "targets": [{"stack": s, "height": h} for s, h in instance.targets],
    }
    return json.dumps(doc)


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class SliceState:
    """The slice after some targets have been retrieved.

    Everything is derived from ``retrieved``; two states with the same
    retrieved set are the same state.
    """

    instance: Instance
    retrieved: frozenset[int] = frozenset()

    def __post_init__(self):
        retrieved = frozenset(self.retrieved)
        object.__setattr__(self, "retrieved", retrieved)
        for b in retrieved:
            if not 0 <= b < self.instance.n:
                raise SolutionError(f"unknown target {b}")

    @classmethod
    def from_mask(cls, instance: Instance, mask: int) -> "SliceState":
        return cls(instance, frozenset(b for b in range(instance.n) if mask >> b & 1))

    @cached_property
    def mask(self) -> int:
        return sum(1 << b for b in self.retrieved)

    @cached_property
    def heights(self) -> tuple[int, ...]:
        inst = self.instance
        mask = self.mask
        return tuple(h - (sm & mask).bit_count() for h, sm in zip(inst.stacks, inst.stack_masks))

    def level(self, b: int) -> int:
        """Number of targets below ``b`` in its stack that are already gone."""
        return (self.instance.below[b] & self.mask).bit_count()

    def target_height(self, b: int) -> int:
        return self.instance.targets[b][1] - self.level(b)

    @property
    def unretrieved(self) -> tuple[int, ...]:
        return tuple(b for b in range(self.instance.n) if b not in self.retrieved)

    @property
    def is_complete(self) -> bool:
        return len(self.retrieved) == self.instance.n

    def after(self, batch: Iterable[int]) -> "SliceState":
        return SliceState(self.instance, self.retrieved | frozenset(batch))

    def residual_instance(self) -> tuple[Instance, tuple[int, ...]]:
        """The remaining problem as a fresh instance plus the index map back."""
        keep = self.unretrieved
        targets = tuple((self.instance.targets[b][0], self.target_height(b)) for b in keep)
        return Instance(self.heights, targets), keep

    def is_feasible(self) -> bool:
        return state_feasible(self.instance, self.mask)


# ---------------------------------------------------------------------------
# feasibility


def feasibility_violations(instance: Instance) -> list[tuple[int, int]]:
    """All (target, stack) pairs where a left stack is too short for the target.

    A target can sink at most ``R(b)`` levels, and the stacks to its left must
    then reach one below it.
    """
    out = []
    R = instance.max_level
    for b, (s, h) in enumerate(instance.targets):
        need = h - R[b] - 1
        for t in range(1, s):
            if instance.stacks[t - 1] < need:
                out.append((b, t))
    return out


def check_feasibility(instance: Instance) -> bool:
    R = instance.max_level
    prefix_min = math.inf
    mins = []
    for h in instance.stacks:
        mins.append(prefix_min)
        prefix_min = min(prefix_min, h)
    return all(mins[s - 1] >= h - R[b] - 1 for b, (s, h) in enumerate(instance.targets))


def state_feasible(instance: Instance, mask: int) -> bool:
    """Feasibility of what remains after the targets in ``mask`` are gone.

    A remaining target's demand on the stacks to its left does not change
    as targets are retrieved, so only residual heights need recomputing.
    """
    low = math.inf
    for height, smask, members in instance.demand_table:
        rest = smask & ~mask
        if rest:
            for b, need in members:
                if rest >> b & 1:
                    if low < need:
                        return False
                    break
        low = min(low, height - (smask & mask).bit_count())
    return True


# ---------------------------------------------------------------------------
# plans and solutions


@dataclass(frozen=True)
class CyclePlan:
    order: tuple[int, ...]
    clearances: tuple[int, ...]
    energy: int
    anchor: tuple[int, int] | None = None

    @property
    def batch(self) -> frozenset[int]:
        return frozenset(self.order)


@dataclass(frozen=True)
class Solution:
    cycles: tuple[CyclePlan, ...] = ()

    @property
    def total_energy(self) -> int:
        return sum(c.energy for c in self.cycles)


def batch_anchor(state: SliceState, batch: Iterable[int]) -> tuple[int, int]:
    """Topmost member of the rightmost occupied stack, with its retrieval level."""
    batch = list(batch)
    if not batch:
        raise SolutionError("empty batch has no anchor")
    inst = state.instance
    b = max(batch, key=lambda x: (inst.targets[x][0], inst.targets[x][1]))
    return b, state.level(b)


def infer_clearances(state: SliceState, ordered: Sequence[int]) -> tuple[int, ...]:
    """Clearances forced by a retrieval order.

    Every retrieval pins the residual height of its own stack and of all
    stacks to its left, so the clearance of each stack touched by such a
    demand is determined by the first one.  Untouched stacks lift nothing.
    Conflicting later demands are left for :func:`simulate_cycle` to report.
    """
    inst = state.instance
    heights = state.heights
    clear: list[int | None] = [None] * inst.m
    taken = [0] * inst.m
    for step, b in enumerate(ordered):
        s = inst.targets[b][0]
        h = state.target_height(b)
        for t in range(s):
            if clear[t] is not None:
                continue
            want = (h if t == s - 1 else h - 1) + taken[t]
            if not 0 <= want <= heights[t]:
                raise AccessibilityError(
                    f"step {step}: stack {t + 1} of height {heights[t]} cannot offer "
                    f"residual {want - taken[t]} for target {b} at height {h}",
                    step=step, target=b, condition="a" if t == s - 1 else "b", stack=t + 1,
                )
            clear[t] = want
        taken[s - 1] += 1
    return tuple(heights[t] if c is None else c for t, c in enumerate(clear))


def simulate_cycle(
    state: SliceState,
    ordered: Sequence[int],
    clearances: Sequence[int] | None = None,
) -> tuple[SliceState, int]:
    """Run one cycle and return the post-cycle state and its energy."""
    inst = state.instance
    heights = state.heights
    if clearances is None:
        clearances = infer_clearances(state, ordered)
    clearances = tuple(int(c) for c in clearances)
    if len(clearances) != inst.m:
        raise SolutionError(f"expected {inst.m} clearances, got {len(clearances)}")
    for t, (c, h) in enumerate(zip(clearances, heights), start=1):
        if not 0 <= c <= h:
            raise SolutionError(f"clearance {c} of stack {t} outside 0..{h}")
    residual = list(clearances)
    done = set()
    for step, b in enumerate(ordered):
        if not 0 <= b < inst.n:
            raise SolutionError(f"unknown target {b}")
        if b in state.retrieved or b in done:
            raise SolutionError(f"target {b} already retrieved")
        s = inst.targets[b][0]
        h = state.target_height(b)
        if residual[s - 1] != h:
            raise AccessibilityError(
                f"step {step}: target {b} at height {h} is not the residual top of "
                f"stack {s} (residual {residual[s - 1]})",
                step=step, target=b, condition="a", stack=s,
            )
        for t in range(s - 1):
            if residual[t] != h - 1:
                raise AccessibilityError(
                    f"step {step}: stack {t + 1} has residual {residual[t]}, "
                    f"target {b} at height {h} needs {h - 1}",
                    step=step, target=b, condition="b", stack=t + 1,
                )
        residual[s - 1] -= 1
        done.add(b)
    energy = sum(h - c for h, c in zip(heights, clearances))
    return state.after(done), energy


def simulate_solution(instance: Instance, solution: Solution) -> int:
    state = SliceState(instance)
    total = 0
    for k, plan in enumerate(solution.cycles):
        if not plan.order:
            raise SolutionError(f"cycle {k} retrieves nothing")
        try:
            state, energy = simulate_cycle(state, plan.order, plan.clearances)
        except SolutionError as exc:
            exc.args = (f"cycle {k}: {exc}",)
            raise
        if plan.energy != energy:
            raise SolutionError(f"cycle {k}: recorded energy {plan.energy} but simulated {energy}")
        total += energy
    missing = sorted(set(range(instance.n)) - state.retrieved)
    if missing:
        raise SolutionError(f"targets never retrieved: {missing}")
    return total


# ---------------------------------------------------------------------------
# solution files


def parse_solution(text: str) -> list[tuple[tuple[int, ...], tuple[int, ...] | None]]:
    """Raw cycles from a solution document: (order, clearances or None)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SolutionError(f"malformed solution document: {exc}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("cycles"), list):
        raise SolutionError("solution document needs a 'cycles' list")
    out = []
    for k, cyc in enumerate(doc["cycles"]):
        if not isinstance(cyc, dict) or not isinstance(cyc.get("targets"), list):
            raise SolutionError(f"cycle {k} needs a 'targets' list")
        order = tuple(int(b) for b in cyc["targets"])
        clear = cyc.get("clearances")
        out.append((order, None if clear is None else tuple(int(c) for c in clear)))
    return out


def load_solution(instance: Instance, text: str) -> Solution:
    """Parse and simulate a solution document, filling in energies.

    Missing clearances are inferred from the retrieval order.
    """
    state = SliceState(instance)
    cycles = []
    for order, clear in parse_solution(text):
        if clear is None:
            clear = infer_clearances(state, order)
        anchor = batch_anchor(state, order) if order else None
        nxt, energy = simulate_cycle(state, order, clear)
        cycles.append(CyclePlan(order, tuple(clear), energy, anchor))
        state = nxt
    solution = Solution(tuple(cycles))
    simulate_solution(instance, solution)
    return solution


def write_solution(solution: Solution, clearances: bool = True) -> str:
    cycles = []
    for plan in solution.cycles:
        entry = {"targets": list(plan.order)}
        if clearances:
            entry["clearances"] = list(plan.clearances)
        cycles.append(entry)
    return json.dumps({"cycles": cycles})


# ---------------------------------------------------------------------------
# sparse view and closed-form cycle energy


@dataclass(frozen=True)
class SparseView:
    """Per-target summary sufficient to price anchored cycles.

    ``w[b]`` is ``math.inf`` when no target-free stack lies left of ``b``.
    ``A[(b, i)]`` is ``None`` where some left stack cannot support the
    shuttle at the anchor's height.
    """

    R: tuple[int, ...]
    w: tuple[float, ...]
    A: dict[tuple[int, int], int | None]
    U: frozenset[int]

    def anchor_energy(self, b: int, i: int) -> int:
        if not 0 <= i <= self.R[b]:
            raise SolutionError(f"level {i} outside 0..{self.R[b]} for target {b}")
        value = self.A[(b, i)]
        if value is None:
            raise SolutionError(f"anchor energy undefined for target {b} at level {i}")
        return value


def derive_sparse(instance: Instance) -> SparseView:
    R = instance.max_level
    U = frozenset(s for s, _ in instance.targets)
    w = []
    A = {}
    for b, (s, h) in enumerate(instance.targets):
        free = [instance.stacks[t - 1] for t in range(1, s) if t not in U]
        w.append(min(free) if free else math.inf)
        left = instance.stacks[: s - 1]
        above = instance.stacks[s - 1] - h
        for i in range(R[b] + 1):
            floor = h - i - 1
            if any(x < floor for x in left):
                A[(b, i)] = None
            else:
                A[(b, i)] = above + sum(x - floor for x in left)
    return SparseView(tuple(R), tuple(w), A, U)


def cycle_energy_closed_form(
    state: SliceState,
    anchor: tuple[int, int],
    batch: Iterable[int],
    sparse: SparseView | None = None,
) -> int:
    """Energy of an anchored cycle from the pristine anchor energy.

    Each target already retrieved left of the anchor, or above it in its own
    stack, saves one lift; so does each batch member left of the anchor whose
    current height is at least the anchor's.
    """
    inst = state.instance
    b, i = anchor
    if state.level(b) != i:
        raise SolutionError(f"anchor target {b} is at level {state.level(b)}, not {i}")
    if b in state.retrieved:
        raise SolutionError(f"anchor target {b} already retrieved")
    sparse = sparse or derive_sparse(inst)
    base = sparse.anchor_energy(b, i)
    s, h0 = inst.targets[b]
    prev = sum(
        1 for x in state.retrieved
        if inst.targets[x][0] < s or (inst.targets[x][0] == s and inst.targets[x][1] > h0)
    )
    h = state.target_height(b)
    curr = sum(1 for x in batch if inst.targets[x][0] < s and state.target_height(x) >= h)
    return base - prev - curr
