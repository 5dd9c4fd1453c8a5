"""Shapes of single-cycle batches and how to grow them.

A batch is described relative to its *anchor*: the topmost member of the
rightmost stack it touches.  Call the anchor's stack ``S`` and its current
height the anchor row ``h``.  A batch can be retrieved in one cycle exactly
when it can be grown from the anchor by these local steps:

* ``SameRow``: any target at row ``h`` left of ``S`` (one lift fewer).
* ``RowAbove``: a target at ``(s, r)``, ``r > h``, ``s < S``, when every
  position ``(1..s, r - 1)`` is already in the batch (one lift fewer).
* ``RowBelowAdjacent`` / ``RowBelowDeep``: a target at ``(s, r)``, ``r < h``,
  when ``(1..s-1, r)`` are in the batch and either ``r == h - 1`` or
  ``(s, r + 1)`` is in the batch (no change in energy).

Positions are (stack, current height) pairs in the evaluating state.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Iterator

from .model import (
    AccessibilityError,
    CyclePlan,
    SliceState,
    SolutionError,
    SparseView,
    batch_anchor,
    derive_sparse,
    simulate_cycle,
)

__all__ = [
    "GeometryError",
    "Rule",
    "Extension",
    "Rejection",
    "Batch",
    "Triangularity",
    "is_weakly_triangular",
    "anchor_feasible",
    "plan_cycle",
    "classify_extension",
    "enumerate_batches",
    "canonical_key",
]


class GeometryError(SolutionError):
    pass


class Rule(enum.Enum):
    SAME_ROW = "SameRow"
    ROW_ABOVE = "RowAbove"
    ROW_BELOW_ADJACENT = "RowBelowAdjacent"
    ROW_BELOW_DEEP = "RowBelowDeep"

    @property
    def energy_delta(self) -> int:
        return -1 if self in (Rule.SAME_ROW, Rule.ROW_ABOVE) else 0


@dataclass(frozen=True)
class Extension:
    candidate: int
    rule: Rule

    @property
    def energy_delta(self) -> int:
        return self.rule.energy_delta

    def __bool__(self):
        return True


@dataclass(frozen=True)
class Rejection:
    candidate: int
    reason: str

    def __bool__(self):
        return False


@dataclass(frozen=True)
class Batch:
    """A single-cycle batch in canonical construction order."""

    targets: frozenset[int]
    anchor: tuple[int, int]
    order: tuple[int, ...]
    rules: tuple[Rule, ...]
    energy: int

    @property
    def mask(self) -> int:
        return sum(1 << b for b in self.targets)


@dataclass(frozen=True)
class Triangularity:
    height_continuous: bool
    stack_unimodular: bool
    prefix_closed: bool

    def __bool__(self):
        return self.height_continuous and self.stack_unimodular and self.prefix_closed


def _positions(state: SliceState, batch: Iterable[int]) -> dict[tuple[int, int], int]:
    inst = state.instance
    out = {}
    for b in batch:
        if b in state.retrieved:
            raise GeometryError(f"target {b} already retrieved")
        out[(inst.targets[b][0], state.target_height(b))] = b
    return out


def is_weakly_triangular(state: SliceState, batch: Iterable[int]) -> Triangularity:
    """Height continuity, stack unimodality and prefix closure at current heights.

    Prefix closure is checked against the anchor row (the highest row whose
    rightmost member sits in the batch's rightmost stack).  Rows above it
    need the full row beneath them up to their rightmost stack; rows below
    it need their own row to the left and, except directly under the anchor
    row, the row above.  Positions without a UL are ignored.
    """
    pos = _positions(state, batch)
    if not pos:
        raise GeometryError("empty batch")
    heights = state.heights
    rightmost: dict[int, int] = {}
    for s, r in pos:
        rightmost[r] = max(rightmost.get(r, 0), s)
    rows = sorted(rightmost)
    continuous = rows == list(range(rows[0], rows[-1] + 1))

    seq = [rightmost[r] for r in rows]
    k = 0
    while k + 1 < len(seq) and seq[k + 1] >= seq[k]:
        k += 1
    while k + 1 < len(seq) and seq[k + 1] <= seq[k]:
        k += 1
    unimodal = k == len(seq) - 1

    top = max(seq)
    peak = max(r for r in rows if rightmost[r] == top)

    def covered(t: int, r: int) -> bool:
        return heights[t - 1] < r or (t, r) in pos

    closed = True
    for r in rows:
        s = rightmost[r]
        if r > peak:
            closed = all(covered(t, r - 1) for t in range(1, s + 1))
        elif r < peak:
            closed = all(covered(t, r) for t in range(1, s))
            if closed and r + 1 < peak:
                closed = all(covered(t, r + 1) for t in range(1, s + 1))
        if not closed:
            break
    return Triangularity(continuous, unimodal, closed)


def anchor_feasible(state: SliceState, b: int) -> bool:
    """Whether every stack left of ``b`` reaches one below its current height."""
    s = state.instance.targets[b][0]
    h = state.target_height(b)
    return all(x >= h - 1 for x in state.heights[: s - 1])


def plan_cycle(state: SliceState, batch: Iterable[int]) -> CyclePlan:
    """Clearances and retrieval order for a weakly triangular batch.

    Members go top row first, left to right within a row.  Stacks holding
    members are lifted above their topmost member, member-free stacks left
    of the anchor keep one UL below the anchor row, the rest stay put.
    """
    batch = list(batch)
    shape = is_weakly_triangular(state, batch)
    if not shape:
        raise GeometryError(f"batch {sorted(batch)} is not weakly triangular: {shape}")
    inst = state.instance
    anchor, level = batch_anchor(state, batch)
    S = inst.targets[anchor][0]
    h = state.target_height(anchor)
    heights = state.heights
    for t in range(1, S):
        if heights[t - 1] < h - 1:
            raise GeometryError(f"stack {t} of height {heights[t - 1]} cannot support row {h}")
    row = {b: state.target_height(b) for b in batch}
    order = tuple(sorted(batch, key=lambda b: (-row[b], inst.targets[b][0])))
    clear = list(heights)
    for t in range(1, S):
        clear[t - 1] = h - 1
    tops: dict[int, int] = {}
    for b in batch:
        s = inst.targets[b][0]
        tops[s] = max(tops.get(s, 0), row[b])
    for s, r in tops.items():
        clear[s - 1] = r
    try:
        _, energy = simulate_cycle(state, order, clear)
    except AccessibilityError as exc:
        raise GeometryError(f"a left stack is too short to support the path: {exc}") from None
    return CyclePlan(order, tuple(clear), energy, (anchor, level))


def classify_extension(state: SliceState, batch, candidate: int):
    """Which growth rule admits ``candidate`` into ``batch``.

    ``batch`` may be a :class:`Batch` or an iterable of targets whose anchor
    is derived.  Returns an :class:`Extension` or a :class:`Rejection` naming
    the first failed precondition.
    """
    if isinstance(batch, Batch):
        members, anchor = batch.targets, batch.anchor[0]
    else:
        members = frozenset(batch)
        anchor = batch_anchor(state, members)[0]
    inst = state.instance
    if candidate in state.retrieved or candidate in members:
        raise GeometryError(f"candidate {candidate} is retrieved or already in the batch")
    pos = _positions(state, members)
    S = inst.targets[anchor][0]
    h = state.target_height(anchor)
    s = inst.targets[candidate][0]
    r = state.target_height(candidate)
    if s > S:
        raise GeometryError(f"candidate {candidate} lies right of the anchor stack {S}")

    heights = state.heights
    grid = {
        (inst.targets[b][0], state.target_height(b)): b
        for b in range(inst.n) if b not in state.retrieved
    }

    def missing(t: int, row: int) -> str | None:
        if (t, row) in pos:
            return None
        if heights[t - 1] < row:
            return f"position ({t}, {row}) is empty"
        if (t, row) in grid:
            return f"position ({t}, {row}) holds target {grid[(t, row)]} outside the batch"
        return f"position ({t}, {row}) holds a non-target"

    if r == h:
        return Extension(candidate, Rule.SAME_ROW)
    if r > h:
        for t in range(1, s + 1):
            why = missing(t, r - 1)
            if why:
                return Rejection(candidate, why)
        if s == S:
            return Rejection(candidate, "candidate sits above the anchor")
        return Extension(candidate, Rule.ROW_ABOVE)
    if r < h - 1:
        why = missing(s, r + 1)
        if why:
            return Rejection(candidate, why)
    for t in range(1, s):
        why = missing(t, r)
        if why:
            return Rejection(candidate, why)
    return Extension(candidate, Rule.ROW_BELOW_ADJACENT if r == h - 1 else Rule.ROW_BELOW_DEEP)


def canonical_key(anchor_row: int, stack: int, row: int) -> tuple[int, int, int]:
    """Insertion order of a non-anchor member relative to its anchor.

    Same row right to left, then rows above bottom-up, then rows below
    top-down; left to right inside a row.
    """
    if row == anchor_row:
        return (0, 0, -stack)
    if row > anchor_row:
        return (1, row, stack)
    return (2, -row, stack)


class Layout:
    """Precomputed geometry of one state, shared by all anchors."""

    __slots__ = ("state", "stack", "row", "grid", "by_row", "rows", "left_min", "todo", "prev_left", "heights")

    def __init__(self, state: SliceState):
        inst = state.instance
        self.state = state
        self.heights = state.heights
        mask = state.mask
        self.stack = [s for s, _ in inst.targets]
        self.todo = [b for b in range(inst.n) if not mask >> b & 1]
        self.row = [0] * inst.n
        self.grid = {}
        for b in self.todo:
            r = inst.targets[b][1] - (inst.below[b] & mask).bit_count()
            self.row[b] = r
            self.grid[(self.stack[b], r)] = b
        # remaining targets grouped by current row, left to right
        self.by_row: dict[int, list[tuple[int, int]]] = {}
        for (t, r), b in sorted(self.grid.items()):
            self.by_row.setdefault(r, []).append((b, t))
        self.rows = sorted(self.by_row)
        self.left_min = [math.inf] * (inst.m + 1)
        for t in range(1, inst.m):
            self.left_min[t + 1] = min(self.left_min[t], self.heights[t - 1])
        # retrieved targets per stack, for the closed-form energy
        gone = [0] * (inst.m + 1)
        for b in range(inst.n):
            if mask >> b & 1:
                gone[self.stack[b]] += 1
        self.prev_left = [0] * (inst.m + 1)
        for t in range(1, inst.m):
            self.prev_left[t + 1] = self.prev_left[t] + gone[t]


def _anchored(layout: Layout, anchor: int, sparse: SparseView, out: list, trace: bool) -> None:
    """Depth-first canonical growth from one anchor.

    Appends (mask, energy, anchor) to ``out``, or (mask, energy, order,
    rules) when ``trace`` is set.
    """
    state = layout.state
    inst = state.instance
    stack, row = layout.stack, layout.row
    S, h = stack[anchor], row[anchor]
    level = inst.targets[anchor][1] - h
    above_gone = (inst.above[anchor] & state.mask).bit_count()
    energy0 = sparse.A[(anchor, level)] - layout.prev_left[S] - above_gone

    # candidates in canonical order, see canonical_key
    by_row = layout.by_row
    info = [(b, 1 << b, t, h, Rule.SAME_ROW, -1) for b, t in reversed(by_row[h]) if t < S]
    for r in layout.rows:
        if r > h:
            info.extend((b, 1 << b, t, r, Rule.ROW_ABOVE, -1) for b, t in by_row[r] if t < S)
    for r in reversed(layout.rows):
        if r < h:
            rule = Rule.ROW_BELOW_ADJACENT if r == h - 1 else Rule.ROW_BELOW_DEEP
            info.extend((b, 1 << b, t, r, rule, 0) for b, t in by_row[r] if t <= S)
    ncand = len(info)

    # prefix[r]: largest k with (1..k, r) all in the batch
    prefix: dict[int, int] = {h: 1 if S == 1 else 0}
    inside = {(S, h)}
    order = [anchor]
    rules: list[Rule] = []

    def grow(start: int, mask: int, energy: int):
        if trace:
            out.append((mask, energy, tuple(order), tuple(rules)))
        else:
            out.append((mask, energy, anchor))
        for k in range(start, ncand):
            b, bit, s, r, rule, delta = info[k]
            if r > h:
                if prefix.get(r - 1, 0) < s:
                    continue
            elif r < h:
                if s > 1 and prefix.get(r, 0) < s - 1:
                    continue
                if r < h - 1 and (s, r + 1) not in inside:
                    continue
            inside.add((s, r))
            old = prefix.get(r, 0)
            j = old
            while (j + 1, r) in inside:
                j += 1
            prefix[r] = j
            if trace:
                order.append(b)
                rules.append(rule)
            grow(k + 1, mask | bit, energy + delta)
            if trace:
                order.pop()
                rules.pop()
            inside.discard((s, r))
            prefix[r] = old

    grow(0, 1 << anchor, energy0)


def iter_batch_masks(layout: Layout, sparse: SparseView) -> list[tuple[int, int, int]]:
    """(mask, energy, anchor) for every single-cycle batch of the layout's state."""
    out: list = []
    left_min, stack, row = layout.left_min, layout.stack, layout.row
    for a in layout.todo:
        if left_min[stack[a]] >= row[a] - 1:
            _anchored(layout, a, sparse, out, False)
    return out


def enumerate_batches(state: SliceState, sparse: SparseView | None = None) -> Iterator[Batch]:
    """Every weakly triangular, anchor-feasible batch, each exactly once."""
    sparse = sparse or derive_sparse(state.instance)
    layout = Layout(state)
    for a in layout.todo:
        if layout.left_min[layout.stack[a]] < layout.row[a] - 1:
            continue
        level = state.instance.targets[a][1] - layout.row[a]
        found: list = []
        _anchored(layout, a, sparse, found, True)
        for _, energy, order, rules in found:
            yield Batch(frozenset(order), (a, level), order, rules, energy)
