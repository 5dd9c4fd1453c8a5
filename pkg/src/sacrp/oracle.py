"""Brute-force reference solver for tiny instances.

Nothing here relies on the batch-shape results used by the real solvers.
Single cycles are found by extending retrieval sequences one target at a
time; a prefix survives only if the accessibility equalities it imposes on
the clearances are consistent.  Every surviving sequence is re-checked with
:func:`sacrp.model.simulate_cycle`.
"""

from __future__ import annotations

from .model import (
    CyclePlan,
    InfeasibleError,
    Instance,
    SacrpError,
    SliceState,
    Solution,
    batch_anchor,
    simulate_cycle,
)

DEFAULT_MAX_TARGETS = 7


class OracleLimitError(SacrpError, ValueError):
    pass


def _sequences(state: SliceState):
    """Yield (order, clearances, energy) for every retrievable sequence."""
    inst = state.instance
    heights = state.heights
    todo = [b for b in range(inst.n) if b not in state.retrieved]
    pos = {b: (inst.targets[b][0] - 1, state.target_height(b)) for b in todo}
    clear: list[int | None] = [None] * inst.m
    taken = [0] * inst.m
    order: list[int] = []
    used = set()

    def extend():
        for b in todo:
            if b in used:
                continue
            s, h = pos[b]
            fixed = []
            ok = True
            for t in range(s + 1):
                want = (h if t == s else h - 1) + taken[t]
                if clear[t] is None:
                    if not 0 <= want <= heights[t]:
                        ok = False
                        break
                    fixed.append(t)
                    clear[t] = want
                elif clear[t] != want:
                    ok = False
                    break
            if ok:
                order.append(b)
                used.add(b)
                taken[s] += 1
                clearances = tuple(heights[t] if c is None else c for t, c in enumerate(clear))
                yield tuple(order), clearances, sum(x - c for x, c in zip(heights, clearances))
                yield from extend()
                taken[s] -= 1
                used.discard(b)
                order.pop()
            for t in fixed:
                clear[t] = None

    yield from extend()


def _check_cap(instance: Instance, max_targets: int):
    if instance.n > max_targets:
        raise OracleLimitError(f"oracle limited to {max_targets} targets, instance has {instance.n}")


def enumerate_feasible_batches_raw(
    state: SliceState, max_targets: int = DEFAULT_MAX_TARGETS
) -> dict[frozenset[int], tuple[int, tuple[int, ...], tuple[int, ...]]]:
    """Every target set retrievable in one cycle from ``state``.

    Maps each set to (minimum energy, order, clearances) of a witness.
    """
    _check_cap(state.instance, max_targets)
    best: dict[frozenset[int], tuple[int, tuple[int, ...], tuple[int, ...]]] = {}
    for order, clearances, energy in _sequences(state):
        key = frozenset(order)
        if key not in best or energy < best[key][0]:
            best[key] = (energy, order, clearances)
    for key, (energy, order, clearances) in best.items():
        _, simulated = simulate_cycle(state, order, clearances)
        assert simulated == energy, (key, simulated, energy)
    return best


def solve_oracle(instance: Instance, max_targets: int = DEFAULT_MAX_TARGETS) -> tuple[int, Solution]:
    """Exact optimum by memoised search over retrieved sets."""
    _check_cap(instance, max_targets)
    full = instance.full_mask
    memo: dict[int, tuple[float, tuple | None]] = {full: (0, None)}

    def best_from(mask: int):
        if mask in memo:
            return memo[mask]
        state = SliceState.from_mask(instance, mask)
        result: tuple[float, tuple | None] = (float("inf"), None)
        for batch, (energy, order, clear) in enumerate_feasible_batches_raw(state, max_targets).items():
            nxt = mask | sum(1 << b for b in batch)
            rest, _ = best_from(nxt)
            if energy + rest < result[0]:
                result = (energy + rest, (order, clear, energy, nxt))
        memo[mask] = result
        return result

    total, _ = best_from(0)
    if total == float("inf"):
        raise InfeasibleError("no complete retrieval exists")
    cycles = []
    mask = 0
    while mask != full:
        _, (order, clear, energy, nxt) = memo[mask]
        state = SliceState.from_mask(instance, mask)
        cycles.append(CyclePlan(order, clear, energy, batch_anchor(state, order)))
        mask = nxt
    return int(total), Solution(tuple(cycles))
