"""Shared builders for tests."""

from __future__ import annotations

import random
from pathlib import Path

from sacrp import Instance, check_feasibility, parse_instance

DATA = Path(__file__).parent / "data"


def golden() -> Instance:
    return parse_instance((DATA / "golden.json").read_text())


def random_instance(rng: random.Random, n: int, w: int, h: int, feasible: bool = True) -> Instance:
    """Random instance with n targets on at most w stacks of height at most h."""
    n = min(n, w * h)
    while True:
        m = rng.randint(1, w)
        heights = [rng.randint(1, h) for _ in range(m)]
        cells = [(t + 1, y + 1) for t in range(m) for y in range(heights[t])]
        if len(cells) < n:
            continue
        inst = Instance(tuple(heights), tuple(rng.sample(cells, n)))
        if not feasible or check_feasibility(inst):
            return inst


def raise_target(rng: random.Random, inst: Instance, lift: int) -> Instance:
    """Copy of ``inst`` with one target moved ``lift`` cells above its stack's top."""
    b = rng.randrange(inst.n)
    s, _ = inst.targets[b]
    stacks = list(inst.stacks)
    stacks[s - 1] += lift
    targets = list(inst.targets)
    targets[b] = (s, stacks[s - 1])
    return Instance(tuple(stacks), tuple(targets))
