import random

import pytest

from helpers import golden, random_instance
from sacrp import GeometryError, Instance, Rule, SliceState, classify_extension, enumerate_batches, plan_cycle
from sacrp.geometry import canonical_key, is_weakly_triangular
from sacrp.oracle import enumerate_feasible_batches_raw

# golden instance targets, 0-based: 0=(1,4) 1=(4,4) 2=(1,3) 3=(2,3) 4=(4,3) 5=(1,2)


@pytest.fixture
def start():
    return SliceState(golden())


def test_weak_triangularity(start):
    assert is_weakly_triangular(start, [0, 2, 3, 4, 5])
    shape = is_weakly_triangular(start, [0, 5])
    assert not shape and not shape.height_continuous
    for b in range(6):
        assert is_weakly_triangular(start, [b])
    with pytest.raises(GeometryError):
        is_weakly_triangular(start, [])


def test_plan_cycle_golden(start):
    plan = plan_cycle(start, [0, 2, 3, 4, 5])
    assert plan.order == (0, 2, 3, 4, 5)
    assert plan.clearances == (4, 3, 2, 3)
    assert plan.energy == 3
    pair = plan_cycle(start, [3, 4])
    assert pair.order == (3, 4)
    assert pair.clearances == (2, 3, 2, 3)
    assert pair.energy == 5


def test_plan_cycle_singleton_top():
    plan = plan_cycle(SliceState(Instance((3,), ((1, 3),))), [0])
    assert plan.energy == 0


def test_plan_cycle_rejects(start):
    with pytest.raises(GeometryError):
        plan_cycle(start, [0, 5])
    with pytest.raises(GeometryError):
        # stack 3 of height 2 cannot carry the shuttle at row 4
        plan_cycle(start, [1])


def test_classify_golden(start):
    ext = classify_extension(start, [4], 3)
    assert ext and ext.rule is Rule.SAME_ROW and ext.energy_delta == -1
    ext = classify_extension(start, [4, 3, 2], 0)
    assert ext and ext.rule is Rule.ROW_ABOVE and ext.energy_delta == -1
    ext = classify_extension(start, [4, 3, 2, 0], 5)
    assert ext and ext.rule is Rule.ROW_BELOW_ADJACENT and ext.energy_delta == 0
    rej = classify_extension(start, [4, 3, 2], 1)
    assert not rej
    # stack 3 has height 2, so the blocking position is empty rather than a non-target
    assert "(3, 3)" in rej.reason and "empty" in rej.reason


def test_classify_deep_and_errors():
    inst = Instance((3, 3), ((1, 1), (1, 2), (2, 3)))
    state = SliceState(inst)
    assert classify_extension(state, [2, 1], 0).rule is Rule.ROW_BELOW_DEEP
    rej = classify_extension(state, [2], 0)
    assert not rej and "(1, 2)" in rej.reason
    with pytest.raises(GeometryError):
        classify_extension(state, [0], 2)
    with pytest.raises(GeometryError):
        classify_extension(state, [2], 2)


def test_canonical_key_order():
    keys = [canonical_key(3, s, r) for s, r in [(1, 3), (2, 3), (1, 4), (2, 4), (1, 2), (2, 2)]]
    assert sorted(keys) == [keys[k] for k in (1, 0, 2, 3, 4, 5)]


def test_enumerate_golden(start):
    found = {b.targets: b for b in enumerate_batches(start)}
    assert found[frozenset({0, 2, 3, 4, 5})].energy == 3
    assert found[frozenset({0})].energy == 1
    assert len(found) == 24
    done = start.after(range(6))
    assert list(enumerate_batches(done)) == []


def test_enumerated_batches_are_sound_and_unique():
    rng = random.Random(5)
    for _ in range(40):
        inst = random_instance(rng, rng.randint(1, 7), 5, 5)
        state = SliceState(inst)
        seen = set()
        for batch in enumerate_batches(state):
            assert batch.targets not in seen
            seen.add(batch.targets)
            assert is_weakly_triangular(state, batch.targets)
            assert plan_cycle(state, batch.targets).energy == batch.energy
        raw = enumerate_feasible_batches_raw(state)
        assert seen == set(raw)
        for key in seen:
            assert raw[key][0] <= plan_cycle(state, key).energy
