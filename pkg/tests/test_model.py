import json

import pytest

from helpers import DATA, golden
from sacrp import (
    AccessibilityError,
    InstanceError,
    Instance,
    SliceState,
    SolutionError,
    check_feasibility,
    load_solution,
    parse_instance,
    simulate_cycle,
    simulate_solution,
    write_instance,
    write_solution,
)
from sacrp.model import (
    batch_anchor,
    cycle_energy_closed_form,
    derive_sparse,
    feasibility_violations,
    infer_clearances,
    state_feasible,
)


def test_instance_round_trip():
    inst = golden()
    assert inst.stacks == (5, 4, 2, 4)
    assert inst.targets == ((1, 4), (4, 4), (1, 3), (2, 3), (4, 3), (1, 2))
    assert parse_instance(write_instance(inst)) == inst


@pytest.mark.parametrize(
    "stacks, targets",
    [
        ((), ()),
        ((0,), ()),
        ((2,), ((2, 1),)),
        ((2,), ((1, 3),)),
        ((2,), ((1, 1), (1, 1))),
    ],
)
def test_invalid_instances(stacks, targets):
    with pytest.raises(InstanceError):
        Instance(stacks, targets)


@pytest.mark.parametrize(
    "text",
    [
        "not json",
        "[]",
        '{"version": 2, "stacks": [1]}',
        '{"stacks": "abc"}',
        '{"stacks": [1], "targets": [{"stack": 1}]}',
    ],
)
def test_malformed_documents(text):
    with pytest.raises(InstanceError):
        parse_instance(text)


def test_derived_levels():
    inst = golden()
    # stack 1 holds targets 5 (row 2), 2 (row 3), 0 (row 4)
    assert inst.max_level == (2, 1, 1, 0, 0, 0)
    state = SliceState(inst).after([5])
    assert state.heights == (4, 4, 2, 4)
    assert state.level(0) == 1 and state.target_height(0) == 3


def test_golden_cycles():
    inst = golden()
    state = SliceState(inst)
    order = (0, 2, 3, 4, 5)
    clear = infer_clearances(state, order)
    nxt, energy = simulate_cycle(state, order, clear)
    assert energy == 3
    nxt2, energy2 = simulate_cycle(nxt, (1,))
    assert energy2 == 1
    assert nxt2.is_complete


def test_inaccessible_order_reports_condition():
    inst = golden()
    state = SliceState(inst)
    # target 5 at the bottom of stack 1 cannot come before the two above it
    with pytest.raises(AccessibilityError) as info:
        simulate_cycle(state, (5, 2), (2, 4, 2, 4))
    assert info.value.condition == "a"
    assert info.value.target == 2


def test_left_stack_condition():
    inst = Instance((3, 3), ((2, 3),))
    with pytest.raises(AccessibilityError) as info:
        simulate_cycle(SliceState(inst), (0,), (3, 3))
    assert info.value.condition == "b" and info.value.stack == 1


def test_clearance_bounds():
    inst = golden()
    with pytest.raises(SolutionError):
        simulate_cycle(SliceState(inst), (0,), (6, 4, 2, 4))
    with pytest.raises(SolutionError):
        simulate_cycle(SliceState(inst), (0,), (4, 4, 2))


def test_solution_validation_errors():
    inst = golden()
    with pytest.raises(SolutionError, match="never retrieved"):
        load_solution(inst, '{"cycles": [{"targets": [0, 2, 3, 4, 5]}]}')
    with pytest.raises(SolutionError, match="already retrieved"):
        load_solution(inst, '{"cycles": [{"targets": [0, 2, 3, 4, 5]}, {"targets": [1, 0]}]}')
    with pytest.raises(SolutionError):
        load_solution(inst, '{"cycles": 3}')
    with pytest.raises(SolutionError):
        load_solution(inst, "{")


def test_solution_round_trip():
    inst = golden()
    sol = load_solution(inst, (DATA / "golden_plan.json").read_text())
    again = load_solution(inst, write_solution(sol))
    assert again == sol
    doc = json.loads(write_solution(sol, clearances=False))
    assert "clearances" not in doc["cycles"][0]
    assert simulate_solution(inst, sol) == 4


def test_feasibility():
    assert check_feasibility(golden())
    bad = parse_instance((DATA / "infeasible.json").read_text())
    assert not check_feasibility(bad)
    assert feasibility_violations(bad) == [(0, 1)]
    # the target can sink to row 2 once the stack below is gone
    assert check_feasibility(Instance((1, 4), ((2, 4), (2, 1), (2, 2))))


def test_state_feasible_matches_residual_check():
    inst = Instance((1, 3, 3), ((2, 1), (2, 2), (3, 2)))
    for mask in range(1 << inst.n):
        state = SliceState.from_mask(inst, mask)
        residual, _ = state.residual_instance()
        assert state_feasible(inst, mask) == check_feasibility(residual)


def test_sparse_view_and_closed_form():
    inst = golden()
    sparse = derive_sparse(inst)
    assert sparse.U == frozenset({1, 2, 4})
    assert sparse.w[1] == 2  # stack 3 is the only target-free stack left of stack 4
    assert sparse.A[(1, 0)] is None  # stack 3 of height 2 cannot carry the shuttle at row 3
    assert sparse.anchor_energy(0, 0) == 1
    state = SliceState(inst)
    batch = [0, 2, 3, 4, 5]
    anchor = batch_anchor(state, batch)
    assert anchor == (4, 0)
    assert cycle_energy_closed_form(state, anchor, batch, sparse) == 3
    after = state.after(batch)
    assert cycle_energy_closed_form(after, (1, 1), [1], sparse) == 1
    with pytest.raises(SolutionError):
        sparse.anchor_energy(1, 0)
    with pytest.raises(SolutionError):
        sparse.anchor_energy(0, 5)
