import random

import pytest

from helpers import golden, random_instance
from sacrp import InfeasibleError, Instance, SliceState, classify_extension, simulate_solution, solve_dp, solve_greedy


def test_golden_trace():
    solution, trace = solve_greedy(golden())
    assert [c.energy for c in solution.cycles] == [3, 1]
    first, second = trace.cycles
    assert (first.critical, first.seed, first.batch) == (1, 4, (4, 3, 2, 0, 5))
    assert [(r.target, r.reason) for r in first.records] == [
        (3, "SameRow"), (2, "SameRow"), (0, "RowAbove"), (5, "RowBelowAdjacent"),
    ]
    assert second.batch == (1,)
    assert trace.replay(golden()) == solution


def test_rejections_are_recorded():
    # the right target sits too high to join, and stack 1 has nothing at row 2
    inst = Instance((1, 3), ((1, 1), (2, 3), (2, 2)))
    solution, trace = solve_greedy(inst)
    simulate_solution(inst, solution)
    reasons = [r.reason for c in trace.cycles for r in c.records if not r.accepted]
    assert reasons, trace.to_dict()


def test_infeasible_rejected():
    with pytest.raises(InfeasibleError):
        solve_greedy(Instance((1, 4), ((2, 4),)))


def test_greedy_is_valid_and_never_beats_dp():
    rng = random.Random(17)
    for _ in range(60):
        inst = random_instance(rng, rng.randint(1, 10), 7, 7)
        solution, trace = solve_greedy(inst)
        energy = simulate_solution(inst, solution)
        best, _ = solve_dp(inst)
        assert energy >= best.total_energy
        assert trace.replay(inst) == solution
        # every acceptance is a legal extension of the batch built so far
        state = SliceState(inst)
        for cyc in trace.cycles:
            built = [cyc.seed]
            for rec in cyc.records:
                if rec.accepted:
                    ext = classify_extension(state, built, rec.target)
                    assert ext and ext.rule.value == rec.reason
                    built.append(rec.target)
            assert tuple(built) == cyc.batch
            state = state.after(cyc.batch)


def test_deterministic():
    rng = random.Random(4)
    inst = random_instance(rng, 10, 6, 6)
    assert solve_greedy(inst) == solve_greedy(inst)
