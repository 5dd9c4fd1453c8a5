import math

import pytest

from sacrp import check_feasibility
from sacrp.bench import (
    CSV_HEADER,
    LARGE_GRID,
    SMALL_GRID,
    GenConfig,
    GenerationError,
    aggregate,
    gap_percent,
    generate_instance,
    grid_configs,
    rows_from_csv,
    rows_to_csv,
    run_benchmark,
    run_instance,
)


def test_generation_is_seeded():
    inst = generate_instance(GenConfig(5, 8, 8, seed=1))
    assert inst.stacks == (7, 4, 7, 1, 4)
    assert inst == generate_instance(GenConfig(5, 8, 8, seed=1))
    assert inst != generate_instance(GenConfig(5, 8, 8, seed=2))


def test_generated_instances_fit_config():
    for seed in range(20):
        cfg = GenConfig(6, 4, 5, seed=seed)
        inst = generate_instance(cfg)
        assert inst.n == 6 and 1 <= inst.m <= 4 and max(inst.stacks) <= 5
        assert check_feasibility(inst)


@pytest.mark.parametrize("kw", [dict(d=0, w=1, h=1), dict(d=1, w=0, h=1), dict(d=1, w=1, h=1, seed=-1),
                                dict(d=1, w=1, h=1, scheme="nope")])
def test_bad_configs(kw):
    with pytest.raises(GenerationError):
        GenConfig(**kw)


def test_impossible_config():
    with pytest.raises(GenerationError, match="no feasible instance"):
        generate_instance(GenConfig(10, 1, 5, max_rejects=50))


def test_grids():
    assert len(grid_configs(SMALL_GRID, seeds=2)) == 54
    assert LARGE_GRID["d"] == (18, 21, 24)
    assert grid_configs(SMALL_GRID, 1, base_seed=7)[0] == GenConfig(5, 8, 8, 7)


def test_gap():
    assert gap_percent(12, 10) == pytest.approx(20.0)
    assert gap_percent(3, None) is None
    assert gap_percent(0, 0) == 0.0
    assert math.isinf(gap_percent(1, 0))


def test_rows_and_csv_round_trip():
    configs = [GenConfig(5, 6, 6, seed=s) for s in range(3)]
    rows = run_benchmark(configs)
    assert [r.solver for r in rows] == ["dp", "greedy"] * 3
    for dp_row, gr in zip(rows[::2], rows[1::2]):
        assert dp_row.is_optimal and dp_row.total_states == 32
        assert gr.energy >= dp_row.energy
        assert gr.is_optimal == (gr.energy == dp_row.energy)
    text = rows_to_csv(rows)
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    back = rows_from_csv(text)
    assert [(r.d, r.seed, r.solver, r.energy, r.is_optimal) for r in back] == \
        [(r.d, r.seed, r.solver, r.energy, r.is_optimal) for r in rows]
    with pytest.raises(ValueError):
        rows_from_csv("a,b\n")


def test_parallel_matches_serial():
    configs = [GenConfig(6, 5, 5, seed=s) for s in range(4)]
    strip = lambda rows: [(r.seed, r.solver, r.energy, r.explored_states) for r in rows]
    assert strip(run_benchmark(configs, workers=2)) == strip(run_benchmark(configs))


def test_aggregate():
    rows = run_benchmark([GenConfig(5, 6, 6, seed=s) for s in range(4)])
    summary = aggregate(rows)
    assert [s["solver"] for s in summary] == ["dp", "greedy"]
    assert summary[0]["optimal_share"] == 1.0
    assert summary[0]["mean_total_states"] == 32
    assert summary[1]["instances"] == 4


def test_timeout_rows_and_unknown_solver():
    rows = run_instance(GenConfig(12, 8, 8, seed=3), time_limit=1e-9)
    dp_row, gr = rows
    assert dp_row.timed_out and dp_row.energy is None
    assert gr.gap_percent is None and gr.is_optimal is None
    with pytest.raises(ValueError):
        run_instance(GenConfig(3, 3, 3), solvers=("dp", "magic"))
