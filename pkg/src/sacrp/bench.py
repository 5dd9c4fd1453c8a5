"""Seeded instance generation and the benchmark harness."""

from __future__ import annotations

import csv
import io
import itertools
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Callable, Iterable, Sequence

import numpy as np

from .dp import DpOptions, solve_dp
from .greedy import solve_greedy
from .model import Instance, SacrpError, check_feasibility, simulate_solution

__all__ = [
    "GenConfig",
    "GenerationError",
    "generate_instance",
    "SAMPLERS",
    "SMALL_GRID",
    "LARGE_GRID",
    "grid_configs",
    "BenchRow",
    "CSV_HEADER",
    "gap_percent",
    "run_instance",
    "run_benchmark",
    "rows_to_csv",
    "rows_from_csv",
    "aggregate",
]


class GenerationError(SacrpError, ValueError):
    pass


@dataclass(frozen=True)
class GenConfig:
    d: int
    w: int
    h: int
    seed: int = 0
    max_rejects: int = 10_000
    scheme: str = "uniform"

    def __post_init__(self):
        for name in ("d", "w", "h"):
            if getattr(self, name) < 1:
                raise GenerationError(f"{name} must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise GenerationError("seed must fit in 64 unsigned bits")
        if self.scheme not in SAMPLERS:
            raise GenerationError(f"unknown sampling scheme {self.scheme!r}")


def _uniform(rng: np.random.Generator, cfg: GenConfig) -> Instance | None:
    """Stack count uniform in 1..w, heights uniform in 1..h, target cells
    drawn without replacement over all occupied cells."""
    m = int(rng.integers(1, cfg.w + 1))
    heights = [int(x) for x in rng.integers(1, cfg.h + 1, size=m)]
    cells = [(t + 1, y + 1) for t in range(m) for y in range(heights[t])]
    if len(cells) < cfg.d:
        return None
    picks = np.sort(rng.choice(len(cells), size=cfg.d, replace=False))
    return Instance(tuple(heights), tuple(cells[k] for k in picks))


SAMPLERS: dict[str, Callable[[np.random.Generator, GenConfig], Instance | None]] = {
    "uniform": _uniform,
}


def generate_instance(cfg: GenConfig) -> Instance:
    """Feasible instance, a pure function of (d, w, h, seed, scheme).

    Randomness comes from numpy's PCG64 seeded through a SeedSequence over
    (seed, d, w, h); draws that are too small or infeasible are rejected.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed, cfg.d, cfg.w, cfg.h])))
    sampler = SAMPLERS[cfg.scheme]
    for _ in range(cfg.max_rejects):
        inst = sampler(rng, cfg)
        if inst is not None and check_feasibility(inst):
            return inst
    raise GenerationError(
        f"no feasible instance for d={cfg.d} w={cfg.w} h={cfg.h} after {cfg.max_rejects} draws"
    )


SMALL_GRID = {"d": (5, 10, 15), "w": (8, 12, 16), "h": (8, 12, 16)}
LARGE_GRID = {"d": (18, 21, 24), "w": (20, 24, 28), "h": (20, 24, 28)}


def grid_configs(grid: dict[str, Sequence[int]], seeds: int, base_seed: int = 0) -> list[GenConfig]:
    return [
        GenConfig(d, w, h, base_seed + k)
        for d, w, h in itertools.product(grid["d"], grid["w"], grid["h"])
        for k in range(seeds)
    ]


@dataclass
class BenchRow:
    d: int
    w: int
    h: int
    seed: int
    solver: str
    energy: int | None
    is_optimal: bool | None
    gap_percent: float | None
    runtime_ms: float
    total_states: int | None
    explored_states: int | None
    timed_out: bool


CSV_HEADER = (
    "d", "w", "h", "seed", "solver", "energy", "isOptimal", "gapPercent",
    "runtimeMs", "totalStates", "exploredStates", "timedOut",
)


def gap_percent(energy: int, optimum: int | None) -> float | None:
    if optimum is None:
        return None
    if optimum == 0:
        return 0.0 if energy == 0 else float("inf")
    return (energy - optimum) / optimum * 100.0


def run_instance(cfg: GenConfig, solvers: Sequence[str] = ("dp", "greedy"), time_limit: float = 600.0) -> list[BenchRow]:
    """All requested solvers on one generated instance; DP runs first and is
    the reference optimum for the gaps."""
    inst = generate_instance(cfg)
    base = dict(d=cfg.d, w=cfg.w, h=cfg.h, seed=cfg.seed)
    rows = []
    optimum = None
    if "dp" in solvers:
        solution, stats = solve_dp(inst, DpOptions(time_limit=time_limit))
        if solution is not None:
            optimum = simulate_solution(inst, solution)
        rows.append(BenchRow(
            **base, solver="dp", energy=optimum,
            is_optimal=None if solution is None else True,
            gap_percent=None if solution is None else 0.0,
            runtime_ms=stats.elapsed * 1000.0,
            total_states=stats.total_states, explored_states=stats.explored_states,
            timed_out=stats.timed_out,
        ))
    if "greedy" in solvers:
        start = time.perf_counter()
        solution, _ = solve_greedy(inst)
        elapsed = time.perf_counter() - start
        energy = simulate_solution(inst, solution)
        rows.append(BenchRow(
            **base, solver="greedy", energy=energy,
            is_optimal=None if optimum is None else energy == optimum,
            gap_percent=gap_percent(energy, optimum),
            runtime_ms=elapsed * 1000.0,
            total_states=None, explored_states=None, timed_out=False,
        ))
    unknown = set(solvers) - {"dp", "greedy"}
    if unknown:
        raise ValueError(f"unknown solvers {sorted(unknown)}")
    return rows


def _run_packed(args):
    return run_instance(*args)


def run_benchmark(
    configs: Iterable[GenConfig],
    solvers: Sequence[str] = ("dp", "greedy"),
    time_limit: float = 600.0,
    workers: int = 1,
) -> list[BenchRow]:
    """One row per (instance, solver), in config order whatever ``workers`` is."""
    jobs = [(cfg, tuple(solvers), time_limit) for cfg in configs]
    if workers <= 1:
        results = map(_run_packed, jobs)
        return [row for rows in results for row in rows]
    with ProcessPoolExecutor(workers) as pool:
        return [row for rows in pool.map(_run_packed, jobs) for row in rows]


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.3f}"
    return str(v)


def rows_to_csv(rows: Iterable[BenchRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([_cell(v) for v in asdict(row).values()])
    return buf.getvalue()


def rows_from_csv(text: str) -> list[BenchRow]:
    reader = csv.reader(io.StringIO(text))
    header = tuple(next(reader))
    if header != CSV_HEADER:
        raise ValueError(f"unexpected header {header}")
    kinds = [f.name for f in fields(BenchRow)]
    out = []
    for rec in reader:
        vals = {}
        for name, raw in zip(kinds, rec):
            if raw == "":
                vals[name] = None
            elif name == "solver":
                vals[name] = raw
            elif name in ("is_optimal", "timed_out"):
                vals[name] = raw == "true"
            elif name in ("gap_percent", "runtime_ms"):
                vals[name] = float(raw)
            else:
                vals[name] = int(raw)
        out.append(BenchRow(**vals))
    return out


def _mean(xs):
    xs = [x for x in xs if x is not None]
    return sum(xs) / len(xs) if xs else None


def aggregate(rows: Iterable[BenchRow]) -> list[dict]:
    """Per (d, w, h, solver) means and shares, computed from the rows alone."""
    groups: dict[tuple, list[BenchRow]] = defaultdict(list)
    for row in rows:
        groups[(row.d, row.w, row.h, row.solver)].append(row)
    out = []
    for (d, w, h, solver), rs in sorted(groups.items()):
        known = [r for r in rs if r.is_optimal is not None]
        out.append({
            "d": d, "w": w, "h": h, "solver": solver,
            "instances": len(rs),
            "mean_energy": _mean(r.energy for r in rs),
            "mean_gap_percent": _mean(r.gap_percent for r in rs),
            "optimal_share": sum(r.is_optimal for r in known) / len(known) if known else None,
            "mean_runtime_ms": _mean(r.runtime_ms for r in rs),
            "mean_total_states": _mean(r.total_states for r in rs),
            "mean_explored_states": _mean(r.explored_states for r in rs),
            "timeouts": sum(r.timed_out for r in rs),
        })
    return out
