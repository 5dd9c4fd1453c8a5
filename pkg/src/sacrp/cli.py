"""Command line entry point: ``sacrp <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench as bench_mod
from .dp import DpOptions, solve_dp
from .greedy import solve_greedy
from .mip import export_model, import_solution
from .model import (
    SacrpError,
    feasibility_violations,
    load_solution,
    parse_instance,
    simulate_solution,
    write_instance,
    write_solution,
)
from .oracle import solve_oracle

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: str | None, text: str):
    if path is None or path == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(path).write_text(text)


def _emit(args, summary: str, payload: dict):
    print(json.dumps(payload, sort_keys=True) if args.json else summary)


def cmd_gen(args) -> int:
    cfg = bench_mod.GenConfig(args.d, args.w, args.height, args.seed, args.max_rejects)
    inst = bench_mod.generate_instance(cfg)
    _write(args.out, write_instance(inst))
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = parse_instance(_read(args.inp))
    stats = None
    trace = None
    if args.algo == "dp":
        if args.no_dominance is None:
            off = set()
        else:
            off = set(args.no_dominance) or {1, 2, 3}
        opts = DpOptions(
            rule1=1 not in off, rule2=2 not in off, rule3=3 not in off,
            time_limit=args.time_limit, parallel=args.parallel,
        )
        solution, stats = solve_dp(inst, opts)
        if solution is None:
            _emit(args, f"timeout after {args.time_limit:g}s", {"timed_out": True, "stats": stats.to_dict()})
            if args.stats and not args.json:
                print(json.dumps(stats.to_dict(), sort_keys=True))
            return EXIT_DOMAIN
    elif args.algo == "greedy":
        solution, trace = solve_greedy(inst)
    else:
        _, solution = solve_oracle(inst)
    energy = simulate_solution(inst, solution)
    if args.out:
        _write(args.out, write_solution(solution))
    payload = {"energy": energy, "cycles": len(solution.cycles)}
    if stats is not None:
        payload["stats"] = stats.to_dict()
    if trace is not None and args.trace:
        payload["trace"] = trace.to_dict()
    _emit(args, f"energy={energy} cycles={len(solution.cycles)}", payload)
    if args.stats and stats is not None and not args.json:
        print(json.dumps(stats.to_dict(), sort_keys=True))
    if args.trace and trace is not None and not args.json:
        print(json.dumps(trace.to_dict(), sort_keys=True))
    return EXIT_OK


def cmd_validate(args) -> int:
    inst = parse_instance(_read(args.inp))
    solution = load_solution(inst, _read(args.sol))
    energy = simulate_solution(inst, solution)
    _emit(args, f"energy={energy} OK", {"energy": energy, "ok": True})
    return EXIT_OK


def cmd_export_lp(args) -> int:
    inst = parse_instance(_read(args.inp))
    counts = export_model(inst, args.out)
    _emit(
        args,
        f"binaries={counts.binaries} continuous={counts.continuous} constraints={counts.constraints}",
        counts.to_dict(),
    )
    return EXIT_OK


def cmd_import_sol(args) -> int:
    inst = parse_instance(_read(args.inp))
    solution = import_solution(inst, _read(args.lp_sol))
    if args.out:
        _write(args.out, write_solution(solution))
    energy = solution.total_energy
    _emit(args, f"energy={energy} cycles={len(solution.cycles)}", {"energy": energy, "cycles": len(solution.cycles)})
    return EXIT_OK


def cmd_feas(args) -> int:
    inst = parse_instance(_read(args.inp))
    bad = feasibility_violations(inst)
    if not bad:
        _emit(args, "feasible", {"feasible": True})
        return EXIT_OK
    b, t = bad[0]
    s, h = inst.targets[b]
    msg = (f"infeasible: target {b + 1} at ({s}, {h}) needs stack {t} of height "
           f"{inst.stacks[t - 1]} to reach {h - inst.max_level[b] - 1}")
    _emit(args, msg, {"feasible": False, "violations": [[x + 1, y] for x, y in bad]})
    return EXIT_DOMAIN


def cmd_bench(args) -> int:
    if args.grid == "small":
        grid = bench_mod.SMALL_GRID
    elif args.grid == "large":
        grid = bench_mod.LARGE_GRID
    else:
        if not (args.d and args.w and args.height):
            raise UsageError("--grid custom needs -d, -w and -H")
        grid = {"d": args.d, "w": args.w, "h": args.height}
    configs = bench_mod.grid_configs(grid, args.seeds, args.seed)
    solvers = tuple(args.solvers.split(","))
    rows = bench_mod.run_benchmark(configs, solvers, args.time_limit, args.workers)
    _write(args.out, bench_mod.rows_to_csv(rows))
    if args.summary:
        Path(args.summary).write_text(json.dumps(bench_mod.aggregate(rows), indent=2))
    return EXIT_OK


def _positive(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sacrp", description="Energy-minimal retrieval planning for side-access stack slices.")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    sub = p.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    g = sub.add_parser("gen", help="generate a random feasible instance")
    g.add_argument("-d", type=int, required=True, help="number of targets")
    g.add_argument("-w", type=int, required=True, help="maximum number of stacks")
    g.add_argument("-H", "--height", type=int, required=True, help="maximum stack height")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--max-rejects", type=int, default=10_000)
    g.add_argument("-o", "--out", help="output file (default stdout)")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve an instance")
    s.add_argument("--algo", choices=("dp", "greedy", "oracle"), default="dp")
    s.add_argument("--in", dest="inp", required=True, help="instance JSON")
    s.add_argument("--out", help="write the solution JSON here")
    s.add_argument("--no-dominance", nargs="*", type=int, choices=(1, 2, 3), metavar="RULE",
                   help="disable dominance rules (all if none given)")
    s.add_argument("--time-limit", type=_positive, default=600.0, help="seconds (dp only)")
    s.add_argument("--parallel", action="store_true", help="expand dp stages on a thread pool")
    s.add_argument("--stats", action="store_true", help="print dp statistics")
    s.add_argument("--trace", action="store_true", help="print the greedy trace")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("validate", help="simulate a solution and report its energy")
    v.add_argument("--in", dest="inp", required=True)
    v.add_argument("--sol", required=True)
    v.set_defaults(func=cmd_validate)

    e = sub.add_parser("export-lp", help="write the integer program in LP format")
    e.add_argument("--in", dest="inp", required=True)
    e.add_argument("-o", "--out", required=True)
    e.set_defaults(func=cmd_export_lp)

    i = sub.add_parser("import-sol", help="turn solver variable values into a solution")
    i.add_argument("--in", dest="inp", required=True)
    i.add_argument("--lp-sol", required=True, help="'name value' lines")
    i.add_argument("--out")
    i.set_defaults(func=cmd_import_sol)

    f = sub.add_parser("feas", help="check instance feasibility")
    f.add_argument("--in", dest="inp", required=True)
    f.set_defaults(func=cmd_feas)

    b = sub.add_parser("bench", help="run the benchmark grid and write CSV rows")
    b.add_argument("--grid", choices=("small", "large", "custom"), default="small")
    b.add_argument("--seeds", type=int, default=30, help="instances per configuration")
    b.add_argument("--seed", type=int, default=0, help="first seed")
    b.add_argument("-d", type=int, nargs="+", help="target counts (custom grid)")
    b.add_argument("-w", type=int, nargs="+", help="stack counts (custom grid)")
    b.add_argument("-H", "--height", type=int, nargs="+", help="heights (custom grid)")
    b.add_argument("--solvers", default="dp,greedy")
    b.add_argument("--time-limit", type=_positive, default=600.0)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--out", help="CSV file (default stdout)")
    b.add_argument("--summary", help="also write per-configuration means as JSON")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SacrpError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
