"""Solve the six-target golden instance with every solver and print the plans."""

from pathlib import Path

from sacrp import parse_instance, simulate_solution, solve_dp, solve_greedy, solve_oracle
from sacrp.mip import build_model

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"


def show(name, inst, solution):
    print(f"{name}: total energy {simulate_solution(inst, solution)}")
    for k, plan in enumerate(solution.cycles, 1):
        order = " ".join(f"b{b + 1}" for b in plan.order)
        print(f"  cycle {k}: {order:<20} clearances {plan.clearances}  energy {plan.energy}")


def main():
    inst = parse_instance((DATA / "golden.json").read_text())
    print(f"stacks {inst.stacks}, targets {inst.targets}")
    dp_solution, stats = solve_dp(inst)
    show("dynamic program", inst, dp_solution)
    print(f"  states explored {stats.explored_states} of {stats.total_states}, pruned {stats.dominance}")
    show("greedy", inst, solve_greedy(inst)[0])
    show("brute force", inst, solve_oracle(inst)[1])
    counts = build_model(inst).counts()
    print(f"integer program: {counts.binaries} binaries, {counts.continuous} continuous, "
          f"{counts.constraints} constraints")


if __name__ == "__main__":
    main()
