"""Integer programming model of the problem, written as LP-format text.

The model has ``n`` cycles.  For every cycle ``c`` and every target/level
pair ``(b, i)`` it carries seven binaries:

    x   b is retrieved at level i in cycle c
    y   b at level i anchors cycle c
    z1  b joins on the anchor's row
    z2  b joins on a row above the anchor
    z3  b joins one row below the anchor
    z4  b joins two or more rows below the anchor
    u   b is at level i at the start of cycle c

plus continuous cycle energies ``E_c`` and heights ``h_c_s`` of the stacks
that hold targets.  Variable names use 1-based cycles, targets and stacks and
0-based levels, e.g. ``x_2_5_1``.

No solver is called here.  :func:`import_solution` reads a solver's
``name value`` output back into a simulated :class:`~sacrp.model.Solution`.
"""

from __future__ import annotations

import math
import re
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from .geometry import plan_cycle
from .model import (
    Instance,
    SliceState,
    Solution,
    SolutionError,
    batch_anchor,
    derive_sparse,
    simulate_solution,
)

__all__ = [
    "Constraint",
    "Model",
    "ModelCounts",
    "MipImportError",
    "build_model",
    "write_lp",
    "export_model",
    "expected_counts",
    "parse_values",
    "import_solution",
    "assignment_from_solution",
    "check_assignment",
    "BINARY_FAMILIES",
    "CONSTRAINT_FAMILIES",
]

BINARY_FAMILIES = ("x", "y", "z1", "z2", "z3", "z4", "u")
CONSTRAINT_FAMILIES = (
    "cover",
    "height_init",
    "height_update",
    "level",
    "level_cap",
    "level_one",
    "access_free",
    "access_used",
    "same_row",
    "row_above_fill",
    "row_above_anchor",
    "below_adjacent",
    "below_deep",
    "below_deep_anchor",
    "typing",
    "anchor_member",
    "one_anchor",
    "anchor_rightmost",
    "energy",
    "anchor_undefined",
)
TOL = 1e-6


class MipImportError(SolutionError):
    pass


@dataclass(frozen=True)
class Constraint:
    name: str
    family: str
    terms: tuple[tuple[int, str], ...]  # (coefficient, variable)
    sense: str  # "<=", ">=" or "="
    rhs: int

    def activity(self, values: dict[str, float]) -> float:
        return sum(a * values.get(v, 0.0) for a, v in self.terms)

    def satisfied(self, values: dict[str, float], tol: float = TOL) -> bool:
        lhs = self.activity(values)
        if self.sense == "<=":
            return lhs <= self.rhs + tol
        if self.sense == ">=":
            return lhs >= self.rhs - tol
        return abs(lhs - self.rhs) <= tol


@dataclass
class ModelCounts:
    binaries: int
    continuous: int
    constraints: int
    variables_by_family: dict[str, int] = field(default_factory=dict)
    constraints_by_family: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "binaries": self.binaries,
            "continuous": self.continuous,
            "constraints": self.constraints,
            "variables_by_family": dict(self.variables_by_family),
            "constraints_by_family": dict(self.constraints_by_family),
        }


@dataclass
class Model:
    instance: Instance
    binaries: list[str]
    continuous: list[str]
    objective: list[str]
    constraints: list[Constraint]

    def counts(self) -> ModelCounts:
        by_var: dict[str, int] = defaultdict(int)
        for v in self.binaries:
            by_var[v.split("_")[0]] += 1
        for v in self.continuous:
            by_var[v.split("_")[0]] += 1
        by_con: dict[str, int] = {f: 0 for f in CONSTRAINT_FAMILIES}
        for con in self.constraints:
            by_con[con.family] += 1
        return ModelCounts(
            len(self.binaries), len(self.continuous), len(self.constraints), dict(by_var), by_con
        )


def _var(kind: str, c: int, b: int, i: int) -> str:
    return f"{kind}_{c}_{b + 1}_{i}"


def _big_m(instance: Instance) -> int:
    # a level's row minus one never exceeds the tallest target, heights are >= 0
    return max(1, max(h for _, h in instance.targets) - 1)


def build_model(instance: Instance) -> Model:
    inst = instance
    n = inst.n
    sparse = derive_sparse(inst)
    R = sparse.R
    used = sorted(sparse.U)
    M = _big_m(inst)
    stack = [s for s, _ in inst.targets]
    height0 = [h for _, h in inst.targets]
    pairs = [(b, i) for b in range(n) for i in range(R[b] + 1)]
    row = {(b, i): height0[b] - i for b, i in pairs}
    at_row: dict[int, list[tuple[int, int]]] = defaultdict(list)
    for p in pairs:
        at_row[row[p]].append(p)
    below0 = [[x for x in range(n) if stack[x] == stack[b] and height0[x] < height0[b]] for b in range(n)]
    cycles = range(1, n + 1)

    binaries = [_var(k, c, b, i) for c in cycles for k in BINARY_FAMILIES for b, i in pairs]
    continuous = [f"E_{c}" for c in cycles] + [f"h_{c}_{s}" for c in cycles for s in used]
    cons: list[Constraint] = []

    def add(family: str, name: str, terms, sense: str, rhs: int):
        merged: dict[str, int] = {}
        for a, v in terms:
            merged[v] = merged.get(v, 0) + a
        cons.append(Constraint(name, family, tuple((a, v) for v, a in merged.items() if a), sense, rhs))

    for b in range(n):
        add("cover", f"cover_{b + 1}",
            [(1, _var("x", c, b, i)) for c in cycles for i in range(R[b] + 1)], "=", 1)
    for s in used:
        add("height_init", f"height_init_{s}", [(1, f"h_1_{s}")], "=", inst.stacks[s - 1])
    for c in cycles:
        if c == n:
            break
        for s in used:
            terms = [(1, f"h_{c + 1}_{s}"), (-1, f"h_{c}_{s}")]
            terms += [(1, _var("x", c, b, i)) for b, i in pairs if stack[b] == s]
            add("height_update", f"height_update_{c}_{s}", terms, "=", 0)

    for c in cycles:
        for b in range(n):
            if R[b] > 0:
                terms = [(1, _var("x", cp, bp, ip)) for cp in range(1, c) for bp in below0[b]
                         for ip in range(R[bp] + 1)]
                terms += [(-i, _var("u", c, b, i)) for i in range(1, R[b] + 1)]
                add("level", f"level_{c}_{b + 1}", terms, "=", 0)
        for b, i in pairs:
            add("level_cap", f"level_cap_{c}_{b + 1}_{i}",
                [(1, _var("x", c, b, i)), (-1, _var("u", c, b, i))], "<=", 0)
        for b in range(n):
            add("level_one", f"level_one_{c}_{b + 1}",
                [(1, _var("u", c, b, i)) for i in range(R[b] + 1)], "=", 1)

        for b, i in pairs:
            need = row[(b, i)] - 1
            if sparse.w[b] != math.inf:
                add("access_free", f"access_free_{c}_{b + 1}_{i}",
                    [(M, _var("x", c, b, i))], "<=", int(sparse.w[b]) + M - need)
            for s in used:
                if s < stack[b]:
                    add("access_used", f"access_used_{c}_{b + 1}_{i}_{s}",
                        [(M, _var("x", c, b, i)), (-1, f"h_{c}_{s}")], "<=", M - need)

        for b, i in pairs:
            r, s = row[(b, i)], stack[b]
            key = f"{c}_{b + 1}_{i}"
            x, y = _var("x", c, b, i), _var("y", c, b, i)
            z1, z2, z3, z4 = (_var(k, c, b, i) for k in ("z1", "z2", "z3", "z4"))
            f = 1 if s == 1 else 0
            left_same_row = [(-1, _var("x", c, bp, ip)) for bp, ip in at_row[r] if stack[bp] == s - 1]

            add("same_row", f"same_row_{key}",
                [(1, z1)] + [(-1, _var("y", c, bp, ip)) for bp, ip in at_row[r] if stack[bp] > s],
                "<=", 0)
            fill = [(s, z2)]
            for bp, ip in at_row[r - 1]:
                if stack[bp] <= s:
                    fill += [(-1, _var("x", c, bp, ip)), (1, _var("z3", c, bp, ip)),
                             (1, _var("z4", c, bp, ip))]
            add("row_above_fill", f"row_above_fill_{key}", fill, "<=", 0)
            add("row_above_anchor", f"row_above_anchor_{key}",
                [(1, z2)] + [(-1, _var("y", c, bp, ip)) for bp, ip in pairs
                             if row[(bp, ip)] <= r - 1 and stack[bp] > s],
                "<=", 0)
            add("below_adjacent", f"below_adjacent_{key}",
                [(2, z3)] + [(-1, _var("y", c, bp, ip)) for bp, ip in at_row[r + 1] if stack[bp] >= s]
                + left_same_row, "<=", f)
            add("below_deep", f"below_deep_{key}",
                [(2, z4)] + [(-1, _var("x", c, bp, ip)) for bp, ip in at_row[r + 1] if stack[bp] == s]
                + left_same_row, "<=", f)
            add("below_deep_anchor", f"below_deep_anchor_{key}",
                [(1, z4)] + [(-1, _var("y", c, bp, ip)) for bp, ip in pairs
                             if row[(bp, ip)] >= r + 2 and stack[bp] >= s],
                "<=", 0)
            add("typing", f"typing_{key}", [(1, x), (-1, y), (-1, z1), (-1, z2), (-1, z3), (-1, z4)], "<=", 0)
            add("anchor_member", f"anchor_member_{key}", [(1, y), (-1, x)], "<=", 0)

        add("one_anchor", f"one_anchor_{c}", [(1, _var("y", c, b, i)) for b, i in pairs], "<=", 1)
        for b, i in pairs:
            add("anchor_rightmost", f"anchor_rightmost_{c}_{b + 1}_{i}",
                [(1, _var("x", c, b, i))]
                + [(-1, _var("y", c, bp, ip)) for bp, ip in pairs if stack[bp] >= stack[b]],
                "<=", 0)

        for b, i in pairs:
            A = sparse.A[(b, i)]
            key = f"{c}_{b + 1}_{i}"
            if A is None:
                add("anchor_undefined", f"anchor_undefined_{key}", [(1, _var("y", c, b, i))], "=", 0)
                continue
            s = stack[b]
            terms = [(1, f"E_{c}"), (-A, _var("y", c, b, i))]
            for bp, ip in pairs:
                if stack[bp] < s or (stack[bp] == s and height0[bp] > height0[b]):
                    terms += [(1, _var("x", cp, bp, ip)) for cp in range(1, c + 1)]
                if stack[bp] < s:
                    terms += [(-1, _var("z3", c, bp, ip)), (-1, _var("z4", c, bp, ip))]
            add("energy", f"energy_{key}", terms, ">=", 0)

    return Model(inst, binaries, continuous, [f"E_{c}" for c in cycles], cons)


def expected_counts(instance: Instance) -> ModelCounts:
    """Model size from closed-form family formulas, without building it."""
    sparse = derive_sparse(instance)
    n = instance.n
    R = sparse.R
    used = sorted(sparse.U)
    P = sum(r + 1 for r in R)
    with_w = sum(R[b] + 1 for b in range(n) if sparse.w[b] != math.inf)
    left_used = sum((R[b] + 1) * sum(1 for s in used if s < instance.targets[b][0]) for b in range(n))
    undefined = sum(1 for v in sparse.A.values() if v is None)
    leveled = sum(1 for r in R if r > 0)
    per_pair = {
        f: n * P
        for f in (
            "level_cap", "same_row", "row_above_fill", "row_above_anchor", "below_adjacent",
            "below_deep", "below_deep_anchor", "typing", "anchor_member", "anchor_rightmost",
        )
    }
    by_con = {
        "cover": n,
        "height_init": len(used),
        "height_update": (n - 1) * len(used),
        "level": n * leveled,
        "level_one": n * n,
        "access_free": n * with_w,
        "access_used": n * left_used,
        "one_anchor": n,
        "energy": n * (P - undefined),
        "anchor_undefined": n * undefined,
        **per_pair,
    }
    by_con = {f: by_con[f] for f in CONSTRAINT_FAMILIES}
    by_var = {k: n * P for k in BINARY_FAMILIES}
    by_var["E"] = n
    by_var["h"] = n * len(used)
    return ModelCounts(7 * n * P, n + n * len(used), sum(by_con.values()), by_var, by_con)


# ---------------------------------------------------------------------------
# LP text


def _expr(terms) -> str:
    parts = []
    for k, (a, v) in enumerate(terms):
        sign = "-" if a < 0 else "+"
        mag = abs(a)
        coef = "" if mag == 1 else f"{mag} "
        if k == 0:
            parts.append(f"{'-' if a < 0 else ''}{coef}{v}")
        else:
            parts.append(f"{sign} {coef}{v}")
    return " ".join(parts) if parts else "0"


def _wrap(head: str, body: str, width: int = 100) -> list[str]:
    lines, cur = [], head
    for tok in body.split(" "):
        if len(cur) + 1 + len(tok) > width and cur.strip():
            lines.append(cur)
            cur = "   " + tok
        else:
            cur = f"{cur} {tok}" if cur else tok
    lines.append(cur)
    return lines


def write_lp(model: Model) -> str:
    inst = model.instance
    out = [
        "\\ minimum-energy retrieval model",
        f"\\ stacks: {' '.join(map(str, inst.stacks))}",
        f"\\ targets: {' '.join(f'{s}:{h}' for s, h in inst.targets)}",
        "Minimize",
    ]
    out += _wrap(" obj:", _expr([(1, v) for v in model.objective]))
    out.append("Subject To")
    for con in model.constraints:
        body = f"{_expr(con.terms)} {con.sense} {con.rhs}"
        out += _wrap(f" {con.name}:", body)
    out.append("Bounds")
    out += [f" {v} >= 0" for v in model.continuous]
    out.append("Binaries")
    for k in range(0, len(model.binaries), 8):
        out.append(" " + " ".join(model.binaries[k:k + 8]))
    out.append("End")
    return "\n".join(out) + "\n"


def export_model(instance: Instance, path: str | Path) -> ModelCounts:
    model = build_model(instance)
    Path(path).write_text(write_lp(model))
    return model.counts()


# ---------------------------------------------------------------------------
# solution round trip

_NAME = re.compile(r"^(x|y|z1|z2|z3|z4|u)_(\d+)_(\d+)_(\d+)$")


def parse_values(text: str) -> dict[str, float]:
    """``name value`` lines; blank lines and ``#`` comments are skipped."""
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace("=", " ").split()
        if len(parts) != 2:
            raise MipImportError(f"line {lineno}: expected 'name value', got {raw!r}")
        try:
            values[parts[0]] = float(parts[1])
        except ValueError:
            raise MipImportError(f"line {lineno}: bad value {parts[1]!r}") from None
    return values


def _binary(name: str, v: float) -> int:
    if abs(v - round(v)) > TOL or round(v) not in (0, 1):
        raise MipImportError(f"{name} = {v} is not binary")
    return int(round(v))


def import_solution(instance: Instance, values: dict[str, float] | str) -> Solution:
    """Rebuild and simulate the plan encoded by a solver assignment.

    Cycles keep their index order with empty ones dropped; targets inside a
    cycle are retrieved top row first, left to right.
    """
    if isinstance(values, str):
        values = parse_values(values)
    n = instance.n
    R = instance.max_level
    chosen: dict[int, dict[int, int]] = defaultdict(dict)  # cycle -> target -> level
    levels: dict[tuple[int, int], int] = {}
    for name, v in sorted(values.items()):
        m = _NAME.match(name)
        if not m:
            continue
        kind, c, b, i = m.group(1), int(m.group(2)), int(m.group(3)) - 1, int(m.group(4))
        if not (1 <= c <= n and 0 <= b < n and 0 <= i <= R[b]):
            raise MipImportError(f"{name} does not belong to this instance")
        if not _binary(name, v):
            continue
        if kind == "x":
            if b in chosen[c]:
                raise MipImportError(f"target {b + 1} retrieved twice in cycle {c}")
            chosen[c][b] = i
        elif kind == "u":
            if (c, b) in levels:
                raise MipImportError(f"target {b + 1} has two levels at cycle {c} (level constraints)")
            levels[(c, b)] = i

    seen = [b for c in chosen for b in chosen[c]]
    missing = sorted(set(range(n)) - set(seen))
    if missing:
        raise MipImportError(
            f"targets {[b + 1 for b in missing]} are never retrieved (cover constraints)"
        )
    if len(seen) != len(set(seen)):
        raise MipImportError("some target is retrieved more than once (cover constraints)")

    state = SliceState(instance)
    plans = []
    energies = 0.0
    for c in range(1, n + 1):
        for b in range(n):
            if (c, b) in levels and b not in state.retrieved and levels[(c, b)] != state.level(b):
                raise MipImportError(
                    f"u_{c}_{b + 1}_{levels[(c, b)]}: target {b + 1} is at level "
                    f"{state.level(b)} at the start of cycle {c} (level constraints)"
                )
        batch = chosen.get(c)
        energies += values.get(f"E_{c}", 0.0)
        if not batch:
            continue
        for b, i in batch.items():
            if state.level(b) != i:
                raise MipImportError(
                    f"x_{c}_{b + 1}_{i}: target {b + 1} is at level {state.level(b)} "
                    f"at the start of cycle {c} (level constraints)"
                )
        try:
            plans.append(plan_cycle(state, list(batch)))
        except SolutionError as exc:
            raise MipImportError(f"cycle {c}: {exc}") from None
        state = state.after(batch)
    solution = Solution(tuple(plans))
    simulated = simulate_solution(instance, solution)
    if any(name.startswith("E_") for name in values) and abs(energies - simulated) > TOL:
        raise MipImportError(f"sum of E_c is {energies:g} but the plan simulates to {simulated}")
    return solution


def assignment_from_solution(instance: Instance, solution: Solution) -> dict[str, float]:
    """Full variable assignment encoding ``solution``, cycle k as cycle k."""
    model_vars = build_model(instance)
    values = {v: 0.0 for v in model_vars.binaries + model_vars.continuous}
    n = instance.n
    used = sorted(derive_sparse(instance).U)
    state = SliceState(instance)
    for c in range(1, n + 1):
        for s in used:
            values[f"h_{c}_{s}"] = float(state.heights[s - 1])
        for b in range(n):
            values[_var("u", c, b, state.level(b))] = 1.0
        if c > len(solution.cycles):
            continue
        plan = solution.cycles[c - 1]
        anchor, level = batch_anchor(state, plan.order)
        h = state.target_height(anchor)
        values[_var("y", c, anchor, level)] = 1.0
        for b in plan.order:
            i = state.level(b)
            values[_var("x", c, b, i)] = 1.0
            if b == anchor:
                continue
            r = state.target_height(b)
            kind = "z1" if r == h else "z2" if r > h else "z3" if r == h - 1 else "z4"
            values[_var(kind, c, b, i)] = 1.0
        values[f"E_{c}"] = float(plan.energy)
        state = state.after(plan.order)
    return values


def check_assignment(model: Model, values: dict[str, float]) -> list[str]:
    """Names of constraints the assignment violates."""
    return [con.name for con in model.constraints if not con.satisfied(values)]
