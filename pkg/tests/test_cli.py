import json
import subprocess
import sys

import pytest

from helpers import DATA
from sacrp import parse_instance, simulate_solution
from sacrp.cli import build_parser, main
from sacrp.mip import assignment_from_solution
from sacrp.model import load_solution

GOLDEN = str(DATA / "golden.json")
PLAN = str(DATA / "golden_plan.json")
BAD = str(DATA / "infeasible.json")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_help_snapshot(monkeypatch):
    monkeypatch.setenv("COLUMNS", "80")
    assert build_parser().format_help() == (DATA / "cli_help.txt").read_text()


@pytest.mark.parametrize("algo", ["dp", "greedy", "oracle"])
def test_solve(capsys, tmp_path, algo):
    out_file = tmp_path / "sol.json"
    code, out, _ = run(capsys, "solve", "--algo", algo, "--in", GOLDEN, "--out", str(out_file))
    assert code == 0
    assert out.strip() == "energy=4 cycles=2"
    inst = parse_instance(open(GOLDEN).read())
    assert simulate_solution(inst, load_solution(inst, out_file.read_text())) == 4


def test_solve_json_stats_and_trace(capsys):
    code, out, _ = run(capsys, "--json", "solve", "--in", GOLDEN, "--no-dominance", "--stats")
    doc = json.loads(out)
    assert code == 0 and doc["energy"] == 4
    assert doc["stats"]["total_states"] == 64
    assert doc["stats"]["dominance"] == {"rule1": 0, "rule2": 0, "rule3": 0}
    code, out, _ = run(capsys, "--json", "solve", "--algo", "greedy", "--in", GOLDEN, "--trace")
    assert json.loads(out)["trace"]["cycles"][0]["seed"] == 4
    code, out, _ = run(capsys, "solve", "--in", GOLDEN, "--no-dominance", "2", "--stats")
    assert code == 0 and json.loads(out.splitlines()[1])["explored_states"] > 0


def test_solve_timeout(capsys, tmp_path):
    code, out, _ = run(capsys, "gen", "-d", "12", "-w", "8", "-H", "8", "--seed", "3", "-o", str(tmp_path / "i.json"))
    assert code == 0
    code, out, _ = run(capsys, "solve", "--in", str(tmp_path / "i.json"), "--time-limit", "1e-9")
    assert code == 1 and out.startswith("timeout")


def test_validate(capsys, tmp_path):
    code, out, _ = run(capsys, "validate", "--in", GOLDEN, "--sol", PLAN)
    assert code == 0 and out.strip() == "energy=4 OK"
    broken = tmp_path / "bad.json"
    broken.write_text('{"cycles": [{"targets": [5, 0]}]}')
    code, _, err = run(capsys, "validate", "--in", GOLDEN, "--sol", str(broken))
    assert code == 1 and err.startswith("error:")


def test_feas(capsys):
    assert run(capsys, "feas", "--in", GOLDEN)[:2] == (0, "feasible\n")
    code, out, _ = run(capsys, "feas", "--in", BAD)
    assert code == 1
    assert out.strip() == "infeasible: target 1 at (2, 4) needs stack 1 of height 1 to reach 3"


def test_export_and_import(capsys, tmp_path):
    lp = tmp_path / "m.lp"
    code, out, _ = run(capsys, "export-lp", "--in", GOLDEN, "-o", str(lp))
    assert code == 0 and out.strip() == "binaries=420 continuous=24 constraints=804"
    inst = parse_instance(open(GOLDEN).read())
    values = assignment_from_solution(inst, load_solution(inst, open(PLAN).read()))
    sol_file = tmp_path / "vals.txt"
    sol_file.write_text("\n".join(f"{k} {v:g}" for k, v in values.items()))
    code, out, _ = run(capsys, "import-sol", "--in", GOLDEN, "--lp-sol", str(sol_file), "--out", str(tmp_path / "s.json"))
    assert code == 0 and out.strip() == "energy=4 cycles=2"


def test_gen_is_reproducible(capsys):
    _, a, _ = run(capsys, "gen", "-d", "5", "-w", "8", "-H", "8", "--seed", "1")
    _, b, _ = run(capsys, "gen", "-d", "5", "-w", "8", "-H", "8", "--seed", "1")
    assert a == b and json.loads(a)["stacks"] == [7, 4, 7, 1, 4]
    code, _, err = run(capsys, "gen", "-d", "10", "-w", "1", "-H", "5", "--max-rejects", "20")
    assert code == 1 and "no feasible instance" in err


def test_bench(capsys, tmp_path):
    summary = tmp_path / "sum.json"
    code, out, _ = run(capsys, "bench", "--grid", "custom", "-d", "5", "-w", "6", "-H", "6",
                       "--seeds", "2", "--summary", str(summary))
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("d,w,h,seed,solver") and len(lines) == 5
    assert json.loads(summary.read_text())[0]["instances"] == 2
    assert run(capsys, "bench", "--grid", "custom", "-d", "5")[0] == 2


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["solve"],
        ["solve", "--in", "/nonexistent.json"],
        ["solve", "--in", GOLDEN, "--algo", "magic"],
        ["solve", "--in", GOLDEN, "--time-limit", "0"],
        ["solve", "--in", GOLDEN, "--no-dominance", "4"],
    ],
)
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err.startswith("usage error:")


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "sacrp.cli", "solve", "--in", GOLDEN],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == "energy=4 cycles=2"
