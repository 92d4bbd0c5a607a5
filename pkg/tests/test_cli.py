import io
import subprocess
import sys
from fractions import Fraction

import pytest

from greenadopt.cli import (
    CSV_HEADER,
    ConfigError,
    cell_rng_seed,
    cells,
    main,
    parse_config,
    run_cell,
    run_experiment,
)
from greenadopt.graph_core import read_graph


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def star4(tmp_path):
    path = tmp_path / "star.txt"
    assert cli("gen", "star", "--leaves", "4", "--out", str(path))[0] == 0
    return path


def test_gen_class1(tmp_path):
    path = tmp_path / "c1.txt"
    code, _, _ = cli("gen", "class1", "--n", "10", "--out", str(path))
    assert code == 0
    g, _ = read_graph(path)
    assert g.node_count == 21


def test_gen_rewired_deterministic(tmp_path):
    args = ["gen", "rewired", "--clusters", "5", "--size", "6", "--p", "0.1", "--seed", "7"]
    code, a, _ = cli(*args)
    _, b, _ = cli(*args)
    assert code == 0 and a == b
    assert a.startswith("nodes 30\n")
    assert a.count("\nedge ") == 75


def test_gen_rewired_needs_seed():
    assert cli("gen", "rewired")[0] == 1


def test_simulate_star_fd(star4):
    code, out, _ = cli("simulate", str(star4), "--fd", "1", "--subsidize", "0")
    assert code == 0
    assert out.splitlines()[-1].endswith("cycle=2 adoption=1/2")


def test_simulate_empty_set(star4):
    code, out, _ = cli("simulate", str(star4))
    assert code == 0
    assert "t=0 00000" in out and out.splitlines()[-1] == "transient=0 cycle=1 adoption=0/1"


def test_simulate_class2_leg(tmp_path):
    path = tmp_path / "c2.txt"
    cli("gen", "class2", "--n", "2", "--out", str(path))
    code, out, _ = cli("simulate", str(path), "--temp", "--subsidize", "4", "--audit")
    assert code == 0 and "adoption=2/7" in out


def test_optimize_exact(tmp_path):
    path = tmp_path / "c1.txt"
    cli("gen", "class1", "--n", "10", "--out", str(path))
    code, out, _ = cli("optimize", str(path), "--variant", "tempMCC")
    assert code == 0
    assert "objective=1\n" in out and "subsidy_set=0\n" in out and "optimal=yes" in out
    code, out, _ = cli("optimize", str(path), "--variant", "tempBMC", "--k", "0")
    assert "objective=0\n" in out


def test_optimize_greedy_and_random(star4):
    code, out, _ = cli("optimize", str(star4), "--variant", "fdBMC", "--d", "1", "--k", "1", "--method", "greedy")
    assert code == 0 and "objective=1/2" in out and "optimal=no" in out
    code, out, _ = cli("optimize", str(star4), "--variant", "fdBMC", "--d", "1", "--k", "1",
                       "--method", "random", "--trials", "4", "--seed", "3")
    assert code == 0 and "mean=" in out
    assert cli("optimize", str(star4), "--variant", "tempMCC", "--method", "random")[0] == 1


def test_optimize_timeout_marker(tmp_path):
    path = tmp_path / "r.txt"
    cli("gen", "rewired", "--p", "0", "--seed", "1", "--alpha", "1/2", "--out", str(path))
    code, out, _ = cli("optimize", str(path), "--variant", "tempMCC", "--time-budget", "0.01")
    assert code == 0 and "objective=timeout" in out


def test_usage_errors(star4):
    assert cli()[0] == 1
    assert cli("bogus")[0] == 1
    assert cli("optimize", str(star4), "--variant", "fdMCC")[0] == 1
    assert cli("optimize", str(star4), "--variant", "tempBMC")[0] == 1
    assert cli("simulate", str(star4), "--fd", "x")[0] == 1


def test_data_errors(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("nodes 2\nedge 0 0\n")
    code, _, err = cli("simulate", str(bad))
    assert code == 2 and "self-loop at line 2" in err
    assert cli("simulate", str(tmp_path / "missing.txt"))[0] == 2


def test_export_and_verify(tmp_path):
    graph = tmp_path / "p.txt"
    cli("gen", "path", "--n", "4", "--out", str(graph))
    lp = tmp_path / "m.lp"
    code, out, _ = cli("export-ip", str(graph), "--variant", "tempMCC", "--out", str(lp))
    assert code == 0 and "41 variables, 41 constraints" in out
    assert lp.read_text().startswith("Minimize\n")

    sol = tmp_path / "sol.txt"
    lines = ["q 1", "y0 1"]
    for i in range(4):
        for t in range(9):
            lines.append(f"x{i}_{t} {1 if t >= i else 0}")
    sol.write_text("\n".join(lines) + "\n")
    code, out, _ = cli("verify", str(graph), str(sol), "--variant", "tempMCC", "--model", str(lp))
    assert code == 0
    assert "feasible: yes" in out and "simulated_adoption: 1/1" in out and "lag_audit: pass" in out

    # node 3 cannot adopt at t=1 with no green neighbour at t=0
    sol.write_text("\n".join(lines).replace("x3_1 0", "x3_1 1") + "\n")
    code, _, err = cli("verify", str(graph), str(sol), "--variant", "tempMCC")
    assert code == 2 and "sub_3_1" in err


def test_config_parsing():
    cfg = parse_config("variant tempMCC\np 0, 0.1\nseeds 1 2\nalpha 1/6 1/3\ntrials 3\n")
    assert cfg.p_grid == (0, Fraction(1, 10)) and cfg.seeds == (1, 2)
    assert len(cells(cfg)) == 8
    with pytest.raises(ConfigError) as info:
        parse_config("variant tempMCC\np 0\nseeds 1\nalpha\n")
    assert info.value.line == 4
    with pytest.raises(ConfigError):
        parse_config("variant nope\np 0\nseeds 1\nalpha 1/2\n")
    with pytest.raises(ConfigError):
        parse_config("variant tempMCC\np 0\nseeds 1\nalpha 1/2\ncolour red\n")
    with pytest.raises(ConfigError):
        parse_config("variant fdBMC\np 0\nseeds 1\nalpha 1/2\nk 1\n")
    with pytest.raises(ConfigError):
        parse_config("variant tempMCC\np 0\nseeds x\nalpha 1/2\n")


def test_experiment_rows_sorted_and_reproducible(tmp_path):
    text = "variant tempMCC\nclusters 3\nsize 4\np 0.3 0\nseeds 2 1\nalpha 1/2 1/4\ntrials 3\n"
    cfg = parse_config(text)
    rows = run_experiment(cfg, workers=2)
    keys = [(int(r[0]), Fraction(r[1]), Fraction(r[2])) for r in rows]
    assert keys == sorted(keys)
    # each row is reproducible from its cell alone (timing column aside)
    for cell, row in zip(cells(cfg), rows):
        assert run_cell(cfg, cell)[:-1] == row[:-1]
    assert cell_rng_seed(cfg, cells(cfg)[0]) == "0:1:0:1/4:None"

    conf = tmp_path / "exp.cfg"
    conf.write_text(text)
    out = tmp_path / "out.csv"
    assert cli("experiment", str(conf), "--out", str(out), "--workers", "1")[0] == 0
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 9
    assert [ln.split(",")[:-1] for ln in lines[1:]] == [r[:-1] for r in rows]


def test_experiment_bmc_and_timeout(tmp_path):
    cfg = parse_config("variant fdBMC\nd 2\nk 1 2\nclusters 2\nsize 4\np 0\nseeds 1\nalpha 1/2\ntrials 2\n")
    rows = run_experiment(cfg)
    assert [r[6] for r in rows] == ["1", "2"]
    slow = parse_config("variant tempMCC\np 0\nseeds 1\nalpha 1/2\ntime_budget 0.01\n")
    assert run_experiment(slow)[0][7] == "opt=timeout"


def test_experiment_config_error_exit(tmp_path):
    conf = tmp_path / "bad.cfg"
    conf.write_text("variant tempMCC\np 0\nseeds 1\nalpha\n")
    code, _, err = cli("experiment", str(conf))
    assert code == 2 and "line 4" in err


def test_console_entry_points(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "greenadopt", "gen", "class1", "--n", "2"],
                          capture_output=True, text=True, check=True)
    assert proc.stdout.startswith("nodes 5\n")
    proc = subprocess.run([sys.executable, "-m", "greenadopt"], capture_output=True, text=True)
    assert proc.returncode == 1
