import json
import logging
import subprocess
import sys

import pytest

from conftest import config_path, golden_path
from perceng.cli import main
from perceng.config import parse_config_text
from perceng.errors import ConfigError
from perceng.scenarios import instantiate_scenario
from perceng.tracefmt import load_trace, revalidate


def write_cfg(tmp_path, text, name="s.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_intbot_run_matches_golden(tmp_path, capsys):
    out = tmp_path / "t.jsonl"
    assert main(["run", config_path("intbot.cfg"), "--param", "x1=-5", "--out", str(out)]) == 0
    assert out.read_bytes() == open(golden_path("intbot_x1_minus5.jsonl"), "rb").read()
    trace = load_trace(str(out))
    assert trace.omegas()[5] == 0  # stage 6
    summary = json.loads(capsys.readouterr().out)
    assert summary["plausible_experience"] is True


def test_trace_annotations_survive_a_round_trip(tmp_path):
    out = tmp_path / "t.jsonl"
    assert main(["run", "linebot.cfg", "--out", str(out)]) == 0
    sc = instantiate_scenario("linebot", {"mode": "ndet", "epsilon": "1e-9", "window": "3"})
    assert revalidate(load_trace(str(out)), sc.relations) == []


def test_bare_names_resolve_to_bundled_configs(capsys):
    assert main(["run", "intbot.cfg", "--stages", "3"]) == 0
    captured = capsys.readouterr()
    assert len(captured.out.splitlines()) == 3
    assert json.loads(captured.err)["stages"] == 3


@pytest.mark.parametrize("cfg,golden", [
    ("trilateration.cfg", "plan_trilateration.json"),
    ("gridbot_illusion.cfg", "plan_gridbot_illusion.json"),
])
def test_plan_goldens(tmp_path, cfg, golden):
    out = tmp_path / "plan.json"
    assert main(["plan", config_path(cfg), "--out", str(out)]) == 0
    assert json.loads(out.read_text()) == json.load(open(golden_path(golden)))


def test_margins_golden(tmp_path):
    out = tmp_path / "m.csv"
    assert main(["margins", config_path("trilateration_n2.cfg"), "--space", "u",
                 "--out", str(out)]) == 0
    assert out.read_text() == open(golden_path("margins_trilateration_n2.csv")).read()


def test_intbot_margins_are_all_infinite(capsys):
    assert main(["margins", "intbot.cfg"]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert rows[0] == "y,pr,ffm,in_p"
    assert all(r.split(",")[1:] == ["inf", "0.0", "1"] for r in rows[1:])


# -- exit codes --------------------------------------------------------------

def test_infeasible_goal_exits_4(tmp_path, capsys):
    path = write_cfg(tmp_path, "[scenario]\nname = trilateration\n[params]\nn = 1\n"
                               "[goal]\nobservations = 0.5\ntol = 1e-9\n")
    assert main(["plan", path]) == 4
    assert "pf: infeasible" in capsys.readouterr().err


def test_missing_metric_exits_5(tmp_path):
    path = write_cfg(tmp_path, "[scenario]\nname = gridbot\n")
    assert main(["margins", path]) == 5


def test_bad_parameter_reports_path_and_line(tmp_path, capsys):
    path = write_cfg(tmp_path, "[scenario]\nname = intbot\n\n[params]\nx1 = banana\n")
    assert main(["run", path]) == 2
    assert f"{path}:5" in capsys.readouterr().err


@pytest.mark.parametrize("text,line", [
    ("name = intbot\n", 1),
    ("[scenario]\nname = intbot\nspeed = 3\n", 3),
    ("[scenario]\nname = intbot\n[goal]\nkind = x\nfoo = 1\n", 5),
    ("[scenario]\nname = intbot\n[extra]\na = 1\n", 3),
    ("[scenario]\nname = intbot\nstages = ten\n", 3),
])
def test_config_errors_carry_line_numbers(text, line):
    with pytest.raises(ConfigError) as exc:
        parse_config_text(text, "x.cfg")
    assert exc.value.line == line


def test_map_continuation_lines_keep_hashes():
    cfg = parse_config_text("[scenario]\nname = gridbot\n[params]\nmap =\n  ###\n  #R#\n  ###\n")
    assert cfg.params["map"].split() == ["###", "#R#", "###"]


@pytest.mark.parametrize("argv", [
    ["run", "no_such_file.cfg"],
    ["run", "intbot.cfg", "--stages", "0"],
    ["run", "intbot.cfg", "--param", "x1"],
    ["plan", "intbot.cfg"],
])
def test_usage_errors_exit_2(argv):
    assert main(argv) == 2


def test_unknown_goal_target_exits_2(tmp_path):
    path = write_cfg(tmp_path, "[scenario]\nname = gridbot_illusion\n"
                               "[goal]\nkind = istate_set\ntarget = kitchen\n")
    assert main(["plan", path]) == 2


def test_runtime_fault_exits_3(tmp_path):
    path = write_cfg(tmp_path, "[scenario]\nname = landmark_dynamic\n[params]\nreceiver_motion = any\n"
                               "[goal]\nkind = reach_at_stage\nobservations = 9\nstage = 6\n"
                               "[plan]\nhorizon = 5\nbudget = 10\n")
    assert main(["plan", path]) == 3


def test_selfcheck(capsys):
    assert main(["selfcheck", "--rounds", "3", "--seed", "1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(line.startswith("ok") for line in lines)


def test_log_level_from_environment(monkeypatch):
    root = logging.getLogger()
    saved = root.level, list(root.handlers)
    monkeypatch.setenv("PF_LOG", "info")
    root.handlers.clear()
    try:
        assert main(["run", "intbot.cfg", "--stages", "2"]) == 0
        assert root.level == logging.INFO
    finally:
        root.setLevel(saved[0])
        root.handlers[:] = saved[1]


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "perceng.cli", "run", "intbot.cfg", "--stages", "2"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert len(proc.stdout.splitlines()) == 2
