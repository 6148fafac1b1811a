from __future__ import annotations

import subprocess
import sys

import pytest

from seatrack.cli import main


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def scenario(tmp_path_factory):
    out = tmp_path_factory.mktemp("calm")
    assert run("simulate", "--preset", "calm", "--seed", 7, "--out", out) == 0
    return out


@pytest.mark.parametrize(
    "argv",
    [["frobnicate"], [], ["track", "--det"], ["simulate", "--preset", "stormy", "--out", "x"], ["eval", "--gt", "a"]],
)
def test_usage_errors_exit_one(argv, capsys):
    assert run(*argv) == 1
    assert "error" in capsys.readouterr().err


def test_bad_config_exits_one(tmp_path, scenario, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("beta=-5\n")
    assert run("track", "--det", scenario / "det.txt", "--config", cfg, "--out", tmp_path / "r.txt") == 1
    assert "beta" in capsys.readouterr().err


def test_malformed_detection_exits_one(tmp_path):
    det = tmp_path / "det.txt"
    det.write_text("1,-1,0,0,10\n")
    assert run("track", "--det", det, "--out", tmp_path / "r.txt") == 1


def test_missing_file_exits_two(tmp_path, capsys):
    assert run("track", "--det", tmp_path / "nope.txt", "--out", tmp_path / "r.txt") == 2
    assert run("eval", "--gt", tmp_path / "nope.txt", "--res", tmp_path / "nope.txt") == 2


def test_pipeline_end_to_end(tmp_path, scenario, capsys):
    res = tmp_path / "res.txt"
    report = tmp_path / "report.txt"
    argv = ["track", "--det", scenario / "det.txt", "--emb", scenario / "emb.txt", "--cmc", scenario / "transforms.txt"]
    assert run(*argv, "--out", res) == 0
    capsys.readouterr()
    assert run("eval", "--gt", scenario / "gt.txt", "--res", res, "--report", report) == 0
    assert capsys.readouterr().out.split()[0] == "MOTA"
    kv = dict(line.split("=") for line in report.read_text().splitlines())
    assert float(kv["mota"]) >= 0.95
    assert kv["idsw"] == "0"


def test_print_config(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("beta=1600\n")
    assert run("track", "--print-config", "--config", cfg) == 0
    out = capsys.readouterr().out
    assert "beta=1600.0" in out and "n_init=3" in out


def test_cmc_flags_are_exclusive(scenario, tmp_path):
    argv = ["track", "--det", scenario / "det.txt", "--cmc-identity", "--cmc", scenario / "transforms.txt"]
    assert run(*argv, "--out", tmp_path / "r.txt") == 1


def test_mathcheck_revcol(capsys):
    assert run("mathcheck", "--suite", "revcol") == 0
    (line,) = capsys.readouterr().out.splitlines()
    assert line.startswith("[PASS] revcol")


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "seatrack", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "mathcheck" in proc.stdout
