"""
命令行
"""

import json

import pytest

from curvlab.verify.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_PASS, main
from curvlab.verify.report import CSV_HEADER

FAST = "[numerics]\nrk4_steps_per_unit = 100\n"


def test_list(capsys):
    """列出注册表"""
    assert main(["list"]) == EXIT_PASS
    out = capsys.readouterr().out
    assert len(out.strip().splitlines()) == 14
    assert "cdr" in out


@pytest.mark.parametrize("argv", [
    [],
    ["run", "ricci-flow"],
    ["run", "cdr", "--bundle", "hopf2"],
    ["run", "cdr", "--metric", "cheeger(-1)"],
    ["run", "cdr", "--tol", "bogus=1"],
    ["run", "cdr", "--samples", "zero"],
    ["run", "cdr", "--format", "xml"],
])
def test_config_errors(argv, capsys):
    """配置错误退出码 2"""
    assert main(argv) == EXIT_CONFIG
    assert "curvlab:" in capsys.readouterr().err


def test_version(capsys):
    """--version"""
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert "0.2.0" in capsys.readouterr().out


def test_run_csv_to_stdout(capsys):
    """CSV 输出到标准输出"""
    code = main(["run", "fatness", "--bundle", "trivial3x2", "--samples", "2", "--format",
                 "csv", "-q"])
    assert code == EXIT_PASS
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 3


def test_run_failing_suite(tmp_path):
    """失败的套件退出码 1, 报告写到文件"""
    path = tmp_path / "cdr.json"
    code = main(["run", "cdr", "--bundle", "trivial3x2", "--samples", "1", "--out",
                 str(path), "-q"])
    assert code == EXIT_FAIL
    assert json.loads(path.read_text())["verdict"] == "fail"


def test_config_file(tmp_path):
    """配置文件被命令行覆盖"""
    config = tmp_path / "run.toml"
    config.write_text('bundle = "trivial3x2"\nsamples = 3\nseed = 4\n' + FAST)
    path = tmp_path / "out.json"
    code = main(["run", "fatness", "--config", str(config), "--samples", "1", "--out",
                 str(path), "--tol", "algebraic=1e-7", "-q"])
    assert code == EXIT_PASS
    data = json.loads(path.read_text())
    assert data["config"]["bundle"] == "trivial3x2"
    assert data["config"]["samples"] == 1
    assert data["config"]["seed"] == 4
    assert data["config"]["tolerances"]["algebraic"] == 1e-7
    assert data["config"]["numerics"]["rk4_steps_per_unit"] == 100


def test_missing_config_file(tmp_path):
    """配置文件不存在"""
    assert main(["run", "cdr", "--config", str(tmp_path / "none.toml")]) == EXIT_CONFIG


def test_unwritable_report(tmp_path):
    """报告写入失败退出码 1"""
    out = tmp_path / "missing" / "report.json"
    code = main(["run", "fatness", "--bundle", "trivial3x2", "--samples", "1", "--out",
                 str(out), "-q"])
    assert code == EXIT_FAIL


def test_numerics_flags(tmp_path):
    """数值参数的命令行开关覆盖配置文件的 [numerics]"""
    config = tmp_path / "run.toml"
    config.write_text('bundle = "trivial3x2"\n' + FAST + "fd_step_first = 2e-4\n")
    path = tmp_path / "out.json"
    code = main(["run", "fatness", "--config", str(config), "--samples", "1", "--out",
                 str(path), "--rk4-steps-per-unit", "150", "--fd-step-second", "5e-4",
                 "--richardson", "--no-proj-stabilize", "-q"])
    assert code == EXIT_PASS
    numerics = json.loads(path.read_text())["config"]["numerics"]
    assert numerics["rk4_steps_per_unit"] == 150
    assert numerics["fd_step_first"] == 2e-4
    assert numerics["fd_step_second"] == 5e-4
    assert numerics["richardson"] is True
    assert numerics["proj_stabilize"] is False


@pytest.mark.parametrize("argv", [
    ["--fd-step-first", "0"],
    ["--rk4-steps-per-unit", "many"],
])
def test_bad_numerics_flags(argv, capsys):
    """非法的数值参数退出码 2"""
    assert main(["run", "fatness", "--bundle", "trivial3x2", "--samples", "1", "-q"] +
                argv) == EXIT_CONFIG
    assert "curvlab:" in capsys.readouterr().err
