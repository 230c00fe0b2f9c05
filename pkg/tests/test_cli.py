"""Command-line interface tests.

Most cases call main() in process and inspect files, stdout, and exit
codes; one test goes through the interpreter to cover the module entry
point, and one through the installed console script.
"""

from __future__ import annotations

import csv
import json
import shutil
import subprocess
import sys

import pytest

from dkglab import __version__
from dkglab.cli import main
from dkglab.kernels import LinearParams, poly_bump, solve_linear_ivp


def test_linear_solve_writes_grid(tmp_path, capsys):
    out = tmp_path / "linear.csv"
    code = main(
        [
            "linear-solve",
            "--b", "1.0", "--m2", "0.5", "--t", "1.5",
            "--grid", "0.05", "--out", str(out),
        ]
    )
    assert code == 0
    assert "wrote" in capsys.readouterr().out
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x", "u"]
    assert len(rows) == 1 + 141  # half = ceil(3.5 / 0.05) on both sides
    mid = rows[1 + 70]
    assert float(mid[0]) == 0.0
    expected = solve_linear_ivp(
        poly_bump(1.0), None, None, LinearParams(b=1.0, m2=0.5), 1.5, 0.0
    )
    assert float(mid[1]) == expected


def test_linear_solve_unknown_profile(tmp_path, capsys):
    code = main(
        [
            "linear-solve",
            "--b", "1.0", "--m2", "0.0", "--t", "1.0",
            "--profile", "step", "--out", str(tmp_path / "x.csv"),
        ]
    )
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_simulate_quiet_run(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(
        [
            "simulate",
            "--p", "2.0", "--q", "2.0", "--b", "1.0", "--eps", "0.3",
            "--tmax", "2.0", "--hx", "0.1", "--out", str(out),
        ]
    )
    assert code == 0
    assert "no blow-up" in capsys.readouterr().out
    for name in ("trajectory.csv", "trace.csv", "report.json"):
        assert (out / name).exists()
    with open(out / "report.json", encoding="utf-8") as fh:
        payload = json.load(fh)
    assert payload["params"]["eps"] == 0.3
    assert payload["report"]["blew_up"] is False
    assert payload["backend"] in {"compiled", "python"}
    assert payload["version"] == __version__


def test_simulate_blowup_run(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(
        [
            "simulate",
            "--p", "2.0", "--q", "2.0", "--b", "1.0", "--eps", "2.0",
            "--tmax", "8.0", "--hx", "0.05", "--out", str(out),
        ]
    )
    assert code == 0
    stdout = capsys.readouterr().out
    assert "blow-up at t_num=" in stdout
    with open(out / "report.json", encoding="utf-8") as fh:
        payload = json.load(fh)
    assert payload["report"]["blew_up"] is True
    assert payload["report"]["insensitive"] is True


def test_simulate_rejects_bad_grid(tmp_path, capsys):
    code = main(
        [
            "simulate",
            "--p", "2.0", "--q", "2.0", "--b", "1.0", "--eps", "0.3",
            "--tmax", "2.0", "--hx", "0.0", "--out", str(tmp_path / "run"),
        ]
    )
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_sweep_command(tmp_path, capsys):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text(
        "p = 2.0\nq = 2.0\nb = 1.0\nR = 1.0\n"
        "hx = 0.05\nt_max = 30.0\neps_start = 2.0\neps_count = 4\n"
    )
    out = tmp_path / "out"
    code = main(["sweep", "--config", str(cfg), "--out", str(out)])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "4 runs, 4 blew up" in stdout
    assert "fitted slope" in stdout
    for name in ("sweep.csv", "report.json", "plot_sweep.py"):
        assert (out / name).exists()
    with open(out / "report.json", encoding="utf-8") as fh:
        payload = json.load(fh)
    assert payload["checks"]["bound_consistency"]["ok"] is True
    assert payload["checks"]["fit_sanity"]["within_limit"] is True


def test_sweep_missing_config(tmp_path, capsys):
    code = main(
        ["sweep", "--config", str(tmp_path / "nope.cfg"), "--out", str(tmp_path)]
    )
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_sequences_stdout(capsys):
    code = main(
        [
            "sequences",
            "--mode", "subcritical", "--jmax", "5",
            "--p", "2.0", "--q", "2.0", "--b", "1.0",
        ]
    )
    assert code == 0
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert rows[0] == ["j", "ell_j", "L_j", "alpha_j", "beta_j", "logC_j"]
    assert len(rows) == 1 + 6
    first = rows[1]
    assert first[0] == "0"
    assert float(first[1]) == 2.0  # ell_0 = 2 in one dimension


def test_sequences_critical_file(tmp_path, capsys):
    out = tmp_path / "seq.csv"
    root2 = repr(2.0**0.5)
    code = main(
        [
            "sequences",
            "--mode", "critical", "--jmax", "4",
            "--p", root2, "--q", root2, "--b", "1.0", "--n", "3",
            "--frame-c", "0.25", "--frame-k", "0.25",
            "--out", str(out),
        ]
    )
    assert code == 0
    assert "wrote" in capsys.readouterr().out
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["j", "Lambda_j", "gamma_j", "logK_j"]
    assert len(rows) == 1 + 5


def test_sequences_frame_args_must_pair(capsys):
    code = main(
        [
            "sequences",
            "--mode", "subcritical", "--jmax", "3",
            "--p", "2.0", "--q", "2.0", "--b", "1.0",
            "--frame-c", "0.25",
        ]
    )
    assert code == 2
    assert "give both" in capsys.readouterr().err


@pytest.mark.parametrize("which", ["bessel", "closed-forms"])
def test_verify_suites_pass(which, capsys):
    code = main(["verify", "--which", which])
    stdout = capsys.readouterr().out
    assert code == 0
    assert f"suite {which}: PASS" in stdout


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.strip() == f"dkglab {__version__}"


def test_missing_subcommand_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "dkglab.cli", "--version"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip() == f"dkglab {__version__}"


def test_console_script():
    exe = shutil.which("dkglab")
    assert exe is not None, "console script not installed"
    proc = subprocess.run([exe, "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip() == f"dkglab {__version__}"
