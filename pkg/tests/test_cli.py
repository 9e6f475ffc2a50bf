import csv
import json
import subprocess
import sys

import pytest
import yaml

from ncresidue import __version__
from ncresidue.cli import EXIT_FAIL, EXIT_OK, EXIT_SPEC, eval_fraction, main
from ncresidue.specfile import parse_spec

TRIVIAL = "grading: trivial(2)\noperator: log_kernel(p0=1)\npoints: [[0, 0]]\n"
HEIS = "grading: heisenberg(1,0)\noperator: graded_norm_power(-4)\npoints: [[0, 0, 0]]\n"


@pytest.fixture
def spec(tmp_path):
    def write(text, name="spec.yaml"):
        p = tmp_path / name
        p.write_text(text, encoding="utf-8")
        return str(p)

    return write


def run(argv, tmp_path, name="out.json"):
    out = tmp_path / name
    code = main(argv + ["--out", str(out)])
    return code, out


def test_residue_trivial_log_kernel(spec, tmp_path):
    code, out = run(["residue", "--spec", spec(TRIVIAL)], tmp_path)
    assert code == EXIT_OK
    report = json.loads(out.read_text())
    assert report["tool"] == {"name": "ncresidue", "version": __version__}
    (pt,) = report["points"]
    assert pt["ok"] and pt["wodzicki"]["value"]["re"] == pytest.approx(-1, abs=1e-6)
    assert pt["groupoidal"]["value"]["re"] == pytest.approx(-1, abs=1e-9)
    rows = list(csv.DictReader(out.with_suffix(".csv").open()))
    assert {r["method"] for r in rows} == {"wodzicki", "groupoidal"}
    assert set(rows[0]) >= {"point", "method", "value", "error"}


def test_residue_heisenberg_agreement(spec, tmp_path):
    code, out = run(["residue", "--spec", spec(HEIS)], tmp_path)
    assert code == EXIT_OK
    pt = json.loads(out.read_text())["points"][0]
    assert pt["agreement"] == {"ponge=groupoidal": True}
    assert pt["groupoidal_symbol"]["certified"]
    assert pt["ponge"]["value"]["re"] == pytest.approx(pt["groupoidal_symbol"]["value"]["re"], rel=1e-3)


def test_unknown_term_is_spec_error(spec, tmp_path, capsys):
    code, out = run(["residue", "--spec", spec("grading: trivial(2)\noperator: fourier_magic\n")], tmp_path)
    assert code == EXIT_SPEC and not out.exists()
    err = capsys.readouterr().err
    assert "fourier_magic" in err and "line 2" in err


def test_numerical_failure_exit_code(spec, tmp_path):
    # agreement to 1e-30 is out of reach: the point is reported and the exit code is 1
    code, out = run(["residue", "--spec", spec(TRIVIAL), "--tol", "1e-30"], tmp_path)
    assert code == EXIT_FAIL
    report = json.loads(out.read_text())
    assert report["summary"] == {"passed": 0, "failed": 1}
    assert report["points"][0]["agreement"] == {"wodzicki=groupoidal": False}


def test_report_round_trips_settings(spec, tmp_path):
    path = spec(TRIVIAL + "s_set: [0.5, 2]\nseed: 4\n")
    code, out = run(["residue", "--spec", path, "--s-set", "1/3,3"], tmp_path)
    assert code == EXIT_OK
    settings = json.loads(out.read_text())["settings"]
    assert settings["s_set"] == pytest.approx([1 / 3, 3])
    reparsed = parse_spec(yaml.safe_dump(settings))
    assert reparsed.to_dict() == settings


def test_report_deterministic(spec, tmp_path):
    path = spec("grading: trivial(1)\noperator: log_kernel(p0=wave)\nrandom_points: 2\nseed: 9\n")
    reports = []
    for i in range(2):
        _, out = run(["residue", "--spec", path], tmp_path, f"r{i}.json")
        r = json.loads(out.read_text())
        r.pop("elapsed_s")
        reports.append(r)
    assert reports[0] == reports[1]


@pytest.mark.parametrize("fmt", ["csv", "text"])
def test_other_formats(spec, tmp_path, fmt):
    code, out = run(["residue", "--spec", spec(TRIVIAL), "--format", fmt], tmp_path, f"out.{fmt}")
    assert code == EXIT_OK
    text = out.read_text()
    if fmt == "csv":
        assert text.startswith("point,method,value")
    else:
        assert "method=wodzicki" in text and "summary: passed=1" in text


def test_stdout_output(spec, capsys):
    assert main(["residue", "--spec", spec(TRIVIAL), "--format", "text"]) == EXIT_OK
    assert "method=groupoidal" in capsys.readouterr().out


def test_verify_conv(tmp_path):
    code, out = run(["verify", "conv"], tmp_path)
    assert code == EXIT_OK
    report = json.loads(out.read_text())
    assert report["summary"]["failed"] == 0
    assert all({"measured", "expected", "tolerance", "passed"} <= set(c) for c in report["checks"])


def test_verify_failure_lists_measured_and_expected(tmp_path, capsys):
    code, _ = run(["verify", "conv", "--tol", "1e-40"], tmp_path)
    assert code == EXIT_FAIL
    err = capsys.readouterr().err
    assert "FAIL" in err and "measured" in err and "expected" in err and "tol" in err


def test_verify_all_loose_tolerance(tmp_path):
    code, out = run(["verify", "all", "--tol", "1e-2"], tmp_path)
    assert code == EXIT_OK
    suites = {c["suite"] for c in json.loads(out.read_text())["checks"]}
    assert suites == {"ft", "cocycle", "conv", "equivalence"}


def test_ft_check_and_cocycle_commands(tmp_path):
    code, _ = run(["ft-check", "--dims", "1", "2", "--xi-norms", "1", "3"], tmp_path, "ft.json")
    assert code == EXIT_OK
    code, out = run(["cocycle", "--grading", "trivial(2)", "--s-set", "1/2,3"], tmp_path, "cc.json")
    assert code == EXIT_OK
    assert len(json.loads(out.read_text())["checks"]) == 2
    assert run(["cocycle", "--grading", "sphere(2)"], tmp_path, "bad.json")[0] == EXIT_SPEC


def test_conv_check_with_threads(tmp_path):
    code, _ = run(["conv-check", "--grid", "32", "--threads", "2"], tmp_path)
    assert code == EXIT_OK


@pytest.mark.parametrize("argv", [[], ["verify", "nonsense"], ["residue"], ["residue", "--spec", "x", "--s-set", "1,2"]])
def test_usage_errors(argv):
    assert main(argv) == EXIT_SPEC


def test_eval_fraction():
    assert eval_fraction("1/3") == pytest.approx(1 / 3)
    assert eval_fraction(" 2 ") == 2.0


def test_console_entry_point(spec):
    proc = subprocess.run([sys.executable, "-m", "ncresidue.cli", "residue", "--spec", spec(TRIVIAL),
                           "--format", "csv"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.splitlines()[0].startswith("point,method")
    proc = subprocess.run([sys.executable, "-m", "ncresidue.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and __version__ in proc.stdout
