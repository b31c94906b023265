import csv
import json
from pathlib import Path

import pytest

from dcsmooth.cli import main
from dcsmooth.runner import REPORT_NAME


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# --- regularize ------------------------------------------------------------------

def test_regularize_from_config(tmp_path, capsys):
    out = tmp_path / "run"
    code, stdout, _ = run_cli(
        capsys, "regularize", "--config", "configs/huber.toml", "--out", str(out)
    )
    assert code == 0
    assert "ALL CHECKS PASSED" in stdout
    assert "PASS sandwich" in stdout
    stage_files = sorted(p.name for p in out.glob("stage_*.csv"))
    assert len(stage_files) == 7
    assert stage_files[0] == "stage_00_n1.csv"
    doc = json.loads((out / REPORT_NAME).read_text())
    assert doc["config"]["function"]["expression"] == "abs(x)"
    assert [s["file"] for s in doc["stages"]] == stage_files
    assert all(c["status"] == "PASS" for c in doc["report"]["checks"])


def test_regularize_is_deterministic(tmp_path, capsys):
    args = ("regularize", "--fn", "abs(x)", "--domain", "-2:2:101", "--scales", "1,2,4")
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli(capsys, *args, "--out", str(a))[0] == 0
    first = {p.name: p.read_bytes() for p in a.iterdir()}
    assert run_cli(capsys, *args, "--out", str(a))[0] == 0
    second = {p.name: p.read_bytes() for p in a.iterdir()}
    assert first == second
    # stage artifacts do not depend on where they are written
    assert run_cli(capsys, *args, "--out", str(b))[0] == 0
    for name in first:
        if name.endswith(".csv"):
            assert (b / name).read_bytes() == first[name], name


def test_regularize_designed_failure_config(tmp_path, capsys):
    code, stdout, _ = run_cli(
        capsys,
        "regularize",
        "--config",
        "configs/l1_kernel_fails_separation.toml",
        "--out",
        str(tmp_path / "l1"),
    )
    assert code == 1
    assert "FAIL separation-constant" in stdout
    assert "CHECK(S) FAILED" in stdout


def test_regularize_inline_needs_domain(capsys):
    code, _, stderr = run_cli(capsys, "regularize", "--fn", "abs(x)")
    assert code == 2
    assert "error:" in stderr


def test_regularize_without_any_source(capsys):
    code, _, stderr = run_cli(capsys, "regularize", "--scales", "1,2")
    assert code == 2
    assert "error:" in stderr


def test_bad_expression_is_reported_as_input_error(capsys):
    code, _, stderr = run_cli(
        capsys, "regularize", "--fn", "x +", "--domain", "-1:1:11", "--scales", "1"
    )
    assert code == 2
    assert "position" in stderr


# --- moreau -------------------------------------------------------------------------

def test_moreau_check_agrees_with_direct_route(capsys):
    code, stdout, _ = run_cli(
        capsys, "moreau", "--fn", "x^2", "--domain", "-2:2:101", "--n", "1", "--check"
    )
    assert code == 0
    assert "PASS fast-matches-direct" in stdout


def test_moreau_writes_csv(tmp_path, capsys):
    dest = tmp_path / "moreau.csv"
    code, stdout, _ = run_cli(
        capsys,
        "moreau",
        "--fn", "abs(x)",
        "--domain", "-1:1:21",
        "--n", "2",
        "--out", str(dest),
    )
    assert code == 0
    with open(dest, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x", "f", "value"]
    assert len(rows) == 22


def test_moreau_missing_csv_is_an_input_error(tmp_path, capsys):
    code, _, stderr = run_cli(
        capsys, "moreau", "--csv", str(tmp_path / "absent.csv"), "--domain", "-1:1:5", "--n", "1"
    )
    assert code == 2
    assert "not found" in stderr


def test_moreau_csv_domain_mismatch(tmp_path, capsys):
    src = tmp_path / "f.csv"
    code, _, _ = run_cli(
        capsys, "moreau", "--fn", "abs(x)", "--domain", "-1:1:21", "--n", "1", "--out", str(src)
    )
    assert code == 0
    capsys.readouterr()
    code, _, stderr = run_cli(
        capsys, "moreau", "--csv", str(src), "--domain", "-1:1:5", "--n", "1"
    )
    assert code == 2
    assert "does not match" in stderr


# --- envelope -------------------------------------------------------------------------

def test_envelope_dual_check_1d(capsys):
    code, stdout, _ = run_cli(
        capsys,
        "envelope", "--fn", "sqrt(abs(x))", "--domain", "-2:2:201", "--check-dual",
    )
    assert code == 0
    assert "PASS hull-matches-biconjugate" in stdout


def test_envelope_dual_check_2d(capsys):
    code, stdout, _ = run_cli(
        capsys,
        "envelope",
        "--fn", "sqrt(abs(x)) + sqrt(abs(y))",
        "--domain", "-1:1:9,-1:1:9",
        "--check-dual",
    )
    assert code == 0
    assert "PASS hull-matches-biconjugate" in stdout


# --- lasry-lions -----------------------------------------------------------------------

def test_lasry_lions_runs_and_orders_scales(tmp_path, capsys):
    dest = tmp_path / "ll.csv"
    code, _, _ = run_cli(
        capsys,
        "lasry-lions",
        "--fn", "abs(sin(3*x))",
        "--domain", "-2:2:101",
        "--n", "2", "--m", "8",
        "--strict-order",
        "--out", str(dest),
    )
    assert code == 0
    assert dest.exists()
    capsys.readouterr()
    code, _, stderr = run_cli(
        capsys,
        "lasry-lions",
        "--fn", "abs(x)",
        "--domain", "-1:1:11",
        "--n", "8", "--m", "2",
        "--strict-order",
    )
    assert code == 2
    assert "error:" in stderr


# --- kernel-check ------------------------------------------------------------------------

def test_kernel_check_quadratic_euclidean(capsys):
    code, stdout, _ = run_cli(capsys, "kernel-check", "--dim", "1", "--seed", "7")
    assert code == 0
    assert "PASS growth-constants" in stdout
    assert "PASS separation-constant" in stdout
    assert "PASS quadratic-identity" in stdout


def test_kernel_check_l1_fails_separation(capsys):
    code, stdout, _ = run_cli(capsys, "kernel-check", "--dim", "2", "--norm-p", "1")
    assert code == 1
    assert "FAIL separation-constant" in stdout
    # the quadratic identity only applies to the Euclidean kernel
    assert "quadratic-identity" not in stdout


def test_kernel_check_p15(capsys):
    code, stdout, _ = run_cli(
        capsys, "kernel-check", "--dim", "1", "--exponent-p", "1.5",
        "--min-separation", "1e-3",
    )
    assert code == 0
    assert "PASS separation-constant" in stdout


# --- diagnose ---------------------------------------------------------------------------

@pytest.fixture()
def small_run(tmp_path, capsys):
    out = tmp_path / "run"
    code, _, _ = run_cli(
        capsys,
        "regularize",
        "--fn", "abs(x)",
        "--domain", "-2:2:101",
        "--scales", "1,2,4",
        "--out", str(out),
    )
    assert code == 0
    capsys.readouterr()
    return out


def test_diagnose_reproduces_clean_run(small_run, capsys):
    code, stdout, _ = run_cli(capsys, "diagnose", "--dir", str(small_run))
    assert code == 0
    assert "ALL CHECKS PASSED" in stdout
    assert "VERDICT MISMATCH" not in stdout


def test_diagnose_catches_tampered_artifact(small_run, capsys):
    target = small_run / "stage_01_n2.csv"
    with open(target, newline="") as fh:
        rows = list(csv.reader(fh))
    head, body = rows[0], rows[1:]
    delta_col = head.index("delta")
    body[17][delta_col] = repr(float(body[17][delta_col]) + 1e-3)
    with open(target, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(head)
        w.writerows(body)
    code, stdout, _ = run_cli(capsys, "diagnose", "--dir", str(small_run))
    assert code == 1
    assert "VERDICT MISMATCH" in stdout
    assert "stage-consistent" in stdout


def test_diagnose_missing_directory(tmp_path, capsys):
    code, _, stderr = run_cli(capsys, "diagnose", "--dir", str(tmp_path / "nope"))
    assert code == 2
    assert "error:" in stderr
