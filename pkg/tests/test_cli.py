import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from crt.cli import main
from crt.report import Report

MANIFESTS = Path(__file__).resolve().parent.parent / "manifests"


def run(*argv, env=None, monkeypatch=None):
    out, err = io.StringIO(), io.StringIO()
    code = main([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def m(name):
    return MANIFESTS / name


def test_transversal_xi_example():
    code, out, _ = run("transversal", m("xi-example.crm"), "--order", 8)
    assert code == 1
    assert out.startswith("NOT CR transversal: det a(0) = 0")


def test_finite_type_heisenberg():
    code, out, _ = run("finite-type", m("heisenberg.crm"), "--quiet")
    assert code == 0
    assert out == "finite type, witness k=2, ranks [1,2]\n"


def test_validate_json():
    code, out, _ = run("validate", m("heisenberg.crm"), "--json")
    assert code == 0
    data = json.loads(out)
    assert data["details"]["normality"] == "pass" and data["details"]["reality"] == "pass"
    assert data["schema"] == "crt-report/1"
    assert "elapsed" not in out


@pytest.mark.parametrize("cmd", ["validate", "finite-type", "nondeg", "segre", "check-map", "transversal",
                                 "lemma31", "propagate", "kernel", "report"])
def test_json_round_trip(cmd):
    code, out, _ = run(cmd, m("xi-example.crm"), "--json", "--order", 6)
    data = json.loads(out)
    rep = Report.from_dict(data)
    assert rep.to_dict() == data
    assert code == (0 if rep.verdict else 1)


def test_quiet_output_is_byte_identical():
    a = run("report", m("xi-example.crm"), "--quiet")
    b = run("report", m("xi-example.crm"), "--quiet")
    assert a == b and "elapsed" not in a[1]
    assert a[1].endswith("5/5 tasks passed\n")


def test_timing_line_without_quiet():
    _, out, _ = run("finite-type", m("heisenberg.crm"))
    assert out.splitlines()[-1].startswith("elapsed: ")


@pytest.mark.parametrize("path", sorted(MANIFESTS.glob("*.crm")), ids=lambda p: p.name)
def test_report_passes_on_every_shipped_manifest(path):
    code, out, _ = run("report", path, "--quiet", "--order", 6)
    assert code == 0, out


def test_negative_verdicts_exit_one():
    assert run("finite-type", m("xi-example.crm"), "--quiet")[0] == 1
    assert run("nondeg", m("flat.crm"), "--quiet")[0] == 1
    assert run("check-map", m("heisenberg.crm"), "--quiet")[0] == 0


def test_check_map_on_non_self_map(tmp_path):
    p = tmp_path / "bad.crm"
    p.write_text("manifold source normal n=1 d=1:\n    Q = tau + 2*i*z*chi\n"
                 "manifold target real n=1 d=1:\n    rho = Im(w) - 2*Re(w)*z*conj(z)\nmap (z, w)\n")
    code, out, _ = run("check-map", p, "--quiet")
    assert code == 1 and "does NOT send" in out
    code, out, _ = run("transversal", p, "--quiet")
    assert code == 1


def test_invalid_manifold_exits_one(tmp_path):
    p = tmp_path / "bad.crm"
    p.write_text("manifold source normal n=1 d=1:\n    Q = tau + z*chi\n")
    code, out, _ = run("validate", p, "--quiet")
    assert code == 1 and "fail" in out.lower()
    code, out, _ = run("finite-type", p, "--json")
    assert code == 1
    assert json.loads(out)["details"]["error"] == "ValidationFailure"


def test_parse_error_has_position(tmp_path):
    p = tmp_path / "broken.crm"
    p.write_text("order 8\nmanifold source real n=1 d=1:\n    rho = Im(w) - z*\n")
    code, out, err = run("validate", p)
    assert code == 2 and out == ""
    assert err.startswith(f"{p}:3:")
    assert "Traceback" not in err


def test_usage_errors_exit_two():
    assert run("transversal", m("heisenberg.crm"), "--order", 0)[0] == 2
    assert run("frobnicate", m("heisenberg.crm"))[0] == 2
    assert run("suite", "no-such-family")[0] == 2
    assert run("nondeg", m("heisenberg.crm"), "--vf-degree", 9, "--order", 4)[0] == 2
    code, _, err = run("check-map", m("missing.crm"))
    assert code == 2 and "cannot read input" in err


def test_map_required(tmp_path):
    p = tmp_path / "nomap.crm"
    p.write_text("manifold source normal n=1 d=1:\n    Q = tau\n")
    code, _, err = run("transversal", p)
    assert code == 2 and "needs a map" in err


def test_env_default_order(monkeypatch, tmp_path):
    p = tmp_path / "heis.crm"
    p.write_text("manifold source normal n=1 d=1:\n    Q = tau + 2*i*z*chi\n")
    monkeypatch.setenv("CRT_DEFAULT_ORDER", "5")
    data = json.loads(run("validate", p, "--json")[1])
    assert data["order"] == 5
    monkeypatch.setenv("CRT_DEFAULT_ORDER", "nope")
    assert run("validate", p)[0] == 2
    monkeypatch.delenv("CRT_DEFAULT_ORDER")
    assert json.loads(run("validate", p, "--json")[1])["order"] == 8


def test_order_flag_beats_manifest():
    data = json.loads(run("validate", m("heisenberg.crm"), "--json", "--order", 5)[1])
    assert data["order"] == 5


def test_suite_command():
    code, out, _ = run("suite", "rank-oracle", "--trials", 5, "--seed", 2, "--quiet")
    assert code == 0
    assert out == "suite rank-oracle: 5/5 passed (seed=2, D=6)\n"


def test_segre_and_kernel_commands():
    code, out, _ = run("segre", m("heisenberg.crm"), "--quiet", "--max-k", 3)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].endswith("incidence relations hold")
    assert lines[2] == "v^2: u = (2*i*t1_1*t2_1 + O(9))"
    assert lines[3] == "v^3: u = (-2*i*t1_1*t2_1 + 2*i*t2_1*t3_1 + O(9))"
    code, out, _ = run("kernel", m("flat.crm"), "--quiet")
    assert code == 0 and "kernel field" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "crt", "finite-type", str(m("heisenberg.crm")), "--quiet"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout == "finite type, witness k=2, ranks [1,2]\n"
