import csv
import io
import math
import subprocess
import sys

import pytest

from relayage import SystemParams, average_age_stream1
from relayage.cli import main

REF = ["--lambda1", "0.4", "--mu1", "1", "--s", "1", "--w", "1"]


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def table(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_analyze_passes_library_value_through():
    code, out, _ = run("analyze", *REF)
    assert code == 0
    rows = {r["quantity"]: r["value"] for r in table(out)}
    assert rows["delta1"] == f"{average_age_stream1(SystemParams(0.4, 1, 1, 1)):.12g}"
    assert float(rows["pi_b0"]) == pytest.approx(0.1, abs=1e-12)
    for key in ("vacation_fraction", "alpha1", "alpha2", "c1", "c2", "e_ab", "e_ay"):
        assert key in rows


def test_analyze_unstable_exits_2():
    code, _, err = run("analyze", "--lambda1", "0.6", "--mu1", "1", "--s", "1", "--w", "1")
    assert code == 2
    assert "mu1 > lambda1*(1 + s/w)" in err


def test_analyze_relay():
    code, out, _ = run("analyze", "--mode", "relay", "--lambda1", "0.3", "--mu1", "1", "--lambda2", "1", "--mu2", "4")
    assert code == 0
    rows = {r["quantity"]: float(r["value"]) for r in table(out)}
    assert rows["delta2"] == 1.25
    assert rows["delta1"] == pytest.approx(average_age_stream1(SystemParams(0.3, 1, 1, 4)), rel=1e-11)


@pytest.mark.parametrize(
    "argv",
    [
        ["analyze", "--bogus"],
        ["analyze", "--lambda1", "abc"],
        ["analyze", "--lambda1", "0.4", "--s", "1"],
        ["analyze", *REF, "--mode", "weird"],
        ["frobnicate"],
        [],
    ],
)
def test_usage_errors_exit_1(argv):
    assert run(*argv)[0] == 1


def test_nonpositive_rate_exit_1():
    assert run("analyze", "--lambda1", "-0.4", "--s", "1", "--w", "1")[0] == 1


def test_validate_passes_on_reference_instance():
    code, out, _ = run("validate", *REF)
    rows = table(out)
    assert code == 0
    status = {r["check"]: r["status"] for r in rows}
    assert status["e_ay"] == "INFO"
    assert all(s == "PASS" for k, s in status.items() if k != "e_ay"), status


@pytest.mark.filterwarnings("ignore::relayage.sim.ShortHorizonWarning")
def test_validate_tiny_horizon_warns():
    code, out, _ = run("validate", *REF, "--packets", "1000", "--replications", "3")
    status = [r["status"] for r in table(out)]
    assert code == 0
    assert "WARN" in status and "FAIL" not in status


def test_validate_tolerance_failure_exits_3():
    # long vacations: the published closed form is about 5% below the simulated age
    argv = ["--lambda1", "0.2", "--mu1", "1", "--s", "0.2", "--w", "0.2", "--packets", "500000"]
    code, out, _ = run("validate", *argv)
    status = {r["check"]: r["status"] for r in table(out)}
    assert code == 3
    assert status["delta1"] == "FAIL"
    assert status["delta1_corrected"] == "PASS"


def test_validate_unstable_exits_2_before_simulating():
    code, out, _ = run("validate", "--lambda1", "0.6", "--mu1", "1", "--s", "1", "--w", "1")
    assert code == 2 and out == ""


def test_simulate_and_records(tmp_path):
    rec = tmp_path / "rec.csv"
    code, out, _ = run("simulate", *REF, "--packets", "20000", "--replications", "2", "--records", str(rec))
    assert code == 0
    stats = {r["statistic"]: r for r in table(out)}
    assert stats["n_retained"]["mean"] == str(2 * (20000 - 1000))
    assert stats["avg_age_stream1"]["ci95"] != ""
    lines = rec.read_text().splitlines()
    assert lines[0] == "j,t_arrival,t_depart,A,T,B,Y"
    assert len(lines) == 1 + 19000


def test_optimize():
    code, out, _ = run("optimize", "--mu1", "1", "--s", "0", "--w", "1")
    rows = {r["quantity"]: float(r["value"]) for r in table(out)}
    assert code == 0
    assert rows["lambda1_star"] == pytest.approx(0.53101, abs=1e-5)


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# reference instance\nlambda1 = 0.4\nmu1=1\ns=1\nw=1\n")
    code, out, _ = run("analyze", "--config", str(cfg))
    assert code == 0
    base = {r["quantity"]: r["value"] for r in table(out)}
    assert base["delta1"] == f"{average_age_stream1(SystemParams(0.4, 1, 1, 1)):.12g}"
    code, out, _ = run("analyze", "--config", str(cfg), "--lambda1", "0.3")
    over = {r["quantity"]: r["value"] for r in table(out)}
    assert over["delta1"] == f"{average_age_stream1(SystemParams(0.3, 1, 1, 1)):.12g}"


def test_config_file_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("lambda1 0.4\n")
    assert run("analyze", "--config", str(bad))[0] == 1
    unknown = tmp_path / "unknown.cfg"
    unknown.write_text("colour=blue\n")
    assert run("analyze", "--config", str(unknown))[0] == 1
    assert run("analyze", "--config", str(tmp_path / "missing.cfg"))[0] == 1


def test_sweep_fig5(tmp_path):
    out_path = tmp_path / "fig5.csv"
    code, _, _ = run("sweep-fig5", "--out", str(out_path), "--grid-points", "20")
    assert code == 0
    curves = table(out_path.read_text())
    assert len(curves) == 4 * 20
    assert list(curves[0]) == ["s", "w", "lambda1", "delta1"]
    opt = table((tmp_path / "fig5_optimum.csv").read_text())
    deltas = [float(r["delta1_star"]) for r in opt]
    assert all(a > b for a, b in zip(deltas, deltas[1:]))
    # near each optimum, a finer-grained vacation pattern gives a lower curve
    for r in opt:
        lam = float(r["lambda1_star"])
        vals = [average_age_stream1(SystemParams(lam, 1, float(o["s"]), float(o["w"]))) for o in opt]
        assert all(a > b for a, b in zip(vals, vals[1:]))


def test_sweep_fig5_marks_unstable_points():
    code, out, _ = run("sweep-fig5", "--scales", "1", "--lambda1-grid", "0.2,0.5,0.7")
    assert code == 0
    curve = table(out.split("\n\n")[0])
    assert [r["delta1"] for r in curve][1:] == ["unstable", "unstable"]
    assert math.isfinite(float(curve[0]["delta1"]))


def test_sweep_fig5_single_point():
    code, out, _ = run("sweep-fig5", "--scales", "1", "--lambda1-grid", "0.2")
    assert code == 0
    assert len(table(out.split("\n\n")[0])) == 1


@pytest.mark.parametrize("flag", ["--scales", "--lambda1-grid"])
def test_sweep_fig5_empty_grid(flag):
    assert run("sweep-fig5", flag, "")[0] == 1


def test_sweep_fig6():
    code, out, _ = run("sweep-fig6")
    assert code == 0
    rows = table(out)
    assert [float(r["lambda2"]) for r in rows] == [0.5, 1, 2, 4]
    stars = [float(r["lambda1_star"]) for r in rows]
    deltas = [float(r["delta1_star"]) for r in rows]
    assert all(a >= b for a, b in zip(stars, stars[1:]))
    assert all(a < b for a, b in zip(deltas, deltas[1:]))
    for r in rows:
        assert float(r["delta2"]) == pytest.approx(0.25 + 1 / float(r["lambda2"]), rel=1e-12)


def test_sweep_fig6_empty_grid():
    assert run("sweep-fig6", "--lambda2-grid", "")[0] == 1


def test_outputs_byte_identical(tmp_path):
    paths = []
    for k in range(2):
        p = tmp_path / f"v{k}.csv"
        assert run("validate", *REF, "--packets", "50000", "--replications", "3", "--seed", "9", "--out", str(p))[0] == 0
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()
    a, b = tmp_path / "f0.csv", tmp_path / "f1.csv"
    run("sweep-fig5", "--out", str(a))
    run("sweep-fig5", "--out", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "relayage", "analyze", "--lambda1", "0.6", "--s", "1", "--w", "1"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 2
