import csv
import json
import math

import numpy as np
import pytest

from degwave import cli


def run(tmp_path, command, *flags, config=None):
    out = tmp_path / "out"
    argv = [command, "--out", str(out), *flags]
    if config is not None:
        path = tmp_path / "run.ini"
        path.write_text(config)
        argv += ["--config", str(path)]
    return cli.main(argv), out


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_spectrum_classical(tmp_path):
    code, out = run(tmp_path, "spectrum", "--alpha", "0", "--modes", "12")
    assert code == 0
    table = rows(out / "eigen_table.csv")
    lam = np.array([float(r["lambda"]) for r in table])
    np.testing.assert_allclose(lam, (np.arange(13) * math.pi) ** 2, rtol=1e-13)
    doc = json.loads((out / "spectrum.json").read_text())
    assert doc["schema_version"] == "1.0" and len(doc["config_hash"]) == 16
    assert doc["kadec_modes"] == 70 and doc["kadec"]["margin"] > 0.2499


def test_spectrum_boundary_column(tmp_path):
    code, out = run(tmp_path, "spectrum", "--alpha", str(2 / 3), "--modes", "30")
    assert code == 0
    phi1 = np.array([abs(float(r["phi_at_1"])) for r in rows(out / "eigen_table.csv")])[1:]
    assert np.max(np.abs(phi1 - math.sqrt(4 / 3))) <= 1e-12


@pytest.mark.parametrize("flags", [["--alpha", "2.5"], ["--alpha", "abc"], ["--modes", "0"],
                                   ["--time", "T0 ** 2"]])
def test_bad_values_exit_two(tmp_path, capsys, flags):
    code, _ = run(tmp_path, "spectrum", *flags)
    assert code == 2
    assert "configuration error" in capsys.readouterr().err


def test_config_error_names_line(tmp_path, capsys):
    code, _ = run(tmp_path, "spectrum", config="[problem]\nalpha = 0.2\nnodes = 4\n")
    assert code == 2
    err = capsys.readouterr().err
    assert "[problem] nodes" in err and "line 3" in err


def test_synthesize_zero_target(tmp_path):
    code, out = run(tmp_path, "synthesize", config="[target]\nkind = zero\n[output]\nsamples = 11\n")
    assert code == 0
    q = rows(out / "control.csv")
    assert len(q) == 11 and all(float(r["p"]) == 0.0 for r in q)
    doc = json.loads((out / "synthesis.json").read_text())
    assert doc["residual_inf"] == 0.0 and doc["regime"] == "open-neighborhood"


def test_synthesize_time_expression(tmp_path):
    code, out = run(tmp_path, "synthesize", "--alpha", "0", "--time", "1.2*T0", "--modes", "10")
    assert code == 0
    doc = json.loads((out / "synthesis.json").read_text())
    assert doc["T"] == pytest.approx(2.4, rel=1e-15) and doc["T0"] == 2.0
    assert doc["roundtrip_rel_err"] <= 1e-6


def test_synthesize_overdetermined_exits_zero(tmp_path):
    code, out = run(tmp_path, "synthesize", "--time", "0.6*T0", config="[target]\ndecay = 0.5\n")
    assert code == 0
    doc = json.loads((out / "synthesis.json").read_text())
    assert doc["regime"] == "overdetermined" and doc["residual_inf"] > 0


def test_synthesize_inadmissible_potential_exits_one(tmp_path, capsys):
    code, _ = run(tmp_path, "synthesize", config="[problem]\nmu = one\n")
    assert code == 1
    assert "InadmissiblePotentialError" in capsys.readouterr().err


def test_synthesize_is_deterministic(tmp_path):
    _, out = run(tmp_path, "synthesize", "--seed", "7")
    first = (out / "synthesis.json").read_bytes()
    _, out = run(tmp_path, "synthesize", "--seed", "7")
    assert (out / "synthesis.json").read_bytes() == first
    _, out = run(tmp_path, "synthesize", "--seed", "8")
    assert (out / "synthesis.json").read_bytes() != first


def test_target_from_file(tmp_path):
    data = tmp_path / "target.csv"
    lines = ["n,Y,Z"] + [f"{n},{1e-3 / (1 + n) ** 4},0" for n in range(6)]
    data.write_text("\n".join(lines) + "\n")
    code, out = run(tmp_path, "synthesize", "--modes", "5",
                    config=f"[target]\nkind = file\npath = {data}\n")
    assert code == 0
    data.write_text("n,Y,Z\n0,1,0\n")
    code, _ = run(tmp_path, "synthesize", "--modes", "5",
                  config=f"[target]\nkind = file\npath = {data}\n")
    assert code == 2


def test_table_potential(tmp_path):
    x = np.linspace(0, 1, 2001)
    table = tmp_path / "mu.csv"
    table.write_text("x,mu\n" + "\n".join(f"{a:.17g},{a ** (4 / 3):.17g}" for a in x) + "\n")
    code, out = run(tmp_path, "diagnose", "--modes", "10", config=f"[problem]\nmu = table:{table}\n")
    assert code == 0
    doc = json.loads((out / "diagnostics.json").read_text())
    assert doc["admissibility"]["pass"] is True


def test_simulate_writes_trajectory_and_report(tmp_path):
    code, out = run(tmp_path, "simulate", "--modes", "10",
                    config="[control]\nkind = rough\n[output]\nplots = true\n")
    assert code == 0
    head = (out / "trajectory.csv").read_text().splitlines()[0].split(",")
    assert head[:2] == ["t", "a_0"] and len(head) == 23
    doc = json.loads((out / "terminal.json").read_text())
    assert doc["control_kind"] == "rough" and "regularity" in doc
    assert (out / "trajectory.gp").exists()


def test_simulate_synthesized_control(tmp_path):
    code, out = run(tmp_path, "simulate", "--modes", "8")
    assert code == 0
    doc = json.loads((out / "terminal.json").read_text())
    assert doc["steps"] > 0 and len(doc["terminal"]["a"]) == 9


def test_diagnose_strong_branch(tmp_path):
    code, out = run(tmp_path, "diagnose", "--alpha", "1.2", "--time", "T0", "--modes", "10")
    assert code == 0
    doc = json.loads((out / "diagnostics.json").read_text())
    assert doc["deficiency"] == 1 and doc["regime"]["regime"] == "deficiency-1"
    assert doc["threshold_time"] == pytest.approx(5.0)
    assert (out / "counting.csv").exists()


def test_diagnose_excluded_alpha(tmp_path):
    code, out = run(tmp_path, "diagnose", "--alpha", "1.5", "--modes", "10")
    assert code == 0
    doc = json.loads((out / "diagnostics.json").read_text())
    assert "excluded" in doc["deficiency"]


def test_verify_creates_missing_directory(tmp_path):
    out = tmp_path / "deep" / "nested"
    cfg = tmp_path / "v.ini"
    cfg.write_text("[verify]\ncriteria = 1 2\n")
    assert cli.main(["verify", "--config", str(cfg), "--out", str(out)]) == 0
    doc = json.loads((out / "verify.json").read_text())
    assert [c["number"] for c in doc["criteria"]] == [1, 2] and doc["all_passed"]


def test_verify_detects_perturbed_normalisation(tmp_path):
    cfg = tmp_path / "v.ini"
    cfg.write_text("[verify]\nperturb_kn = 0.01\ncriteria = 3\n")
    assert cli.main(["verify", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    doc = json.loads((tmp_path / "verify.json").read_text())
    assert doc["criteria"][0]["passed"] is False


def test_verify_bad_criteria_list(tmp_path):
    cfg = tmp_path / "v.ini"
    cfg.write_text("[verify]\ncriteria = first\n")
    assert cli.main(["verify", "--config", str(cfg), "--out", str(tmp_path)]) == 2
