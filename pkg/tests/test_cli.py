import csv
import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from gravent import cli
from gravent.closed_form import f_functions
from gravent.config import ConfigError, RunConfig, SweepAxis, parse_config
from gravent.verification import CriterionResult, Verifier

GROUPS = "groups: {phi: 1.0, epsilon: 0.01, xi: 0.0, Omega: 0.0, omegaT: 1.0}\n"


def write(tmp_path, text, name="run.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def read_rows(path):
    with open(path, newline="") as fh:
        lines = [l for l in fh if not l.startswith("#")]
    return list(csv.DictReader(lines))


def test_parse_minimal():
    cfg = parse_config("schema_version: 1\n" + GROUPS)
    assert cfg.mode == "closed_form"
    assert cfg.resolved_groups().omegaT == 1.0


def test_parse_experiment_block():
    cfg = parse_config(
        "schema_version: 1\nexperiment: {m: 1.0, d: 1.0, alpha: 0.01, beta: 0.05, T: 1.0, G: 1.0, hbar: 1.0, c: 1.0}\n"
    )
    g = cfg.resolved_groups()
    assert g.epsilon == pytest.approx(0.01) and g.xi == pytest.approx(5.0)


@pytest.mark.parametrize(
    "text,line,field",
    [
        ("schema_version: 1\ngroups:\n  phi: 1.0\n  epsilon: -0.01\n", 4, "groups.epsilon"),
        ("schema_version: 2\n" + GROUPS, 1, "schema_version"),
        ("schema_version: 1\nmode: closed_form\n" + GROUPS + "experiment: {m: 1, d: 1, alpha: 1, beta: 0, T: 1}\n", None, None),
        ("schema_version: 1\n" + GROUPS + "numerics:\n  nodes: 8\n", 4, "numerics.nodes"),
        ("schema_version: 1\n" + GROUPS + "numerics:\n  bogus: 1\n", 4, "numerics.bogus"),
        ("schema_version: 1\n" + GROUPS + "sweep:\n  axes:\n    - {name: mass, min: 0, max: 1, count: 2}\n", 5, "sweep.axes.0.name"),
        ("schema_version: 1\n" + GROUPS + "formulas: [unified, nope]\n", 3, "formulas.1"),
        ("schema_version: 1\nmode: sweep\n" + GROUPS, None, None),
        ("schema_version: 1\ngroups: [1, 2\n", None, None),
    ],
)
def test_schema_errors(text, line, field):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    if line is not None:
        assert info.value.line == line
    if field is not None:
        assert info.value.field == field


def test_sweep_axis_values():
    assert SweepAxis("omegaT", 1, 3, 3).values() == [1.0, 2.0, 3.0]
    logs = SweepAxis("phi", 1e-4, 1e-2, 3, "log").values()
    assert logs == pytest.approx([1e-4, 1e-3, 1e-2], rel=1e-12)


def test_closed_form_examples(tmp_path, capsys):
    cfg = write(tmp_path, "schema_version: 1\nmode: relativistic\n" + GROUPS
                + "formulas: [unified, path_limit]\n")
    assert cli.main(["closed-form", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    rows = {r["formula"]: r for r in read_rows(tmp_path / "o" / "closed_form.csv")}
    assert float(rows["unified"]["E"]) == pytest.approx(2.404e-4, rel=1e-3)
    assert float(rows["path_limit"]["E"]) == 0.0
    assert "relativistic_corrected" in rows
    assert "alpha/d" in capsys.readouterr().out


def test_relativistic_row_vanishes_at_sqrt3(tmp_path):
    text = "schema_version: 1\nmode: relativistic\ngroups: {phi: 1.0, epsilon: 0.01, Omega: 0.01, omegaT: %r}\n" % math.sqrt(3)
    assert cli.main(["closed-form", "--config", write(tmp_path, text), "--out", str(tmp_path)]) == 0
    rows = {r["formula"]: r for r in read_rows(tmp_path / "closed_form.csv")}
    assert abs(float(rows["relativistic_corrected"]["correction"])) < 1e-20


def test_relativistic_row_unsupported_for_paths(tmp_path):
    text = "schema_version: 1\nmode: relativistic\ngroups: {phi: 1.0, epsilon: 0.01, xi: 2.0, Omega: 0.01}\n"
    assert cli.main(["closed-form", "--config", write(tmp_path, text), "--out", str(tmp_path)]) == 0
    rows = {r["formula"]: r for r in read_rows(tmp_path / "closed_form.csv")}
    assert rows["relativistic_corrected"]["E"] == ""
    assert "single Gaussian" in rows["relativistic_corrected"]["note"]


def test_config_error_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, "schema_version: 1\ngroups:\n  phi: 1.0\n  epsilon: -0.01\n")
    assert cli.main(["closed-form", "--config", cfg]) == 2
    assert "line 4" in capsys.readouterr().err
    assert cli.main(["closed-form", "--config", str(tmp_path / "missing.yaml")]) == 2


def test_bad_thread_override(tmp_path):
    cfg = write(tmp_path, "schema_version: 1\n" + GROUPS)
    assert cli.main(["closed-form", "--config", cfg, "--threads", "0"]) == 2


def test_csv_is_deterministic(tmp_path):
    cfg = write(tmp_path, "schema_version: 1\n" + GROUPS + "formulas: [unified, oscillator_limit]\n")
    for name in ("a", "b"):
        cli.main(["closed-form", "--config", cfg, "--out", str(tmp_path / name)])
    for f in ("closed_form.csv", "regime.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    head = (tmp_path / "a" / "closed_form.csv").read_text().splitlines()[:3]
    assert head[0].startswith("# gravent") and head[1].startswith("# git ")
    blob = json.loads(head[2][len("# config "):])
    assert blob["groups"]["epsilon"] == 0.01 and "threads" not in blob and "output" not in blob


SIM = (
    "schema_version: 1\nmode: simulate\n"
    "groups: {phi: 1.0e-3, epsilon: 0.02, xi: 1.0, omegaT: 1.0}\n"
    "numerics: {final_points: 24, nodes: 20, oracle: expanded_second_order, split_steps: 20}\n"
)


def test_simulate_outputs(tmp_path, capsys):
    assert cli.main(["simulate", "--config", write(tmp_path, SIM), "--out", str(tmp_path / "s")]) == 0
    out = tmp_path / "s"
    report = json.loads((out / "report.json").read_text())["result"]
    assert abs(report["E_quadrature"] - report["E_schmidt"]) < 1e-8
    assert report["E_schmidt"] == pytest.approx(report["E_closed_form"], rel=2e-2)
    assert report["oracle"]["fidelity"] > 0.999
    assert len(report["schmidt_spectrum_head"]) == 8
    assert (out / "psi3.bin").stat().st_size == 56 + 16 * 24 * 24
    rows = read_rows(out / "marginals.csv")
    assert len(rows) == 24
    assert "fidelity" in capsys.readouterr().out


def test_simulate_tolerance_flag(tmp_path):
    text = SIM.replace("oracle: expanded_second_order, ", "")
    assert cli.main(["simulate", "--config", write(tmp_path, text), "--out", str(tmp_path), "--tolerance", "1e-6"]) == 0


SWEEP = (
    "schema_version: 1\nmode: sweep\n"
    "groups: {phi: 1.0e-3, epsilon: 0.02, xi: 0.0, omegaT: 1.0}\n"
    "sweep:\n  axes:\n    - {name: omegaT, min: 0.5, max: 2.0, count: 4}\n"
    "    - {name: xi, min: 0.0, max: 1.0, count: 2}\n"
    "  outputs: [unified, relativistic_corrected]\n"
)


def test_sweep_rows_and_order(tmp_path):
    assert cli.main(["sweep", "--config", write(tmp_path, SWEEP), "--out", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "sweep.csv")
    assert [(float(r["omegaT"]), float(r["xi"])) for r in rows] == [
        (t, x) for t in (0.5, 1.0, 1.5, 2.0) for x in (0.0, 1.0)
    ]
    assert all(math.isnan(float(r["relativistic_corrected"])) for r in rows if float(r["xi"]) > 0)


def test_sweep_resumes(tmp_path):
    cfg = write(tmp_path, SWEEP)
    cli.main(["sweep", "--config", cfg, "--out", str(tmp_path / "full")])
    full = (tmp_path / "full" / "sweep.csv").read_bytes()
    lines = full.split(b"\r\n")
    header_lines = 4
    partial = b"\r\n".join(lines[: header_lines + 3]) + b"\r\n" + lines[header_lines + 3][:7]
    (tmp_path / "part").mkdir()
    (tmp_path / "part" / "sweep.csv").write_bytes(partial)
    assert cli.main(["sweep", "--config", cfg, "--out", str(tmp_path / "part")]) == 0
    assert (tmp_path / "part" / "sweep.csv").read_bytes() == full


def test_sweep_refuses_foreign_file(tmp_path):
    (tmp_path / "sweep.csv").write_text("# something else\r\n")
    assert cli.main(["sweep", "--config", write(tmp_path, SWEEP), "--out", str(tmp_path)]) == 2


def test_sweep_threads_identical(tmp_path):
    cfg = write(tmp_path, SWEEP)
    cli.main(["sweep", "--config", cfg, "--out", str(tmp_path / "one"), "--threads", "1"])
    cli.main(["sweep", "--config", cfg, "--out", str(tmp_path / "four"), "--threads", "4"])
    assert (tmp_path / "one" / "sweep.csv").read_bytes() == (tmp_path / "four" / "sweep.csv").read_bytes()


def test_plot_f(tmp_path):
    assert cli.main(["plot-f", "--out", str(tmp_path)]) == 0
    with open(tmp_path / "f_functions.csv", newline="") as fh:
        rows = [r for r in csv.reader(l for l in fh if not l.startswith("#"))]
    assert rows[0] == ["x", "f0", "f2", "f4"]
    data = np.array(rows[1:], dtype=float)
    assert data[0].tolist() == [0.0, 1.0, 1.0, 1.0]
    assert data[-1, 0] == 5.0
    x, f4 = data[:, 0], data[:, 3]
    assert abs(x[np.argmin(f4)] - 2.2) <= 0.2
    tail = x >= 3.5
    for col in (1, 2, 3):
        assert np.all(np.diff(data[tail, col]) > 0)
        assert data[-1, col] < 1
    for v in f_functions(12.0):
        assert abs(v - 1) < 1e-6
    root = ET.parse(tmp_path / "f_functions.svg").getroot()
    assert len([e for e in root.iter() if e.tag.endswith("polyline")]) == 3


def test_verify_exit_codes(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(Verifier, "run", lambda self, numbers=None: [CriterionResult(numbers[0], "stub", True)])
    assert cli.main(["verify", "--criteria", "1", "2", "--out", str(tmp_path)]) == 0
    payload = json.loads((tmp_path / "verify.json").read_text())
    assert payload["passed"] and len(payload["criteria"]) == 2
    monkeypatch.setattr(Verifier, "run", lambda self, numbers=None: [CriterionResult(numbers[0], "stub", False)])
    assert cli.main(["verify", "--criteria", "1", "--out", str(tmp_path)]) == 1
    assert "[FAIL]" in capsys.readouterr().out
    assert cli.main(["verify", "--criteria", "11"]) == 2


def test_verify_real_fast_criteria(tmp_path):
    assert cli.main(["verify", "--criteria", "1", "2", "6", "8", "--out", str(tmp_path)]) == 0
