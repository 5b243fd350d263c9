"""Tests for scenario loading and the command-line runner."""
import json
import subprocess
import sys
import textwrap

import pytest

from colombeau.cli import EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, main, run_scenario
from colombeau.scenario import ScenarioParseError, ScenarioValidationError, load_scenario

BASE = """\
domain: {dimension: 1, box: [[-4, 4]], points: 512}
ladder: {kmin: 2, kmax: 16}
objects:
  d: delta(0)
  s: net(sin(x/eps))
  g: net(exp(-x^2))
symbols:
  D: {expr: "i*xi", order: 1}
tasks:
  - {id: cs, type: classify, object: s, K: [-1, 1]}
  - {id: cg, type: classify, object: g, K: [-1, 1]}
  - {id: me, type: certify-symbol, symbol: D, checks: [micro_ellipticity]}
"""


def write(tmp_path, text, name="scen.yaml"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(text), encoding="utf-8")
    return p


def test_validate_ok(tmp_path, capsys):
    p = write(tmp_path, BASE)
    assert main(["validate", str(p)]) == EXIT_OK
    assert "3 tasks" in capsys.readouterr().out


def test_load_scenario_contents(tmp_path):
    s = load_scenario(write(tmp_path, BASE))
    assert [t["id"] for t in s.tasks] == ["cs", "cg", "me"]
    assert set(s.objects) == {"d", "s", "g"}


def test_run_writes_outputs(tmp_path):
    p = write(tmp_path, BASE)
    out = tmp_path / "out"
    assert main(["run", str(p), "--out", str(out)]) == EXIT_OK
    report = json.loads((out / "report.json").read_text(encoding="utf-8"))
    tasks = {t["id"]: t for t in report["tasks"]}
    assert tasks["cg"]["result"]["class"]["tag"] == "Regular"
    assert tasks["cs"]["result"]["class"]["tag"] == "Moderate"
    assert tasks["me"]["result"]["micro_ellipticity"]["pass"] is True
    assert (out / "fits.csv").read_text(encoding="utf-8").startswith("task,object,quantity")


def test_yaml_syntax_error_reports_position(tmp_path, capsys):
    p = write(tmp_path, "domain: {dimension: 1\nladder: [\n")
    assert main(["validate", str(p)]) == EXIT_PARSE
    err = capsys.readouterr().err
    assert f"{p}:" in err and ": error:" in err


def test_expression_error_line_and_column(tmp_path):
    bad = BASE.replace("net(exp(-x^2))", "net(exp(-x^^2))")
    with pytest.raises(ScenarioParseError) as info:
        load_scenario(write(tmp_path, bad))
    assert info.value.line == 6
    assert info.value.column > 1


def test_duplicate_key_is_parse_error(tmp_path):
    with pytest.raises(ScenarioParseError, match="duplicate"):
        load_scenario(write(tmp_path, BASE.replace("  g: net", "  d: net")))


@pytest.mark.parametrize(
    "old,new",
    [
        ("points: 512", "points: 512, colour: red"),
        ("{id: cg, type: classify", "{id: cg, type: transmogrify"),
        ("object: s, K", "object: missing, K"),
        ("{id: cg,", "{id: cs,"),
        ("kmin: 2, kmax: 16", "kmin: 2, kmax: 5"),
    ],
    ids=["unknown-key", "unknown-task", "unknown-object", "duplicate-id", "short-ladder"],
)
def test_validation_errors(tmp_path, capsys, old, new):
    p = write(tmp_path, BASE.replace(old, new))
    with pytest.raises(ScenarioValidationError):
        load_scenario(p)
    assert main(["validate", str(p)]) == EXIT_VALIDATION
    assert "invalid" in capsys.readouterr().err


def test_no_partial_writes_on_invalid(tmp_path):
    p = write(tmp_path, BASE.replace("object: s, K", "object: missing, K"))
    out = tmp_path / "out"
    assert main(["run", str(p), "--out", str(out)]) == EXIT_VALIDATION
    assert not out.exists()


def test_missing_file(tmp_path):
    assert main(["run", str(tmp_path / "nope.yaml")]) == EXIT_VALIDATION


def test_bad_thread_count(tmp_path, monkeypatch):
    monkeypatch.setenv("COLOMBEAU_THREADS", "zero")
    assert main(["validate", str(write(tmp_path, BASE))]) == EXIT_VALIDATION


def test_thread_count_does_not_change_results(tmp_path, monkeypatch):
    p = write(tmp_path, BASE)
    reports = []
    for n in ("1", "4"):
        monkeypatch.setenv("COLOMBEAU_THREADS", n)
        _, out, _ = run_scenario(p, tmp_path / f"t{n}", now="2000-01-01T00:00:00+00:00")
        reports.append(((out / "report.json").read_text(encoding="utf-8"), (out / "fits.csv").read_text(encoding="utf-8")))
    assert reports[0] == reports[1]


def test_explain(tmp_path, capsys):
    p = write(tmp_path, BASE)
    out = tmp_path / "out"
    main(["run", str(p), "--out", str(out)])
    capsys.readouterr()
    assert main(["explain", str(out / "report.json"), "cg"]) == EXIT_OK
    text = capsys.readouterr().out
    assert text.startswith("task cg (classify)") and "Regular" in text
    assert main(["explain", str(out / "report.json"), "zz"]) == EXIT_VALIDATION


def test_module_entry_point(tmp_path):
    p = write(tmp_path, BASE)
    proc = subprocess.run([sys.executable, "-m", "colombeau", "validate", str(p)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
