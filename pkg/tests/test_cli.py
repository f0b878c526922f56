import io
import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from nlmarkov.cli import RunManifest, execute, main, run
from nlmarkov.errors import UsageError
from nlmarkov.kernelfile import load_spec

HERE = Path(__file__).parent
GOLDEN = HERE / "golden"
REGEN = os.environ.get("NLMARKOV_REGEN_GOLDEN") == "1"

CASES = {
    "analyze_example2.csv": ["analyze", "--builtin", "example2", "--gamma", "0.4"],
    "analyze_example1.json": ["analyze", "--builtin", "example1", "--gamma", "0.2",
                              "--format", "json"],
    "audit_example2.csv": ["audit", "--builtin", "example2", "--gamma", "0.4", "--steps", "40"],
    "invariant_example2.json": ["invariant", "--builtin", "example2", "--format", "json"],
    "iterate_example2.csv": ["iterate", "--builtin", "example2", "--steps", "5"],
    "simulate_small.csv": ["simulate", "--builtin", "example2", "--particles", "50,200",
                           "--replicas", "3", "--steps", "5", "--seed", "42"],
    "validate_bad.csv": ["validate", "--spec", "data/bad_rowsum.json"],
    "examples.csv": ["examples"],
}


def _run(argv, cwd=HERE):
    out, err = io.StringIO(), io.StringIO()
    old = os.getcwd()
    os.chdir(cwd)
    try:
        from nlmarkov.cli import build_parser, manifest_from_args
        manifest = manifest_from_args(build_parser().parse_args(argv))
        code = run(manifest, stdout=out, stderr=err)
    finally:
        os.chdir(old)
    return code, out.getvalue(), err.getvalue()


def _cli(*argv):
    """Run through ``main`` so argument errors surface as exit statuses."""
    old = os.getcwd()
    os.chdir(HERE)
    try:
        return main(list(argv))
    except SystemExit as exc:
        return exc.code
    finally:
        os.chdir(old)


@pytest.mark.parametrize("name", sorted(CASES))
def test_golden(name):
    code, text, _ = _run(CASES[name])
    path = GOLDEN / name
    if REGEN:
        path.write_text(text)
    assert code == (3 if name.startswith("validate") else 0)
    assert text == path.read_text()


def test_identical_manifests_identical_output():
    argv = ["simulate", "--builtin", "example2", "--particles", "100", "--replicas", "2"]
    assert _run(argv)[1] == _run(argv)[1]


def test_csv_schema():
    _, text, _ = _run(CASES["audit_example2.csv"])
    body = [l for l in text.splitlines() if not l.startswith("#")]
    assert body[0] == "n,observed,bound,slack,satisfied"
    assert len(body) == 42 and all(l.endswith(",true") for l in body[1:])
    _, text, _ = _run(CASES["simulate_small.csv"])
    assert "N,steps,mean_tv,std_tv,replicas,seed" in text.splitlines()


def test_header_echoes_manifest_and_seeds():
    _, text, _ = _run(["simulate", "--builtin", "example2", "--particles", "20",
                       "--replicas", "1", "--seed", "7", "--format", "json"])
    doc = json.loads(text)
    assert doc["tool"] == "nlmarkov" and doc["version"]
    assert doc["manifest"]["seed"] == 7 and doc["manifest"]["gamma"] == 0.4
    assert doc["seeds"]["master"] == 7


def test_analyze_report_contents():
    _, text, _ = _run(["analyze", "--builtin", "example2", "--gamma", "0.4", "--format", "json"])
    doc = json.loads(text)
    rows = {(r["steps"], r["coefficient"]): r for r in doc["rows"]}
    assert rows[1, "alpha"]["upper"] == 0.0 and rows[1, "lambda"]["lower"] == 0.4
    assert rows[2, "alpha"]["lower"] <= 0.5 <= rows[2, "alpha"]["upper"]
    assert rows[2, "lambda"]["lower"] <= 0.2 <= rows[2, "lambda"]["upper"]
    assert {rows[2, "alpha"]["witness_x"], rows[2, "alpha"]["witness_y"]} == {3, 4}
    assert doc["summary"]["guarantee"] == "two-step exponential"


def test_discrepancy_note():
    _, text, _ = _run(["analyze", "--builtin", "example1", "--gamma", "0.2", "--steps", "1"])
    notes = [l for l in text.splitlines() if l.startswith("# note:")]
    assert any("DISCREPANCY" in n and "lambda = gamma" in n and "[0.4, 0.4]" in n for n in notes)
    assert not any("DISCREPANCY" in n and "alpha" in n for n in notes)


class TestExitCodes:
    def test_gamma_out_of_range(self):
        assert _cli("analyze", "--builtin", "example1", "--gamma", "0.3") == 2

    def test_conflicting_sources(self):
        assert _cli("analyze", "--builtin", "example1", "--spec", "data/flip.json") == 2

    def test_no_kernel(self):
        assert _cli("invariant") == 2

    def test_unknown_choice(self):
        assert _cli("analyze", "--builtin", "example3") == 2

    def test_gamma_without_builtin(self):
        assert _cli("iterate", "--spec", "data/flip.json", "--gamma", "0.1") == 2

    def test_validation_failure(self):
        assert _cli("analyze", "--spec", "data/bad_rowsum.json") == 3

    def test_syntax_error(self, capsys):
        assert _cli("validate", "--spec", "data/broken.json") == 3
        assert "line 3" in capsys.readouterr().err

    def test_hypothesis_failure(self):
        assert _cli("audit", "--spec", "data/flip.json", "--steps", "4") == 4

    def test_non_convergence(self):
        assert _cli("invariant", "--spec", "data/flip.json", "--starts", "vertices",
                    "--max-iters", "20") == 5

    def test_missing_file(self):
        assert _cli("validate", "--spec", "data/missing.json") == 6

    def test_unwritable_out(self, tmp_path):
        assert _cli("iterate", "--builtin", "example2", "--out",
                    str(tmp_path / "no" / "such" / "dir.csv")) == 6

    def test_bad_initial_law(self):
        assert _cli("iterate", "--builtin", "example2", "--mu0", "0.5,0.6,0,0") == 2


def test_examples_writes_loadable_specs(tmp_path):
    code, _, _ = _run(["examples", "--out", str(tmp_path)])
    assert code == 0
    k = load_spec(tmp_path / "example2.json")
    assert k.name == "example2(gamma=0.4)"
    assert (tmp_path / "index.csv").read_text().startswith("# tool: nlmarkov")
    code, _, _ = _run(["validate", "--spec", str(tmp_path / "example1.json")])
    assert code == 0


def test_out_file(tmp_path):
    target = tmp_path / "traj.csv"
    code, text, _ = _run(["iterate", "--builtin", "example2", "--steps", "3", "--out", str(target)])
    assert code == 0 and text == ""
    assert target.read_text().splitlines()[-1].startswith("3,")


def test_starts_file(tmp_path):
    p = tmp_path / "starts.json"
    p.write_text("[[1, 0, 0, 0], [0, 0, 0, 1]]")
    code, text, _ = _run(["invariant", "--builtin", "example2", "--starts", "file",
                          "--starts-file", str(p), "--format", "json"])
    assert code == 0 and json.loads(text)["summary"]["starts"] == 2


def test_manifest_validation():
    with pytest.raises(UsageError):
        RunManifest(command="simulate", builtin="example2", replicas=0)
    with pytest.raises(UsageError):
        RunManifest(command="nope")
    status, text = execute(RunManifest(command="iterate", builtin="example2", steps=1))
    assert status == 0 and text.splitlines()[-1].startswith("1,")


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "nlmarkov.cli", "--version"],
                         capture_output=True, text=True, check=True)
    assert res.stdout.startswith("nlmarkov ")
