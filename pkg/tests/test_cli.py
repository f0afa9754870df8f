import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from g2kit import cli, models
from g2kit.exterior import form_to_json

GOLDEN = Path(__file__).parent / "golden" / "paper_examples.json"
PHI0_TEXT = "dx123 + dx145 + dx167 + dx246 - dx257 - dx347 - dx356"


def run(argv, capsys):
    code = cli.main(argv + ["--json"])
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_paper_examples_green_and_golden(capsys):
    code, doc = run(["paper-examples"], capsys)
    assert code == 0 and doc["pass"]
    assert json.loads(GOLDEN.read_text()) == doc["report"]


def test_paper_examples_targeted_failure():
    rep = cli.paper_examples(rho=-models.cylinder_rho())
    failed = [e["name"] for e in rep["examples"] if not e["pass"]]
    assert "twisted pair: omega ^ rho is nonzero" in failed
    assert all(e["pass"] for e in rep["examples"] if e["name"].startswith("twisted pair: (d/dx1"))


def test_options_are_echoed(capsys):
    code, doc = run(["tame-check", PHI0_TEXT, "--samples", "300", "--seed", "7"], capsys)
    assert code == 0
    assert doc["options"]["samples"] == 300 and doc["options"]["seed"] == 7
    assert doc["report"]["samples"] == 300 and doc["report"]["seed"] == 7


def test_config_presets_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"samples": 200, "seed": 3}))
    _, doc = run(["tame-check", PHI0_TEXT, "--config", str(cfg)], capsys)
    assert doc["options"]["samples"] == 200 and doc["options"]["seed"] == 3
    _, doc = run(["tame-check", PHI0_TEXT, "--config", str(cfg), "--seed", "5"], capsys)
    assert doc["options"]["seed"] == 5 and doc["options"]["samples"] == 200


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"sampels": 200}))
    code, _ = run(["paper-examples", "--config", str(cfg)], capsys)
    assert code == cli.EXIT_PARSE


def test_out_file(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert cli.main(["classify", "dx12 + dx34 + dx56", "--out", str(out)]) == 0
    assert "classify: PASS" in capsys.readouterr().out
    assert json.loads(out.read_text())["report"]["kind"] == "Stable2"


@pytest.mark.parametrize(
    "argv, code",
    [
        (["classify", "dx1 dx2"], cli.EXIT_PARSE),
        (["frobnicate"], cli.EXIT_PARSE),
        (["classify", "dx12", "--bogus"], cli.EXIT_PARSE),
        (["dual", "dx123 + dx456"], cli.EXIT_PRECONDITION),
        (["dual", "-dx1234 - dx1256 - dx3456"], cli.EXIT_PRECONDITION),
        (["metric", "dx12 + dx34", "--dim", "7"], cli.EXIT_PRECONDITION),
        (["tame-check", "-dx123 - dx145 - dx167 - dx246 + dx257 + dx347 + dx356", "--samples", "50"], cli.EXIT_NUMERIC),
        (["assoc-check", "1 0 0 0 0 0 0", "0 1 0 0 0 0 0", "0 0 0 1 0 0 0"], cli.EXIT_NUMERIC),
        (["assoc-check", "1 0 0 0 0 0 0", "0 1 0 0 0 0 0", "0 0 1 0 0 0 0"], cli.EXIT_OK),
        (["assoc-check", "1 0 0", "0 1 0 0 0 0 0", "0 0 1 0 0 0 0"], cli.EXIT_PARSE),
        (["su3-check", "dx135 + dx632 + dx254 + dx416", "dx63 + dx25 + dx41"], cli.EXIT_NUMERIC),
        (["su3-check", "dx135 - dx146 - dx236 - dx245", "dx12 + dx34 + dx56"], cli.EXIT_OK),
        (["g2pair-check", "dx135 + dx632 + dx254 + dx416", "dx63 + dx25 + dx41"], cli.EXIT_NUMERIC),
        (["g2pair-check", "dx135 - dx146 - dx236 - dx245", "dx1234 + dx1256 + dx3456"], cli.EXIT_OK),
        (["symbol-check", "--sweep", "20"], cli.EXIT_OK),
        (["volume-check", "--grid", "8", "--samples", "200"], cli.EXIT_OK),
    ],
)
def test_exit_codes(argv, code, capsys):
    assert cli.main(argv) == code
    capsys.readouterr()


def test_classify_reports_witness(capsys):
    code, doc = run(["classify", "dx12 + dx34"], capsys)
    assert code == 0 and doc["report"]["kind"] == "Degenerate"
    assert doc["report"]["witness"] == [0.0, 0.0, 0.0, 0.0, 1.0, 0.0]


def test_dual_renders_imaginary_part(capsys):
    _, doc = run(["dual", "dx135 - dx146 - dx236 - dx245"], capsys)
    assert doc["report"]["dual_text"] == "dx136 + dx145 + dx235 - dx246"


def test_form_from_file(tmp_path, capsys):
    path = tmp_path / "phi.json"
    path.write_text(json.dumps(form_to_json(models.phi0())))
    code, doc = run(["metric", "@" + str(path)], capsys)
    assert code == 0 and doc["report"]["orientation"] == 1


def test_sl_residual_files(tmp_path, capsys):
    pair = tmp_path / "pair.json"
    pair.write_text(json.dumps({"rho": "dx135 - dx146 - dx236 - dx245", "tau": "dx1234 + dx1256 + dx3456"}))
    patch = tmp_path / "patch.json"
    patch.write_text(json.dumps({"frame": [[0, -1, 0, 0, 0, 0], [0, 0, 0, 1, 0, 0], [0, 0, 0, 0, 0, 1]], "m": 7}))
    lam = tmp_path / "lam.json"
    lam.write_text(json.dumps({"constant": 0.3}))
    args = ["sl-residual", "--pair", str(pair), "--patch", str(patch), "--lambda", str(lam)]
    code, doc = run(args, capsys)
    assert code == 0 and doc["report"]["r2_max"] == 0.0
    lam.write_text(json.dumps({"linear": [0.2, 0.0, 0.0]}))
    code, doc = run(args, capsys)
    assert code == cli.EXIT_NUMERIC and doc["report"]["equivalence"]["pass"]


def test_sl_residual_precondition(tmp_path, capsys):
    patch = tmp_path / "patch.json"
    patch.write_text(json.dumps({"frame": [[1, 0, 0, 0, 0, 0], [0, 0, 1, 0, 0, 0], [0, 0, 0, 0, 1, 0]]}))
    code, _ = run(["sl-residual", "--patch", str(patch)], capsys)
    assert code == cli.EXIT_PRECONDITION


def test_solve_graph_with_files(tmp_path, capsys):
    beta = tmp_path / "beta.json"
    from g2kit.associator_pde import closed_perturbation

    beta.write_text(json.dumps(form_to_json(closed_perturbation(0.01).beta)))
    trace = tmp_path / "trace.json"
    state = tmp_path / "state.json"
    boundary = tmp_path / "b.json"
    boundary.write_text(json.dumps({"linear": [[0, 0, 0]] * 4}))
    code, doc = run(
        ["solve-graph", "--beta", str(beta), "--grid", "8", "--boundary", str(boundary),
         "--trace", str(trace), "--state-out", str(state), "--tol", "1e-9"],
        capsys,
    )
    assert code == 0 and doc["report"]["converged"]
    assert json.loads(trace.read_text())[0]["iter"] == 0
    assert json.loads(state.read_text())["m"] == 8


def _cli_json(args, threads):
    env = dict(os.environ)
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        env[var] = str(threads)
    proc = subprocess.run(
        [sys.executable, "-m", "g2kit", *args, "--json"], env=env, capture_output=True, check=False
    )
    return proc.returncode, proc.stdout


DETERMINISM_COMMANDS = [
    ["tame-check", PHI0_TEXT + " + 0.01*dx123", "--samples", "2000", "--seed", "4"],
    ["symbol-check", "--sweep", "50", "--seed", "2"],
    ["solve-graph", "--grid", "9", "--seed", "1"],
]


@pytest.mark.parametrize("args", DETERMINISM_COMMANDS, ids=lambda a: a[0])
def test_byte_identical_across_thread_counts(args):
    c1, out1 = _cli_json(args, 1)
    c4, out4 = _cli_json(args, 4)
    c1b, out1b = _cli_json(args, 1)
    assert c1 == c4 == c1b == 0
    assert out1 == out4 == out1b
