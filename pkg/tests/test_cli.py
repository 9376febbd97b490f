"""Command-line surface: exit codes, artifacts, determinism."""

import json
import os

import pytest

from heatlab import cli, reports


def run(tmp_path, command, cfg, extra=(), name="cfg.json"):
    cfg_path = tmp_path / name
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / "out"
    code = cli.main([command, "--config", str(cfg_path),
                     "--out", str(out), *extra])
    return code, out


TORUS_FIT_CFG = {
    "model": {"kind": "torus", "edge_lengths": [1.0, 1.0], "band_limit": 80},
    "operator": {"kind": "laplace"},
    "t_grid": {"start": 1e-4, "stop": 1e-2, "per_decade": 40},
    "fit": {"n_terms": 2, "window": [3e-4, 5e-3]},
    "expected": {"a0": 1.0, "a1": 0.0, "a2": 0.0},
    "tolerances": {"a0_abs": 1e-6, "a1_abs": 1e-6, "a2_abs": 1e-6},
}


def test_fit_flat_torus_closure(tmp_path):
    code, out = run(tmp_path, "fit", TORUS_FIT_CFG)
    assert code == 0
    env = json.loads((out / "fit.json").read_text())
    assert env["artifact_version"] == reports.ARTIFACT_VERSION
    assert env["config_hash"] == reports.config_hash(TORUS_FIT_CFG)
    fitted = env["report"]["fit"]["coefficients"]
    assert abs(fitted[0] - 1.0) < 1e-6
    assert abs(fitted[1]) < 1e-6 and abs(fitted[2]) < 1e-6


def test_fit_tolerance_gate_exits_3(tmp_path, capsys):
    cfg = dict(TORUS_FIT_CFG)
    cfg["expected"] = {"a0": 2.0}          # wrong on purpose
    code, out = run(tmp_path, "fit", cfg)
    assert code == cli.EXIT_TOLERANCE
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["exit_code"] == 3
    assert err["error"]["kind"] == "tolerance"
    # report was still written before the gate fired
    assert (out / "fit.json").exists()


def test_unknown_model_kind_exits_2(tmp_path, capsys):
    code, _ = run(tmp_path, "spectrum", {"model": {"kind": "klein_bottle"}})
    assert code == cli.EXIT_CONFIG
    assert json.loads(capsys.readouterr().err)["error"]["kind"] == "config_parse"


def test_invalid_json_exits_2(tmp_path, capsys):
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text("{not json")
    code = cli.main(["spectrum", "--config", str(cfg_path),
                     "--out", str(tmp_path / "out")])
    assert code == cli.EXIT_CONFIG
    capsys.readouterr()


def test_missing_config_exits_4(tmp_path, capsys):
    code = cli.main(["spectrum", "--config", str(tmp_path / "absent.json"),
                     "--out", str(tmp_path / "out")])
    assert code == cli.EXIT_IO
    assert json.loads(capsys.readouterr().err)["error"]["kind"] == "io"


def test_rejected_model_exits_5(tmp_path, capsys):
    code, _ = run(tmp_path, "spectrum",
                  {"model": {"kind": "circle", "circumference": -1.0}})
    assert code == cli.EXIT_VALIDATION
    assert json.loads(capsys.readouterr().err)["error"]["kind"] == "validation"


def test_schrodinger_needs_potential_exits_2(tmp_path, capsys):
    cfg = {"model": {"kind": "circle", "band_limit": 16},
           "operator": {"kind": "schrodinger"}}
    code, _ = run(tmp_path, "spectrum", cfg)
    assert code == cli.EXIT_CONFIG
    capsys.readouterr()


def test_bad_tolerance_flag_exits_2(tmp_path, capsys):
    code, _ = run(tmp_path, "spectrum",
                  {"model": {"kind": "circle", "band_limit": 8}},
                  extra=["--tolerance", "oops"])
    assert code == cli.EXIT_CONFIG
    capsys.readouterr()


def test_spectrum_artifacts(tmp_path):
    cfg = {"model": {"kind": "circle", "band_limit": 8},
           "operator": {"kind": "laplace"}}
    code, out = run(tmp_path, "spectrum", cfg)
    assert code == 0
    env = json.loads((out / "spectrum.json").read_text())
    s = env["report"]["spectrum"]
    assert s["n_eigenvalues"] == 17
    assert s["smallest"][:3] == [0.0, 1.0, 1.0]
    lines = (out / "spectrum.csv").read_text().splitlines()
    assert lines[0] == "k,eigenvalue,trusted"
    assert lines[1] == "0,0,true"


def test_classify_sawtooth_expected_verdict(tmp_path):
    cfg = {"model": {"kind": "circle", "band_limit": 256},
           "potential": {"builtin": "sawtooth"},
           "classify": {"expect": "not_h1_consistent"}}
    code, out = run(tmp_path, "classify", cfg)
    assert code == 0
    env = json.loads((out / "classify.json").read_text())
    assert env["report"]["classification"]["classification"] \
        == "not_h1_consistent"


def test_classify_expect_mismatch_exits_3(tmp_path, capsys):
    cfg = {"model": {"kind": "circle", "band_limit": 256},
           "potential": {"builtin": "sawtooth"},
           "classify": {"expect": "h1_consistent"}}
    code, _ = run(tmp_path, "classify", cfg)
    assert code == cli.EXIT_TOLERANCE
    capsys.readouterr()


def test_isospec_verdict_gate(tmp_path, capsys):
    base = {"model": {"kind": "torus", "edge_lengths": [1.0, 1.0],
                      "band_limit": 10},
            "operator": {"kind": "laplace"}}
    other = {"model": {"kind": "torus", "edge_lengths": [1.0, 1.0],
                       "band_limit": 14},
             "operator": {"kind": "laplace"}}
    cfg = {"first": base, "second": other, "expect_verdict": True}
    code, out = run(tmp_path, "isospec", cfg)
    assert code == 0
    env = json.loads((out / "isospec.json").read_text())
    assert env["report"]["verdict"] is True

    cfg_bad = {"first": base, "second": other, "expect_verdict": False}
    code, _ = run(tmp_path, "isospec", cfg_bad, name="cfg2.json")
    assert code == cli.EXIT_TOLERANCE
    capsys.readouterr()


def test_invariants_command(tmp_path):
    cfg = {"model": {"kind": "sphere", "radius": 1.0, "band_limit": 8}}
    code, out = run(tmp_path, "invariants", cfg)
    assert code == 0
    env = json.loads((out / "invariants.json").read_text())
    inv = env["report"]["invariants"]
    assert inv["method"] == "transport_recursion"
    assert abs(inv["a1"] - env["report"]["predicted"]["a1"]) < 1e-7


def test_weyl_command_artifacts(tmp_path):
    cfg = {"model": {"kind": "torus", "edge_lengths": [1.0, 1.0],
                     "band_limit": 40},
           "operator": {"kind": "laplace"},
           "weyl": {"t_sequence": {"start": 4e-4, "stop": 3e-3, "count": 5}},
           "tolerances": {"karamata_rel_gap": 0.05}}
    code, out = run(tmp_path, "weyl", cfg)
    assert code == 0
    for name in ("weyl.json", "weyl_counting.csv", "weyl_karamata.csv"):
        assert (out / name).exists()
    env = json.loads((out / "weyl.json").read_text())
    assert env["report"]["karamata"]["counting"][
        "rel_gap_at_smallest_trusted"] < 0.05


def test_seed_override_changes_hash_and_field(tmp_path):
    cfg = {"model": {"kind": "circle", "band_limit": 32},
           "operator": {"kind": "schrodinger", "n_basis": 32},
           "potential": {"builtin": "random_trig",
                         "params": {"n_terms": 3}},
           "seed": 1}
    code1, out1 = run(tmp_path, "spectrum", cfg)
    env1 = json.loads((out1 / "spectrum.json").read_text())

    tmp2 = tmp_path / "second"
    tmp2.mkdir()
    code2, out2 = run(tmp2, "spectrum", cfg, extra=["--seed", "7"])
    env2 = json.loads((out2 / "spectrum.json").read_text())
    assert code1 == code2 == 0
    assert env1["config_hash"] != env2["config_hash"]
    assert env2["config"]["seed"] == 7
    assert env2["report"]["rng"]["seed"] == 7
    assert env1["report"]["spectrum"]["smallest"] \
        != env2["report"]["spectrum"]["smallest"]


def test_threads_flag_is_byte_invariant(tmp_path):
    cfg = {"model": {"kind": "torus", "edge_lengths": [1.0, 1.0],
                     "band_limit": 40},
           "operator": {"kind": "laplace"},
           "t_grid": {"start": 1e-3, "stop": 1e-1, "per_decade": 20},
           "fit": {"n_terms": 2, "window": [1e-3, 1e-2]}}
    outs = []
    for i, threads in enumerate(("1", "2")):
        sub = tmp_path / f"run{i}"
        sub.mkdir()
        code, out = run(sub, "fit", cfg, extra=["--threads", threads])
        assert code == 0
        outs.append((out / "fit.json").read_bytes())
    assert outs[0] == outs[1]


def test_stdout_lists_written_paths(tmp_path, capsys):
    cfg = {"model": {"kind": "circle", "band_limit": 8}}
    code, out = run(tmp_path, "spectrum", cfg)
    assert code == 0
    stdout = capsys.readouterr().out.splitlines()
    assert str(out / "spectrum.json") in stdout
    assert str(out / "spectrum.csv") in stdout
