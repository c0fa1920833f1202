import json

import numpy as np
import pytest

from dppproj import cli
from dppproj.patterns import PointPattern
from dppproj.summaries import SummaryCurve


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(path)


SAMPLE = {"schema": 1, "kernel": {"family": "dirichlet", "d": 3, "N": 27}, "replications": 2}


def test_sample_writes_patterns_and_manifest(tmp_path):
    cfg = write(tmp_path, "s.json", SAMPLE)
    assert cli.main(["sample", cfg, "--out", str(tmp_path / "o"), "--seed", "3"]) == 0
    p = PointPattern.read_csv(tmp_path / "o" / "pattern_0000.csv")
    assert p.count == 27 and p.iota == 3
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["command"] == "sample" and manifest["seed"] == 3 and manifest["config"] == SAMPLE


def test_replay_reproduces_bytes(tmp_path):
    cfg = write(tmp_path, "s.json", SAMPLE)
    cli.main(["sample", cfg, "--out", str(tmp_path / "a")])
    assert cli.main(["replay", str(tmp_path / "a" / "manifest.json"), "--out", str(tmp_path / "b")]) == 0
    for name in ("pattern_0000.csv", "pattern_0001.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_bad_json_reports_position(tmp_path, capsys):
    cfg = write(tmp_path, "bad.json", '{"schema": 1,\n "kernel": }')
    assert cli.main(["sample", cfg]) == 2
    assert "line 2" in capsys.readouterr().err


def test_unknown_key_and_schema(tmp_path, capsys):
    assert cli.main(["sample", write(tmp_path, "u.json", {**SAMPLE, "colour": 1})]) == 2
    assert "colour" in capsys.readouterr().err
    assert cli.main(["sample", write(tmp_path, "v.json", {**SAMPLE, "schema": 2})]) == 2


def test_invalid_kernel_exits_2(tmp_path):
    cfg = {"schema": 1, "kernel": {"family": "gaussian", "d": 2, "rho": 500, "alpha": 1.0}}
    assert cli.main(["sample", write(tmp_path, "k.json", cfg), "--out", str(tmp_path)]) == 2


def test_budget_exit_code(tmp_path):
    cfg = {"schema": 1, "kernel": {"family": "gaussian", "d": 6, "rho": 100000, "alpha": "boundary"}, "delta": 1e-15}
    assert cli.main(["sample", write(tmp_path, "b.json", cfg), "--out", str(tmp_path / "o")]) == 3


def test_io_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["sample", write(tmp_path, "s.json", SAMPLE), "--out", str(blocker / "sub")]) == 4
    assert cli.main(["sample", str(tmp_path / "missing.json")]) == 4


def test_help_lists_keys(capsys):
    for command, keys in (("sample", cli.SAMPLE_KEYS), ("curves", cli.CURVE_KEYS), ("experiment", cli.EXPERIMENT_KEYS)):
        with pytest.raises(SystemExit):
            cli.main([command, "--help"])
        text = capsys.readouterr().out
        assert all(k in text for k in keys)


def test_factorize(capsys):
    assert cli.main(["factorize", "500", "6"]) == 0
    assert json.loads(capsys.readouterr().out) == [5, 5, 5, 2, 2, 1]


def test_curves_pcf_and_svg(tmp_path):
    cfg = {
        "schema": 1,
        "kernel": {"family": "gaussian", "d": 4, "rho": 200, "alpha": "boundary"},
        "stat": "pcf",
        "iota_list": [4, 2],
        "r_grid": [0.01, 0.05, 0.2],
    }
    assert cli.main(["curves", write(tmp_path, "c.json", cfg), "--out", str(tmp_path / "o"), "--svg"]) == 0
    full = SummaryCurve.from_csv((tmp_path / "o" / "pcf_analytic_00.csv").read_text())
    assert full.meta["I"] == [0, 1, 2, 3]
    assert np.all((full.values >= 0) & (full.values <= 1))
    assert (tmp_path / "o" / "pcf_analytic.svg").read_text().startswith("<svg")


def test_dirichlet_pcf_needs_subsets(tmp_path, capsys):
    cfg = {"schema": 1, "kernel": {"family": "dirichlet", "d": 6, "N": 100}, "stat": "pcf", "iota_list": [3]}
    assert cli.main(["curves", write(tmp_path, "c.json", cfg), "--out", str(tmp_path)]) == 2
    assert "subsets" in capsys.readouterr().err
    cfg["subsets"] = [[0, 1, 2]]
    del cfg["iota_list"]
    assert cli.main(["curves", write(tmp_path, "d.json", cfg), "--out", str(tmp_path / "o")]) == 0


def test_envelope_curves(tmp_path):
    cfg = {
        "schema": 1,
        "kernel": {"family": "dirichlet", "d": 4, "N": 16},
        "stat": "ripley",
        "mode": "envelope",
        "iota_list": [2],
        "r_grid": {"start": 0.01, "stop": 0.1, "num": 5},
        "center": "median",
    }
    assert cli.main(["curves", write(tmp_path, "e.json", cfg), "--out", str(tmp_path / "o")]) == 0
    c = SummaryCurve.from_csv((tmp_path / "o" / "ripley_envelope_00.csv").read_text())
    assert c.meta["subsets"] == 6
    assert np.all(c.band_lo <= c.values) and np.all(c.values <= c.band_hi)


def test_experiment_smoke(tmp_path):
    cfg = {"schema": 1, "d": 2, "rho_list": [16], "iota_list": [2, 1], "replications": 3}
    assert cli.main(["experiment", write(tmp_path, "x.json", cfg), "--out", str(tmp_path / "o")]) == 0
    lines = (tmp_path / "o" / "experiment.csv").read_text().splitlines()
    assert lines[0].startswith("model,rho,iota") and len(lines) == 7
    summary = json.loads((tmp_path / "o" / "experiment.json").read_text())
    assert summary["config"]["replications"] == 3
