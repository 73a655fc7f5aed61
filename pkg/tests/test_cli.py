"""End-to-end runs of the experiment CLI."""

import json
import math

import pytest

from szegolab.cli import (
    CSV_HEADER,
    ConfigError,
    emit_report,
    main,
    run_experiment,
    validate_config,
)
from szegolab.szego import ReportRow, SzegoReport


def write_config(tmp_path, name, cfg):
    path = tmp_path / name
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return str(path)


def ratio_config(tmp_path, **overrides):
    cfg = {
        "experiment": "szego-ratio",
        "symbol": {"0": [2.0, 0.0], "1": [0.5, 0.0], "-1": [0.5, 0.0]},
        "n_range": {"kind": "geometric", "start": 4, "stop": 128},
        "output": str(tmp_path / "out" / "ratio"),
        "tolerance": 1e-6,
    }
    cfg.update(overrides)
    return cfg


def test_szego_ratio_run_and_artifacts(tmp_path):
    cfg_path = write_config(tmp_path, "cfg.json", ratio_config(tmp_path))
    assert main(["run", cfg_path]) == 0
    csv_text = (tmp_path / "out" / "ratio.csv").read_text()
    lines = csv_text.splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 7  # header + 6 geometric sizes
    assert csv_text.endswith("\n") and "\r" not in csv_text
    predicted_cols = {tuple(l.split(",")[3:5]) for l in lines[1:]}
    assert len(predicted_cols) == 1  # predicted constant replicated per row
    summary = json.loads((tmp_path / "out" / "ratio.json").read_text())
    assert summary["verdict"] == "pass"
    assert summary["predicted"][0] == pytest.approx((2 + math.sqrt(3)) / 2, abs=1e-10)


def test_run_is_byte_deterministic(tmp_path):
    cfg_path = write_config(tmp_path, "cfg.json", ratio_config(tmp_path))
    assert main(["run", cfg_path]) == 0
    first_csv = (tmp_path / "out" / "ratio.csv").read_bytes()
    first_json = (tmp_path / "out" / "ratio.json").read_bytes()
    assert main(["run", cfg_path]) == 0
    assert (tmp_path / "out" / "ratio.csv").read_bytes() == first_csv
    assert (tmp_path / "out" / "ratio.json").read_bytes() == first_json


def test_validate_subcommand(tmp_path, capsys):
    cfg_path = write_config(tmp_path, "cfg.json", ratio_config(tmp_path))
    assert main(["validate", cfg_path]) == 0
    assert "ok" in capsys.readouterr().out


def test_invalid_config_missing_n_range(tmp_path):
    cfg = ratio_config(tmp_path)
    del cfg["n_range"]
    cfg_path = write_config(tmp_path, "cfg.json", cfg)
    assert main(["run", cfg_path]) == 2
    assert not (tmp_path / "out").exists()  # no artifacts on config failure


def test_invalid_configs_field_paths(tmp_path):
    bad = [
        ({"experiment": "nope", "output": "x"}, "experiment"),
        ({"experiment": "szego-ratio", "output": ""}, "output"),
        (ratio_config(tmp_path, tolerance=-1.0), "tolerance"),
        (ratio_config(tmp_path, n_range=[4, 4, 8]), "n_range"),
    ]
    for cfg, field in bad:
        with pytest.raises(ConfigError) as exc:
            validate_config(cfg)
        assert field in str(exc.value)


def test_failing_tolerance_exit_code(tmp_path):
    cfg_path = write_config(
        tmp_path, "cfg.json", ratio_config(tmp_path, tolerance=1e-30)
    )
    assert main(["run", cfg_path]) == 1


def test_numeric_error_exit_code(tmp_path, capsys):
    cfg = ratio_config(tmp_path, symbol={"1": [1.0, 0.0]})  # winding 1: no log branch
    cfg_path = write_config(tmp_path, "cfg.json", cfg)
    assert main(["run", cfg_path]) == 1
    assert "numeric failure" in capsys.readouterr().err


def test_list_experiments(capsys):
    assert main(["list-experiments"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert "szego-ratio" in out and "cf-expand" in out and len(out) == 8


def test_cf_expand_rational(tmp_path):
    cfg = {
        "experiment": "cf-expand",
        "alpha": 0.4,
        "output": str(tmp_path / "cf"),
    }
    cfg_path = write_config(tmp_path, "cfg.json", cfg)
    assert main(["run", cfg_path]) == 0
    lines = (tmp_path / "cf.csv").read_text().splitlines()
    assert lines[0] == "n,b_n,p_n,q_n,error_bound"
    assert lines[1].startswith("1,2,1,2,")
    assert lines[2].startswith("2,2,2,5,")
    summary = json.loads((tmp_path / "cf.json").read_text())
    assert summary["terminated"] == "rational"
    assert summary["verdict"] == "pass"


def test_strong_szego_run(tmp_path):
    cfg = {
        "experiment": "strong-szego",
        "symbol": {"0": [2.0, 0.0], "1": [0.5, 0.0], "-1": [0.5, 0.0]},
        "n_range": [8, 16, 32, 64],
        "output": str(tmp_path / "ss"),
        "tolerance": 1e-8,
    }
    assert run_experiment(cfg) == 0
    summary = json.loads((tmp_path / "ss.json").read_text())
    assert summary["verdict"] == "pass"
    assert summary["tail_bound"] <= 1e-12


def test_eigen_dist_run(tmp_path):
    cfg = {
        "experiment": "eigen-dist",
        "operator": {"kind": "toeplitz", "symbol": {"1": [1.0, 0.0], "-1": [1.0, 0.0]}},
        "g": {"kind": "poly", "coeffs": [0.0, 0.0, 1.0]},
        "n_range": [16, 64],
        "output": str(tmp_path / "eig"),
        "tolerance": 0.05,
    }
    assert run_experiment(cfg) == 0
    summary = json.loads((tmp_path / "eig.json").read_text())
    assert summary["predicted"][0] == pytest.approx(2.0, abs=1e-10)


def test_mathieu_dist_run_distinguished(tmp_path):
    golden = (math.sqrt(5) - 1) / 2
    cfg = {
        "experiment": "mathieu-dist",
        "alpha": golden,
        "lambda": 1.0,
        "theta": 0.3,
        "g": {"kind": "poly", "coeffs": [0.0, 0.0, 1.0]},
        "distinguished": {"length": 10},
        "predicted": [2.5, 0.0],
        "output": str(tmp_path / "am"),
        "tolerance": 0.05,
    }
    assert run_experiment(cfg) == 0
    lines = (tmp_path / "am.csv").read_text().splitlines()
    assert [int(l.split(",")[0]) for l in lines[1:]] == [1, 2, 3, 5, 8, 13, 21, 34, 55, 89]
    summary = json.loads((tmp_path / "am.json").read_text())
    assert summary["sequence_source"] == "cf-denominators"


def test_singular_dist_run(tmp_path):
    cfg = {
        "experiment": "singular-dist",
        "symbol": {"0": [1.0, 0.0], "1": [1.0, 0.0]},
        "g": {"kind": "power", "k": 4},
        "n_range": [16, 64],
        "output": str(tmp_path / "sv"),
        "tolerance": 0.1,
    }
    assert run_experiment(cfg) == 0
    summary = json.loads((tmp_path / "sv.json").read_text())
    assert summary["predicted"][0] == pytest.approx(6.0, abs=1e-6)


def test_folner_run(tmp_path):
    cfg = {
        "experiment": "folner",
        "operator": {
            "kind": "composite",
            "products": [
                [
                    {"kind": "toeplitz", "symbol": {"-1": [1.0, 0.0]}},
                    {"kind": "toeplitz", "symbol": {"1": [1.0, 0.0]}},
                ]
            ],
        },
        "n_range": [8, 64],
        "output": str(tmp_path / "fol"),
        "tolerance": 0.2,
    }
    assert run_experiment(cfg) == 0
    summary = json.loads((tmp_path / "fol.json").read_text())
    assert summary["final_residual"] == pytest.approx(1 / 64, abs=1e-12)


def test_stability_run(tmp_path):
    cfg = {
        "experiment": "stability",
        "operator": {
            "kind": "toeplitz",
            "symbol": {"0": [2.0, 0.0], "1": [0.5, 0.0], "-1": [0.5, 0.0]},
        },
        "n_range": [4, 8, 16, 32, 64],
        "output": str(tmp_path / "stab"),
    }
    assert run_experiment(cfg) == 0
    summary = json.loads((tmp_path / "stab.json").read_text())
    assert summary["verdict"] == "stability-consistent"


def test_emit_report_contract(tmp_path):
    row = ReportRow(4, 1.5 + 0.5j, 1.5, 0.5)
    report = SzegoReport((row,), 1.5, 1.5 + 0.5j)
    path = tmp_path / "r.csv"
    emit_report([report], path)
    lines = path.read_text().splitlines()
    assert len(lines) == 2
    assert lines[0] == CSV_HEADER
    first = path.read_bytes()
    emit_report([report], path)
    assert path.read_bytes() == first
    with pytest.raises(ValueError):
        emit_report([], tmp_path / "empty.csv")
