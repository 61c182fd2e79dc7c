import json
import math

import numpy as np
import pytest

from nhknot import cli


def run(args):
    return cli.main([str(a) for a in args])


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def test_usage_error_without_preset(tmp_path):
    assert run(["winding", "--out", tmp_path]) == cli.EXIT_USAGE


def test_usage_error_unknown_subcommand():
    with pytest.raises(SystemExit) as exc:
        run(["polish"])
    assert exc.value.code == cli.EXIT_USAGE


def test_usage_error_bad_config(tmp_path):
    bad = tmp_path / "cfg.json"
    bad.write_text("{not json")
    assert run(["winding", "--preset", "unknot", "--config", bad,
                "--out", tmp_path]) == cli.EXIT_USAGE


def test_numerical_error_exit_code(tmp_path):
    # a model whose bands touch is a numerical-feasibility failure
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": {
        "m": 0,
        "gamma0": [[0.0, 0.0], [0.0, 0.0]],
        "gamma1": [],
        "gamma2": [],
    }}))
    code = run(["bands", "--config", cfg, "--out", tmp_path])
    assert code == cli.EXIT_NUMERIC


def test_bands_outputs(tmp_path):
    assert run(["bands", "--preset", "hopf_link", "--grid", 128,
                "--out", tmp_path]) == cli.EXIT_OK
    label = read_json(tmp_path / "classification.json")
    assert label["nu"] == 2
    assert label["tag"] == "hopf_link"
    rows = (tmp_path / "bands.csv").read_text().strip().splitlines()
    assert rows[0] == "k,re_e1,im_e1,re_e2,im_e2"
    assert len(rows) == 129
    manifest = read_json(tmp_path / "manifest.json")
    assert manifest["command"] == "bands"
    assert manifest["version"] == cli.VERSION


def test_winding_output(tmp_path):
    assert run(["winding", "--preset", "unlink", "--out", tmp_path]) == cli.EXIT_OK
    data = read_json(tmp_path / "winding.json")
    assert data["nu"] == 0
    assert data["residue"] < 0.01


def test_berry_output(tmp_path):
    assert run(["berry", "--preset", "unknot", "--grid", 256,
                "--out", tmp_path]) == cli.EXIT_OK
    data = read_json(tmp_path / "berry.json")
    assert abs(abs(data["Q_raw_over_pi"]) - 1.0) < 1e-3
    assert data["parity"] == -1
    header = (tmp_path / "projections.csv").read_text().splitlines()[0]
    assert header == "k,band,sx,sy"


def test_evolve_fit(tmp_path):
    assert run(["evolve", "--preset", "hopf_link", "--out", tmp_path]) == cli.EXIT_OK
    fit = read_json(tmp_path / "fit.json")
    assert abs(fit["k_fit_over_pi"] - fit["k_true_over_pi"]) < 1e-4


def test_dilate_outputs(tmp_path):
    assert run(["dilate", "--preset", "hopf_link", "--out", tmp_path]) == cli.EXIT_OK
    report = read_json(tmp_path / "dilation.json")
    assert report["max_residuals"]["metric_hermiticity"] < 1e-10
    assert report["max_residuals"]["embedding_error"] < 1e-4
    assert report["max_residuals"]["metric_min_eig"] >= report["margin"] / 2
    header = (tmp_path / "pulses.csv").read_text().splitlines()[0]
    assert header.startswith("t_us,Omega1_MHz,phi1_rad,omega1_radperus")


def test_simulate_nv_outputs(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"t_final": 4.0, "n_time": 801}))
    assert run(["simulate-nv", "--preset", "hopf_link", "--config", cfg,
                "--out", tmp_path]) == cli.EXIT_OK
    header = (tmp_path / "nvsim.csv").read_text().splitlines()[0]
    assert header == "t,p1,p2,p3,p4,sx,sy,sz,c"
    summary = read_json(tmp_path / "nvsim.json")
    assert 0.0 <= summary["c_final"] <= 1.0


def test_tomo_output(tmp_path):
    assert run(["tomo", "--preset", "hopf_link", "--shots", 50_000,
                "--seed", 2, "--out", tmp_path]) == cli.EXIT_OK
    data = read_json(tmp_path / "tomo.json")
    assert data["fidelity"] > 0.99
    assert len(data["counts"]) == 9


def test_determinism_byte_identical(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert run(["berry", "--preset", "hopf_link", "--grid", 128,
                    "--seed", 7, "--out", out]) == cli.EXIT_OK
    for name in ("berry.json", "projections.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    m1 = read_json(out1 / "manifest.json")
    m2 = read_json(out2 / "manifest.json")
    m1.pop("duration_s"), m2.pop("duration_s")
    m1.pop("out_dir"), m2.pop("out_dir")
    assert m1 == m2


def test_pipeline_noiseless_small(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "preset": "unlink", "n_k": 8, "dephasing": "none", "ensemble": 1,
        "shots": 0, "gap_time": 6.0, "dt_target": 0.01}))
    assert run(["pipeline", "--config", cfg, "--seed", 3,
                "--out", tmp_path]) == cli.EXIT_OK
    report = read_json(tmp_path / "pipeline.json")
    assert report["n_failed"] == 0
    assert report["nu"] == 0
    assert abs(report["Q_abs_over_pi"]) < 0.01
    assert report["parity_reconstructed"] == 1
    assert report["fidelity_min"] > 0.99
