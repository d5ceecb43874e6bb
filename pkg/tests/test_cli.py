import json

import numpy as np
import pytest

from proxlab import StepSchedule, read_trace_csv, run_ppm
from proxlab.cli import main
from proxlab.traceio import CSV_HEADER, emit_trace_csv

from oracles import longest_run_below


def write_config(tmp_path, name, body):
    path = tmp_path / name
    path.write_text(json.dumps(body), encoding="utf-8")
    return str(path)


def test_run_ppm_benchmark_with_audit(tmp_path):
    cfg = write_config(tmp_path, "quad.json", {
        "problem": {"benchmark": "quad1d"},
        "schedule": {"constant": 1.0},
        "x0": [1.0],
        "max_iter": 12,
        "nu": 1.0,
        "test_mode": True,
        "estimate": True,
        "audit": True,
    })
    out = tmp_path / "out"
    assert main(["run-ppm", "--config", cfg, "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert all(a["status"] == "pass" for a in report["audit"])
    summary = json.loads((out / "summary.json").read_text())
    assert summary["bounds_ok"]
    rows = read_trace_csv(out / "trace.csv")
    assert rows.k == list(range(len(rows.k)))
    assert rows.cost_gap[-1] <= 1e-10  # stopped on the gap rule


def test_trace_csv_row_count_and_empty_columns(tmp_path, lasso_toy_ref):
    trace = run_ppm(lasso_toy_ref, np.zeros(2), StepSchedule.constant(0.16),
                    max_iter=3, stop_gap=0.0, stop_residual=0.0)
    path = tmp_path / "t.csv"
    emit_trace_csv(trace, path)
    text = path.read_text()
    lines = text.splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 1 + 4  # three iterations -> four data rows
    assert "\r" not in text
    parsed = read_trace_csv(path)
    assert parsed.dist == [None] * 4  # no solution oracle on the l1 problem
    assert parsed.cost_gap[0] is not None


def test_trace_csv_round_trip(tmp_path, quad1d):
    trace = run_ppm(quad1d, [1.0], StepSchedule.constant(1.0), max_iter=6,
                    stop_gap=0.0, stop_residual=0.0)
    path = tmp_path / "rt.csv"
    emit_trace_csv(trace, path)
    parsed = read_trace_csv(path)
    gaps = trace.gaps()
    dists = trace.dists()
    for k in range(len(trace)):
        assert abs(parsed.f[k] - trace.values[k]) <= 1e-15 * max(1.0, abs(trace.values[k]))
        assert abs(parsed.cost_gap[k] - gaps[k]) <= 1e-15
        assert abs(parsed.dist[k] - dists[k]) <= 1e-15


def test_lasso_config_produces_linear_decay(tmp_path):
    cfg = write_config(tmp_path, "lasso.json", {
        "problem": {"ml": "lasso",
                    "data": {"lasso": {"n": 10, "m": 40, "s": 5, "seed": 1}},
                    "params": {"lam": 10.0}},
        "schedule": {"constant": 0.16},
        "x0": "zeros",
        "max_iter": 50,
        "reference": {"effort": 500, "c": 1.0},
        "seed": 1,
    })
    out = tmp_path / "out"
    assert main(["run-ppm", "--config", cfg, "--out", str(out)]) == 0
    rows = read_trace_csv(out / "trace.csv")
    gaps = [g for g in rows.cost_gap if g is not None and g > 1e-11]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    ratios = [b / a for a, b in zip(gaps, gaps[1:])]
    assert longest_run_below(ratios, 0.999) >= 20


def test_determinism_byte_identical(tmp_path):
    cfg = write_config(tmp_path, "svm.json", {
        "problem": {"ml": "svm", "data": {"blobs": {"n": 40, "d": 3, "seed": 5}},
                    "params": {"svm_reg": 1.0}},
        "schedule": {"constant": 1.0},
        "max_iter": 20,
        "reference": {"effort": 200},
        "seed": 5,
    })
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["run-ippm", "--config", cfg, "--out", str(out1),
                 ]) == 1  # missing criterion: operational error, not a crash
    cfg2 = write_config(tmp_path, "svm2.json", {
        **json.loads((tmp_path / "svm.json").read_text()),
        "criterion": {"kind": "A'", "eps0": 0.05, "gamma": 0.6},
    })
    assert main(["run-ippm", "--config", cfg2, "--out", str(out1)]) == 0
    assert main(["run-ippm", "--config", cfg2, "--out", str(out2)]) == 0
    assert (out1 / "trace.csv").read_bytes() == (out2 / "trace.csv").read_bytes()


def test_seed_override_changes_data(tmp_path):
    body = {
        "problem": {"ml": "lasso", "data": {"lasso": {"n": 8, "m": 20, "s": 4}},
                    "params": {"lam": 5.0}},
        "schedule": {"constant": 0.2},
        "max_iter": 10,
        "reference": {"effort": 150},
        "seed": 1,
    }
    cfg = write_config(tmp_path, "seeded.json", body)
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    assert main(["run-ppm", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["run-ppm", "--config", cfg, "--out", str(out2), "--seed", "9"]) == 0
    assert (out1 / "trace.csv").read_bytes() != (out2 / "trace.csv").read_bytes()


def test_gd_exit_code_two_on_false_constants(tmp_path):
    cfg = write_config(tmp_path, "gd.json", {
        "problem": {"benchmark": "aniso_quad"},
        "gd": {"mu": 8.0, "beta": 1.0},  # claimed secant growth is far too strong
        "x0": [1.0, 1.0],
        "max_iter": 30,
        "test_mode": True,
    })
    assert main(["run-gd", "--config", cfg, "--out", str(tmp_path / "out")]) == 2


def test_gd_valid_constants_exit_zero(tmp_path):
    cfg = write_config(tmp_path, "gd_ok.json", {
        "problem": {"benchmark": "aniso_quad"},
        "gd": {"mu": 1.0, "beta": 1.0},
        "x0": [1.0, 1.0],
        "max_iter": 30,
        "test_mode": True,
    })
    assert main(["run-gd", "--config", cfg, "--out", str(tmp_path / "out")]) == 0


def test_config_errors_exit_one(tmp_path, capsys):
    cfg = write_config(tmp_path, "bad.json", {"problem": {"benchmark": "cubic"}})
    assert main(["run-ppm", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
    assert "problem.benchmark" in capsys.readouterr().err
    assert main(["run-ppm", "--config", str(tmp_path / "missing.json"),
                 "--out", str(tmp_path / "o")]) == 1
    cfg2 = write_config(tmp_path, "nosolver.json", {"problem": {"benchmark": "quad1d"}})
    assert main(["run-ippm", "--config", cfg2, "--out", str(tmp_path / "o")]) == 1


def test_estimate_and_audit_subcommands(tmp_path):
    cfg = write_config(tmp_path, "wc.json", {"problem": {"benchmark": "wc_piecewise"}})
    out = tmp_path / "audit"
    assert main(["audit", "--config", cfg, "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["constants"]["mu_q"]["value"] == pytest.approx(3.0, rel=0.05)
    assert {a["relation"]: a["status"] for a in report["audit"]}[
        "mu_r >= mu_q - rho/2"] == "pass"
    out2 = tmp_path / "estimate"
    assert main(["estimate", "--config", cfg, "--out", str(out2)]) == 0
    assert "audit" not in json.loads((out2 / "report.json").read_text())


def test_gen_data_lasso_and_blobs(tmp_path):
    cfg = write_config(tmp_path, "gen1.json",
                       {"gen": {"kind": "lasso", "n": 10, "m": 40, "s": 5, "seed": 1}})
    out = tmp_path / "g1"
    assert main(["gen-data", "--config", cfg, "--out", str(out)]) == 0
    archive = np.load(out / "data.npz")
    assert archive["A"].shape == (10, 40)
    assert np.linalg.norm(archive["y"] - archive["A"] @ archive["xhat"]) == 0.0
    cfg2 = write_config(tmp_path, "gen2.json",
                        {"gen": {"kind": "blobs", "n": 20, "d": 3, "seed": 2}})
    out2 = tmp_path / "g2"
    assert main(["gen-data", "--config", cfg2, "--out", str(out2)]) == 0
    from proxlab import load_libsvm
    assert load_libsvm(out2 / "data.libsvm").features.shape == (20, 3)


def test_svm_libsvm_config_path(tmp_path):
    data = tmp_path / "toy.libsvm"
    data.write_text("+1 1:1 2:0.5\n-1 1:-1 2:-0.5\n+1 1:0.8\n-1 2:-1\n",
                    encoding="utf-8")
    cfg = write_config(tmp_path, "svmfile.json", {
        "problem": {"ml": "svm", "data": {"libsvm": str(data)},
                    "params": {"svm_reg": 1.0}},
        "schedule": {"constant": 1.0},
        "max_iter": 15,
        "reference": {"effort": 150},
    })
    out = tmp_path / "outsvm"
    assert main(["run-ppm", "--config", cfg, "--out", str(out)]) == 0
    rows = read_trace_csv(out / "trace.csv")
    assert rows.cost_gap[-1] <= rows.cost_gap[0]
