import csv
import json
import math

import numpy as np

from hazrank import SurvivalDataset, build_risk_sets, cox_fit, cox_partial_loglik
from hazrank.baseline import nelson_aalen
from hazrank.cli import main
from hazrank.cox import rankings_to_pseudotimes
from hazrank.io import read_dataset, write_utility_csv

SIM = {
    "simulate": {
        "n": 300,
        "beta_true": [1.0, -0.5],
        "covariates": [{"kind": "bernoulli", "p": 0.5}, {"kind": "gaussian"}],
        "law": {"kind": "weibull", "shape": 1.5},
        "seed": 3,
    }
}


def _write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def _json_out(capsys):
    return json.loads(capsys.readouterr().out)


def test_simulate_is_byte_identical(tmp_path):
    cfg = _write(tmp_path / "c.json", SIM)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "a.csv")]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "b.csv")]) == 0
    a, b = (tmp_path / "a.csv").read_bytes(), (tmp_path / "b.csv").read_bytes()
    assert a == b
    rows = list(csv.reader(a.decode().splitlines()))
    assert len(rows) == 301 and all(len(r) == 3 for r in rows)


def test_seed_flag_overrides(tmp_path):
    cfg = _write(tmp_path / "c.json", SIM)
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "a.csv")])
    main(["simulate", "--config", cfg, "--seed", "4", "--out", str(tmp_path / "b.csv")])
    assert (tmp_path / "a.csv").read_bytes() != (tmp_path / "b.csv").read_bytes()


def test_bad_mixture_weights(tmp_path, capsys):
    doc = json.loads(json.dumps(SIM))
    doc["simulate"]["law"] = {
        "kind": "mixture",
        "components": [
            {"weight": 0.5, "law": {"kind": "lognormal"}},
            {"weight": 0.6, "law": {"kind": "lognormal", "mu": 1.0}},
        ],
    }
    code = main(["simulate", "--config", _write(tmp_path / "c.json", doc), "--out", str(tmp_path / "a.csv")])
    assert code == 2
    assert "weights" in capsys.readouterr().err


def test_unknown_config_key(tmp_path, capsys):
    doc = json.loads(json.dumps(SIM))
    doc["simulate"]["bogus"] = 1
    code = main(["simulate", "--config", _write(tmp_path / "c.json", doc), "--out", str(tmp_path / "a.csv")])
    assert code == 2
    assert "bogus" in capsys.readouterr().err


def test_fit_loglik_cross_check(tmp_path, capsys):
    ds = SurvivalDataset(np.array([[0.3], [-1.0], [0.8]]), [1.0, 2.5, 4.0])
    path = tmp_path / "u.csv"
    write_utility_csv(path, ds)
    assert main(["fit", str(path)]) == 0
    rep = _json_out(capsys)
    ll = cox_partial_loglik(ds.X, np.array(rep["beta"]), build_risk_sets(ds))
    assert abs(rep["log_likelihood"] - ll) <= 1e-12


def test_zero_utility_rejected(tmp_path):
    path = tmp_path / "u.csv"
    path.write_text("utility,x0\n1.0,0.5\n0,1.0\n2.0,0.1\n")
    assert main(["fit", str(path)]) == 2


def test_ranking_fit_matches_pseudotime_cox(tmp_path, capsys):
    doc = json.loads(json.dumps(SIM))
    doc["simulate"]["group_size"] = 2
    doc["simulate"]["n"] = 600
    cfg = _write(tmp_path / "c.json", doc)
    out = tmp_path / "r.csv"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    assert main(["fit", str(out), "--check-equivalence"]) == 0
    rep = _json_out(capsys)
    cox = cox_fit(rankings_to_pseudotimes(read_dataset(out).instances))
    assert np.max(np.abs(np.array(rep["beta"]) - cox.beta)) <= 1e-8
    assert rep["equivalence"]["max_abs_loglik_diff"] <= 1e-12


def test_baseline_reduces_to_nelson_aalen(tmp_path, capsys):
    rng = np.random.default_rng(1)
    ds = SurvivalDataset(rng.normal(size=(50, 1)), rng.integers(1, 20, size=50).astype(float))
    data = tmp_path / "u.csv"
    write_utility_csv(data, ds)
    fit = _write(tmp_path / "fit.json", {"beta": [0.0]})
    assert main(["baseline", str(data), "--fit", fit, "--format", "json"]) == 0
    doc = _json_out(capsys)
    na = nelson_aalen(ds.utilities)
    assert np.max(np.abs(np.array(doc["cumulative_hazard"]) - na.values)) <= 1e-14
    assert np.max(np.abs(np.array(doc["cdf"]) - (1 - np.array(doc["survival"])))) <= 1e-15
    assert np.all(np.diff(doc["cdf"]) >= 0)


def test_diagnose_identical_files(tmp_path, capsys):
    rng = np.random.default_rng(2)
    ds = SurvivalDataset(np.zeros((300, 1)), rng.exponential(size=300))
    a = tmp_path / "a.csv"
    write_utility_csv(a, ds)
    assert main(["diagnose", str(a), str(a)]) == 0
    assert _json_out(capsys)["verdict"] == "Indistinguishable"


def test_diagnose_too_few_samples(tmp_path):
    ds = SurvivalDataset(np.zeros((10, 1)), np.arange(1.0, 11.0))
    a = tmp_path / "a.csv"
    write_utility_csv(a, ds)
    assert main(["diagnose", str(a), str(a)]) == 4


def test_diagnose_crossing_fixture(tmp_path, capsys):
    from hazrank.core import seeded_rng
    from hazrank.simulate import LogNormal, draw_utilities

    paths = []
    for k, law in enumerate((LogNormal(0.0, 0.25), LogNormal(0.1, 1.0))):
        u = draw_utilities(law, 5000, seeded_rng(k))
        p = tmp_path / f"g{k}.csv"
        write_utility_csv(p, SurvivalDataset(np.zeros((u.size, 1)), u))
        paths.append(str(p))
    assert main(["diagnose", *paths]) == 0
    rep = _json_out(capsys)
    assert rep["verdict"] == "Crossing"
    assert rep["ph_test"]["violated"] == [True]


def test_figure_schema_and_determinism(tmp_path, capsys):
    assert main(["figure", "--out-dir", str(tmp_path / "a")]) == 0
    summary = _json_out(capsys)
    assert main(["figure", "--out-dir", str(tmp_path / "b")]) == 0
    capsys.readouterr()
    for name in ("figure_cdf.csv", "figure_hazard.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    rows = list(csv.reader((tmp_path / "a" / "figure_cdf.csv").read_text().splitlines()))
    assert rows[0] == ["group", "u", "F"]
    assert {r[0] for r in rows[1:]} == {"i", "j", "k"}
    assert summary["pairs"]["i,j"]["crossing_count"] == 0
    assert summary["pairs"]["i,k"]["crossing_count"] >= 1


def test_csv_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(3)
    ds = SurvivalDataset(rng.normal(size=(20, 3)), rng.exponential(size=20) + 1e-300)
    path = tmp_path / "u.csv"
    write_utility_csv(path, ds)
    assert read_dataset(path) == ds


def test_dpo_demo(capsys):
    assert main(["dpo-demo"]) == 0
    doc = _json_out(capsys)
    assert abs(doc["score_gap"] - math.log(3)) <= 0.1


def test_parse_error_reports_line(tmp_path, capsys):
    path = tmp_path / "u.csv"
    path.write_text("utility,x0\n1.0,0.5\n2.0,abc\n")
    assert main(["fit", str(path)]) == 2
    assert ":3:" in capsys.readouterr().err
