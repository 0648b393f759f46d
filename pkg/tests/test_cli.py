import json

import numpy as np
import pandas as pd
import pytest

import sparglm.cli as cli
from sparglm.cli import main
from sparglm.ensemble import load_model, predict
from sparglm.exceptions import NumericalError
from sparglm.metrics import auc
from sparglm.simulation import simulate


@pytest.fixture
def here(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def sim(args, capsys=None):
    rc = main(["simulate", *args])
    assert rc == 0
    if capsys is not None:
        return json.loads(capsys.readouterr().out)


def test_simulate_shape_and_determinism(here, capsys):
    args = ["--family", "binomial-logit", "--n", "200", "--p", "2000", "--sparsity", "medium",
            "--cov", "block", "--seed", "1"]
    printed = sim(args + ["--out", "a"], capsys)
    df = pd.read_csv("a.csv")
    assert df.shape == (200, 2002)
    assert list(df.columns[:2]) == ["x1", "x2"] and list(df.columns[-2:]) == ["y", "eta_true"]
    sim(args + ["--out", "b"])
    assert (here / "a.csv").read_bytes() == (here / "b.csv").read_bytes()
    assert (here / "a.meta.json").read_bytes() == (here / "b.meta.json").read_bytes()
    meta = json.loads((here / "a.meta.json").read_text())
    assert printed == {"beta0": meta["beta0"], "a": meta["a"]} and meta["a"] == 115


def test_dense_active_count(here, capsys):
    out = sim(["--family", "gaussian-identity", "--n", "50", "--p", "500", "--sparsity", "dense",
               "--out", "d"], capsys)
    assert out["a"] == 125


def test_csv_roundtrip_is_exact(here):
    sim(["--family", "poisson-log", "--n", "30", "--p", "40", "--seed", "5", "--out", "r"])
    X, y, eta, _ = cli.split_frame(cli.read_csv("r.csv"))
    d = simulate("poisson-log", 30, 40, seed=5)
    assert np.array_equal(X, d["X"]) and np.array_equal(y, d["y"])
    assert np.array_equal(eta, d["eta"])


def test_fit_predict_roundtrip(here):
    sim(["--family", "binomial-logit", "--n", "60", "--p", "150", "--seed", "2", "--out", "t"])
    assert main(["fit", "--data", "t.csv", "--family", "binomial-logit", "--cv", "3",
                 "--models", "6", "--threshold-rule", "1se", "--seed", "4", "--out", "m.json",
                 "--report", "rep.json"]) == 0
    rep = json.loads((here / "rep.json").read_text())
    for key in ("deviance_ratio", "M", "nu", "lambda_min", "nonzero"):
        assert key in rep
    assert main(["predict", "--model", "m.json", "--data", "t.csv", "--out", "p.csv"]) == 0
    pred = cli.read_csv("p.csv")
    model = load_model("m.json")
    X, _, _, _ = cli.split_frame(cli.read_csv("t.csv"))
    assert np.array_equal(pred["link"].to_numpy(), predict(model, X, "link"))
    assert np.array_equal(pred["response"].to_numpy(), predict(model, X, "response"))


def test_one_model_no_cv(here):
    sim(["--family", "poisson-log", "--n", "40", "--p", "90", "--out", "t"])
    assert main(["fit", "--data", "t.csv", "--family", "poisson-log", "--models", "1", "--no-cv",
                 "--out", "m.json", "--report", "r.json"]) == 0
    assert len(load_model("m.json").members) == 1


def test_exact_signal_is_recovered(here):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(100, 200))
    df = cli.dataset_frame(X, X[:, 0])
    cli.write_csv(df, "g.csv")
    assert main(["fit", "--data", "g.csv", "--family", "gaussian-identity", "--out", "m.json",
                 "--report", "r.json"]) == 0
    model = load_model("m.json")
    assert model.training["y_mean"] == X[:, 0].mean()
    assert main(["evaluate", "--model", "m.json", "--data", "g.csv", "--out", "e.json"]) == 0
    assert json.loads((here / "e.json").read_text())["rmspe"] < 0.05


def test_evaluate_perfect_predictions_and_gating(here):
    y = np.array([0.0, 1.0, 1.0, 0.0, 1.0])
    pd.DataFrame({"y": y}).to_csv("data.csv", index=False)
    pd.DataFrame({"response": y}).to_csv("pred.csv", index=False)
    assert main(["evaluate", "--predictions", "pred.csv", "--data", "data.csv",
                 "--out", "e.json"]) == 0
    rec = json.loads((here / "e.json").read_text())
    assert rec["mspe"] == 0.0
    assert rec["msle"] is None and rec["pauc"] is None and rec["rmspe"] is None


def test_evaluate_confusion_consistent_with_auc(here):
    y = np.array([1, 1, 1, 0, 1, 0, 0, 0], float)
    s = np.array([0.9, 0.8, 0.7, 0.6, 0.4, 0.3, 0.2, 0.1])
    pd.DataFrame({"y": y}).to_csv("data.csv", index=False)
    pd.DataFrame({"response": s}).to_csv("pred.csv", index=False)
    assert main(["evaluate", "--predictions", "pred.csv", "--data", "data.csv",
                 "--family", "binomial-logit", "--out", "e.json"]) == 0
    rec = json.loads((here / "e.json").read_text())
    c = rec["confusion"]
    assert (c["tp"], c["fp"], c["tn"], c["fn"]) == (3, 1, 3, 1)
    # [DERIVED] one discordant pair (positive 0.4 below negative 0.6) out of 16
    assert rec["auc"] == auc(y, s) == 15 / 16
    # better than chance on both summaries
    assert c["tp"] / 4 > c["fp"] / 4 and rec["auc"] > 0.5


def test_evaluate_oracle_sidecars(here):
    sim(["--family", "binomial-logit", "--n", "60", "--p", "150", "--n-test", "40",
         "--out", "s"])
    main(["fit", "--data", "s.csv", "--family", "binomial-logit", "--models", "3",
          "--out", "m.json", "--report", "r.json"])
    main(["evaluate", "--model", "m.json", "--data", "s_test.csv", "--out", "no.json"])
    main(["evaluate", "--model", "m.json", "--data", "s_test.csv", "--meta", "s.meta.json",
          "--out", "yes.json"])
    no = json.loads((here / "no.json").read_text())
    yes = json.loads((here / "yes.json").read_text())
    assert no["pauc"] is None and 0 <= yes["pauc"] <= 1
    assert yes["msle"] is not None and yes["auc"] is not None


def test_exit_codes(here, monkeypatch):
    assert main(["simulate", "--family", "binomial-probit", "--n", "5", "--p", "5"]) == 2
    assert main([]) == 2
    assert main(["evaluate", "--data", "x.csv"]) == 2  # neither --model nor --predictions
    (here / "bad.csv").write_text("x1,y\n1,2\n\"oops")
    assert main(["fit", "--data", "bad.csv", "--family", "gaussian-identity"]) == 3
    pd.DataFrame({"x1": np.arange(20.0), "x2": np.arange(20.0) ** 2,
                  "y": np.arange(20) + 0.5}).to_csv("frac.csv", index=False)
    assert main(["fit", "--data", "frac.csv", "--family", "poisson-log"]) == 3
    assert main(["fit", "--data", "frac.csv", "--family", "gaussian-identity",
                 "--response", "target"]) == 3

    def boom(*a, **k):
        raise NumericalError("non-finite deviance", index=3)

    monkeypatch.setattr(cli, "spar_fit", boom)
    assert main(["fit", "--data", "frac.csv", "--family", "gaussian-identity"]) == 4


def test_benchmark_config_and_overrides(here, capsys):
    conf = {"scenario": "spar_benchmark", "methods": ["spar"], "seed": 3,
            "grid": [{"family_link": "poisson-log", "p": 100, "n": 40, "n_test": 20,
                      "replications": 1}]}
    (here / "exp.json").write_text(json.dumps(conf))
    assert main(["benchmark", "--config", "exp.json", "--reps", "2", "--out", "res.csv",
                 "--ranks", "ranks.csv"]) == 0
    df = pd.read_csv("res.csv")
    assert list(df.columns) == ["cell_id", "family_link", "p", "n", "sparsity", "covariance",
                                "replication", "method", "metric", "value", "seconds"]
    assert sorted(df["replication"].unique()) == [0, 1]
    assert len(pd.read_csv("ranks.csv")) == 5
    assert main(["benchmark", "--config", "exp.json"]) == 2  # no output path
    (here / "bad.json").write_text(json.dumps({"bogus": 1}))
    assert main(["benchmark", "--config", "bad.json", "--out", "x.csv"]) == 2
