import math
import os
from pathlib import Path

import numpy as np
import pytest

import checkin

DATA = Path(os.environ.get("CHECKIN_TEST_DATA", Path(__file__).resolve().parents[1] / "data"))


def test_haversine_known_pair():
    d = checkin.haversine(1.2868, 103.8545, 1.2834, 103.8607)
    assert d == pytest.approx(786.1159147446452, abs=1e-6)


def test_metrics_and_stats():
    e = math.e
    assert checkin.msle([0.0, e * e - 1], [e - 1, e - 1]) == pytest.approx(1.0, abs=1e-12)
    assert checkin.male([e - 1], [0.0]) == pytest.approx(1.0, abs=1e-12)
    assert checkin.pcc([1, 2, 3, 4], [2, 1, 4, 3]) == pytest.approx(0.6)
    r = checkin.ttest_ind([1, 2, 3, 4, 5], [2, 3, 4, 5, 6])
    assert r["t"] == pytest.approx(-1.0)
    assert r["p"] == pytest.approx(0.34659350708733416, abs=1e-9)
    with pytest.raises(ValueError):
        checkin.msle([-1.0], [0.0])


def test_ingest_fixture():
    dataset, rejected = checkin.ingest(str(DATA / "mixed.jsonl"), ["Coffee Shop", "Restaurant"])
    assert len(dataset) == 3
    assert [r["reason"] for r in rejected] == ["invalid json", "no coordinates"]
    assert dataset.validate() == []
    rows = {r["label"]: r for r in checkin.category_summary(dataset)}
    assert rows["restaurant"]["total_checkins"] == 300


def test_synth_features_fit_predict(tmp_path):
    city = checkin.synth(n=300, seed=3)
    assert len(city) == 300
    X, y, ids, names = checkin.feature_matrix(city)
    assert X.shape == (len(ids), len(names))
    assert X.shape[1] == 2 * len(city.vocabulary) + 80
    model = checkin.fit(X, y, iterations=20, max_depth=4)
    assert model.n_trees == 20
    assert np.all(np.diff(model.training_mse) <= 1e-12)
    preds = model.predict(X)
    assert preds.shape == (X.shape[0],)

    path = tmp_path / "model.json"
    model.save(str(path))
    again = checkin.load_model(str(path))
    assert again.fingerprint() == model.fingerprint()
    np.testing.assert_array_equal(again.predict(X), preds)


def test_cross_validate_and_service(tmp_path):
    city = checkin.synth(n=300, seed=5)
    report = checkin.cross_validate(city, family="dnn", k=5)
    assert len(report["folds"]) == 5
    assert report["mean_msle"] >= 0

    model = checkin.train(city, mask="110011", iterations=10, max_depth=3)
    assert model.metadata["mask"] == "110011"
    svc = checkin.Service(city, model)
    assert svc.health()["status"] == "ready"
    p = city.profiles()[0]
    loc = p["location"]
    resp = svc.predict(loc["latitude"], loc["longitude"], [p["category"]], 300.0)
    above = sum(1 for n in resp["neighbors"] if n["checkins"] > resp["predicted_checkins"])
    assert resp["rank"] == above + 1

    city.save(str(tmp_path / "city.json"))
    assert len(checkin.load_dataset(str(tmp_path / "city.json"))) == 300
    with pytest.raises(ValueError):
        svc.predict(95.0, 103.8)
