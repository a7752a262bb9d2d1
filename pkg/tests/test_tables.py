import numpy as np

from elaselect import pipeline, tables
from elaselect.ela import FEATURE_NAMES, FeatureVector
from elaselect.pipeline import PerformanceRecord
from elaselect.portfolio import ingest_performance


def test_fmt_roundtrips_doubles():
    rng = np.random.default_rng(0)
    for _ in range(200):
        x = float(rng.normal() * 10.0 ** rng.integers(-12, 12))
        assert float(tables.fmt(x)) == x
    assert float(tables.fmt(1e-12)) == 1e-12


def test_features_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    vectors = []
    for fid in (1, 2):
        for iid in (1, 2):
            values = {name: float(rng.normal()) for name in FEATURE_NAMES}
            vectors.append(FeatureVector((fid, iid, 5), 250, values))
    path = tmp_path / "features.csv"
    tables.write_features(path, vectors, reps=3, stamp="config_hash=x seed=0")
    loaded = tables.read_features(path)
    assert set(loaded) == {250}
    for v in vectors:
        got = loaded[250][(v.instance[0], v.instance[1])]
        assert got.values == v.values


def test_performance_roundtrip(tmp_path):
    recs = [
        PerformanceRecord("B", 1, 1, 5, 250, 1.2345678901234567e-8),
        PerformanceRecord("A", 2, 3, 5, 500, 9.87654321e4),
    ]
    path = tmp_path / "performance.csv"
    tables.write_performance(path, recs, stamp="s")
    loaded = ingest_performance(path)
    assert sorted(loaded, key=lambda r: r.algorithm) == sorted(
        recs, key=lambda r: r.algorithm
    )


def test_predictions_roundtrip(tmp_path):
    instances = ((1, 1), (1, 2))
    trues = np.array([1e-7, 2.5])
    cv = pipeline.CvPredictions(
        "RM3",
        "log10",
        "HCMA",
        250,
        250,
        instances,
        np.array([-6.5, 0.1]),
        pipeline.log_target(trues),
        trues,
    )
    path = tmp_path / "predictions.csv"
    tables.write_predictions(path, [cv], stamp="s")
    truths = {("HCMA", 1, 1, 250): 1e-7, ("HCMA", 1, 2, 250): 2.5}
    loaded = tables.read_predictions(path, truths)
    assert len(loaded) == 1
    got = loaded[0]
    assert got.model_id == "RM3" and got.target_mode == "log10"
    assert got.instances == instances
    assert np.array_equal(got.predicted, cv.predicted)
    assert np.array_equal(got.true_target, cv.true_target)
    assert np.array_equal(got.true_precision, trues)
