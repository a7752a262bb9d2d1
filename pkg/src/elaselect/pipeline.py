"""Regression datasets, instance-stratified cross-validation and error metrics.

Targets come in two flavors per algorithm/budget: the raw reached precision
(unscaled) and its log10 (after clamping at CLAMP), trained and evaluated
side by side.  Cross-validation is 5-fold leave-one-instance-out: fold k
holds the iid-k instance of every function, so training always sees 4 of the
5 instances per function and every instance is predicted exactly once.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataJoinError, DimensionError, IncompleteSuite
from .forest import RegressionModelConfig, fit, predict, with_seed

CLAMP = 1e-12
N_FOLDS = 5
TARGET_MODES = ("unscaled", "log10")


@dataclass(frozen=True)
class PerformanceRecord:
    """Best-so-far precision of one algorithm run at one budget."""

    algorithm: str
    fid: int
    iid: int
    dim: int
    budget: int
    precision: float


@dataclass(frozen=True)
class Dataset:
    """Feature rows and regression targets for one (algorithm, budget) pair."""

    instances: tuple  # ((fid, iid), ...) row order
    x: np.ndarray  # (n, 56)
    target: np.ndarray  # in the mode's scale
    precision: np.ndarray  # raw precision, unclamped
    target_mode: str
    algorithm: str
    budget: int
    sample_size: int


@dataclass(frozen=True)
class CvPredictions:
    """Out-of-fold predictions of one model on one dataset."""

    model_id: str
    target_mode: str
    algorithm: str
    budget: int
    sample_size: int
    instances: tuple
    predicted: np.ndarray
    true_target: np.ndarray
    true_precision: np.ndarray

    def rows(self):
        for i, (fid, iid) in enumerate(self.instances):
            yield (fid, iid, self.predicted[i], self.true_target[i])


def clamp_precision(p, clamp: float = CLAMP):
    return np.maximum(p, clamp)


def log_target(precision, clamp: float = CLAMP):
    return np.log10(clamp_precision(precision, clamp))


def make_folds(instances) -> dict:
    """Map (fid, iid) -> fold index; fold k holds iid k of every fid."""
    instances = set(instances)
    fids = sorted({fid for fid, _ in instances})
    missing = [
        (fid, iid)
        for fid in fids
        for iid in range(1, N_FOLDS + 1)
        if (fid, iid) not in instances
    ]
    if missing:
        raise IncompleteSuite(f"missing instances: {missing}")
    extra = [key for key in instances if not 1 <= key[1] <= N_FOLDS]
    if extra:
        raise IncompleteSuite(f"instances outside iid 1..{N_FOLDS}: {sorted(extra)}")
    return {(fid, iid): iid for fid in fids for iid in range(1, N_FOLDS + 1)}


def build_dataset(
    features: dict,
    perf: list,
    algorithm: str,
    budget: int,
    sample_size: int,
    target_mode: str,
    clamp: float = CLAMP,
) -> Dataset:
    """Join feature vectors with performance records into a model-ready table.

    `features` maps (fid, iid) -> FeatureVector for the given sample size.
    """
    if target_mode not in TARGET_MODES:
        raise ValueError(f"target_mode must be one of {TARGET_MODES}")
    perf_map = {
        (r.fid, r.iid): r.precision
        for r in perf
        if r.algorithm == algorithm and r.budget == budget
    }
    keys = sorted(features.keys())
    missing_perf = [k for k in keys if k not in perf_map]
    missing_feat = [k for k in sorted(perf_map) if k not in features]
    if missing_perf or missing_feat:
        raise DataJoinError(
            f"algorithm={algorithm} budget={budget}: "
            f"no performance for {missing_perf[:5]}, no features for {missing_feat[:5]}"
        )
    x = np.vstack([features[k].as_array() for k in keys])
    precision = np.array([perf_map[k] for k in keys])
    if not np.isfinite(x).all():
        raise DataJoinError("feature matrix contains non-finite entries")
    target = log_target(precision, clamp) if target_mode == "log10" else precision.copy()
    return Dataset(
        tuple(keys), x, target, precision, target_mode, algorithm, budget, sample_size
    )


def cross_validate(
    config: RegressionModelConfig, ds: Dataset, folds: dict
) -> CvPredictions:
    """Out-of-fold predictions: fit on 4 folds, predict the held-out one."""
    n = len(ds.instances)
    fold_of = np.array([folds[key] for key in ds.instances])
    predicted = np.empty(n)
    for k in sorted(set(fold_of)):
        test = fold_of == k
        train = ~test
        model = fit(with_seed(config, "fold", int(k)), ds.x[train], ds.target[train])
        for i in np.flatnonzero(test):
            predicted[i] = predict(model, ds.x[i])
    return CvPredictions(
        config.id,
        ds.target_mode,
        ds.algorithm,
        ds.budget,
        ds.sample_size,
        ds.instances,
        predicted,
        ds.target.copy(),
        ds.precision.copy(),
    )


def rmse(pred, truth) -> float:
    """Root mean squared error on the un-logged precision scale."""
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape:
        raise DimensionError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise DimensionError("rmse of empty vectors")
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def log_rmse(pred, truth, clamp: float = CLAMP) -> float:
    """RMSE of log10 precisions, both sides clamped below at `clamp`."""
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape:
        raise DimensionError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise DimensionError("log_rmse of empty vectors")
    return float(
        np.sqrt(
            np.mean(
                (
                    np.log10(clamp_precision(pred, clamp))
                    - np.log10(clamp_precision(truth, clamp))
                )
                ** 2
            )
        )
    )


def predicted_precision(cv: CvPredictions) -> np.ndarray:
    """Predictions mapped back to the raw precision scale."""
    if cv.target_mode == "log10":
        return 10.0**cv.predicted
    return cv.predicted


def prediction_errors(cv: CvPredictions, clamp: float = CLAMP) -> tuple:
    """(rmse, log_rmse) of one prediction set against true precisions."""
    pred = predicted_precision(cv)
    return rmse(pred, cv.true_precision), log_rmse(pred, cv.true_precision, clamp)


@dataclass(frozen=True)
class RegressionSummary:
    """Best model per metric for one (algorithm, budget, sample_size)."""

    algorithm: str
    budget: int
    sample_size: int
    rmse: float
    rmse_model: str
    log_rmse: float
    log_rmse_model: str
    n_models: int
    incomplete: bool


def _model_order(model_id: str):
    return int(model_id[2:]) if model_id.startswith("RM") else 10**9


def regression_report(predictions: list, summary_mode: str = "log10", clamp: float = CLAMP):
    """Per-combination error matrix plus the best-model summary table.

    Returns (matrix_rows, summaries): matrix_rows are dicts with both error
    metrics for every (model, mode, algorithm, budget, sample_size); the
    summaries pick the best model per metric among `summary_mode` predictions,
    ties broken by lowest RM number.
    """
    matrix = []
    for cv in predictions:
        e_rmse, e_log = prediction_errors(cv, clamp)
        matrix.append(
            {
                "model_id": cv.model_id,
                "target_mode": cv.target_mode,
                "algorithm": cv.algorithm,
                "budget": cv.budget,
                "sample_size": cv.sample_size,
                "rmse": e_rmse,
                "log_rmse": e_log,
            }
        )
    matrix.sort(
        key=lambda r: (
            r["algorithm"],
            r["budget"],
            r["sample_size"],
            r["target_mode"],
            _model_order(r["model_id"]),
        )
    )

    summaries = []
    combos = sorted(
        {
            (r["algorithm"], r["budget"], r["sample_size"])
            for r in matrix
            if r["target_mode"] == summary_mode
        }
    )
    for algo, budget, size in combos:
        rows = [
            r
            for r in matrix
            if r["target_mode"] == summary_mode
            and (r["algorithm"], r["budget"], r["sample_size"]) == (algo, budget, size)
        ]
        best_rmse = min(rows, key=lambda r: (r["rmse"], _model_order(r["model_id"])))
        best_log = min(rows, key=lambda r: (r["log_rmse"], _model_order(r["model_id"])))
        summaries.append(
            RegressionSummary(
                algo,
                budget,
                size,
                best_rmse["rmse"],
                best_rmse["model_id"],
                best_log["log_rmse"],
                best_log["model_id"],
                len(rows),
                len(rows) < 30,
            )
        )
    return matrix, summaries
