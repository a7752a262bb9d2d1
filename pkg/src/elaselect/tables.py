"""Delimited output and ingestion for every pipeline artifact.

All floats are written with 17 significant digits so values round-trip
exactly.  Writers prepend a `#`-comment line carrying the config hash and
master seed; readers skip comment lines, so emitted files re-ingest cleanly
and externally produced files without the comment work just as well.
"""

import csv
import json

import numpy as np

from .ela import FEATURE_NAMES, FeatureVector
from .errors import IncompleteMatrix
from .pipeline import CvPredictions

FEATURES_HEADER = ["fid", "iid", "dim", "sample_size", "reps"] + FEATURE_NAMES
PREDICTIONS_HEADER = [
    "model_id",
    "target_mode",
    "algorithm",
    "fid",
    "iid",
    "budget",
    "sample_size",
    "predicted",
    "true",
]
SELECTOR_HEADER = ["model_id", "approach", "budget", "sample_size", "rmse", "log_rmse", "pareto"]
FREQUENCY_HEADER = ["approach", "algorithm", "fid", "iid", "count"]


def fmt(x) -> str:
    """17-significant-digit decimal form (exact float round-trip)."""
    return format(float(x), ".17g")


def _open_writer(path, stamp):
    fh = open(path, "w", newline="")
    if stamp:
        fh.write(f"# {stamp}\n")
    return fh, csv.writer(fh, lineterminator="\n")


def _read_rows(path, expected_header):
    rows = []
    with open(path, newline="") as fh:
        header = None
        for line_no, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].startswith("#"):
                continue
            if header is None:
                header = [c.strip() for c in row]
                if header != expected_header:
                    raise ValueError(
                        f"{path}: line {line_no}: expected header "
                        f"{','.join(expected_header)}"
                    )
                continue
            rows.append(row)
    if header is None:
        raise ValueError(f"{path}: no header found")
    return rows


# --- features ---------------------------------------------------------------


def write_features(path, vectors, reps, stamp=""):
    fh, w = _open_writer(path, stamp)
    with fh:
        w.writerow(FEATURES_HEADER)
        ordered = sorted(vectors, key=lambda v: (v.instance[0], v.instance[1], v.sample_size))
        for v in ordered:
            fid, iid, dim = v.instance
            w.writerow(
                [fid, iid, dim, v.sample_size, reps]
                + [fmt(v.values[name]) for name in FEATURE_NAMES]
            )


def read_features(path):
    """-> dict sample_size -> {(fid, iid): FeatureVector}"""
    out = {}
    for row in _read_rows(path, FEATURES_HEADER):
        fid, iid, dim, size = int(row[0]), int(row[1]), int(row[2]), int(row[3])
        values = {name: float(v) for name, v in zip(FEATURE_NAMES, row[5:])}
        out.setdefault(size, {})[(fid, iid)] = FeatureVector((fid, iid, dim), size, values)
    return out


# --- performance ------------------------------------------------------------


def write_performance(path, records, stamp=""):
    fh, w = _open_writer(path, stamp)
    with fh:
        w.writerow(["algorithm", "fid", "iid", "dim", "budget", "precision"])
        for r in records:
            w.writerow([r.algorithm, r.fid, r.iid, r.dim, r.budget, fmt(r.precision)])


# --- predictions ------------------------------------------------------------


def write_predictions(path, predictions, stamp=""):
    fh, w = _open_writer(path, stamp)
    with fh:
        w.writerow(PREDICTIONS_HEADER)
        for cv in predictions:
            for fid, iid, pred, true in cv.rows():
                w.writerow(
                    [
                        cv.model_id,
                        cv.target_mode,
                        cv.algorithm,
                        fid,
                        iid,
                        cv.budget,
                        cv.sample_size,
                        fmt(pred),
                        fmt(true),
                    ]
                )


def read_predictions(path, truths):
    """Reassemble CvPredictions; true precisions come from `truths`
    ((algorithm, fid, iid, budget) -> precision) rather than the mode-scale
    `true` column, so raw values survive exactly."""
    groups = {}
    for row in _read_rows(path, PREDICTIONS_HEADER):
        key = (row[0], row[1], row[2], int(row[5]), int(row[6]))
        groups.setdefault(key, []).append(
            ((int(row[3]), int(row[4])), float(row[7]), float(row[8]))
        )
    out = []
    for (model_id, mode, algo, budget, size), rows in sorted(groups.items()):
        rows.sort(key=lambda r: r[0])
        instances = tuple(r[0] for r in rows)
        predicted = np.array([r[1] for r in rows])
        true_target = np.array([r[2] for r in rows])
        missing = [k for k in instances if (algo, k[0], k[1], budget) not in truths]
        if missing:
            raise IncompleteMatrix(
                f"performance table lacks {algo} budget {budget} precisions "
                f"for instances {missing[:5]}"
            )
        true_precision = np.array(
            [truths[(algo, fid, iid, budget)] for (fid, iid) in instances]
        )
        out.append(
            CvPredictions(
                model_id, mode, algo, budget, size, instances, predicted, true_target, true_precision
            )
        )
    return out


def truths_from_records(records):
    return {(r.algorithm, r.fid, r.iid, r.budget): r.precision for r in records}


# --- selector outputs ---------------------------------------------------------


def write_selectors(path, selector_rows, stamp=""):
    fh, w = _open_writer(path, stamp)
    with fh:
        w.writerow(SELECTOR_HEADER)
        for r in selector_rows:
            w.writerow(
                [
                    r["model_id"],
                    r["approach"],
                    r["budget"],
                    r["sample_size"],
                    fmt(r["rmse"]),
                    fmt(r["log_rmse"]),
                    str(bool(r["pareto"])).lower(),
                ]
            )


def write_frequency(path, freq_by_approach, algorithms, instances, stamp=""):
    """Dense approach x algorithm x instance counts (zeros included)."""
    fh, w = _open_writer(path, stamp)
    with fh:
        w.writerow(FREQUENCY_HEADER)
        for approach in sorted(freq_by_approach):
            counts = freq_by_approach[approach]
            for algo in algorithms:
                for fid, iid in instances:
                    w.writerow([approach, algo, fid, iid, counts.get((algo, fid, iid), 0)])


def write_report_json(path, report: dict):
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
