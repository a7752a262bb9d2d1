"""Uniform-design sampling and the 56 landscape features.

Six cheap feature sets (no adaptive sampling needed): y-distribution (3),
levelset (18), meta-model (9), dispersion (16), information content (5) and
nearest-better clustering (5).  `compute_features` runs the whole battery on
independently seeded replicate samples and aggregates by coordinate-wise
median over the finite replicate values.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist
from scipy.stats import gaussian_kde, kurtosis, skew

from .bbob import LOWER, UPPER, ProblemInstance, evaluate_many
from .errors import SampleSizeError
from .seeding import rng_for, stable_seed

LEVEL_QUANTILES = (0.10, 0.25, 0.50)
DISP_QUANTILES = (0.02, 0.05, 0.10, 0.25)
IC_EPS_GRID = np.concatenate([[0.0], 10.0 ** np.linspace(-5.0, 15.0, 100)])

DISTR_NAMES = [
    "ela_distr.skewness",
    "ela_distr.kurtosis",
    "ela_distr.number_of_peaks",
]
LEVEL_NAMES = [
    f"ela_level.{stat}_{int(q * 100):02d}"
    for q in LEVEL_QUANTILES
    for stat in ("mmce_lda", "mmce_qda", "mmce_knn", "lda_qda", "lda_knn", "qda_knn")
]
META_NAMES = [
    "ela_meta.lin_simple.adj_r2",
    "ela_meta.lin_simple.intercept",
    "ela_meta.lin_simple.coef.min",
    "ela_meta.lin_simple.coef.max",
    "ela_meta.lin_simple.coef.max_by_min",
    "ela_meta.lin_w_interact.adj_r2",
    "ela_meta.quad_simple.adj_r2",
    "ela_meta.quad_simple.cond",
    "ela_meta.quad_w_interact.adj_r2",
]
DISP_NAMES = [
    f"disp.{stat}_{int(q * 100):02d}"
    for stat in ("ratio_mean", "ratio_median", "diff_mean", "diff_median")
    for q in DISP_QUANTILES
]
IC_NAMES = ["ic.h_max", "ic.eps_s", "ic.eps_max", "ic.m0", "ic.eps_ratio"]
NBC_NAMES = [
    "nbc.nn_nb.sd_ratio",
    "nbc.nn_nb.mean_ratio",
    "nbc.nn_nb.cor",
    "nbc.dist_ratio.coeff_var",
    "nbc.nb_fitness.cor",
]

FEATURE_NAMES = DISTR_NAMES + LEVEL_NAMES + META_NAMES + DISP_NAMES + IC_NAMES + NBC_NAMES
assert len(FEATURE_NAMES) == 56


@dataclass(frozen=True)
class SampleSet:
    """Uniformly sampled points with their objective values."""

    points: np.ndarray
    values: np.ndarray
    seed: int

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class FeatureVector:
    """The 56 named landscape features of one instance at one sample size."""

    instance: tuple  # (fid, iid, dim)
    sample_size: int
    values: dict
    flagged: tuple = ()

    def as_array(self) -> np.ndarray:
        return np.array([self.values[name] for name in FEATURE_NAMES])


def uniform_sample(inst: ProblemInstance, n: int, seed: int) -> SampleSet:
    """Draw n i.i.d. uniform points in the domain and evaluate them."""
    if n < inst.dim + 2:
        raise SampleSizeError(f"need at least dim + 2 = {inst.dim + 2} points, got {n}")
    rng = np.random.default_rng(seed)
    points = rng.uniform(LOWER, UPPER, (n, inst.dim))
    values = evaluate_many(inst, points)
    return SampleSet(points, values, seed)


# --- y-distribution -------------------------------------------------------


def ela_distr(s: SampleSet) -> dict:
    y = s.values
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sk = float(skew(y))
        ku = float(kurtosis(y, fisher=True))
    return {
        "ela_distr.skewness": sk,
        "ela_distr.kurtosis": ku,
        "ela_distr.number_of_peaks": _kde_peak_count(y),
    }


def _kde_peak_count(y: np.ndarray, grid_size: int = 512) -> float:
    if np.ptp(y) == 0:
        return math.nan
    try:
        kde = gaussian_kde(y, bw_method="silverman")
    except np.linalg.LinAlgError:
        return math.nan
    grid = np.linspace(y.min(), y.max(), grid_size)
    dens = kde(grid)
    interior = (dens[1:-1] > dens[:-2]) & (dens[1:-1] > dens[2:])
    return float(np.count_nonzero(interior))


# --- levelset -------------------------------------------------------------


def _lda_predict(x_tr, lab_tr, x_te):
    classes = np.unique(lab_tr)
    if classes.size == 1:
        return np.full(x_te.shape[0], classes[0])
    m0 = x_tr[lab_tr == 0].mean(axis=0)
    m1 = x_tr[lab_tr == 1].mean(axis=0)
    r0 = x_tr[lab_tr == 0] - m0
    r1 = x_tr[lab_tr == 1] - m1
    cov = (r0.T @ r0 + r1.T @ r1) / max(x_tr.shape[0] - 2, 1)
    cov = cov + 1e-10 * np.trace(cov) / cov.shape[0] * np.eye(cov.shape[0])
    w = np.linalg.pinv(cov) @ (m1 - m0)
    n0 = np.count_nonzero(lab_tr == 0)
    n1 = lab_tr.size - n0
    score = (x_te - (m0 + m1) / 2.0) @ w + math.log(n1 / n0)
    return (score > 0).astype(int)


def _qda_predict(x_tr, lab_tr, x_te):
    classes = np.unique(lab_tr)
    if classes.size == 1:
        return np.full(x_te.shape[0], classes[0])
    scores = np.empty((x_te.shape[0], 2))
    for c in (0, 1):
        xc = x_tr[lab_tr == c]
        m = xc.mean(axis=0)
        if xc.shape[0] < 2:
            cov = np.eye(x_tr.shape[1])
        else:
            r = xc - m
            cov = r.T @ r / (xc.shape[0] - 1)
        cov = cov + 1e-10 * max(np.trace(cov) / cov.shape[1], 1e-30) * np.eye(cov.shape[1])
        sign, logdet = np.linalg.slogdet(cov)
        if sign <= 0:
            cov = cov + np.eye(cov.shape[0])
            sign, logdet = np.linalg.slogdet(cov)
        diff = x_te - m
        maha = np.einsum("ij,ij->i", diff @ np.linalg.pinv(cov), diff)
        scores[:, c] = -0.5 * logdet - 0.5 * maha + math.log(xc.shape[0] / x_tr.shape[0])
    return np.argmax(scores, axis=1)


def _knn_predict(x_tr, lab_tr, x_te, k: int = 3):
    k = min(k, x_tr.shape[0])
    d = cdist(x_te, x_tr)
    nearest = np.argsort(d, axis=1, kind="stable")[:, :k]
    votes = lab_tr[nearest].sum(axis=1)
    return (votes * 2 > k).astype(int)


_LEVEL_CLASSIFIERS = (
    ("lda", _lda_predict),
    ("qda", _qda_predict),
    ("knn", _knn_predict),
)


def _stratified_folds(labels, n_folds, rng):
    fold = np.empty(labels.size, dtype=int)
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        idx = rng.permutation(idx)
        fold[idx] = np.arange(idx.size) % n_folds
    return fold


def _mmce(points, labels, predictor, fold):
    wrong = 0
    for f in np.unique(fold):
        te = fold == f
        tr = ~te
        if not te.any() or not tr.any():
            continue
        pred = predictor(points[tr], labels[tr], points[te])
        wrong += int(np.count_nonzero(pred != labels[te]))
    return wrong / labels.size


def _pairwise_ratios(mmces: dict) -> dict:
    def ratio(a, b):
        if b == 0:
            return 1.0 if a == 0 else math.inf  # equal errors self-ratio to 1
        return a / b

    return {
        f"{a}_{b}": ratio(mmces[a], mmces[b])
        for a, b in (("lda", "qda"), ("lda", "knn"), ("qda", "knn"))
    }


def ela_level(s: SampleSet, n_folds: int = 10) -> dict:
    out = {}
    for q in LEVEL_QUANTILES:
        tag = f"{int(q * 100):02d}"
        thresh = np.quantile(s.values, q)
        labels = (s.values <= thresh).astype(int)
        if labels.min() == labels.max():
            for stat in ("mmce_lda", "mmce_qda", "mmce_knn", "lda_qda", "lda_knn", "qda_knn"):
                out[f"ela_level.{stat}_{tag}"] = math.nan
            continue
        rng = rng_for("ela-level-folds", s.seed, tag)
        fold = _stratified_folds(labels, n_folds, rng)
        mmces = {
            name: _mmce(s.points, labels, pred, fold)
            for name, pred in _LEVEL_CLASSIFIERS
        }
        for name, value in mmces.items():
            out[f"ela_level.mmce_{name}_{tag}"] = value
        for name, value in _pairwise_ratios(mmces).items():
            out[f"ela_level.{name}_{tag}"] = value
    return out


# --- meta-model -----------------------------------------------------------


def _adj_r2(design, y):
    n, p_plus_1 = design.shape
    p = p_plus_1 - 1
    if n - p - 1 <= 0:
        return math.nan, None
    coef, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0:
        return math.nan, coef
    r2 = 1.0 - ss_res / ss_tot
    return 1.0 - (1.0 - r2) * (n - 1) / (n - p - 1), coef


def _interactions(x):
    d = x.shape[1]
    iu, ju = np.triu_indices(d, k=1)
    return x[:, iu] * x[:, ju]


def ela_meta(s: SampleSet) -> dict:
    x, y = s.points, s.values
    n = x.shape[0]
    ones = np.ones((n, 1))

    lin = np.hstack([ones, x])
    adj_lin, coef_lin = _adj_r2(lin, y)
    lin_int = np.hstack([ones, x, _interactions(x)])
    adj_lin_int, _ = _adj_r2(lin_int, y)
    quad = np.hstack([ones, x, x**2])
    adj_quad, coef_quad = _adj_r2(quad, y)
    quad_int = np.hstack([ones, x, x**2, _interactions(x)])
    adj_quad_int, _ = _adj_r2(quad_int, y)

    if coef_lin is not None:
        slopes = np.abs(coef_lin[1:])
        intercept = float(coef_lin[0])
        cmin, cmax = float(slopes.min()), float(slopes.max())
        ratio = cmax / cmin if cmin > 0 else math.nan
    else:
        intercept = cmin = cmax = ratio = math.nan
    if coef_quad is not None:
        sq = np.abs(coef_quad[1 + x.shape[1]:])
        cond = float(sq.max() / sq.min()) if sq.min() > 0 else math.nan
    else:
        cond = math.nan

    return {
        "ela_meta.lin_simple.adj_r2": adj_lin,
        "ela_meta.lin_simple.intercept": intercept,
        "ela_meta.lin_simple.coef.min": cmin,
        "ela_meta.lin_simple.coef.max": cmax,
        "ela_meta.lin_simple.coef.max_by_min": ratio,
        "ela_meta.lin_w_interact.adj_r2": adj_lin_int,
        "ela_meta.quad_simple.adj_r2": adj_quad,
        "ela_meta.quad_simple.cond": cond,
        "ela_meta.quad_w_interact.adj_r2": adj_quad_int,
    }


# --- dispersion -----------------------------------------------------------


def dispersion(s: SampleSet, quantiles=DISP_QUANTILES) -> dict:
    all_d = pdist(s.points)
    mean_all = float(all_d.mean())
    median_all = float(np.median(all_d))
    order = np.argsort(s.values, kind="stable")

    ratio_mean, ratio_median, diff_mean, diff_median = {}, {}, {}, {}
    for q in quantiles:
        tag = f"{int(q * 100):02d}"
        m = math.ceil(q * s.n)
        if m < 2:
            ratio_mean[tag] = ratio_median[tag] = math.nan
            diff_mean[tag] = diff_median[tag] = math.nan
            continue
        # index-sorted so the m == n case reproduces the full-set distances
        sub_d = pdist(s.points[np.sort(order[:m])])
        ratio_mean[tag] = float(sub_d.mean()) / mean_all
        ratio_median[tag] = float(np.median(sub_d)) / median_all
        diff_mean[tag] = float(sub_d.mean()) - mean_all
        diff_median[tag] = float(np.median(sub_d)) - median_all

    out = {}
    for stat, vals in (
        ("ratio_mean", ratio_mean),
        ("ratio_median", ratio_median),
        ("diff_mean", diff_mean),
        ("diff_median", diff_median),
    ):
        for q in quantiles:
            tag = f"{int(q * 100):02d}"
            out[f"disp.{stat}_{tag}"] = vals[tag]
    return out


# --- information content --------------------------------------------------


def _nn_tour(points: np.ndarray) -> np.ndarray:
    """Greedy nearest-neighbor visiting order, starting at the first point."""
    n = points.shape[0]
    d = cdist(points, points)
    np.fill_diagonal(d, np.inf)
    order = np.empty(n, dtype=int)
    order[0] = 0
    visited = np.zeros(n, dtype=bool)
    visited[0] = True
    cur = 0
    for i in range(1, n):
        row = np.where(visited, np.inf, d[cur])
        cur = int(np.argmin(row))
        visited[cur] = True
        order[i] = cur
    return order


def information_content(s: SampleSet) -> dict:
    if s.n < 3:
        return {name: math.nan for name in IC_NAMES}
    order = _nn_tour(s.points)
    pts = s.points[order]
    y = s.values[order]
    steps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    steps = np.maximum(steps, 1e-300)
    delta = np.diff(y) / steps

    eps = IC_EPS_GRID
    symbols = np.zeros((eps.size, delta.size), dtype=np.int8)
    symbols[delta[None, :] > eps[:, None]] = 1
    symbols[delta[None, :] < -eps[:, None]] = -1

    n_pairs = delta.size - 1
    codes = (symbols[:, :-1] + 1) * 3 + (symbols[:, 1:] + 1)
    counts = np.zeros((eps.size, 9), dtype=np.int64)
    row_idx = np.repeat(np.arange(eps.size), n_pairs)
    np.add.at(counts, (row_idx, codes.ravel()), 1)
    # entropy over the six mixed symbol pairs, in base 6
    mixed = counts[:, [1, 2, 3, 5, 6, 7]] / n_pairs
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(mixed > 0, mixed * np.log(mixed) / np.log(6.0), 0.0)
    h = -terms.sum(axis=1) + 0.0

    m = np.empty(eps.size)
    for i in range(eps.size):
        nz = symbols[i][symbols[i] != 0]
        m[i] = (
            np.count_nonzero(nz[1:] != nz[:-1]) / n_pairs if nz.size > 1 else 0.0
        )

    h_max = float(h.max())
    pos = eps > 0
    qualifying = pos & (h >= 0.05)
    eps_s = float(np.log10(eps[qualifying]).max()) if qualifying.any() else math.nan
    eps_max = float(eps[int(np.argmax(h))])
    m0 = float(m[0])
    half = pos & (m <= 0.5 * m0)
    eps_ratio = float(np.log10(eps[half]).min()) if half.any() else math.nan
    return {
        "ic.h_max": h_max,
        "ic.eps_s": eps_s,
        "ic.eps_max": eps_max,
        "ic.m0": m0,
        "ic.eps_ratio": eps_ratio,
    }


# --- nearest-better clustering --------------------------------------------


def nearest_better(s: SampleSet) -> dict:
    n = s.n
    if n < 2:
        return {name: math.nan for name in NBC_NAMES}
    d = cdist(s.points, s.points)
    np.fill_diagonal(d, np.inf)
    d_nn = d.min(axis=1)

    order = np.argsort(s.values, kind="stable")
    y_sorted = s.values[order]
    # first sorted position holding a strictly worse value than each point
    group_start = np.searchsorted(y_sorted, y_sorted, side="left")
    d_sorted = d[order][:, order]
    masked = d_sorted.copy()
    cols = np.arange(n)
    masked[cols[None, :] >= group_start[:, None]] = np.inf

    d_nb_sorted = masked.min(axis=1)
    nb_arg_sorted = masked.argmin(axis=1)
    valid_sorted = np.isfinite(d_nb_sorted)

    d_nb = np.full(n, np.nan)
    d_nb[order] = np.where(valid_sorted, d_nb_sorted, np.nan)
    valid = np.isfinite(d_nb)

    indegree = np.zeros(n)
    targets = order[nb_arg_sorted[valid_sorted]]
    np.add.at(indegree, targets, 1.0)

    nn_v = d_nn[valid]
    nb_v = d_nb[valid]
    with np.errstate(divide="ignore", invalid="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sd_ratio = float(np.std(nn_v, ddof=1) / np.std(nb_v, ddof=1)) if nn_v.size > 1 else math.nan
        mean_ratio = float(nn_v.mean() / nb_v.mean()) if nn_v.size else math.nan
        cor = float(np.corrcoef(nn_v, nb_v)[0, 1]) if nn_v.size > 1 else math.nan
        ratio = nb_v / nn_v
        cv = float(np.std(ratio, ddof=1) / ratio.mean()) if ratio.size > 1 else math.nan
        fit_cor = float(np.corrcoef(s.values, indegree)[0, 1]) if n > 1 else math.nan
    return {
        "nbc.nn_nb.sd_ratio": sd_ratio,
        "nbc.nn_nb.mean_ratio": mean_ratio,
        "nbc.nn_nb.cor": cor,
        "nbc.dist_ratio.coeff_var": cv,
        "nbc.nb_fitness.cor": fit_cor,
    }


# --- full battery ---------------------------------------------------------


def features_of_sample(s: SampleSet) -> np.ndarray:
    """All 56 features of one sample, NaN where undefined."""
    values = {}
    values.update(ela_distr(s))
    values.update(ela_level(s))
    values.update(ela_meta(s))
    values.update(dispersion(s))
    values.update(information_content(s))
    values.update(nearest_better(s))
    arr = np.array([values[name] for name in FEATURE_NAMES], dtype=float)
    arr[~np.isfinite(arr)] = np.nan
    return arr


def aggregate_replicates(rep_matrix: np.ndarray):
    """Median over finite replicate values per feature; 0.0 + flag if none."""
    agg = np.empty(rep_matrix.shape[1])
    flagged = []
    for j in range(rep_matrix.shape[1]):
        col = rep_matrix[:, j]
        finite = col[np.isfinite(col)]
        if finite.size:
            agg[j] = float(np.median(finite))
        else:
            agg[j] = 0.0
            flagged.append(FEATURE_NAMES[j])
    return agg, tuple(flagged)


def compute_features(
    inst: ProblemInstance, sample_size: int, reps: int, seed: int
) -> FeatureVector:
    """Replicated 56-feature computation with median aggregation."""
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    rep_rows = np.empty((reps, len(FEATURE_NAMES)))
    for rep in range(reps):
        rep_seed = stable_seed(seed, inst.fid, inst.iid, sample_size, rep)
        sample = uniform_sample(inst, sample_size, rep_seed)
        rep_rows[rep] = features_of_sample(sample)
    agg, flagged = aggregate_replicates(rep_rows)
    values = {name: float(v) for name, v in zip(FEATURE_NAMES, agg)}
    return FeatureVector((inst.fid, inst.iid, inst.dim), sample_size, values, flagged)
