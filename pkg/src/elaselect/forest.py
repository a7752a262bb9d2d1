"""From-scratch CART regression trees and the 30-model hyper-parameter grid.

Trees grow until a node has fewer than `minsplit` rows or zero impurity;
there is no depth cap.  Split search scans all midpoints of sorted distinct
feature values and is fully vectorized per node.  Ties are broken by lowest
feature index, then lowest threshold, so fitting is deterministic.

Families: single DecisionTree (crit in {mse, mae, friedman_mse}), and two
bootstrap ensembles, RandomForest and BaggingDT (crit in {mse, mae}), both
considering every feature at every split.  Leaf prediction is the mean of
the training targets that reached the leaf, for every criterion.
"""

from dataclasses import dataclass, replace

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is optional
    njit = None

from .errors import DimensionError, EmptyTrainingSet, NonFiniteInput
from .seeding import stable_seed

FAMILIES = ("DecisionTree", "RandomForest", "BaggingDT")
DT_CRITERIA = ("mse", "mae", "friedman_mse")
ENSEMBLE_CRITERIA = ("mse", "mae")
MINSPLIT_GRID = (4, 5)
NEST_GRID = (3, 6, 9)


@dataclass(frozen=True)
class RegressionModelConfig:
    id: str
    family: str
    crit: str
    minsplit: int
    nest: int | None
    seed: int

    @property
    def label(self) -> str:
        bits = [self.family, f"crit.{self.crit}", f"minsplit.{self.minsplit}"]
        if self.nest is not None:
            bits.append(f"nest.{self.nest}")
        return "_".join(bits)


class Tree:
    """Binary regression tree stored as parallel node arrays (preorder)."""

    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self):
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.value = []

    def add_leaf(self, value: float) -> int:
        idx = len(self.feature)
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(value)
        return idx

    def add_split(self, feature: int, threshold: float) -> int:
        idx = len(self.feature)
        self.feature.append(feature)
        self.threshold.append(threshold)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return idx

    def predict_one(self, x) -> float:
        node = 0
        while self.feature[node] >= 0:
            if x[self.feature[node]] <= self.threshold[node]:
                node = self.left[node]
            else:
                node = self.right[node]
        return self.value[node]

    def node_dict(self, node: int = 0) -> dict:
        if self.feature[node] < 0:
            return {"value": self.value[node]}
        return {
            "feature": self.feature[node],
            "threshold": self.threshold[node],
            "left": self.node_dict(self.left[node]),
            "right": self.node_dict(self.right[node]),
        }


@dataclass(frozen=True)
class TrainedModel:
    config: RegressionModelConfig
    trees: tuple
    feature_count: int


def enumerate_configs(seed: int) -> list[RegressionModelConfig]:
    """The 30 grid configurations, RM1..RM30.

    Ids are assigned in grid order (crit, minsplit, nest) within each family:
    RM1-6 DecisionTree, RM7-18 RandomForest, RM19-30 BaggingDT.
    """
    configs = []

    def add(family, crit, minsplit, nest):
        rm = f"RM{len(configs) + 1}"
        configs.append(
            RegressionModelConfig(
                rm, family, crit, minsplit, nest, stable_seed("model", seed, rm)
            )
        )

    for crit in DT_CRITERIA:
        for minsplit in MINSPLIT_GRID:
            add("DecisionTree", crit, minsplit, None)
    for family in ("RandomForest", "BaggingDT"):
        for crit in ENSEMBLE_CRITERIA:
            for minsplit in MINSPLIT_GRID:
                for nest in NEST_GRID:
                    add(family, crit, minsplit, nest)
    return configs


# --- split search ---------------------------------------------------------


def _prefix_suffix_sad(ys: np.ndarray):
    """Sum of absolute deviations from the median for every prefix/suffix.

    ys has one row per feature, columns in that feature's sort order.
    Returns (sad_prefix, sad_suffix), each (p, n-1): column k-1 holds the SAD
    of the first k values (respectively the last n-k values).

    Uses the identity SAD = (sum of the top floor(s/2) values) - (sum of the
    bottom floor(s/2) values) for a set of size s, which needs only one sort
    of each feature row plus cumulative sums over membership masks.
    """
    p, n = ys.shape
    order = np.argsort(ys, axis=1, kind="stable")  # original position of j-th smallest
    sv = np.take_along_axis(ys, order, axis=1)
    ks = np.arange(1, n)

    member = order[:, None, :] < ks[None, :, None]  # (p, n-1, n)
    cs_v = np.cumsum(sv[:, None, :] * member, axis=2)
    cs_c = np.cumsum(member, axis=2)

    total_v = np.cumsum(sv, axis=1)[:, None, -1]
    cs_v_suf = np.cumsum(sv, axis=1)[:, None, :] - cs_v
    cs_c_suf = (np.arange(1, n + 1))[None, None, :] - cs_c

    rows = np.arange(p)[:, None]
    kcols = np.arange(n - 1)[None, :]

    def bottom_sum(csv, csc, m):
        # sum of the m smallest members per (feature, k); m is (n-1,)
        j = (csc < m[None, :, None]).sum(axis=2)
        picked = csv[rows, kcols, j]
        return np.where(m[None, :] == 0, 0.0, picked)

    m_pre = ks // 2
    m_pre_hi = (ks + 1) // 2
    pre_total = cs_v[:, :, -1]
    sad_pre = pre_total - bottom_sum(cs_v, cs_c, m_pre) - bottom_sum(cs_v, cs_c, m_pre_hi)

    sizes_suf = n - ks
    m_suf = sizes_suf // 2
    m_suf_hi = (sizes_suf + 1) // 2
    suf_total = total_v - pre_total
    sad_suf = (
        suf_total
        - bottom_sum(cs_v_suf, cs_c_suf, m_suf)
        - bottom_sum(cs_v_suf, cs_c_suf, m_suf_hi)
    )
    return sad_pre, sad_suf


def _mae_costs_py(ys: np.ndarray) -> np.ndarray:
    sad_pre, sad_suf = _prefix_suffix_sad(ys)
    return sad_pre + sad_suf


if njit is not None:

    @njit(cache=True)
    def _mae_costs_jit(ys):  # pragma: no cover - exercised via _mae_costs
        p, n = ys.shape
        cost = np.zeros((p, n - 1))
        buf = np.empty(n)
        sad = np.empty(n - 1)
        for f in range(p):
            for direction in range(2):
                row = ys[f] if direction == 0 else ys[f][::-1]
                buf[0] = row[0]
                sad[0] = 0.0
                for k in range(2, n):
                    v = row[k - 1]
                    lo, hi = 0, k - 1
                    while lo < hi:
                        mid = (lo + hi) // 2
                        if buf[mid] < v:
                            lo = mid + 1
                        else:
                            hi = mid
                    for j in range(k - 1, lo, -1):
                        buf[j] = buf[j - 1]
                    buf[lo] = v
                    # SAD from the median == sum of pairwise top-bottom gaps
                    s = 0.0
                    for j in range(k // 2):
                        s += buf[k - 1 - j] - buf[j]
                    sad[k - 1] = s
                if direction == 0:
                    for k in range(1, n):
                        cost[f, k - 1] += sad[k - 1]
                else:
                    for k in range(1, n):
                        cost[f, k - 1] += sad[n - k - 1]
        return cost

    _mae_costs = _mae_costs_jit
else:
    _mae_costs = _mae_costs_py


# Candidate costs within this relative band of the minimum count as exact
# ties (sums of deviations round differently depending on summation order);
# ties resolve to the lowest feature index, then the lowest threshold.
TIE_RTOL = 1e-9


def _split_costs(xs: np.ndarray, ys: np.ndarray, crit: str):
    """Cost of every candidate split (lower is better), inf where invalid.

    Returns (cost, scale) where scale is the node impurity magnitude used to
    turn TIE_RTOL into an absolute tie band.
    """
    p, n = ys.shape
    k = np.arange(1, n, dtype=float)
    m = n - k
    if crit in ("mse", "friedman_mse"):
        c1 = np.cumsum(ys, axis=1)[:, :-1]
        total1 = np.sum(ys, axis=1, keepdims=True)
        c2 = np.cumsum(ys * ys, axis=1)[:, :-1]
        total2 = np.sum(ys * ys, axis=1, keepdims=True)
        scale = float((total2[0, 0] - total1[0, 0] ** 2 / n))
        if crit == "mse":
            cost = (c2 - c1**2 / k) + ((total2 - c2) - (total1 - c1) ** 2 / m)
        else:
            mean_l = c1 / k
            mean_r = (total1 - c1) / m
            cost = -(k * m / n) * (mean_l - mean_r) ** 2
    elif crit == "mae":
        cost = _mae_costs(ys)
        y0 = ys[0]
        scale = float(np.abs(y0 - np.median(y0)).sum())
    else:
        raise ValueError(f"unknown split criterion: {crit}")
    cost[xs[:, :-1] >= xs[:, 1:]] = np.inf
    return cost, abs(scale)


def best_split(xs: np.ndarray, ys: np.ndarray, crit: str):
    """First (feature, left-size) pair attaining the minimal split cost.

    Returns None when no feature has two distinct values.
    """
    cost, scale = _split_costs(xs, ys, crit)
    gmin = cost.min()
    if not np.isfinite(gmin):
        return None
    tied = cost <= gmin + TIE_RTOL * max(abs(gmin), scale)
    flat = int(np.argmax(tied))  # first True in (feature, threshold) order
    feat, pos = divmod(flat, cost.shape[1])
    return feat, pos + 1


def _grow(tree, x, y, sort_idx, minsplit, crit):
    rows = sort_idx[0]
    n = rows.size
    y_node = y[np.sort(rows)]  # canonical order, so leaf means are path-independent
    mean = float(y_node.mean())
    if n < minsplit or np.ptp(y_node) == 0.0:
        return tree.add_leaf(mean)

    xs = x[sort_idx, np.arange(sort_idx.shape[0])[:, None]]
    ys = y[sort_idx]
    found = best_split(xs, ys, crit)
    if found is None:
        return tree.add_leaf(mean)
    feat, k = found

    a, b = xs[feat, k - 1], xs[feat, k]
    threshold = (a + b) / 2.0
    if threshold >= b:  # midpoint collapsed onto the upper value
        threshold = a

    left_rows = sort_idx[feat, :k]
    in_left = np.zeros(x.shape[0], dtype=bool)
    in_left[left_rows] = True
    goes_left = in_left[sort_idx]
    sort_left = sort_idx[goes_left].reshape(sort_idx.shape[0], k)
    sort_right = sort_idx[~goes_left].reshape(sort_idx.shape[0], n - k)

    node = tree.add_split(feat, float(threshold))
    tree.left[node] = _grow(tree, x, y, sort_left, minsplit, crit)
    tree.right[node] = _grow(tree, x, y, sort_right, minsplit, crit)
    return node


def _fit_tree(x, y, row_idx, minsplit, crit) -> Tree:
    tree = Tree()
    sub_x = x[row_idx]
    sub_y = y[row_idx]
    sort_idx = np.argsort(sub_x, axis=0, kind="stable").T
    _grow(tree, sub_x, sub_y, sort_idx, minsplit, crit)
    return tree


def fit(
    config: RegressionModelConfig,
    x: np.ndarray,
    y: np.ndarray,
    bootstrap: bool = True,
) -> TrainedModel:
    """Fit the configured model.  `bootstrap=False` is a test hook that makes
    ensemble members train on the full data."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if n == 0:
        raise EmptyTrainingSet("cannot fit on zero rows")
    if y.shape[0] != n:
        raise DimensionError(f"x has {n} rows but y has {y.shape[0]}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise NonFiniteInput("training data contains NaN or infinite entries")
    if config.family == "DecisionTree":
        if config.crit not in DT_CRITERIA:
            raise ValueError(f"unknown criterion {config.crit!r}")
        trees = (_fit_tree(x, y, np.arange(n), config.minsplit, config.crit),)
    elif config.family in ("RandomForest", "BaggingDT"):
        if config.crit not in ENSEMBLE_CRITERIA:
            raise ValueError(
                f"{config.family} supports criteria {ENSEMBLE_CRITERIA}, got {config.crit!r}"
            )
        members = []
        for i in range(config.nest):
            if bootstrap:
                rng = np.random.default_rng(config.seed + i)
                row_idx = np.sort(rng.integers(0, n, n))
            else:
                row_idx = np.arange(n)
            members.append(_fit_tree(x, y, row_idx, config.minsplit, config.crit))
        trees = tuple(members)
    else:
        raise ValueError(f"unknown family {config.family!r}")
    return TrainedModel(config, trees, x.shape[1])


def predict(model: TrainedModel, x: np.ndarray) -> float:
    """Prediction for one input vector (ensemble mean for ensembles)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != model.feature_count:
        raise DimensionError(
            f"expected a vector of length {model.feature_count}, got {x.shape}"
        )
    return float(np.mean([t.predict_one(x) for t in model.trees]))


def predict_many(model: TrainedModel, xs: np.ndarray) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 2 or xs.shape[1] != model.feature_count:
        raise DimensionError(
            f"expected points of dimension {model.feature_count}, got {xs.shape}"
        )
    return np.array([predict(model, row) for row in xs])


def with_seed(config: RegressionModelConfig, *parts) -> RegressionModelConfig:
    """Config with a seed derived from its own seed plus extra parts."""
    return replace(config, seed=stable_seed(config.seed, *parts))


def model_to_dict(model: TrainedModel) -> dict:
    """Audit serialization: nested node records per tree."""
    cfg = model.config
    return {
        "config": {
            "id": cfg.id,
            "family": cfg.family,
            "crit": cfg.crit,
            "minsplit": cfg.minsplit,
            "nest": cfg.nest,
            "seed": cfg.seed,
        },
        "feature_count": model.feature_count,
        "trees": [t.node_dict() for t in model.trees],
    }
