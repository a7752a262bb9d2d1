"""Algorithm selectors, baselines, Pareto fronts and selection frequencies.

Three selectors per regression model: unscaled (argmin of raw-precision
predictions), log (argmin of log-precision predictions) and combined (log
recommendation when its predicted precision is below the threshold, unscaled
otherwise).  Baselines: the virtual best solver (per-instance oracle), the
single best solver per metric, and the per-model combined-VBS that takes the
truly better of the two approach recommendations.

Selector quality is RMSE / log-RMSE between the chosen algorithms' true
precisions and the per-instance best precisions, pooled over all instances.
"""

from collections import defaultdict
from dataclasses import dataclass

from .errors import EmptyPortfolio, IncompleteMatrix
from .pipeline import CLAMP, log_rmse, rmse

APPROACHES = ("unscaled", "log", "combined")
DEFAULT_THRESHOLD = 0.9


@dataclass(frozen=True)
class SelectorConfig:
    threshold: float = DEFAULT_THRESHOLD
    clamp: float = CLAMP


def _argmin_alpha(preds: dict) -> str:
    if not preds:
        raise EmptyPortfolio("no algorithms to select from")
    return min(sorted(preds), key=lambda a: preds[a])


def select_unscaled(preds: dict) -> str:
    """Algorithm with the best (lowest) predicted raw precision."""
    return _argmin_alpha(preds)


def select_log(preds: dict) -> str:
    """Algorithm with the best predicted log10 precision."""
    return _argmin_alpha(preds)


def select_combined(unscaled_preds: dict, log_preds: dict, cfg: SelectorConfig) -> str:
    """Log recommendation for fine-grained predicted precisions, else unscaled."""
    a_log = select_log(log_preds)
    if 10.0 ** log_preds[a_log] < cfg.threshold:
        return a_log
    return select_unscaled(unscaled_preds)


def vbs(truth: dict) -> str:
    """Per-instance oracle: the truly best algorithm."""
    return _argmin_alpha(truth)


def combined_vbs_choice(unscaled_choice: str, log_choice: str, truth: dict) -> str:
    """The better (by true precision) of the two approach recommendations."""
    pair = {a: truth[a] for a in (unscaled_choice, log_choice)}
    return _argmin_alpha(pair)


def sbs(truths: dict, metric: str, clamp: float = CLAMP) -> str:
    """Single best solver: constant selection minimizing the pooled metric.

    `truths` maps instance -> {algorithm: true precision}.
    """
    instances = sorted(truths)
    if not instances:
        raise EmptyPortfolio("no instances")
    algos = sorted(truths[instances[0]])
    if not algos:
        raise EmptyPortfolio("no algorithms")
    best = [min(truths[i].values()) for i in instances]

    def score(a):
        vec = [truths[i][a] for i in instances]
        return rmse(vec, best) if metric == "rmse" else log_rmse(vec, best, clamp)

    return _argmin_alpha({a: score(a) for a in algos})


def pareto_front(points) -> list:
    """Labels of points not strictly dominated (min-min in both coordinates).

    `points` is a sequence of (label, rmse, log_rmse).  A point is dominated
    when another point is <= in both coordinates and < in at least one;
    duplicated points therefore never dominate each other.
    """
    pts = list(points)
    order = sorted(range(len(pts)), key=lambda i: (pts[i][1], pts[i][2]))
    kept = []
    best_l = float("inf")  # min log_rmse among strictly smaller rmse
    i = 0
    while i < len(order):
        j = i
        r = pts[order[i]][1]
        while j < len(order) and pts[order[j]][1] == r:
            j += 1
        group = order[i:j]
        group_min_l = min(pts[g][2] for g in group)
        for g in group:
            l = pts[g][2]
            if best_l <= l or l > group_min_l:
                continue
            kept.append(pts[g][0])
        best_l = min(best_l, group_min_l)
        i = j
    return kept


@dataclass(frozen=True)
class SelectorReport:
    """All selector metrics, baselines and frequencies of one evaluation."""

    selector_rows: list  # dicts: model_id, approach, budget, sample_size, rmse, log_rmse, pareto
    baselines: dict  # (budget, sample_size) -> baseline dict
    frequencies: dict  # (budget, sample_size) -> {approach: {(algo, fid, iid): count}}
    decisions: dict  # (budget, sample_size, model_id, approach) -> {instance: algorithm}
    algorithms: tuple
    instances: tuple
    model_ids: tuple
    threshold: float


def _group_predictions(predictions):
    grouped = defaultdict(dict)
    for cv in predictions:
        key = (cv.budget, cv.sample_size)
        grouped[key].setdefault(cv.model_id, {})[(cv.target_mode, cv.algorithm)] = cv
    return grouped


def _model_order(model_id: str):
    return int(model_id[2:]) if model_id.startswith("RM") else 10**9


def evaluate_selectors(
    predictions: list, truths: dict, cfg: SelectorConfig = SelectorConfig()
) -> SelectorReport:
    """Score every model's three selectors plus baselines.

    `predictions`: CvPredictions over models x modes x algorithms.
    `truths`: (algorithm, fid, iid, budget) -> true precision.
    """
    grouped = _group_predictions(predictions)
    selector_rows = []
    baselines = {}
    frequencies = {}
    decisions = {}
    all_algos = sorted({a for (_, _), g in grouped.items() for m in g.values() for (_, a) in m})
    all_instances = set()
    all_models = set()

    for (budget, size) in sorted(grouped):
        by_model = grouped[(budget, size)]
        model_ids = sorted(by_model, key=_model_order)
        all_models.update(model_ids)
        algos = sorted({a for m in by_model.values() for (_, a) in m})
        instances = sorted(
            {inst for m in by_model.values() for cv in m.values() for inst in cv.instances}
        )
        all_instances.update(instances)

        truth_by_inst = {}
        for inst in instances:
            row = {}
            for a in algos:
                key = (a, inst[0], inst[1], budget)
                if key not in truths:
                    raise IncompleteMatrix(f"missing true precision for {key}")
                row[a] = truths[key]
            truth_by_inst[inst] = row
        best_vec = [min(truth_by_inst[i].values()) for i in instances]

        freq = {ap: defaultdict(int) for ap in APPROACHES}
        combined_vbs_rows = []
        for model_id in model_ids:
            tables = by_model[model_id]
            pred_by_inst = {"unscaled": {}, "log10": {}}
            for mode in ("unscaled", "log10"):
                for a in algos:
                    cv = tables.get((mode, a))
                    if cv is None:
                        raise IncompleteMatrix(
                            f"model {model_id}: no {mode} predictions for {a} "
                            f"(budget {budget}, sample size {size})"
                        )
                    for inst, pred in zip(cv.instances, cv.predicted):
                        pred_by_inst[mode].setdefault(inst, {})[a] = pred
            for mode in ("unscaled", "log10"):
                for inst in instances:
                    got = pred_by_inst[mode].get(inst, {})
                    if sorted(got) != algos:
                        raise IncompleteMatrix(
                            f"model {model_id}: {mode} predictions incomplete on {inst}"
                        )

            chosen = {ap: [] for ap in APPROACHES}
            cvbs_vals = []
            for inst in instances:
                u = select_unscaled(pred_by_inst["unscaled"][inst])
                l = select_log(pred_by_inst["log10"][inst])
                c = select_combined(
                    pred_by_inst["unscaled"][inst], pred_by_inst["log10"][inst], cfg
                )
                for ap, algo in (("unscaled", u), ("log", l), ("combined", c)):
                    chosen[ap].append(truth_by_inst[inst][algo])
                    freq[ap][(algo, inst[0], inst[1])] += 1
                    decisions.setdefault((budget, size, model_id, ap), {})[inst] = algo
                cv_best = combined_vbs_choice(u, l, truth_by_inst[inst])
                cvbs_vals.append(truth_by_inst[inst][cv_best])

            for ap in APPROACHES:
                selector_rows.append(
                    {
                        "model_id": model_id,
                        "approach": ap,
                        "budget": budget,
                        "sample_size": size,
                        "rmse": rmse(chosen[ap], best_vec),
                        "log_rmse": log_rmse(chosen[ap], best_vec, cfg.clamp),
                    }
                )
            combined_vbs_rows.append(
                {
                    "model_id": model_id,
                    "rmse": rmse(cvbs_vals, best_vec),
                    "log_rmse": log_rmse(cvbs_vals, best_vec, cfg.clamp),
                }
            )

        truths_nested = {i: truth_by_inst[i] for i in instances}
        sbs_rmse_algo = sbs(truths_nested, "rmse", cfg.clamp)
        sbs_log_algo = sbs(truths_nested, "log_rmse", cfg.clamp)

        def algo_metrics(algo):
            vec = [truth_by_inst[i][algo] for i in instances]
            return {
                "rmse": rmse(vec, best_vec),
                "log_rmse": log_rmse(vec, best_vec, cfg.clamp),
            }

        baselines[(budget, size)] = {
            "vbs": {"rmse": 0.0, "log_rmse": 0.0},
            "sbs_rmse": {"algorithm": sbs_rmse_algo, **algo_metrics(sbs_rmse_algo)},
            "sbs_log_rmse": {"algorithm": sbs_log_algo, **algo_metrics(sbs_log_algo)},
            "combined_vbs": combined_vbs_rows,
            "per_algorithm": {a: algo_metrics(a) for a in algos},
        }
        frequencies[(budget, size)] = {ap: dict(freq[ap]) for ap in APPROACHES}

    # Pareto membership within each (budget, sample_size) over model x approach
    flags = {}
    for (budget, size) in sorted(grouped):
        pts = [
            ((r["model_id"], r["approach"]), r["rmse"], r["log_rmse"])
            for r in selector_rows
            if r["budget"] == budget and r["sample_size"] == size
        ]
        front = set(pareto_front(pts))
        for r in selector_rows:
            if r["budget"] == budget and r["sample_size"] == size:
                flags[id(r)] = (r["model_id"], r["approach"]) in front
    for r in selector_rows:
        r["pareto"] = flags[id(r)]

    return SelectorReport(
        selector_rows,
        baselines,
        frequencies,
        decisions,
        tuple(all_algos),
        tuple(sorted(all_instances)),
        tuple(sorted(all_models, key=_model_order)),
        cfg.threshold,
    )


def selection_frequency(decisions_by_model: list) -> dict:
    """Counts of chosen algorithm per instance over a set of decision maps."""
    counts = defaultdict(int)
    for decision in decisions_by_model:
        for inst, algo in decision.items():
            counts[(algo, inst[0], inst[1])] += 1
    return dict(counts)


def threshold_sweep(predictions: list, truths: dict, thresholds) -> list:
    """Combined-selector metrics per model for each candidate threshold."""
    rows = []
    for t in thresholds:
        report = evaluate_selectors(predictions, truths, SelectorConfig(threshold=t))
        for r in report.selector_rows:
            if r["approach"] == "combined":
                rows.append({**r, "threshold": t})
    return rows
