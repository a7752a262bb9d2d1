import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elaselect import pipeline, selector
from elaselect.errors import EmptyPortfolio, IncompleteMatrix
from elaselect.selector import SelectorConfig


class TestSelectOps:
    def test_unscaled_argmin(self):
        assert selector.select_unscaled({"A": 2.0, "B": 0.5, "C": 7.0}) == "B"

    def test_unscaled_tie_alphabetical(self):
        assert selector.select_unscaled({"C": 1.0, "A": 1.0, "B": 1.0}) == "A"

    def test_single_algorithm(self):
        assert selector.select_unscaled({"Z": 9.0}) == "Z"

    def test_empty_portfolio(self):
        with pytest.raises(EmptyPortfolio):
            selector.select_unscaled({})

    def test_log_argmin(self):
        assert selector.select_log({"A": -3.0, "B": -1.0}) == "A"

    def test_log_matches_unscaled_under_monotone_map(self):
        logs = {"A": -3.0, "B": -1.0, "C": 2.0}
        raw = {a: 10.0**v for a, v in logs.items()}
        assert selector.select_log(logs) == selector.select_unscaled(raw)

    def test_combined_threshold_rule(self):
        cfg = SelectorConfig(threshold=0.9)
        unscaled = {"A": 0.1, "B": 5.0}
        fine_logs = {"A": 2.0, "B": -3.0}  # best predicted precision 1e-3 < 0.9
        assert selector.select_combined(unscaled, fine_logs, cfg) == "B"
        coarse_logs = {"A": 3.0, "B": 2.0}  # best predicted precision 100 >= 0.9
        assert selector.select_combined(unscaled, coarse_logs, cfg) == "A"

    def test_combined_extremes(self):
        unscaled = {"A": 0.1, "B": 5.0}
        logs = {"A": 2.0, "B": -3.0}
        assert selector.select_combined(unscaled, logs, SelectorConfig(0.0)) == "A"
        assert selector.select_combined(unscaled, logs, SelectorConfig(1e308)) == "B"


class TestBaselineOps:
    def test_vbs(self):
        assert selector.vbs({"A": 1e-8, "B": 3.0}) == "A"
        assert selector.vbs({"B": 1.0, "A": 1.0}) == "A"

    def test_combined_vbs_choice(self):
        truth = {"A": 2.0, "B": 0.1}
        assert selector.combined_vbs_choice("A", "B", truth) == "B"
        assert selector.combined_vbs_choice("A", "A", truth) == "A"

    def test_sbs_single(self):
        truths = {(1, 1): {"A": 1.0}}
        assert selector.sbs(truths, "rmse") == "A"

    def test_sbs_toy_rmse(self):
        # losses: A (0, 10), B (3, 3) -> rmse picks B
        truths = {
            (1, 1): {"A": 0.0, "B": 3.0},
            (1, 2): {"A": 10.0, "B": 3.0},
        }
        assert selector.sbs(truths, "rmse") == "B"

    def test_sbs_metric_swap_changes_winner(self):
        # A is fine-precision dominant but suffers one huge loss; B is steady
        truths = {
            (1, 1): {"A": 1e-8, "B": 1.0},
            (1, 2): {"A": 100.0, "B": 1.0},
        }
        assert selector.sbs(truths, "rmse") == "B"
        assert selector.sbs(truths, "log_rmse") == "A"


class TestParetoFront:
    def test_non_dominated_kept(self):
        pts = [("a", 1.0, 5.0), ("b", 5.0, 1.0), ("c", 4.0, 4.0)]
        assert set(selector.pareto_front(pts)) == {"a", "b", "c"}

    def test_dominated_removed(self):
        pts = [("a", 1.0, 1.0), ("b", 2.0, 2.0), ("c", 1.0, 2.0), ("d", 0.5, 3.0)]
        assert set(selector.pareto_front(pts)) == {"a", "d"}

    def test_single_point(self):
        assert selector.pareto_front([("only", 3.0, 3.0)]) == ["only"]

    def test_duplicates_both_kept(self):
        pts = [("a", 2.0, 2.0), ("b", 2.0, 2.0)]
        assert set(selector.pareto_front(pts)) == {"a", "b"}

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(
            st.tuples(st.integers(0, 6), st.integers(0, 6)), min_size=1, max_size=25
        )
    )
    def test_matches_quadratic_oracle(self, coords):
        pts = [(i, float(r), float(l)) for i, (r, l) in enumerate(coords)]

        def dominated(p, q):
            return q[1] <= p[1] and q[2] <= p[2] and (q[1] < p[1] or q[2] < p[2])

        expected = {
            p[0] for p in pts if not any(dominated(p, q) for q in pts if q[0] != p[0])
        }
        assert set(selector.pareto_front(pts)) == expected


def build_predictions(pred_table, truth_table, budget=250, size=250):
    """pred_table[mode][model][algo] -> {instance: prediction}."""
    cvs = []
    for mode, models in pred_table.items():
        for model_id, algos in models.items():
            for algo, by_inst in algos.items():
                instances = tuple(sorted(by_inst))
                trues = np.array([truth_table[(algo, f, i, budget)] for f, i in instances])
                target = pipeline.log_target(trues) if mode == "log10" else trues.copy()
                cvs.append(
                    pipeline.CvPredictions(
                        model_id,
                        mode,
                        algo,
                        budget,
                        size,
                        instances,
                        np.array([by_inst[k] for k in instances], dtype=float),
                        target,
                        trues,
                    )
                )
    return cvs


def toy_world(n_inst=4):
    instances = [(1, i) for i in range(1, n_inst + 1)]
    truth = {}
    for k, (f, i) in enumerate(instances):
        truth[("A", f, i, 250)] = 10.0 ** (-(k + 1))
        truth[("B", f, i, 250)] = 0.5 + k
    return instances, truth


class TestEvaluateSelectors:
    def test_oracle_predictions_reach_vbs(self):
        instances, truth = toy_world()
        pred = {"unscaled": {"RM1": {}}, "log10": {"RM1": {}}}
        for algo in ("A", "B"):
            pred["unscaled"]["RM1"][algo] = {
                inst: truth[(algo, inst[0], inst[1], 250)] for inst in instances
            }
            pred["log10"]["RM1"][algo] = {
                inst: math.log10(truth[(algo, inst[0], inst[1], 250)]) for inst in instances
            }
        cvs = build_predictions(pred, truth)
        report = selector.evaluate_selectors(cvs, truth)
        for row in report.selector_rows:
            assert row["rmse"] == 0.0 and row["log_rmse"] == 0.0

    def test_constant_predictions_pick_alphabetical_first(self):
        instances, truth = toy_world()
        pred = {"unscaled": {"RM1": {}}, "log10": {"RM1": {}}}
        for algo in ("A", "B"):
            pred["unscaled"]["RM1"][algo] = {inst: 1.0 for inst in instances}
            pred["log10"]["RM1"][algo] = {inst: 0.0 for inst in instances}
        cvs = build_predictions(pred, truth)
        report = selector.evaluate_selectors(cvs, truth)
        # all decisions are "A"; metrics equal A's constant-selection metrics
        a_vec = [truth[("A", f, i, 250)] for f, i in instances]
        best = [min(truth[("A", f, i, 250)], truth[("B", f, i, 250)]) for f, i in instances]
        for row in report.selector_rows:
            assert row["rmse"] == pytest.approx(pipeline.rmse(a_vec, best), rel=1e-12)
        for ap in selector.APPROACHES:
            decision = report.decisions[(250, 250, "RM1", ap)]
            assert set(decision.values()) == {"A"}

    def test_combined_vbs_dominates_both_approaches(self):
        rngs = np.random.default_rng(5)
        instances, truth = toy_world(5)
        pred = {"unscaled": {"RM1": {}}, "log10": {"RM1": {}}}
        for algo in ("A", "B"):
            pred["unscaled"]["RM1"][algo] = {
                inst: float(rngs.uniform(0, 2)) for inst in instances
            }
            pred["log10"]["RM1"][algo] = {
                inst: float(rngs.uniform(-8, 2)) for inst in instances
            }
        cvs = build_predictions(pred, truth)
        report = selector.evaluate_selectors(cvs, truth)
        cvbs = report.baselines[(250, 250)]["combined_vbs"][0]
        rows = {r["approach"]: r for r in report.selector_rows}
        for metric in ("rmse", "log_rmse"):
            assert cvbs[metric] <= min(rows["unscaled"][metric], rows["log"][metric]) + 1e-15

    def test_missing_prediction_raises(self):
        instances, truth = toy_world()
        pred = {"unscaled": {"RM1": {}}, "log10": {"RM1": {}}}
        pred["unscaled"]["RM1"]["A"] = {inst: 1.0 for inst in instances}
        pred["log10"]["RM1"]["A"] = {inst: 0.0 for inst in instances}
        pred["log10"]["RM1"]["B"] = {inst: 0.0 for inst in instances}
        cvs = build_predictions(pred, truth)
        with pytest.raises(IncompleteMatrix):
            selector.evaluate_selectors(cvs, truth)

    def test_sbs_baselines_and_frequencies(self):
        instances, truth = toy_world()
        rng = np.random.default_rng(0)
        pred = {"unscaled": {}, "log10": {}}
        for rm in ("RM1", "RM2"):
            pred["unscaled"][rm] = {}
            pred["log10"][rm] = {}
            for algo in ("A", "B"):
                pred["unscaled"][rm][algo] = {
                    inst: float(rng.uniform(0, 2)) for inst in instances
                }
                pred["log10"][rm][algo] = {
                    inst: float(rng.uniform(-8, 2)) for inst in instances
                }
        cvs = build_predictions(pred, truth)
        report = selector.evaluate_selectors(cvs, truth)
        base = report.baselines[(250, 250)]
        assert base["vbs"] == {"rmse": 0.0, "log_rmse": 0.0}
        for key in ("sbs_rmse", "sbs_log_rmse"):
            assert base[key]["rmse"] >= 0.0 and base[key]["log_rmse"] >= 0.0
        for ap, counts in report.frequencies[(250, 250)].items():
            for inst in instances:
                total = sum(
                    counts.get((a, inst[0], inst[1]), 0) for a in report.algorithms
                )
                assert total == 2  # two models scored

    def test_scaling_predictions_never_changes_decisions(self):
        instances, truth = toy_world()
        rng = np.random.default_rng(3)
        base_preds = {
            algo: {inst: float(rng.uniform(0.1, 5)) for inst in instances}
            for algo in ("A", "B")
        }
        for scale in (1.0, 10.0, 0.001):
            scaled = {a: {i: v * scale for i, v in m.items()} for a, m in base_preds.items()}
            for inst in instances:
                got = selector.select_unscaled({a: scaled[a][inst] for a in scaled})
                want = selector.select_unscaled({a: base_preds[a][inst] for a in base_preds})
                assert got == want


class TestThresholdSweep:
    def test_extreme_thresholds_reproduce_pure_approaches(self):
        instances, truth = toy_world(5)
        rng = np.random.default_rng(9)
        pred = {"unscaled": {"RM1": {}}, "log10": {"RM1": {}}}
        for algo in ("A", "B"):
            pred["unscaled"]["RM1"][algo] = {
                inst: float(rng.uniform(0, 2)) for inst in instances
            }
            pred["log10"]["RM1"][algo] = {
                inst: float(rng.uniform(-8, 2)) for inst in instances
            }
        cvs = build_predictions(pred, truth)
        low = selector.evaluate_selectors(cvs, truth, SelectorConfig(threshold=0.0))
        high = selector.evaluate_selectors(cvs, truth, SelectorConfig(threshold=1e308))
        assert low.decisions[(250, 250, "RM1", "combined")] == low.decisions[
            (250, 250, "RM1", "unscaled")
        ]
        assert high.decisions[(250, 250, "RM1", "combined")] == high.decisions[
            (250, 250, "RM1", "log")
        ]

    def test_sweep_rows(self):
        instances, truth = toy_world()
        pred = {"unscaled": {"RM1": {}}, "log10": {"RM1": {}}}
        for algo in ("A", "B"):
            pred["unscaled"]["RM1"][algo] = {inst: 1.0 for inst in instances}
            pred["log10"]["RM1"][algo] = {inst: -1.0 for inst in instances}
        cvs = build_predictions(pred, truth)
        rows = selector.threshold_sweep(cvs, truth, [0.0, 0.9, 1e6])
        assert len(rows) == 3
        assert {r["threshold"] for r in rows} == {0.0, 0.9, 1e6}


def test_selection_frequency_counts():
    d1 = {(1, 1): "HCMA", (1, 2): "MCS"}
    d2 = {(1, 1): "HCMA", (1, 2): "HCMA"}
    counts = selector.selection_frequency([d1, d2])
    assert counts[("HCMA", 1, 1)] == 2
    assert counts[("MCS", 1, 2)] == 1
    assert counts[("HCMA", 1, 2)] == 1
