"""Figure rendering for the report path.

Renders the three report views to PNG files next to the delimited outputs:
selector quality scatter (RMSE vs log-RMSE with the Pareto front and
baselines), selection-frequency heatmaps, and the per-algorithm regression
quality scatter for both target modes.
"""

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_APPROACH_COLORS = {"unscaled": "tab:blue", "log": "tab:red", "combined": "tab:green"}


def _logsafe(values, floor=1e-14):
    return np.maximum(np.asarray(values, dtype=float), floor)


def selector_scatter(selector_rows, baselines, budget, size, out_path):
    """RMSE vs log-RMSE of every model x approach, Pareto members ringed."""
    rows = [r for r in selector_rows if r["budget"] == budget and r["sample_size"] == size]
    if not rows:
        return None
    fig, ax = plt.subplots(figsize=(7, 5))
    for approach in ("unscaled", "log", "combined"):
        sub = [r for r in rows if r["approach"] == approach]
        if not sub:
            continue
        x = _logsafe([r["rmse"] for r in sub])
        y = [r["log_rmse"] for r in sub]
        ax.scatter(x, y, s=22, alpha=0.75, label=approach, color=_APPROACH_COLORS[approach])
        front = [r for r in sub if r["pareto"]]
        if front:
            ax.scatter(
                _logsafe([r["rmse"] for r in front]),
                [r["log_rmse"] for r in front],
                s=90,
                facecolors="none",
                edgecolors="black",
                linewidths=0.8,
            )
    base = baselines.get((budget, size), {})
    for key, marker in (("sbs_rmse", "s"), ("sbs_log_rmse", "D")):
        if key in base:
            b = base[key]
            ax.scatter(
                _logsafe([b["rmse"]]),
                [b["log_rmse"]],
                marker=marker,
                s=70,
                color="black",
                label=f"{key} ({b['algorithm']})",
            )
    cvbs = base.get("combined_vbs", [])
    if cvbs:
        ax.scatter(
            _logsafe([r["rmse"] for r in cvbs]),
            [r["log_rmse"] for r in cvbs],
            marker="x",
            s=30,
            color="gray",
            alpha=0.6,
            label="combined-VBS",
        )
    ax.set_xscale("log")
    ax.set_xlabel("RMSE")
    ax.set_ylabel("log-RMSE")
    ax.set_title(f"Selector quality, budget {budget}, sample size {size}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path


def frequency_heatmap(counts, algorithms, instances, approach, budget, size, out_path):
    """Selection counts of each algorithm per instance."""
    mat = np.zeros((len(algorithms), len(instances)))
    for i, algo in enumerate(algorithms):
        for j, (fid, iid) in enumerate(instances):
            mat[i, j] = counts.get((algo, fid, iid), 0)
    fig, ax = plt.subplots(figsize=(max(8, len(instances) * 0.08), 0.45 * len(algorithms) + 1.5))
    im = ax.imshow(mat, aspect="auto", cmap="viridis")
    ax.set_yticks(range(len(algorithms)))
    ax.set_yticklabels(algorithms, fontsize=7)
    ticks = [j for j, (fid, iid) in enumerate(instances) if iid == 1]
    ax.set_xticks(ticks)
    ax.set_xticklabels([str(instances[j][0]) for j in ticks], fontsize=6)
    ax.set_xlabel("function (first instance tick)")
    ax.set_title(f"Selection frequency, {approach}, budget {budget}, sample size {size}")
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path


def regression_scatter(matrix_rows, budget, size, out_path):
    """Per-algorithm model quality, unscaled vs log mode, one panel each."""
    rows = [r for r in matrix_rows if r["budget"] == budget and r["sample_size"] == size]
    algos = sorted({r["algorithm"] for r in rows})
    if not algos:
        return None
    ncol = min(4, len(algos))
    nrow = (len(algos) + ncol - 1) // ncol
    fig, axes = plt.subplots(nrow, ncol, figsize=(4 * ncol, 3.2 * nrow), squeeze=False)
    for k, algo in enumerate(algos):
        ax = axes[k // ncol][k % ncol]
        for mode, color in (("unscaled", "tab:blue"), ("log10", "tab:red")):
            sub = [r for r in rows if r["algorithm"] == algo and r["target_mode"] == mode]
            ax.scatter(
                _logsafe([r["rmse"] for r in sub]),
                [r["log_rmse"] for r in sub],
                s=16,
                alpha=0.75,
                color=color,
                label=mode,
            )
        ax.set_xscale("log")
        ax.set_title(algo, fontsize=9)
        ax.tick_params(labelsize=7)
        if k == 0:
            ax.legend(fontsize=7)
    for k in range(len(algos), nrow * ncol):
        axes[k // ncol][k % ncol].axis("off")
    fig.suptitle(f"Regression quality, budget {budget}, sample size {size}", fontsize=11)
    fig.supxlabel("RMSE", fontsize=9)
    fig.supylabel("log-RMSE", fontsize=9)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path


def render_all(out_dir, matrix_rows, report, combos):
    """All figures for the given (budget, sample_size) combos; returns paths."""
    fig_dir = os.path.join(out_dir, "figures")
    os.makedirs(fig_dir, exist_ok=True)
    paths = []
    for budget, size in combos:
        p = selector_scatter(
            report.selector_rows,
            report.baselines,
            budget,
            size,
            os.path.join(fig_dir, f"selectors_b{budget}_s{size}.png"),
        )
        if p:
            paths.append(p)
        for approach, counts in report.frequencies.get((budget, size), {}).items():
            paths.append(
                frequency_heatmap(
                    counts,
                    list(report.algorithms),
                    list(report.instances),
                    approach,
                    budget,
                    size,
                    os.path.join(fig_dir, f"frequency_{approach}_b{budget}_s{size}.png"),
                )
            )
        p = regression_scatter(
            matrix_rows, budget, size, os.path.join(fig_dir, f"regression_b{budget}_s{size}.png")
        )
        if p:
            paths.append(p)
    return paths
