"""Command-line pipeline driver.

Subcommands mirror the pipeline stages: `features`, `runs` (or `ingest`),
`train`, `select`, `report`, and `all` to chain everything.  A RunConfig is
assembled from defaults, an optional JSON config file and explicit flags (in
that order of precedence); its hash and the master seed are stamped into
every output so results are attributable to an exact configuration.
"""

import hashlib
import json
import multiprocessing
import os
from dataclasses import asdict, dataclass

import click

from . import bbob, ela, figures, pipeline, portfolio, selector, tables
from .errors import ElaSelectError
from .forest import enumerate_configs

DEFAULT_OUT = "elaselect-out"
OUT_ENVVAR = "ELASELECT_OUT"


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    dim: int = 5
    fids: tuple = tuple(range(1, 25))
    iids: tuple = (1, 2, 3, 4, 5)
    sample_sizes: tuple = ()  # empty -> (50*dim, 400*dim)
    reps: int = 50
    budgets: tuple = (250, 500, 1000)
    threshold: float = selector.DEFAULT_THRESHOLD
    clamp: float = pipeline.CLAMP
    solvers: tuple = tuple(s.name for s in portfolio.default_portfolio(0))
    out: str = DEFAULT_OUT
    jobs: int = 1

    @property
    def effective_sample_sizes(self):
        return self.sample_sizes or (50 * self.dim, 400 * self.dim)

    def instances(self):
        return [(fid, iid) for fid in self.fids for iid in self.iids]


_SEMANTIC_FIELDS = (
    "seed",
    "dim",
    "fids",
    "iids",
    "sample_sizes",
    "reps",
    "budgets",
    "threshold",
    "clamp",
    "solvers",
)


def config_hash(cfg: RunConfig) -> str:
    payload = {k: getattr(cfg, k) for k in _SEMANTIC_FIELDS}
    payload["sample_sizes"] = cfg.effective_sample_sizes
    blob = json.dumps(payload, sort_keys=True, default=list)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _stamp(cfg: RunConfig) -> str:
    return f"config_hash={config_hash(cfg)} seed={cfg.seed}"


def _paths(cfg: RunConfig) -> dict:
    return {
        "features": os.path.join(cfg.out, "features.csv"),
        "performance": os.path.join(cfg.out, "performance.csv"),
        "predictions": os.path.join(cfg.out, "predictions.csv"),
        "selectors": os.path.join(cfg.out, "selectors.csv"),
        "report": os.path.join(cfg.out, "report.json"),
    }


def _require(path, producer):
    if not os.path.exists(path):
        raise click.ClickException(
            f"{path} not found; run the `{producer}` command first"
        )


def _pmap(fn, tasks, jobs):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with multiprocessing.Pool(min(jobs, len(tasks))) as pool:
        return pool.map(fn, tasks, chunksize=max(1, len(tasks) // (jobs * 4)))


# --- stage implementations --------------------------------------------------


def _feature_task(args):
    fid, iid, dim, size, reps, seed = args
    inst = bbob.make_instance(fid, iid, dim)
    return ela.compute_features(inst, size, reps, seed)


def run_features(cfg: RunConfig) -> str:
    os.makedirs(cfg.out, exist_ok=True)
    tasks = [
        (fid, iid, cfg.dim, size, cfg.reps, cfg.seed)
        for fid, iid in cfg.instances()
        for size in cfg.effective_sample_sizes
    ]
    vectors = _pmap(_feature_task, tasks, cfg.jobs)
    flagged = [(v.instance, v.sample_size, v.flagged) for v in vectors if v.flagged]
    for inst, size, names in flagged:
        click.echo(f"warning: imputed features for {inst} at size {size}: {names}", err=True)
    path = _paths(cfg)["features"]
    tables.write_features(path, vectors, cfg.reps, _stamp(cfg))
    if len(vectors) != len(tasks):
        raise click.ClickException("feature computation incomplete")
    return path


def _solver_task(args):
    spec, fid, iid, dim, budgets = args
    inst = bbob.make_instance(fid, iid, dim)
    return portfolio.run_solver(spec, inst, max(budgets), sorted(budgets))


def _portfolio_specs(cfg: RunConfig):
    by_name = {s.name: s for s in portfolio.default_portfolio(cfg.seed)}
    unknown = [name for name in cfg.solvers if name not in by_name]
    if unknown:
        raise click.ClickException(
            f"unknown solvers {unknown}; available: {sorted(by_name)}"
        )
    return [by_name[name] for name in sorted(cfg.solvers)]


def run_runs(cfg: RunConfig) -> str:
    os.makedirs(cfg.out, exist_ok=True)
    specs = _portfolio_specs(cfg)
    tasks = [
        (spec, fid, iid, cfg.dim, tuple(cfg.budgets))
        for spec in specs
        for fid, iid in cfg.instances()
    ]
    results = _pmap(_solver_task, tasks, cfg.jobs)
    records = portfolio.sort_records([r for chunk in results for r in chunk])
    expected = len(specs) * len(cfg.instances()) * len(cfg.budgets)
    if len(records) != expected:
        raise click.ClickException(
            f"expected {expected} performance records, produced {len(records)}"
        )
    path = _paths(cfg)["performance"]
    tables.write_performance(path, records, _stamp(cfg))
    return path


def run_ingest(cfg: RunConfig, source: str) -> str:
    os.makedirs(cfg.out, exist_ok=True)
    records = portfolio.ingest_performance(source)
    path = _paths(cfg)["performance"]
    tables.write_performance(path, records, _stamp(cfg))
    click.echo(f"ingested {len(records)} records from {source}")
    return path


def _train_task(args):
    config, ds, folds = args
    return pipeline.cross_validate(config, ds, folds)


def training_tasks(features, records, algorithms, budgets, sizes, configs, clamp):
    """One (model config, dataset, folds) task per model x algorithm x budget
    x sample size x target mode, in canonical order."""
    tasks = []
    for algo in algorithms:
        for budget in sorted(budgets):
            for size in sizes:
                for mode in pipeline.TARGET_MODES:
                    ds = pipeline.build_dataset(
                        features[size], records, algo, budget, size, mode, clamp
                    )
                    folds = pipeline.make_folds(ds.instances)
                    for config in configs:
                        tasks.append((config, ds, folds))
    return tasks


def _load_inputs(cfg: RunConfig):
    paths = _paths(cfg)
    _require(paths["features"], "features")
    _require(paths["performance"], "runs (or ingest)")
    features = tables.read_features(paths["features"])
    records = [
        r for r in portfolio.ingest_performance(paths["performance"]) if r.dim == cfg.dim
    ]
    return features, records


def run_train(cfg: RunConfig) -> str:
    features, records = _load_inputs(cfg)
    algorithms = sorted({r.algorithm for r in records})
    if not algorithms:
        raise click.ClickException("performance table is empty; nothing to train on")
    configs = enumerate_configs(cfg.seed)
    sizes = [s for s in cfg.effective_sample_sizes if s in features]
    missing = [s for s in cfg.effective_sample_sizes if s not in features]
    if missing:
        raise click.ClickException(
            f"feature table lacks sample sizes {missing}; re-run `features`"
        )
    try:
        tasks = training_tasks(features, records, algorithms, cfg.budgets, sizes, configs, cfg.clamp)
    except ElaSelectError as exc:
        raise click.ClickException(str(exc))
    predictions = _pmap(_train_task, tasks, cfg.jobs)
    path = _paths(cfg)["predictions"]
    tables.write_predictions(path, predictions, _stamp(cfg))
    if len(predictions) != len(tasks):
        raise click.ClickException("training incomplete")
    return path


def _load_selector_report(cfg: RunConfig):
    paths = _paths(cfg)
    _require(paths["predictions"], "train")
    _require(paths["performance"], "runs (or ingest)")
    records = [
        r for r in portfolio.ingest_performance(paths["performance"]) if r.dim == cfg.dim
    ]
    truths = tables.truths_from_records(records)
    predictions = tables.read_predictions(paths["predictions"], truths)
    scfg = selector.SelectorConfig(threshold=cfg.threshold, clamp=cfg.clamp)
    try:
        report = selector.evaluate_selectors(predictions, truths, scfg)
    except ElaSelectError as exc:
        raise click.ClickException(str(exc))
    return predictions, truths, report


def run_select(cfg: RunConfig, threshold_grid=()) -> list:
    predictions, truths, report = _load_selector_report(cfg)
    stamp = _stamp(cfg)
    out_paths = [_paths(cfg)["selectors"]]
    tables.write_selectors(out_paths[0], report.selector_rows, stamp)
    for (budget, size), freq in sorted(report.frequencies.items()):
        p = os.path.join(cfg.out, f"frequency_b{budget}_s{size}.csv")
        tables.write_frequency(
            p, freq, list(report.algorithms), list(report.instances), stamp
        )
        out_paths.append(p)
    if threshold_grid:
        rows = selector.threshold_sweep(predictions, truths, threshold_grid)
        p = os.path.join(cfg.out, "threshold_sweep.csv")
        fh, w = tables._open_writer(p, stamp)
        with fh:
            w.writerow(["model_id", "threshold", "budget", "sample_size", "rmse", "log_rmse"])
            for r in rows:
                w.writerow(
                    [
                        r["model_id"],
                        tables.fmt(r["threshold"]),
                        r["budget"],
                        r["sample_size"],
                        tables.fmt(r["rmse"]),
                        tables.fmt(r["log_rmse"]),
                    ]
                )
        out_paths.append(p)
    return out_paths


def run_report(cfg: RunConfig, render_figures: bool = True) -> str:
    predictions, truths, report = _load_selector_report(cfg)
    matrix, summaries = pipeline.regression_report(predictions, clamp=cfg.clamp)

    def combo_key(budget, size):
        return f"budget={budget},sample_size={size}"

    baselines_json = {
        combo_key(b, s): payload for (b, s), payload in sorted(report.baselines.items())
    }
    frequency_rows = []
    for (budget, size), by_approach in sorted(report.frequencies.items()):
        for approach in sorted(by_approach):
            counts = by_approach[approach]
            for algo in report.algorithms:
                for fid, iid in report.instances:
                    frequency_rows.append(
                        {
                            "budget": budget,
                            "sample_size": size,
                            "approach": approach,
                            "algorithm": algo,
                            "fid": fid,
                            "iid": iid,
                            "count": counts.get((algo, fid, iid), 0),
                        }
                    )

    doc = {
        "config": {**asdict(cfg), "sample_sizes": list(cfg.effective_sample_sizes)},
        "config_hash": config_hash(cfg),
        "model_table": [
            {
                "id": c.id,
                "family": c.family,
                "crit": c.crit,
                "minsplit": c.minsplit,
                "nest": c.nest,
            }
            for c in enumerate_configs(cfg.seed)
        ],
        "regression": {
            "best_log_models": [asdict(s) for s in summaries],
            "matrix": matrix,
        },
        "selection": {
            "selectors": report.selector_rows,
            "baselines": baselines_json,
            "frequency": frequency_rows,
            "threshold": report.threshold,
        },
    }
    path = _paths(cfg)["report"]
    tables.write_report_json(path, doc)
    if render_figures:
        combos = sorted(report.baselines.keys())
        figures.render_all(cfg.out, matrix, report, combos)
    return path


# --- click wiring -------------------------------------------------------------


def _parse_int_list(text):
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part and not part.startswith("-"):
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return tuple(out)


_CONFIG_KEYS = set(_SEMANTIC_FIELDS) | {"out", "jobs"}


def _build_config(ctx, **kw):
    base = {}
    config_file = kw.pop("config", None)
    if config_file:
        with open(config_file) as fh:
            loaded = json.load(fh)
        bad = set(loaded) - _CONFIG_KEYS
        if bad:
            raise click.ClickException(f"unknown config keys: {sorted(bad)}")
        base.update(loaded)

    def explicit(name):
        src = ctx.get_parameter_source(name)
        return src is not None and src.name != "DEFAULT"

    merged = dict(base)
    for name, value in kw.items():
        if value is None:
            continue
        if name in merged and not explicit(name):
            continue  # config file wins over an unset flag
        merged[name] = value
    for key in ("fids", "iids", "sample_sizes", "budgets"):
        if key in merged and not isinstance(merged[key], tuple):
            merged[key] = (
                _parse_int_list(merged[key])
                if isinstance(merged[key], str)
                else tuple(merged[key])
            )
    if "solvers" in merged and isinstance(merged["solvers"], str):
        merged["solvers"] = tuple(s.strip() for s in merged["solvers"].split(",") if s.strip())
    elif "solvers" in merged:
        merged["solvers"] = tuple(merged["solvers"])
    return RunConfig(**merged)


def _common_options(fn):
    opts = [
        click.option("--seed", type=int, default=0, show_default=True, help="Master seed."),
        click.option("--dim", type=int, default=5, show_default=True, help="Problem dimension."),
        click.option("--fids", default="1-24", show_default=True, help="Function ids, e.g. 1-24 or 1,3,7."),
        click.option("--iids", default="1-5", show_default=True, help="Instance ids (folds need 1-5)."),
        click.option("--sample-sizes", "sample_sizes", default=None, help="Feature sample sizes (default 50d,400d)."),
        click.option("--reps", type=int, default=50, show_default=True, help="Feature replicates."),
        click.option("--budgets", default="250,500,1000", show_default=True, help="Evaluation budgets."),
        click.option("--threshold", type=float, default=selector.DEFAULT_THRESHOLD, show_default=True, help="Combined-selector threshold."),
        click.option("--clamp", type=float, default=pipeline.CLAMP, show_default=True, help="Precision clamp before log10."),
        click.option("--solvers", default=None, help="Comma-separated built-in solver names."),
        click.option("--jobs", type=int, default=1, show_default=True, help="Worker processes."),
        click.option("--out", envvar=OUT_ENVVAR, default=DEFAULT_OUT, show_default=True, help=f"Output directory (env {OUT_ENVVAR})."),
        click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None, help="JSON config file; flags override it."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


@click.group()
def main():
    """Landscape-aware performance regression and algorithm selection."""


def _cfg_from(ctx, kw):
    for key in ("fids", "iids", "budgets"):
        if isinstance(kw.get(key), str):
            kw[key] = _parse_int_list(kw[key])
    if isinstance(kw.get("sample_sizes"), str):
        kw["sample_sizes"] = _parse_int_list(kw["sample_sizes"])
    return _build_config(ctx, **kw)


@main.command()
@_common_options
@click.pass_context
def features(ctx, **kw):
    """Compute the 56 landscape features for the configured suite."""
    path = run_features(_cfg_from(ctx, kw))
    click.echo(f"wrote {path}")


@main.command()
@_common_options
@click.pass_context
def runs(ctx, **kw):
    """Run the built-in solver portfolio and record fixed-budget precisions."""
    path = run_runs(_cfg_from(ctx, kw))
    click.echo(f"wrote {path}")


@main.command()
@click.argument("source", type=click.Path(exists=True, dir_okay=False))
@_common_options
@click.pass_context
def ingest(ctx, source, **kw):
    """Validate an external performance CSV and normalize it into the run."""
    path = run_ingest(_cfg_from(ctx, kw), source)
    click.echo(f"wrote {path}")


@main.command()
@_common_options
@click.pass_context
def train(ctx, **kw):
    """Cross-validate the 30 regression models on both target scales."""
    path = run_train(_cfg_from(ctx, kw))
    click.echo(f"wrote {path}")


@main.command()
@_common_options
@click.option("--threshold-grid", default=None, help="Comma-separated thresholds for an optional combined-selector sweep.")
@click.pass_context
def select(ctx, threshold_grid, **kw):
    """Build selectors from predictions and write quality and frequency tables."""
    grid = tuple(float(t) for t in threshold_grid.split(",")) if threshold_grid else ()
    for path in run_select(_cfg_from(ctx, kw), grid):
        click.echo(f"wrote {path}")


@main.command()
@_common_options
@click.option("--no-figures", is_flag=True, default=False, help="Skip PNG rendering.")
@click.pass_context
def report(ctx, no_figures, **kw):
    """Write the full report JSON and render figures."""
    path = run_report(_cfg_from(ctx, kw), render_figures=not no_figures)
    click.echo(f"wrote {path}")


@main.command(name="all")
@_common_options
@click.option("--no-figures", is_flag=True, default=False, help="Skip PNG rendering.")
@click.pass_context
def run_all(ctx, no_figures, **kw):
    """Run features, runs, train, select and report in sequence."""
    cfg = _cfg_from(ctx, kw)
    click.echo(f"wrote {run_features(cfg)}")
    click.echo(f"wrote {run_runs(cfg)}")
    click.echo(f"wrote {run_train(cfg)}")
    for path in run_select(cfg):
        click.echo(f"wrote {path}")
    click.echo(f"wrote {run_report(cfg, render_figures=not no_figures)}")


if __name__ == "__main__":
    main()
