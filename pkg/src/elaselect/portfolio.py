"""Fixed-budget performance data: built-in solvers and CSV ingestion.

The built-in portfolio holds four cheap derivative-free optimizers spanning
distinct search behaviors (global random baseline, adaptive (1+1)-ES with the
fifth-success step rule, Nelder-Mead restarts, cyclic coordinate line search).
Every objective call is counted; a record holds the best-so-far precision
after exactly `budget` evaluations, and solvers restart until the maximum
budget is exhausted, so records exist for every checkpoint.
"""

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .bbob import LOWER, UPPER, ProblemInstance, evaluate_many
from .errors import PerformanceParseError
from .pipeline import PerformanceRecord
from .seeding import stable_seed

logger = logging.getLogger(__name__)

SOLVER_KINDS = (
    "random_search",
    "one_plus_one_es",
    "nelder_mead",
    "coordinate_line_search",
)

PERFORMANCE_HEADER = ["algorithm", "fid", "iid", "dim", "budget", "precision"]


@dataclass(frozen=True)
class SolverSpec:
    name: str
    kind: str
    seed: int
    params: dict = field(default_factory=dict)


def default_portfolio(seed: int = 0) -> list:
    return [
        SolverSpec("CoordSearch", "coordinate_line_search", stable_seed(seed, "cs")),
        SolverSpec("NelderMead", "nelder_mead", stable_seed(seed, "nm")),
        SolverSpec("OnePlusOneES", "one_plus_one_es", stable_seed(seed, "es")),
        SolverSpec("RandomSearch", "random_search", stable_seed(seed, "rs")),
    ]


class _BudgetExhausted(Exception):
    pass


class _Tracker:
    """Counts objective calls and snapshots best-so-far precision."""

    def __init__(self, inst, max_budget, checkpoints):
        self.inst = inst
        self.max_budget = max_budget
        self.checkpoints = list(checkpoints)
        self._cp_set = set(checkpoints)
        self.count = 0
        self.best = np.inf
        self.at = {}

    @property
    def remaining(self):
        return self.max_budget - self.count

    def _note(self, value):
        prec = value - self.inst.f_opt
        if prec < self.best:
            self.best = prec
        if self.count in self._cp_set:
            self.at[self.count] = self.best

    def __call__(self, x):
        if self.count >= self.max_budget:
            raise _BudgetExhausted
        value = float(evaluate_many(self.inst, np.asarray(x, dtype=float)[None, :])[0])
        self.count += 1
        self._note(value)
        return value

    def eval_batch(self, xs):
        """Sequential-semantics batch evaluation (for random search)."""
        xs = np.asarray(xs, dtype=float)
        take = min(len(xs), self.remaining)
        if take == 0:
            raise _BudgetExhausted
        values = evaluate_many(self.inst, xs[:take])
        for v in values:
            self.count += 1
            self._note(float(v))
        if take < len(xs):
            raise _BudgetExhausted
        return values

    def records(self, spec):
        out = []
        for b in self.checkpoints:
            best = self.at.get(b, self.best if self.count >= b else None)
            if best is None:
                best = self.best
            out.append(
                PerformanceRecord(
                    spec.name, self.inst.fid, self.inst.iid, self.inst.dim, b, float(best)
                )
            )
        return out


def _clip(x):
    return np.clip(x, LOWER, UPPER)


def _run_random_search(tracker, rng, dim, params):
    while True:
        chunk = min(256, max(tracker.remaining, 1))
        tracker.eval_batch(rng.uniform(LOWER, UPPER, (chunk, dim)))


def _run_one_plus_one_es(tracker, rng, dim, params):
    step0 = params.get("step", 1.0)
    while True:  # restart when the step size collapses
        x = rng.uniform(LOWER, UPPER, dim)
        fx = tracker(x)
        sigma = step0
        while sigma > 1e-9:
            child = _clip(x + sigma * rng.standard_normal(dim))
            fc = tracker(child)
            if fc < fx:  # fifth-success rule
                x, fx = child, fc
                sigma *= 1.5
            else:
                sigma *= 1.5**-0.25


def _run_nelder_mead(tracker, rng, dim, params):
    scale = params.get("simplex_scale", 2.0)
    while True:
        x0 = rng.uniform(LOWER, UPPER, dim)
        simplex = np.vstack([x0, _clip(x0 + scale * np.eye(dim))])
        minimize(
            tracker,
            x0,
            method="Nelder-Mead",
            bounds=[(LOWER, UPPER)] * dim,
            options={
                "initial_simplex": simplex,
                "maxfev": max(tracker.remaining, 1),
                "maxiter": 10**9,
            },
        )


def _run_coordinate_line_search(tracker, rng, dim, params):
    """Cyclic golden-section line search along each coordinate."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    tol = params.get("tol", 1e-7)
    x = rng.uniform(LOWER, UPPER, dim)
    fx = tracker(x)
    while True:
        improved = False
        for i in range(dim):
            a, b = LOWER, UPPER
            c = b - invphi * (b - a)
            d = a + invphi * (b - a)
            xc = x.copy()
            xc[i] = c
            fc = tracker(xc)
            xd = x.copy()
            xd[i] = d
            fd = tracker(xd)
            while b - a > tol:
                if fc < fd:
                    b, d, fd = d, c, fc
                    c = b - invphi * (b - a)
                    xc[i] = c
                    fc = tracker(xc)
                else:
                    a, c, fc = c, d, fd
                    d = a + invphi * (b - a)
                    xd[i] = d
                    fd = tracker(xd)
            best_t, best_f = (c, fc) if fc < fd else (d, fd)
            if best_f < fx:
                x = x.copy()
                x[i] = best_t
                fx = best_f
                improved = True
        if not improved:  # converged on this start point
            x = rng.uniform(LOWER, UPPER, dim)
            fx = tracker(x)


_RUNNERS = {
    "random_search": _run_random_search,
    "one_plus_one_es": _run_one_plus_one_es,
    "nelder_mead": _run_nelder_mead,
    "coordinate_line_search": _run_coordinate_line_search,
}


def run_solver(
    spec: SolverSpec, inst: ProblemInstance, max_budget: int, checkpoints
) -> list:
    """Run one solver once, returning one record per checkpoint."""
    checkpoints = list(checkpoints)
    if sorted(checkpoints) != checkpoints or any(c > max_budget for c in checkpoints):
        raise ValueError("checkpoints must be sorted and <= max_budget")
    if spec.kind not in _RUNNERS:
        raise ValueError(f"unknown solver kind {spec.kind!r}")
    rng = np.random.default_rng(
        stable_seed("solver-run", spec.seed, inst.fid, inst.iid, inst.dim)
    )
    tracker = _Tracker(inst, max_budget, checkpoints)
    try:
        _RUNNERS[spec.kind](tracker, rng, inst.dim, spec.params)
    except _BudgetExhausted:
        pass
    return tracker.records(spec)


def run_portfolio(specs, instances, budgets) -> list:
    """All (solver, instance) runs; max budget is the largest checkpoint."""
    budgets = sorted(budgets)
    records = []
    for spec in specs:
        for inst in instances:
            records.extend(run_solver(spec, inst, budgets[-1], budgets))
    return sort_records(records)


def sort_records(records):
    return sorted(records, key=lambda r: (r.algorithm, r.fid, r.iid, r.dim, r.budget))


def ingest_performance(path) -> list:
    """Read a performance CSV; last duplicate wins, negative precisions are
    rejected with a logged listing, malformed rows raise with line numbers."""
    by_key = {}
    malformed = []
    rejected = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        line = 0
        header = None
        for row in reader:
            line += 1
            if not row or row[0].startswith("#"):
                continue
            if header is None:
                header = [c.strip() for c in row]
                if header != PERFORMANCE_HEADER:
                    raise PerformanceParseError(
                        f"{path}: line {line}: expected header "
                        f"{','.join(PERFORMANCE_HEADER)}, got {','.join(header)}"
                    )
                continue
            if len(row) != len(PERFORMANCE_HEADER):
                malformed.append((line, f"expected 6 fields, got {len(row)}"))
                continue
            try:
                rec = PerformanceRecord(
                    row[0],
                    int(row[1]),
                    int(row[2]),
                    int(row[3]),
                    int(row[4]),
                    float(row[5]),
                )
            except ValueError as exc:
                malformed.append((line, str(exc)))
                continue
            if not np.isfinite(rec.precision) or rec.precision < 0:
                rejected.append((line, rec))
                continue
            key = (rec.algorithm, rec.fid, rec.iid, rec.dim, rec.budget)
            if key in by_key:
                logger.warning("%s: line %d: duplicate key %s, keeping last", path, line, key)
            by_key[key] = rec
    if malformed:
        details = "; ".join(f"line {ln}: {msg}" for ln, msg in malformed[:10])
        raise PerformanceParseError(f"{path}: {len(malformed)} malformed rows ({details})")
    if rejected:
        lines = ", ".join(str(ln) for ln, _ in rejected[:20])
        logger.warning(
            "%s: rejected %d rows with negative or non-finite precision (lines %s)",
            path,
            len(rejected),
            lines,
        )
    return sort_records(by_key.values())
