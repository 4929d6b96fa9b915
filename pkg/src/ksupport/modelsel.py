"""Validation-based (k, lambda) selection and the toy-problem experiment."""
import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .data import ToyConfig, atomic_write_text, classify, generate_toy, predict_scores
from .losses import LossSpec
from .norms import InputError, ParameterError
from .solver import DivergenceError, SolverConfig, fit, spectral_norm_sq

__all__ = [
    "GridSpec",
    "CellResult",
    "GridSearchReport",
    "ExperimentTable",
    "accuracy",
    "mse",
    "grid_search",
    "default_losses",
    "fast_grid",
    "run_experiment",
]

log = logging.getLogger(__name__)

REGULARIZERS = ("ksup", "l1_fixed", "l2_fixed")
METRICS = ("accuracy", "mse_mean", "mse_sum")
FULL_LAMBDAS = tuple(10.0**i for i in range(-15, 6))
# loss names in table column order
LOSS_COLUMNS = (
    "squared", "one-sided-squared", "hinge", "logistic", "exponential", "absolute", "eps-insensitive",
)
FAST_K = (1, 5, 10, 15, 20, 40, 65)
FAST_LAMBDAS = tuple(10.0**i for i in range(-4, 3))


def accuracy(pred_labels, y):
    pred_labels = np.asarray(pred_labels)
    y = np.asarray(y)
    if pred_labels.shape != y.shape:
        raise InputError(f"length mismatch: {pred_labels.shape} vs {y.shape}")
    return float(np.mean(pred_labels == y))


def mse(scores, y, mode="mean"):
    """Squared error of ``scores`` against ``y``, averaged or summed."""
    scores = np.asarray(scores, dtype=float)
    y = np.asarray(y, dtype=float)
    if scores.shape != y.shape:
        raise InputError(f"length mismatch: {scores.shape} vs {y.shape}")
    sq = (scores - y) ** 2
    if mode == "mean":
        return float(np.mean(sq))
    if mode == "sum":
        return float(np.sum(sq))
    raise ParameterError(f"mode must be 'mean' or 'sum', got {mode!r}")


@dataclass(frozen=True)
class GridSpec:
    """Search grid.  ``k_values=None`` means ``1..d``; the regularizer mode
    overrides the k grid with ``{1}`` (l1_fixed) or ``{d}`` (l2_fixed)."""

    k_values: tuple[int, ...] | None = None
    lambda_values: tuple[float, ...] = FULL_LAMBDAS
    metric: str | None = None
    regularizer_mode: str = "ksup"

    def __post_init__(self):
        if self.regularizer_mode not in REGULARIZERS:
            raise ParameterError(f"regularizer_mode must be one of {REGULARIZERS}")
        if self.metric is not None and self.metric not in METRICS:
            raise ParameterError(f"metric must be one of {METRICS}")
        if not self.lambda_values:
            raise ParameterError("empty lambda grid")
        if any(not (math.isfinite(l) and l > 0) for l in self.lambda_values):
            raise ParameterError("lambda values must be positive")
        if self.k_values is not None and not self.k_values:
            raise ParameterError("empty k grid")

    def ks(self, d):
        if self.regularizer_mode == "l1_fixed":
            return (1,)
        if self.regularizer_mode == "l2_fixed":
            return (d,)
        ks = tuple(range(1, d + 1)) if self.k_values is None else tuple(self.k_values)
        bad = [k for k in ks if not 1 <= k <= d]
        if bad:
            raise ParameterError(f"k values {bad} outside [1, {d}]")
        return ks

    def metric_for(self, target_kind):
        if self.metric is not None:
            return self.metric
        return "accuracy" if target_kind == "binary" else "mse_mean"


@dataclass
class CellResult:
    k: int
    lam: float
    score: float | None
    iterations: int
    converged: bool
    error: str | None = None

    @property
    def failed(self):
        return self.error is not None


@dataclass
class GridSearchReport:
    metric: str
    cells: list[CellResult]
    best: CellResult
    beta: np.ndarray = field(repr=False)
    objective: float

    def to_rows(self):
        return [
            {
                "k": c.k,
                "lambda": c.lam,
                "score": c.score,
                "iterations": c.iterations,
                "converged": c.converged,
                "error": c.error or "",
                "selected": c is self.best,
            }
            for c in self.cells
        ]


def _score(metric, beta, data):
    scores = predict_scores(beta, data.X)
    if metric == "accuracy":
        return accuracy(classify(scores), data.y)
    return mse(scores, data.y, "mean" if metric == "mse_mean" else "sum")


def _preference(metric, cell):
    """Sort key: best score first, then smaller k, then larger lambda."""
    s = cell.score if metric == "accuracy" else -cell.score
    return (-s, cell.k, -cell.lam)


def grid_search(train, val, spec, grid, cfg=None):
    """Fit every (k, lambda) cell on ``train`` and pick the best on ``val``.

    Accuracy is maximized, MSE minimized; ties go to the smaller ``k`` and
    then the larger ``lambda``.  Cells whose fit diverges are recorded as
    failed and skipped.  Raises ``RuntimeError`` if every cell fails.
    """
    if train.d != val.d or train.target_kind != val.target_kind:
        raise InputError("train and val must share d and target_kind")
    cfg = cfg or SolverConfig()
    metric = grid.metric_for(train.target_kind)
    gamma = spectral_norm_sq(train.X)
    cells, betas = [], {}
    for k in grid.ks(train.d):
        for lam in grid.lambda_values:
            try:
                res = fit(train, spec, k, lam, cfg, gamma=gamma)
            except DivergenceError as exc:
                cells.append(CellResult(k, lam, None, exc.iterations, False, str(exc)))
                continue
            cell = CellResult(k, lam, _score(metric, res.beta, val), res.iterations, res.converged)
            cells.append(cell)
            betas[id(cell)] = res
    ok = [c for c in cells if not c.failed]
    if not ok:
        raise RuntimeError(f"all {len(cells)} grid cells failed for {spec.kind}")
    best = min(ok, key=lambda c: _preference(metric, c))
    res = betas[id(best)]
    return GridSearchReport(metric, cells, best, res.beta, res.objective)


def default_losses(h=0.1, eps=1.0):
    """The seven losses of the toy experiment, in table column order."""
    return [
        LossSpec.make("squared"),
        LossSpec.make("one_sided_squared"),
        LossSpec.make("huber_hinge", h=h),
        LossSpec.make("logistic"),
        LossSpec.make("exponential"),
        LossSpec.make("absolute", h=h),
        LossSpec.make("eps_insensitive", h=h, eps=eps),
    ]


def fast_grid():
    """Coarse grid for quick runs: 7 k values and lambda in 1e-4..1e2."""
    return GridSpec(k_values=FAST_K, lambda_values=FAST_LAMBDAS)


@dataclass
class ExperimentTable:
    """Aggregated test metrics; ``summary`` rows hold mean/std per cell."""

    summary: list[dict]
    instances: list[dict]
    config: dict

    def lookup(self, loss, regularizer, metric):
        for row in self.summary:
            if (row["loss"], row["regularizer"], row["metric"]) == (loss, regularizer, metric):
                return row
        raise KeyError((loss, regularizer, metric))

    def to_csv(self):
        buf = io.StringIO()
        cols = ["loss", "regularizer", "metric", "mean", "std", "n_instances"]
        w = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for row in self.summary:
            w.writerow({**row, "mean": _fmt(row["mean"]), "std": _fmt(row["std"])})
        return buf.getvalue()

    def to_json(self):
        return json.dumps(
            {"config": self.config, "summary": self.summary, "instances": self.instances},
            indent=2,
        )

    def save(self, prefix):
        atomic_write_text(f"{prefix}.csv", self.to_csv())
        atomic_write_text(f"{prefix}.json", self.to_json() + "\n")

    def format_tables(self):
        """Plain-text accuracy and summed-MSE tables, regularizers by losses."""
        losses = list(dict.fromkeys(r["loss"] for r in self.summary))
        out = []
        for metric, fmt in (("accuracy", "{:.3f} +- {:.3f}"), ("mse_sum", "{:.2e} +- {:.2e}")):
            out.append(f"[{metric}]")
            out.append("regularizer  " + "  ".join(f"{l:>22}" for l in losses))
            for reg in REGULARIZERS:
                cells = []
                for l in losses:
                    row = self.lookup(l, reg, metric)
                    txt = "n/a" if row["n_instances"] == 0 else fmt.format(row["mean"], row["std"])
                    cells.append(f"{txt:>22}")
                out.append(f"{reg:<12} " + "  ".join(cells))
            out.append("")
        return "\n".join(out)


def _fmt(x):
    return "nan" if x is None or not math.isfinite(x) else format(x, ".17g")


def run_experiment(instances=20, base_seed=0, losses=None, grid=None, cfg=None,
                   toy=None, out=None, progress=None):
    """Repeat the toy model-selection experiment and aggregate test metrics.

    Instance ``i`` uses toy seed ``base_seed + i``.  For every loss and
    regularizer row (ksup over the k grid, k = 1, k = d) a grid search on the
    validation split picks one model, which is scored on the test split by
    accuracy and by mean and summed squared error of its raw scores.
    Aggregates are mean and population standard deviation across the
    instances whose search did not fail outright.
    """
    if instances < 1:
        raise ParameterError("instances must be >= 1")
    losses = losses or default_losses()
    grid = grid or GridSpec()
    cfg = cfg or SolverConfig()
    toy = toy or ToyConfig()
    records = []
    for i in range(instances):
        train, val, test = generate_toy(replace(toy, seed=base_seed + i))
        inst = {"seed": base_seed + i, "results": []}
        for spec in losses:
            for reg in REGULARIZERS:
                g = replace(grid, regularizer_mode=reg)
                entry = {"loss": spec.cli_name, "regularizer": reg}
                try:
                    rep = grid_search(train, val, spec, g, cfg)
                except RuntimeError as exc:
                    entry.update(error=str(exc))
                else:
                    scores = predict_scores(rep.beta, test.X)
                    entry.update(
                        k=rep.best.k,
                        lam=rep.best.lam,
                        val_score=rep.best.score,
                        failed_cells=sum(c.failed for c in rep.cells),
                        accuracy=accuracy(classify(scores), test.y),
                        mse_mean=mse(scores, test.y, "mean"),
                        mse_sum=mse(scores, test.y, "sum"),
                    )
                inst["results"].append(entry)
                if progress is not None:
                    progress(i, entry)
        records.append(inst)

    summary = []
    for spec in losses:
        for reg in REGULARIZERS:
            entries = [
                e for inst in records for e in inst["results"]
                if e["loss"] == spec.cli_name and e["regularizer"] == reg
            ]
            for metric in METRICS:
                vals = [e[metric] for e in entries if "error" not in e]
                summary.append({
                    "loss": spec.cli_name,
                    "regularizer": reg,
                    "metric": metric,
                    "mean": float(np.mean(vals)) if vals else None,
                    "std": float(np.std(vals)) if vals else None,
                    "n_instances": len(vals),
                    "n_failed": len(entries) - len(vals),
                })
    config = {
        "instances": instances,
        "base_seed": base_seed,
        "losses": [asdict(s) for s in losses],
        "grid": asdict(grid),
        "solver": asdict(cfg),
        "toy": asdict(toy),
    }
    table = ExperimentTable(summary, records, config)
    if out is not None:
        table.save(out)
    return table
