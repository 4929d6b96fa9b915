"""Command-line interface: ``ksupport <subcommand> ...``.

Exit codes: 0 success, 2 usage error (bad flags or hyperparameters),
1 runtime error (I/O, malformed files, solver failure).
"""
import argparse
import csv
import io
import json
import logging
import sys
import warnings
from dataclasses import asdict

import numpy as np

from . import __version__
from .data import (
    CsvError,
    ToyConfig,
    atomic_write_text,
    classify,
    predict_scores,
    read_csv,
    read_matrix,
    read_vector,
    write_toy,
)
from .losses import CLI_NAMES, ConsistencyWarning, LossSpec, loss_gradient, loss_value
from .modelsel import (
    GridSpec,
    accuracy,
    fast_grid,
    grid_search,
    mse,
    default_losses,
    run_experiment,
)
from .norms import InputError, ParameterError, ksup_norm
from .solver import DivergenceError, SolverConfig, fit, objective

log = logging.getLogger("ksupport")

REGRESSION_CURVES = ("squared", "eps_insensitive", "absolute")


class UsageError(Exception):
    pass


def _spec(args):
    return LossSpec.make(args.loss, h=args.h, eps=args.eps)


def _solver_cfg(args):
    return SolverConfig(max_iter=args.max_iter, tol=args.tol, lipschitz_override=args.lipschitz)


def _spec_json(spec):
    eps = spec.width if spec.kind in ("eps_insensitive", "absolute") else None
    return {"loss": spec.cli_name, "h": spec.h, "eps": eps}


def _model_dict(spec, k, lam, beta, obj, iterations, converged, target_kind, cfg):
    return {
        "beta": [float(b) for b in beta],
        "k": int(k),
        "lambda": float(lam),
        **_spec_json(spec),
        "objective": float(obj),
        "iterations": int(iterations),
        "converged": bool(converged),
        "version": __version__,
        "target_kind": target_kind,
        "solver": asdict(cfg),
    }


def _load_model(path):
    try:
        with open(path, encoding="utf-8") as fh:
            m = json.load(fh)
        spec = LossSpec.make(m["loss"], h=m.get("h"), eps=m.get("eps"))
        return m, spec, np.asarray(m["beta"], dtype=float)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{path}: not a valid model file ({exc})") from exc


def cmd_norm(args):
    beta = read_vector(args.input, has_header=args.header)
    print(f"{ksup_norm(beta, args.k):.12g}")


def cmd_fit(args):
    spec = _spec(args)
    kind = args.target_kind or ("binary" if spec.is_classification else "real")
    data = read_csv(args.train, has_header=args.header, target_kind=kind)
    cfg = _solver_cfg(args)
    res = fit(data, spec, args.k, args.lam, cfg)
    model = _model_dict(spec, args.k, args.lam, res.beta, res.objective,
                        res.iterations, res.converged, kind, cfg)
    atomic_write_text(args.model, json.dumps(model, indent=2) + "\n")
    print(
        f"objective={res.objective:.12g} iterations={res.iterations} "
        f"converged={str(res.converged).lower()}"
    )


def cmd_predict(args):
    m, spec, beta = _load_model(args.model)
    if args.no_target:
        X = read_matrix(args.data, has_header=args.header)
        data = None
    else:
        data = read_csv(args.data, has_header=args.header, target_kind="real")
        X = data.X
    scores = predict_scores(beta, X)
    labels = classify(scores)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["score", "label"])
    for s, l in zip(scores, labels):
        w.writerow([format(s, ".17g"), int(l)])
    if args.out:
        atomic_write_text(args.out, buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    if data is not None:
        obj = objective(beta, data, spec, m["k"], m["lambda"])
        msg = [f"objective={obj:.17g}", f"mse_mean={mse(scores, data.y):.12g}"]
        if np.all(np.abs(data.y) == 1):
            msg.append(f"accuracy={accuracy(labels, data.y):.12g}")
        # keep stdout clean when it carries the predictions
        print(" ".join(msg), file=sys.stdout if args.out else sys.stderr)


def _float_list(text):
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise UsageError(f"not a comma-separated list of numbers: {text!r}") from None


def _int_list(text):
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise UsageError(f"not a comma-separated list of integers: {text!r}") from None


def _grid(args, regularizer="ksup"):
    base = fast_grid() if args.fast else GridSpec()
    ks = _int_list(args.k_values) if args.k_values else base.k_values
    lams = _float_list(args.lambda_values) if args.lambda_values else base.lambda_values
    return GridSpec(k_values=ks, lambda_values=lams, regularizer_mode=regularizer)


def cmd_gridsearch(args):
    spec = _spec(args)
    kind = args.target_kind or ("binary" if spec.is_classification else "real")
    train = read_csv(args.train, has_header=args.header, target_kind=kind)
    val = read_csv(args.val, has_header=args.header, target_kind=kind)
    cfg = _solver_cfg(args)
    grid = _grid(args, args.regularizer)
    if args.fast and grid.k_values is not None:
        # the coarse k grid is written for d = 65; clip it to this data
        ks = tuple(k for k in grid.k_values if k <= train.d) or (1,)
        grid = GridSpec(k_values=ks, lambda_values=grid.lambda_values,
                        regularizer_mode=grid.regularizer_mode)
    rep = grid_search(train, val, spec, grid, cfg)
    buf = io.StringIO()
    cols = ["k", "lambda", "score", "iterations", "converged", "error", "selected"]
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for row in rep.to_rows():
        row["lambda"] = format(row["lambda"], ".17g")
        row["score"] = "" if row["score"] is None else format(row["score"], ".17g")
        w.writerow(row)
    atomic_write_text(args.report, buf.getvalue())
    if args.model:
        best = rep.best
        model = _model_dict(spec, best.k, best.lam, rep.beta, rep.objective,
                            best.iterations, best.converged, kind, cfg)
        model["selection"] = {"metric": rep.metric, "score": best.score}
        atomic_write_text(args.model, json.dumps(model, indent=2) + "\n")
    print(f"best k={rep.best.k} lambda={rep.best.lam:g} {rep.metric}={rep.best.score:.6g}")


def _toy_cfg(args, seed):
    return ToyConfig(
        d_signal=args.d_signal, d_noise=args.d_noise,
        n_train=args.n_train, n_val=args.n_val, n_test=args.n_test,
        signal_sigma=args.signal_sigma, noise_sigma=args.noise_sigma,
        background_sigma=args.background_sigma, seed=seed,
    )


def cmd_toy(args):
    paths = write_toy(_toy_cfg(args, args.seed), args.prefix)
    for p in paths.values():
        print(p)


def cmd_experiment(args):
    grid = _grid(args)
    losses = default_losses(h=args.h if args.h is not None else 0.1,
                          eps=args.eps if args.eps is not None else 1.0)
    if args.losses:
        wanted = [CLI_NAMES.get(n.strip()) for n in args.losses.split(",")]
        if None in wanted:
            raise UsageError(f"unknown loss in --losses {args.losses!r}")
        losses = [s for s in losses if s.kind in wanted]

    def progress(i, entry):
        if "error" in entry:
            log.info("instance %d %s/%s failed: %s", i, entry["loss"], entry["regularizer"], entry["error"])
        else:
            log.info("instance %d %s/%s k=%d lambda=%g acc=%.3f",
                     i, entry["loss"], entry["regularizer"], entry["k"], entry["lam"], entry["accuracy"])

    table = run_experiment(
        instances=args.instances, base_seed=args.base_seed, losses=losses, grid=grid,
        cfg=_solver_cfg(args), toy=_toy_cfg(args, args.base_seed), out=args.out,
        progress=progress,
    )
    print(table.format_tables())


def losscurve_rows(spec, a, b, step):
    """Loss and gradient of a single sample with ``x = 1`` over a sweep.

    The swept input is the residual ``y - <beta, x>`` for the regression
    losses and the margin ``y <beta, x>`` for the others.
    """
    if not step > 0:
        raise ParameterError("step must be positive")
    if not b >= a:
        raise ParameterError("empty range")
    n = int(np.floor((b - a) / step + 1e-9)) + 1
    X = np.ones((1, 1))
    rows = []
    for i in range(n):
        t = a + i * step
        if spec.kind in REGRESSION_CURVES:
            beta, y = np.zeros(1), np.array([t])
        else:
            beta, y = np.array([t]), np.ones(1)
        with warnings.catch_warnings():
            # a lone +-1 target is not a classification data set
            warnings.simplefilter("ignore", ConsistencyWarning)
            rows.append((t, loss_value(spec, beta, X, y), float(loss_gradient(spec, beta, X, y)[0])))
    return rows


def cmd_losscurve(args):
    spec = _spec(args)
    rows = losscurve_rows(spec, args.range[0], args.range[1], args.step)
    lines = ["input,loss,gradient"]
    lines += [",".join(format(v, ".17g") for v in row) for row in rows]
    atomic_write_text(args.out, "\n".join(lines) + "\n")


def _add_loss_flags(p, required=True):
    p.add_argument("--loss", required=required, choices=sorted(CLI_NAMES))
    p.add_argument("--h", type=float, default=None, help="Huber width (default 0.1)")
    p.add_argument("--eps", type=float, default=None, help="insensitivity width (default 1)")


def _add_solver_flags(p):
    p.add_argument("--tol", type=float, default=SolverConfig.tol)
    p.add_argument("--max-iter", type=int, default=SolverConfig.max_iter)
    p.add_argument("--lipschitz", type=float, default=None, help="override the step-size constant")


def _add_grid_flags(p):
    p.add_argument("--fast", action="store_true",
                   help="coarse grid: k in {1,5,10,15,20,40,65}, lambda in 1e-4..1e2")
    p.add_argument("--k-values", default=None, help="comma-separated k grid (default 1..d)")
    p.add_argument("--lambda-values", default=None, help="comma-separated lambda grid (default 1e-15..1e5)")


def _add_toy_flags(p):
    d = ToyConfig()
    for name in ("d_signal", "d_noise", "n_train", "n_val", "n_test"):
        p.add_argument("--" + name.replace("_", "-"), type=int, default=getattr(d, name))
    for name in ("signal_sigma", "noise_sigma", "background_sigma"):
        p.add_argument("--" + name.replace("_", "-"), type=float, default=getattr(d, name))


def build_parser():
    parser = argparse.ArgumentParser(prog="ksupport", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", help="k-support norm of a single-row CSV vector")
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--header", action="store_true")
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("fit", help="fit one (loss, k, lambda) model")
    _add_loss_flags(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--model", required=True, help="output model JSON")
    p.add_argument("--header", action="store_true")
    p.add_argument("--target-kind", choices=("binary", "real"), default=None)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="scores and labels from a model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None, help="output CSV (default stdout)")
    p.add_argument("--header", action="store_true")
    p.add_argument("--no-target", action="store_true", help="every column is a feature")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("gridsearch", help="select (k, lambda) on a validation set")
    _add_loss_flags(p)
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--report", required=True, help="output CSV, one row per cell")
    p.add_argument("--model", default=None, help="write the selected model JSON here")
    p.add_argument("--regularizer", choices=("ksup", "l1_fixed", "l2_fixed"), default="ksup")
    p.add_argument("--header", action="store_true")
    p.add_argument("--target-kind", choices=("binary", "real"), default=None)
    _add_grid_flags(p)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_gridsearch)

    p = sub.add_parser("toy", help="write one synthetic train/val/test instance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--prefix", default="toy")
    _add_toy_flags(p)
    p.set_defaults(func=cmd_toy)

    p = sub.add_parser("experiment", help="repeat model selection over random toy instances")
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--out", default="experiment", help="output prefix for .csv and .json")
    p.add_argument("--losses", default=None, help="comma-separated subset of loss names")
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--eps", type=float, default=None)
    _add_grid_flags(p)
    _add_solver_flags(p)
    _add_toy_flags(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("losscurve", help="loss and gradient of one sample over a sweep")
    _add_loss_flags(p)
    p.add_argument("--range", nargs=2, type=float, required=True, metavar=("A", "B"))
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_losscurve)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except (UsageError, ParameterError) as exc:
        print(f"ksupport {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (InputError, CsvError, DivergenceError, OSError, RuntimeError) as exc:
        print(f"ksupport {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
