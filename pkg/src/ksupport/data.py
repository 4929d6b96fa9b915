"""Datasets, CSV files, prediction and the synthetic toy problem.

CSV layout: one sample per row, comma separated, the last column is the
target.  Numbers are written with 17 significant digits so a write/read
round trip is exact.
"""
import csv
import json
import os
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .norms import InputError, ParameterError

__all__ = [
    "Dataset",
    "ToyConfig",
    "CsvError",
    "generate_toy",
    "read_csv",
    "write_csv",
    "read_matrix",
    "read_vector",
    "write_toy",
    "predict_scores",
    "classify",
    "atomic_write_text",
]

TARGET_KINDS = ("binary", "real")


class CsvError(InputError):
    """Malformed CSV input; the message names the offending row/column."""


@dataclass(frozen=True, eq=False)
class Dataset:
    """Design matrix ``X`` (n x d, one row per sample) and targets ``y``."""

    X: np.ndarray
    y: np.ndarray
    target_kind: str = "real"

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise InputError(f"X must be a non-empty n x d matrix, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise InputError(f"y has shape {y.shape}, expected ({X.shape[0]},)")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise InputError("dataset has non-finite entries")
        if self.target_kind not in TARGET_KINDS:
            raise ParameterError(f"target_kind must be one of {TARGET_KINDS}")
        if self.target_kind == "binary" and not np.all(np.abs(y) == 1.0):
            bad = int(np.flatnonzero(np.abs(y) != 1.0)[0])
            raise InputError(f"binary target must be -1 or +1; row {bad + 1} has {y[bad]:g}")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.target_kind == other.target_kind
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
        )

    __hash__ = None


@dataclass(frozen=True)
class ToyConfig:
    """Synthetic binary problem: a noisy signal in the first ``d_signal``
    features and pure noise in the remaining ``d_noise``.

    ``noise_sigma`` defaults to 2.5, which puts selected classifiers near
    88 % test accuracy; at 1 the problem is almost noiseless (the Bayes
    accuracy is about ``Phi(||w||)``, above 0.999 for 15 unit Gaussians).
    """

    d_signal: int = 15
    d_noise: int = 50
    n_train: int = 50
    n_val: int = 50
    n_test: int = 250
    signal_sigma: float = 1.0
    noise_sigma: float = 2.5
    background_sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        for name in ("d_signal", "n_train", "n_val", "n_test"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be positive")
        if self.d_noise < 0:
            raise ParameterError("d_noise must be >= 0")
        for name in ("signal_sigma", "noise_sigma", "background_sigma"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0")
        if self.seed < 0:
            raise ParameterError("seed must be unsigned")

    @property
    def d(self):
        return self.d_signal + self.d_noise


def _toy_split(rng, w, n, cfg):
    y = rng.choice(np.array([-1.0, 1.0]), size=n)
    signal = y[:, None] * w[None, :] + cfg.noise_sigma * rng.standard_normal((n, cfg.d_signal))
    background = cfg.background_sigma * rng.standard_normal((n, cfg.d_noise))
    return Dataset(np.hstack([signal, background]), y, "binary")


def generate_toy(cfg=None, return_w=False):
    """Draw one (train, val, test) instance of the toy problem.

    Uses ``numpy.random.default_rng(cfg.seed)`` (PCG64).  Stream order: the
    signal vector ``w``, then train, val and test; within a split the labels,
    then signal-block noise, then background features.
    """
    cfg = cfg or ToyConfig()
    rng = np.random.default_rng(cfg.seed)
    w = cfg.signal_sigma * rng.standard_normal(cfg.d_signal)
    splits = tuple(_toy_split(rng, w, n, cfg) for n in (cfg.n_train, cfg.n_val, cfg.n_test))
    if return_w:
        return splits + (w,)
    return splits


def predict_scores(beta, X):
    beta = np.asarray(beta, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or beta.shape != (X.shape[1],):
        raise InputError(f"beta shape {beta.shape} does not match X shape {X.shape}")
    return X @ beta


def classify(scores):
    """Sign of each score, with ``sign(0) = +1``."""
    return np.where(np.asarray(scores, dtype=float) >= 0, 1.0, -1.0)


def _parse_rows(path, has_header):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CsvError(f"{path}: {exc.strerror or exc}") from exc
    rows = []
    width = None
    reader = csv.reader(text.splitlines())
    for lineno, row in enumerate(reader, start=1):
        if has_header and lineno == 1:
            continue
        if not row or all(not c.strip() for c in row):
            continue
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise CsvError(f"{path}: row {lineno} has {len(row)} columns, expected {width}")
        vals = []
        for col, cell in enumerate(row, start=1):
            try:
                vals.append(float(cell))
            except ValueError:
                raise CsvError(f"{path}: row {lineno}, column {col}: not a number: {cell!r}") from None
        rows.append(vals)
    if not rows:
        raise CsvError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def read_csv(path, has_header=False, target_kind="real"):
    """Load a dataset whose last CSV column is the target."""
    arr = _parse_rows(path, has_header)
    if arr.shape[1] < 2:
        raise CsvError(f"{path}: need at least one feature column and a target column")
    return Dataset(arr[:, :-1], arr[:, -1], target_kind)


def read_matrix(path, has_header=False):
    """Load a CSV as a plain matrix (no target column)."""
    return _parse_rows(path, has_header)


def read_vector(path, has_header=False):
    """Load a single-row CSV as a vector."""
    arr = _parse_rows(path, has_header)
    if arr.shape[0] != 1:
        raise CsvError(f"{path}: expected exactly one row, got {arr.shape[0]}")
    return arr[0]


def _fmt(x):
    return format(float(x), ".17g")


def atomic_write_text(path, text):
    """Write ``text`` to a temp file next to ``path`` and rename it over."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(dataset, path):
    lines = [
        ",".join(_fmt(v) for v in (*row, t)) for row, t in zip(dataset.X, dataset.y)
    ]
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_toy(cfg, prefix):
    """Write ``<prefix>.{train,val,test}.csv`` and ``<prefix>.meta.json``."""
    train, val, test, w = generate_toy(cfg, return_w=True)
    paths = {}
    for name, ds in (("train", train), ("val", val), ("test", test)):
        p = Path(f"{prefix}.{name}.csv")
        write_csv(ds, p)
        paths[name] = str(p)
    meta = {"config": asdict(cfg), "w": [float(v) for v in w], "files": paths}
    atomic_write_text(f"{prefix}.meta.json", json.dumps(meta, indent=2) + "\n")
    return paths
