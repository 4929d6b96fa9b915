"""Smooth(ed) convex losses: value, gradient and gradient Lipschitz constant.

All losses are sums over samples of a scalar function of the score
``s_i = <beta, x_i>``.  Margin losses look at ``m_i = y_i * s_i``; the two
regression losses look at the residual ``y_i - s_i``.  Each loss is written
once in score space (``_value_from_scores`` / ``_dscores``) and the
``beta``-space functions apply the chain rule with ``X``.
"""
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .norms import InputError, ParameterError

__all__ = [
    "KINDS",
    "CLASSIFICATION_KINDS",
    "CLI_NAMES",
    "LossSpec",
    "LossEvaluation",
    "ConsistencyWarning",
    "loss_value",
    "loss_gradient",
    "loss_and_gradient",
    "lipschitz_constant",
    "boundaries",
]

KINDS = (
    "squared",
    "one_sided_squared",
    "huber_hinge",
    "logistic",
    "exponential",
    "eps_insensitive",
    "absolute",
)
CLASSIFICATION_KINDS = frozenset({"one_sided_squared", "huber_hinge", "logistic", "exponential"})
_HUBER_KINDS = frozenset({"huber_hinge", "eps_insensitive", "absolute"})

# command-line spelling <-> internal kind
CLI_NAMES = {
    "squared": "squared",
    "one-sided-squared": "one_sided_squared",
    "hinge": "huber_hinge",
    "logistic": "logistic",
    "exponential": "exponential",
    "eps-insensitive": "eps_insensitive",
    "absolute": "absolute",
}

DEFAULT_H = 0.1
DEFAULT_EPS = 1.0
EXP_CLAMP = 500.0
EXP_LIPSCHITZ_FACTOR = 50.0
GAMMA_FLOOR = 1e-12


class ConsistencyWarning(UserWarning):
    """eps-insensitive settings that are not classification-consistent."""


@dataclass(frozen=True)
class LossSpec:
    """Which loss, plus its smoothing width ``h`` and insensitivity ``eps``.

    ``h`` and ``eps`` are ``None`` for kinds that do not use them.  Use
    :meth:`make` to get defaults filled in.
    """

    kind: str
    h: float | None = None
    eps: float | None = None
    # only consulted for the exponential loss
    exp_lipschitz_factor: float = EXP_LIPSCHITZ_FACTOR

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown loss kind {self.kind!r}")
        if self.kind in _HUBER_KINDS:
            if self.h is None or not (math.isfinite(self.h) and self.h > 0):
                raise ParameterError(f"{self.kind} needs h > 0, got {self.h}")
        elif self.h is not None:
            raise ParameterError(f"{self.kind} takes no h")
        if self.kind == "eps_insensitive":
            if self.eps is None or not (math.isfinite(self.eps) and self.eps >= 0):
                raise ParameterError(f"eps must be >= 0, got {self.eps}")
        elif self.kind == "absolute":
            if self.eps not in (None, 0.0):
                raise ParameterError("absolute loss fixes eps = 0")
        elif self.eps is not None:
            raise ParameterError(f"{self.kind} takes no eps")
        if not self.exp_lipschitz_factor > 0:
            raise ParameterError("exp_lipschitz_factor must be positive")

    @classmethod
    def make(cls, kind, h=None, eps=None, **kw):
        """Build a spec, accepting CLI spellings and filling default h / eps."""
        kind = CLI_NAMES.get(kind, kind)
        if kind in _HUBER_KINDS and h is None:
            h = DEFAULT_H
        if kind == "eps_insensitive" and eps is None:
            eps = DEFAULT_EPS
        if kind not in _HUBER_KINDS:
            h = None
        if kind != "eps_insensitive":
            eps = None
        return cls(kind, h, eps, **kw)

    @property
    def is_classification(self):
        return self.kind in CLASSIFICATION_KINDS

    @property
    def cli_name(self):
        return {v: k for k, v in CLI_NAMES.items()}[self.kind]

    @property
    def width(self):
        """Insensitivity width actually used (0 for the absolute loss)."""
        return 0.0 if self.kind == "absolute" else (self.eps or 0.0)

    def check_targets(self, y):
        y = np.asarray(y, dtype=float)
        if self.is_classification and not np.all(np.abs(y) == 1.0):
            raise InputError(f"{self.kind} loss needs targets in {{-1, +1}}")
        if self.kind == "eps_insensitive" and np.all(np.abs(y) == 1.0):
            if self.eps - self.h >= 1.0:
                warnings.warn(
                    f"eps - h = {self.eps - self.h:g} >= 1 on +-1 targets: "
                    "not consistent for binary classification",
                    ConsistencyWarning,
                    stacklevel=2,
                )


@dataclass(frozen=True)
class LossEvaluation:
    value: float
    gradient: np.ndarray


def _check(spec, beta, X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if X.ndim != 2:
        raise InputError(f"X must be 2-D, got shape {X.shape}")
    n, d = X.shape
    if beta.shape != (d,):
        raise InputError(f"beta has shape {beta.shape}, X has {d} columns")
    if y.shape != (n,):
        raise InputError(f"y has shape {y.shape}, X has {n} rows")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y)) and np.all(np.isfinite(beta))):
        raise InputError("non-finite input")
    spec.check_targets(y)
    return beta, X, y


def _huber_hinge(u, h):
    """Huber-smoothed ``max(0, u)`` with the kink at 0 spread over [-h, h].

    Value and derivative with respect to ``u``.  Both hinge-type losses are
    sums of this with a shifted argument.
    """
    quad = np.abs(u) <= h
    value = np.where(u > h, u, 0.0)
    value = np.where(quad, (u + h) ** 2 / (4.0 * h), value)
    deriv = np.where(u > h, 1.0, 0.0)
    deriv = np.where(quad, (u + h) / (2.0 * h), deriv)
    return value, deriv


def _exp_terms(m):
    """``exp(-m)`` with the exponent clamped; also says whether it clamped."""
    arg = -m
    clamped = bool(np.any(arg > EXP_CLAMP))
    return np.exp(np.minimum(arg, EXP_CLAMP)), clamped


def _value_from_scores(spec, s, y):
    """Per-sample loss terms as a function of the scores ``s = X beta``."""
    kind = spec.kind
    if kind == "squared":
        return (s - y) ** 2
    if kind == "one_sided_squared":
        return np.maximum(1.0 - y * s, 0.0) ** 2
    if kind == "huber_hinge":
        # margin branches: 0 above 1+h, quadratic within h of 1, linear below
        return _huber_hinge(1.0 - y * s, spec.h)[0]
    if kind == "logistic":
        return np.logaddexp(0.0, -y * s)
    if kind == "exponential":
        terms, clamped = _exp_terms(y * s)
        if clamped:
            return np.full_like(s, np.inf)
        return terms
    # eps-insensitive: two mirrored hinges on the residual, shifted by eps
    res = y - s
    w = spec.width
    return _huber_hinge(-res - w, spec.h)[0] + _huber_hinge(res - w, spec.h)[0]


def _dscores(spec, s, y):
    """Derivative of each per-sample term with respect to its score."""
    kind = spec.kind
    if kind == "squared":
        return 2.0 * (s - y)
    if kind == "one_sided_squared":
        return np.where(y * s <= 1.0, 2.0 * s - 2.0 * y, 0.0)
    if kind == "huber_hinge":
        return -y * _huber_hinge(1.0 - y * s, spec.h)[1]
    if kind == "logistic":
        return -y * expit(-y * s)
    if kind == "exponential":
        return -y * _exp_terms(y * s)[0]
    res = y - s
    w = spec.width
    return _huber_hinge(-res - w, spec.h)[1] - _huber_hinge(res - w, spec.h)[1]


def loss_value(spec, beta, X, y):
    """Total loss ``sum_i f(<beta, x_i>, y_i)``.

    Returns ``inf`` for the exponential loss when some exponent ``-y_i s_i``
    exceeds 500; callers treat that as divergence.
    """
    beta, X, y = _check(spec, beta, X, y)
    return float(np.sum(_value_from_scores(spec, X @ beta, y)))


def loss_gradient(spec, beta, X, y):
    """Gradient of :func:`loss_value` with respect to ``beta``."""
    beta, X, y = _check(spec, beta, X, y)
    return X.T @ _dscores(spec, X @ beta, y)


def loss_and_gradient(spec, beta, X, y):
    beta, X, y = _check(spec, beta, X, y)
    s = X @ beta
    return LossEvaluation(
        float(np.sum(_value_from_scores(spec, s, y))),
        X.T @ _dscores(spec, s, y),
    )


def lipschitz_constant(spec, gamma):
    """Lipschitz constant of the loss gradient.

    ``gamma`` is the largest eigenvalue of ``X^T X``.  The exponential loss
    has no global constant; ``spec.exp_lipschitz_factor * gamma`` (50 by
    default) is a heuristic.  A zero ``gamma`` is floored at ``1e-12`` so
    step sizes stay finite.
    """
    gamma = float(gamma)
    if not gamma >= 0:
        raise ParameterError(f"gamma must be >= 0, got {gamma}")
    gamma = max(gamma, GAMMA_FLOOR)
    kind = spec.kind
    if kind in ("squared", "one_sided_squared"):
        return 2.0 * gamma
    if kind == "huber_hinge":
        return gamma / (2.0 * spec.h)
    if kind == "logistic":
        return gamma / 4.0
    if kind == "exponential":
        return spec.exp_lipschitz_factor * gamma
    return gamma / spec.h


def boundaries(spec):
    """Branch boundaries of the piecewise losses in their natural variable.

    Margin ``y s`` for the hinge-type margin losses, residual ``y - s`` for
    eps-insensitive / absolute; empty for the smooth losses.
    """
    if spec.kind == "one_sided_squared":
        return (1.0,)
    if spec.kind == "huber_hinge":
        return (1.0 - spec.h, 1.0 + spec.h)
    if spec.kind in ("eps_insensitive", "absolute"):
        w, h = spec.width, spec.h
        return tuple(sorted({-w - h, -w + h, w - h, w + h}))
    return ()
