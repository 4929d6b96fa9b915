"""Accelerated proximal gradient (FISTA) for k-support regularized risk.

Minimizes ``f(beta) + (lam / 2) * ksup_norm(beta, k) ** 2``.  Squaring the
norm changes the regularization weight that gives a particular solution, not
the set of solutions reachable by sweeping ``lam``.
"""
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import losses

from .norms import ParameterError, _check_k, _norm_sq_unchecked, _prox_unchecked, ksup_norm_sq

__all__ = [
    "SolverConfig",
    "FitResult",
    "DivergenceError",
    "ConvergenceWarning",
    "spectral_norm_sq",
    "objective",
    "fit",
]

log = logging.getLogger(__name__)


class DivergenceError(RuntimeError):
    """The exponential loss overflowed; ``beta`` holds the offending iterate."""

    def __init__(self, msg, beta, iterations):
        super().__init__(msg)
        self.beta = beta
        self.iterations = iterations


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SolverConfig:
    max_iter: int = 10_000
    tol: float = 1e-8
    lipschitz_override: float | None = None
    record_trace: bool = False

    def __post_init__(self):
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ParameterError(f"max_iter must be a positive integer, got {self.max_iter}")
        if not self.tol > 0:
            raise ParameterError(f"tol must be positive, got {self.tol}")
        if self.lipschitz_override is not None and not self.lipschitz_override > 0:
            raise ParameterError("lipschitz_override must be positive")


@dataclass
class FitResult:
    beta: np.ndarray
    objective: float
    iterations: int
    converged: bool
    trace: list[float] | None = field(default=None, repr=False)


def spectral_norm_sq(X, tol=1e-10, max_iter=1000, return_flag=False):
    """Largest eigenvalue of ``X^T X`` by power iteration.

    ``X^T X`` is applied as ``X`` followed by ``X^T``.  The start vector is
    all ones; if that is orthogonal to everything ``X`` sees (the iterate
    collapses to zero) it is replaced by a fixed-seed Gaussian vector.

    With ``return_flag=True`` also returns whether the relative change
    dropped below ``tol``; otherwise non-convergence only warns.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or not np.all(np.isfinite(X)):
        raise ValueError("X must be a finite 2-D array")
    d = X.shape[1]
    v = np.ones(d) / np.sqrt(d)
    lam = 0.0
    converged = False
    reseeded = False
    for _ in range(max_iter):
        w = X.T @ (X @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            if reseeded or not X.any():
                converged = True
                lam = 0.0
                break
            v = np.random.default_rng(0).standard_normal(d)
            v /= np.linalg.norm(v)
            reseeded = True
            continue
        # Rayleigh quotient; v has unit norm
        lam_new = float(v @ w)
        v = w / nw
        if abs(lam_new - lam) <= tol * max(abs(lam_new), np.finfo(float).tiny):
            lam = lam_new
            converged = True
            break
        lam = lam_new
    if not converged:
        warnings.warn("power iteration did not converge", ConvergenceWarning, stacklevel=2)
    if return_flag:
        return lam, converged
    return lam


def objective(beta, data, spec, k, lam):
    """``loss_value(beta) + (lam / 2) * ksup_norm(beta, k) ** 2``."""
    beta = np.asarray(beta, dtype=float)
    f = losses.loss_value(spec, beta, data.X, data.y)
    if lam == 0:
        return f
    return f + 0.5 * lam * ksup_norm_sq(beta, k)


def _validate(data, spec, k, lam):
    k = _check_k(k, data.d)
    lam = float(lam)
    if not (np.isfinite(lam) and lam >= 0):
        raise ParameterError(f"lambda must be finite and >= 0, got {lam}")
    spec.check_targets(data.y)
    return k, lam


def fit(data, spec, k, lam, cfg=None, gamma=None):
    """Minimize the regularized risk with FISTA, starting from zero.

    Each step is ``beta+ = prox(alpha - grad f(alpha) / L, k, lam / L)``
    followed by ``alpha+ = beta+ + (t - 1) / (t + 2) * (beta+ - beta)``.
    Stops when the objective moves by at most ``tol * max(1, |obj|)`` or
    after ``max_iter`` steps, and returns the best iterate seen.

    Parameters
    ----------
    data : Dataset
    spec : LossSpec
    k : int
    lam : float
        Weight of the half-squared k-support norm, ``>= 0``.
    cfg : SolverConfig, optional
    gamma : float, optional
        Precomputed ``spectral_norm_sq(data.X)``; saves a power iteration
        when fitting many models on the same data.

    Raises
    ------
    DivergenceError
        If the exponential loss overflows.
    """
    cfg = cfg or SolverConfig()
    k, lam = _validate(data, spec, k, lam)
    X, y = data.X, data.y
    if cfg.lipschitz_override is not None:
        L = float(cfg.lipschitz_override)
    else:
        if gamma is None:
            gamma = spectral_norm_sq(X)
        L = losses.lipschitz_constant(spec, gamma)
    tau = lam / L
    d = data.d

    def total(beta, s):
        f = float(np.sum(losses._value_from_scores(spec, s, y)))
        if lam == 0 or not np.isfinite(f):
            return f
        return f + 0.5 * lam * _norm_sq_unchecked(beta, k)

    beta = np.zeros(d)
    s_beta = np.zeros(X.shape[0])
    alpha, s_alpha = beta, s_beta
    obj = total(beta, s_beta)
    best_beta, best_obj = beta, obj
    trace = [] if cfg.record_trace else None
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        grad = X.T @ losses._dscores(spec, s_alpha, y)
        beta_new = _prox_unchecked(alpha - grad / L, k, tau)
        s_new = X @ beta_new
        obj_new = total(beta_new, s_new)
        if not np.isfinite(obj_new):
            raise DivergenceError(
                f"{spec.kind} loss diverged at iteration {it}", beta_new, it
            )
        if trace is not None:
            trace.append(obj_new)
        if obj_new < best_obj:
            best_beta, best_obj = beta_new, obj_new
        c = (it - 1.0) / (it + 2.0)
        # scores are linear in beta, so the momentum step needs no matvec
        alpha = beta_new + c * (beta_new - beta)
        s_alpha = s_new + c * (s_new - s_beta)
        beta, s_beta = beta_new, s_new
        if abs(obj_new - obj) <= cfg.tol * max(1.0, abs(obj)):
            converged = True
            obj = obj_new
            break
        obj = obj_new
    log.debug("fit %s k=%d lam=%g: %d iterations, obj=%g", spec.kind, k, lam, it, best_obj)
    return FitResult(best_beta.copy(), best_obj, it, converged, trace)
