"""The k-support norm and the proximal operator of its half square.

Every routine works on sorted magnitudes.  Vectors are sorted by ``|beta|``
in nonincreasing order with a stable sort, the permutation and signs are
kept, and results are mapped back to the original coordinates at the end.
"""
from dataclasses import dataclass

import numba
import numpy as np

__all__ = [
    "KSupportDecomposition",
    "ParameterError",
    "InputError",
    "OracleError",
    "decompose",
    "find_r",
    "ksup_norm",
    "prox_ksup_sq",
    "prox_oracle",
]

# relative slack used in the r / (r, l) boundary comparisons
RTOL = 1e-12


class ParameterError(ValueError):
    """A hyperparameter (k, tau, ...) is outside its admissible range."""


class InputError(ValueError):
    """A data argument is malformed (non-finite, wrong shape, ...)."""


class OracleError(RuntimeError):
    """The reference prox oracle failed to converge within its budget."""


def _as_vector(beta):
    beta = np.asarray(beta, dtype=float)
    if beta.ndim != 1 or beta.size == 0:
        raise InputError(f"expected a non-empty 1-D vector, got shape {beta.shape}")
    if not np.all(np.isfinite(beta)):
        raise InputError("vector has non-finite entries")
    return beta


def _check_k(k, d):
    if isinstance(k, bool) or int(k) != k:
        raise ParameterError(f"k must be an integer, got {k!r}")
    k = int(k)
    if not 1 <= k <= d:
        raise ParameterError(f"k={k} outside [1, {d}]")
    return k


def _sort_desc(beta):
    mag = np.abs(beta)
    # stable descending order: ties keep their original index order
    perm = np.argsort(-mag, kind="stable")
    return mag[perm], perm


@dataclass(frozen=True)
class KSupportDecomposition:
    """Sorted-magnitude structure behind one k-support norm evaluation.

    ``sorted_abs[i] == abs(beta[perm[i]])``.  The first ``k - r - 1`` sorted
    entries contribute their squares, the remaining ones contribute through
    ``tail_sum ** 2 / (r + 1)``.
    """

    k: int
    r: int
    sorted_abs: np.ndarray
    perm: np.ndarray
    signs: np.ndarray
    head_sq_sum: float
    tail_sum: float

    @property
    def norm_sq(self):
        return self.head_sq_sum + self.tail_sum**2 / (self.r + 1)

    @property
    def norm(self):
        return float(np.sqrt(self.norm_sq))

    def reconstruct(self):
        """Undo the sort and restore signs, giving back ``beta``."""
        out = np.empty_like(self.sorted_abs)
        out[self.perm] = self.sorted_abs
        return out * self.signs


@numba.njit(cache=True)
def _scan_r(z, k, slack):
    """First r = 0, 1, ... satisfying the r-criterion on sorted ``z``; -1 if none."""
    total = 0.0
    for i in range(z.size):
        total += z[i]
    # head = sum of the k - r - 1 largest entries, shrinking as r grows
    head = 0.0
    for i in range(k - 1):
        head += z[i]
    for r in range(k):
        h = k - r - 1
        tail = (total - head) / (r + 1)
        left = h == 0 or z[h - 1] > tail - slack
        if left and tail >= z[h] - slack:
            return r
        if h > 0:
            head -= z[h - 1]
    return -1


def _least_violated_r(z, k):
    zp = np.concatenate(([np.inf], z))
    cs = np.concatenate(([0.0], np.cumsum(z)))
    r = np.arange(k)
    tail = (cs[-1] - cs[k - r - 1]) / (r + 1)
    viol = np.maximum(tail - zp[k - r - 1], 0.0) + np.maximum(zp[k - r] - tail, 0.0)
    return int(np.argmin(viol))


def _find_r_sorted(z, k):
    if z[0] == 0.0:
        return k - 1
    r = _scan_r(z, k, RTOL * z[0])
    # -1 is only reachable through rounding; take the least violated r
    return r if r >= 0 else _least_violated_r(z, k)


def find_r(sorted_abs, k):
    """Return the unique ``r`` in ``{0, ..., k-1}`` splitting head from tail.

    ``r`` satisfies ``z[k-r-1] > T / (r+1) >= z[k-r]`` (1-indexed ``z``)
    where ``T`` is the sum of ``z[k-r:]``; the left inequality is vacuous
    when ``r = k - 1``.  Comparisons carry a relative slack of ``1e-12`` and
    the first ``r`` of an upward scan wins.  The all-zero vector maps to
    ``k - 1``.
    """
    z = np.asarray(sorted_abs, dtype=float)
    if z.ndim != 1 or z.size == 0:
        raise InputError("sorted_abs must be a non-empty 1-D vector")
    k = _check_k(k, z.size)
    if np.any(z < 0) or np.any(np.diff(z) > 0):
        raise InputError("sorted_abs must be nonnegative and nonincreasing")
    return _find_r_sorted(z, k)


def decompose(beta, k):
    """Sort ``beta`` by magnitude and locate its head/tail split."""
    beta = _as_vector(beta)
    k = _check_k(k, beta.size)
    z, perm = _sort_desc(beta)
    signs = np.where(beta < 0, -1.0, 1.0)
    r = _find_r_sorted(z, k)
    head_sq = float(np.sum(z[: k - r - 1] ** 2))
    tail = float(np.sum(z[k - r - 1 :]))
    return KSupportDecomposition(k, r, z, perm, signs, head_sq, tail)


def ksup_norm(beta, k):
    """k-support norm of ``beta``.

    Equals the l1 norm for ``k = 1`` and the l2 norm for ``k = len(beta)``.

    >>> round(ksup_norm([3.0, 1.0, 1.0], 2) ** 2, 12)
    13.0
    """
    beta = _as_vector(beta)
    k = _check_k(k, beta.size)
    if not beta.any():
        return 0.0
    return decompose(beta, k).norm


def ksup_norm_sq(beta, k):
    beta = _as_vector(beta)
    k = _check_k(k, beta.size)
    return _norm_sq_unchecked(beta, k)


def _norm_sq_unchecked(beta, k):
    z = -np.sort(-np.abs(beta))
    if z[0] == 0.0:
        return 0.0
    r = _find_r_sorted(z, k)
    h = k - r - 1
    return float(z[:h] @ z[:h] + np.sum(z[h:]) ** 2 / (r + 1))


@numba.njit(cache=True)
def _search_rl(z, k, b, slack):
    """Find the (r, l) pair whose KKT inequalities hold; (-1, -1, 0) if none.

    ``z`` is sorted nonincreasing, ``b = 1 / tau``.  With
    ``theta = T / (l - k + (b+1)(r+1))``, ``T = z_{k-r} + ... + z_l``
    (1-indexed) the pair must satisfy ``z_{k-r-1} > (b+1) theta >= z_{k-r}``
    and ``z_l > theta >= z_{l+1}``, with ``z_0 = inf`` and ``z_{d+1} = -inf``.
    """
    d = z.size
    cs = np.empty(d + 1)
    cs[0] = 0.0
    for i in range(d):
        cs[i + 1] = cs[i] + z[i]
    for r in range(k):
        h = k - r - 1
        zl_prev = np.inf if h == 0 else z[h - 1]
        for l in range(k, d + 1):
            theta = (cs[l] - cs[h]) / (l - k + (b + 1.0) * (r + 1))
            bt = (b + 1.0) * theta
            if not (zl_prev > bt - slack and bt >= z[h] - slack):
                continue
            nxt = -np.inf if l == d else z[l]
            if z[l - 1] > theta - slack and theta >= nxt - slack:
                return r, l, theta
    return -1, -1, 0.0


def _prox_sorted(z, k, tau):
    """Prox of ``(tau/2) ||.||_k^2`` at a sorted nonnegative vector ``z``.

    With ``b = 1 / tau`` the solution is ``b/(b+1) z_i`` on the head
    ``i < k-r``, ``z_i - theta`` on ``k-r <= i <= l`` and zero after ``l``.
    """
    b = 1.0 / tau
    r, l, theta = _search_rl(z, k, b, RTOL * z[0])
    if r >= 0:
        return _prox_candidate(z, k, b, r, l, theta)
    # rounding left no pair standing; the true prox is still one of the
    # candidates, and it is the one with the smallest prox objective
    cs = np.concatenate(([0.0], np.cumsum(z)))
    best, best_val = None, np.inf
    for r in range(k):
        for l in range(k, z.size + 1):
            theta = (cs[l] - cs[k - r - 1]) / (l - k + (b + 1.0) * (r + 1))
            q = _prox_candidate(z, k, b, r, l, theta)
            val = 0.5 * np.sum((q - z) ** 2) + 0.5 * tau * _norm_sq_unchecked(q, k)
            if val < best_val:
                best, best_val = q, val
    return best


def _prox_candidate(z, k, b, r, l, theta):
    q = np.zeros_like(z)
    h = k - r - 1
    q[:h] = z[:h] * (b / (b + 1.0))
    q[h:l] = np.maximum(z[h:l] - theta, 0.0)
    return q


def prox_ksup_sq(v, k, tau):
    """Proximal operator of the half-squared k-support norm.

    Returns ``argmin_x 0.5 * ||x - v||^2 + 0.5 * tau * ksup_norm(x, k)**2``.

    Parameters
    ----------
    v : array_like, shape (d,)
        Point to evaluate the prox at.
    k : int
        Support parameter, ``1 <= k <= d``.
    tau : float
        Nonnegative weight.  ``tau = 0`` gives the identity.

    Returns
    -------
    ndarray, shape (d,)
        The prox point.  Its sign pattern and magnitude ordering follow ``v``.
    """
    v = _as_vector(v)
    k = _check_k(k, v.size)
    tau = float(tau)
    if not np.isfinite(tau) or tau < 0:
        raise ParameterError(f"tau must be finite and >= 0, got {tau}")
    return _prox_unchecked(v, k, tau)


def _prox_unchecked(v, k, tau):
    if tau == 0.0:
        return v.copy()
    if not v.any():
        return np.zeros_like(v)
    if k == v.size:
        return v / (1.0 + tau)
    z, perm = _sort_desc(v)
    q = _prox_sorted(z, k, tau)
    out = np.empty_like(q)
    out[perm] = q
    return np.copysign(out, v)


def _orthant_gradient_sq(u, k):
    """Gradient of ``0.5 * ksup_norm(u, k)**2`` on the nonnegative orthant.

    Head coordinates get ``u_i``, tail coordinates (zeros included, as a
    one-sided derivative) get ``T / (r + 1)``.
    """
    if not u.any():
        return np.zeros_like(u)
    dec = decompose(u, k)
    h = k - dec.r - 1
    q_sorted = np.full_like(dec.sorted_abs, dec.tail_sum / (dec.r + 1))
    q_sorted[:h] = dec.sorted_abs[:h]
    out = np.empty_like(q_sorted)
    out[dec.perm] = q_sorted
    return out


def prox_oracle(v, k, tau, steps=100_000, step_size=None):
    """Slow reference for :func:`prox_ksup_sq`, for ``d <= 4``.

    Signs are folded out first, leaving a strongly convex problem over
    ``u >= 0`` whose objective is continuously differentiable there.  Plain
    projected gradient descent with a fixed step (default
    ``1 / (1 + tau * d)``, the inverse gradient Lipschitz bound) is run until
    an update moves the iterate by less than ``1e-13`` relative to ``|v|``.  Only the norm formula is
    used; the (r, l) search of the fast prox is never touched.

    Raises
    ------
    OracleError
        If the step budget runs out first.
    """
    v = _as_vector(v)
    if v.size > 4:
        raise ParameterError("prox_oracle is limited to d <= 4")
    k = _check_k(k, v.size)
    if not tau > 0:
        raise ParameterError("tau must be positive")
    if not v.any():
        return np.zeros_like(v)
    a = np.abs(v)
    if step_size is None:
        step_size = 1.0 / (1.0 + tau * v.size)

    scale = np.max(a)
    u = a / (1.0 + tau)
    for _ in range(steps):
        g = (u - a) + tau * _orthant_gradient_sq(u, k)
        u_new = np.maximum(u - step_size * g, 0.0)
        moved = np.max(np.abs(u_new - u))
        u = u_new
        if moved < 1e-13 * scale:
            return np.copysign(u, v)
    raise OracleError(f"prox oracle did not settle in {steps} steps")
