import warnings

import numpy as np
import pytest

from ksupport.losses import (
    KINDS,
    ConsistencyWarning,
    LossSpec,
    boundaries,
    lipschitz_constant,
    loss_and_gradient,
    loss_gradient,
    loss_value,
)
from ksupport.norms import InputError, ParameterError
from ksupport.solver import spectral_norm_sq

SPECS = [LossSpec.make(kind) for kind in KINDS] + [
    LossSpec.make("huber_hinge", h=0.5),
    LossSpec.make("eps_insensitive", h=0.5, eps=0.2),  # overlapping quadratic zones
]
IDS = [f"{s.kind}-h{s.h}-e{s.eps}" for s in SPECS]


def natural_variable(spec, beta, X, y):
    s = X @ beta
    return y - s if spec.kind in ("eps_insensitive", "absolute", "squared") else y * s


def random_problem(rng, spec, n=None, d=None, scale=1.0):
    n = n or int(rng.integers(1, 31))
    d = d or int(rng.integers(1, 11))
    X = rng.normal(size=(n, d))
    if spec.is_classification:
        y = rng.choice([-1.0, 1.0], size=n)
    else:
        y = rng.normal(scale=2.0, size=n)
    beta = rng.normal(scale=scale, size=d)
    return beta, X, y


def away_from_kinks(spec, beta, X, y, margin=1e-3):
    u = natural_variable(spec, beta, X, y)
    return all(np.all(np.abs(u - b) > margin) for b in boundaries(spec))


def central_diff(spec, beta, X, y, step=1e-6):
    g = np.empty_like(beta)
    for i in range(beta.size):
        e = np.zeros_like(beta)
        e[i] = step
        g[i] = (loss_value(spec, beta + e, X, y) - loss_value(spec, beta - e, X, y)) / (2 * step)
    return g


# ---- closed-form examples ----------------------------------------------

def test_squared_at_zero(rng):
    X, y = rng.normal(size=(7, 3)), rng.normal(size=7)
    spec = LossSpec.make("squared")
    assert loss_value(spec, np.zeros(3), X, y) == pytest.approx(y @ y, rel=1e-15)
    np.testing.assert_allclose(loss_gradient(spec, np.zeros(3), X, y), -2 * X.T @ y, rtol=1e-14)


def test_logistic_at_zero(rng):
    n = 9
    X, y = rng.normal(size=(n, 4)), rng.choice([-1.0, 1.0], size=n)
    spec = LossSpec.make("logistic")
    assert loss_value(spec, np.zeros(4), X, y) == pytest.approx(n * np.log(2), rel=1e-15)
    np.testing.assert_allclose(loss_gradient(spec, np.zeros(4), X, y), -0.5 * X.T @ y, rtol=1e-14)


def test_exponential_at_zero(rng):
    X, y = rng.normal(size=(6, 2)), rng.choice([-1.0, 1.0], size=6)
    assert loss_value(LossSpec.make("exponential"), np.zeros(2), X, y) == 6.0


def test_hinge_on_margin_one():
    # y <beta, x> = 1 lands in the quadratic branch: (1 + h - 1)^2 / (4h) = h / 4
    spec = LossSpec.make("huber_hinge", h=0.5)
    assert loss_value(spec, np.array([1.0]), np.ones((1, 1)), np.ones(1)) == 0.125


def test_eps_insensitive_inside_tube():
    spec = LossSpec.make("eps_insensitive", h=0.5, eps=1.0)
    assert loss_value(spec, np.array([2.0]), np.ones((1, 1)), np.array([2.0])) == 0.0


def test_hinge_zero_gradient_when_margins_large(rng):
    spec = LossSpec.make("huber_hinge", h=0.1)
    X = rng.normal(size=(10, 3))
    beta = rng.normal(size=3)
    y = np.sign(X @ beta)
    beta = beta * (1.2 / np.min(np.abs(X @ beta)))
    assert np.all(y * (X @ beta) > 1.1)
    np.testing.assert_array_equal(loss_gradient(spec, beta, X, y), np.zeros(3))


@pytest.mark.parametrize(
    "spec, gamma, expected",
    [
        (LossSpec.make("squared"), 4.0, 8.0),
        (LossSpec.make("one_sided_squared"), 4.0, 8.0),
        (LossSpec.make("huber_hinge", h=0.1), 4.0, 20.0),
        (LossSpec.make("logistic"), 4.0, 1.0),
        (LossSpec.make("exponential"), 4.0, 200.0),
        (LossSpec.make("eps_insensitive", h=0.1, eps=1.0), 4.0, 40.0),
        (LossSpec.make("absolute", h=0.5), 4.0, 8.0),
    ],
)
def test_lipschitz_constants(spec, gamma, expected):
    assert lipschitz_constant(spec, gamma) == pytest.approx(expected, rel=1e-15)


def test_lipschitz_floor_and_override():
    assert lipschitz_constant(LossSpec.make("squared"), 0.0) == 2e-12
    spec = LossSpec.make("exponential", exp_lipschitz_factor=10.0)
    assert lipschitz_constant(spec, 3.0) == 30.0


# ---- properties ---------------------------------------------------------

@pytest.mark.parametrize("spec", SPECS, ids=IDS)
def test_gradient_matches_finite_differences(spec, rng):
    done = 0
    while done < 20:
        beta, X, y = random_problem(rng, spec, scale=0.3 if spec.kind == "exponential" else 1.0)
        if not away_from_kinks(spec, beta, X, y):
            continue
        g = loss_gradient(spec, beta, X, y)
        fd = central_diff(spec, beta, X, y)
        assert np.linalg.norm(g - fd) <= 1e-5 * max(np.linalg.norm(g), 1e-8)
        done += 1


@pytest.mark.parametrize("spec", [s for s in SPECS if s.kind != "exponential"], ids=lambda s: s.kind)
def test_empirical_lipschitz(spec, rng):
    for _ in range(100):
        a, X, y = random_problem(rng, spec, scale=2.0)
        b = a + rng.normal(scale=10 ** rng.uniform(-3, 0.5), size=a.size)
        L = lipschitz_constant(spec, spectral_norm_sq(X))
        lhs = np.linalg.norm(loss_gradient(spec, a, X, y) - loss_gradient(spec, b, X, y))
        assert lhs <= L * np.linalg.norm(a - b) * (1 + 1e-8)


@pytest.mark.parametrize("spec", SPECS, ids=IDS)
def test_convexity(spec, rng):
    for _ in range(50):
        a, X, y = random_problem(rng, spec, scale=0.5)
        b = rng.normal(scale=0.5, size=a.size)
        t = rng.uniform()
        fa, fb = loss_value(spec, a, X, y), loss_value(spec, b, X, y)
        assert loss_value(spec, t * a + (1 - t) * b, X, y) <= t * fa + (1 - t) * fb + 1e-9


@pytest.mark.parametrize("spec", [s for s in SPECS if s.kind in ("huber_hinge", "eps_insensitive", "absolute")],
                         ids=lambda s: f"{s.kind}-{s.h}-{s.eps}")
def test_continuity_at_branch_boundaries(spec):
    X = np.ones((1, 1))
    for b in boundaries(spec):
        vals = []
        for off in (-1e-9, 1e-9):
            u = b + off
            if spec.kind == "huber_hinge":
                beta, y = np.array([u]), np.ones(1)
            else:
                beta, y = np.zeros(1), np.array([u])
            vals.append((loss_value(spec, beta, X, y), loss_gradient(spec, beta, X, y)[0]))
        assert abs(vals[0][0] - vals[1][0]) <= 1e-6
        assert abs(vals[0][1] - vals[1][1]) <= 1e-6


def test_eps_zero_is_absolute(rng):
    eps0 = LossSpec.make("eps_insensitive", h=0.3, eps=0.0)
    absl = LossSpec.make("absolute", h=0.3)
    for _ in range(50):
        beta, X, y = random_problem(rng, absl)
        assert loss_value(eps0, beta, X, y) == loss_value(absl, beta, X, y)
        np.testing.assert_array_equal(loss_gradient(eps0, beta, X, y), loss_gradient(absl, beta, X, y))


def test_one_sided_below_squared(rng):
    f2 = LossSpec.make("squared")
    f2m = LossSpec.make("one_sided_squared")
    for _ in range(50):
        beta, X, y = random_problem(rng, f2m)
        assert loss_value(f2m, beta, X, y) <= loss_value(f2, beta, X, y) + 1e-12
    # all margins violated: the two coincide
    X = rng.normal(size=(8, 3))
    y = rng.choice([-1.0, 1.0], size=8)
    beta = np.zeros(3)
    assert loss_value(f2m, beta, X, y) == loss_value(f2, beta, X, y)


def test_all_losses_nonnegative(rng):
    for spec in SPECS:
        for _ in range(20):
            beta, X, y = random_problem(rng, spec)
            ev = loss_and_gradient(spec, beta, X, y)
            assert ev.value >= 0 and ev.gradient.shape == beta.shape


def test_exponential_overflow_flag():
    spec = LossSpec.make("exponential")
    X = np.ones((1, 1))
    assert loss_value(spec, np.array([-600.0]), X, np.ones(1)) == np.inf
    assert np.isfinite(loss_value(spec, np.array([-400.0]), X, np.ones(1)))


# ---- validation ---------------------------------------------------------

def test_classification_targets_checked():
    with pytest.raises(InputError):
        loss_value(LossSpec.make("logistic"), np.zeros(1), np.ones((2, 1)), np.array([1.0, 0.0]))


def test_dimension_mismatch():
    with pytest.raises(InputError):
        loss_value(LossSpec.make("squared"), np.zeros(2), np.ones((3, 1)), np.zeros(3))


@pytest.mark.parametrize("kwargs", [
    dict(kind="huber_hinge", h=0.0),
    dict(kind="eps_insensitive", h=0.1, eps=-1.0),
    dict(kind="absolute", h=0.1, eps=0.5),
    dict(kind="nonsense"),
])
def test_bad_specs(kwargs):
    with pytest.raises(ParameterError):
        LossSpec(**kwargs)


def test_defaults_filled():
    assert LossSpec.make("hinge") == LossSpec("huber_hinge", h=0.1)
    assert LossSpec.make("eps-insensitive") == LossSpec("eps_insensitive", h=0.1, eps=1.0)
    assert LossSpec.make("logistic", h=0.5).h is None


def test_consistency_warning():
    spec = LossSpec.make("eps_insensitive", h=0.1, eps=1.5)
    with pytest.warns(ConsistencyWarning):
        spec.check_targets(np.array([1.0, -1.0]))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        LossSpec.make("eps_insensitive", h=0.1, eps=1.0).check_targets(np.array([1.0, -1.0]))
