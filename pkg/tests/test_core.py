import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bargain_opt.core import (
    GRAD_FLOOR,
    DomainError,
    MonotoneTransform,
    Objective,
    StepSchedule,
    apply_transform,
    as_point,
    fd_gradient,
    quadratic,
    transform_objective,
)
from bargain_opt.problems import quad_pair, toy_kink_distance, toy_losses

TRANSFORMS = [
    MonotoneTransform.identity(),
    MonotoneTransform.signed_power(3),
    MonotoneTransform.signed_power(4),
    MonotoneTransform.shifted_power(5, 4),
    MonotoneTransform.exponential(),
]


def square_1d():
    return Objective(lambda x: float(x[0] ** 2), lambda x: np.array([2.0 * x[0]]), "x^2")


def test_as_point_validates():
    assert as_point([1, 2]).dtype == np.float64
    with pytest.raises(ValueError):
        as_point([])
    with pytest.raises(ValueError):
        as_point([1.0, np.nan])
    with pytest.raises(ValueError):
        as_point([1.0, 2.0], dim=3)


@pytest.mark.parametrize(
    "t, s, expected",
    [
        (MonotoneTransform.signed_power(4), -2.0, -16.0),
        (MonotoneTransform.identity(), 3.7, 3.7),
        (MonotoneTransform.exponential(), 0.0, 1.0),
        (MonotoneTransform.shifted_power(5, 4), -3.0, 16.0),
    ],
)
def test_apply_transform_examples(t, s, expected):
    assert apply_transform(t, s) == expected


def test_shifted_power_domain_is_enforced():
    t = MonotoneTransform.shifted_power(5, 4)
    with pytest.raises(DomainError):
        apply_transform(t, -5.0)
    with pytest.raises(DomainError):
        t.derivative(-7.0)


def test_invalid_transform_parameters():
    with pytest.raises(ValueError):
        MonotoneTransform.signed_power(1.0)
    with pytest.raises(ValueError):
        MonotoneTransform("cubic")


@pytest.mark.parametrize("t", TRANSFORMS, ids=lambda t: t.describe())
def test_transforms_strictly_increasing_on_grid(t):
    lo = max(t.interval[0], -6.0)
    grid = np.linspace(lo, 6.0, 2001)[1:]
    vals = np.array([t(s) for s in grid])
    assert np.all(np.diff(vals) > 0)
    # derivative vanishes only at s = 0 for signed powers
    ders = np.array([t.derivative(s) for s in grid if s != 0.0])
    assert np.all(ders > 0)


@pytest.mark.parametrize("t", TRANSFORMS, ids=lambda t: t.describe())
def test_transform_derivative_matches_difference_quotient(t):
    for s in (-1.3, 0.4, 2.2):
        h = 1e-6
        fd = (t(s + h) - t(s - h)) / (2 * h)
        assert t.derivative(s) == pytest.approx(fd, rel=1e-6)


def test_transform_objective_chain_rule():
    o = square_1d()
    cubed = transform_objective(o, MonotoneTransform.signed_power(3))
    x = np.array([2.0])
    assert cubed.value(x) == 64.0
    np.testing.assert_array_equal(cubed.gradient(x), [192.0])
    same = transform_objective(o, MonotoneTransform.identity())
    assert same.value(x) == 4.0
    np.testing.assert_array_equal(same.gradient(x), [4.0])
    g0, g1 = o.gradient(x), cubed.gradient(x)
    assert g0[0] / abs(g0[0]) == g1[0] / abs(g1[0]) == 1.0


def test_transform_objective_value_and_gradient_agree():
    o = toy_losses()[0]
    t = transform_objective(o, MonotoneTransform.signed_power(4))
    x = np.array([-2.0, 3.0])
    v, g = t.value_and_gradient(x)
    assert v == t.value(x)
    np.testing.assert_array_equal(g, t.gradient(x))


@settings(max_examples=200, deadline=None)
@given(
    st.floats(-9.5, 9.5),
    st.floats(-9.5, 9.5),
    st.sampled_from(range(len(TRANSFORMS))),
    st.sampled_from([0, 1]),
)
def test_unit_gradient_unchanged_by_transform(a, b, ti, task):
    t = TRANSFORMS[ti]
    o = toy_losses()[task]
    x = np.array([a, b])
    v = o.value(x)
    lo, _ = t.interval
    if v <= lo or (t.kind == "signed_power" and v == 0.0):
        return
    g = o.gradient(x)
    if np.linalg.norm(g) == 0.0:
        return
    gt = transform_objective(o, t).gradient(x)
    if np.linalg.norm(gt) < GRAD_FLOOR:
        # t'(v) underflows for v near 0; such tasks sit below the floor and are skipped
        return
    np.testing.assert_allclose(gt / np.linalg.norm(gt), g / np.linalg.norm(g), rtol=0, atol=1e-12)


def test_fd_gradient_examples():
    assert fd_gradient(square_1d(), [1.0], 1e-5)[0] == pytest.approx(2.0, abs=1e-8)
    const = Objective(lambda x: 3.0, lambda x: np.zeros_like(x))
    np.testing.assert_array_equal(fd_gradient(const, [0.3, -2.0]), [0.0, 0.0])
    with pytest.raises(ValueError):
        fd_gradient(const, [0.0], 0.0)


def test_fd_gradient_on_toy_loss():
    l1 = toy_losses()[0]
    p = np.array([1.0, 1.0])
    a = l1.gradient(p)
    np.testing.assert_allclose(fd_gradient(l1, p, 1e-6), a, rtol=1e-5)


def _builtin_objectives():
    yield from ((o, (-10, 10), toy_kink_distance) for o in toy_losses())
    yield from ((o, (-1, 1), None) for o in quad_pair().objectives)
    yield quadratic((0.5, -2.0, 3.0)), (-4, 4), None


@pytest.mark.parametrize("o, box, kink", list(_builtin_objectives()), ids=lambda v: getattr(v, "label", ""))
def test_builtin_gradients_match_finite_differences(o, box, kink):
    rng = np.random.default_rng(7)
    dim = 3 if o.label == "quadratic" else 2
    checked = 0
    while checked < 100:
        p = rng.uniform(*box, size=dim)
        if kink is not None and kink(p) < 1e-3:
            continue
        a = o.gradient(p)
        err = np.linalg.norm(a - fd_gradient(o, p, 1e-6)) / max(1.0, np.linalg.norm(a))
        assert err <= 1e-5, (p, err)
        checked += 1


def test_step_schedules():
    c = StepSchedule.constant(0.3)
    assert c(1) == c(1000) == 0.3
    rm = StepSchedule.robbins_monro(2.0, offset=3)
    assert rm(1) == 0.5
    assert rm(7) == 0.2
    with pytest.raises(ValueError):
        rm(0)
    with pytest.raises(ValueError):
        StepSchedule.constant(0.0)
    with pytest.raises(ValueError):
        StepSchedule.robbins_monro(1.0, offset=-1)


def test_robbins_monro_partial_sums():
    steps = StepSchedule.robbins_monro(1.0).steps(10**6)
    assert np.all(steps > 0)
    assert steps.sum() >= 13.0
    assert (steps**2).sum() <= 1.6449342
    # partial sums keep growing like log K while squares stay under pi^2/6
    sums = [steps[:k].sum() for k in (10**2, 10**4, 10**6)]
    assert sums[0] < sums[1] < sums[2]
    assert sums[2] - sums[1] == pytest.approx(math.log(100), abs=1e-3)
