import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kreisslab.constants import (ConstantEstimate, abel_bound_constant, angle_grid,
                                 cesaro_constant, cesaro_square_constant_exact,
                                 cesaro_square_profile, default_radii, default_samples,
                                 growth_flag, kreiss_constant, orbit_norm_matrix,
                                 p_abs_cesaro_constant, rotated_profile, strong_kreiss_constant,
                                 strongly_cesaro_constant, uniform_kreiss_constant)
from kreisslab.errors import SpaceError
from kreisslab.operators import Rotation, dense, gallery, identity, truncate


def test_estimate_validation_and_json():
    with pytest.raises(ValueError):
        ConstantEstimate("nope", 1.0, "lower")
    with pytest.raises(ValueError):
        ConstantEstimate("kreiss", 1.0, "maybe")
    est = ConstantEstimate("kreiss", math.inf, "lower", ("unbounded_suspected",), {"x": np.arange(2)})
    d = json.loads(est.to_json())
    assert d["value"] == "inf" and d["scan"]["x"] == [0, 1] and est.unbounded_suspected


def test_growth_flag():
    assert growth_flag([1, 2, 4]) == ("unbounded_suspected",)
    assert growth_flag([1, 1.5, 1.9]) == ()
    assert growth_flag([1, 2]) == ()
    assert growth_flag([1, 3, 4], factor=1.2) == ("unbounded_suspected",)


def test_grids():
    np.testing.assert_allclose(angle_grid(4), [0, np.pi / 2, np.pi, 3 * np.pi / 2])
    np.testing.assert_allclose(default_radii(8), [2, 1.5, 1.25, 1.125])
    with pytest.raises(ValueError):
        angle_grid(0)


def test_kreiss_normal_is_exact():
    est = kreiss_constant(gallery("diagonal_unitary"))
    assert est.value == 1.0 and est.bound == "exact"


def test_kreiss_assani_closed_form():
    # at lam = -(1 + 1/m): (|lam| - 1) ||R|| = m + sqrt(m^2 + 1)
    m = np.array([4, 8, 16, 32, 64.0])
    est = kreiss_constant(gallery("assani"), 1 + 1 / m, angles=[np.pi])
    np.testing.assert_allclose(est.profile, m + np.sqrt(m**2 + 1), rtol=1e-12)
    assert est.unbounded_suspected and est.bound == "lower"


def test_kreiss_rejects_bad_radii():
    with pytest.raises(ValueError):
        kreiss_constant(gallery("assani"), [1.0])


def test_kreiss_shift_neumann_vs_dense():
    op = gallery("delta_shift", dim=120)
    a = kreiss_constant(op, [1.5, 1.1], angles=8)
    b = kreiss_constant(truncate(op, 120), [1.5, 1.1], angles=8)
    np.testing.assert_allclose(a.profile, b.profile, rtol=1e-9)


def test_kreiss_needs_hilbert():
    with pytest.raises(SpaceError):
        kreiss_constant(gallery("delta_shift", p=1, dim=8), [2.0], angles=2)


def test_strong_kreiss_unitary_attains_one():
    est = strong_kreiss_constant(gallery("diagonal_unitary"), [1.0, 5.0], np.eye(4), gamma_grid=4)
    assert est.value == pytest.approx(1.0, abs=1e-10)


def test_absolute_strong_kreiss_vs_direct_sum():
    from scipy.special import gammaln
    op = gallery("delta_shift", dim=80)
    x = np.zeros(80)
    x[40] = 1.0
    est = strong_kreiss_constant(op, [3.0], x, mode="absolute")
    o = orbit_norm_matrix(op, x[:, None], 79)[:, 0] / op.space.norm(x)
    n = np.arange(80)
    ref = np.sum(np.exp(n * np.log(3.0) - gammaln(n + 1) - 3.0) * o)
    assert est.value == pytest.approx(ref, rel=1e-9)


def test_strong_kreiss_callable_samples():
    op = gallery("log_shift", dim=64)
    calls = []

    def xs(r):
        calls.append(r)
        return np.ones(64)
    strong_kreiss_constant(op, [1.0, 2.0], xs)
    assert calls == [1.0, 2.0]


def test_uniform_kreiss_unitary():
    est = uniform_kreiss_constant(gallery("diagonal_unitary"), 32, angles=16)
    assert est.value == pytest.approx(1.0, abs=1e-12)
    assert not est.unbounded_suspected


def test_rotated_profile_shift_vs_dense():
    op = gallery("delta_shift", dim=110)
    a = rotated_profile(op, 20, 6, kind="mean", alpha=2)[1]
    b = rotated_profile(truncate(op, 110), 20, 6, kind="mean", alpha=2)[1]
    np.testing.assert_allclose(a, b, rtol=1e-9)


def test_assani_rotated_order_two_grows():
    ns, vals, _ = rotated_profile(gallery("assani"), 64, [np.pi], kind="mean", alpha=2)
    assert vals[-1] / vals[ns == 32][0] > 1.8


def test_p_abs_direct_and_prefix_stable():
    op = gallery("delta_shift", dim=64)
    est = p_abs_cesaro_constant(op, 2, 32, n_random=4, seed=3)
    X = default_samples(op, 4, 3)
    o = orbit_norm_matrix(op, X, 31) ** 2
    ref = np.sqrt(np.cumsum(o, axis=0) / np.arange(1, 33)[:, None]).max(axis=1)
    np.testing.assert_allclose(est.profile, ref)
    more = default_samples(op, 8, 3)
    np.testing.assert_array_equal(more[:, :68], X)
    assert est.kind == "p_abs_cesaro" and est.seed == 3


def test_abs_cesaro_ascent_only_increases():
    op = gallery("delta_shift", dim=64)
    a = p_abs_cesaro_constant(op, 1, 32, n_random=2)
    b = p_abs_cesaro_constant(op, 1, 32, n_random=2, ascent_steps=10)
    assert a.kind == "abs_cesaro"
    assert np.all(b.profile >= a.profile - 1e-15)
    with pytest.raises(ValueError):
        p_abs_cesaro_constant(op, 0.5, 4)


def test_cesaro_square_profile_vs_stack(rng):
    A = rng.standard_normal((5, 5)) / 2
    op = dense(A)
    prof = cesaro_square_profile(op, 10)
    for n in (1, 4, 10):
        stack = np.vstack([np.linalg.matrix_power(A, k) for k in range(n)])
        assert prof[n - 1] == pytest.approx(np.linalg.norm(stack, 2) / np.sqrt(n), rel=1e-10)
    exact = cesaro_square_constant_exact(op, 10)
    assert exact.bound == "exact" and exact.value == prof[-1]
    assert cesaro_square_constant_exact(op, 10, sup=True).value == prof.max()


def test_strongly_cesaro():
    est = strongly_cesaro_constant(identity(2), 16, trials=1)
    assert est.value == pytest.approx(1.0)
    assert est.scan["best_signs"][16] in ([1] * 16, [-1] * 16)
    with pytest.raises(ValueError):
        strongly_cesaro_constant(identity(2), 4, trials=0)


def test_strongly_cesaro_reproducible():
    a = strongly_cesaro_constant(gallery("assani"), 32, seed=5)
    b = strongly_cesaro_constant(gallery("assani"), 32, seed=5)
    assert a.to_dict() == b.to_dict()


def test_abel_bound_unitary_and_shift():
    assert abel_bound_constant(gallery("diagonal_unitary")).value == pytest.approx(1.0)
    op = gallery("delta_shift", dim=100)
    r = [0.5, 0.9]
    a = abel_bound_constant(op, r).profile
    b = abel_bound_constant(truncate(op, 100), r).profile
    np.testing.assert_allclose(a, b, rtol=1e-9)
    with pytest.raises(ValueError):
        abel_bound_constant(dense([[2.0]]), [0.9])


def test_cesaro_constant_assani_closed_form():
    # T^k = (-1)^k (I - 2k N): the mean over n+1 terms has entries a = s0/(n+1), b = -2 s1/(n+1)
    n = np.arange(0, 301)
    k_sum0 = np.array([np.sum((-1.0) ** np.arange(m + 1)) for m in n])
    k_sum1 = np.array([np.sum((-1.0) ** np.arange(m + 1) * np.arange(m + 1)) for m in n])
    a, b = k_sum0 / (n + 1), -2 * k_sum1 / (n + 1)
    ref = (np.abs(b) + np.sqrt(b**2 + 4 * a**2)) / 2
    est = cesaro_constant(gallery("assani"), 300, normalization="divide_by_A")
    np.testing.assert_allclose(est.profile, ref, atol=1e-12)
    assert est.value <= 1.0 + 1e-12


@given(st.integers(0, 15))
def test_uniform_kreiss_rotation_invariant(j):
    op = gallery("jordan_unimodular", angle=0.1)
    rot = Rotation(op, np.exp(2j * np.pi * j / 16))
    a = uniform_kreiss_constant(op, 12, angles=16).value
    b = uniform_kreiss_constant(rot, 12, angles=16).value
    assert b == pytest.approx(a, rel=1e-12)


@given(st.integers(1, 40), st.integers(0, 2**31 - 1))
def test_p_abs_running_max_monotone(n_max, seed):
    est = p_abs_cesaro_constant(gallery("assani"), 1.5, n_max, n_random=3, seed=seed)
    run = np.maximum.accumulate(est.profile)
    assert est.value == run[-1]
    assert est.value >= 1.0 - 1e-12  # n = 1 term is ||x|| = 1
