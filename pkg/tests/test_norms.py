import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kreisslab.errors import ConvergenceError, OverflowBudgetError, SpaceError
from kreisslab.norms import (exact_norm_2, operator_norm_2, orbit_norms, polynomial_matrix,
                             polynomial_norm, power_norms, shift_power_norm,
                             spectral_radius_estimate, tail_envelope, weighted_matrix)
from kreisslab.operators import (Adjoint, Rotation, WeightedSpace, apply, dense, gallery,
                                 identity, truncate)

DELTA = WeightedSpace(2, "poly", 0.8)
LOG = WeightedSpace(2, "log", 2.0)


def brute_shift_norm(space, n):
    # sup_j (nu_j / nu_{j+n})^(1/p) over a long range of j
    nu = space.weights(n + 4000)
    return float(np.max((nu[:4000] / nu[n:n + 4000]) ** (1 / space.p)))


@pytest.mark.parametrize("space", [DELTA, LOG, WeightedSpace(3, "poly", 0.4),
                                   WeightedSpace(1, "log", 0.5)])
def test_closed_form_matches_weight_ratio(space):
    for n in (0, 1, 5, 64):
        assert shift_power_norm(space, n) == pytest.approx(brute_shift_norm(space, n), rel=1e-14)


def test_closed_forms():
    assert shift_power_norm(DELTA, 63) == pytest.approx(64**0.4)
    assert shift_power_norm(LOG, 6) == pytest.approx(np.log(8) / np.log(2))
    assert shift_power_norm(WeightedSpace(), 10) == 1.0


@pytest.mark.parametrize("n", [0, 1, 7, 31, 64])
def test_two_routes_agree_with_closed_form(n):
    M = np.eye(n + 8, k=n)
    target = (n + 1) ** 0.4
    assert exact_norm_2(M, DELTA) == pytest.approx(target, abs=1e-12)
    assert operator_norm_2(M, tol=1e-13, space=DELTA) == pytest.approx(target, abs=1e-8)


def test_power_iteration_random_matrices(rng):
    for _ in range(5):
        A = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
        assert operator_norm_2(A) == pytest.approx(np.linalg.norm(A, 2), rel=1e-10)


def test_power_iteration_is_deterministic(rng):
    A = rng.standard_normal((20, 20))
    assert operator_norm_2(A, seed=3) == operator_norm_2(A, seed=3)


def test_power_iteration_reports_stall():
    # two equal-modulus singular directions with a tiny gap stall the iteration
    A = np.diag([1.0, 1.0 - 1e-9, 0.5])
    with pytest.raises(ConvergenceError) as err:
        operator_norm_2(A, tol=1e-15, max_iter=50, x0=np.ones(3))
    assert err.value.iterate is not None and err.value.residual > 1e-15


def test_power_iteration_zero_matrix():
    assert operator_norm_2(np.zeros((3, 3))) == 0.0


def test_p_not_two_rejected():
    with pytest.raises(SpaceError):
        exact_norm_2(np.eye(3), WeightedSpace(1.5))


def test_weighted_matrix_similarity(rng):
    sp = WeightedSpace(2, "poly", 0.3)
    M = rng.standard_normal((6, 6))
    x = rng.standard_normal(6)
    A = weighted_matrix(M, sp)
    # ||M x||_nu = ||A (sqrt(nu) x)||_2
    assert sp.norm(M @ x) == pytest.approx(np.linalg.norm(A @ (np.sqrt(sp.weights(6)) * x)))


@pytest.mark.parametrize("op", [gallery("delta_shift", dim=300),
                                Rotation(gallery("log_shift", dim=200), np.exp(0.4j)),
                                Adjoint(gallery("delta_shift", dim=150))])
def test_polynomial_norm_lanczos_vs_svd(op, rng):
    c = rng.standard_normal(20) + 1j * rng.standard_normal(20)
    dense_route = exact_norm_2(polynomial_matrix(op, c), op.space)
    assert polynomial_norm(op, c) == pytest.approx(dense_route, rel=1e-9)


def test_polynomial_norm_dense_op():
    A = gallery("assani")
    assert polynomial_norm(A, [0, 0, 1]) == pytest.approx(np.linalg.norm(A.matrix() @ A.matrix(), 2))


def test_power_norms_shift_closed_form():
    seq = power_norms(gallery("delta_shift", dim=100), 120)
    assert seq.is_certified()
    np.testing.assert_allclose(seq.values[:100], np.arange(1, 101) ** 0.4)
    assert np.all(seq.values[100:] == 0)


def test_power_norms_dense_matches_truncated_shift():
    op = gallery("delta_shift", dim=40)
    a = power_norms(op, 30).values
    b = power_norms(truncate(op, 40), 30).values
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_assani_linear_growth():
    v = power_norms(gallery("assani"), 100).values
    n = np.arange(101)
    # ||[[a, b],[0, a]]|| with |a| = 1, b = 2n: (|b| + sqrt(b^2 + 4)) / 2
    np.testing.assert_allclose(v, (2 * n + np.sqrt(4 * n**2 + 4)) / 2, rtol=1e-12)


def test_identity_power_norms_and_csv():
    seq = power_norms(identity(3), 4)
    buf = io.StringIO()
    seq.to_csv(buf)
    rows = buf.getvalue().strip().splitlines()
    assert rows[0] == "n,norm,method" and len(rows) == 6
    assert all(r.split(",")[1] == "1.0" for r in rows[1:])


def test_shields_power_norms():
    seq = power_norms(gallery("shields", dim=16, grid=64), 20)
    np.testing.assert_array_equal(seq.values[:16], np.arange(1, 17))


def test_orbit_overflow():
    with pytest.raises(OverflowBudgetError):
        orbit_norms(dense([[10.0]]), np.ones(1), 400)


def test_tail_envelope_bounds_table():
    v = power_norms(gallery("jordan_unimodular", angle=0.1), 60).values
    K, rho, m = tail_envelope(v)
    assert np.all(v <= K * rho ** np.arange(61) * (1 + 1e-12))
    assert rho >= 1.0 - 1e-12
    assert spectral_radius_estimate(v) == rho


def test_nilpotent_envelope():
    K, rho, m = tail_envelope(power_norms(dense(np.eye(3, k=1)), 5).values)
    assert rho == 0.0 and m == 3


@given(st.integers(0, 40), st.integers(0, 40))
def test_submultiplicative_closed_form(m, k):
    assert shift_power_norm(DELTA, m + k) <= shift_power_norm(DELTA, m) * shift_power_norm(DELTA, k) * (1 + 1e-14)


@given(st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_submultiplicative_random_dense(d, seed):
    r = np.random.default_rng(seed)
    A = r.standard_normal((d, d)) / np.sqrt(d)
    assert power_norms(dense(A), 12).submultiplicative()


@given(st.integers(0, 60), st.integers(0, 2**31 - 1))
def test_orbit_bounded_by_power_norm(n, seed):
    op = gallery("delta_shift", dim=64)
    x = np.random.default_rng(seed).standard_normal(64)
    lhs = orbit_norms(op, x, max(n, 1))[n]
    assert lhs <= shift_power_norm(op.space, n) * op.space.norm(x) * (1 + 1e-12)
