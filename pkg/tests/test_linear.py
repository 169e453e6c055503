import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nekrasov import linear
from nekrasov.errors import IncompatibleSingularSystem, NonConvergence
from nekrasov.linear import char_values, detect_bifurcations, fredholm_solve
from nekrasov.operators import linearize, nekrasov_problem
from nekrasov.spectral import SineSeries


def test_deep_water_characteristic_values(deep):
    cvs = char_values(linearize(deep).B, 16)
    assert np.max(np.abs([cv.mu - 3 * (i + 1) for i, cv in enumerate(cvs)])) <= 1e-12
    assert all(cv.multiplicity == 1 and cv.guaranteed for cv in cvs)
    e1 = cvs[0].eigenfunctions[0].coeffs
    assert e1[0] == 1.0 and np.count_nonzero(e1) == 1


@pytest.mark.parametrize("ratio", [0.1, 0.5, 1.0, 5.0])
def test_finite_depth_closed_form(ratio):
    p = nekrasov_problem(N=64, depth=ratio, wavelength=1.0)
    n = np.arange(1, 17)
    mus = np.array([cv.mu for cv in char_values(linearize(p).B, 16)])
    assert np.max(np.abs(mus - 3 * n / np.tanh(2 * np.pi * n * ratio))) <= 1e-12


def test_too_many_requested():
    with pytest.raises(ValueError):
        char_values(np.eye(4), 5)


def test_double_eigenvalue_is_candidate():
    B = np.diag([1 / 3, 1 / 5, 1 / 5, 1 / 7])
    cvs = char_values(B)
    assert [cv.multiplicity for cv in cvs] == [1, 2, 1]
    assert cvs[1].status == "candidate, not guaranteed"
    basis = np.array([e.coeffs for e in cvs[1].eigenfunctions])
    assert np.allclose(basis @ basis.T, np.eye(2))


def test_identity_has_full_multiplicity():
    cvs = char_values(np.eye(6) / 5)
    assert len(cvs) == 1 and cvs[0].multiplicity == 6 and cvs[0].mu == 5.0


def test_dense_symmetric_kernel():
    rng = np.random.default_rng(0)
    Q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
    lam = np.array([0.5, 0.25, 0.2, -0.1, 0.125])
    B = Q @ np.diag(lam) @ Q.T
    mus = [cv.mu for cv in char_values(B)]
    assert np.allclose(mus, [2, 4, 5, 8])


def test_fredholm_at_characteristic_value():
    B = np.diag(1 / (3.0 * np.arange(1, 9)))
    rhs = SineSeries.mode(2, 8)
    x = fredholm_solve(B, 3.0, rhs)
    assert isinstance(x, SineSeries)
    assert np.allclose(x.coeffs, 2 * rhs.coeffs)
    with pytest.raises(IncompatibleSingularSystem):
        fredholm_solve(B, 3.0, SineSeries.mode(1, 8))


def test_fredholm_dense_singular():
    rng = np.random.default_rng(4)
    Q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    B = Q @ np.diag([1 / 3, 1 / 6, 1 / 9, 1 / 12, 1 / 15, 1 / 18]) @ Q.T
    e = Q[:, 0]
    rhs = Q[:, 2] - 0.5 * Q[:, 4]
    x = fredholm_solve(B, 3.0, rhs)
    assert np.allclose((np.eye(6) - 3.0 * B) @ x, rhs, atol=1e-12)
    assert abs(x @ e) <= 1e-12
    with pytest.raises(IncompatibleSingularSystem):
        fredholm_solve(B, 3.0, rhs + 1e-3 * e)


@given(st.floats(0.1, 20.0), st.integers(0, 1000))
@settings(max_examples=50, deadline=None)
def test_fredholm_regular_solves(mu, seed):
    B = np.diag(1 / (3.0 * np.arange(1, 11)))
    if np.min(np.abs(1 - mu * np.diagonal(B))) < 1e-6:
        return
    rhs = np.random.default_rng(seed).standard_normal(10)
    x = fredholm_solve(B, mu, rhs)
    assert np.allclose((np.eye(10) - mu * B) @ x, rhs, atol=1e-9 * max(1, np.abs(x).max()))


def test_extended_precision_solve_keeps_dtype():
    d = np.array([1, 1 / 2, 1 / 3], dtype=np.longdouble)
    x = fredholm_solve(np.diag(d), np.longdouble(1), np.array([0, 1, 1], dtype=np.longdouble))
    assert x.dtype == np.longdouble
    assert x[0] == 0 and abs(x[1] - 2) < 1e-18


def test_detect_first_bifurcations(deep):
    found = detect_bifurcations(deep, (0.0, 10.0))
    assert [cv.mu for cv in found] == pytest.approx([3, 6, 9], abs=1e-10)
    assert all(cv.guaranteed for cv in found)
    assert detect_bifurcations(deep, (0.0, 2.9)) == []


def test_detect_rejects_bad_range(deep):
    with pytest.raises(ValueError):
        detect_bifurcations(deep, (5.0, 1.0))


def test_eigensolver_failure_maps_to_nonconvergence(monkeypatch):
    def broken(*args, **kwargs):
        raise np.linalg.LinAlgError("no convergence")

    monkeypatch.setattr(linear.scipy.linalg, "eig", broken)
    B = np.array([[0.2, 0.1], [0.0, 0.3]])
    with pytest.raises(NonConvergence):
        char_values(B)
