import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.integrate import quad

from nekrasov.errors import DomainViolation, GridTooSmall, ModeCountTooLarge
from nekrasov.spectral import (
    CosineSeries,
    GridFunction,
    SineSeries,
    conjugate,
    cosine_table,
    cumulative_integral,
    cumulative_integral_matrix,
    from_grid,
    grid_points,
    pointwise_map,
    sine_table,
    to_grid,
)

coeffs = arrays(np.float64, st.integers(1, 24), elements=st.floats(-10, 10))


@given(coeffs)
@settings(max_examples=60, deadline=None)
def test_grid_round_trip(a):
    s = SineSeries(a)
    M = 2 * s.N + 2 + 2 * (s.N % 3)
    back = from_grid(to_grid(s, M), s.N)
    assert np.max(np.abs(back.coeffs - a)) <= 1e-12 * max(1.0, np.abs(a).max())


@given(coeffs)
@settings(max_examples=40, deadline=None)
def test_endpoints_vanish(a):
    s = SineSeries(a)
    assert s(0.0) == 0.0
    # sin(n pi) is not exactly zero in floating point; the value is round-off sized
    assert abs(s(math.pi)) <= 1e-14 * s.N**2 * max(1.0, np.abs(a).sum())


def test_grid_too_small():
    with pytest.raises(GridTooSmall):
        to_grid(SineSeries.mode(1, 8), 16)


def test_mode_count_too_large():
    g = GridFunction(np.zeros(16))
    with pytest.raises(ModeCountTooLarge):
        from_grid(g, 8)
    from_grid(g, 7)


def test_from_grid_projects_odd_part():
    M = 32
    theta = grid_points(M)
    g = GridFunction(np.sin(3 * theta) + 0.5 * np.cos(2 * theta) + 0.25)
    s = from_grid(g, 10)
    expected = np.zeros(10)
    expected[2] = 1.0
    assert np.allclose(s.coeffs, expected, atol=1e-14)


def test_cumulative_integral_oracle():
    a = np.array([0.3, -0.2, 0.05, 0.01])
    s = SineSeries(a)
    c = cumulative_integral(s)
    assert isinstance(c, CosineSeries)
    for eps in (0.0, 0.4, 1.7, 3.0, 5.5):
        ref, _ = quad(lambda x: s(x), 0.0, eps, epsabs=1e-14)
        assert abs(c(eps) - ref) <= 1e-13


def test_cumulative_integral_matrix_matches_exact():
    N, M = 6, 64
    a = np.linspace(0.4, -0.1, N)
    s = SineSeries(a)
    Q = cumulative_integral_matrix(M)
    values = Q @ (sine_table(M, N) @ a)
    assert np.max(np.abs(values - cumulative_integral(s)(grid_points(M)))) <= 1e-14


def test_extended_tables_are_more_accurate():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 30
    M, N = 256, 64
    ext = sine_table(M, N, np.longdouble)
    assert ext.dtype == np.longdouble
    assert cosine_table(M, N, np.longdouble).dtype == np.longdouble
    worst = 0.0
    for j, n in [(1, 1), (37, 5), (101, 63), (255, 64), (200, 17)]:
        exact = mpmath.sin(2 * mpmath.pi * j * n / M)
        worst = max(worst, abs(float(mpmath.mpf(str(ext[j, n - 1])) - exact)))
    assert worst <= 1e-18


def test_conjugate_convention():
    s = SineSeries([0.0, 2.0, -1.0])
    c = conjugate(s)
    theta = np.linspace(0, 2 * np.pi, 7)
    assert c.mean == 0.0
    assert np.allclose(c(theta), -2.0 * np.cos(2 * theta) + np.cos(3 * theta))


@given(coeffs)
@settings(max_examples=30, deadline=None)
def test_conjugate_is_even_with_zero_mean(a):
    c = conjugate(SineSeries(a))
    theta = np.linspace(0.1, 3.0, 9)
    assert np.allclose(c(theta), c(-theta))
    integral, _ = quad(lambda x: c(x), 0, 2 * np.pi, limit=200)
    assert abs(integral) <= 1e-9 * max(1.0, np.abs(a).sum())


def test_pointwise_map():
    g = GridFunction([0.0, 0.5, -0.5, 1.0])
    assert np.allclose(pointwise_map(g, "sin").values, np.sin(g.values))
    assert np.allclose(pointwise_map(g, "exp3").values, np.exp(3 * g.values))
    with pytest.raises(DomainViolation) as exc:
        pointwise_map(g, "reciprocal")
    assert exc.value.index == 0
    with pytest.raises(ValueError):
        pointwise_map(g, "tan")


def test_series_arithmetic_and_immutability():
    s = SineSeries([1.0, 2.0])
    t = SineSeries([0.5, -1.0])
    assert np.allclose((s + t).coeffs, [1.5, 1.0])
    assert np.allclose((2 * s - t).coeffs, [1.5, 5.0])
    with pytest.raises(ValueError):
        s.coeffs[0] = 3.0
    with pytest.raises(ValueError):
        s + SineSeries([1.0])
    with pytest.raises(ValueError):
        SineSeries([np.nan])
