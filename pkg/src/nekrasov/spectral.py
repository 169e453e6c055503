"""Odd 2*pi-periodic functions as sine coefficients and as grid samples.

The working representation of a wave profile is a finite sine series
``sum_n a_n sin(n theta)``.  Nonlinear operations are evaluated on the
uniform grid ``theta_j = 2*pi*j/M`` and projected back.  Transforms are
plain matrix products against cached trigonometric tables, which is
exact for trigonometric polynomials of degree below ``M/2``.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainViolation, GridTooSmall, ModeCountTooLarge

__all__ = [
    "SineSeries",
    "CosineSeries",
    "GridFunction",
    "grid_points",
    "to_grid",
    "from_grid",
    "cumulative_integral",
    "conjugate",
    "pointwise_map",
    "dealiased_grid_size",
]


def _frozen(values):
    arr = np.array(values, dtype=float).ravel()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SineSeries:
    """Coefficients a_1..a_N of ``sum a_n sin(n theta)``."""

    coeffs: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.coeffs)
        if arr.size < 1:
            raise ValueError("a sine series needs at least one mode")
        if not np.all(np.isfinite(arr)):
            raise ValueError("sine coefficients must be finite")
        object.__setattr__(self, "coeffs", arr)

    @property
    def N(self):
        return self.coeffs.size

    @classmethod
    def zeros(cls, N):
        return cls(np.zeros(N))

    @classmethod
    def mode(cls, n, N, amplitude=1.0):
        a = np.zeros(N)
        a[n - 1] = amplitude
        return cls(a)

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        n = np.arange(1, self.N + 1)
        return np.sin(np.multiply.outer(theta, n)) @ self.coeffs

    def __add__(self, other):
        return SineSeries(self.coeffs + _coeffs_like(other, self.N))

    def __sub__(self, other):
        return SineSeries(self.coeffs - _coeffs_like(other, self.N))

    def __neg__(self):
        return SineSeries(-self.coeffs)

    def __mul__(self, scalar):
        return SineSeries(self.coeffs * float(scalar))

    __rmul__ = __mul__

    def norm(self):
        """Euclidean norm of the coefficients (equals the L2 norm over a period / sqrt(pi))."""
        return float(np.linalg.norm(self.coeffs))

    def resized(self, N):
        a = np.zeros(N)
        m = min(N, self.N)
        a[:m] = self.coeffs[:m]
        return SineSeries(a)


def _coeffs_like(other, N):
    c = other.coeffs if isinstance(other, SineSeries) else np.asarray(other, dtype=float)
    if c.size != N:
        raise ValueError(f"mode count mismatch: {c.size} != {N}")
    return c


@dataclass(frozen=True, eq=False)
class CosineSeries:
    """``mean + sum b_n cos(n theta)``."""

    mean: float
    coeffs: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.coeffs)
        if not (np.all(np.isfinite(arr)) and np.isfinite(self.mean)):
            raise ValueError("cosine coefficients must be finite")
        object.__setattr__(self, "coeffs", arr)
        object.__setattr__(self, "mean", float(self.mean))

    @property
    def N(self):
        return self.coeffs.size

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        n = np.arange(1, self.N + 1)
        return self.mean + np.cos(np.multiply.outer(theta, n)) @ self.coeffs


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples on ``theta_j = 2*pi*j/M``, j = 0..M-1."""

    values: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.values)
        if arr.size < 2 or arr.size % 2:
            raise ValueError("grid size must be even")
        if not np.all(np.isfinite(arr)):
            raise ValueError("grid values must be finite")
        object.__setattr__(self, "values", arr)

    @property
    def M(self):
        return self.values.size

    @property
    def theta(self):
        return grid_points(self.M)


def dealiased_grid_size(N):
    """Grid size used for nonlinear products of N-mode series."""
    return 4 * N


@lru_cache(maxsize=None)
def grid_points(M, dtype=np.float64):
    pi = 4 * np.arctan(dtype(1))
    theta = 2 * pi * np.arange(M, dtype=dtype) / M
    theta.setflags(write=False)
    return theta


# Tables are built from integer phases n*j mod M so that the extended-precision
# variants (dtype=np.longdouble) carry their full accuracy.
def _phase(M, N, dtype):
    pi = 4 * np.arctan(dtype(1))
    nj = np.outer(np.arange(M), np.arange(1, N + 1)) % M
    return 2 * pi * nj.astype(dtype) / M


@lru_cache(maxsize=64)
def sine_table(M, N, dtype=np.float64):
    """``S[j, n-1] = sin(n theta_j)``."""
    S = np.sin(_phase(M, N, dtype))
    S.setflags(write=False)
    return S


@lru_cache(maxsize=64)
def cosine_table(M, N, dtype=np.float64):
    C = np.cos(_phase(M, N, dtype))
    C.setflags(write=False)
    return C


@lru_cache(maxsize=16)
def cumulative_integral_matrix(M, dtype=np.float64):
    """Grid-to-grid map of an odd function to its antiderivative from 0.

    Uses every sine mode the grid resolves (n < M/2).
    """
    K = M // 2 - 1
    n = np.arange(1, K + 1, dtype=dtype)
    S = sine_table(M, K, dtype)
    C = cosine_table(M, K, dtype)
    Q = ((1 - C) / n) @ (S.T * (dtype(2) / M))
    Q.setflags(write=False)
    return Q


def to_grid(s, M):
    """Sample a sine series on the M-point grid."""
    if M < 2 * s.N + 2 or M % 2:
        raise GridTooSmall(f"grid of {M} points cannot carry {s.N} sine modes (need even M >= {2 * s.N + 2})")
    return GridFunction(sine_table(M, s.N) @ s.coeffs)


def from_grid(g, N):
    """Odd-part projection of grid samples onto the first N sine modes."""
    if N > g.M // 2 - 1 or N < 1:
        raise ModeCountTooLarge(f"{N} modes do not fit a {g.M}-point grid (max {g.M // 2 - 1})")
    return SineSeries(sine_table(g.M, N).T @ g.values * (2.0 / g.M))


def cumulative_integral(s):
    """Exact antiderivative ``int_0^eps sum a_n sin(n alpha) d alpha``.

    Returned in cosine form: ``sum a_n/n - sum (a_n/n) cos(n eps)``.
    """
    n = np.arange(1, s.N + 1)
    b = s.coeffs / n
    return CosineSeries(mean=float(b.sum()), coeffs=-b)


def conjugate(s):
    """Harmonic conjugate: ``sin(n theta) -> -cos(n theta)``, zero mean."""
    return CosineSeries(mean=0.0, coeffs=-s.coeffs)


_MAPS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp3": lambda v: np.exp(3.0 * v),
}


def pointwise_map(g, f):
    """Apply a tagged scalar function ('sin', 'cos', 'exp3', 'reciprocal') to grid values."""
    if f == "reciprocal":
        zero = np.flatnonzero(g.values == 0.0)
        if zero.size:
            raise DomainViolation("reciprocal of zero", int(zero[0]))
        return GridFunction(1.0 / g.values)
    try:
        fn = _MAPS[f]
    except KeyError:
        raise ValueError(f"unknown pointwise function {f!r}") from None
    return GridFunction(fn(g.values))
