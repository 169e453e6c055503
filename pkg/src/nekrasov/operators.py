"""Kernels and the nonlinear integral operators acting on sine series.

Every operator here has the Hammerstein shape

    A(Phi, mu)_n = mu * weight / kappa_n * [sine coefficient n of h(Phi)]

where ``kappa_n`` are the characteristic values of the kernel and ``h`` is
a pointwise (or nearly pointwise) nonlinearity evaluated on a dealiased
grid.  The log-difference kernel of the deep-water wave equation has
Fourier form ``-4 sum sin(n e) sin(n t) / n``; combined with its
``-mu/(12 pi)`` prefactor this is exactly the multiplier ``mu / (3 n)``,
so no singular quadrature is ever needed.

Three nonlinearities are supported:

``"nekrasov"``
    ``h = sin(Phi) / (1 + mu * int_0^eps sin(Phi))``
``"krasovskii"``
    ``h = exp(3 Psi) sin(Phi)`` with ``Psi`` the harmonic conjugate of
    ``Phi``; the integral runs over the half period, hence ``weight = pi/2``.
:class:`Hammerstein`
    ``h = f(Phi)`` with ``f`` a polynomial given by its coefficient table.

Array-level functions (``apply_coeffs``, ``jacobian_coeffs``) are the hot
path used by the solvers; the ``apply_*`` wrappers take and return
:class:`~nekrasov.spectral.SineSeries`.
"""

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .errors import DenominatorVanished, OverflowGuard, SingularPoint
from .spectral import (
    SineSeries,
    cosine_table,
    cumulative_integral_matrix,
    dealiased_grid_size,
    sine_table,
)

__all__ = [
    "LogDifference",
    "FourierDiagonal",
    "FiniteDepthFourier",
    "Hammerstein",
    "WaveProblem",
    "OperatorSplit",
    "kernel_eval",
    "characteristic_values",
    "apply_operator",
    "apply_nekrasov",
    "apply_krasovskii",
    "apply_hammerstein",
    "linearize",
    "nekrasov_problem",
    "krasovskii_problem",
    "residual_coeffs",
    "DENOMINATOR_GUARD",
]

DENOMINATOR_GUARD = 1e-10
EXP_GUARD = 700.0


# --------------------------------------------------------------------------
# kernels


@dataclass(frozen=True)
class LogDifference:
    """``ln|(1 - cos(e - t)) / (1 - cos(e + t))|`` with prefactor ``-mu/(12 pi)``.

    Deep-water kernel; its characteristic values are ``3 n``.
    """

    def characteristic_values(self, n_max):
        return 3.0 * np.arange(1, n_max + 1)

    def __call__(self, eps, theta):
        num = 1.0 - np.cos(eps - theta)
        den = 1.0 - np.cos(eps + theta)
        if np.any(num == 0.0) or np.any(den == 0.0):
            raise SingularPoint("log-difference kernel evaluated on eps = +-theta (mod 2 pi)")
        return np.log(np.abs(num / den))


@dataclass(frozen=True)
class FourierDiagonal:
    """``sum_n sin(n e) sin(n t) / kappa_n`` for stored positive, increasing kappa_n."""

    values: tuple

    def __post_init__(self):
        v = tuple(float(x) for x in self.values)
        if not v:
            raise ValueError("need at least one characteristic value")
        if any(not math.isfinite(x) or x <= 0 for x in v):
            raise ValueError("characteristic values must be positive")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("characteristic values must increase strictly")
        object.__setattr__(self, "values", v)

    def characteristic_values(self, n_max):
        if n_max > len(self.values):
            raise ValueError(f"kernel stores only {len(self.values)} characteristic values")
        return np.array(self.values[:n_max])

    def __call__(self, eps, theta):
        kappa = np.array(self.values)
        n = np.arange(1, kappa.size + 1)
        eps, theta = np.broadcast_arrays(np.asarray(eps, float), np.asarray(theta, float))
        terms = np.sin(np.multiply.outer(eps, n)) * np.sin(np.multiply.outer(theta, n))
        return terms @ (1.0 / kappa)


@dataclass(frozen=True)
class FiniteDepthFourier:
    """Finite-depth kernel with characteristic values ``3 n coth(2 pi n h / L)``.

    ``h`` is the depth and ``L`` the wavelength.
    """

    h: float
    L: float
    N: int = 64

    def __post_init__(self):
        if not (self.h > 0 and self.L > 0):
            raise ValueError("depth and wavelength must be positive")
        if self.N < 1:
            raise ValueError("need at least one mode")

    def characteristic_values(self, n_max):
        n = np.arange(1, n_max + 1)
        return 3.0 * n / np.tanh(2.0 * np.pi * n * self.h / self.L)

    def __call__(self, eps, theta):
        return FourierDiagonal(tuple(self.characteristic_values(self.N)))(eps, theta)


def kernel_eval(kernel, eps, theta):
    return kernel(eps, theta)


def characteristic_values(kernel, n_max):
    return kernel.characteristic_values(n_max)


# --------------------------------------------------------------------------
# problems


@dataclass(frozen=True)
class Hammerstein:
    """Polynomial nonlinearity ``f(u) = sum_d coeffs[d] * u**d``."""

    coeffs: tuple

    def __post_init__(self):
        c = tuple(float(x) for x in self.coeffs)
        if not c or not all(math.isfinite(x) for x in c):
            raise ValueError("coefficient table must be finite and non-empty")
        object.__setattr__(self, "coeffs", c)

    @property
    def linear(self):
        return self.coeffs[1] if len(self.coeffs) > 1 else 0.0

    @property
    def lowest_nonlinear_degree(self):
        """Smallest degree >= 2 with a nonzero coefficient, or None for a linear f."""
        for d, c in enumerate(self.coeffs):
            if d >= 2 and c != 0.0:
                return d
        return None

    def f(self, u):
        return np.polynomial.polynomial.polyval(u, self.coeffs)

    def df(self, u):
        return np.polynomial.polynomial.polyval(u, np.polynomial.polynomial.polyder(self.coeffs))


@dataclass(frozen=True)
class WaveProblem:
    kernel: object
    nonlinearity: object  # "nekrasov" | "krasovskii" | Hammerstein
    mu: float = 3.0
    N: int = 64
    M: int = 0  # grid size; 0 selects the dealiased default 4N

    def __post_init__(self):
        if isinstance(self.nonlinearity, str) and self.nonlinearity not in ("nekrasov", "krasovskii"):
            raise ValueError(f"unknown nonlinearity {self.nonlinearity!r}")
        if not math.isfinite(self.mu):
            raise ValueError("mu must be finite")
        if self.N < 1:
            raise ValueError("N must be positive")
        if self.M == 0:
            object.__setattr__(self, "M", dealiased_grid_size(self.N))
        if self.M < 2 * self.N + 2 or self.M % 2:
            raise ValueError(f"grid size {self.M} too small for {self.N} modes")

    def with_mu(self, mu):
        return replace(self, mu=float(mu))

    @property
    def kind(self):
        return self.nonlinearity if isinstance(self.nonlinearity, str) else "hammerstein"

    @cached_property
    def weight(self):
        # Integration over [0, pi] of an odd product picks up half the full-period factor.
        return math.pi / 2 if self.kind == "krasovskii" else 1.0

    @cached_property
    def kappa(self):
        return self.kernel.characteristic_values(self.N)

    @cached_property
    def multiplier(self):
        """Diagonal of the linear smoothing map (before the mu factor)."""
        m = self.weight / self.kappa
        m.setflags(write=False)
        return m

    @cached_property
    def _tables(self):
        return self.tables()

    def tables(self, dtype=np.float64):
        """Synthesis matrix ``S`` (grid <- coefficients) and analysis matrix ``P``."""
        S = sine_table(self.M, self.N, dtype)
        return S, S.T * (dtype(2) / self.M)


def nekrasov_problem(N=64, mu=3.0, depth=None, wavelength=1.0, M=0):
    """Deep-water (``depth=None``) or finite-depth Nekrasov problem."""
    kernel = LogDifference() if depth is None else FiniteDepthFourier(depth, wavelength, N)
    return WaveProblem(kernel, "nekrasov", mu=mu, N=N, M=M)


def krasovskii_problem(N=64, mu=1.0, M=0):
    kernel = FourierDiagonal(tuple(np.pi * np.arange(1, N + 1) / 2))
    return WaveProblem(kernel, "krasovskii", mu=mu, N=N, M=M)


# --------------------------------------------------------------------------
# evaluation on coefficient arrays


@dataclass(frozen=True, eq=False)
class GridState:
    """Grid quantities of one operator evaluation, reused by the Jacobian."""

    phi: np.ndarray
    h: np.ndarray
    min_denominator: float
    extra: dict = field(default_factory=dict)


def _nekrasov_state(problem, a, mu, dtype=np.float64):
    S, _ = problem.tables(dtype)
    Q = cumulative_integral_matrix(problem.M, dtype)
    phi = S @ a
    s = np.sin(phi)
    integral = Q @ s
    w = 1.0 + mu * integral
    j = int(np.argmin(w))
    if not w[j] > DENOMINATOR_GUARD:
        raise DenominatorVanished(float(w[j]), j)
    return GridState(phi, s / w, float(w[j]), {"s": s, "w": w, "integral": integral})


def _krasovskii_state(problem, a, mu, dtype=np.float64):
    S, _ = problem.tables(dtype)
    C = cosine_table(problem.M, problem.N, dtype)
    phi = S @ a
    psi3 = -3.0 * (C @ a)
    top = float(psi3.max())
    if top > EXP_GUARD:
        raise OverflowGuard(f"3*Psi reaches {top:.1f}, exp would overflow")
    e = np.exp(psi3)
    s = np.sin(phi)
    return GridState(phi, e * s, 1.0, {"e": e, "s": s})


def _hammerstein_state(problem, a, mu, dtype=np.float64):
    S, _ = problem.tables(dtype)
    u = S @ a
    return GridState(u, problem.nonlinearity.f(u), 1.0)


_STATES = {
    "nekrasov": _nekrasov_state,
    "krasovskii": _krasovskii_state,
    "hammerstein": _hammerstein_state,
}


def grid_state(problem, a, mu, dtype=np.float64):
    return _STATES[problem.kind](problem, np.asarray(a, dtype), dtype(mu), dtype)


def apply_coeffs(problem, a, mu=None, state=None, dtype=np.float64):
    """``A(a, mu)`` on a coefficient array.

    ``dtype=np.longdouble`` evaluates in extended precision; used where
    tiny residuals of small profiles must be measured above round-off.
    """
    mu = problem.mu if mu is None else mu
    if state is None:
        state = grid_state(problem, a, mu, dtype)
    _, P = problem.tables(dtype)
    return dtype(mu) * _multiplier(problem, dtype) * (P @ state.h)


def _multiplier(problem, dtype):
    if dtype is np.float64:
        return problem.multiplier
    weight = 2 * np.arctan(dtype(1)) if problem.kind == "krasovskii" else dtype(1)
    return weight / np.asarray(problem.kappa, dtype)


def residual_coeffs(problem, a, mu=None, dtype=np.float64):
    """``a - A(a, mu)``, optionally evaluated in extended precision."""
    a = np.asarray(a, dtype)
    return a - apply_coeffs(problem, a, mu, dtype=dtype)


def jacobian_coeffs(problem, a, mu=None, state=None):
    """Return ``(dA/da, dA/dmu)`` at ``(a, mu)``."""
    mu = problem.mu if mu is None else mu
    a = np.asarray(a, float)
    if state is None:
        state = grid_state(problem, a, mu)
    S, P = problem._tables
    m = problem.multiplier
    kind = problem.kind
    x = state.extra
    if kind == "nekrasov":
        Q = cumulative_integral_matrix(problem.M)
        c = np.cos(state.phi)
        w = x["w"]
        cS = c[:, None] * S
        dh = cS / w[:, None] - (mu * x["s"] / w**2)[:, None] * (Q @ cS)
        dh_dmu = -x["s"] * x["integral"] / w**2
        dA_dmu = m * (P @ state.h) + mu * m * (P @ dh_dmu)
    elif kind == "krasovskii":
        C = cosine_table(problem.M, problem.N)
        e, s = x["e"], x["s"]
        dh = (e * np.cos(state.phi))[:, None] * S - 3.0 * (e * s)[:, None] * C
        dA_dmu = m * (P @ state.h)
    else:
        dh = problem.nonlinearity.df(state.phi)[:, None] * S
        dA_dmu = m * (P @ state.h)
    J = mu * m[:, None] * (P @ dh)
    return J, dA_dmu


# --------------------------------------------------------------------------
# public operator interface


def _check(problem, phi):
    if phi.N != problem.N:
        raise ValueError(f"series has {phi.N} modes, problem expects {problem.N}")


def apply_operator(problem, phi, mu=None):
    """Apply the problem's operator to a sine series."""
    _check(problem, phi)
    return SineSeries(apply_coeffs(problem, phi.coeffs, mu))


def apply_nekrasov(problem, phi):
    if problem.kind != "nekrasov":
        raise ValueError("problem does not carry the Nekrasov nonlinearity")
    return apply_operator(problem, phi)


def apply_krasovskii(problem, phi):
    if problem.kind != "krasovskii":
        raise ValueError("problem does not carry the Krasovskii nonlinearity")
    return apply_operator(problem, phi)


def apply_hammerstein(problem, u):
    if problem.kind != "hammerstein":
        raise ValueError("problem does not carry a polynomial nonlinearity")
    return apply_operator(problem, u)


# --------------------------------------------------------------------------
# Taylor splitting A = mu B phi + C(phi) + D(phi)


@dataclass(frozen=True, eq=False)
class OperatorSplit:
    """Linear part ``B``, order ``k`` of the leading nonlinear term ``C`` and the remainder ``D``.

    ``k`` is None when the operator is linear.
    """

    problem: WaveProblem
    B: np.ndarray
    k: object

    def linear(self, phi, mu=None):
        mu = self.problem.mu if mu is None else mu
        return SineSeries(mu * (self.B @ phi.coeffs))

    def C(self, phi, mu=None):
        mu = self.problem.mu if mu is None else mu
        return SineSeries(_leading_term(self.problem, phi.coeffs, mu))

    def D(self, phi, mu=None):
        mu = self.problem.mu if mu is None else mu
        full = apply_coeffs(self.problem, phi.coeffs, mu)
        return SineSeries(full - mu * (self.B @ phi.coeffs) - _leading_term(self.problem, phi.coeffs, mu))


def _leading_term(problem, a, mu):
    S, P = problem._tables
    u = S @ a
    kind = problem.kind
    if kind == "nekrasov":
        h = -mu * u * (cumulative_integral_matrix(problem.M) @ u)
    elif kind == "krasovskii":
        psi = -(cosine_table(problem.M, problem.N) @ a)
        h = 3.0 * psi * u
    else:
        k = problem.nonlinearity.lowest_nonlinear_degree
        if k is None:
            return np.zeros_like(a)
        h = problem.nonlinearity.coeffs[k] * u**k
    return mu * problem.multiplier * (P @ h)


def linearize(problem):
    """Frechet derivative at zero plus the homogeneous leading nonlinear term."""
    if problem.kind == "hammerstein":
        f = problem.nonlinearity
        # Constant coefficient table: f'(0) times the kernel multiplier, kept dense.
        B = f.linear * np.diag(problem.multiplier)
        k = f.lowest_nonlinear_degree
    else:
        B = np.diag(problem.multiplier)
        k = 2
    B.setflags(write=False)
    return OperatorSplit(problem, B, k)
