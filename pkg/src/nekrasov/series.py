"""Small-amplitude branches: power series and Lyapunov-Schmidt reduction.

Power series
    The parameter is written ``mu = mu* + sigma * t**lag`` and the profile
    ``Phi = sum_k t**k Phi_k``.  For the deep-water problem ``lag = 1`` and
    ``sigma = 1``, so ``t`` is simply ``lambda = mu - mu*``.  Substituting into
    ``Phi = A(Phi, mu)`` gives at every order the singular linear system
    ``(I - mu* B) Phi_k = rhs_k``.  Each ``Phi_k`` splits into a free multiple
    ``C_k`` of the eigenfunction plus the minimal-norm particular solution;
    ``C_k`` is fixed ``lag`` orders later by the solvability condition
    ``<rhs, e_n> = 0``.  When the leading solvability polynomial vanishes
    identically (pitchfork-type problems, or a cubic leading nonlinearity) the
    lag is increased, which yields the fractional-power expansion in
    ``lambda``.

    Right-hand sides come from truncated power-series arithmetic in ``t``
    carried out pointwise on the operator's dealiased grid, so the series is
    the exact Taylor expansion of the discretized branch.

Branching function
    ``phi = psi + alpha * e_n`` with ``psi`` orthogonal to ``e_n``; the
    complement equation is solved by Newton and
    ``F(alpha, lambda) = <phi - A(phi, mu* + lambda), e_n>``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ComplementNewtonDiverged,
    DenominatorVanished,
    FitIllConditioned,
    NumericalFailure,
    OrderTooHigh,
    SolvabilityFailure,
)
from .linear import char_values, fredholm_solve
from .operators import _multiplier, apply_coeffs, jacobian_coeffs, linearize, residual_coeffs
from .spectral import SineSeries, cosine_table, cumulative_integral_matrix

__all__ = [
    "SeriesBranch",
    "BranchingSample",
    "EquivalenceReport",
    "nekrasov_nazarov_series",
    "operator_series",
    "lyapunov_schmidt_reduce",
    "branching_roots",
    "root_curve",
    "equivalence_check",
    "residual_sweep",
]

MAX_LAG = 4


# --------------------------------------------------------------------------
# truncated power series with grid-valued coefficients, shape (order+1, M)


def _mul(x, y):
    K = x.shape[0]
    out = np.zeros_like(x)
    for k in range(K):
        out[k] = np.einsum("jm,jm->m", x[: k + 1], y[k::-1])
    return out


def _div(x, y):
    out = np.zeros_like(x)
    for k in range(x.shape[0]):
        acc = x[k] - np.einsum("jm,jm->m", y[1 : k + 1], out[k - 1 :: -1]) if k else x[k]
        out[k] = acc / y[0]
    return out


def _sin_cos(x):
    K = x.shape[0]
    s = np.zeros_like(x)
    c = np.zeros_like(x)
    s[0], c[0] = np.sin(x[0]), np.cos(x[0])
    j = np.arange(1, K)[:, None]
    for k in range(1, K):
        jx = j[:k] * x[1 : k + 1]
        s[k] = np.einsum("jm,jm->m", jx, c[k - 1 :: -1]) / k
        c[k] = -np.einsum("jm,jm->m", jx, s[k - 1 :: -1]) / k
    return s, c


def _exp(x):
    K = x.shape[0]
    e = np.zeros_like(x)
    e[0] = np.exp(x[0])
    j = np.arange(1, K)[:, None]
    for k in range(1, K):
        e[k] = np.einsum("jm,jm->m", j[:k] * x[1 : k + 1], e[k - 1 :: -1]) / k
    return e


def operator_series(problem, terms, mu_series, dtype=np.float64):
    """Power-series coefficients of ``A(sum t^k Phi_k, mu(t))``.

    Parameters
    ----------
    terms : ndarray, shape (order+1, N)
        Coefficient arrays of ``Phi_0 .. Phi_order`` (``Phi_0`` normally zero).
    mu_series : ndarray, shape (order+1,)
        Power-series coefficients of the parameter.
    dtype : numpy floating type
        Working precision of the grid arithmetic.

    Returns
    -------
    ndarray, shape (order+1, N)
    """
    S, P = problem.tables(dtype)
    terms = np.asarray(terms, dtype)
    phi = terms @ S.T
    kind = problem.kind
    mu_col = np.zeros_like(phi)
    mu_col[:, :] = np.asarray(mu_series, dtype)[:, None]
    if kind == "nekrasov":
        s, _ = _sin_cos(phi)
        integral = s @ cumulative_integral_matrix(problem.M, dtype).T
        w = _mul(mu_col, integral)
        w[0] += 1
        if not np.all(w[0] > 0):
            raise DenominatorVanished(float(w[0].min()), int(np.argmin(w[0])))
        h = _div(s, w)
    elif kind == "krasovskii":
        C = cosine_table(problem.M, problem.N, dtype)
        psi3 = -3 * (terms @ C.T)
        s, _ = _sin_cos(phi)
        h = _mul(_exp(psi3), s)
    else:
        coeffs = problem.nonlinearity.coeffs
        h = np.zeros_like(phi)
        h[0] = coeffs[-1]
        for c in coeffs[-2::-1]:
            h = _mul(h, phi)
            h[0] += c
    A = _mul(mu_col, h)
    return (A @ P.T) * _multiplier(problem, dtype)


# --------------------------------------------------------------------------
# Nekrasov-Nazarov recurrent series


@dataclass(frozen=True, eq=False)
class SeriesBranch:
    """``Phi(t) = sum_k t^k Phi_k`` along ``mu = mu_star + sigma * t**lag``.

    ``raw`` keeps the terms in the working precision they were computed in;
    ``terms`` are the same values as double-precision sine series.
    """

    problem: object
    mode: int
    mu_star: float
    raw: np.ndarray  # shape (K, N)
    constants: tuple  # eigen-components C_1 .. C_K
    lag: int = 1
    sigma: float = 1.0

    @property
    def terms(self):
        return tuple(SineSeries(np.asarray(r, float)) for r in self.raw)

    @property
    def order(self):
        return self.raw.shape[0]

    @property
    def particular(self):
        """Minimal-norm parts ``Phi_k - C_k e_n`` (zero eigen-component)."""
        out = []
        for r in self.raw:
            a = np.array(r, float)
            a[self.mode - 1] = 0.0
            out.append(SineSeries(a))
        return tuple(out)

    def t_of_lambda(self, lam):
        x = lam / self.sigma
        if self.lag % 2 == 0 and x < 0:
            raise ValueError(f"lambda={lam} lies on the side of mu* without this branch")
        return math.copysign(abs(x) ** (1.0 / self.lag), x)

    def mu(self, t):
        return self.mu_star + self.sigma * t**self.lag

    def coeffs_at_t(self, t, order=None):
        """Sum of the first ``order`` terms at ``t``, in the working precision."""
        K = self.order if order is None else order
        t = self.raw.dtype.type(t)
        a = np.zeros(self.problem.N, self.raw.dtype)
        for k in range(K, 0, -1):
            a = (a + self.raw[k - 1]) * t
        return a

    def __call__(self, lam, order=None):
        """Profile at ``mu = mu_star + lam``."""
        return SineSeries(np.asarray(self.coeffs_at_t(self.t_of_lambda(lam), order), float))

    def amplitude_coefficients(self):
        """Coefficients of ``alpha(t) = <Phi, e_n>`` order by order."""
        return np.asarray(self.raw[:, self.mode - 1], float)


class _Builder:
    """Rebuilds the series from its eigen-constants; constants not yet known count as zero."""

    def __init__(self, problem, n, mu_star, B, lag, sigma, dtype):
        self.problem = problem
        self.n = n
        self.mu_star = mu_star
        self.B = B
        self.lag = lag
        self.sigma = sigma
        self.dtype = dtype

    def mu_series(self, order):
        m = np.zeros(order + 1, self.dtype)
        m[0] = self.mu_star
        if self.lag <= order:
            m[self.lag] = self.sigma
        return m

    def build(self, constants, upto):
        """Terms Phi_0..Phi_upto and the right-hand side of order upto+1."""
        N = self.problem.N
        terms = np.zeros((upto + 2, N), self.dtype)
        mu = self.mu_series(upto + 1)
        for k in range(1, upto + 2):
            rhs = operator_series(self.problem, terms[: k + 1], mu[: k + 1], self.dtype)[k]
            if k == upto + 1:
                return terms[: upto + 1], rhs
            if k > 1:
                terms[k] = fredholm_solve(self.B, self.mu_star, rhs)
                terms[k][self.n - 1] = 0
            if k - 1 < len(constants):
                terms[k][self.n - 1] = constants[k - 1]
        raise AssertionError("unreachable")

    def projection(self, constants, order):
        _, rhs = self.build(constants, order - 1)
        return rhs[self.n - 1]


def _leading_constants(builder, tol=1e-9):
    """Nonzero real roots of the first solvability polynomial.

    Returns None when the polynomial vanishes identically at this lag.
    """
    lag = builder.lag
    deg = lag + 1
    samples = np.linspace(-1.0, 1.0, deg + 3)
    vals = np.array([float(builder.projection([builder.dtype(c)], lag + 1)) for c in samples])
    poly = np.polynomial.polynomial.polyfit(samples, vals, deg)
    scale = np.abs(poly).max()
    if scale == 0 or abs(poly[deg]) <= tol * scale:
        return None, poly
    if abs(poly[0]) > 1e-8 * scale:
        raise SolvabilityFailure(lag + 1, poly)
    roots = np.polynomial.polynomial.polyroots(poly[1:])
    real = [float(r.real) for r in roots if abs(r.imag) <= 1e-9 * max(1.0, abs(r))]
    real = [_polish(builder, r) for r in real if abs(r) > 1e-12]
    return sorted(real, key=lambda r: (r <= 0, abs(r))), poly


def _polish(builder, c, iters=8):
    """Secant refinement of a solvability root in the working precision."""
    order = builder.lag + 1
    x0 = builder.dtype(c)
    x1 = x0 * (1 + builder.dtype(1e-7))
    f0 = builder.projection([x0], order)
    f1 = builder.projection([x1], order)
    for _ in range(iters):
        if f1 == f0:
            break
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        x0, f0 = x1, f1
        x1, f1 = x2, builder.projection([x2], order)
        if x1 == x0:
            break
    return x1


def nekrasov_nazarov_series(problem, n=1, order=5, dtype=np.float64):
    """Recurrent power-series branch bifurcating from the n-th characteristic value.

    Returns a :class:`SeriesBranch` whose first term is ``C_1 sin(n theta)``;
    each later term carries its eigen-component ``C_k`` fixed by the
    solvability condition ``lag`` orders up.  ``dtype=np.longdouble`` runs
    the whole recurrence in extended precision (diagonal kernels only).
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    B = np.asarray(linearize(problem).B)
    cvs = char_values(B, n)
    cv = cvs[n - 1] if len(cvs) >= n else None
    if cv is None or cv.multiplicity != 1:
        raise ValueError(f"characteristic value {n} is not simple")
    if abs(abs(cv.eigenfunctions[0].coeffs[n - 1]) - 1.0) > 1e-12:
        raise ValueError("series construction requires the eigenfunction sin(n theta)")
    if dtype is not np.float64:
        diag = np.diagonal(B)
        if np.count_nonzero(B - np.diag(diag)):
            raise ValueError("extended-precision series needs a diagonal linearization")
        scale = diag / problem.multiplier
        B = np.diag(_multiplier(problem, dtype) * np.asarray(scale, dtype))
        mu_star = 1 / B[n - 1, n - 1]
    else:
        mu_star = cv.mu

    last_poly = None
    for lag in range(1, MAX_LAG + 1):
        if (order + lag) * n > problem.N:
            raise OrderTooHigh(
                f"order {order} with lag {lag} needs {(order + lag) * n} modes, truncation is {problem.N}"
            )
        degenerate = False
        for sigma in (1.0, -1.0) if lag % 2 == 0 else (1.0,):
            builder = _Builder(problem, n, mu_star, B, lag, sigma, dtype)
            roots, poly = _leading_constants(builder)
            last_poly = poly
            if roots is None:
                degenerate = True
                break
            if roots:
                positive = [r for r in roots if r > 0]
                return _complete(builder, positive[0] if positive else roots[0], order)
        if not degenerate:
            break
    raise SolvabilityFailure(2 if last_poly is None else len(last_poly) - 1, last_poly if last_poly is not None else [])


def _complete(builder, c1, order):
    constants = [c1]
    lag = builder.lag
    for k in range(2, order + 1):
        # C_k enters the order k+lag solvability condition affinely.
        f0 = builder.projection(constants + [0], k + lag)
        f1 = builder.projection(constants + [1], k + lag)
        f2 = builder.projection(constants + [-1], k + lag)
        slope = f1 - f0
        curvature = f1 + f2 - 2 * f0
        if slope == 0 or abs(curvature) > 1e-6 * max(abs(f0), abs(slope)):
            raise SolvabilityFailure(k + lag, [float(f0), float(slope), float(curvature) / 2])
        constants.append(-f0 / slope)
    terms, _ = builder.build(constants, order)
    return SeriesBranch(
        problem=builder.problem,
        mode=builder.n,
        mu_star=float(builder.mu_star),
        raw=terms[1:],
        constants=tuple(float(c) for c in constants),
        lag=lag,
        sigma=builder.sigma,
    )


def residual_sweep(branch, lambdas=(1e-1, 3e-2, 1e-2, 3e-3, 1e-3), dtype=np.longdouble):
    """Residual norms ``||Phi_s - A(Phi_s, mu* + lambda)||`` and their log-log slope.

    The residual of a fifth-order series at ``lambda = 1e-3`` is near
    ``1e-21`` while the profile itself is ``1e-4``; double precision cannot
    resolve that, so the residual is evaluated in extended precision by
    default.
    """
    problem = branch.problem
    lambdas = np.asarray(lambdas, float)
    res = []
    for lam in lambdas:
        t = branch.t_of_lambda(lam)
        a = branch.coeffs_at_t(t)
        # mu* + lambda rounded to double would dominate the residual
        mu = dtype(branch.mu_star) + dtype(branch.sigma) * dtype(t) ** branch.lag
        r = residual_coeffs(problem, a, mu, dtype=dtype)
        res.append(float(np.sqrt(np.sum(r * r))))
    res = np.array(res)
    slope = np.polyfit(np.log(np.abs(lambdas)), np.log(res), 1)[0]
    return lambdas, res, float(slope)


# --------------------------------------------------------------------------
# Lyapunov-Schmidt reduction


@dataclass(frozen=True, eq=False)
class BranchingSample:
    alpha: float
    lam: float
    F: float
    psi: SineSeries


def lyapunov_schmidt_reduce(
    problem, n, alpha, lam, mu_star=None, psi0=None, tol=1e-14, max_iter=30, bound=0.5
):
    """Solve the complement equation at ``(alpha, lambda)`` and evaluate the branching function."""
    if abs(alpha) > bound or abs(lam) > bound:
        raise ValueError(f"(alpha, lambda) = ({alpha}, {lam}) outside the neighbourhood bound {bound}")
    N = problem.N
    if mu_star is None:
        mu_star = char_values(linearize(problem).B, n)[n - 1].mu
    mu = mu_star + lam
    keep = np.arange(N) != n - 1
    psi = np.zeros(N) if psi0 is None else np.array(psi0, float)
    psi[n - 1] = 0.0
    last = math.inf
    for it in range(max_iter + 1):
        phi = psi.copy()
        phi[n - 1] = alpha
        try:
            A = apply_coeffs(problem, phi, mu)
        except NumericalFailure:
            raise ComplementNewtonDiverged(it, last) from None
        r = phi - A
        last = float(np.linalg.norm(r[keep]))
        if last <= tol * max(1.0, np.linalg.norm(phi)):
            F = float(r[n - 1])
            return BranchingSample(float(alpha), float(lam), F, SineSeries(psi))
        if it == max_iter or not math.isfinite(last):
            break
        J, _ = jacobian_coeffs(problem, phi, mu)
        L = np.eye(N) - J
        try:
            step = np.linalg.solve(L[np.ix_(keep, keep)], -r[keep])
        except np.linalg.LinAlgError:
            break
        psi[keep] += step
        if np.linalg.norm(step) <= 1e-16 * max(1.0, np.linalg.norm(psi)):
            # stagnated at round-off level
            phi = psi.copy()
            phi[n - 1] = alpha
            r = phi - apply_coeffs(problem, phi, mu)
            last = float(np.linalg.norm(r[keep]))
            if last <= 1e-12 * max(1.0, np.linalg.norm(phi)):
                return BranchingSample(float(alpha), float(lam), float(r[n - 1]), SineSeries(psi))
            break
    raise ComplementNewtonDiverged(it, last)


def _reduced(problem, n, alpha, lam, mu_star):
    """``F(alpha, lam) / alpha``, continuous through alpha = 0 along the trivial branch."""
    if alpha == 0.0:
        # derivative of F at alpha = 0: <(I - mu B)(e + psi_a), e> with psi_a from the complement
        B = np.asarray(linearize(problem).B)
        N = problem.N
        L = np.eye(N) - (mu_star + lam) * B
        keep = np.arange(N) != n - 1
        e = np.zeros(N)
        e[n - 1] = 1.0
        psi_a = np.zeros(N)
        psi_a[keep] = np.linalg.solve(L[np.ix_(keep, keep)], -L[keep] @ e)
        return float((L @ (e + psi_a))[n - 1])
    return lyapunov_schmidt_reduce(problem, n, alpha, lam, mu_star).F / alpha


def branching_roots(problem, n, lam, mu_star=None, alpha_max=0.5, intervals=64, tol=1e-15):
    """Nontrivial roots of ``F(., lam)`` in ``|alpha| <= alpha_max``, nearest zero first.

    A deterministic scan over ``intervals`` cells brackets sign changes of
    ``F/alpha``; each bracket is refined by Newton steps safeguarded by
    bisection.  Cells where the complement solve fails are skipped.
    """
    if mu_star is None:
        mu_star = char_values(linearize(problem).B, n)[n - 1].mu

    def G(x):
        try:
            return _reduced(problem, n, x, lam, mu_star)
        except NumericalFailure:
            return math.nan

    grid = np.linspace(-alpha_max, alpha_max, intervals + 1)
    vals = [G(x) for x in grid]
    roots = []
    for (x0, g0), (x1, g1) in zip(zip(grid, vals), zip(grid[1:], vals[1:])):
        if not (math.isfinite(g0) and math.isfinite(g1)):
            continue
        if g0 == 0.0:
            roots.append(float(x0))
            continue
        if g0 * g1 > 0:
            continue
        roots.append(_refine(G, x0, x1, g0, g1, tol))
    if vals and math.isfinite(vals[-1]) and vals[-1] == 0.0:
        roots.append(float(grid[-1]))
    return sorted(roots, key=abs)


def _refine(G, a, b, ga, gb, tol, max_iter=100):
    x = a - ga * (b - a) / (gb - ga)
    for _ in range(max_iter):
        gx = G(x)
        if not math.isfinite(gx):
            x = 0.5 * (a + b)
            continue
        if gx == 0.0:
            return float(x)
        if ga * gx < 0:
            b, gb = x, gx
        else:
            a, ga = x, gx
        # secant through the bracket ends, falling back to bisection
        x_new = a - ga * (b - a) / (gb - ga)
        if not (min(a, b) < x_new < max(a, b)):
            x_new = 0.5 * (a + b)
        if abs(x_new - x) <= tol * max(1e-3, abs(x)) or abs(b - a) <= tol * max(1e-3, abs(x)):
            return float(x_new)
        x = x_new
    return float(x)


def root_curve(problem, n, lambdas, mu_star=None, alpha_max=0.5):
    """Nearest nontrivial branching-equation root for each lambda."""
    out = []
    for lam in lambdas:
        roots = branching_roots(problem, n, lam, mu_star, alpha_max)
        if lam == 0.0:
            out.append(0.0)
            continue
        if not roots:
            raise ComplementNewtonDiverged(0, math.nan)
        out.append(roots[0])
    return np.array(out)


@dataclass(frozen=True, eq=False)
class EquivalenceReport:
    order: int
    series_coefficients: np.ndarray
    fitted_coefficients: np.ndarray
    discrepancies: np.ndarray  # relative, per order
    condition: float
    lambdas: np.ndarray
    roots: np.ndarray

    @property
    def max_discrepancy(self):
        return float(np.max(self.discrepancies))


def equivalence_check(
    problem, n=1, order=4, branch=None, radius=0.08, samples=17, fit_degree=None, alpha_max=0.5
):
    """Compare the series eigen-component with a polynomial fit of the root curve.

    The root curve ``alpha(lambda)`` of the branching equation is sampled at
    Chebyshev points in ``[-radius, radius]`` and fitted (without constant
    term) by a polynomial of degree ``fit_degree`` (default ``2*order + 2``);
    the first ``order`` coefficients are compared with the series.
    """
    if branch is None:
        branch = nekrasov_nazarov_series(problem, n, order)
    if branch.lag != 1:
        raise ValueError("root-curve comparison is defined for integer-power branches")
    if branch.order < order:
        raise ValueError("series order below the requested comparison order")
    D = 2 * order + 2 if fit_degree is None else fit_degree
    k = np.arange(samples)
    x = np.cos(np.pi * (k + 0.5) / samples)
    lambdas = radius * x
    V = np.vander(x, D + 1, increasing=True)[:, 1:]
    cond = float(np.linalg.cond(V))
    if cond > 1e12:
        raise FitIllConditioned(cond)
    roots = root_curve(problem, n, lambdas, branch.mu_star, alpha_max)
    coef, *_ = np.linalg.lstsq(V, roots, rcond=None)
    fitted = coef[:order] / radius ** np.arange(1, order + 1)
    series = branch.amplitude_coefficients()[:order]
    disc = np.abs(fitted - series) / np.maximum(np.abs(series), 1e-300)
    return EquivalenceReport(order, series, fitted, disc, cond, lambdas, roots)
