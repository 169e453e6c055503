"""Cross-check battery behind the ``verify`` command.

Each check compares a computed quantity against an independent oracle
and records the measured value next to its threshold.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from .continuation import continue_branch, newton_solve, refine_extended
from .errors import WaveError
from .linear import char_values, detect_bifurcations
from .operators import (
    FourierDiagonal,
    Hammerstein,
    LogDifference,
    WaveProblem,
    apply_coeffs,
    jacobian_coeffs,
    krasovskii_problem,
    linearize,
    nekrasov_problem,
)
from .series import equivalence_check, nekrasov_nazarov_series, residual_sweep

__all__ = [
    "Check",
    "PerturbedKernel",
    "kernel_identity_error",
    "kernel_grid",
    "frechet_error",
    "series_newton_differences",
    "even_defect",
    "run_checks",
]


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    measured: float
    threshold: float
    detail: str = ""

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class PerturbedKernel:
    """Kernel plus ``size * sin(e) sin(t)``; fault-injection hook for the identity check."""

    base: object
    size: float = 1e-2

    def __call__(self, eps, theta):
        return self.base(eps, theta) + self.size * np.sin(eps) * np.sin(theta)


def kernel_grid(points=100):
    """Interleaved grid on (0, pi) with |e - t| and |e + t| bounded below by pi/(2 points)."""
    k = np.arange(points)
    return np.pi * (k + 0.25) / points, np.pi * (k + 0.75) / points


def kernel_identity_error(kernel=None, N=10_000, points=100):
    """``max |K(e, t) + 4 sum_{n<=N} sin(n e) sin(n t)/n|`` over the off-singular grid."""
    kernel = LogDifference() if kernel is None else kernel
    eps, theta = kernel_grid(points)
    n = np.arange(1, N + 1)
    partial = (np.sin(np.outer(eps, n)) / n) @ np.sin(np.outer(theta, n)).T
    K = kernel(eps[:, None], theta[None, :])
    return float(np.max(np.abs(K + 4.0 * partial)))


def frechet_error(problem, a, mu, h=1e-6):
    """Relative mismatch of the analytic Jacobian against central differences."""
    J, dmu = jacobian_coeffs(problem, a, mu)
    N = a.size
    fd = np.empty((N, N))
    for j in range(N):
        e = np.zeros(N)
        e[j] = h
        fd[:, j] = (apply_coeffs(problem, a + e, mu) - apply_coeffs(problem, a - e, mu)) / (2 * h)
    fd_mu = (apply_coeffs(problem, a, mu + h) - apply_coeffs(problem, a, mu - h)) / (2 * h)
    scale = max(np.abs(fd).max(), np.abs(fd_mu).max(), 1e-300)
    return float(max(np.abs(J - fd).max(), np.abs(dmu - fd_mu).max()) / scale)


def series_newton_differences(problem, order, lambdas=(0.05, 0.035, 0.025, 0.0175, 0.0125, 0.00875), n=1):
    """``||Phi_newton - Phi_series||`` for the series seeded Newton solve at each lambda.

    Both sides are carried in extended precision; the returned residuals
    are those of the double-precision Newton solve.  Returns
    ``(lambdas, differences, residuals, fitted order)``.
    """
    br = nekrasov_nazarov_series(problem, n, order, dtype=np.longdouble)
    if br.lag != 1:
        raise ValueError("series-vs-Newton order is defined for integer-power branches")
    lambdas = np.asarray(lambdas, float)
    diffs, residuals = [], []
    for lam in lambdas:
        t = br.t_of_lambda(lam)
        seed = br.coeffs_at_t(t)
        mu = np.longdouble(br.mu_star) + np.longdouble(br.sigma) * np.longdouble(t)
        point = newton_solve(problem, seed.astype(float), float(mu), mode=n)
        exact = refine_extended(problem, point.phi.coeffs, mu)
        residuals.append(point.residual)
        diffs.append(float(np.sqrt(np.sum((exact - seed) ** 2))))
    diffs = np.array(diffs)
    slope = float(np.polyfit(np.log(lambdas), np.log(diffs), 1)[0])
    return lambdas, diffs, np.array(residuals), slope


def _random_profile(rng, N, size=0.1, decay=1.0):
    a = rng.standard_normal(N) / np.arange(1, N + 1) ** (1 + decay)
    return size * a / np.linalg.norm(a)


def run_checks(cfg=None, kernel=None):
    """Run the battery; ``kernel`` replaces the deep-water kernel in the identity check."""
    N = 64 if cfg is None else cfg.N
    K = 5 if cfg is None else cfg.order
    seed = 0 if cfg is None else cfg.seed
    rng = np.random.default_rng(seed)
    checks = []

    def record(name, fn):
        try:
            checks.append(fn())
        except (WaveError, ValueError, np.linalg.LinAlgError) as exc:
            checks.append(Check(name, False, math.nan, math.nan, f"{type(exc).__name__}: {exc}"))

    def kernel_check():
        err = kernel_identity_error(kernel)
        return Check("kernel_identity", err <= 4e-4, err, 4e-4, "N=10000, 100x100 grid")

    def eig_infinite():
        p = nekrasov_problem(N=N)
        m = min(16, N)
        mus = np.array([cv.mu for cv in char_values(linearize(p).B, m)])
        err = float(np.max(np.abs(mus - 3.0 * np.arange(1, m + 1))))
        return Check("eigenvalues_infinite_depth", err <= 1e-12, err, 1e-12, f"n <= {m}")

    def eig_finite():
        worst = 0.0
        m = min(16, N)
        n = np.arange(1, m + 1)
        for ratio in (0.1, 0.5, 1.0, 5.0):
            p = nekrasov_problem(N=N, depth=ratio, wavelength=1.0)
            mus = np.array([cv.mu for cv in char_values(linearize(p).B, m)])
            exact = 3.0 * n / np.tanh(2.0 * np.pi * n * ratio)
            worst = max(worst, float(np.max(np.abs(mus - exact))))
        return Check("eigenvalues_finite_depth", worst <= 1e-12, worst, 1e-12, "h/L in {0.1, 0.5, 1, 5}")

    def bifurcations():
        found = detect_bifurcations(nekrasov_problem(N=N), (0.0, 10.0))
        mus = np.array([cv.mu for cv in found])
        ok = mus.size == 3 and all(cv.guaranteed for cv in found)
        err = float(np.max(np.abs(mus - [3.0, 6.0, 9.0]))) if mus.size == 3 else math.inf
        return Check("bifurcation_points", ok and err <= 1e-10, err, 1e-10, f"found {[float(m) for m in mus]}")

    def frechet():
        problems = [
            nekrasov_problem(N=N),
            nekrasov_problem(N=N, depth=0.5),
            krasovskii_problem(N=N),
            WaveProblem(FourierDiagonal(tuple(range(1, N + 1))), Hammerstein((0.0, 1.0, 0.5, 1.0)), N=N),
        ]
        worst = 0.0
        for p in problems:
            a = _random_profile(rng, N)
            mu = 1.1 * char_values(linearize(p).B, 1)[0].mu
            worst = max(worst, frechet_error(p, a, mu))
        return Check("frechet_consistency", worst <= 1e-6, worst, 1e-6, "central differences, h=1e-6")

    def symmetry():
        worst = 0.0
        for p in (nekrasov_problem(N=N), krasovskii_problem(N=N)):
            for _ in range(10):
                a = _random_profile(rng, N)
                worst = max(worst, even_defect(p, a))
        return Check("symmetry_invariance", worst <= 1e-12, worst, 1e-12, "even part of h(Phi) on the grid")

    def series_order():
        p = nekrasov_problem(N=N)
        br = nekrasov_nazarov_series(p, 1, K, dtype=np.longdouble)
        _, _, slope = residual_sweep(br)
        target = K + 0.7
        return Check("series_residual_order", slope >= target, slope, target, f"K={K}")

    def equivalence():
        order = min(4, K)
        rep = equivalence_check(nekrasov_problem(N=N), 1, order)
        return Check("series_branching_equivalence", rep.max_discrepancy <= 1e-6, rep.max_discrepancy, 1e-6,
                     f"through order {order}")

    def newton_order():
        _, _, res, slope = series_newton_differences(nekrasov_problem(N=N), K)
        target = K + 0.7
        ok = slope >= target and float(res.max()) <= 1e-11
        return Check("series_newton_order", ok, slope, target, f"max Newton residual {res.max():.3e}")

    def branch():
        b = continue_branch(nekrasov_problem(N=N), 1, 0.01, 200)
        res = max(p.residual for p in b.points)
        den = min(p.diagnostics.min_denominator for p in b.points)
        ok = len(b.points) == 200 and res <= 1e-10 and den > 1e-10
        return Check("continuation_residuals", ok, res, 1e-10,
                     f"{len(b.points)} points, {b.termination}, min denominator {den:.3e}")

    record("kernel_identity", kernel_check)
    record("eigenvalues_infinite_depth", eig_infinite)
    record("eigenvalues_finite_depth", eig_finite)
    record("bifurcation_points", bifurcations)
    record("frechet_consistency", frechet)
    record("symmetry_invariance", symmetry)
    record("series_residual_order", series_order)
    record("series_branching_equivalence", equivalence)
    record("series_newton_order", newton_order)
    record("continuation_residuals", branch)
    return checks


def even_defect(problem, a, mu=None):
    """Largest even component of the pre-projection grid output ``h(Phi)``."""
    from .operators import grid_state

    mu = problem.mu if mu is None else mu
    h = grid_state(problem, np.asarray(a, float), mu).h
    reflected = np.roll(h[::-1], 1)  # h(-theta_j) = h(theta_{M-j})
    return float(np.max(np.abs(h + reflected)) / 2)
