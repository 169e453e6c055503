"""Newton solves and pseudo-arclength continuation of nontrivial branches.

The unknowns are the sine coefficients ``a`` together with ``mu``.  A
branch starts at a simple characteristic value, takes its first point from
the small-amplitude series, and then advances by a secant predictor and a
Newton corrector constrained to the hyperplane

    v_a . (a - a_k) + v_mu (mu - mu_k) = ds

with unit weights on both blocks.  Termination reasons are returned as
data on the :class:`Branch`.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DenominatorVanished, NewtonDiverged, NumericalFailure, WaveError
from .linear import char_values
from .operators import apply_coeffs, grid_state, jacobian_coeffs, linearize
from .spectral import SineSeries

__all__ = [
    "TOL_NEWTON",
    "EPS_DEN",
    "SLOPE_LIMIT",
    "Diagnostics",
    "BranchPoint",
    "Branch",
    "MonitorVerdict",
    "newton_solve",
    "solve_at_amplitude",
    "refine_extended",
    "continue_branch",
    "krasovskii_monitor",
    "point_diagnostics",
    "multistart_solutions",
    "MultistartReport",
    "classify_multistart",
]

TOL_NEWTON = 1e-11
EPS_DEN = 1e-10
SLOPE_LIMIT = math.pi / 6

TERMINATIONS = ("StepBudget", "SlopeBound", "DenominatorBreakdown", "NewtonFailure")


@dataclass(frozen=True)
class Diagnostics:
    min_denominator: float
    max_slope: float
    positivity_defect: float
    newton_iters: int


@dataclass(frozen=True, eq=False)
class BranchPoint:
    mu: float
    phi: SineSeries
    amplitude: float
    residual: float
    diagnostics: Diagnostics


@dataclass(frozen=True, eq=False)
class Branch:
    origin: object  # CharValue
    mode: int
    points: tuple
    termination: str
    step_sizes: tuple = ()
    halvings: int = 0

    @property
    def mus(self):
        return np.array([p.mu for p in self.points])

    @property
    def amplitudes(self):
        return np.array([p.amplitude for p in self.points])


def _dense_theta(N, factor=8):
    # [0, pi] with at least factor*N interior samples; endpoints are handled exactly
    return np.linspace(0.0, math.pi, factor * N + 1)


def _profile_on_half(phi, factor=8):
    theta = _dense_theta(phi.N, factor)
    vals = phi(theta)
    # Phi(0) = Phi(pi) = 0 exactly for any sine series; sin(n*pi) in floating point is not
    vals[0] = 0.0
    vals[-1] = 0.0
    return theta, vals


def _max_slope(a):
    _, vals = _profile_on_half(SineSeries(a))
    return float(np.max(np.abs(vals)))


def point_diagnostics(problem, a, mu, newton_iters=0):
    phi = SineSeries(a)
    _, vals = _profile_on_half(phi)
    state = grid_state(problem, np.asarray(a, float), mu)
    return Diagnostics(
        min_denominator=float(state.min_denominator),
        # Phi is odd, so its supremum over the period is max |Phi| on [0, pi]
        max_slope=float(np.max(np.abs(vals))),
        positivity_defect=float(min(0.0, vals.min())),
        newton_iters=int(newton_iters),
    )


def _make_point(problem, a, mu, mode, residual, iters):
    a = np.asarray(a, float)
    return BranchPoint(
        mu=float(mu),
        phi=SineSeries(a),
        amplitude=float(a[mode - 1]),
        residual=float(residual),
        diagnostics=point_diagnostics(problem, a, mu, iters),
    )


def _residual(problem, a, mu):
    return a - apply_coeffs(problem, a, mu)


def newton_solve(problem, phi0, mu, tol=TOL_NEWTON, max_iter=50, mode=1):
    """Damped Newton for ``phi = A(phi, mu)`` at fixed ``mu``.

    Steps are halved (up to 20 times) until the residual norm decreases or
    the trial point leaves the region where the denominator is positive.
    ``DenominatorVanished`` at the starting point propagates.
    """
    a = np.array(phi0.coeffs if isinstance(phi0, SineSeries) else phi0, float)
    N = a.size
    r = _residual(problem, a, mu)
    norm = float(np.linalg.norm(r))
    for it in range(max_iter + 1):
        if norm <= tol:
            return _make_point(problem, a, mu, mode, norm, it)
        if it == max_iter or not math.isfinite(norm):
            break
        J, _ = jacobian_coeffs(problem, a, mu)
        try:
            step = np.linalg.solve(np.eye(N) - J, -r)
        except np.linalg.LinAlgError:
            break
        damp = 1.0
        for _ in range(21):
            trial = a + damp * step
            try:
                r_trial = _residual(problem, trial, mu)
            except NumericalFailure:
                damp *= 0.5
                continue
            n_trial = float(np.linalg.norm(r_trial))
            if n_trial < norm or n_trial <= tol:
                break
            damp *= 0.5
        else:
            break
        a, r, norm = trial, r_trial, n_trial
    raise NewtonDiverged(it, norm)


def refine_extended(problem, phi, mu, max_iter=8):
    """Iterative refinement of a converged solution in extended precision.

    The residual is evaluated in ``np.longdouble`` while the correction
    reuses the double-precision Jacobian, which contracts the error by
    about the double round-off per sweep.  Used to measure solution
    differences far below ``TOL_NEWTON``.

    Returns
    -------
    ndarray of np.longdouble
    """
    from .operators import residual_coeffs

    a = np.asarray(phi.coeffs if isinstance(phi, SineSeries) else phi, np.longdouble)
    mu = np.longdouble(mu)
    J, _ = jacobian_coeffs(problem, a.astype(float), float(mu))
    L = np.eye(a.size) - J
    last = math.inf
    for _ in range(max_iter):
        r = residual_coeffs(problem, a, mu, dtype=np.longdouble)
        norm = float(np.sqrt(np.sum(r * r)))
        if norm == 0.0 or norm >= 0.5 * last:
            break
        last = norm
        a = a - np.linalg.solve(L, r.astype(float)).astype(np.longdouble)
    return a


def _bordered_newton(problem, a, mu, row_a, row_mu, target, tol, max_iter):
    """Newton on ``(a, mu)`` with one extra linear equation ``row . x = target``.

    Returns ``(a, mu, residual, iterations)``; raises ``NewtonDiverged`` or
    propagates ``DenominatorVanished``.
    """
    a = np.array(a, float)
    N = a.size
    norm = math.inf
    for it in range(max_iter + 1):
        r = _residual(problem, a, mu)
        g = float(row_a @ a + row_mu * mu - target)
        norm = float(np.linalg.norm(r))
        if norm <= tol and abs(g) <= 1e-12 * max(1.0, abs(target)):
            return a, mu, norm, it
        if it == max_iter or not math.isfinite(norm):
            break
        J, dmu = jacobian_coeffs(problem, a, mu)
        K = np.empty((N + 1, N + 1))
        K[:N, :N] = np.eye(N) - J
        K[:N, N] = -dmu
        K[N, :N] = row_a
        K[N, N] = row_mu
        try:
            dx = np.linalg.solve(K, -np.append(r, g))
        except np.linalg.LinAlgError:
            break
        a = a + dx[:N]
        mu = mu + dx[N]
    raise NewtonDiverged(it, norm)


def solve_at_amplitude(problem, alpha, phi0, mu0, mode=1, tol=TOL_NEWTON, max_iter=30):
    """Branch point with the eigen-coordinate ``a_mode`` fixed to ``alpha``; ``mu`` is solved for."""
    a0 = np.array(phi0.coeffs if isinstance(phi0, SineSeries) else phi0, float)
    row = np.zeros(a0.size)
    row[mode - 1] = 1.0
    a, mu, res, it = _bordered_newton(problem, a0, mu0, row, 0.0, alpha, tol, max_iter)
    return _make_point(problem, a, mu, mode, res, it)


def _first_guess(problem, n, mu_star, ds):
    """Series prediction of the first branch point at arclength about ``ds`` from the origin."""
    from .series import nekrasov_nazarov_series

    N = problem.N
    for order in (4, 3, 2):
        try:
            br = nekrasov_nazarov_series(problem, n, order)
        except (WaveError, ValueError):
            continue
        c1 = br.constants[0]
        tmu = 1.0 if br.lag == 1 else 0.0
        t = ds / math.hypot(c1, tmu)
        t = math.copysign(t, c1)
        a = br.coeffs_at_t(t).astype(float)
        # the amplitude target is the leading-order value, positive by construction
        a[n - 1] = c1 * t
        return a, br.mu(t)
    a = np.zeros(N)
    a[n - 1] = ds
    return a, mu_star


def continue_branch(
    problem,
    n=1,
    ds=0.01,
    max_steps=200,
    tol=TOL_NEWTON,
    ds_max=None,
    ds_min=None,
    max_corrector=8,
    slope_stop=SLOPE_LIMIT - 0.01,
):
    """Trace the branch bifurcating from the n-th characteristic value.

    Parameters
    ----------
    ds : float
        Initial arclength step in the unit-weighted ``(a, mu)`` norm.
    max_steps : int
        Number of accepted points, including the first.
    ds_max, ds_min : float, optional
        Step bounds; default ``10*ds`` and ``ds/1024``.
    slope_stop : float
        ``max_slope`` at which the branch ends with ``SlopeBound``.
    """
    if ds <= 0 or max_steps < 1:
        raise ValueError("ds and max_steps must be positive")
    ds_max = 10.0 * ds if ds_max is None else ds_max
    ds_min = ds / 1024.0 if ds_min is None else ds_min
    cvs = char_values(linearize(problem).B, n)
    if len(cvs) < n or cvs[n - 1].multiplicity != 1:
        raise ValueError(f"characteristic value {n} is not simple")
    origin = cvs[n - 1]
    mu_star = origin.mu
    N = problem.N

    points = []
    steps = []
    halvings = 0

    def accept(a, mu, res, it):
        p = _make_point(problem, a, mu, n, res, it)
        points.append(p)
        return p

    # first point: amplitude-constrained corrector from the series prediction
    h = ds
    while True:
        a0, mu0 = _first_guess(problem, n, mu_star, h)
        row = np.zeros(N)
        row[n - 1] = 1.0
        try:
            a, mu, res, it = _bordered_newton(problem, a0, mu0, row, 0.0, a0[n - 1], tol, 2 * max_corrector)
            if _max_slope(a) < SLOPE_LIMIT:
                break
        except NumericalFailure:
            pass
        h *= 0.5
        halvings += 1
        if h < ds_min:
            return Branch(origin, n, tuple(points), "NewtonFailure", tuple(steps), halvings)
    p = accept(a, mu, res, it)
    steps.append(h)
    if p.diagnostics.max_slope >= slope_stop:
        return Branch(origin, n, tuple(points), "SlopeBound", tuple(steps), halvings)

    prev = np.append(np.zeros(N), mu_star)  # trivial solution at the origin
    cur = np.append(a, mu)
    termination = "StepBudget"
    while len(points) < max_steps:
        v = cur - prev
        v /= np.linalg.norm(v)
        last_failure = None
        while True:
            guess = cur + h * v
            target = float(v @ cur) + h
            try:
                a, mu, res, it = _bordered_newton(
                    problem, guess[:N], guess[N], v[:N], v[N], target, tol, max_corrector
                )
                # points past the slope limit are outside the theory; shorten the step instead
                if _max_slope(a) < SLOPE_LIMIT:
                    break
                last_failure = "slope"
            except NumericalFailure as exc:
                last_failure = exc
            h *= 0.5
            halvings += 1
            if h < ds_min:
                break
        if h < ds_min:
            if last_failure == "slope":
                termination = "SlopeBound"
            elif isinstance(last_failure, DenominatorVanished):
                termination = "DenominatorBreakdown"
            else:
                termination = "NewtonFailure"
            break
        p = accept(a, mu, res, it)
        steps.append(h)
        prev, cur = cur, np.append(a, mu)
        if p.diagnostics.min_denominator <= EPS_DEN:
            termination = "DenominatorBreakdown"
            break
        if p.diagnostics.max_slope >= slope_stop:
            termination = "SlopeBound"
            break
        if it <= 3:
            h = min(1.3 * h, ds_max)
    return Branch(origin, n, tuple(points), termination, tuple(steps), halvings)


@dataclass(frozen=True)
class MonitorVerdict:
    positivity_defect: float
    phi_0: float
    phi_pi: float
    max_slope: float
    below_slope_bound: bool
    in_cone: bool
    mu_interval: tuple = field(default=(math.nan, math.nan))

    @property
    def verdict(self):
        if not self.in_cone:
            return "outside cone"
        return "inside cone" if self.below_slope_bound else "slope bound reached"


def krasovskii_monitor(point, history=(), tol=1e-12):
    """Cone, boundary and slope diagnostics for one point, plus the running mu interval.

    ``point`` is a :class:`BranchPoint` or a bare :class:`SineSeries`;
    ``history`` holds the earlier points of the branch.
    """
    phi = point.phi if isinstance(point, BranchPoint) else point
    _, vals = _profile_on_half(phi)
    defect = float(min(0.0, vals.min()))
    slope = float(np.max(np.abs(vals)))
    mus = [p.mu for p in history if isinstance(p, BranchPoint)]
    if isinstance(point, BranchPoint):
        mus.append(point.mu)
    interval = (min(mus), max(mus)) if mus else (math.nan, math.nan)
    return MonitorVerdict(
        positivity_defect=defect,
        phi_0=float(vals[0]),
        phi_pi=float(vals[-1]),
        max_slope=slope,
        below_slope_bound=slope < SLOPE_LIMIT,
        in_cone=defect >= -tol,
        mu_interval=interval,
    )


def multistart_solutions(problem, mu, starts=16, radius=0.2, seed=0, tol=TOL_NEWTON, max_iter=50):
    """Newton from random small odd starts at fixed ``mu``.

    Starts are drawn uniformly in direction and radius within the ball
    ``||Phi|| <= radius`` (coefficient norm) from a seeded generator.
    Returns the converged coefficient arrays; failed starts are dropped.
    """
    rng = np.random.default_rng(seed)
    N = problem.N
    found = []
    for _ in range(starts):
        d = rng.standard_normal(N)
        d *= radius * rng.uniform() / np.linalg.norm(d)
        try:
            p = newton_solve(problem, d, mu, tol=tol, max_iter=max_iter)
        except NumericalFailure:
            continue
        found.append(p.phi.coeffs.copy())
    return found


@dataclass(frozen=True, eq=False)
class MultistartReport:
    mu: float
    trivial: int
    in_cone: tuple  # nontrivial solutions with Phi >= 0 on [0, pi]
    outside_cone: tuple
    failed: int


def classify_multistart(problem, mu, starts=16, radius=0.2, seed=0, zero_tol=1e-9, cone_tol=1e-12):
    """Multistart Newton at ``mu`` with the converged solutions sorted by cone membership.

    Wave profiles live in the cone of functions nonnegative on ``[0, pi]``;
    a solution of the full equation outside it (for example the negative
    half of a transcritical branch) is reported separately.
    """
    found = multistart_solutions(problem, mu, starts, radius, seed)
    inside, outside, trivial = [], [], 0
    for a in found:
        if np.linalg.norm(a) <= zero_tol:
            trivial += 1
            continue
        defect = krasovskii_monitor(SineSeries(a)).positivity_defect
        (inside if defect >= -cone_tol else outside).append(a)
    return MultistartReport(float(mu), trivial, tuple(inside), tuple(outside), starts - len(found))
