import math

import numpy as np
import pytest

from nekrasov.continuation import (
    SLOPE_LIMIT,
    classify_multistart,
    continue_branch,
    krasovskii_monitor,
    multistart_solutions,
    newton_solve,
    refine_extended,
    solve_at_amplitude,
)
from nekrasov.errors import DenominatorVanished, NewtonDiverged
from nekrasov.operators import FourierDiagonal, Hammerstein, WaveProblem, krasovskii_problem, residual_coeffs
from nekrasov.series import nekrasov_nazarov_series
from nekrasov.spectral import SineSeries


@pytest.fixture(scope="module")
def deep_branch(deep):
    return continue_branch(deep, 1, 0.01, 200)


@pytest.fixture(scope="module")
def kras_branch():
    return continue_branch(krasovskii_problem(N=128), 1, 0.01, 400)


def test_trivial_solution(deep):
    p = newton_solve(deep, SineSeries.zeros(deep.N), 2.0)
    assert p.diagnostics.newton_iters <= 2
    assert p.phi.norm() == 0.0


def test_newton_from_perturbed_start_returns_to_zero(deep):
    a = np.zeros(deep.N)
    a[:3] = [1e-3, -2e-4, 1e-4]
    p = newton_solve(deep, a, 2.0)
    assert p.phi.norm() <= 1e-12 and p.residual <= 1e-11


def test_denominator_vanished_start(deep):
    a = np.zeros(deep.N)
    a[0] = -1.2
    with pytest.raises(DenominatorVanished):
        newton_solve(deep, a, 3.0)


def test_newton_budget(deep):
    a = np.zeros(deep.N)
    a[0] = 0.2
    with pytest.raises(NewtonDiverged) as exc:
        newton_solve(deep, a, 3.5, max_iter=1)
    assert exc.value.iterations == 1


def test_refine_extended_lowers_residual(deep):
    p = newton_solve(deep, nekrasov_nazarov_series(deep, 1, 3)(0.05), 3.05)
    a = refine_extended(deep, p.phi, np.longdouble(3.05))
    r = residual_coeffs(deep, a, np.longdouble(3.05), dtype=np.longdouble)
    assert float(np.sqrt(np.sum(r * r))) <= 1e-17


def test_branch_invariants(deep_branch):
    b = deep_branch
    assert b.termination == "StepBudget" and len(b.points) == 200
    assert all(p.residual <= 1e-10 for p in b.points)
    assert all(p.diagnostics.min_denominator > 1e-10 for p in b.points)
    assert abs(b.points[0].mu - 3.0) <= 10 * 0.01
    assert np.all(np.diff(b.amplitudes) > 0)
    assert b.points[0].amplitude > 0


def test_branch_steps_respect_arclength(deep_branch):
    b = deep_branch
    x = np.array([np.append(p.phi.coeffs, p.mu) for p in b.points])
    dist = np.linalg.norm(np.diff(x, axis=0), axis=1)
    steps = np.array(b.step_sizes[1:])
    assert np.all(dist >= steps * (1 - 1e-9))
    assert np.all(dist <= 1.1 * steps)


def test_mu_tends_to_characteristic_value(deep):
    br = nekrasov_nazarov_series(deep, 1, 4)
    gaps = []
    for alpha in (1e-2, 3e-3, 1e-3):
        t = alpha / br.constants[0]
        p = solve_at_amplitude(deep, alpha, br.coeffs_at_t(t), br.mu(t))
        assert p.amplitude == pytest.approx(alpha, abs=1e-15)
        gaps.append(abs(p.mu - 3.0))
    assert gaps[0] > gaps[1] > gaps[2]


@pytest.mark.parametrize("ds", [0.5, 1.0])
def test_step_halving_on_large_ds(ds):
    b = continue_branch(krasovskii_problem(N=64), 1, ds, 50)
    assert b.halvings > 0
    assert b.points and b.step_sizes[0] < ds
    assert all(p.residual <= 1e-10 for p in b.points)
    assert all(p.diagnostics.max_slope < SLOPE_LIMIT for p in b.points)


def test_cubic_hammerstein_branch():
    p = WaveProblem(FourierDiagonal(tuple(float(n) for n in range(1, 17))), Hammerstein((0, 1, 0, 1)), N=16)
    b = continue_branch(p, 1, 0.02, 20)
    for q in b.points:
        # exact one-mode solution: mu = 1 / (1 + 3 a^2 / 4) with all higher modes driven by sin 3 theta
        assert q.mu < 1.0
    assert b.points[-1].amplitude > b.points[0].amplitude


def test_krasovskii_branch_monitors(kras_branch):
    b = kras_branch
    assert b.termination == "SlopeBound"
    last = b.points[-1].diagnostics.max_slope
    assert SLOPE_LIMIT - 0.01 <= last < SLOPE_LIMIT
    for k, p in enumerate(b.points):
        m = krasovskii_monitor(p, b.points[:k])
        assert m.positivity_defect >= -1e-12
        assert m.phi_0 == 0.0 and m.phi_pi == 0.0
    lo, hi = krasovskii_monitor(b.points[-1], b.points[:-1]).mu_interval
    assert 0 < lo < hi <= 1.0


def test_monitor_examples():
    m = krasovskii_monitor(SineSeries([0.1, 0.0]))
    assert m.positivity_defect == 0.0 and m.phi_0 == 0.0 and m.phi_pi == 0.0
    assert m.max_slope == pytest.approx(0.1, abs=1e-12)
    assert m.verdict == "inside cone"
    m2 = krasovskii_monitor(SineSeries([0.0, 0.1]))
    assert m2.positivity_defect == pytest.approx(-0.1, abs=1e-3)
    assert m2.verdict == "outside cone"


@pytest.mark.parametrize("mu", [2.95, 3.02, 3.05])
def test_near_origin_uniqueness(deep, mu):
    """Multistart Newton converges only to the trivial solution or the branch solution."""
    br = nekrasov_nazarov_series(deep, 1, 5)
    branch_sol = newton_solve(deep, br(mu - 3.0), mu).phi.coeffs
    found = multistart_solutions(deep, mu, starts=16, radius=0.2, seed=7)
    assert found
    for a in found:
        dists = [np.linalg.norm(a), np.linalg.norm(a - branch_sol), np.linalg.norm(a + branch_sol)]
        assert min(dists) <= 1e-8


def test_multistart_is_deterministic(deep):
    a = multistart_solutions(deep, 2.9, starts=4, seed=3)
    b = multistart_solutions(deep, 2.9, starts=4, seed=3)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


def test_no_waves_in_cone_below_first_value(deep):
    for mu in (0.5, 1.5, 2.5, 2.9):
        rep = classify_multistart(deep, mu)
        assert rep.in_cone == ()
