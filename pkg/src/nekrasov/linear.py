"""Characteristic values of the linearization, Fredholm solves, bifurcation detection.

A characteristic value is a ``mu`` for which ``phi = mu B phi`` has a
nontrivial solution, i.e. the reciprocal of a positive eigenvalue of
``B``.  Every characteristic value of odd multiplicity is a bifurcation
point of the nonlinear problem; even multiplicity gives no guarantee and
is reported as a candidate only.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import IncompatibleSingularSystem, NonConvergence
from .operators import linearize
from .spectral import SineSeries

__all__ = [
    "CharValue",
    "char_values",
    "fredholm_solve",
    "detect_bifurcations",
    "TAU_CLUSTER",
    "TAU_SING",
    "TAU_ORTH",
]

TAU_CLUSTER = 1e-8  # relative to mu*
TAU_SING = 1e-8
TAU_ORTH = 1e-10


@dataclass(frozen=True, eq=False)
class CharValue:
    mu: float
    multiplicity: int
    eigenfunctions: tuple  # orthonormal SineSeries

    @property
    def guaranteed(self):
        """Odd multiplicity guarantees a bifurcation point."""
        return self.multiplicity % 2 == 1

    @property
    def status(self):
        return "guaranteed" if self.guaranteed else "candidate, not guaranteed"


def _is_diagonal(B):
    return np.count_nonzero(B - np.diag(np.diagonal(B))) == 0


def _eigen(B):
    """Eigenvalues (real parts of the real spectrum) and eigenvectors of B."""
    try:
        if _is_diagonal(B):
            vals = np.diagonal(B).astype(float)
            return vals, np.eye(B.shape[0])
        if np.allclose(B, B.T, rtol=0, atol=1e-14 * max(1.0, np.abs(B).max())):
            return scipy.linalg.eigh(B, driver="evr")
        vals, vecs = scipy.linalg.eig(B)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NonConvergence(f"dense eigensolver failed (LAPACK iteration budget exhausted): {exc}") from exc
    real = np.abs(vals.imag) <= 1e-12 * np.maximum(1.0, np.abs(vals))
    return vals.real[real], vecs.real[:, real]


def char_values(B, n_max=None):
    """The ``n_max`` smallest positive characteristic values of ``B``, clustered by multiplicity."""
    B = np.asarray(B, dtype=float)
    N = B.shape[0]
    if n_max is not None and n_max > N:
        raise ValueError(f"only {N} characteristic values exist at truncation N={N}")
    vals, vecs = _eigen(B)
    pos = vals > 0
    mus = 1.0 / vals[pos]
    vecs = vecs[:, pos]
    order = np.argsort(mus, kind="stable")
    mus, vecs = mus[order], vecs[:, order]

    out = []
    i = 0
    while i < mus.size and (n_max is None or len(out) < n_max):
        j = i + 1
        while j < mus.size and mus[j] - mus[i] <= TAU_CLUSTER * mus[i]:
            j += 1
        basis, _ = np.linalg.qr(vecs[:, i:j])
        # sign convention: largest entry of each basis vector positive
        for col in range(basis.shape[1]):
            if basis[np.argmax(np.abs(basis[:, col])), col] < 0:
                basis[:, col] *= -1
        mu_star = float(mus[i]) if j - i == 1 else float(np.mean(mus[i:j]))
        out.append(CharValue(mu_star, j - i, tuple(SineSeries(basis[:, c]) for c in range(j - i))))
        i = j
    return out


def _left_right_null(L, tol):
    U, sv, Vt = np.linalg.svd(L)
    scale = max(1.0, sv[0])
    small = sv <= tol * scale
    return U, sv, Vt, small


def _diagonal_solve(d, mu, b):
    # Exact elementwise path; keeps the dtype of b (extended precision in the series).
    dt = np.result_type(b.dtype, d.dtype)
    b = b.astype(dt)
    L = 1 - dt.type(mu) * d.astype(dt)
    small = np.abs(L) <= TAU_SING * max(1.0, float(np.abs(L).max()))
    if small.any():
        size = float(np.linalg.norm(b[small].astype(float)))
        if size > TAU_ORTH * max(1.0, float(np.linalg.norm(b.astype(float)))):
            raise IncompatibleSingularSystem(size)
    x = np.zeros_like(b)
    x[~small] = b[~small] / L[~small]
    return x


def fredholm_solve(B, mu, rhs):
    """Solve ``(I - mu B) x = rhs``.

    At a characteristic value the system is solvable only if ``rhs`` has no
    component along the left null space; the minimal-norm solution (no
    component along the eigenspace) is returned.
    """
    B = np.asarray(B)
    b = rhs.coeffs if isinstance(rhs, SineSeries) else np.asarray(rhs)
    if _is_diagonal(B):
        x = _diagonal_solve(np.diagonal(B), mu, b)
        return SineSeries(x) if isinstance(rhs, SineSeries) else x
    B = B.astype(float)
    b = np.asarray(b, float)
    N = B.shape[0]
    L = np.eye(N) - mu * B
    U, sv, Vt, small = _left_right_null(L, TAU_SING)
    if not small.any():
        x = np.linalg.solve(L, b)
    else:
        proj = U[:, small].T @ b
        size = float(np.linalg.norm(proj))
        if size > TAU_ORTH * max(1.0, float(np.linalg.norm(b))):
            raise IncompatibleSingularSystem(size)
        keep = ~small
        x = Vt[keep].T @ ((U[:, keep].T @ b) / sv[keep])
    return SineSeries(x) if isinstance(rhs, SineSeries) else x


def detect_bifurcations(problem_or_B, mu_range, steps=64):
    """Characteristic values inside ``mu_range`` with bifurcation guarantees.

    The scan counts how many eigenvalues of ``I - mu B`` change sign across
    each scan cell; the crossing count must equal the multiplicity of the
    characteristic values found there, and its parity decides whether the
    determinant changes sign (odd multiplicity, guaranteed bifurcation).
    """
    lo, hi = mu_range
    if not (0 <= lo < hi):
        raise ValueError("mu_range must be positive and increasing")
    if steps < 2:
        raise ValueError("need at least two scan steps")
    B = linearize(problem_or_B).B if not isinstance(problem_or_B, np.ndarray) else problem_or_B
    vals, _ = _eigen(np.asarray(B, float))
    found = [cv for cv in char_values(B) if lo < cv.mu < hi]

    grid = np.linspace(lo, hi, steps + 1)
    sign = 1.0 - np.multiply.outer(grid, vals) < 0  # [scan point, eigenvalue]
    crossed = np.zeros(len(found), dtype=int)
    for k in range(steps):
        for lam in vals[~sign[k] & sign[k + 1]]:
            mu = 1.0 / lam
            hits = [i for i, cv in enumerate(found) if abs(cv.mu - mu) <= 2 * TAU_CLUSTER * cv.mu]
            if not hits:
                # crossing exactly at the range boundary
                if min(abs(mu - lo), abs(mu - hi)) <= TAU_CLUSTER * mu:
                    continue
                raise NonConvergence(f"eigenvalue crossing at mu={mu:.12g} matches no characteristic value")
            crossed[hits[0]] += 1
    for cv, count in zip(found, crossed):
        if count != cv.multiplicity:
            raise NonConvergence(
                f"crossing count {count} disagrees with multiplicity {cv.multiplicity} at mu={cv.mu:.12g}"
            )
    return found
