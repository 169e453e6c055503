"""Command-line front end.

    nekrasov spectrum  [--config cfg.json] [--out DIR] ...
    nekrasov series    --order 5
    nekrasov branching
    nekrasov continue  --steps 200
    nekrasov verify

Exit codes: 0 success, 1 numerical failure (or a failed check), 2
configuration error.  Configuration errors are detected before anything
is written.
"""

import argparse
import math
import sys

import numpy as np

from .config import applied_tolerances, build_problem, load_config
from .continuation import continue_branch, krasovskii_monitor
from .errors import ConfigError, WaveError
from .io import ResultDocument, write_outputs
from .linear import char_values
from .operators import LogDifference, linearize
from .series import branching_roots, equivalence_check, nekrasov_nazarov_series, residual_sweep
from .verify import PerturbedKernel, run_checks

__all__ = ["main", "cmd_spectrum", "cmd_series", "cmd_branching", "cmd_continue", "cmd_verify", "build_parser"]


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def _document(command, cfg, payload):
    return ResultDocument(command=command, config=_clean(cfg.to_dict()), payload=_clean(payload))


def cmd_spectrum(cfg):
    problem = build_problem(cfg)
    cvs = char_values(linearize(problem).B, cfg.n_max)
    rows = [(i + 1, cv.mu, cv.multiplicity, int(cv.guaranteed)) for i, cv in enumerate(cvs)]
    payload = {
        "spectrum": [
            {"n": n, "mu": mu, "multiplicity": m, "guaranteed": bool(g)} for n, mu, m, g in rows
        ]
    }
    tables = {"spectrum": (["n", "mu", "multiplicity", "bifurcation_guaranteed"], rows)}
    return _document("spectrum", cfg, payload), tables, 0


def cmd_series(cfg):
    problem = build_problem(cfg)
    br = nekrasov_nazarov_series(problem, cfg.n, cfg.order, dtype=np.longdouble)
    lambdas = np.array(cfg.sweep_lambdas) * br.sigma
    lams, res, slope = residual_sweep(br, lambdas)
    terms = [t.coeffs for t in br.terms]
    payload = {
        "mu_star": br.mu_star,
        "mode": br.mode,
        "lag": br.lag,
        "sigma": br.sigma,
        "constants": list(br.constants),
        "terms": [list(t) for t in terms],
        "residual_sweep": [{"lambda": l, "residual": r} for l, r in zip(lams, res)],
        "slope": slope,
    }
    tables = {
        "series_terms": (
            ["order", "mode", "coefficient"],
            [(k + 1, j + 1, c) for k, t in enumerate(terms) for j, c in enumerate(t)],
        ),
        "series_constants": (["order", "constant"], [(k + 1, c) for k, c in enumerate(br.constants)]),
        "residual_sweep": (["lambda", "residual"], list(zip(lams, res))),
    }
    return _document("series", cfg, payload), tables, 0


def cmd_branching(cfg):
    problem = build_problem(cfg)
    br = nekrasov_nazarov_series(problem, cfg.n, min(cfg.order, 4))
    lam = cfg.branching_lambda
    rows = []
    for signed in (-lam, lam):
        for alpha in branching_roots(problem, cfg.n, signed, br.mu_star):
            rows.append((signed, alpha))
    equivalence = None
    eq_rows = []
    if br.lag == 1:
        rep = equivalence_check(problem, cfg.n, min(cfg.order, 4), branch=br)
        equivalence = {
            "series": list(rep.series_coefficients),
            "fitted": list(rep.fitted_coefficients),
            "discrepancy": list(rep.discrepancies),
            "max_discrepancy": rep.max_discrepancy,
            "condition": rep.condition,
            "root_curve": [{"lambda": l, "alpha": a} for l, a in zip(rep.lambdas, rep.roots)],
        }
        eq_rows = [
            (k + 1, s, f, d)
            for k, (s, f, d) in enumerate(zip(rep.series_coefficients, rep.fitted_coefficients, rep.discrepancies))
        ]
    payload = {
        "mu_star": br.mu_star,
        "lag": br.lag,
        "roots": [{"lambda": l, "alpha": a} for l, a in rows],
        "equivalence": equivalence,
    }
    tables = {"branching_roots": (["lambda", "alpha"], rows)}
    if eq_rows:
        tables["equivalence"] = (["order", "series", "fitted", "relative_discrepancy"], eq_rows)
    return _document("branching", cfg, payload), tables, 0


BRANCH_COLUMNS = [
    "step",
    "mu",
    "amplitude",
    "max_slope",
    "min_denominator",
    "positivity_defect",
    "residual",
    "newton_iters",
]


def cmd_continue(cfg):
    problem = build_problem(cfg)
    branch = continue_branch(problem, cfg.n, cfg.ds, cfg.max_steps, tol=cfg.tolerances.newton)
    rows = []
    for k, p in enumerate(branch.points):
        d = p.diagnostics
        rows.append(
            (k, p.mu, p.amplitude, d.max_slope, d.min_denominator, d.positivity_defect, p.residual, d.newton_iters)
        )
    theta = np.linspace(0.0, math.pi, cfg.profile_points)
    profiles = []
    for k, p in enumerate(branch.points):
        vals = p.phi(theta)
        vals[0] = vals[-1] = 0.0
        profiles.extend((k, t, v) for t, v in zip(theta, vals))
    monitor = krasovskii_monitor(branch.points[-1], branch.points[:-1]) if branch.points else None
    payload = {
        "termination": branch.termination,
        "origin_mu": branch.origin.mu,
        "halvings": branch.halvings,
        "mu_interval": list(monitor.mu_interval) if monitor else None,
        "branch": [dict(zip(BRANCH_COLUMNS, r)) for r in rows],
    }
    tables = {
        "branch": (BRANCH_COLUMNS, rows),
        "profiles": (["step", "theta", "phi"], profiles),
    }
    code = 0 if branch.points else 1
    return _document("continue", cfg, payload), tables, code


def cmd_verify(cfg, kernel=None):
    checks = run_checks(cfg, kernel)
    passed = all(c.passed for c in checks)
    payload = {"checks": [c.to_dict() for c in checks], "passed": passed}
    rows = [(c.name, int(c.passed), c.measured, c.threshold, c.detail) for c in checks]
    tables = {"verify": (["check", "passed", "measured", "threshold", "detail"], rows)}
    return _document("verify", cfg, payload), tables, 0 if passed else 1


COMMANDS = {
    "spectrum": cmd_spectrum,
    "series": cmd_series,
    "branching": cmd_branching,
    "continue": cmd_continue,
    "verify": cmd_verify,
}


def _formats(text):
    return tuple(f.strip() for f in text.split(",") if f.strip())


def build_parser():
    parser = argparse.ArgumentParser(prog="nekrasov", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--problem", choices=["nekrasov", "krasovskii", "hammerstein"])
    parser.add_argument("--N", type=int, dest="N", help="number of sine modes")
    parser.add_argument("--n", type=int, help="bifurcation mode index")
    parser.add_argument("--n-max", type=int, dest="n_max", help="rows of the spectrum table")
    parser.add_argument("--order", type=int, help="series order K")
    parser.add_argument("--depth", type=float, help="fluid depth h (finite-depth kernel)")
    parser.add_argument("--wavelength", type=float, help="wavelength L")
    parser.add_argument("--steps", type=int, dest="max_steps", help="continuation steps")
    parser.add_argument("--ds", type=float, help="initial arclength step")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--format", type=_formats, dest="formats", help="comma list of csv,json")
    parser.add_argument("--inject-kernel-fault", action="store_true", help=argparse.SUPPRESS)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    overrides = {
        k: getattr(args, k)
        for k in ("out", "problem", "N", "n", "n_max", "order", "depth", "wavelength", "max_steps", "ds", "seed",
                  "formats")
    }
    try:
        cfg = load_config(args.config, **overrides)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        with applied_tolerances(cfg.tolerances):
            if args.command == "verify":
                kernel = PerturbedKernel(LogDifference()) if args.inject_kernel_fault else None
                doc, tables, code = cmd_verify(cfg, kernel)
            else:
                doc, tables, code = COMMANDS[args.command](cfg)
    except WaveError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for path in write_outputs(doc, cfg.out, tables, cfg.formats):
        print(path)
    return code


if __name__ == "__main__":
    sys.exit(main())
