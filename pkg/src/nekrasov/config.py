"""Run configuration: JSON file, command-line overrides, validation.

Precedence is flags > file > defaults.  Every field of the resolved
configuration, defaulted tolerances included, is echoed into each result
document.
"""

import contextlib
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .operators import FourierDiagonal, Hammerstein, WaveProblem, krasovskii_problem, nekrasov_problem

__all__ = ["RunConfig", "Tolerances", "load_config", "build_problem", "applied_tolerances"]

PROBLEMS = ("nekrasov", "krasovskii", "hammerstein")
FORMATS = ("csv", "json")


@dataclass(frozen=True)
class Tolerances:
    newton: float = 1e-11
    cluster: float = 1e-8
    singular: float = 1e-8
    orthogonality: float = 1e-10
    denominator: float = 1e-10


@dataclass(frozen=True)
class RunConfig:
    problem: str = "nekrasov"
    depth: float | None = None  # None: infinite depth
    wavelength: float = 1.0
    N: int = 64
    n: int = 1
    order: int = 5
    n_max: int = 4  # rows of the spectrum table
    ds: float = 0.01
    max_steps: int = 200
    profile_points: int = 129  # samples of each wave profile on [0, pi]
    branching_lambda: float = 0.01
    sweep_lambdas: tuple = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
    hammerstein_coeffs: tuple = (0.0, 1.0, 0.0, 1.0)
    seed: int = 0
    tolerances: Tolerances = field(default_factory=Tolerances)
    out: str = "results"
    formats: tuple = FORMATS

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"problem must be one of {PROBLEMS}, got {self.problem!r}")
        for name in ("N", "n", "order", "n_max", "max_steps", "profile_points"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v <= 0:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        positive = ["wavelength", "ds", "branching_lambda"]
        if self.depth is not None:
            positive.append("depth")
        for name in positive:
            _positive(name, getattr(self, name))
        for name, v in asdict(self.tolerances).items():
            _positive(f"tolerances.{name}", v)
        if not self.sweep_lambdas:
            raise ConfigError("sweep_lambdas must not be empty")
        for v in self.sweep_lambdas:
            _positive("sweep_lambdas", v)
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        if self.order > self.N / 4:
            raise ConfigError(f"series order {self.order} exceeds N/4 = {self.N / 4:g}")
        if self.n > self.N or self.n_max > self.N:
            raise ConfigError(f"mode index exceeds the truncation N={self.N}")
        if self.depth is not None and self.problem != "nekrasov":
            raise ConfigError("finite depth applies to the nekrasov problem only")
        if not self.hammerstein_coeffs:
            raise ConfigError("hammerstein_coeffs must not be empty")
        for c in self.hammerstein_coeffs:
            if not math.isfinite(_number("hammerstein_coeffs", c)):
                raise ConfigError("hammerstein_coeffs must be finite")
        if not self.formats or any(f not in FORMATS for f in self.formats):
            raise ConfigError(f"formats must be a non-empty subset of {FORMATS}")

    def to_dict(self):
        d = asdict(self)
        for k in ("sweep_lambdas", "hammerstein_coeffs", "formats"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        kw = dict(data)
        if "tolerances" in kw:
            tol = kw["tolerances"]
            if not isinstance(tol, dict):
                raise ConfigError("tolerances must be an object")
            tknown = {f.name for f in fields(Tolerances)}
            bad = sorted(set(tol) - tknown)
            if bad:
                raise ConfigError(f"unknown tolerance keys: {', '.join(bad)}")
            kw["tolerances"] = Tolerances(**{k: _number(f"tolerances.{k}", v) for k, v in tol.items()})
        for k in ("sweep_lambdas", "hammerstein_coeffs", "formats"):
            if k in kw:
                if not isinstance(kw[k], (list, tuple)):
                    raise ConfigError(f"{k} must be a list")
                kw[k] = tuple(kw[k])
        for k in ("wavelength", "ds", "branching_lambda"):
            if k in kw:
                kw[k] = _number(k, kw[k])
        if kw.get("depth") is not None:
            kw["depth"] = _number("depth", kw["depth"])
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def with_overrides(self, **overrides):
        """Copy with the non-None overrides applied (command-line flags)."""
        kw = {k: v for k, v in overrides.items() if v is not None}
        if not kw:
            return self
        return RunConfig.from_dict({**self.to_dict(), **kw})


def _number(name, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name} must be a number, got {v!r}")
    return float(v)


def _positive(name, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v <= 0:
        raise ConfigError(f"{name} must be a positive finite number, got {v!r}")


def load_config(path=None, **overrides):
    """Defaults, then the JSON file at ``path``, then the overrides."""
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    base = RunConfig.from_dict(data)
    return base.with_overrides(**overrides)


def build_problem(cfg):
    if cfg.problem == "nekrasov":
        return nekrasov_problem(N=cfg.N, depth=cfg.depth, wavelength=cfg.wavelength)
    if cfg.problem == "krasovskii":
        return krasovskii_problem(N=cfg.N)
    kernel = FourierDiagonal(tuple(float(k) for k in np.arange(1, cfg.N + 1)))
    return WaveProblem(kernel, Hammerstein(tuple(cfg.hammerstein_coeffs)), mu=1.0, N=cfg.N)


@contextlib.contextmanager
def applied_tolerances(tol):
    """Temporarily install the configured thresholds in the solver modules.

    The Newton tolerance is passed explicitly by the callers instead.
    """
    from . import linear, operators

    saved = (linear.TAU_CLUSTER, linear.TAU_SING, linear.TAU_ORTH, operators.DENOMINATOR_GUARD)
    linear.TAU_CLUSTER = tol.cluster
    linear.TAU_SING = tol.singular
    linear.TAU_ORTH = tol.orthogonality
    operators.DENOMINATOR_GUARD = tol.denominator
    try:
        yield
    finally:
        linear.TAU_CLUSTER, linear.TAU_SING, linear.TAU_ORTH, operators.DENOMINATOR_GUARD = saved
