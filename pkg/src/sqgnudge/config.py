"""Experiment configuration: plain key=value files, hypothesis validation,
and reproducible echoing.

The format is deliberately flat and diffable: one ``key = value`` per line,
``#`` starts a comment.  Every run writes a ``config.echo`` containing all
fields (including defaulted ones), so a run is reproducible from its output
directory alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from . import assimilation, observers
from .spectral import WaveGrid


class ConfigError(ValueError):
    """Parse failure or hypothesis violations; ``violations`` lists each one."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


_OPERATORS = ("spectral", "volume", "shifted_volume")
_G_INITS = ("zero", "exact_theta", "random_ball")


@dataclass
class ExperimentConfig:
    """All knobs of a twin experiment; defaults are the reference setup."""

    n: int = 128
    kappa: float = 1.0
    gamma: float = 1.5
    sigma: float = 0.8
    p: float = 8.0
    mu: float = 10.0
    delta: float = 0.01
    dt: float = 0.001
    spinup_t: float = 50.0
    horizon_t: float = 30.0
    operator: str = "spectral"
    cutoff_k: int = 16        # spectral projection: h = 1/K
    squares_m: int = 16       # volume elements: h = 2 pi / m
    forcing_kmin: int = 1
    forcing_kmax: int = 4
    forcing_seed: int = 7
    forcing_level: float = 1.0  # target ||f||_{H^{-gamma/2}} / kappa
    g_init: str = "zero"
    g_init_norm: float = 1.0
    g_init_seed: int = 99
    init_kmax: int = 8
    seed: int = 1
    snapshot_every: int = 0   # steps between snapshots; 0 = off

    @property
    def h(self) -> float:
        if self.operator == "spectral":
            return 1.0 / self.cutoff_k
        return 2.0 * math.pi / self.squares_m

    def make_operator(self, grid: WaveGrid) -> observers.InterpolantOperator:
        if self.operator == "spectral":
            return observers.SpectralProjection(self.cutoff_k, grid)
        pou = observers.build_partition(2.0 * math.pi / self.squares_m, grid)
        if self.operator == "volume":
            return observers.VolumeElements(pou)
        return observers.ShiftedVolumeElements(pou)

    def make_g_init(self):
        if self.g_init == "zero":
            return assimilation.GZero()
        if self.g_init == "exact_theta":
            return assimilation.GExactTheta()
        return assimilation.GRandomBall(self.g_init_seed, self.g_init_norm)

    def validate(self) -> list[str]:
        """Every violated hypothesis/constraint, tagged; empty when valid."""
        v: list[str] = []
        n = self.n
        if n < 8 or (n & (n - 1)) != 0:
            v.append(f"grid violated: n={n} is not a power of two >= 8")
        if self.kappa <= 0:
            v.append(f"kappa violated: kappa={self.kappa} must be positive")
        if not 1.0 < self.gamma < 2.0:
            v.append(f"H1 violated: gamma={self.gamma} not in (1, 2)")
        else:
            if not 2.0 - self.gamma < self.sigma <= self.gamma:
                v.append(f"H2 violated: sigma={self.sigma} not in "
                         f"(2-gamma, gamma]=({2.0 - self.gamma}, {self.gamma}]")
            lo, hi = 1.0 - self.sigma, self.gamma - 1.0
            if self.p < 1 or not lo < 2.0 / self.p < hi:
                v.append(f"H3 violated: 2/p={2.0 / self.p if self.p else math.inf} "
                         f"not in (1-sigma, gamma-1)=({lo}, {hi})")
        if self.operator not in _OPERATORS:
            v.append(f"operator violated: {self.operator!r} not one of {_OPERATORS}")
        else:
            if self.operator == "spectral":
                if not 1 <= self.cutoff_k < n // 2:
                    v.append(f"operator violated: cutoff_k={self.cutoff_k} "
                             f"not in [1, n/2)")
            else:
                if self.squares_m < 3 or n % self.squares_m != 0:
                    v.append(f"operator violated: squares_m={self.squares_m} "
                             f"must be >= 3 and divide n={n}")
            if self.h >= math.pi / 4:
                v.append(f"H7 violated: h={self.h:.6g} >= pi/4")
        if self.dt <= 0:
            v.append(f"dt violated: dt={self.dt} must be positive")
        else:
            ratio = self.delta / self.dt
            if self.delta <= 0 or abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
                v.append(f"delta violated: delta={self.delta} is not a positive "
                         f"integer multiple of dt={self.dt}")
            for name in ("spinup_t", "horizon_t"):
                val = getattr(self, name)
                steps = val / self.dt
                if val < 0 or abs(steps - round(steps)) > 1e-6:
                    v.append(f"{name} violated: {name}={val} must be a "
                             f"nonnegative multiple of dt")
        if self.mu < 0 or not np.isfinite(self.mu):
            v.append(f"mu violated: mu={self.mu} must be finite and >= 0")
        if not 1 <= self.forcing_kmin <= self.forcing_kmax:
            v.append("H4 violated: forcing band needs 1 <= kmin <= kmax")
        elif self.forcing_kmax > n // 3:
            v.append(f"H4 violated: forcing_kmax={self.forcing_kmax} exceeds "
                     f"the dealiased band n/3={n // 3}")
        if self.forcing_level <= 0:
            v.append(f"H4 violated: forcing_level={self.forcing_level} "
                     "must be positive")
        if self.g_init not in _G_INITS:
            v.append(f"g_init violated: {self.g_init!r} not one of {_G_INITS}")
        if self.snapshot_every < 0:
            v.append(f"snapshot_every violated: {self.snapshot_every} < 0")
        return v


def _convert(name: str, kind, raw: str, line_no: int):
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError([f"line {line_no}: cannot parse {name}={raw!r} "
                           f"as {kind.__name__}"]) from None


def parse_text(text: str) -> ExperimentConfig:
    """Parse key=value text; raises :class:`ConfigError` with every problem."""
    known = {f.name: f.type for f in fields(ExperimentConfig)}
    types = {name: (int if t in ("int", int) else float if t in ("float", float)
                    else str) for name, t in known.items()}
    values: dict = {}
    problems: list[str] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            problems.append(f"line {line_no}: expected key=value, got {body!r}")
            continue
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in known:
            problems.append(f"line {line_no}: unknown key {key!r}")
            continue
        if key in values:
            problems.append(f"line {line_no}: duplicate key {key!r}")
            continue
        try:
            values[key] = _convert(key, types[key], raw, line_no)
        except ConfigError as err:
            problems.extend(err.violations)
    if problems:
        raise ConfigError(problems)
    config = ExperimentConfig(**values)
    violations = config.validate()
    if violations:
        raise ConfigError(violations)
    return config


def parse_config(path) -> ExperimentConfig:
    """Load and validate a config file."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_text(fh.read())


def echo_config(config: ExperimentConfig) -> str:
    """Render every field (including defaults) plus derived quantities."""
    lines = [f"{f.name} = {getattr(config, f.name)}" for f in fields(config)]
    lines.append(f"# derived: h = {config.h!r}")
    lines.append(f"# derived: n_delta = {int(round(config.delta / config.dt))}")
    return "\n".join(lines) + "\n"
