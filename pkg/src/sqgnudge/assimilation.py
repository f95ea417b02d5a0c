"""Nudged twin experiments with observations blurred by a delayed moving
time average.

The observable fed back into the assimilated solution eta is

    (J_h^delta phi)(t) = (1/delta) int_{t-2 delta}^{t-delta} (J_h phi)(s) ds,

a moving average over a window that ends delta in the past, so the feedback
is causal and can be treated as a time-dependent force.  Snapshots of J_h are
pushed to a ring buffer every time step; delta must be an integer multiple of
dt so the window endpoints land on stored samples and the composite trapezoid
rule is unambiguous.

The twin driver advances the reference solution theta and the nudged solution
eta side by side, freezing the feedback -mu (J_h^delta eta - J_h^delta theta)
over each step.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .diagnostics import ErrorSeries
from .dynamics import (
    BlowUpError,
    SqgParams,
    StepperState,
    ThetaStats,
    imex_step,
    make_forcing,
    spin_up,
    sqg_rhs,
)
from .observers import HypothesisViolationError, InterpolantOperator
from .spectral import (
    FourierField,
    random_band_limited,
    sobolev_norm,
    to_physical,
    wave_grid,
    write_snapshot,
    zero_field,
)


class IncompleteWindowError(RuntimeError):
    """The averaging window [t - 2 delta, t - delta] is not fully buffered."""

    def __init__(self, t: float, detail: str = ""):
        self.t = t
        super().__init__(f"incomplete observation window at t={t:.6g}"
                         + (f": {detail}" if detail else ""))


class ObservationBuffer:
    """Ring of J_h snapshots at step granularity, keyed by integer step index.

    Stores the operator's compact encodings rather than full fields; the
    moving average is linear, so it is taken on the encodings and decoded
    once per query.  A sliding window sum makes consecutive queries O(1);
    it is recomputed from scratch periodically to shed roundoff drift.
    """

    _RESYNC_EVERY = 4096

    def __init__(self, operator: InterpolantOperator, dt: float):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.operator = operator
        self.dt = dt
        self._entries: deque[np.ndarray] = deque()
        self._first_step = 0
        self._cache: tuple[int, int] | None = None
        self._cache_sum: np.ndarray | None = None
        self._slides = 0

    def __len__(self):
        return len(self._entries)

    @property
    def first_step(self) -> int:
        return self._first_step

    @property
    def last_step(self) -> int:
        return self._first_step + len(self._entries) - 1

    def push_field(self, step: int, field: FourierField) -> None:
        self.push(step, self.operator.observe(field))

    def push(self, step: int, vec: np.ndarray) -> None:
        if self._entries and step != self.last_step + 1:
            raise ValueError(
                f"snapshots must arrive at consecutive steps; expected "
                f"{self.last_step + 1}, got {step}")
        if not self._entries:
            self._first_step = step
        self._entries.append(vec)

    def evict_before(self, min_step: int) -> None:
        while self._entries and self._first_step < min_step:
            self._entries.popleft()
            self._first_step += 1
            if self._cache is not None and self._cache[0] < self._first_step:
                self._cache = None
                self._cache_sum = None

    def _vec(self, step: int) -> np.ndarray:
        return self._entries[step - self._first_step]

    def _plain_sum(self, lo: int, hi: int) -> np.ndarray:
        total = self._vec(lo).astype(self._vec(lo).dtype, copy=True)
        for s in range(lo + 1, hi + 1):
            total += self._vec(s)
        return total

    def window_sum(self, lo: int, hi: int) -> np.ndarray:
        if not self._entries or lo < self._first_step or hi > self.last_step:
            have = (f"steps [{self._first_step}, {self.last_step}]"
                    if self._entries else "no entries")
            raise IncompleteWindowError(hi * self.dt,
                                        f"need steps [{lo}, {hi}], have {have}")
        if self._cache == (lo, hi):
            pass
        elif self._cache == (lo - 1, hi - 1):
            self._cache_sum = self._cache_sum + self._vec(hi) - self._vec(lo - 1)
            self._cache = (lo, hi)
            self._slides += 1
            if self._slides % self._RESYNC_EVERY == 0:
                self._cache_sum = self._plain_sum(lo, hi)
        else:
            self._cache_sum = self._plain_sum(lo, hi)
            self._cache = (lo, hi)
        return self._cache_sum

    def window_average_vec(self, step: int, n_delta: int) -> np.ndarray:
        """Trapezoid average of the encodings over [t - 2 delta, t - delta]."""
        lo, hi = step - 2 * n_delta, step - n_delta
        total = self.window_sum(lo, hi)
        return (total - 0.5 * (self._vec(lo) + self._vec(hi))) / n_delta


def time_averaged_observe(buffer: ObservationBuffer, t: float,
                          delta: float) -> FourierField:
    """Delayed moving average (1/delta) int_{t-2delta}^{t-delta} J_h phi ds.

    Composite trapezoid over the stored snapshots; exact for data linear in
    time.  Raises :class:`IncompleteWindowError` if the window is not fully
    covered (an initialization bug).  Causality: only snapshots with
    timestamps <= t - delta are read.
    """
    step = int(round(t / buffer.dt))
    n_delta = int(round(delta / buffer.dt))
    if n_delta < 1 or abs(n_delta * buffer.dt - delta) > 1e-9 * delta:
        raise ValueError(f"delta={delta} is not a positive multiple of dt={buffer.dt}")
    assert (step - n_delta) * buffer.dt <= t - delta + 1e-9  # causality
    return buffer.operator.reconstruct(buffer.window_average_vec(step, n_delta))


def centered_window_average(buffer: ObservationBuffer, t: float,
                            delta: float) -> FourierField:
    """Acausal centered average over [t - delta/2, t + delta/2].

    Documented negative control only: it needs snapshots from the future, so
    it cannot be evaluated by a live experiment and is never used in the
    feedback.
    """
    n_half = int(round(0.5 * delta / buffer.dt))
    step = int(round(t / buffer.dt))
    lo, hi = step - n_half, step + n_half
    total = buffer.window_sum(lo, hi)
    avg = (total - 0.5 * (buffer._vec(lo) + buffer._vec(hi))) / (2 * n_half)
    return buffer.operator.reconstruct(avg)


# -- nudged dynamics -------------------------------------------------------------

@dataclass(frozen=True)
class GZero:
    """eta history identically zero on (-2 delta, 0]."""


@dataclass(frozen=True)
class GExactTheta:
    """eta history copies theta; feedback cancels identically."""


@dataclass(frozen=True)
class GRandomBall:
    """eta history from an independent trajectory scaled to a target L2 norm."""

    seed: int
    norm: float


GInit = GZero | GExactTheta | GRandomBall


@dataclass(frozen=True)
class NudgeParams:
    mu: float
    delta: float
    operator: InterpolantOperator
    g_init: GInit

    def __post_init__(self):
        if not np.isfinite(self.mu) or self.mu < 0:
            raise ValueError(f"mu must be finite and >= 0, got {self.mu}")
        if not np.isfinite(self.delta) or self.delta <= 0:
            raise ValueError(f"delta must be finite and positive, got {self.delta}")

    def n_delta(self, dt: float) -> int:
        n = int(round(self.delta / dt))
        if n < 1 or abs(n * dt - self.delta) > 1e-9 * self.delta:
            raise ValueError(
                f"delta={self.delta} is not an integer multiple of dt={dt}")
        return n


def nudged_rhs(eta: FourierField, params: SqgParams, nudge: NudgeParams,
               obs_eta: FourierField, obs_theta: FourierField) -> FourierField:
    """f - kappa Lambda^gamma eta - v . grad eta - mu (J^delta eta - J^delta theta)."""
    return sqg_rhs(eta, params) - nudge.mu * (obs_eta - obs_theta)


@dataclass(frozen=True)
class TwinState:
    """Coupled reference/assimilated state with both observation buffers."""

    theta: FourierField
    eta: FourierField
    step: int
    dt: float
    n_delta: int
    buf_theta: ObservationBuffer
    buf_eta: ObservationBuffer

    @property
    def t(self) -> float:
        return self.step * self.dt

    @property
    def k(self) -> int:
        """Interval index: t in I_k = (k delta, (k+1) delta]."""
        return -((-self.step) // self.n_delta) - 1


def initialize_twin(theta_start: FourierField, params: SqgParams,
                    nudge: NudgeParams, dt: float) -> TwinState:
    """Run the averaging warm-up from t = -2 delta to t = 0.

    theta evolves freely while its J_h snapshots are recorded; the eta buffer
    is filled according to the history initializer g.  Returns the state at
    t = 0 (step 0) with both windows complete.
    """
    n_delta = nudge.n_delta(dt)
    op = nudge.operator
    grid = theta_start.grid
    buf_theta = ObservationBuffer(op, dt)
    buf_eta = ObservationBuffer(op, dt)

    g = nudge.g_init
    if isinstance(g, GZero):
        eta_state = None
        zero_vec = op.observe(zero_field(grid))
    elif isinstance(g, GExactTheta):
        eta_state = None
        zero_vec = None
    elif isinstance(g, GRandomBall):
        rng = np.random.default_rng(np.random.SeedSequence([g.seed, 0xBA11]))
        eta0 = random_band_limited(grid, kmax=8, rng=rng, norm=g.norm)
        eta_state = StepperState(eta0, -2 * n_delta * dt, dt)
        zero_vec = None
    else:
        raise TypeError(f"unknown g_init {g!r}")

    theta_state = StepperState(theta_start, -2 * n_delta * dt, dt)
    for step in range(-2 * n_delta, 1):
        if step > -2 * n_delta:
            theta_state = imex_step(theta_state, params)
            if eta_state is not None:
                eta_state = imex_step(eta_state, params)
        vec = op.observe(theta_state.theta)
        buf_theta.push(step, vec)
        if isinstance(g, GExactTheta):
            buf_eta.push(step, vec)
        elif isinstance(g, GZero):
            buf_eta.push(step, zero_vec)
        else:
            buf_eta.push(step, op.observe(eta_state.theta))

    if isinstance(g, GExactTheta):
        eta0 = theta_state.theta
    elif isinstance(g, GZero):
        eta0 = zero_field(grid)
    else:
        eta0 = eta_state.theta
    return TwinState(theta_state.theta, eta0, 0, dt, n_delta, buf_theta, buf_eta)


def twin_step(state: TwinState, params: SqgParams, nudge: NudgeParams) -> TwinState:
    """Advance both solutions one step with the feedback frozen at step start."""
    op = nudge.operator
    s = state.step
    avg_theta = state.buf_theta.window_average_vec(s, state.n_delta)
    avg_eta = state.buf_eta.window_average_vec(s, state.n_delta)
    feedback = (-nudge.mu) * op.reconstruct(avg_eta - avg_theta)

    try:
        theta_next = imex_step(StepperState(state.theta, state.t, state.dt), params)
    except BlowUpError as err:
        raise BlowUpError(err.time, err.max_abs, which="theta") from None
    try:
        eta_next = imex_step(StepperState(state.eta, state.t, state.dt), params,
                             extra_rhs=feedback)
    except BlowUpError as err:
        raise BlowUpError(err.time, err.max_abs, which="eta") from None

    state.buf_theta.push(s + 1, op.observe(theta_next.theta))
    state.buf_eta.push(s + 1, op.observe(eta_next.theta))
    min_step = (s + 1) - 2 * state.n_delta - 1
    state.buf_theta.evict_before(min_step)
    state.buf_eta.evict_before(min_step)

    return TwinState(theta_next.theta, eta_next.theta, s + 1, state.dt,
                     state.n_delta, state.buf_theta, state.buf_eta)


# -- experiment driver --------------------------------------------------------------

@dataclass(frozen=True)
class ReferenceRun:
    """Spun-up reference state plus its empirical norm suprema."""

    theta: FourierField
    stats: ThetaStats
    params: SqgParams


def prepare_reference(config) -> ReferenceRun:
    """Build forcing and initial data from the config and run the spin-up."""
    grid = wave_grid(config.n)
    forcing = make_forcing(grid, gamma=config.gamma, kappa=config.kappa,
                           seed=config.forcing_seed, kmin=config.forcing_kmin,
                           kmax=config.forcing_kmax, level=config.forcing_level)
    params = SqgParams(config.kappa, config.gamma, forcing)
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0x1C]))
    theta0 = random_band_limited(grid, kmax=config.init_kmax, rng=rng,
                                 norm=config.forcing_level)
    theta, stats = spin_up(theta0, params, config.spinup_t, config.dt,
                           sigma=config.sigma, p=config.p)
    return ReferenceRun(theta, stats, params)


def run_experiment(config, out_dir=None,
                   reference: ReferenceRun | None = None) -> ErrorSeries:
    """Full twin experiment; returns the per-step error series.

    Writes ``series.csv`` (and snapshots, if configured) under ``out_dir``
    when given; on blow-up the partial series is still written before the
    error propagates.  Deterministic: the same config and seed produce
    byte-identical output.
    """
    if reference is None:
        reference = prepare_reference(config)
    params = reference.params
    grid = reference.theta.grid
    operator = config.make_operator(grid)
    nudge = NudgeParams(config.mu, config.delta, operator,
                        config.make_g_init())

    state = initialize_twin(reference.theta, params, nudge, config.dt)
    n_steps = int(round(config.horizon_t / config.dt))
    if abs(n_steps * config.dt - config.horizon_t) > 1e-9:
        raise ValueError("horizon_t must be a multiple of dt")

    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)

    def record(rows, st):
        zeta = st.eta - st.theta
        rows.append((st.t, st.k,
                     sobolev_norm(zeta, 0.0),
                     sobolev_norm(zeta, config.sigma),
                     sobolev_norm(zeta, -0.5),
                     sobolev_norm(st.theta, 0.0),
                     sobolev_norm(st.eta, 0.0)))

    def snapshot(st):
        if out_path is None or config.snapshot_every <= 0:
            return
        if st.step % config.snapshot_every == 0 or st.step == n_steps:
            write_snapshot(out_path / f"theta_{st.t:08.3f}.sqgf",
                           to_physical(st.theta), st.t)
            write_snapshot(out_path / f"eta_{st.t:08.3f}.sqgf",
                           to_physical(st.eta), st.t)

    rows: list[tuple] = []
    record(rows, state)
    snapshot(state)
    try:
        for _ in range(n_steps):
            state = twin_step(state, params, nudge)
            record(rows, state)
            snapshot(state)
    except BlowUpError:
        if out_path is not None and rows:
            series = ErrorSeries.from_rows(rows)
            (out_path / "series.csv").write_text(series.to_csv(), encoding="utf-8")
        raise

    series = ErrorSeries.from_rows(rows)
    if out_path is not None:
        (out_path / "series.csv").write_text(series.to_csv(), encoding="utf-8")
    return series


# -- theorem parameter window ---------------------------------------------------------

@dataclass(frozen=True)
class WindowReport:
    """Dimensionless quantities entering the synchronization condition.

    No pass/fail verdict is implied: the theorem's constants are
    non-constructive, so only the ratios and user-supplied normalizations
    c0, c0' are reported.
    """

    exponent: float            # gamma / (gamma - 1 - 2/p)
    lower_quantity: float      # (Theta_Lp / kappa)^exponent
    mu_over_kappa: float
    upper_quantity: float      # h^{-gamma}
    mu_h_gamma_over_kappa: float
    delta_mu: float
    lower_ok: bool
    upper_ok: bool
    c0: float
    c0_prime: float
    delta_kappa_over_h_gamma: float
    delta_smallness_structural: float  # delta^2 kappa^3 h^{-3 gamma} (2 pi/h)^2

    def to_text(self) -> str:
        return "\n".join(f"{k}: {v!r}" for k, v in self.__dict__.items())

    def to_csv(self) -> str:
        lines = ["quantity,value"]
        lines += [f"{k},{v!r}" for k, v in self.__dict__.items()]
        return "\n".join(lines) + "\n"


def check_parameter_window(config, theta_stats: ThetaStats, c0: float = 1.0,
                           c0_prime: float = 1.0) -> WindowReport:
    """Evaluate the mu/h/delta window of the synchronization theorem.

    ``lower_ok`` means mu/kappa >= (Theta_Lp/kappa)^{gamma/(gamma-1-2/p)}/c0'
    and ``upper_ok`` means mu/kappa <= h^{-gamma}/c0.
    """
    denominator = config.gamma - 1.0 - 2.0 / config.p
    if denominator <= 0:
        raise HypothesisViolationError(
            f"H3 violated: gamma - 1 - 2/p = {denominator:.6g} <= 0")
    exponent = config.gamma / denominator
    lower = (theta_stats.sup_lp / config.kappa) ** exponent
    b = config.mu / config.kappa
    h = config.h
    upper = h ** (-config.gamma)
    return WindowReport(
        exponent=exponent,
        lower_quantity=lower,
        mu_over_kappa=b,
        upper_quantity=upper,
        mu_h_gamma_over_kappa=config.mu * h**config.gamma / config.kappa,
        delta_mu=config.delta * config.mu,
        lower_ok=b >= lower / c0_prime,
        upper_ok=b <= upper / c0,
        c0=c0,
        c0_prime=c0_prime,
        delta_kappa_over_h_gamma=config.delta * config.kappa / h**config.gamma,
        delta_smallness_structural=(config.delta**2 * config.kappa**3
                                    / h**(3 * config.gamma)
                                    * (2 * np.pi / h) ** 2),
    )
