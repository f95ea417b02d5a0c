"""Decay-rate fitting, the inequality verification suite, and a discrete
checker for the non-local Gronwall inequality used by the synchronization
argument.

Everything here is report-oriented: functions return structured results and
never mutate simulation state, so they are safe to run concurrently.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from . import dynamics, observers, spectral
from .spectral import (
    FourierField,
    fractional_laplacian,
    lp_norm,
    refine,
    riesz_perp,
    partial_x,
    partial_y,
    random_band_limited,
    sobolev_norm,
    to_physical,
    wave_grid,
)


class InsufficientDecayWindowError(RuntimeError):
    """Too few above-floor samples to fit a decay rate."""


# -- error series ---------------------------------------------------------------

_CSV_HEADER = "t,k,err_l2,err_hsigma,err_hneg_half,theta_l2,eta_l2"


@dataclass(frozen=True)
class ErrorSeries:
    """Per-step twin-experiment norms, as written to series.csv."""

    t: np.ndarray
    k: np.ndarray
    err_l2: np.ndarray
    err_hsigma: np.ndarray
    err_hneg_half: np.ndarray
    theta_l2: np.ndarray
    eta_l2: np.ndarray

    def __post_init__(self):
        cols = [self.t, self.k, self.err_l2, self.err_hsigma,
                self.err_hneg_half, self.theta_l2, self.eta_l2]
        lengths = {len(c) for c in cols}
        if len(lengths) != 1:
            raise ValueError("all columns must have equal length")
        if len(self.t) > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError("t must be strictly increasing")
        for name in ("err_l2", "err_hsigma", "err_hneg_half", "theta_l2", "eta_l2"):
            col = getattr(self, name)
            if not (np.isfinite(col).all() and (col >= 0).all()):
                raise ValueError(f"column {name} must be finite and nonnegative")

    def __len__(self):
        return len(self.t)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(_CSV_HEADER + "\n")
        for i in range(len(self.t)):
            out.write(f"{self.t[i]!r},{int(self.k[i])},{self.err_l2[i]!r},"
                      f"{self.err_hsigma[i]!r},{self.err_hneg_half[i]!r},"
                      f"{self.theta_l2[i]!r},{self.eta_l2[i]!r}\n")
        return out.getvalue()

    @classmethod
    def from_rows(cls, rows) -> "ErrorSeries":
        arr = np.asarray(rows, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 7:
            raise ValueError("rows must be (t, k, 5 norms)")
        return cls(arr[:, 0], arr[:, 1].astype(np.int64), arr[:, 2], arr[:, 3],
                   arr[:, 4], arr[:, 5], arr[:, 6])

    @classmethod
    def from_csv(cls, text: str) -> "ErrorSeries":
        lines = [ln for ln in text.strip().splitlines() if ln]
        if not lines or lines[0] != _CSV_HEADER:
            raise ValueError("bad series header")
        rows = [[float(tok) for tok in ln.split(",")] for ln in lines[1:]]
        return cls.from_rows(rows)


def fit_decay_rate(series: ErrorSeries, t_start: float, t_end: float,
                   floor: float) -> tuple[float, float]:
    """Least-squares slope of log(err_l2) versus t; returns (lambda, R^2).

    Only samples with t in (t_start, t_end] and err_l2 > floor enter the fit;
    at least 20 are required.  lambda is minus the slope.  R^2 is 1 for an
    exact fit (including a constant series, whose lambda is 0).
    """
    mask = (series.t > t_start) & (series.t <= t_end) & (series.err_l2 > floor)
    if mask.sum() < 20:
        raise InsufficientDecayWindowError(
            f"only {int(mask.sum())} samples above floor {floor:.3g} "
            f"in ({t_start}, {t_end}]")
    t = series.t[mask]
    y = np.log(series.err_l2[mask])
    slope, intercept = np.polyfit(t, y, 1)
    residual = y - (slope * t + intercept)
    ss_res = float(np.sum(residual**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return -float(slope), r_squared


# -- non-local Gronwall checker ---------------------------------------------------

@dataclass(frozen=True)
class GronwallInstance:
    """Sampled data for the inequality d/dt Phi + a Phi + b Psi <= F
    + A delta int Phi + B delta int Psi on [t0, t0+delta].

    ``t`` must be a uniform grid containing both endpoints.
    """

    t: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    f: np.ndarray
    a: float
    b: float
    big_a: float
    big_b: float
    delta: float

    def __post_init__(self):
        for name in ("phi", "psi", "f"):
            if (getattr(self, name) < 0).any():
                raise ValueError(f"{name} must be nonnegative")
        if len({len(self.t), len(self.phi), len(self.psi), len(self.f)}) != 1:
            raise ValueError("all sequences must have equal length")
        steps = np.diff(self.t)
        if len(steps) and not np.allclose(steps, steps[0], rtol=1e-9):
            raise ValueError("t must be uniformly spaced")
        if self.delta <= 0 or min(self.a, self.b, self.big_a, self.big_b) < 0:
            raise ValueError("delta must be positive and a, b, A, B nonnegative")


@dataclass(frozen=True)
class GronwallReport:
    hypothesis_ok: bool
    condition_ok: bool
    conclusion_ok: bool
    hypothesis_margin: float
    condition_margin: float
    conclusion_margin: float
    scale: float
    counterexample_time: float | None

    @property
    def flagged(self) -> bool:
        """Hypothesis and smallness condition hold but the conclusion fails."""
        return self.hypothesis_ok and self.condition_ok and not self.conclusion_ok

    def to_text(self) -> str:
        lines = [
            f"hypothesis_ok: {self.hypothesis_ok}",
            f"condition_ok: {self.condition_ok}",
            f"conclusion_ok: {self.conclusion_ok}",
            f"hypothesis_margin: {self.hypothesis_margin!r}",
            f"condition_margin: {self.condition_margin!r}",
            f"conclusion_margin: {self.conclusion_margin!r}",
            f"scale: {self.scale!r}",
        ]
        if self.counterexample_time is not None:
            lines.append(f"counterexample_time: {self.counterexample_time!r}")
        return "\n".join(lines)


def _cumtrapz(y: np.ndarray, dt: float) -> np.ndarray:
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1])) * dt
    return out


def gronwall_check(inst: GronwallInstance) -> GronwallReport:
    """Discretely verify hypothesis, smallness condition, and conclusion.

    (a) the differential inequality, with central differences for d Phi/dt
        (one-sided at the ends) and composite trapezoid for the integrals;
    (b) the smallness condition delta (e^{(a/2) delta} - 1)
        <= (a/4) min(a/A, b/B), with a/A = inf when A = 0;
    (c) the decaying-memory conclusion
        Phi(t) + (b/2) int e^{-(a/2)(t-s)} Psi <= e^{-(a/2)(t-t0)} Phi(t0)
        + int e^{-(a/2)(t-s)} F at every sample.

    Margins are (rhs - lhs) minima; a check passes when its margin is
    >= -1e-6 * scale, where scale is the largest magnitude either side of
    that check attains.  Report only; never raises on failed checks.
    """
    if len(inst.t) < 100:
        raise ValueError("need at least 100 samples for meaningful differences")
    t, phi, psi, f = inst.t, inst.phi, inst.psi, inst.f
    a, b, big_a, big_b, delta = inst.a, inst.b, inst.big_a, inst.big_b, inst.delta
    dt = float(t[1] - t[0])

    dphi = np.empty_like(phi)
    dphi[1:-1] = (phi[2:] - phi[:-2]) / (2.0 * dt)
    dphi[0] = (phi[1] - phi[0]) / dt
    dphi[-1] = (phi[-1] - phi[-2]) / dt

    int_phi = _cumtrapz(phi, dt)
    int_psi = _cumtrapz(psi, dt)

    hyp_lhs = dphi + a * phi + b * psi
    hyp_rhs = f + big_a * delta * int_phi + big_b * delta * int_psi
    hyp_scale = float(max(np.max(np.abs(hyp_lhs)), np.max(np.abs(hyp_rhs)), 1e-300))
    hypothesis_margin = float(np.min(hyp_rhs - hyp_lhs))
    hypothesis_ok = hypothesis_margin >= -1e-6 * hyp_scale

    ratio_a = np.inf if big_a == 0 else a / big_a
    ratio_b = np.inf if big_b == 0 else b / big_b
    condition_margin = float((a / 4.0) * min(ratio_a, ratio_b)
                             - delta * (np.exp(0.5 * a * delta) - 1.0))
    condition_ok = condition_margin >= 0.0

    # exponentially weighted integrals via cumulative sums:
    # int e^{-(a/2)(t-s)} X(s) ds = e^{-(a/2) t} * cumtrapz(e^{(a/2) s} X)
    growth = np.exp(0.5 * a * (t - t[0]))
    conv_psi = _cumtrapz(growth * psi, dt) / growth
    conv_f = _cumtrapz(growth * f, dt) / growth
    concl_lhs = phi + 0.5 * b * conv_psi
    concl_rhs = phi[0] / growth + conv_f
    scale = float(max(np.max(np.abs(concl_lhs)), np.max(np.abs(concl_rhs)), 1e-300))
    gaps = concl_rhs - concl_lhs
    conclusion_margin = float(np.min(gaps))
    conclusion_ok = conclusion_margin >= -1e-6 * scale

    counterexample_time = None
    if hypothesis_ok and condition_ok and not conclusion_ok:
        counterexample_time = float(t[int(np.argmin(gaps))])

    return GronwallReport(hypothesis_ok, condition_ok, conclusion_ok,
                          hypothesis_margin, condition_margin, conclusion_margin,
                          scale, counterexample_time)


def equality_ode_instance(a: float, b: float, big_a: float, big_b: float,
                          delta: float, phi0: float = 1.0, f_const: float = 0.5,
                          n_samples: int = 201,
                          dt_fine: float = 1e-4) -> GronwallInstance:
    """Sampled solution of the ODE that saturates the differential inequality.

    Takes Psi = Phi and integrates
        Phi' = -(a + b) Phi + F + (A + B) delta int Phi
    with classical RK4 at ``dt_fine``, then subsamples ``n_samples`` points on
    [0, delta].  The continuous solution satisfies the Gronwall hypothesis
    with equality, making it a sharp test case for the checker.
    """
    n_chunks = n_samples - 1
    per_chunk = max(1, int(round(delta / dt_fine / n_chunks)))
    dt = delta / (n_chunks * per_chunk)

    def rhs(y):
        phi, integral = y
        dphi = -(a + b) * phi + f_const + (big_a + big_b) * delta * integral
        return np.array([dphi, phi])

    y = np.array([phi0, 0.0])
    phi_samples = [phi0]
    for _ in range(n_chunks):
        for _ in range(per_chunk):
            k1 = rhs(y)
            k2 = rhs(y + 0.5 * dt * k1)
            k3 = rhs(y + 0.5 * dt * k2)
            k4 = rhs(y + dt * k3)
            y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        phi_samples.append(y[0])
    phi = np.array(phi_samples)
    t = np.linspace(0.0, delta, n_samples)
    return GronwallInstance(t=t, phi=phi, psi=phi.copy(),
                            f=np.full(n_samples, f_const), a=a, b=b,
                            big_a=big_a, big_b=big_b, delta=delta)


# -- inequality suite --------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    trials: int
    failures: int
    worst_margin: float
    tolerance: float
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.failures == 0


@dataclass
class SuiteReport:
    seed: int
    n_fields: int
    checks: list[CheckResult] = dataclass_field(default_factory=list)

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def total_failures(self) -> int:
        return sum(c.failures for c in self.checks)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_text(self) -> str:
        lines = [f"seed: {self.seed}", f"n_fields: {self.n_fields}"]
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            line = (f"{c.name}: {status} trials={c.trials} failures={c.failures} "
                    f"worst_margin={c.worst_margin:.3e} tolerance={c.tolerance:.1e}")
            if c.note:
                line += f" ({c.note})"
            lines.append(line)
        lines.append(f"total_failures: {self.total_failures}")
        return "\n".join(lines)

    def to_csv(self) -> str:
        out = ["name,trials,failures,worst_margin,tolerance"]
        out += [f"{c.name},{c.trials},{c.failures},{c.worst_margin!r},"
                f"{c.tolerance!r}" for c in self.checks]
        return "\n".join(out) + "\n"


def _collect(margins, tolerance) -> tuple[int, float]:
    margins = np.asarray(margins, dtype=np.float64)
    failures = int(np.sum(margins < -tolerance))
    return failures, float(margins.min()) if margins.size else 0.0


def positivity_margin(phi: FourierField, p: int, gamma: float) -> float:
    """Margin of the fractional-Laplacian lower bound for one field.

    Computes int |phi|^{p-2} phi Lambda^gamma phi dx
    - (2/p) ||Lambda^{gamma/2}(phi^{p/2})||^2 with both sides evaluated on a
    2x refined grid so quadrature of the power nonlinearities is exact for
    band-limited fields.
    """
    if p % 2 != 0 or p < 2:
        raise ValueError("positivity check implemented for even p >= 2")
    fine = refine(phi, 2 * phi.grid.n)
    vals = to_physical(fine).values
    lam_vals = to_physical(fractional_laplacian(fine, gamma)).values
    lhs = float(np.sum(np.abs(vals) ** (p - 2) * vals * lam_vals) * fine.grid.dx**2)
    power = spectral.to_spectral(
        spectral.PhysicalField(fine.grid, vals ** (p // 2)))
    rhs = (2.0 / p) * sobolev_norm(power, gamma / 2.0) ** 2
    # the mean removed by the spectral projection of phi^{p/2} does not enter
    # the homogeneous norm, so no correction is needed
    return lhs - rhs


def inequality_suite(seed: int = 1, n_fields: int = 100,
                     grid_n: int = 64) -> SuiteReport:
    """Numerically verify every testable inequality and operator axiom.

    Runs the spectral-identity, Poincare, Gagliardo-Nirenberg, fractional
    positivity, observation-operator, and partition-of-unity checks over
    ``n_fields`` seeded random band-limited fields, plus short dynamical runs
    for mean-zero propagation and discrete dissipation.
    """
    if n_fields < 1:
        raise ValueError("n_fields must be >= 1")
    report = SuiteReport(seed=seed, n_fields=n_fields)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x1EAF]))
    grid = wave_grid(grid_n)
    kmax = grid_n // 3
    fields = [random_band_limited(grid, kmax=kmax, rng=rng, norm=1.0)
              for _ in range(n_fields)]

    # Plancherel: grid quadrature of |phi|^2 vs the spectral sum
    margins = []
    for phi in fields:
        s = sobolev_norm(phi, 0.0)
        margins.append(-(abs(lp_norm(to_physical(phi), 2.0) - s))
                       + 1e-10 * max(s, 1e-300))
    failures, worst = _collect(margins, 0.0)
    report.checks.append(CheckResult("plancherel", n_fields, failures, worst, 0.0))

    # Poincare with constant one: ||phi||_{H^s'} <= ||phi||_{H^s} for s' <= s
    pairs = [(-1.0, 0.0), (0.0, 0.5), (0.5, 1.0), (-0.5, 1.5), (0.75, 0.75)]
    margins = []
    for phi in fields:
        for lo, hi in pairs:
            margins.append(sobolev_norm(phi, hi) - sobolev_norm(phi, lo))
    failures, worst = _collect(margins, 1e-12)
    report.checks.append(CheckResult("poincare_constant_one",
                                     len(margins), failures, worst, 1e-12))

    # multiplier semigroup: Lambda^a Lambda^b = Lambda^{a+b}
    margins = []
    for phi in fields[:min(n_fields, 20)]:
        for aa, bb in [(0.7, 0.8), (-1.0, 1.0), (1.5, -0.5)]:
            direct = fractional_laplacian(phi, aa + bb)
            composed = fractional_laplacian(fractional_laplacian(phi, aa), bb)
            ref = max(sobolev_norm(direct, 0.0), 1e-300)
            margins.append(1e-12 - sobolev_norm(composed - direct, 0.0) / ref)
    failures, worst = _collect(margins, 0.0)
    report.checks.append(CheckResult("laplacian_semigroup",
                                     len(margins), failures, worst, 0.0))

    # riesz_perp: divergence-free output with the same L2 norm
    margins_div, margins_iso = [], []
    for phi in fields:
        u1, u2 = riesz_perp(phi)
        div = partial_x(u1) + partial_y(u2)
        ref = max(sobolev_norm(phi, 0.0), 1e-300)
        margins_div.append(1e-12 - sobolev_norm(div, 0.0) / ref)
        speed = np.hypot(sobolev_norm(u1, 0.0), sobolev_norm(u2, 0.0))
        margins_iso.append(1e-12 - abs(speed - ref) / ref)
    failures, worst = _collect(margins_div, 0.0)
    report.checks.append(CheckResult("riesz_divergence_free",
                                     n_fields, failures, worst, 0.0))
    failures, worst = _collect(margins_iso, 0.0)
    report.checks.append(CheckResult("riesz_isometry",
                                     n_fields, failures, worst, 0.0))

    # Gagliardo-Nirenberg interpolation with constant one (Plancherel form)
    gn_pairs = [(0.5, 1.0), (0.75, 1.5), (1.0, 2.0), (0.3, 0.9)]
    margins = []
    for phi in fields:
        l2 = sobolev_norm(phi, 0.0)
        for alpha, beta in gn_pairs:
            lhs = sobolev_norm(phi, alpha)
            rhs = sobolev_norm(phi, beta) ** (alpha / beta) * l2 ** (1 - alpha / beta)
            margins.append((rhs - lhs) / max(rhs, 1e-300))
    failures, worst = _collect(margins, 1e-12)
    report.checks.append(CheckResult("gagliardo_nirenberg_c1",
                                     len(margins), failures, worst, 1e-12))

    # fractional positivity, p in {2, 4}, gamma in {1.2, 1.5, 2.0}
    pos_fields = fields[:min(n_fields, 25)]
    margins, eq_margins = [], []
    for phi in pos_fields:
        for gamma in (1.2, 1.5, 2.0):
            for p in (2, 4):
                margin = positivity_margin(phi, p, gamma)
                margins.append(margin + 1e-8)
                if p == 2:
                    eq_margins.append(1e-10 - abs(margin))
    failures, worst = _collect(margins, 0.0)
    report.checks.append(CheckResult("fractional_positivity", len(margins),
                                     failures, worst - 1e-8, 1e-8))
    failures, worst = _collect(eq_margins, 0.0)
    report.checks.append(CheckResult("positivity_p2_equality", len(eq_margins),
                                     failures, worst, 1e-10))

    # mean-zero propagation and discrete dissipation on short runs
    run_grid = wave_grid(32)
    theta0 = random_band_limited(run_grid, kmax=8, rng=rng, norm=1.0)
    forcing = dynamics.make_forcing(run_grid, gamma=1.5, kappa=1.0, seed=seed)
    params_forced = dynamics.SqgParams(1.0, 1.5, forcing)
    params_free = dynamics.SqgParams(1.0, 1.5, spectral.zero_field(run_grid))
    mean_margins, energy_margins = [], []
    state_forced = dynamics.StepperState(theta0, 0.0, 1e-3)
    state_free = dynamics.StepperState(theta0, 0.0, 1e-3)
    energy = sobolev_norm(theta0, 0.0)
    for _ in range(100):
        state_forced = dynamics.imex_step(state_forced, params_forced)
        state_free = dynamics.imex_step(state_free, params_free)
        mean_margins.append(-abs(state_forced.theta.coeffs[0, 0])
                            - abs(state_free.theta.coeffs[0, 0]))
        new_energy = sobolev_norm(state_free.theta, 0.0)
        energy_margins.append(energy - new_energy)
        energy = new_energy
    failures, worst = _collect(mean_margins, 0.0)
    report.checks.append(CheckResult("mean_zero_propagation", 100, failures,
                                     worst, 0.0, "exact zero mean mode"))
    failures, worst = _collect(energy_margins, 0.0)
    report.checks.append(CheckResult("discrete_dissipation", 100, failures,
                                     worst, 0.0, "f=0 energy nonincreasing"))

    # observation operators on the same field sample
    proj = observers.SpectralProjection(8, grid)
    pou = observers.build_partition(np.pi / 8, grid)
    vol = observers.VolumeElements(pou)
    shifted = observers.ShiftedVolumeElements(pou)

    margins_stab_s, margins_stab_v = [], []
    margins_lin, margins_idem, margins_shift, margins_adj = [], [], [], []
    margins_ti = []
    for i, phi in enumerate(fields):
        l2 = max(sobolev_norm(phi, 0.0), 1e-300)
        margins_stab_s.append(1.0 - sobolev_norm(proj.apply(phi), 0.0) / l2)
        margins_stab_v.append(3.0 - sobolev_norm(vol.apply(phi), 0.0) / l2)
        for beta in (0.5, 1.0):
            _, ratio = observers.approx_identity_error(proj, phi, beta)
            margins_ti.append(1.0 + 1e-10 - ratio)
        other = fields[(i + 1) % len(fields)]
        for op in (proj, vol):
            lin = op.apply(2.0 * phi + (-0.5) * other) \
                - (2.0 * op.apply(phi) + (-0.5) * op.apply(other))
            margins_lin.append(1e-12 - sobolev_norm(lin, 0.0) / l2)
        idem = proj.apply(proj.apply(phi)) - proj.apply(phi)
        margins_idem.append(-float(np.max(np.abs(idem.coeffs))))
        margins_shift.append(-abs(float(np.mean(
            to_physical(shifted.apply(phi)).values))))
        jp = vol.apply(phi)
        jo = vol.apply(other)
        sym = abs(spectral.inner_product(to_physical(jp), to_physical(other))
                  - spectral.inner_product(to_physical(phi), to_physical(jo)))
        margins_adj.append(1e-10 - sym / l2)
    report.checks.append(CheckResult("stability_spectral", n_fields,
                                     *_collect(margins_stab_s, 1e-12), 1e-12,
                                     "L2 constant <= 1"))
    report.checks.append(CheckResult("stability_volume", n_fields,
                                     *_collect(margins_stab_v, 0.0), 0.0,
                                     "L2 constant <= 3"))
    report.checks.append(CheckResult("approx_identity_spectral",
                                     len(margins_ti),
                                     *_collect(margins_ti, 0.0), 0.0,
                                     "ratio <= 1 + 1e-10 for beta in {1/2, 1}"))
    report.checks.append(CheckResult("operator_linearity", len(margins_lin),
                                     *_collect(margins_lin, 0.0), 0.0))
    report.checks.append(CheckResult("projection_idempotent", n_fields,
                                     *_collect(margins_idem, 1e-15), 1e-15))
    report.checks.append(CheckResult("shifted_mean_zero", n_fields,
                                     *_collect(margins_shift, 1e-13), 1e-13))
    report.checks.append(CheckResult("volume_self_adjoint", n_fields,
                                     *_collect(margins_adj, 0.0), 0.0))

    # partition of unity
    bump_sum = pou.sum_of_bumps()
    margin_sum = 1e-12 - float(np.max(np.abs(bump_sum - 1.0)))
    range_margin = min(float(pou.base.min()), float(1.0 - pou.base.max()))
    ratio = pou.square_integral / pou.h**2
    margin_ratio = min(ratio - 1.0 + 1e-12, 2.0 - ratio)
    ones = spectral.PhysicalField(grid, np.ones((grid.n, grid.n)))
    repro = vol.apply_physical(ones).values
    margin_const = 1e-12 - float(np.max(np.abs(repro - 1.0)))
    report.checks.append(CheckResult("pou_sum_to_one", 1,
                                     *_collect([margin_sum], 0.0), 1e-12))
    report.checks.append(CheckResult("pou_range", 1,
                                     *_collect([range_margin], 0.0), 0.0,
                                     "0 <= psi <= 1"))
    report.checks.append(CheckResult("pou_integral_ratio", 1,
                                     *_collect([margin_ratio], 0.0), 1e-12,
                                     "int psi / h^2 in [1, 2]"))
    report.checks.append(CheckResult("volume_constants_reproduced", 1,
                                     *_collect([margin_const], 0.0), 1e-12))

    return report
