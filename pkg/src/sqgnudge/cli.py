"""Command-line experiment runner.

Subcommands:
    twin          reference + nudged twin experiment, error series to CSV
    simulate      reference solution only, norm series to CSV
    verify        inequality suite and the Gronwall-checker battery
    observe-test  approximation-of-identity rate battery for the operators
    sweep         grid of twin runs over mu / delta / h, run concurrently
    window        empirical synchronization-window report

Each run writes into ``<out>/<run-name>/``: ``config.echo``, ``series.csv``
and ``report.txt`` (plus ``summary.csv`` for sweeps).  Exit codes: 0 success,
1 verification failure, 2 configuration error, 3 runtime blow-up.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import diagnostics, observers
from .assimilation import (
    check_parameter_window,
    prepare_reference,
    run_experiment,
)
from .config import ConfigError, ExperimentConfig, echo_config, parse_config
from .diagnostics import (
    InsufficientDecayWindowError,
    equality_ode_instance,
    fit_decay_rate,
    gronwall_check,
    inequality_suite,
)
from .dynamics import BlowUpError, StepperState, imex_step
from .spectral import (
    lp_norm,
    random_band_limited,
    sobolev_norm,
    to_physical,
    wave_grid,
)

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_CONFIG = 2
EXIT_BLOWUP = 3


def _load_config(args) -> ExperimentConfig:
    config = parse_config(args.config) if args.config else ExperimentConfig()
    if not args.config:
        violations = config.validate()
        if violations:
            raise ConfigError(violations)
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    snapshots = getattr(args, "snapshots", None)
    if snapshots is not None:
        config.snapshot_every = 0 if snapshots == "off" else int(snapshots)
    return config


def _run_dir(args, config=None) -> Path:
    name = getattr(args, "name", None)
    if name is None:
        name = Path(args.config).stem if args.config else "run"
    path = Path(args.out) / name
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_run_files(run_dir: Path, config, report_text: str):
    (run_dir / "config.echo").write_text(echo_config(config), encoding="utf-8")
    (run_dir / "report.txt").write_text(report_text + "\n", encoding="utf-8")


def _fit_summary(series, config) -> tuple[dict, str]:
    initial = series.err_l2[0] if series.err_l2[0] > 0 else 1.0
    floor = 1e-9 * initial
    post = series.err_l2[series.t > 2 * config.delta]
    peak = float(post.max()) if post.size else float("nan")
    trough = float(post.min()) if post.size else float("nan")
    decades = math.log10(peak / trough) if trough > 0 and peak > 0 else float("nan")
    try:
        lam, r2 = fit_decay_rate(series, 2 * config.delta, config.horizon_t, floor)
        status = "ok"
    except InsufficientDecayWindowError:
        lam, r2, status = float("nan"), float("nan"), "insufficient-window"
    row = {"lambda": lam, "r_squared": r2, "final_err": float(series.err_l2[-1]),
           "decades": decades, "status": status}
    text = "\n".join(f"{k}: {v!r}" for k, v in row.items())
    return row, text


def cmd_twin(args) -> int:
    config = _load_config(args)
    run_dir = _run_dir(args)
    reference = prepare_reference(config)
    try:
        series = run_experiment(config, out_dir=run_dir, reference=reference)
    except BlowUpError as err:
        _write_run_files(run_dir, config, f"status: blow-up\ndetail: {err}")
        print(f"error: {err}", file=sys.stderr)
        return EXIT_BLOWUP
    _, fit_text = _fit_summary(series, config)
    window = check_parameter_window(config, reference.stats)
    report = (f"status: ok\nsteps: {len(series) - 1}\n{fit_text}\n"
              f"--- parameter window ---\n{window.to_text()}")
    _write_run_files(run_dir, config, report)
    print(f"twin: wrote {run_dir / 'series.csv'}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = _load_config(args)
    run_dir = _run_dir(args)
    reference = prepare_reference(config)
    state = StepperState(reference.theta, 0.0, config.dt)
    rows = []

    def record(st):
        rows.append((st.time, sobolev_norm(st.theta, 0.0),
                     lp_norm(to_physical(st.theta), config.p),
                     sobolev_norm(st.theta, config.sigma)))

    record(state)
    try:
        for _ in range(int(round(config.horizon_t / config.dt))):
            state = imex_step(state, reference.params)
            record(state)
    except BlowUpError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_BLOWUP
    lines = ["t,theta_l2,theta_lp,theta_hsigma"]
    lines += [f"{t!r},{a!r},{b!r},{c!r}" for t, a, b, c in rows]
    (run_dir / "series.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    stats = reference.stats
    report = (f"status: ok\nsup_l2: {stats.sup_l2!r}\nsup_lp: {stats.sup_lp!r}\n"
              f"sup_hsigma: {stats.sup_hsigma!r}\n"
              f"plateau_fraction: {stats.plateau_fraction()!r}")
    _write_run_files(run_dir, config, report)
    print(f"simulate: wrote {run_dir / 'series.csv'}")
    return EXIT_OK


def gronwall_battery(a_values=(0.5, 1.0, 2.0), ab_values=(0.0, 0.01, 0.05),
                     delta: float = 0.1):
    """Run the checker over the equality ODE family; returns report rows."""
    rows = []
    for a in a_values:
        for ab in ab_values:
            inst = equality_ode_instance(a=a, b=1.0, big_a=ab, big_b=ab,
                                         delta=delta)
            report = gronwall_check(inst)
            ok = (report.condition_ok and report.hypothesis_ok
                  and report.conclusion_ok and not report.flagged)
            rows.append((a, ab, report, ok))
    return rows


def cmd_verify(args) -> int:
    suite = inequality_suite(seed=args.seed, n_fields=args.fields)
    lines = [suite.to_text(), "", "--- gronwall battery (a, A=B) ---"]
    battery_ok = True
    for a, ab, report, ok in gronwall_battery():
        battery_ok &= ok
        lines.append(f"a={a} A=B={ab}: {'PASS' if ok else 'FAIL'} "
                     f"conclusion_margin={report.conclusion_margin:.3e}")
    text = "\n".join(lines)
    print(text)
    if args.out:
        run_dir = Path(args.out) / "verify"
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "report.txt").write_text(text + "\n", encoding="utf-8")
        (run_dir / "report.csv").write_text(suite.to_csv(), encoding="utf-8")
    return EXIT_OK if (suite.all_pass and battery_ok) else EXIT_VERIFY_FAIL


def cmd_observe_test(args) -> int:
    rng = np.random.default_rng(np.random.SeedSequence([args.seed, 0x0B5]))
    lines = []
    ok = True

    grid = wave_grid(128)
    proj = observers.SpectralProjection(8, grid)
    worst = 0.0
    for _ in range(args.fields):
        phi = random_band_limited(grid, kmax=grid.n // 3, rng=rng)
        for beta in (0.5, 1.0):
            _, ratio = observers.approx_identity_error(proj, phi, beta)
            worst = max(worst, ratio)
    ok &= worst <= 1.0 + 1e-10
    lines.append(f"spectral_ratio_worst: {worst!r} (bound 1 + 1e-10)")

    fine = wave_grid(256)
    phi = random_band_limited(fine, kmax=12, rng=rng)
    hs, ratios = [], []
    for m in (16, 32, 64):
        pou = observers.build_partition(2 * np.pi / m, fine)
        op = observers.VolumeElements(pou)
        _, ratio = observers.approx_identity_error(op, phi, 1.0)
        hs.append(op.h)
        ratios.append(ratio)
        lines.append(f"volume_ratio h={op.h!r}: {ratio!r}")
    slope = np.polyfit(np.log(hs), np.log(ratios), 1)[0]
    ok &= abs(slope) <= 0.3
    lines.append(f"volume_log_ratio_slope: {slope!r} (|slope| <= 0.3)")

    sample = [random_band_limited(fine, kmax=12, rng=rng) for _ in range(10)]
    consts = observers.measure_identity_constants(
        observers.VolumeElements(observers.build_partition(2 * np.pi / 32, fine)),
        sample)
    for beta, value in consts.items():
        lines.append(f"volume_constant beta={beta}: {value!r}")

    text = "\n".join(lines)
    print(text)
    if args.out:
        run_dir = Path(args.out) / "observe-test"
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "report.txt").write_text(text + "\n", encoding="utf-8")
    return EXIT_OK if ok else EXIT_VERIFY_FAIL


def _sweep_worker(config: ExperimentConfig, run_dir_str: str) -> dict:
    run_dir = Path(run_dir_str)
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "config.echo").write_text(echo_config(config), encoding="utf-8")
    row = {"mu": config.mu, "delta": config.delta, "h": config.h}
    try:
        series = run_experiment(config, out_dir=run_dir)
    except BlowUpError as err:
        (run_dir / "report.txt").write_text(f"status: blow-up\ndetail: {err}\n",
                                            encoding="utf-8")
        row.update(status="blowup", **{"lambda": float("nan"),
                                       "r_squared": float("nan"),
                                       "final_err": float("nan"),
                                       "decades": float("nan")})
        return row
    fit_row, fit_text = _fit_summary(series, config)
    (run_dir / "report.txt").write_text(f"status: ok\n{fit_text}\n",
                                        encoding="utf-8")
    row.update(status=fit_row["status"], **{k: fit_row[k] for k in
                                            ("lambda", "r_squared",
                                             "final_err", "decades")})
    return row


def _parse_values(raw: str | None) -> list[float] | None:
    if raw is None:
        return None
    return [float(tok) for tok in raw.split(",") if tok.strip()]


def cmd_sweep(args) -> int:
    base = _load_config(args)
    mus = _parse_values(args.mu) or [base.mu]
    deltas = _parse_values(args.delta) or [base.delta]
    hs = _parse_values(args.h) or [base.h]
    jobs = []
    for mu in mus:
        for delta in deltas:
            for h in hs:
                config = dataclasses.replace(base, mu=mu, delta=delta)
                if config.operator == "spectral":
                    config.cutoff_k = max(1, math.ceil(1.0 / h))
                else:
                    config.squares_m = int(round(2 * math.pi / h))
                violations = config.validate()
                if violations:
                    raise ConfigError(violations)
                name = f"mu{mu:g}_delta{delta:g}_h{h:g}"
                jobs.append((config, str(Path(args.out) / name)))

    workers = min(len(jobs), args.workers or os.cpu_count() or 1)
    rows = []
    if workers <= 1:
        rows = [_sweep_worker(*job) for job in jobs]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_sweep_worker, *job) for job in jobs]
            rows = [f.result() for f in futures]

    rows.sort(key=lambda r: (r["mu"], r["delta"], r["h"]))
    header = "mu,delta,h,lambda,r_squared,final_err,decades,status"
    lines = [header]
    for r in rows:
        lines.append(f"{r['mu']!r},{r['delta']!r},{r['h']!r},{r['lambda']!r},"
                     f"{r['r_squared']!r},{r['final_err']!r},{r['decades']!r},"
                     f"{r['status']}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"sweep: wrote {out / 'summary.csv'} ({len(rows)} runs)")
    return EXIT_OK


def cmd_window(args) -> int:
    config = _load_config(args)
    run_dir = _run_dir(args)
    reference = prepare_reference(config)
    report = check_parameter_window(config, reference.stats,
                                    c0=args.c0, c0_prime=args.c0_prime)
    _write_run_files(run_dir, config, report.to_text())
    (run_dir / "report.csv").write_text(report.to_csv(), encoding="utf-8")
    print(report.to_text())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sqgnudge", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True, needs_out=True):
        p.add_argument("--config", required=needs_config,
                       help="key=value config file")
        if needs_out:
            p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override seed")
        p.add_argument("--name", default=None, help="run directory name")

    p = sub.add_parser("twin", help="run a twin experiment")
    add_common(p)
    p.add_argument("--snapshots", default=None, metavar="N|off",
                   help="write SQGF snapshots every N steps")
    p.set_defaults(func=cmd_twin)

    p = sub.add_parser("simulate", help="run the reference solution only")
    add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="inequality suite + gronwall battery")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--fields", type=int, default=100)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("observe-test", help="approximation-of-identity rates")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--fields", type=int, default=100)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_observe_test)

    p = sub.add_parser("sweep", help="grid of twin runs over mu/delta/h")
    add_common(p)
    p.add_argument("--mu", default=None, help="comma-separated mu values")
    p.add_argument("--delta", default=None, help="comma-separated delta values")
    p.add_argument("--h", default=None, help="comma-separated h values")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("window", help="synchronization-window report")
    add_common(p)
    p.add_argument("--c0", type=float, default=1.0)
    p.add_argument("--c0-prime", dest="c0_prime", type=float, default=1.0)
    p.set_defaults(func=cmd_window)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        for violation in err.violations:
            print(f"config error: {violation}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_BLOWUP


if __name__ == "__main__":
    sys.exit(main())
