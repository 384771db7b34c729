"""Experiment runner.

One executable with a subcommand per run mode: coupling and squeezing
sweeps of the thermal-degradation ratio, the deformed-commutator sweep
with its oracle column, a self-validation suite, and the phase-noise
Monte-Carlo pipeline.  Runs are configured by a line-oriented typed
key-value file with one section per mode, overridable by command-line
flags; results are emitted as CSV tables with a metadata header plus a
gnuplot script per sweep.  Identical configuration and seed produce
byte-identical CSV output (excluding the timestamp header line).
"""

from __future__ import annotations

import argparse
import datetime
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import estimator, gaussian
from .environment import EnvironmentParams, fokker_planck_coefficients
from .errors import ConfigError, HolosimError
from .estimator import (
    Configuration,
    PhaseNoiseModel,
    classical_uncertainty,
    correlation_estimate,
    mixed_derivative_denominator,
    uncertainty_env_approx,
    uncertainty_env_full,
    uncertainty_modccr_analytic,
    uncertainty_modccr_fock,
)
from .fock import (
    CoherentInput,
    FockCutoff,
    PhaseConfig,
    SqueezeParams,
    build_twb,
    expectation,
    number_difference_moment,
)
from .gaussian import (
    QuadratureSpec,
    WignerMonomial,
    evolve,
    from_squeezing,
    glauber_moment,
    isserlis_moment,
)
from .modccr import (
    AuxiliaryModeMap,
    DeformationParams,
    closed_form_correction,
    deformed_commutator_check,
    duhamel_first_order,
    perturbation_generator_action,
)

VERSION = "0.1.0"
MODES = ("sweep-env-coupling", "sweep-env-squeezing", "sweep-modccr",
         "validate", "phase-mc")
FOCK_COLUMN_MAX_R = 1.2

_GRID_RE = re.compile(r"^(linspace|logspace)\(\s*([^,]+)\s*,\s*([^,]+)\s*,\s*([^)]+)\)$")


@dataclass(frozen=True)
class GridSpec:
    """Swept-parameter grid: span form (linspace/logspace) or explicit list."""

    values: tuple

    @classmethod
    def from_span(cls, scale: str, start: float, stop: float,
                  points: int) -> "GridSpec":
        if points < 2:
            raise ConfigError(f"grid needs at least 2 points, got {points}")
        if not stop > start:
            raise ConfigError(f"grid needs stop > start, got [{start}, {stop}]")
        if scale == "logspace":
            if start <= 0.0:
                raise ConfigError("logspace grids need start > 0")
            vals = np.geomspace(start, stop, points)
        else:
            vals = np.linspace(start, stop, points)
        return cls(tuple(float(v) for v in vals))


@dataclass
class RunConfig:
    """Resolved parameters of one run; every field is echoed to the output."""

    mode: str
    seed: int = 1234
    cutoff: int = None
    out: str = None
    r: float = None
    mu: float = None
    m_values: tuple = None
    epsilon_values: tuple = None
    lambda_tau: float = None
    lambda_tau_grid: GridSpec = None
    r_grid: GridSpec = None
    sigma1: float = None
    sigma2: float = None
    rho: float = None
    samples: int = None
    h: float = None
    fault: str = None

    def echo(self) -> dict:
        items = {}
        for key, val in vars(self).items():
            if val is None or key == "out":
                continue
            if isinstance(val, GridSpec):
                items[key] = "grid[" + ";".join(repr(v) for v in val.values) + "]"
            elif isinstance(val, tuple):
                items[key] = ";".join(repr(v) for v in val)
            else:
                items[key] = str(val)
        return items


_DEFAULTS = {
    "sweep-env-coupling": dict(
        r=2.0, mu=1.0, m_values=(0.0, 0.5, 1.0, 2.0),
        lambda_tau_grid=GridSpec.from_span("logspace", 1e-6, 1e-2, 25)),
    "sweep-env-squeezing": dict(
        lambda_tau=1e-3, mu=1.0, m_values=(0.0, 0.5, 1.0, 2.0),
        r_grid=GridSpec.from_span("linspace", 0.25, 3.0, 56)),
    "sweep-modccr": dict(
        epsilon_values=(0.01, 0.05, 0.1), cutoff=64,
        r_grid=GridSpec.from_span("linspace", 0.25, 3.0, 56)),
    "validate": dict(cutoff=60),
    "phase-mc": dict(
        r=0.6, mu=0.8, sigma1=1e-2, sigma2=1e-2, rho=0.5,
        samples=100000, cutoff=16, h=1e-3),
}

_FIELD_PARSERS = {
    "seed": "int", "cutoff": "int", "samples": "int",
    "r": "float", "mu": "float", "lambda_tau": "float",
    "sigma1": "float", "sigma2": "float", "rho": "float", "h": "float",
    "m_values": "float_list", "epsilon_values": "float_list",
    "lambda_tau_grid": "grid", "r_grid": "grid",
    "out": "str", "fault": "str",
}

_MODE_KEYS = {
    "sweep-env-coupling": ("r", "mu", "m_values", "lambda_tau_grid",
                           "seed", "cutoff", "out"),
    "sweep-env-squeezing": ("lambda_tau", "mu", "m_values", "r_grid",
                            "seed", "cutoff", "out"),
    "sweep-modccr": ("epsilon_values", "r_grid", "seed", "cutoff", "out"),
    "validate": ("seed", "cutoff", "fault", "out"),
    "phase-mc": ("r", "mu", "sigma1", "sigma2", "rho", "samples", "h",
                 "seed", "cutoff", "out"),
}


def _parse_value(kind: str, raw: str, line_no: int):
    def fail(message):
        raise ConfigError(f"line {line_no}: {message}")

    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "float_list":
            return tuple(float(p) for p in raw.split(","))
        if kind == "str":
            return raw
        if kind == "grid":
            match = _GRID_RE.match(raw)
            if match:
                scale, a, b, n = match.groups()
                return GridSpec.from_span(scale, float(a), float(b), int(n))
            values = tuple(float(p) for p in raw.split(","))
            if len(values) < 2:
                fail(f"grid needs at least 2 points, got {raw!r}")
            return GridSpec(values)
    except ConfigError as exc:
        fail(str(exc).split(": ", 1)[-1])
    except ValueError:
        fail(f"cannot parse {raw!r} as {kind}")
    fail(f"unknown field kind {kind!r}")


def parse_config_file(path: str, mode: str) -> dict:
    """Parse the [mode] section of a typed key-value config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    section = None
    found = {}
    for line_no, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        if text.startswith("[") and text.endswith("]"):
            section = text[1:-1].strip()
            if section not in MODES:
                raise ConfigError(f"line {line_no}: unknown section [{section}]")
            continue
        if "=" not in text:
            raise ConfigError(f"line {line_no}: expected key = value, got {text!r}")
        if section is None:
            raise ConfigError(f"line {line_no}: key outside any [section]")
        if section != mode:
            continue
        key, raw = (part.strip() for part in text.split("=", 1))
        if key not in _MODE_KEYS[mode]:
            raise ConfigError(
                f"line {line_no}: unknown key {key!r} for [{mode}] "
                f"(expected one of {', '.join(_MODE_KEYS[mode])})")
        found[key] = _parse_value(_FIELD_PARSERS[key], raw, line_no)
    return found


def resolve_config(mode: str, file_values: dict, overrides: dict) -> RunConfig:
    cfg = RunConfig(mode=mode)
    for key, val in _DEFAULTS[mode].items():
        setattr(cfg, key, val)
    for key, val in file_values.items():
        setattr(cfg, key, val)
    for key, val in overrides.items():
        if val is not None:
            setattr(cfg, key, val)
    return cfg


# ---------------------------------------------------------------------------
# Result container and CSV emission.
# ---------------------------------------------------------------------------

@dataclass
class SweepResult:
    """Rows plus full metadata echo; renders to CSV and a gnuplot script."""

    metadata: dict
    columns: tuple
    rows: list
    gnuplot: str = None

    def to_csv(self) -> str:
        lines = [f"# {key}={value}" for key, value in self.metadata.items()]
        lines.append(",".join(self.columns))
        for row in self.rows:
            lines.append(",".join(
                repr(v) if isinstance(v, float) else str(v) for v in row))
        return "\n".join(lines) + "\n"


def _metadata(config: RunConfig, backend_note: str) -> dict:
    meta = {"tool": "holosim", "version": VERSION, "mode": config.mode,
            "generated_at": datetime.datetime.now(datetime.timezone.utc)
            .isoformat(timespec="seconds")}
    meta.update(sorted(config.echo().items()))
    meta["backend"] = backend_note
    return meta


def _parallel_rows(evaluate, points):
    workers = estimator._worker_count()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(evaluate, points))


# ---------------------------------------------------------------------------
# Sweep runners.
# ---------------------------------------------------------------------------

def run_sweep_env_coupling(config: RunConfig) -> SweepResult:
    points = [(lt, m) for lt in config.lambda_tau_grid.values
              for m in config.m_values]

    def evaluate(point):
        lt, m = point
        full = uncertainty_env_full(config.r, m, lt, config.mu)
        approx = uncertainty_env_approx(config.r, m, lt)
        quotient = full.ratio / approx.ratio if approx.ratio > 0.0 else float("nan")
        return (lt, m, full.ratio, approx.ratio, quotient,
                full.backend.value, approx.backend.value)

    rows = _parallel_rows(evaluate, points)
    columns = ("lambda_tau", "M", "ratio_full", "ratio_approx",
               "full_over_approx", "backend_full", "backend_approx")
    gnuplot = _series_plot_script(
        csv_basename(config), "lambda_tau", "ratio_full", 1, 3, 2,
        config.m_values, "M", logx=True)
    return SweepResult(_metadata(config, "gaussian_full+gaussian_approx"),
                       columns, rows, gnuplot)


def run_sweep_env_squeezing(config: RunConfig) -> SweepResult:
    points = [(r, m) for r in config.r_grid.values for m in config.m_values]

    def evaluate(point):
        r, m = point
        full = uncertainty_env_full(r, m, config.lambda_tau, config.mu)
        approx = uncertainty_env_approx(r, m, config.lambda_tau)
        return (r, m, full.ratio, approx.ratio,
                full.backend.value, approx.backend.value)

    raw = _parallel_rows(evaluate, points)
    # Monotone-decrease diagnostic along the r grid (asserted for r >= 0.5).
    previous = {}
    rows = []
    for r, m, full, approx, bf, ba in raw:
        flag = 1
        if r >= 0.5 and m in previous and not full < previous[m]:
            flag = 0
        previous[m] = full
        rows.append((r, m, full, approx, flag, bf, ba))
    columns = ("r", "M", "ratio_full", "ratio_approx",
               "monotone_decreasing", "backend_full", "backend_approx")
    gnuplot = _series_plot_script(
        csv_basename(config), "r", "ratio_full", 1, 3, 2,
        config.m_values, "M", logy=True)
    return SweepResult(_metadata(config, "gaussian_full+gaussian_approx"),
                       columns, rows, gnuplot)


def run_sweep_modccr(config: RunConfig) -> SweepResult:
    cutoff = FockCutoff(config.cutoff)
    points = [(r, eps) for r in config.r_grid.values
              for eps in config.epsilon_values]

    def evaluate(point):
        r, eps = point
        analytic = uncertainty_modccr_analytic(r, eps)
        if r <= FOCK_COLUMN_MAX_R and abs(eps) <= 0.1:
            oracle = uncertainty_modccr_fock(DeformationParams(eps, r), cutoff)
            fock_val = oracle.ratio
            rel_dev = abs(fock_val - analytic.ratio) / analytic.ratio
            fock_backend = oracle.backend.value
        else:
            fock_val, rel_dev, fock_backend = float("nan"), float("nan"), "none"
        return (r, eps, analytic.ratio, fock_val, rel_dev,
                analytic.backend.value, fock_backend)

    rows = _parallel_rows(evaluate, points)
    columns = ("r", "epsilon", "ratio_analytic", "ratio_fock",
               "relative_deviation", "backend_analytic", "backend_fock")
    gnuplot = _series_plot_script(
        csv_basename(config), "r", "ratio_analytic", 1, 3, 2,
        config.epsilon_values, "epsilon", logy=True)
    return SweepResult(_metadata(config, "analytic_modccr+fock_oracle"),
                       columns, rows, gnuplot)


def run_phase_mc(config: RunConfig) -> SweepResult:
    cutoff = FockCutoff(config.cutoff)
    state = estimator.four_mode_input(
        SqueezeParams(config.r), CoherentInput(config.mu), cutoff)
    noise = PhaseNoiseModel(config.sigma1, config.sigma2, config.rho,
                            Configuration.PARALLEL)
    quad = estimator.paired_phase_average(noise, state, config.samples,
                                          config.seed, power=2)
    quartic = estimator.paired_phase_average(noise, state, config.samples,
                                             config.seed, power=4)
    denom = mixed_derivative_denominator(state, PhaseConfig(0.0, 0.0),
                                         h=config.h)
    covariance = correlation_estimate(quad.mean_par, quad.mean_perp, denom)
    covariance_se = quad.se_diff / abs(denom)
    injected = config.rho * config.sigma1 * config.sigma2
    variance_par = max(quartic.mean_par - quad.mean_par ** 2, 0.0)
    delta_e = math.sqrt(2.0 * variance_par) / abs(denom)
    delta_e_cl = classical_uncertainty(config.mu)
    columns = ("samples", "e_par", "se_par", "e_perp", "se_perp",
               "denominator", "covariance_recovered", "covariance_se",
               "covariance_injected", "delta_e", "delta_e_cl", "ratio")
    row = (config.samples, quad.mean_par, quad.se_par, quad.mean_perp,
           quad.se_perp, denom, covariance, covariance_se, injected,
           delta_e, delta_e_cl, delta_e / delta_e_cl)
    return SweepResult(_metadata(config, "fock_oracle"), columns, [row])


# ---------------------------------------------------------------------------
# Validation suite.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    observed: float
    tolerance: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"check={self.name} status={status} observed={self.observed!r} "
                f"tolerance={self.tolerance!r}")


def _check(name, observed, tolerance) -> CheckResult:
    return CheckResult(name, bool(observed <= tolerance),
                       float(observed), float(tolerance))


def run_validate(config: RunConfig) -> tuple:
    """Run the cross-module consistency suite; returns (exit_code, checks).

    The optional fault injection (``fault = relaxation_sign_flip``) flips
    the sign of the width-relaxation asymptote inside the checks that
    exercise the evolution law, serving as a negative control: it must
    flip at least one check to FAIL.
    """
    checks = []
    faulty = config.fault == "relaxation_sign_flip"
    if config.fault not in (None, "", "none", "relaxation_sign_flip"):
        raise ConfigError(f"unknown fault {config.fault!r}")

    def evolve_fn(state, env, t):
        if not faulty:
            return evolve(state, env, t)
        # Negative control: relax the widths with the wrong exponent sign.
        decay = math.exp(-env.lam * t)
        asym = 0.5 * (env.M + 0.5) * (1.0 - decay)
        return gaussian.TwoModeGaussianState(
            asym + state.sigma_plus / decay, asym + state.sigma_minus / decay)

    # 1. Twin-beam mean occupation against the closed form.
    twb = build_twb(SqueezeParams(0.8), FockCutoff(config.cutoff))
    mean_n = expectation(twb, ((0, True), (0, False))).real
    checks.append(_check("twb_mean_occupation",
                         abs(mean_n - math.sinh(0.8) ** 2), 1e-9))

    # 2. Occupation-basis oracle vs Gaussian factorization at t=0.
    state0 = from_squeezing(SqueezeParams(0.8))
    dev = 0.0
    for mono in estimator.required_monomials():
        oracle = expectation(twb, gaussian.as_ladder_sequence(mono))
        analytic = isserlis_moment(state0, mono)
        dev = max(dev, abs(oracle - analytic) / max(1.0, abs(analytic)))
    checks.append(_check("oracle_vs_isserlis_t0", dev, 1e-8))

    # 3. Quadrature backend vs factorization on an evolved state.
    env = EnvironmentParams(lam=1.0, M=0.5)
    evolved = evolve_fn(state0, env, 0.1)
    dev = 0.0
    for mono in (WignerMonomial(1, 1, 0, 0), WignerMonomial(0, 1, 0, 1),
                 WignerMonomial(1, 1, 1, 1), WignerMonomial(2, 2, 0, 0)):
        quad_val = glauber_moment(evolved, mono, QuadratureSpec(48))
        wick_val = isserlis_moment(evolved, mono)
        dev = max(dev, abs(quad_val - wick_val) / max(1.0, abs(wick_val)))
    checks.append(_check("glauber_vs_isserlis", dev, 1e-8))

    # 4. Null moments of the twin-beam number difference.
    dev = max(abs(number_difference_moment(twb, p)) for p in (1, 2, 3, 4))
    checks.append(_check("twb_null_difference_moments", dev, 1e-10))

    # 5. Forward composition law of the evolution.
    one = evolve_fn(evolve_fn(state0, env, 0.3), env, 1.1)
    two = evolve_fn(state0, env, 1.4)
    dev = max(abs(one.sigma_plus - two.sigma_plus),
              abs(one.sigma_minus - two.sigma_minus))
    checks.append(_check("evolution_semigroup", dev, 1e-12))

    # 6. Drift/diffusion consistency of the width relaxation at t=0.
    lam, m_th = 1.0, 0.5
    envb = EnvironmentParams(lam=lam, M=m_th)
    drift, diffusion = fokker_planck_coefficients(envb)
    dt = 1e-6 / lam
    stepped = evolve_fn(state0, envb, dt)
    dev = 0.0
    for before, after in ((state0.sigma_plus, stepped.sigma_plus),
                          (state0.sigma_minus, stepped.sigma_minus)):
        observed_rate = (after - before) / dt
        predicted = -2.0 * drift * before + diffusion / 2.0
        dev = max(dev, abs(observed_rate - predicted) / abs(predicted))
    checks.append(_check("width_relaxation_rate", dev, 1e-5))

    # 7. Deformed commutators on the guarded subspace.
    report = deformed_commutator_check(AuxiliaryModeMap.from_epsilon(0.1),
                                       FockCutoff(20))
    checks.append(_check("deformed_commutators", report.max_deviation, 1e-10))

    # 8. Duhamel integral vs its closed-form collapse.
    cut = FockCutoff(80)
    via_integral = duhamel_first_order(
        0.8, perturbation_generator_action(0.8, cut), cut)
    closed = closed_form_correction(0.8, cut)
    dev = float(np.linalg.norm(
        via_integral.amplitudes - closed.amplitudes))
    checks.append(_check("duhamel_closed_form", dev, 1e-8))

    # 9. Widths relax monotonically toward the thermal asymptote.
    target = 0.5 * (envb.M + 0.5)
    times = np.linspace(0.0, 3.0, 13)
    gaps_p, gaps_m = [], []
    for t in times:
        ev = evolve_fn(state0, envb, float(t))
        gaps_p.append(abs(ev.sigma_plus - target))
        gaps_m.append(abs(ev.sigma_minus - target))
    monotone = (all(b <= a + 1e-12 for a, b in zip(gaps_p, gaps_p[1:]))
                and all(b <= a + 1e-12 for a, b in zip(gaps_m, gaps_m[1:])))
    checks.append(_check("width_relaxation_monotone", 0.0 if monotone else 1.0,
                         0.0))

    # 10. Full ratio approaches the closed-form ratio at weak coupling.
    full = uncertainty_env_full(2.0, 0.5, 1e-4)
    approx = uncertainty_env_approx(2.0, 0.5, 1e-4)
    checks.append(_check("env_full_vs_approx",
                         abs(full.ratio / approx.ratio - 1.0), 0.02))

    exit_code = 0 if all(c.passed for c in checks) else 1
    return exit_code, checks


# ---------------------------------------------------------------------------
# gnuplot script emission.
# ---------------------------------------------------------------------------

def csv_basename(config: RunConfig) -> str:
    return os.path.basename(config.out) if config.out else "output.csv"


def _series_plot_script(csv_name, xlabel, ylabel, xcol, ycol, series_col,
                        series_values, series_name, logx=False, logy=False):
    lines = [
        f"# gnuplot script for {csv_name}",
        'set datafile separator ","',
        'set datafile missing "nan"',
        "set key autotitle columnhead",
        f'set xlabel "{xlabel}"',
        f'set ylabel "{ylabel}"',
        "set key left top",
    ]
    if logx:
        lines.append("set logscale x")
    if logy:
        lines.append("set logscale y")
    plots = []
    for value in series_values:
        cond = f"(${series_col}=={value!r} ? ${ycol} : 1/0)"
        plots.append(f'"{csv_name}" using {xcol}:{cond} with lines '
                     f'title "{series_name}={value!r}"')
    lines.append("plot \\\n  " + ", \\\n  ".join(plots))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Entry point.
# ---------------------------------------------------------------------------

_RUNNERS = {
    "sweep-env-coupling": run_sweep_env_coupling,
    "sweep-env-squeezing": run_sweep_env_squeezing,
    "sweep-modccr": run_sweep_modccr,
    "phase-mc": run_phase_mc,
}


def _emit(result: SweepResult, config: RunConfig) -> None:
    text = result.to_csv()
    if config.out:
        with open(config.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        if result.gnuplot:
            script_path = os.path.splitext(config.out)[0] + ".gnuplot"
            with open(script_path, "w", encoding="utf-8") as fh:
                fh.write(result.gnuplot)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="holosim",
        description="Twin-beam interferometer-pair uncertainty sweeps")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--config", help="typed key-value config file")
        p.add_argument("--out", help="output CSV (or report) path")
        p.add_argument("--seed", type=int, help="override random seed")
        p.add_argument("--cutoff", type=int, help="override occupation cutoff")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        file_values = (parse_config_file(args.config, args.mode)
                       if args.config else {})
        overrides = {"seed": args.seed, "cutoff": args.cutoff, "out": args.out}
        config = resolve_config(args.mode, file_values, overrides)
        if config.mode == "validate":
            exit_code, checks = run_validate(config)
            lines = [c.line() for c in checks]
            passed = sum(c.passed for c in checks)
            lines.append(f"validate: {passed}/{len(checks)} checks passed")
            report = "\n".join(lines) + "\n"
            if config.out:
                with open(config.out, "w", encoding="utf-8") as fh:
                    fh.write(report)
            sys.stdout.write(report)
            return exit_code
        result = _RUNNERS[config.mode](config)
        _emit(result, config)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except HolosimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
