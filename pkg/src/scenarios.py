"""
Scenario registry and config validation.

Each scenario reads an OmegaConf config, computes its tables in memory and
hands them back to the runner, which writes CSVs only once every table is
complete.

"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from omegaconf import OmegaConf
from tqdm import tqdm

from src.estimators import (
    ENUMERATION_CAP,
    ESTIMATOR_KINDS,
    css_uncertainties,
    exact_outcome_stats,
    ghz_probabilities,
    limiting_ratio_curve,
    monte_carlo_stats,
    ratio_uncertainty_ghz,
    ratio_uncertainty_moments,
    std_uncertainty_ghz,
)
from src.exactsim import MAX_QUBITS, CollectiveSpinOps, build_state, evolve
from src.noise import DynamicCoefficients, LatticeGeometry, NoiseParams, short_time_coefficients
from src.oat import oat_ratio_uncertainty, optimal_angles, series_coefficients
from src.optimize import (
    GHZ_PRINTED_PREFACTOR,
    SWEEP_KINDS,
    css_optimum_numeric,
    f_n_analytic,
    f_n_direct,
    f_n_polygamma,
    ghz_optimum_analytic,
    ghz_x0_analytic,
    minimize_1d,
    oat_optimal_time,
    oat_optimal_uncertainty,
    oat_optimum_numeric,
    oat_x0_analytic,
    oat_x0_printed,
    oat_zeno_printed_prefactor,
    sweep_and_fit,
)
from src.utils import OPTIMUM_COLUMNS

LEVELS = ("error", "warning", "info")
# short-time forms are expansions in omega_c * tau
SHORT_TIME_LIMIT = 0.3
STATES = ("GHZ", "CSS", "OAT")


@dataclass(frozen=True)
class Diagnostic:
    level: str
    message: str

    def __post_init__(self):
        assert self.level in LEVELS, f"[!] unknown diagnostic level {self.level}"


@dataclass(frozen=True)
class PlotSpec:
    x: str
    ys: tuple
    group: str | None = None
    logx: bool = False
    logy: bool = False


@dataclass
class Table:
    name: str
    columns: tuple
    rows: list = field(default_factory=list)
    plot: PlotSpec | None = None

    def add(self, *row):
        assert len(row) == len(self.columns), f"[!] {self.name}: row has {len(row)} cells"
        self.rows.append(row)


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    run: Callable
    sweep: bool = False


# --------------------------------------------------------------------------
# config access


def _get(cfg, key, default=None):
    return OmegaConf.select(cfg, key, default=default)


def noise_params(cfg):
    return NoiseParams(
        alpha=float(cfg.noise.alpha),
        s=float(cfg.noise.s),
        omega_c=float(cfg.noise.omega_c),
        v=float(_get(cfg, "noise.v", 1.0)),
    )


def _linspace(cfg, prefix):
    return np.linspace(float(_get(cfg, f"grid.{prefix}_min")), float(_get(cfg, f"grid.{prefix}_max")), int(cfg.grid.points))


def _tau_grid(cfg):
    return np.geomspace(float(cfg.grid.tau_min), float(cfg.grid.tau_max), int(cfg.grid.tau_points))


def _progress():
    return logging.getLogger().isEnabledFor(logging.INFO)


def _outcome_stats(estimator, probs, cfg, n, tau, gamma_assumed=0.0):
    nu = int(cfg.estimation.nu)
    if nu <= ENUMERATION_CAP:
        return exact_outcome_stats(estimator, probs, nu, n, tau, gamma_assumed)
    shots = int(_get(cfg, "estimation.shots", 20000))
    return monte_carlo_stats(estimator, probs, nu, shots, int(cfg.seed), n, tau, gamma_assumed)


def _ghz_decay(tau, geom: LatticeGeometry, p: NoiseParams):
    return (p.omega_c * tau) ** 2 * f_n_direct(geom.n_qubits, geom.spacing, p)


def _optimum_row(s, state, record, p: NoiseParams):
    row = (
        record.n_qubits,
        record.x0_opt * p.omega_c / p.v,
        record.tau_opt * p.omega_c,
        record.delta_b_opt / p.omega_c,
        record.method,
    )
    return (s, state) + row


# --------------------------------------------------------------------------
# scenarios


def run_bias(cfg, threads=None):
    """Standard GHZ estimator: exact mean and spread over the injectivity window, per decay."""
    p = noise_params(cfg)
    n = int(cfg.geometry.n_qubits)
    tau = float(cfg.grid.tau)
    nu = int(cfg.estimation.nu)
    T = nu * tau
    gamma_assumed = float(_get(cfg, "estimation.gamma_assumed", 0.0))
    heisenberg = 1.0 / (n * math.sqrt(T * tau))

    table = Table(
        "bias",
        (
            "gamma",
            "phase[rad]",
            "b[omega_c]",
            "mean_b[omega_c]",
            "bias[omega_c]",
            "delta_b[omega_c]",
            "delta_b_propagated[omega_c]",
            "delta_b_heisenberg[omega_c]",
            "defined_fraction",
        ),
        plot=PlotSpec("phase[rad]", ("bias[omega_c]",), group="gamma"),
    )
    phases = _linspace(cfg, "phase")
    for gamma in cfg.estimation.gammas:
        gamma = float(gamma)
        for phase in tqdm(phases, desc=f"bias, gamma={gamma:g}", disable=not _progress()):
            b = phase / (n * tau)
            stats = _outcome_stats("standard", ghz_probabilities(b, tau, n, gamma), cfg, n, tau, gamma_assumed)
            try:
                propagated = std_uncertainty_ghz(b, tau, n, gamma, T) / p.omega_c
            except ValueError:
                propagated = None
            table.add(
                gamma,
                phase,
                b / p.omega_c,
                stats.mean / p.omega_c,
                (stats.mean - b) / p.omega_c,
                stats.std / p.omega_c,
                propagated,
                heisenberg / p.omega_c,
                stats.defined_fraction,
            )
    return [table]


def run_ratio_collective(cfg, threads=None):
    """Ratio estimator under collective noise: mean against b per decay, and spread against tau."""
    p = noise_params(cfg)
    geom = LatticeGeometry(int(cfg.geometry.n_qubits), float(_get(cfg, "geometry.spacing", 0.0)))
    n = geom.n_qubits
    nu = int(cfg.estimation.nu)

    mean_table = Table(
        "ratio_mean",
        ("gamma", "phase[rad]", "b[omega_c]", "mean_b[omega_c]", "limiting_b[omega_c]", "defined_fraction"),
        plot=PlotSpec("phase[rad]", ("mean_b[omega_c]",), group="gamma"),
    )
    tau = float(cfg.grid.tau)
    for gamma in cfg.estimation.gammas:
        gamma = float(gamma)
        for phase in tqdm(_linspace(cfg, "phase"), desc=f"ratio mean, gamma={gamma:g}", disable=not _progress()):
            b = phase / (n * tau)
            stats = _outcome_stats("ratio", ghz_probabilities(b, tau, n, gamma), cfg, n, tau)
            mean_table.add(
                gamma,
                phase,
                b / p.omega_c,
                stats.mean / p.omega_c,
                limiting_ratio_curve(b, n, tau) / p.omega_c,
                stats.defined_fraction,
            )

    spread_table = Table(
        "ratio_uncertainty",
        ("tau[1/omega_c]", "gamma", "delta_b_exact[omega_c]", "delta_b_analytic[omega_c]"),
        plot=PlotSpec("tau[1/omega_c]", ("delta_b_exact[omega_c]", "delta_b_analytic[omega_c]"), logx=True, logy=True),
    )
    for tau in tqdm(_tau_grid(cfg), desc="ratio uncertainty", disable=not _progress()):
        gamma = _ghz_decay(tau, geom, p)
        b = math.pi / (4.0 * n * tau)
        stats = _outcome_stats("ratio", ghz_probabilities(b, tau, n, gamma), cfg, n, tau)
        analytic = ratio_uncertainty_ghz(b, tau, n, gamma, nu * tau)
        spread_table.add(tau * p.omega_c, gamma, stats.std / p.omega_c, analytic / p.omega_c)
    return [mean_table, spread_table]


def _collective_curves(p: NoiseParams, n, tau, T):
    gamma = (n * p.omega_c * tau) ** 2 * p.kappa0_sq
    ghz_standard = std_uncertainty_ghz(math.pi / (2.0 * n * tau), tau, n, gamma, 2.0 * T)
    ghz_ratio = ratio_uncertainty_ghz(math.pi / (4.0 * n * tau), tau, n, gamma, T)
    css_ratio, css_standard = css_uncertainties(tau, n, p.kappa0_sq * (p.omega_c * tau) ** 2, 0.0, T)
    return gamma, ghz_standard, ghz_ratio, css_ratio, css_standard


def run_collective_compare(cfg, threads=None):
    """GHZ and CSS under collective noise, standard estimator at 2T against the ratio estimator at T."""
    p = noise_params(cfg)
    n = int(cfg.geometry.n_qubits)
    T = float(cfg.estimation.T_total)
    curve_cols = ("ghz_standard[omega_c]", "ghz_ratio[omega_c]", "css_ratio[omega_c]", "css_standard[omega_c]")

    curves = Table(
        "collective",
        ("tau[1/omega_c]", "gamma_ghz") + curve_cols,
        plot=PlotSpec("tau[1/omega_c]", curve_cols, logx=True, logy=True),
    )
    for tau in _tau_grid(cfg):
        gamma, *values = _collective_curves(p, n, tau, T)
        curves.add(tau * p.omega_c, gamma, *[v / p.omega_c for v in values])

    optima = Table(
        "collective_optima",
        ("N", "state", "estimator", "tau_opt[1/omega_c]", "delta_b_opt[omega_c]"),
        plot=PlotSpec("N", ("delta_b_opt[omega_c]",), group="estimator", logx=True, logy=True),
    )
    scale = 1.0 / (p.omega_c * math.sqrt(p.kappa0_sq))
    for n in tqdm(cfg.geometry.n_list, desc="collective optima", disable=not _progress()):
        n = int(n)
        # curve index, and the optimal-time scale: 1/N for GHZ, 1/sqrt(N) for CSS
        for state, estimator, index, t_n in (
            ("GHZ", "standard", 1, scale / n),
            ("GHZ", "ratio", 2, scale / n),
            ("CSS", "standard", 4, scale / math.sqrt(n)),
        ):

            def f(tau, index=index):
                return _collective_curves(p, n, tau, T)[index]

            tau, value = minimize_1d(f, (1e-3 * t_n, 1e1 * t_n), tol=1e-10, log=True)
            optima.add(n, state, estimator, tau * p.omega_c, value / p.omega_c)
        css = css_optimum_numeric(n, p, T)
        optima.add(n, "CSS", "ratio", css.tau_opt * p.omega_c, css.delta_b_opt / p.omega_c)
    return [curves, optima]


FIT_COLUMNS = ("s", "state", "exponent", "prefactor[sqrt(omega_c/T)]", "r_squared", "n_min", "printed_prefactor")


def _printed_prefactor(state, p: NoiseParams):
    if state == "GHZ":
        return GHZ_PRINTED_PREFACTOR
    if state == "OAT":
        return oat_zeno_printed_prefactor(p)
    return None


def _scaling_tables(cfg, s_values, threads):
    base = noise_params(cfg)
    T = float(cfg.estimation.T_total)
    n_list = [int(n) for n in cfg.geometry.n_list]
    curvature_tol = _get(cfg, "grid.curvature_tol")
    analytic = bool(_get(cfg, "estimation.analytic", True))

    optima = Table(
        "optima",
        ("s", "state") + OPTIMUM_COLUMNS,
        plot=PlotSpec("N", ("delta_b_opt[omega_c]",), group="state", logx=True, logy=True),
    )
    fits = Table("fits", FIT_COLUMNS)
    for s in s_values:
        p = replace(base, s=float(s))
        for state in cfg.estimation.states:
            records, fit = sweep_and_fit(state, n_list, p, T, threads, curvature_tol, progress=_progress())
            for record in records:
                optima.add(*_optimum_row(p.s, state, record, p))
            if state == "GHZ" and analytic:
                for n in n_list:
                    optima.add(*_optimum_row(p.s, state, ghz_optimum_analytic(n, p, T), p))
            fits.add(
                p.s,
                state,
                fit.exponent,
                fit.prefactor * math.sqrt(T / p.omega_c),
                fit.r_squared,
                fit.n_min,
                _printed_prefactor(state, p),
            )
    return [optima, fits]


def run_lattice_scaling(cfg, threads=None):
    """Numeric (tau, x0) optima against N with the scaling fit per state."""
    return _scaling_tables(cfg, [float(cfg.noise.s)], threads)


def run_ohmicity(cfg, threads=None):
    """The lattice scaling repeated over Ohmicities."""
    tables = _scaling_tables(cfg, list(cfg.noise.s_values), threads)
    for table in tables:
        table.name = f"ohmicity_{table.name}"
    return tables


def run_spatial_function(cfg, threads=None):
    """F_N(x0) by direct sum, Polygamma series and analytic approximation, and its minimizer."""
    p = noise_params(cfg)
    x0s = _linspace(cfg, "x0")
    to_scaled = p.omega_c / p.v

    curves = Table(
        "spatial_function",
        ("N", "x0[v/omega_c]", "F_direct", "F_polygamma", "F_analytic"),
        plot=PlotSpec("x0[v/omega_c]", ("F_direct",), group="N", logy=True),
    )
    optima = Table(
        "spatial_optima",
        ("N", "x0_direct[v/omega_c]", "F_min", "x0_analytic[v/omega_c]", "x0_lambert[v/omega_c]"),
        plot=PlotSpec("N", ("x0_direct[v/omega_c]", "x0_analytic[v/omega_c]", "x0_lambert[v/omega_c]"), logx=True),
    )
    for n in tqdm(cfg.geometry.n_list, desc="spatial function", disable=not _progress()):
        n = int(n)
        for x0 in x0s:
            poly = f_n_polygamma(n, x0, p) if p.s == 3 else None
            f_analytic = f_n_analytic(n, x0, p) if p.s > 1 else None
            curves.add(n, x0 * to_scaled, f_n_direct(n, x0, p), poly, f_analytic)
        x0_min, f_min = minimize_1d(lambda x: f_n_direct(n, x, p), (x0s[0], x0s[-1]), tol=1e-9)
        if n >= 2:
            analytic, lambert = ghz_x0_analytic(n), ghz_x0_analytic(n, exact=True)
        else:
            analytic = lambert = None
        optima.add(n, x0_min * to_scaled, f_min, analytic, lambert)
    return [curves, optima]


def _exact_oat_uncertainty(tau, geom, p, angles, T, classical):
    coeffs = short_time_coefficients(tau, geom, p)
    if classical:
        coeffs = DynamicCoefficients(coeffs.time, coeffs.kappa, np.zeros_like(coeffs.kappa))
    rho = build_state("OAT", geom.n_qubits, angles.theta, angles.beta)
    moments = CollectiveSpinOps(geom.n_qubits).moments(evolve(rho, 0.0, tau, coeffs))
    return ratio_uncertainty_moments(moments, tau, T)


def run_oat_x0(cfg, threads=None):
    """OAT ratio uncertainty against the lattice spacing at fixed N, optimized over tau per spacing."""
    p = noise_params(cfg)
    n = int(cfg.geometry.n_qubits)
    T = float(cfg.estimation.T_total)
    angles = optimal_angles(n)
    scale = 1.0 / (p.omega_c * math.sqrt(p.kappa0_sq))
    exact = bool(_get(cfg, "grid.exact_check", False)) and n <= MAX_QUBITS
    to_scaled = p.omega_c / p.v

    curve = Table(
        "oat_x0",
        (
            "x0[v/omega_c]",
            "tau_opt[1/omega_c]",
            "delta_b_moments[omega_c]",
            "tau_series[1/omega_c]",
            "delta_b_series[omega_c]",
            "delta_b_exact_classical[omega_c]",
            "delta_b_exact_quantum[omega_c]",
        ),
        plot=PlotSpec("x0[v/omega_c]", ("delta_b_moments[omega_c]", "delta_b_series[omega_c]")),
    )
    for x0 in tqdm(_linspace(cfg, "x0"), desc="OAT spacing", disable=not _progress()):
        geom = LatticeGeometry(n, float(x0))
        tau, value = minimize_1d(
            lambda t: oat_ratio_uncertainty(t, geom, p, angles, T), (0.01 * scale, 3.0 * scale), tol=1e-10, log=True
        )
        coeffs = series_coefficients(n, float(x0), p, angles)
        classical = quantum = None
        if exact:
            classical = _exact_oat_uncertainty(tau, geom, p, angles, T, True) / p.omega_c
            quantum = _exact_oat_uncertainty(tau, geom, p, angles, T, False) / p.omega_c
        curve.add(
            x0 * to_scaled,
            tau * p.omega_c,
            value / p.omega_c,
            oat_optimal_time(coeffs, p.omega_c) * p.omega_c,
            oat_optimal_uncertainty(coeffs, p.omega_c, T) / p.omega_c,
            classical,
            quantum,
        )

    record = oat_optimum_numeric(n, p, T, x0_bounds=(float(cfg.grid.x0_min), float(cfg.grid.x0_max)))
    summary = Table(
        "oat_x0_summary",
        ("N", "x0_numeric[v/omega_c]", "delta_b_min[omega_c]", "x0_analytic[v/omega_c]", "x0_printed[v/omega_c]"),
    )
    summary.add(n, record.x0_opt * to_scaled, record.delta_b_opt / p.omega_c, oat_x0_analytic(n), oat_x0_printed(n))
    return [curve, summary]


SCENARIOS = {
    s.name: s
    for s in (
        Scenario("fig1-bias", "standard GHZ estimator bias and spread under decay", run_bias),
        Scenario("fig2-ratio-collective", "ratio estimator mean and spread under collective noise", run_ratio_collective),
        Scenario("fig3-collective-compare", "GHZ and CSS estimators under collective noise", run_collective_compare, True),
        Scenario("fig4-lattice-scaling", "lattice optima and N scaling for GHZ and OAT", run_lattice_scaling, True),
        Scenario("fig5-ohmicity", "N scaling across Ohmicities", run_ohmicity, True),
        Scenario("fig6-spatial-function", "GHZ spatial function and its optimal spacing", run_spatial_function, True),
        Scenario("fig7-oat-x0", "OAT uncertainty against lattice spacing", run_oat_x0),
    )
}


def list_scenarios():
    return [(s.name, s.description) for s in SCENARIOS.values()]


def run_scenario(cfg, threads=None):
    """Compute every table of cfg.scenario; raises ValueError on unknown scenarios."""
    if cfg.scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {cfg.scenario!r}, expected one of {list(SCENARIOS)}")
    return SCENARIOS[cfg.scenario].run(cfg, threads)


# --------------------------------------------------------------------------
# validation


def _check_positive(cfg, key, out, allow_zero=False):
    value = _get(cfg, key)
    if value is None:
        return
    try:
        value = float(value)
    except (TypeError, ValueError):
        out.append(Diagnostic("error", f"{key} must be a number, got {value!r}"))
        return
    if value < 0 or (value == 0 and not allow_zero):
        bound = "non-negative" if allow_zero else "positive"
        out.append(Diagnostic("error", f"{key} must be {bound}, got {value}"))


def validate(cfg):
    """Diagnostics for cfg, most severe first; cfg is left untouched."""
    out = []
    name = _get(cfg, "scenario")
    if name not in SCENARIOS:
        out.append(Diagnostic("error", f"unknown scenario {name!r}, expected one of {list(SCENARIOS)}"))
        return out
    scenario = SCENARIOS[name]

    for key in ("noise.alpha", "noise.omega_c", "noise.v", "estimation.T_total", "estimation.nu"):
        _check_positive(cfg, key, out)
    for key in ("noise.s", "geometry.spacing"):
        _check_positive(cfg, key, out, allow_zero=True)
    sweep_s = list(_get(cfg, "noise.s_values") or [])
    s_values = sweep_s or [_get(cfg, "noise.s", 3.0)]
    if any(float(s) < 0 for s in s_values):
        out.append(Diagnostic("error", f"Ohmicities must be non-negative, got {s_values}"))
    if name == "fig5-ohmicity" and not sweep_s:
        out.append(Diagnostic("error", "noise.s_values is empty"))
    if any(float(s) == 0 for s in s_values):
        out.append(
            Diagnostic("info", "s = 0: delta1 reduces to 1 / (1 + x^2), evaluated in closed form; Polygamma columns are NA")
        )

    n = _get(cfg, "geometry.n_qubits")
    if n is not None and int(n) < 1:
        out.append(Diagnostic("error", f"geometry.n_qubits must be positive, got {n}"))
    if scenario.sweep:
        n_list = _get(cfg, "geometry.n_list")
        if n_list is None or len(n_list) == 0:
            out.append(Diagnostic("error", "empty sweep: geometry.n_list has no entries"))
        elif [int(v) for v in n_list] != sorted(int(v) for v in n_list) or min(int(v) for v in n_list) < 1:
            out.append(Diagnostic("error", f"geometry.n_list must be ascending positive integers, got {list(n_list)}"))

    estimator = _get(cfg, "estimation.estimator")
    if estimator is not None and estimator not in ESTIMATOR_KINDS:
        out.append(Diagnostic("error", f"unknown estimator {estimator!r}, expected one of {ESTIMATOR_KINDS}"))
    state = _get(cfg, "estimation.state")
    if state is not None and state not in STATES:
        out.append(Diagnostic("error", f"unknown state {state!r}, expected one of {STATES}"))
    for kind in _get(cfg, "estimation.states", []) or []:
        if kind not in SWEEP_KINDS:
            out.append(Diagnostic("error", f"unknown sweep state {kind!r}, expected one of {SWEEP_KINDS}"))
    if any(float(g) < 0 for g in _get(cfg, "estimation.gammas", []) or []):
        out.append(Diagnostic("error", "estimation.gammas must be non-negative"))

    nu = _get(cfg, "estimation.nu")
    if nu is not None and int(nu) > ENUMERATION_CAP:
        out.append(
            Diagnostic(
                "warning",
                f"nu = {nu}: exact ratio enumeration needs (nu + 1)^2 = {(int(nu) + 1) ** 2} terms, "
                f"above the cap nu = {ENUMERATION_CAP}; Monte Carlo with estimation.shots is used instead",
            )
        )

    omega_c = float(_get(cfg, "noise.omega_c", 1.0) or 1.0)
    taus = [t for t in (_get(cfg, "grid.tau"), _get(cfg, "grid.tau_max")) if t is not None]
    if taus and omega_c * max(float(t) for t in taus) > SHORT_TIME_LIMIT:
        out.append(
            Diagnostic(
                "warning",
                f"omega_c tau_max = {omega_c * max(float(t) for t in taus):.3g} > {SHORT_TIME_LIMIT}: "
                "short-time decay formulas are outside their regime",
            )
        )
    for prefix, strict in (("tau", True), ("x0", True), ("phase", False)):
        a, b = _get(cfg, f"grid.{prefix}_min"), _get(cfg, f"grid.{prefix}_max")
        if a is None or b is None:
            continue
        above = float(a) > 0 if strict else float(a) >= 0
        if not (above and float(a) < float(b)):
            bound = "0 <" if strict else "0 <="
            out.append(Diagnostic("error", f"grid.{prefix}_min, grid.{prefix}_max must satisfy {bound} min < max, got {a}, {b}"))

    if name == "fig7-oat-x0" and _get(cfg, "grid.exact_check", False) and n is not None and int(n) > MAX_QUBITS:
        out.append(Diagnostic("info", f"N = {n} > {MAX_QUBITS}: exact density-matrix columns are NA"))
    return sorted(out, key=lambda d: LEVELS.index(d.level))
