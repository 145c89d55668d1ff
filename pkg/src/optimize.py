"""
Optimal interrogation times and lattice spacings.

GHZ states: the spatial function F_N(x0) (direct sum, Polygamma series and
analytic approximation), its Lambert-W optimal spacing and the closed-form
time optimum of the ratio estimator. OAT states: the optimum of the time
expansion and the analytic spacing. Numeric 1D/2D minimizers and N sweeps
with power-law fits back both up.

"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import partial

import numpy as np
from joblib import Parallel, delayed
from scipy import optimize
from tqdm import tqdm

from src.estimators import css_uncertainties, ratio_uncertainty_ghz
from src.noise import LatticeGeometry, NoiseParams, delta1
from src.oat import ExpansionCoefficients, oat_ratio_uncertainty, optimal_angles
from src.specfun import gamma, lambert_w, polygamma

PHI_RATIO = 2.0 / (1.0 + math.sqrt(5.0))
# W0(-exp(-1/2) / 4), stationarity of the short-time ratio uncertainty
GHZ_LAMBERT_ARG = -math.exp(-0.5) / 4.0
SWEEP_KINDS = ("GHZ", "OAT", "CSS")
X0_BOUNDS = (0.2, 1.2)


@dataclass(frozen=True)
class OptimumRecord:
    n_qubits: int
    x0_opt: float
    tau_opt: float
    delta_b_opt: float
    method: str

    def __post_init__(self):
        if not self.delta_b_opt > 0:
            raise ValueError(f"delta_b_opt must be positive, got {self.delta_b_opt}")
        if not self.tau_opt > 0:
            raise ValueError(f"tau_opt must be positive, got {self.tau_opt}")
        if self.method not in ("numeric", "analytic"):
            raise ValueError(f"unknown optimum method {self.method!r}")

    def as_row(self):
        return (self.n_qubits, self.x0_opt, self.tau_opt, self.delta_b_opt, self.method)


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    prefactor: float
    r_squared: float
    n_min: int = 0

    def __post_init__(self):
        assert 0.0 <= self.r_squared <= 1.0 + 1e-12, f"[!] r_squared {self.r_squared} outside [0, 1]"


def _ghz_lambert_w():
    return lambert_w(0, GHZ_LAMBERT_ARG)


def ghz_printed_prefactor():
    w = _ghz_lambert_w()
    return math.sqrt(2.0) * (1.0 + 2.0 * w) ** 0.25 / math.sqrt(-w)


def ghz_prefactor():
    """Exact minimum of the short-time ratio uncertainty in units of sqrt(omega_c/T) F^(1/4) / N."""
    w = _ghz_lambert_w()
    return (1.0 + 2.0 * w) ** 0.25 / math.sqrt(-2.0 * w)


GHZ_PRINTED_PREFACTOR = ghz_printed_prefactor()


def oat_zeno_printed_prefactor(p: NoiseParams):
    return p.kappa0_sq**0.25 / math.sqrt(3.0)


OAT_ZENO_PRINTED_PREFACTOR = oat_zeno_printed_prefactor(NoiseParams())


# --------------------------------------------------------------------------
# GHZ spatial function


def _scaled_spacing(x0, p: NoiseParams):
    return x0 * p.omega_c / p.v


def f_n_direct(n_qubits, x0, p: NoiseParams):
    """F_N = kappa0^2 [N + 2 sum_{j=1}^{N-1} (N - j) delta1(j x0)]."""
    if n_qubits < 1:
        raise ValueError(f"N must be positive, got {n_qubits}")
    n = n_qubits
    j = np.arange(1, n, dtype=float)
    d = delta1(j * _scaled_spacing(x0, p), p.s) if x0 > 0 else np.ones_like(j)
    return p.kappa0_sq * (n + 2.0 * math.fsum((n - j) * d))


def f_n_polygamma(n_qubits, x0, p: NoiseParams):
    """
    F_N through Polygamma functions of c = i/x0, valid for s = 3:

        S_N = 2 x0^-4 Re[(N + c) A4 - A3]
        A4 = [psi3(1 + c) - psi3(N + c)] / 6,  A3 = -[psi2(1 + c) - psi2(N + c)] / 2
    """
    if p.s != 3:
        raise ValueError(f"the Polygamma series is derived for s = 3, got s = {p.s}")
    if not x0 > 0:
        raise ValueError(f"x0 must be positive, got {x0}")
    n = n_qubits
    if n == 1:
        return p.kappa0_sq
    x = _scaled_spacing(x0, p)
    c = 1j / x
    a4 = (polygamma(3, 1 + c) - polygamma(3, n + c)) / 6.0
    a3 = -0.5 * (polygamma(2, 1 + c) - polygamma(2, n + c))
    s_n = 2.0 / x**4 * ((n + c) * a4 - a3).real
    return p.kappa0_sq * (n + s_n)


def f_n_analytic(n_qubits, x0, p: NoiseParams | None = None):
    """
    Small-spacing approximation of F_N: one image of the lattice sum plus the
    edge term.

    Without noise parameters, the s = 3 spatial part
    (1/6)[16 N v^4 e^(-2v) + 2 v^2 / pi^2] with v = pi/x0. With them,
    kappa0^2 [N (2v)^(s+1) e^(-2v) / Gamma(s+1) + 2 / (s (s-1) x0^2)].
    """
    if not x0 > 0:
        raise ValueError(f"x0 must be positive, got {x0}")
    n = n_qubits
    if p is None:
        v = math.pi / x0
        return (16.0 * n * v**4 * math.exp(-2.0 * v) + 2.0 * v**2 / math.pi**2) / 6.0
    if not p.s > 1:
        raise ValueError(f"the edge term needs s > 1, got s = {p.s}")
    x = _scaled_spacing(x0, p)
    v = math.pi / x
    image = n * (2.0 * v) ** (p.s + 1.0) * math.exp(-2.0 * v) / gamma(p.s + 1.0)
    edge = 2.0 / (p.s * (p.s - 1.0) * x**2)
    return p.kappa0_sq * (image + edge)


def ghz_x0_analytic(n_qubits, exact=False):
    """
    Spacing minimizing the analytic F_N: x0 = pi / v with
    v = -(3/2) W_-1(-1 / (3 pi^(2/3) N^(1/3))), W_-1 ~ L1 - L2 unless exact.
    """
    if n_qubits < 2:
        raise ValueError(f"analytic spacing needs N >= 2, got {n_qubits}")
    arg = -1.0 / (3.0 * math.pi ** (2.0 / 3.0) * n_qubits ** (1.0 / 3.0))
    if arg < -math.exp(-1.0):
        raise ValueError(f"Lambert-W argument {arg} below -1/e")
    if exact:
        w = lambert_w(-1, arg)
    else:
        l1 = math.log(-arg)
        w = l1 - math.log(-l1)
    return math.pi / (-1.5 * w)


def ghz_optimal_time(F, omega_c):
    """tau = (1/2) omega_c^-1 F^(-1/2) sqrt(1 + 2W), W = W0(-e^(-1/2)/4)."""
    if not F > 0:
        raise ValueError(f"F must be positive, got {F}")
    return 0.5 / omega_c * F**-0.5 * math.sqrt(1.0 + 2.0 * _ghz_lambert_w())


def ghz_time_optimized_uncertainty(F, omega_c, T, n_qubits):
    if not F > 0:
        raise ValueError(f"F must be positive, got {F}")
    return ghz_prefactor() * math.sqrt(omega_c / T) * F**0.25 / n_qubits


def ghz_lattice_uncertainty(tau, x0, n_qubits, p: NoiseParams, T):
    """Short-time ratio uncertainty at the optimal phase, gamma = (omega_c tau)^2 F_N(x0)."""
    F = f_n_direct(n_qubits, x0, p)
    gamma_ghz = (p.omega_c * tau) ** 2 * F
    b = math.pi / (4.0 * n_qubits * tau)
    return ratio_uncertainty_ghz(b, tau, n_qubits, gamma_ghz, T)


def ghz_optimal_uncertainty_analytic(n_qubits, omega_c, T, p: NoiseParams | None = None):
    """Time-optimized uncertainty at the analytic spacing with the analytic F_N."""
    p = p if p is not None else NoiseParams(omega_c=omega_c)
    x0 = ghz_x0_analytic(n_qubits) * p.v / p.omega_c
    F = f_n_analytic(n_qubits, x0, p)
    return ghz_time_optimized_uncertainty(F, omega_c, T, n_qubits)


def ghz_optimum_analytic(n_qubits, p: NoiseParams, T):
    x0 = ghz_x0_analytic(n_qubits) * p.v / p.omega_c
    F = f_n_analytic(n_qubits, x0, p)
    return OptimumRecord(
        n_qubits,
        x0,
        ghz_optimal_time(F, p.omega_c),
        ghz_time_optimized_uncertainty(F, p.omega_c, T, n_qubits),
        "analytic",
    )


# --------------------------------------------------------------------------
# OAT


def oat_optimal_time(c: ExpansionCoefficients, omega_c):
    """tau = sqrt(Delta / (6 a4)) / omega_c with Delta = sqrt(12 a0 a4 + a2^2) - a2."""
    if not c.a4 > 0:
        raise ValueError(f"a4 must be positive, got {c.a4}")
    delta = math.sqrt(12.0 * c.a0 * c.a4 + c.a2**2) - c.a2
    return math.sqrt(delta / (6.0 * c.a4)) / omega_c


def oat_optimal_uncertainty(c: ExpansionCoefficients, omega_c, T):
    """The time expansion at its minimizer."""
    if not c.a4 > 0:
        raise ValueError(f"a4 must be positive, got {c.a4}")
    delta = math.sqrt(12.0 * c.a0 * c.a4 + c.a2**2) - c.a2
    return (
        math.sqrt(omega_c / T)
        * 6.0**0.25
        * math.sqrt(12.0 * c.a0 * c.a4 + c.a2 * delta)
        / (3.0 * c.h0 * (c.a4 * delta) ** 0.25)
    )


def _oat_edge_weight(n_qubits):
    n13 = n_qubits ** (1.0 / 3.0)
    return n13 / 3.0 ** (1.0 / 3.0) - n13**2 / 3.0 ** (2.0 / 3.0) + n_qubits / 3.0


def oat_x0_analytic(n_qubits):
    """
    Leading-order stationary point of a2 in x0:
    v = -(3/2) W_-1(-(2/3) (24 pi^2 B_N)^(-1/3)), x0 = pi / v.
    """
    if n_qubits < 2:
        raise ValueError(f"analytic spacing needs N >= 2, got {n_qubits}")
    weight = _oat_edge_weight(n_qubits)
    arg = -(2.0 / 3.0) * (24.0 * math.pi**2 * weight) ** (-1.0 / 3.0)
    return math.pi / (-1.5 * lambert_w(-1, arg))


def oat_x0_printed(n_qubits):
    """-(2 pi / 3) log[log(A) / A] with A = 3 pi^(2/3) N^(1/3)."""
    if n_qubits < 2:
        raise ValueError(f"analytic spacing needs N >= 2, got {n_qubits}")
    a = 3.0 * math.pi ** (2.0 / 3.0) * n_qubits ** (1.0 / 3.0)
    return -(2.0 * math.pi / 3.0) * math.log(math.log(a) / a)


# --------------------------------------------------------------------------
# numeric minimization


def _finite(value, where):
    if not math.isfinite(value):
        raise RuntimeError(f"objective is not finite at {where}: {value}")
    return value


def minimize_1d(f, bracket, tol=1e-8, max_iter=200, log=False):
    """
    Golden-section search on [lo, hi]; endpoints are returned if they beat
    the interior estimate.

    Args:
        log (bool): search in log(x), tol then applies to log(x)

    Returns:
        (x, f(x))
    """
    lo, hi = bracket
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValueError(f"invalid bracket {bracket}")
    if log:
        if lo <= 0:
            raise ValueError(f"log search needs a positive bracket, got {bracket}")
        x, fx = minimize_1d(lambda z: f(math.exp(z)), (math.log(lo), math.log(hi)), tol, max_iter)
        return math.exp(x), fx

    def g(x):
        return _finite(f(x), f"x = {x}")

    x1 = hi - PHI_RATIO * (hi - lo)
    x2 = lo + PHI_RATIO * (hi - lo)
    f1, f2 = g(x1), g(x2)
    f_lo, f_hi = g(lo), g(hi)
    lo0, hi0 = lo, hi
    for _ in range(max_iter):
        if abs(hi - lo) <= tol:
            break
        if f2 > f1:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - PHI_RATIO * (hi - lo)
            f1 = g(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + PHI_RATIO * (hi - lo)
            f2 = g(x2)
    else:
        logging.warning(f"minimize_1d: bracket width {hi - lo:.3g} after {max_iter} iterations")

    x, fx = (x1, f1) if f1 <= f2 else (x2, f2)
    if f_lo < fx:
        return lo0, f_lo
    if f_hi < fx:
        return hi0, f_hi
    return x, fx


def minimize_2d(f, bounds, n_qubits=0, grid=(25, 25), log_tau=True):
    """
    Coarse grid over (tau, x0) followed by bounded Nelder-Mead refinement.

    Args:
        f (callable): f(tau, x0)
        bounds: ((tau_lo, tau_hi), (x0_lo, x0_hi))
        log_tau (bool): grid and refine tau on a log scale
    """
    (t_lo, t_hi), (x_lo, x_hi) = bounds
    for lo, hi in bounds:
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValueError(f"invalid bounds {bounds}")
    if log_tau and t_lo <= 0:
        raise ValueError(f"log tau search needs tau_lo > 0, got {t_lo}")

    taus = np.geomspace(t_lo, t_hi, grid[0]) if log_tau else np.linspace(t_lo, t_hi, grid[0])
    x0s = np.linspace(x_lo, x_hi, grid[1])
    values = np.array([[f(t, x) for x in x0s] for t in taus])
    bad = np.argwhere(~np.isfinite(values))
    if len(bad):
        i, j = bad[0]
        raise RuntimeError(f"objective is not finite at tau = {taus[i]:.4g}, x0 = {x0s[j]:.4g}")
    i, j = np.unravel_index(np.argmin(values), values.shape)

    to_tau = math.exp if log_tau else float
    start = [math.log(taus[i]) if log_tau else taus[i], x0s[j]]
    t_bounds = (math.log(t_lo), math.log(t_hi)) if log_tau else (t_lo, t_hi)

    def objective(z):
        return _finite(f(to_tau(z[0]), z[1]), f"tau = {to_tau(z[0]):.4g}, x0 = {z[1]:.4g}")

    res = optimize.minimize(
        objective,
        start,
        method="Nelder-Mead",
        bounds=[t_bounds, (x_lo, x_hi)],
        options=dict(xatol=1e-9, fatol=1e-15, maxiter=4000),
    )
    if res.fun <= values[i, j]:
        tau, x0, best = to_tau(res.x[0]), res.x[1], res.fun
    else:
        tau, x0, best = taus[i], x0s[j], values[i, j]
    return OptimumRecord(int(n_qubits), float(x0), float(tau), float(best), "numeric")


def ghz_ratio_optimum_numeric(n_qubits, p: NoiseParams, T, x0_bounds=X0_BOUNDS):
    F_guess = f_n_direct(n_qubits, ghz_x0_analytic(n_qubits) * p.v / p.omega_c, p)
    tau_guess = 0.5 / (p.omega_c * math.sqrt(abs(F_guess)))
    f = partial(_ghz_objective, n_qubits=n_qubits, p=p, T=T)
    return minimize_2d(f, ((0.02 * tau_guess, 20.0 * tau_guess), x0_bounds), n_qubits)


def _ghz_objective(tau, x0, n_qubits, p, T):
    return ghz_lattice_uncertainty(tau, x0, n_qubits, p, T)


def _oat_objective(tau, x0, n_qubits, p, T, angles):
    return oat_ratio_uncertainty(tau, LatticeGeometry(n_qubits, x0), p, angles, T)


def oat_optimum_numeric(n_qubits, p: NoiseParams, T, x0_bounds=X0_BOUNDS):
    angles = optimal_angles(n_qubits)
    scale = 1.0 / (p.omega_c * math.sqrt(p.kappa0_sq))
    f = partial(_oat_objective, n_qubits=n_qubits, p=p, T=T, angles=angles)
    return minimize_2d(f, ((0.01 * scale, 3.0 * scale), x0_bounds), n_qubits)


def css_optimum_numeric(n_qubits, p: NoiseParams, T, kappa_scale=1.0):
    """
    Collective CSS ratio-estimator optimum over tau with
    kappa = kappa_scale * kappa0^2 (omega_c tau)^2 and xi = 0.
    """
    scale = 1.0 / (p.omega_c * math.sqrt(p.kappa0_sq * n_qubits))

    def f(tau):
        kappa = kappa_scale * p.kappa0_sq * (p.omega_c * tau) ** 2
        return css_uncertainties(tau, n_qubits, kappa, 0.0, T)[0]

    tau, value = minimize_1d(f, (1e-3 * scale, 1e1 * scale), tol=1e-10, log=True)
    return OptimumRecord(n_qubits, 0.0, tau, value, "numeric")


# --------------------------------------------------------------------------
# sweeps and fits


def fit_power_law(n_values, values, curvature_tol=None):
    """
    Least squares of log(values) on log(N). With curvature_tol the smallest
    N are dropped until the quadratic term of the log-log fit is below it.
    """
    n_values = np.asarray(n_values, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(n_values) != len(values):
        raise ValueError(f"{len(n_values)} N values but {len(values)} data points")
    if len(n_values) < 2:
        raise ValueError("a power-law fit needs at least two points")
    if np.any(values <= 0) or np.any(n_values <= 0):
        raise ValueError("power-law fit needs positive N and values")
    x, y = np.log(n_values), np.log(values)
    start = 0
    if curvature_tol is not None:
        while len(x) - start > 3 and abs(np.polyfit(x[start:], y[start:], 2)[0]) > curvature_tol:
            start += 1
    x, y = x[start:], y[start:]
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    spread = np.sum((y - y.mean()) ** 2)
    r_squared = 1.0 - np.sum(residual**2) / spread if spread > 0 else 1.0
    return ScalingFit(float(slope), float(math.exp(intercept)), float(min(max(r_squared, 0.0), 1.0)), int(n_values[start]))


def fit_log_law(n_values, values, curvature_tol=None):
    """Power-law fit of delta_b N / sqrt(log N); a vanishing exponent means sqrt(log N) / N scaling."""
    n_values = np.asarray(n_values, dtype=float)
    scaled = np.asarray(values, dtype=float) * n_values / np.sqrt(np.log(n_values))
    return fit_power_law(n_values, scaled, curvature_tol)


_OPTIMA = {
    "GHZ": ghz_ratio_optimum_numeric,
    "OAT": oat_optimum_numeric,
    "CSS": css_optimum_numeric,
}


def sweep_and_fit(kind, n_list, p: NoiseParams, T, threads=None, curvature_tol=None, progress=False):
    """
    Numeric optimum per N and the scaling fit of delta_b against N; GHZ is
    fitted as delta_b N / sqrt(log N).
    """
    if kind not in SWEEP_KINDS:
        raise ValueError(f"unknown sweep kind {kind!r}, expected one of {SWEEP_KINDS}")
    n_list = [int(n) for n in n_list]
    if not n_list:
        raise ValueError("empty N list")
    if n_list != sorted(n_list):
        raise ValueError(f"N list must be ascending, got {n_list}")
    logging.info(f"Sweeping {kind} over {len(n_list)} sizes, N = {n_list[0]} ... {n_list[-1]}")

    optimum = _OPTIMA[kind]
    records = Parallel(n_jobs=threads or 1)(
        delayed(optimum)(n, p, T) for n in tqdm(n_list, desc=f"{kind} sweep", disable=not progress)
    )
    records = sorted(records, key=lambda r: r.n_qubits)
    n_values = [r.n_qubits for r in records]
    deltas = [r.delta_b_opt for r in records]
    fit = (fit_log_law if kind == "GHZ" else fit_power_law)(n_values, deltas, curvature_tol)
    logging.info(f"{kind} fit: exponent {fit.exponent:.4f}, prefactor {fit.prefactor:.4g}, R^2 {fit.r_squared:.5f}")
    return records, fit
