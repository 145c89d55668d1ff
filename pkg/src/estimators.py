"""
Frequency estimators for Ramsey-type measurements.

The standard GHZ estimator inverts the survival probability with an assumed
decay; the ratio estimator divides the two GHZ / GHZ' quadratures so the
common decay cancels. Both are evaluated by exact binomial enumeration,
Monte Carlo sampling and the linearized (error propagation) uncertainties.
All *_uncertainty_* functions return the standard deviation Delta b, not
its square.

"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from tqdm import tqdm

# (nu + 1)^2 terms for the ratio estimator
ENUMERATION_CAP = 2000
MC_BLOCK = 10000
ESTIMATOR_KINDS = ("standard", "ratio")


@dataclass(frozen=True)
class GhzProbabilities:
    p: float
    p_prime: float

    def __post_init__(self):
        for name in ("p", "p_prime"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class EstimatorStats:
    mean: float
    variance: float
    defined_fraction: float

    @property
    def std(self):
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class MomentSet:
    """First and second moments of J_x, J_y after the interrogation."""

    jx: float
    jy: float
    jx2: float
    jy2: float

    def __post_init__(self):
        tol = 1e-9 * max(1.0, self.jx2, self.jy2)
        assert self.jx2 >= -tol and self.jy2 >= -tol, "[!] second moments must be non-negative"
        assert self.jx**2 <= self.jx2 + tol, "[!] <Jx>^2 exceeds <Jx^2>"
        assert self.jy**2 <= self.jy2 + tol, "[!] <Jy>^2 exceeds <Jy^2>"

    @property
    def var_x(self):
        return max(self.jx2 - self.jx**2, 0.0)

    @property
    def var_y(self):
        return max(self.jy2 - self.jy**2, 0.0)


def ghz_probabilities(b, tau, n_qubits, gamma):
    """p = (1 + cos(N b tau) e^-gamma) / 2 and p' = (1 + sin(N b tau) e^-gamma) / 2."""
    if gamma < 0:
        raise ValueError(f"gamma must be non-negative, got {gamma}")
    phase = n_qubits * b * tau
    decay = math.exp(-gamma)
    p = min(max(0.5 * (1.0 + math.cos(phase) * decay), 0.0), 1.0)
    p_prime = min(max(0.5 * (1.0 + math.sin(phase) * decay), 0.0), 1.0)
    return GhzProbabilities(p, p_prime)


def standard_estimate(nu_plus, nu, n_qubits, tau, gamma_assumed=0.0):
    """
    arccos(e^gamma (2 nu_+/nu - 1)) / (N tau); NaN where the argument leaves [-1, 1].

    Args:
        nu_plus (int or array): GHZ counts
        nu (int): repetitions
        gamma_assumed (float): decay the estimator corrects for, 0 for noise-unaware
    """
    nu_plus = np.asarray(nu_plus)
    if np.any(nu_plus < 0) or np.any(nu_plus > nu):
        raise ValueError(f"counts must lie in [0, {nu}]")
    arg = math.exp(gamma_assumed) * (2.0 * nu_plus / nu - 1.0)
    with np.errstate(invalid="ignore"):
        values = np.where(np.abs(arg) <= 1.0, np.arccos(np.clip(arg, -1.0, 1.0)), np.nan)
    values = values / (n_qubits * tau)
    return values if values.ndim else float(values)


def ratio_estimate(nu_plus, nu_prime_plus, nu, n_qubits, tau):
    """
    arctan[(2 nu'_+ - nu) / (2 nu_+ - nu)] / (N tau) on the branch (-pi/2, pi/2].

    A vanishing denominator maps to pi/2; both vanishing is undefined (NaN).
    """
    nu_plus = np.asarray(nu_plus)
    nu_prime_plus = np.asarray(nu_prime_plus)
    if np.any(nu_plus < 0) or np.any(nu_plus > nu) or np.any(nu_prime_plus < 0) or np.any(nu_prime_plus > nu):
        raise ValueError(f"counts must lie in [0, {nu}]")
    dx, dy = np.broadcast_arrays(2 * nu_plus - nu, 2 * nu_prime_plus - nu)
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.arctan(dy / np.where(dx == 0, 1, dx))
    values = np.where(dx == 0, np.where(dy == 0, np.nan, 0.5 * math.pi), values)
    values = values / (n_qubits * tau)
    return values if values.ndim else float(values)


def limiting_ratio_curve(b, n_qubits, tau):
    """nu -> infinity limit of the ratio estimator mean."""
    phase = n_qubits * np.asarray(b, dtype=float) * tau
    values = np.arctan(np.tan(phase)) / (n_qubits * tau)
    return values if values.ndim else float(values)


def ratio_bias_leading(phi, nu):
    """Leading 1/nu bias of the ratio estimator phase, -sin(4 phi) / (4 nu); gamma free."""
    return -math.sin(4.0 * phi) / (4.0 * nu)


def _log_weights(nu, p):
    with np.errstate(divide="ignore"):
        return stats.binom.logpmf(np.arange(nu + 1), nu, p)


def _check_estimator(estimator):
    if estimator not in ESTIMATOR_KINDS:
        raise ValueError(f"unknown estimator {estimator!r}, expected one of {ESTIMATOR_KINDS}")


def exact_outcome_stats(
    estimator, probs: GhzProbabilities, nu, n_qubits, tau, gamma_assumed=0.0, progress=False
):
    """
    Exact mean and variance over all binomial outcomes, undefined outcomes
    excluded and reported through defined_fraction.

    The ratio estimator enumerates nu_+ row by row, vectorized over nu'_+.
    """
    _check_estimator(estimator)
    if int(nu) != nu or nu < 1:
        raise ValueError(f"nu must be a positive integer, got {nu}")
    if nu > ENUMERATION_CAP:
        raise ValueError(f"exact enumeration is capped at nu = {ENUMERATION_CAP}, got {nu}")
    nu = int(nu)
    counts = np.arange(nu + 1)
    log_w = _log_weights(nu, probs.p)

    if estimator == "standard":
        weights = np.exp(log_w)
        values = standard_estimate(counts, nu, n_qubits, tau, gamma_assumed)
        defined = np.isfinite(values) & (weights > 0)
        total = math.fsum(weights[defined])
        if total == 0.0:
            return EstimatorStats(math.nan, math.nan, 0.0)
        mean = math.fsum(weights[defined] * values[defined]) / total
        variance = math.fsum(weights[defined] * (values[defined] - mean) ** 2) / total
        return EstimatorStats(mean, variance, total)

    log_w_prime = _log_weights(nu, probs.p_prime)
    rows = [k for k in counts if np.isfinite(log_w[k])]
    partial_w, partial_mean = [], []
    for k in tqdm(rows, desc="ratio outcomes", disable=not progress):
        weights = np.exp(log_w[k] + log_w_prime)
        values = ratio_estimate(k, counts, nu, n_qubits, tau)
        defined = np.isfinite(values) & (weights > 0)
        partial_w.append(math.fsum(weights[defined]))
        partial_mean.append(math.fsum(weights[defined] * values[defined]))
    total = math.fsum(partial_w)
    if total == 0.0:
        return EstimatorStats(math.nan, math.nan, 0.0)
    mean = math.fsum(partial_mean) / total

    partial_var = []
    for k in rows:
        weights = np.exp(log_w[k] + log_w_prime)
        values = ratio_estimate(k, counts, nu, n_qubits, tau)
        defined = np.isfinite(values) & (weights > 0)
        partial_var.append(math.fsum(weights[defined] * (values[defined] - mean) ** 2))
    variance = math.fsum(partial_var) / total
    logging.debug(f"exact ratio stats: nu={nu}, mean={mean:.6g}, var={variance:.6g}")
    return EstimatorStats(mean, variance, total)


def sample_outcomes(probs: GhzProbabilities, nu, shots, seed):
    """
    (shots, 2) array of (nu_+, nu'_+) draws. Blocks of MC_BLOCK shots use
    child seeds spawned from SeedSequence(seed), so the draw only depends on
    (seed, shots).
    """
    if shots < 1:
        raise ValueError(f"shots must be positive, got {shots}")
    n_blocks = -(-shots // MC_BLOCK)
    children = np.random.SeedSequence(seed).spawn(n_blocks)
    blocks = []
    for i, child in enumerate(children):
        size = min(MC_BLOCK, shots - i * MC_BLOCK)
        rng = np.random.default_rng(child)
        blocks.append(np.column_stack([rng.binomial(nu, probs.p, size), rng.binomial(nu, probs.p_prime, size)]))
    return np.concatenate(blocks, axis=0)


def monte_carlo_stats(
    estimator, probs: GhzProbabilities, nu, shots, seed, n_qubits, tau, gamma_assumed=0.0
):
    """Sampled counterpart of exact_outcome_stats for nu beyond ENUMERATION_CAP."""
    _check_estimator(estimator)
    outcomes = sample_outcomes(probs, nu, shots, seed)
    if estimator == "standard":
        values = standard_estimate(outcomes[:, 0], nu, n_qubits, tau, gamma_assumed)
    else:
        values = ratio_estimate(outcomes[:, 0], outcomes[:, 1], nu, n_qubits, tau)
    defined = np.isfinite(values)
    if not defined.any():
        return EstimatorStats(math.nan, math.nan, 0.0)
    return EstimatorStats(
        float(np.mean(values[defined])), float(np.var(values[defined])), float(defined.mean())
    )


def _check_times(tau, T):
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if not T > 0:
        raise ValueError(f"total time T must be positive, got {T}")


def std_uncertainty_ghz(b, tau, n_qubits, gamma, T):
    """Error propagation of the standard estimator at fixed total time T."""
    _check_times(tau, T)
    phase = n_qubits * b * tau
    sin2 = math.sin(phase) ** 2
    if sin2 < 1e-300:
        raise ValueError(f"standard estimator is singular at N b tau = {phase}")
    decay2 = math.exp(-2.0 * gamma)
    var = (1.0 - decay2 * math.cos(phase) ** 2) / (decay2 * sin2) / (T * tau * n_qubits**2)
    return math.sqrt(var)


def ratio_uncertainty_ghz(b, tau, n_qubits, gamma, T):
    """Delta b_R^2 = [e^(2 gamma) - sin^2(2 N b tau) / 2] / (T tau N^2)."""
    _check_times(tau, T)
    phase = n_qubits * b * tau
    var = (math.exp(2.0 * gamma) - 0.5 * math.sin(2.0 * phase) ** 2) / (T * tau * n_qubits**2)
    return math.sqrt(var)


def css_uncertainties(tau, n_qubits, kappa, xi, T):
    """
    Collective CSS uncertainties at the optimal phases, ratio estimator and
    method of moments, both at total time 2T.

    Returns:
        (ratio, standard) standard deviations
    """
    _check_times(tau, T)
    n = n_qubits
    cos_n = math.cos(xi) ** (2 * n - 2)
    if cos_n <= 0:
        raise ValueError(f"CSS contrast vanishes at xi = {xi}")
    ratio = ((n + 1) * math.exp(kappa) / (n * cos_n) - 1.0) / (2.0 * T * tau)
    standard = ((n + 1) * math.exp(kappa) - (n - 1) * math.exp(-kappa) * math.cos(2.0 * xi) ** (n - 2)) / (
        4.0 * n * T * tau * cos_n
    )
    return math.sqrt(ratio), math.sqrt(standard)


def ratio_uncertainty_moments(m: MomentSet, tau, T):
    """[<Jx>^2 dJy^2 + <Jy>^2 dJx^2] / (T tau (<Jx>^2 + <Jy>^2)^2)."""
    _check_times(tau, T)
    r2 = m.jx**2 + m.jy**2
    if r2 <= 0:
        raise ValueError("ratio estimator undefined for a vanishing Bloch vector")
    var = (m.jx**2 * m.var_y + m.jy**2 * m.var_x) / (T * tau * r2**2)
    return math.sqrt(var)


def std_uncertainty_moments(m: MomentSet, tau, T):
    """dJy^2 / (2 T tau <Jx>^2), the slope d<Jy>/dphi being <Jx>."""
    _check_times(tau, T)
    if m.jx == 0:
        raise ValueError("method of moments undefined where d<Jy>/dphi = <Jx> vanishes")
    return math.sqrt(m.var_y / (2.0 * T * tau * m.jx**2))
