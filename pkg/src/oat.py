"""
One-axis-twisted (OAT) and coherent spin states on the lattice.

Moments follow from a second-order cumulant expansion of the classical
dephasing; the quantum (xi) phase is dropped. The twisted state is
exp(-i beta Jx) exp(-i theta Jz^2 / 2) |+>^N, so the noiseless contrast is
Q0 = (N/2) cos^(N-1)(theta/2).

The time expansion T tau h0^2 Delta b^2 = a0 + a2 (omega_c tau)^2 + a4 (omega_c tau)^4
comes in three flavours:
    printed     closed forms with pi/x0 exponentials, as commonly quoted
    series      exact Taylor coefficients of the cumulant-moment uncertainty
    asymptotic  leading N orders at the analytic spacing

"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from src.estimators import MomentSet, ratio_uncertainty_moments
from src.noise import LatticeGeometry, NoiseParams, delta1
from src.specfun import gamma

COEFFICIENT_METHODS = ("printed", "series", "asymptotic")


@dataclass(frozen=True)
class OatAngles:
    theta: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        for name in ("theta", "beta"):
            value = getattr(self, name)
            if not 0.0 <= value <= 2.0 * math.pi:
                raise ValueError(f"{name} must lie in [0, 2 pi], got {value}")


@dataclass(frozen=True)
class ExpansionCoefficients:
    h0: float
    a0: float
    a2: float
    a4: float

    def __post_init__(self):
        if not self.a0 > 0:
            raise ValueError(f"a0 must be positive, got {self.a0}")
        if not self.h0 > 0:
            raise ValueError(f"h0 must be positive, got {self.h0}")


@dataclass(frozen=True)
class NoiselessCoefficients:
    q0: float
    c1: float
    c2: float


def optimal_angles(n_qubits):
    """Large-N optimal twisting and rotation angles."""
    if n_qubits < 2:
        raise ValueError(f"optimal angles need N >= 2, got {n_qubits}")
    theta = 12.0 ** (1.0 / 6.0) * 2.0 ** (2.0 / 3.0) * n_qubits ** (-2.0 / 3.0)
    beta = (
        0.5 * math.pi
        - 3.0 ** (-1.0 / 6.0) * n_qubits ** (-1.0 / 3.0)
        - 0.5 * 3.0 ** (1.0 / 6.0) * n_qubits ** (-2.0 / 3.0)
    )
    return OatAngles(theta, beta)


def noiseless_coefficients(angles: OatAngles, n_qubits, large_n=False):
    """
    Q0, C1, C2 of the twisted state.

    Args:
        large_n (bool): replace the cosine powers by their Gaussian limits
    """
    n = n_qubits
    theta, beta = angles.theta, angles.beta
    if large_n:
        q0 = 0.5 * n * math.exp(-n * theta**2 / 8.0)
        shear = math.sin(theta / 2.0) * math.exp(-n * theta**2 / 8.0)
        echo = math.exp(-n * theta**2 / 2.0)
    else:
        q0 = 0.5 * n * math.cos(theta / 2.0) ** (n - 1)
        shear = math.sin(theta / 2.0) * math.cos(theta / 2.0) ** (n - 2)
        echo = math.cos(theta) ** (n - 2)
    sin2b = math.sin(2.0 * beta)
    c1 = (2.0 * math.cos(beta) ** 2 + (1.0 + echo) * math.sin(beta) ** 2 - 2.0 * sin2b * shear) / 8.0
    c2 = (2.0 * math.sin(beta) ** 2 + 4.0 * sin2b * shear + (math.cos(2.0 * beta) + 3.0) * echo) / 16.0
    return NoiselessCoefficients(q0, c1, c2)


def spatial_sums(n_qubits, x0, kappa_t, p: NoiseParams):
    """
    G+- = sum_{j=1}^{N-1} (N - j) exp(+-2 K delta1(j x0)), K = kappa0^2 (omega_c tau)^2.
    """
    n = n_qubits
    if x0 == 0:
        pairs = 0.5 * n * (n - 1)
        return pairs * math.exp(2.0 * kappa_t), pairs * math.exp(-2.0 * kappa_t)
    j = np.arange(1, n, dtype=float)
    d = delta1(j * x0 * p.omega_c / p.v, p.s)
    weights = n - j
    return float(np.sum(weights * np.exp(2.0 * kappa_t * d))), float(np.sum(weights * np.exp(-2.0 * kappa_t * d)))


def moments_short_time(tau, geom: LatticeGeometry, p: NoiseParams, angles: OatAngles, b=0.0, large_n=False):
    """
    Cumulant moments at phase phi = b tau:

        <Jx> = e^-K Q0 cos phi,   <Jy> = e^-K Q0 sin phi
        <Jx^2>, <Jy^2> = N/4 + e^-2K [C1 G+ +- cos(2 phi) C2 G-]
    """
    n = geom.n_qubits
    kappa_t = p.kappa0_sq * (p.omega_c * tau) ** 2
    phi = b * tau
    coeffs = noiseless_coefficients(angles, n, large_n=large_n)
    g_plus, g_minus = spatial_sums(n, geom.spacing, kappa_t, p)
    contrast = math.exp(-kappa_t) * coeffs.q0
    common = 0.25 * n + math.exp(-2.0 * kappa_t) * coeffs.c1 * g_plus
    swing = math.exp(-2.0 * kappa_t) * math.cos(2.0 * phi) * coeffs.c2 * g_minus
    return MomentSet(
        jx=contrast * math.cos(phi),
        jy=contrast * math.sin(phi),
        jx2=common + swing,
        jy2=common - swing,
    )


def oat_ratio_uncertainty(tau, geom: LatticeGeometry, p: NoiseParams, angles: OatAngles, T):
    """Ratio-estimator uncertainty from the cumulant moments at the optimal phase phi = 0."""
    return ratio_uncertainty_moments(moments_short_time(tau, geom, p, angles), tau, T)


def printed_coefficients(n_qubits, x0, p: NoiseParams):
    n = n_qubits
    v = math.pi / x0
    damp = math.exp(-2.0 * v)
    k2 = p.kappa0_sq
    k4 = p.alpha * gamma(p.s + 3.0)
    c13, c23 = 3.0 ** (1.0 / 3.0), 3.0 ** (2.0 / 3.0)
    n13, n23 = n ** (1.0 / 3.0), n ** (2.0 / 3.0)

    a0 = c23 / 8.0 * n13
    a2 = 0.5 * k2 * (
        1.0 / (6.0 * x0**2)
        + 4.0 * v**4 * damp * (n13 / c13 - n23 / c23 + n / 3.0)
        + 0.5 * (c13 * n23 - c23 * n13)
    )
    a4 = (
        k4 * (n13 / (16.0 * c13) - n23 / (16.0 * c23))
        + 0.5 * n * k2**2
        - k4 / (480.0 * x0**2)
        + k4 * damp * v**6 * (-n13 / (30.0 * c13) + n23 / (30.0 * c23) + n / 90.0)
    )
    return ExpansionCoefficients(0.5 * n, a0, a2, a4)


def series_coefficients(n_qubits, x0, p: NoiseParams, angles: OatAngles | None = None):
    """Exact K and K^2 coefficients of the cumulant-moment uncertainty at phi = 0."""
    n = n_qubits
    angles = angles if angles is not None else optimal_angles(n)
    nc = noiseless_coefficients(angles, n)
    j = np.arange(1, n, dtype=float)
    d = delta1(j * x0 * p.omega_c / p.v, p.s) if x0 > 0 else np.ones_like(j)
    weights = n - j
    pairs = float(np.sum(weights))
    d1 = float(np.sum(weights * d))
    d2 = float(np.sum(weights * d * d))
    k2 = p.kappa0_sq
    a0 = 0.25 * n + (nc.c1 - nc.c2) * pairs
    a2 = 2.0 * k2 * (0.25 * n + (nc.c1 + nc.c2) * d1)
    a4 = k2**2 * (0.5 * n + 2.0 * (nc.c1 - nc.c2) * d2)
    return ExpansionCoefficients(nc.q0, a0, a2, a4)


def asymptotic_coefficients(n_qubits, p: NoiseParams):
    n = n_qubits
    k2 = p.kappa0_sq
    return ExpansionCoefficients(
        h0=0.5 * n,
        a0=3.0 ** (2.0 / 3.0) / 2.0 ** (7.0 / 3.0) * n ** (1.0 / 3.0),
        a2=3.0 ** (1.0 / 3.0) / 2.0 ** (5.0 / 3.0) * k2 * n ** (2.0 / 3.0),
        a4=0.25 * k2**2 * n,
    )


def expansion_coefficients(n_qubits, x0, p: NoiseParams, method="printed", angles: OatAngles | None = None):
    if method not in COEFFICIENT_METHODS:
        raise ValueError(f"unknown coefficient method {method!r}, expected one of {COEFFICIENT_METHODS}")
    if method == "asymptotic":
        return asymptotic_coefficients(n_qubits, p)
    if not x0 > 0 and method == "printed":
        raise ValueError(f"printed coefficients need x0 > 0, got {x0}")
    if method == "printed":
        return printed_coefficients(n_qubits, x0, p)
    return series_coefficients(n_qubits, x0, p, angles)


def oat_uncertainty_expansion(tau, coeffs: ExpansionCoefficients, p: NoiseParams, T):
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    x = p.omega_c * tau
    bracket = coeffs.a0 + coeffs.a2 * x**2 + coeffs.a4 * x**4
    if bracket <= 0:
        raise ValueError(f"expansion is non-positive at omega_c tau = {x}")
    return math.sqrt(bracket) / (math.sqrt(T * tau) * coeffs.h0)
