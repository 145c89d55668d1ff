"""
Spin-boson dephasing on a 1D lattice: spectral density, classical and
quantum spectra, the decay (kappa) and phase (xi) dynamic coefficients,
spatial correlators and the per-basis-pair decay and Lamb-shift phase.

Units: frequencies in omega_c, times t are physical and enter through
omega_c * t, lattice separations through omega_c * |n - m| * x0 / v.

"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from src.specfun import chebyshev_T, gamma

# quadratic-form weight in gamma_pair / phi0_pair; 1.0 gives the bare double sum
PAIR_WEIGHT = 0.25
# literal overlap integrals over the canonical short-time forms
KAPPA_NORM = 1.0 / 16.0
XI_NORM = 1.0 / 4.0
# integration range in units of omega_c
QUAD_CUTOFF = 40.0
QUAD_EPSABS = 1e-10
QUAD_LIMIT = 400


@dataclass(frozen=True)
class NoiseParams:
    """
    Spectral density J(w) = alpha * omega_c * (w / omega_c)^s * exp(-w / omega_c).

    Args:
        alpha (float): dimensionless coupling strength
        s (float): Ohmicity
        omega_c (float): cutoff frequency
        v (float): bath propagation speed
    """

    alpha: float = 1.0
    s: float = 3.0
    omega_c: float = 1.0
    v: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.s >= 0:
            raise ValueError(f"Ohmicity s must be non-negative, got {self.s}")
        if not self.omega_c > 0:
            raise ValueError(f"omega_c must be positive, got {self.omega_c}")
        if not self.v > 0:
            raise ValueError(f"bath speed v must be positive, got {self.v}")

    @property
    def kappa0_sq(self):
        return self.alpha * gamma(self.s + 1.0)

    @property
    def xi0_cu(self):
        return self.alpha / 6.0 * gamma(self.s + 2.0)

    @property
    def integer_order(self):
        return float(self.s).is_integer()


@dataclass(frozen=True)
class LatticeGeometry:
    n_qubits: int
    spacing: float = 0.0

    def __post_init__(self):
        if int(self.n_qubits) != self.n_qubits or self.n_qubits < 1:
            raise ValueError(f"n_qubits must be a positive integer, got {self.n_qubits}")
        if not self.spacing >= 0:
            raise ValueError(f"lattice spacing must be non-negative, got {self.spacing}")

    def separations(self):
        """|n - m| as an N x N integer matrix."""
        idx = np.arange(self.n_qubits)
        return np.abs(idx[:, None] - idx[None, :])

    def transit_times(self, p: NoiseParams):
        return self.separations() * self.spacing / p.v


@dataclass(frozen=True)
class DynamicCoefficients:
    time: float
    kappa: np.ndarray = field(repr=False)
    xi: np.ndarray = field(repr=False)

    def __post_init__(self):
        kappa = np.array(self.kappa, dtype=float)
        xi = np.array(self.xi, dtype=float)
        assert kappa.shape == xi.shape, "[!] kappa and xi must share a shape"
        assert kappa.ndim == 2 and kappa.shape[0] == kappa.shape[1], "[!] coefficients must be square"
        assert np.array_equal(kappa, kappa.T), "[!] kappa must be symmetric"
        assert np.array_equal(xi, xi.T), "[!] xi must be symmetric"
        assert np.all(np.isfinite(kappa)) and np.all(np.isfinite(xi)), "[!] coefficients must be finite"
        assert np.all(np.diag(kappa) == kappa[0, 0]), "[!] kappa diagonal must be constant"
        kappa.setflags(write=False)
        xi.setflags(write=False)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "xi", xi)

    @property
    def n_qubits(self):
        return self.kappa.shape[0]

    @classmethod
    def zeros(cls, n_qubits, time=0.0):
        return cls(time, np.zeros((n_qubits, n_qubits)), np.zeros((n_qubits, n_qubits)))


@dataclass(frozen=True)
class BasisString:
    signs: np.ndarray

    def __post_init__(self):
        signs = np.asarray(self.signs, dtype=np.int64)
        if signs.ndim != 1 or not np.all(np.abs(signs) == 1):
            raise ValueError(f"basis string entries must be +1 or -1, got {self.signs}")
        object.__setattr__(self, "signs", signs)

    def __len__(self):
        return len(self.signs)

    @classmethod
    def from_index(cls, index, n_qubits):
        """Big-endian bit string, bit 0 -> spin up (+1)."""
        bits = (index >> np.arange(n_qubits - 1, -1, -1)) & 1
        return cls(1 - 2 * bits)


def spectral_density(omega, p: NoiseParams):
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("spectral_density is defined for omega >= 0")
    y = omega / p.omega_c
    with np.errstate(divide="ignore", invalid="ignore"):
        values = p.alpha * p.omega_c * np.where(y > 0, y**p.s, 1.0 if p.s == 0 else 0.0)
    values = values * np.exp(-y)
    return values if values.ndim else float(values)


def spectrum_plus(omega, t_nm, p: NoiseParams):
    """Classical spectrum S+ = 4 pi J(|w|) cos(w t_nm), even in w."""
    omega = np.asarray(omega, dtype=float)
    values = 4.0 * math.pi * spectral_density(np.abs(omega), p) * np.cos(omega * t_nm)
    return values if np.ndim(values) else float(values)


def spectrum_minus(omega, t_nm, p: NoiseParams):
    """Quantum spectrum S- = S+ sgn(w)."""
    values = spectrum_plus(omega, t_nm, p) * np.sign(omega)
    return values if np.ndim(values) else float(values)


def spatial_correlator(x, order):
    """
    (1 + x^2)^(-order/2) cos(order * arctan x); equals u^n T_n(u) with
    u = (1 + x^2)^(-1/2) for integer order n.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("spatial correlators take non-negative separations")
    if float(order).is_integer():
        u = 1.0 / np.sqrt(1.0 + x * x)
        values = u ** int(order) * chebyshev_T(int(order), u)
    else:
        values = (1.0 + x * x) ** (-0.5 * order) * np.cos(order * np.arctan(x))
    return values if np.ndim(values) else float(values)


def delta1(x, s):
    return spatial_correlator(x, s + 1.0)


def delta2(x, s):
    return spatial_correlator(x, s + 2.0)


def collective_sum_delta1(x0):
    """sum_{j in Z} delta1(j x0) at s = 3, v^4 (2 + cosh 2v) / (3 sinh^4 v) with v = pi / x0."""
    if not x0 > 0:
        raise ValueError(f"x0 must be positive, got {x0}")
    v = math.pi / x0
    if v > 300:
        # cosh(2v) / sinh(v)^4 -> 8 exp(-2v)
        return v**4 * 8.0 * math.exp(-2.0 * v) / 3.0
    return v**4 * (2.0 + math.cosh(2.0 * v)) / (3.0 * math.sinh(v) ** 4)


def _sinc2_half(z):
    # (sin(z/2) / (z/2))^2
    return np.sinc(z / (2.0 * math.pi)) ** 2


def _twist_kernel(z):
    # (z - sin z) / z^3
    if abs(z) < 0.1:
        z2 = z * z
        return 1.0 / 6.0 - z2 / 120.0 + z2 * z2 / 5040.0 - z2**3 / 362880.0
    return (z - math.sin(z)) / z**3


def _quad(integrand, what):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, abserr = integrate.quad(
                integrand, 0.0, QUAD_CUTOFF, epsabs=QUAD_EPSABS, epsrel=1e-10, limit=QUAD_LIMIT
            )
        except integrate.IntegrationWarning as err:
            raise RuntimeError(f"{what} quadrature did not converge: {err}") from err
    logging.debug(f"{what} quadrature: {value:.6e} +/- {abserr:.1e}")
    return value


def kappa_quadrature(t, t_nm, p: NoiseParams):
    """
    kappa_nm(t) = (1/32 pi) int dw sin^2(wt/2)/w^2 S+_nm(w) over the real line.

    Evaluated in y = w / omega_c on [0, QUAD_CUTOFF]; sin^2(wt/2)/w^2 is
    written as (t^2/4) sinc^2 so the w -> 0 limit is regular.
    """
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    if t == 0:
        return 0.0
    tau = p.omega_c * t
    x = p.omega_c * t_nm

    def integrand(y):
        return _sinc2_half(y * tau) * y**p.s * math.exp(-y) * math.cos(x * y)

    return p.alpha * tau**2 / 16.0 * _quad(integrand, "kappa")


def xi_quadrature(t, t_nm, p: NoiseParams):
    """
    xi_nm(t) = (1/32 pi) int dw (wt - sin wt)/w^2 S-_nm(w) over the real line.

    (wt - sin wt)/w^2 = t^3 w h(wt) with h(z) = (z - sin z)/z^3 -> 1/6.
    """
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    if t == 0:
        return 0.0
    tau = p.omega_c * t
    x = p.omega_c * t_nm

    def integrand(y):
        return _twist_kernel(y * tau) * y ** (p.s + 1.0) * math.exp(-y) * math.cos(x * y)

    return p.alpha * tau**3 / 4.0 * _quad(integrand, "xi")


def short_time_coefficients(t, geom: LatticeGeometry, p: NoiseParams):
    """kappa_nm = kappa0^2 (omega_c t)^2 delta1, xi_nm = xi0^3 (omega_c t)^3 delta2."""
    tau = p.omega_c * t
    x = p.omega_c * geom.transit_times(p)
    kappa = p.kappa0_sq * tau**2 * delta1(x, p.s)
    xi = p.xi0_cu * tau**3 * delta2(x, p.s)
    return DynamicCoefficients(t, np.asarray(kappa, dtype=float), np.asarray(xi, dtype=float))


def quadrature_coefficients(t, geom: LatticeGeometry, p: NoiseParams):
    """Full-time coefficients from the overlap integrals, in the short-time normalization."""
    seps = geom.separations()
    kappa_by_sep, xi_by_sep = {}, {}
    for j in np.unique(seps):
        t_nm = j * geom.spacing / p.v
        kappa_by_sep[j] = kappa_quadrature(t, t_nm, p) / KAPPA_NORM
        xi_by_sep[j] = xi_quadrature(t, t_nm, p) / XI_NORM
    kappa = np.vectorize(kappa_by_sep.get, otypes=[float])(seps)
    xi = np.vectorize(xi_by_sep.get, otypes=[float])(seps)
    return DynamicCoefficients(t, kappa, xi)


def _check_pair(a: BasisString, b: BasisString, coeffs: DynamicCoefficients):
    if len(a) != len(b):
        raise ValueError(f"basis strings differ in length: {len(a)} != {len(b)}")
    if len(a) != coeffs.n_qubits:
        raise ValueError(
            f"basis strings have {len(a)} qubits, coefficients have {coeffs.n_qubits}"
        )


def gamma_pair(a: BasisString, b: BasisString, coeffs: DynamicCoefficients, weight=PAIR_WEIGHT):
    """Decay exponent of <a|rho|b>: weight * sum_nm (a_n - b_n)(a_m - b_m) kappa_nm."""
    _check_pair(a, b, coeffs)
    d = (a.signs - b.signs).astype(float)
    return float(weight * d @ coeffs.kappa @ d)


def phi0_pair(a: BasisString, b: BasisString, coeffs: DynamicCoefficients, weight=PAIR_WEIGHT):
    """Lamb-shift phase of <a|rho|b>: weight * sum_nm (b_n b_m - a_n a_m) xi_nm."""
    _check_pair(a, b, coeffs)
    sa = a.signs.astype(float)
    sb = b.signs.astype(float)
    return float(weight * (sb @ coeffs.xi @ sb - sa @ coeffs.xi @ sa))


def ghz_strings(n_qubits):
    return BasisString(np.ones(n_qubits, dtype=np.int64)), BasisString(-np.ones(n_qubits, dtype=np.int64))


def ghz_gamma(t, geom: LatticeGeometry, p: NoiseParams):
    """gamma_GHZ(t) = (omega_c t)^2 F_N(x0) in the short-time regime."""
    up, down = ghz_strings(geom.n_qubits)
    return gamma_pair(up, down, short_time_coefficients(t, geom, p))
