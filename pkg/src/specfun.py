"""
Special functions for the lattice sums and optima: Gamma, complex Polygamma,
real Lambert-W branches and Chebyshev polynomials of the first kind.

"""

import math

import numpy as np
from scipy import special

# Re(z) reached by the upward recurrence before the asymptotic series is used
POLYGAMMA_SHIFT = 10.0
LAMBERTW_MAX_ITER = 50
INV_E = math.exp(-1.0)

# B_2 ... B_20
_BERNOULLI_EVEN = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
)


def gamma(x):
    """Euler Gamma on the positive real axis."""
    if not x > 0:
        raise ValueError(f"gamma is only defined here for x > 0, got {x}")
    return float(special.gamma(x))


def _polygamma_asymptotic(m, z):
    if m == 0:
        value = np.log(z) - 0.5 / z
        z2 = z * z
        z2k = z2
        for k, b2k in enumerate(_BERNOULLI_EVEN, start=1):
            value -= b2k / (2 * k * z2k)
            z2k *= z2
        return value

    sign = (-1) ** (m + 1)
    value = math.factorial(m - 1) / z**m + math.factorial(m) / (2.0 * z ** (m + 1))
    for k, b2k in enumerate(_BERNOULLI_EVEN, start=1):
        value += (
            b2k
            * math.factorial(2 * k + m - 1)
            / (math.factorial(2 * k) * z ** (2 * k + m))
        )
    return sign * value


def polygamma(m, z):
    """
    Polygamma of order m at a complex argument.

    The argument is pushed to Re(z) >= POLYGAMMA_SHIFT with
    psi^(m)(z) = psi^(m)(z+1) - (-1)^m m! z^(-m-1), then the Bernoulli
    asymptotic series is summed.

    Args:
        m (int): order, m >= 0
        z (complex): argument, not a non-positive integer
    """
    if int(m) != m or m < 0:
        raise ValueError(f"polygamma order must be a non-negative integer, got {m}")
    m = int(m)
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"polygamma argument must be finite, got {z}")
    if z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real):
        raise ValueError(f"polygamma has a pole at z = {z.real:g}")

    correction = 0j
    step = (-1) ** m * math.factorial(m)
    while z.real < POLYGAMMA_SHIFT:
        correction -= step / z ** (m + 1)
        z += 1.0
    value = complex(_polygamma_asymptotic(m, z)) + correction
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise ValueError(f"polygamma({m}, {z}) is not finite")
    return value


def _lambert_w_guess(branch, x):
    # branch-point series p - p^2/3 with p = -/+ sqrt(2(ex + 1))
    p = math.sqrt(max(2.0 * (math.e * x + 1.0), 0.0))
    if branch == 0:
        if x < -0.25:
            return -1.0 + p - p * p / 3.0
        if x < 3.0:
            return math.log1p(x) if x > -0.25 else x
        lx = math.log(x)
        return lx - math.log(lx)
    if x < -0.25:
        return -1.0 - p - p * p / 3.0
    lx = math.log(-x)
    return lx - math.log(-lx)


def lambert_w(branch, x):
    """
    Real Lambert-W, w with w e^w = x, on branch 0 or -1 by Halley iteration.

    Args:
        branch (int): 0 (x >= -1/e) or -1 (-1/e <= x < 0)
        x (float): argument
    """
    if branch not in (0, -1):
        raise ValueError(f"lambert_w branch must be 0 or -1, got {branch}")
    x = float(x)
    if not math.isfinite(x) or x < -INV_E * (1.0 + 1e-15):
        raise ValueError(f"lambert_w argument {x} is below the branch point -1/e")
    if branch == -1 and x >= 0.0:
        raise ValueError(f"lambert_w branch -1 needs -1/e <= x < 0, got {x}")
    if x == 0.0:
        return 0.0
    if abs(x + INV_E) <= 1e-15:
        return -1.0

    w = _lambert_w_guess(branch, x)
    tol = min(1e-14 * max(1.0, abs(x)), 1e-13 * abs(x))
    for _ in range(LAMBERTW_MAX_ITER):
        ew = math.exp(w)
        f = w * ew - x
        if abs(f) <= tol:
            return w
        w1 = w + 1.0
        if w1 == 0.0:
            return w
        dw = f / (ew * w1 - (w + 2.0) * f / (2.0 * w1))
        w -= dw
        if abs(dw) <= 1e-16 * (1.0 + abs(w)):
            return w
    raise RuntimeError(
        f"lambert_w({branch}, {x}) did not converge in {LAMBERTW_MAX_ITER} iterations"
    )


def chebyshev_T(n, x):
    """T_n(x) by T_{k+1} = 2x T_k - T_{k-1}; x may be an array."""
    if int(n) != n or n < 0:
        raise ValueError(f"chebyshev_T degree must be a non-negative integer, got {n}")
    x = np.asarray(x, dtype=float)
    t_prev = np.ones_like(x)
    if n == 0:
        return t_prev if t_prev.ndim else float(t_prev)
    t_cur = x.copy()
    for _ in range(int(n) - 1):
        t_prev, t_cur = t_cur, 2.0 * x * t_cur - t_prev
    return t_cur if t_cur.ndim else float(t_cur)
