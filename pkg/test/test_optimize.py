import math

import numpy as np
import pytest

from src.estimators import ratio_uncertainty_ghz, std_uncertainty_ghz
from src.noise import LatticeGeometry, NoiseParams
from src.oat import asymptotic_coefficients, oat_ratio_uncertainty, oat_uncertainty_expansion, optimal_angles, printed_coefficients, series_coefficients
from src.optimize import (
    GHZ_PRINTED_PREFACTOR,
    OAT_ZENO_PRINTED_PREFACTOR,
    X0_BOUNDS,
    OptimumRecord,
    css_optimum_numeric,
    f_n_analytic,
    f_n_direct,
    f_n_polygamma,
    fit_log_law,
    fit_power_law,
    ghz_lattice_uncertainty,
    ghz_optimal_time,
    ghz_optimum_analytic,
    ghz_prefactor,
    ghz_ratio_optimum_numeric,
    ghz_time_optimized_uncertainty,
    ghz_x0_analytic,
    minimize_1d,
    minimize_2d,
    oat_optimal_time,
    oat_optimal_uncertainty,
    oat_optimum_numeric,
    oat_x0_analytic,
    oat_x0_printed,
    sweep_and_fit,
)

OHMIC3 = NoiseParams(alpha=1.0, s=3.0, omega_c=1.0)


def test_f_n_direct_examples():
    assert f_n_direct(3, 1.0, OHMIC3) == pytest.approx(11.8656, abs=1e-4)
    assert f_n_direct(1, 0.7, OHMIC3) == pytest.approx(OHMIC3.kappa0_sq)
    assert f_n_direct(25, 0.0, OHMIC3) == pytest.approx(25**2 * OHMIC3.kappa0_sq)
    with pytest.raises(ValueError):
        f_n_direct(0, 1.0, OHMIC3)


@pytest.mark.parametrize("n", [2, 5, 20, 200])
@pytest.mark.parametrize("x0", [0.3, 1.0, 3.0])
def test_polygamma_series_matches_direct_sum(n, x0):
    assert f_n_polygamma(n, x0, OHMIC3) == pytest.approx(f_n_direct(n, x0, OHMIC3), rel=1e-8)


def test_polygamma_series_validation():
    with pytest.raises(ValueError):
        f_n_polygamma(10, 0.5, NoiseParams(s=2.0))
    with pytest.raises(ValueError):
        f_n_polygamma(10, 0.0, OHMIC3)


@pytest.mark.parametrize("n", [100, 1000])
def test_analytic_f_n_near_optimal_spacing(n):
    x0 = ghz_x0_analytic(n)
    direct = f_n_direct(n, x0, OHMIC3)
    assert f_n_analytic(n, x0, OHMIC3) == pytest.approx(direct, rel=0.15)
    assert f_n_analytic(n, x0) * OHMIC3.kappa0_sq == pytest.approx(f_n_analytic(n, x0, OHMIC3), rel=1e-12)
    with pytest.raises(ValueError):
        f_n_analytic(n, x0, NoiseParams(s=1.0))


def test_f_n_grows_slowly_at_analytic_spacing():
    sizes = [10**2, 10**3, 10**4, 10**6]
    values = [f_n_analytic(n, ghz_x0_analytic(n)) for n in sizes]
    assert values[0] == pytest.approx(2.210, abs=5e-3)
    assert np.all(np.diff(values) > 0)
    assert values[-1] < 4 * values[0]


def test_ghz_analytic_spacing():
    assert ghz_x0_analytic(100) == pytest.approx(0.45337, abs=1e-4)
    assert ghz_x0_analytic(20) == pytest.approx(0.5355, abs=1e-3)
    assert ghz_x0_analytic(100, exact=True) == pytest.approx(0.418, abs=1e-3)
    with pytest.raises(ValueError):
        ghz_x0_analytic(1)


def test_ghz_prefactors():
    assert GHZ_PRINTED_PREFACTOR == pytest.approx(2.96, abs=0.01)
    assert GHZ_PRINTED_PREFACTOR == pytest.approx(2.953, abs=0.01)
    assert GHZ_PRINTED_PREFACTOR == pytest.approx(2 * ghz_prefactor())
    assert ghz_prefactor() == pytest.approx(1.48083, abs=1e-5)
    assert OAT_ZENO_PRINTED_PREFACTOR == pytest.approx(0.9036, abs=1e-4)


def test_ghz_optimal_time_scaling():
    assert ghz_optimal_time(4.0, 1.0) == pytest.approx(0.5 * ghz_optimal_time(1.0, 1.0))
    assert ghz_optimal_time(1.0, 2.0) == pytest.approx(0.5 * ghz_optimal_time(1.0, 1.0))
    with pytest.raises(ValueError):
        ghz_optimal_time(0.0, 1.0)


@pytest.mark.parametrize("alpha, expected", [(1.0, 0.0016282), (1.0 / 3.0, 0.0028201)])
def test_ghz_collective_optimal_time(alpha, expected):
    p = NoiseParams(alpha=alpha)
    F = f_n_direct(100, 0.0, p)
    assert ghz_optimal_time(F, p.omega_c) == pytest.approx(expected, rel=1e-4)


@pytest.mark.parametrize("F, n", [(6.0e4, 100), (37.0, 12)])
def test_ghz_closed_form_matches_numeric_minimum(F, n):
    T = 2.0

    def f(tau):
        return ratio_uncertainty_ghz(math.pi / (4 * n * tau), tau, n, F * tau**2, T)

    tau_closed = ghz_optimal_time(F, 1.0)
    tau, value = minimize_1d(f, (0.05 * tau_closed, 20 * tau_closed), log=True, tol=1e-10)
    assert tau == pytest.approx(tau_closed, rel=1e-3)
    assert value == pytest.approx(ghz_time_optimized_uncertainty(F, 1.0, T, n), rel=1e-3)


def test_ghz_collective_uncertainty_prefactor():
    n, T = 50, 1.0
    kappa0 = math.sqrt(OHMIC3.kappa0_sq)
    F = f_n_direct(n, 0.0, OHMIC3)
    value = ghz_time_optimized_uncertainty(F, 1.0, T, n)
    assert value == pytest.approx(1.4808 * math.sqrt(kappa0 / (T * n)), rel=1e-4)


def test_collective_standard_optimum_by_minimization():
    n, T = 100, 1.0
    kappa0 = math.sqrt(OHMIC3.kappa0_sq)

    def f(tau):
        gamma = f_n_direct(n, 0.0, OHMIC3) * tau**2
        return std_uncertainty_ghz(math.pi / (2 * n * tau), tau, n, gamma, 2 * T)

    tau, value = minimize_1d(f, (1e-4, 1e-2), log=True, tol=1e-10)
    assert tau == pytest.approx(0.002041, rel=1e-3)
    assert value == pytest.approx(math.exp(0.25) * math.sqrt(kappa0 / (T * n)), rel=1e-2)


def test_ghz_lattice_uncertainty_collective_limit():
    n, tau, T = 8, 0.01, 1.0
    gamma = n**2 * OHMIC3.kappa0_sq * tau**2
    expected = ratio_uncertainty_ghz(math.pi / (4 * n * tau), tau, n, gamma, T)
    assert ghz_lattice_uncertainty(tau, 0.0, n, OHMIC3, T) == pytest.approx(expected)


def test_ghz_optimum_analytic_record():
    record = ghz_optimum_analytic(100, OHMIC3, 1.0)
    assert record.method == "analytic"
    assert record.x0_opt == pytest.approx(ghz_x0_analytic(100))
    F = f_n_analytic(100, record.x0_opt, OHMIC3)
    assert record.tau_opt == pytest.approx(ghz_optimal_time(F, 1.0))


def test_ghz_numeric_optimum_spacing():
    record = ghz_ratio_optimum_numeric(100, OHMIC3, 1.0)
    assert record.x0_opt == pytest.approx(0.43, abs=0.02)
    F = f_n_direct(100, record.x0_opt, OHMIC3)
    assert record.tau_opt == pytest.approx(ghz_optimal_time(F, 1.0), rel=1e-3)


@pytest.mark.parametrize("n", [20, 100])
def test_ghz_analytic_optimum_close_to_numeric(n):
    numeric = ghz_ratio_optimum_numeric(n, OHMIC3, 1.0)
    analytic = ghz_optimum_analytic(n, OHMIC3, 1.0)
    assert analytic.delta_b_opt == pytest.approx(numeric.delta_b_opt, rel=5e-2)


@pytest.mark.parametrize("n", [50, 200])
def test_css_optimum(n):
    T = 1.0
    record = css_optimum_numeric(n, OHMIC3, T)
    kappa0 = math.sqrt(OHMIC3.kappa0_sq)
    assert record.delta_b_opt == pytest.approx(math.sqrt(kappa0 / T) * n**-0.25, rel=1e-2)
    assert record.tau_opt == pytest.approx(1.0 / (kappa0 * math.sqrt(n)), rel=5e-2)


def test_oat_optimal_time_asymptotic():
    n = 10**4
    p = OHMIC3
    tau = oat_optimal_time(asymptotic_coefficients(n, p), p.omega_c)
    assert tau == pytest.approx(0.70597 / math.sqrt(p.kappa0_sq) * n ** (-1 / 6), rel=1e-4)


def test_oat_asymptotic_uncertainty_scaling():
    p, T = OHMIC3, 1.0
    small = oat_optimal_uncertainty(asymptotic_coefficients(1000, p), p.omega_c, T)
    large = oat_optimal_uncertainty(asymptotic_coefficients(16000, p), p.omega_c, T)
    assert large / small == pytest.approx(16 ** (-0.75), rel=1e-10)
    assert small == pytest.approx(1.9933 * p.kappa0_sq**0.25 * 1000 ** (-0.75), rel=1e-3)


@pytest.mark.parametrize("n, x0", [(30, 0.5), (200, 0.45)])
def test_oat_closed_form_matches_expansion_minimum(n, x0):
    p, T = OHMIC3, 1.5
    coeffs = series_coefficients(n, x0, p)
    tau_closed = oat_optimal_time(coeffs, p.omega_c)
    tau, value = minimize_1d(
        lambda t: oat_uncertainty_expansion(t, coeffs, p, T), (0.05 * tau_closed, 20 * tau_closed), tol=1e-10, log=True
    )
    assert tau == pytest.approx(tau_closed, rel=1e-3)
    assert value == pytest.approx(oat_optimal_uncertainty(coeffs, p.omega_c, T), rel=1e-6)


def test_oat_analytic_spacing():
    assert oat_x0_analytic(30) == pytest.approx(0.4786, abs=1e-3)
    assert oat_x0_printed(30) == pytest.approx(3.976, abs=1e-3)
    x0, _ = minimize_1d(lambda x: printed_coefficients(30, x, OHMIC3).a2, (0.3, 0.8))
    assert x0 == pytest.approx(oat_x0_analytic(30), abs=0.05)
    with pytest.raises(ValueError):
        oat_x0_analytic(1)


def test_oat_numeric_optimum_is_local_minimum():
    n, p, T = 20, OHMIC3, 1.0
    record = oat_optimum_numeric(n, p, T)
    angles = optimal_angles(n)
    assert X0_BOUNDS[0] <= record.x0_opt <= X0_BOUNDS[1]

    def f(tau, x0):
        return oat_ratio_uncertainty(tau, LatticeGeometry(n, x0), p, angles, T)

    assert f(record.tau_opt, record.x0_opt) == pytest.approx(record.delta_b_opt)
    for dt, dx in [(1.05, 0.0), (0.95, 0.0), (1.0, 0.01), (1.0, -0.01)]:
        x0 = min(max(record.x0_opt + dx, X0_BOUNDS[0]), X0_BOUNDS[1])
        assert f(dt * record.tau_opt, x0) >= record.delta_b_opt * (1 - 1e-9)


def test_minimize_1d():
    x, fx = minimize_1d(lambda x: (x - 2.0) ** 2 + 1.0, (0.0, 5.0))
    assert x == pytest.approx(2.0, abs=1e-6)
    assert fx == pytest.approx(1.0)
    assert minimize_1d(lambda x: x, (1.0, 3.0)) == (1.0, 1.0)
    x, _ = minimize_1d(lambda x: (math.log(x) - 1.0) ** 2, (0.1, 100.0), log=True)
    assert x == pytest.approx(math.e, rel=1e-6)


def test_minimize_1d_errors():
    with pytest.raises(ValueError):
        minimize_1d(lambda x: x, (3.0, 1.0))
    with pytest.raises(ValueError):
        minimize_1d(lambda x: x, (0.0, 1.0), log=True)
    with pytest.raises(RuntimeError):
        minimize_1d(lambda x: math.nan, (0.0, 1.0))


def test_minimize_2d_bowl():
    def bowl(tau, x0):
        return 1.0 + (math.log(tau / 0.3)) ** 2 + (x0 - 0.5) ** 2

    record = minimize_2d(bowl, ((0.01, 10.0), (0.2, 1.2)), n_qubits=4)
    assert record.tau_opt == pytest.approx(0.3, rel=1e-4)
    assert record.x0_opt == pytest.approx(0.5, abs=1e-4)
    assert record.delta_b_opt == pytest.approx(1.0)
    with pytest.raises(ValueError):
        minimize_2d(bowl, ((0.0, 1.0), (0.2, 1.2)))


def test_optimum_record_validation():
    with pytest.raises(ValueError):
        OptimumRecord(4, 0.5, 0.1, 1.0, "guess")
    with pytest.raises(ValueError):
        OptimumRecord(4, 0.5, 0.1, 0.0, "numeric")
    assert OptimumRecord(4, 0.5, 0.1, 1.0, "numeric").as_row() == (4, 0.5, 0.1, 1.0, "numeric")


def test_fit_power_law():
    n = np.array([10, 20, 40, 80, 160])
    fit = fit_power_law(n, 3.0 * n**-0.5)
    assert fit.exponent == pytest.approx(-0.5)
    assert fit.prefactor == pytest.approx(3.0)
    assert fit.r_squared == pytest.approx(1.0)

    bent = 3.0 * n**-0.5 * np.array([2.0, 1.2, 1.0, 1.0, 1.0])
    trimmed = fit_power_law(n, bent, curvature_tol=1e-3)
    assert trimmed.n_min > 10

    with pytest.raises(ValueError):
        fit_power_law([1, 2], [1.0])
    with pytest.raises(ValueError):
        fit_power_law([1], [1.0])
    with pytest.raises(ValueError):
        fit_power_law([1, 2], [1.0, -1.0])


def test_fit_log_law():
    n = np.array([10, 100, 1000, 10000])
    fit = fit_log_law(n, 2.0 * np.sqrt(np.log(n)) / n)
    assert fit.exponent == pytest.approx(0.0, abs=1e-12)
    assert fit.prefactor == pytest.approx(2.0)


def test_sweep_validation():
    with pytest.raises(ValueError):
        sweep_and_fit("NOON", [10, 20], OHMIC3, 1.0)
    with pytest.raises(ValueError):
        sweep_and_fit("CSS", [], OHMIC3, 1.0)
    with pytest.raises(ValueError):
        sweep_and_fit("CSS", [20, 10], OHMIC3, 1.0)


@pytest.mark.slow
def test_css_sweep_exponent():
    records, fit = sweep_and_fit("CSS", [50, 100, 200, 400, 800], OHMIC3, 1.0)
    assert [r.n_qubits for r in records] == [50, 100, 200, 400, 800]
    assert fit.exponent == pytest.approx(-0.25, abs=0.02)


@pytest.mark.slow
def test_ghz_sweep_is_close_to_heisenberg():
    sizes = [20, 40, 80, 160, 320]
    records, fit = sweep_and_fit("GHZ", sizes, OHMIC3, 1.0)
    assert abs(fit.exponent) < 0.15
    plain = fit_power_law(sizes, [r.delta_b_opt for r in records])
    assert -1.0 < plain.exponent < -0.85


@pytest.mark.slow
def test_ohmic_bath_scales_worse_than_super_ohmic():
    sizes = [20, 40, 80, 160]
    super_ohmic, _ = sweep_and_fit("GHZ", sizes, OHMIC3, 1.0)
    ohmic, _ = sweep_and_fit("GHZ", sizes, NoiseParams(alpha=1.0, s=0.0), 1.0)
    steep = fit_power_law(sizes, [r.delta_b_opt for r in super_ohmic])
    shallow = fit_power_law(sizes, [r.delta_b_opt for r in ohmic])
    assert shallow.exponent > steep.exponent + 0.1


@pytest.mark.slow
def test_oat_sweep_beats_standard_quantum_limit():
    sizes = [20, 40, 80, 160]
    records, fit = sweep_and_fit("OAT", sizes, OHMIC3, 1.0)
    assert all(X0_BOUNDS[0] <= r.x0_opt <= X0_BOUNDS[1] for r in records)
    assert -0.9 < fit.exponent < -0.6
