import math

import numpy as np
import pytest

from src.estimators import ghz_probabilities, ratio_uncertainty_moments
from src.exactsim import (
    MAX_QUBITS,
    CollectiveSpinOps,
    DensityMatrix,
    build_state,
    dump_moments_csv,
    evolve,
    expectation,
    state_vector,
    survival_probability,
)
from src.noise import DynamicCoefficients, LatticeGeometry, NoiseParams, ghz_gamma, short_time_coefficients
from src.oat import moments_short_time, optimal_angles
from src.utils import MOMENT_COLUMNS, read_csv

OHMIC3 = NoiseParams(alpha=1.0, s=3.0, omega_c=1.0)


def _classical(coeffs):
    return DynamicCoefficients(coeffs.time, coeffs.kappa, np.zeros_like(coeffs.kappa))


def _random_state(n_qubits, seed):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=2**n_qubits) + 1j * rng.normal(size=2**n_qubits)
    return DensityMatrix.from_pure(psi)


def test_ghz_two_qubits():
    rho = build_state("GHZ", 2).rho
    expected = np.zeros((4, 4))
    expected[np.ix_([0, 3], [0, 3])] = 0.5
    np.testing.assert_allclose(rho, expected, atol=1e-15)


@pytest.mark.parametrize("n", [1, 3, 6])
def test_untwisted_oat_is_css(n):
    np.testing.assert_allclose(build_state("OAT", n, 0.0, 0.0).rho, build_state("CSS_X", n).rho, atol=1e-14)


def test_oat_optimal_angles_squeeze_y():
    n = 10
    angles = optimal_angles(n)
    rho = build_state("OAT", n, angles.theta, angles.beta)
    m = CollectiveSpinOps(n).moments(rho)
    assert m.var_y < n / 4
    assert abs(m.jy) < 1e-12


def test_state_validation():
    with pytest.raises(ValueError):
        build_state("GHZ", MAX_QUBITS + 1)
    with pytest.raises(ValueError):
        build_state("NOON", 3)
    with pytest.raises(ValueError):
        DensityMatrix(np.eye(3) / 3)


def test_built_states_are_positive():
    for kind in ("GHZ", "GHZ_PRIME", "CSS_X", "OAT"):
        assert build_state(kind, 4, 0.3, 0.9).is_positive()


def test_collective_operators():
    ops = CollectiveSpinOps(4)
    comm = ops.jx @ ops.jy - ops.jy @ ops.jx
    np.testing.assert_allclose(comm.toarray(), 1j * ops.jz.toarray(), atol=1e-14)
    casimir = (ops.jx2 + ops.jy2 + ops.jz2).toarray()
    sym = state_vector("CSS_X", 4)
    assert np.vdot(sym, casimir @ sym).real == pytest.approx(2 * 3, rel=1e-12)
    with pytest.raises(ValueError):
        ops.get("jw")


def test_expectation_examples():
    n = 5
    css = build_state("CSS_X", n)
    assert expectation(css, "jx") == pytest.approx(n / 2, abs=1e-12)
    assert expectation(css, "jy") == pytest.approx(0.0, abs=1e-12)
    assert expectation(css, "jy2") == pytest.approx(n / 4, abs=1e-12)
    ghz = build_state("GHZ", n)
    assert expectation(ghz, state_vector("GHZ", n)) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        expectation(ghz, state_vector("GHZ", n - 1))


def test_evolve_with_zero_coefficients_is_identity():
    rho = build_state("OAT", 4, 0.4, 1.1)
    out = evolve(rho, 0.0, 0.3, DynamicCoefficients.zeros(4))
    np.testing.assert_allclose(out.rho, rho.rho, atol=1e-15)


def test_evolve_dimension_mismatch():
    with pytest.raises(ValueError):
        evolve(build_state("GHZ", 3), 1.0, 0.1, DynamicCoefficients.zeros(4))


def test_diagonal_invariant_and_trace():
    rho = _random_state(5, seed=3)
    coeffs = short_time_coefficients(0.2, LatticeGeometry(5, 0.6), OHMIC3)
    out = evolve(rho, 1.7, 0.2, coeffs)
    np.testing.assert_allclose(np.diag(out.rho), np.diag(rho.rho), atol=1e-15)
    assert np.trace(out.rho).real == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(out.rho, out.rho.conj().T, atol=1e-14)


def test_dense_and_sparse_paths_agree():
    coeffs = short_time_coefficients(0.1, LatticeGeometry(4, 0.5), OHMIC3)
    ghz = build_state("GHZ", 4)
    css = build_state("CSS_X", 4)
    mixed = DensityMatrix(0.5 * ghz.rho + 0.5 * css.rho)
    assert ghz.fill_fraction() < 0.25 < mixed.fill_fraction()
    combined = 0.5 * evolve(ghz, 2.0, 0.1, coeffs).rho + 0.5 * evolve(css, 2.0, 0.1, coeffs).rho
    np.testing.assert_allclose(evolve(mixed, 2.0, 0.1, coeffs).rho, combined, atol=1e-14)


@pytest.mark.parametrize("n", [6, 8, 10])
@pytest.mark.parametrize("x0", [0.0, 0.45, 1.0])
def test_ghz_survival_matches_closed_form(n, x0):
    b, t = 0.9, 0.07
    geom = LatticeGeometry(n, x0)
    coeffs = short_time_coefficients(t, geom, OHMIC3)
    gamma = ghz_gamma(t, geom, OHMIC3)
    out = evolve(build_state("GHZ", n), b, t, coeffs)
    probs = ghz_probabilities(b, t, n, gamma)
    assert survival_probability(out, "GHZ") == pytest.approx(probs.p, abs=1e-12)
    assert survival_probability(out, "GHZ_PRIME") == pytest.approx(probs.p_prime, abs=1e-12)


def test_zeeman_rotation_of_first_moments():
    n, bt = 5, 0.37
    rho = _random_state(n, seed=11)
    ops = CollectiveSpinOps(n)
    jx0, jy0 = expectation(rho, ops.jx), expectation(rho, ops.jy)
    out = evolve(rho, bt, 1.0, DynamicCoefficients.zeros(n))
    assert expectation(out, ops.jx) == pytest.approx(math.cos(bt) * jx0 - math.sin(bt) * jy0, abs=1e-10)
    assert expectation(out, ops.jy) == pytest.approx(math.sin(bt) * jx0 + math.cos(bt) * jy0, abs=1e-10)


def test_second_moment_structure():
    n, t = 6, 0.15
    angles = optimal_angles(n)
    rho = build_state("OAT", n, angles.theta, angles.beta)
    coeffs = short_time_coefficients(t, LatticeGeometry(n, 0.5), OHMIC3)
    ops = CollectiveSpinOps(n)
    phis = np.linspace(0.0, math.pi, 9, endpoint=False)
    jx2, total = [], []
    for phi in phis:
        m = ops.moments(evolve(rho, phi / t, t, coeffs))
        jx2.append(m.jx2)
        total.append(m.jx2 + m.jy2)
    np.testing.assert_allclose(total, total[0], atol=1e-10)
    design = np.column_stack([np.ones_like(phis), np.cos(2 * phis), np.sin(2 * phis)])
    fitted, *_ = np.linalg.lstsq(design, np.array(jx2), rcond=None)
    assert abs(fitted[2]) < 1e-9


@pytest.mark.parametrize("n", [6, 8, 10])
@pytest.mark.parametrize("tau", [0.02, 0.05])
def test_cumulant_moments_match_exact(n, tau):
    x0, b = 0.5, 3.0
    geom = LatticeGeometry(n, x0)
    angles = optimal_angles(n)
    coeffs = _classical(short_time_coefficients(tau, geom, OHMIC3))
    exact = CollectiveSpinOps(n).moments(evolve(build_state("OAT", n, angles.theta, angles.beta), b, tau, coeffs))
    approx = moments_short_time(tau, geom, OHMIC3, angles, b)
    assert approx.jx == pytest.approx(exact.jx, rel=2e-2)
    assert approx.var_x == pytest.approx(exact.var_x, rel=5e-2)
    assert approx.var_y == pytest.approx(exact.var_y, rel=5e-2)


def test_quantum_phase_barely_moves_ratio_uncertainty():
    n, tau = 8, 0.05
    geom = LatticeGeometry(n, 0.5)
    angles = optimal_angles(n)
    rho = build_state("OAT", n, angles.theta, angles.beta)
    ops = CollectiveSpinOps(n)
    full = short_time_coefficients(tau, geom, OHMIC3)
    b = math.pi / (4 * tau)
    with_xi = ratio_uncertainty_moments(ops.moments(evolve(rho, b, tau, full)), tau, 1.0)
    without = ratio_uncertainty_moments(ops.moments(evolve(rho, b, tau, _classical(full))), tau, 1.0)
    assert with_xi == pytest.approx(without, rel=5e-2)


def test_dump_moments_csv(tmp_path):
    n = 3
    ops = CollectiveSpinOps(n)
    rows = [(0.1, 0.0, ops.moments(build_state("CSS_X", n)))]
    path = tmp_path / "moments.csv"
    dump_moments_csv(rows, path)
    header, data = read_csv(path)
    assert tuple(header) == MOMENT_COLUMNS
    assert data[0][2] == pytest.approx(n / 2)
