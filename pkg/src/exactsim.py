"""
Exact small-N oracle. The dephasing model is solvable element-wise in the
z basis, so the density matrix is evolved directly: each element picks up
a Zeeman phase, the decay exp(-gamma_pair) and the Lamb-shift phase phi0_pair.

Basis convention: index bit 0 is spin up (sigma_z = +1) and qubit 0 is the
most significant bit, matching scipy.sparse.kron ordering.

"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit, prange
from scipy import sparse

from src.estimators import MomentSet
from src.noise import PAIR_WEIGHT, DynamicCoefficients
from src.utils import MOMENT_COLUMNS, write_csv

MAX_QUBITS = 12
# evolve iterates over nonzero elements only below this filling
SPARSE_FILL = 0.25
STATE_KINDS = ("GHZ", "GHZ_PRIME", "CSS_X", "OAT")
HERMITIAN_TOL = 1e-12


def _check_n(n_qubits):
    if int(n_qubits) != n_qubits or n_qubits < 1:
        raise ValueError(f"n_qubits must be a positive integer, got {n_qubits}")
    if n_qubits > MAX_QUBITS:
        raise ValueError(f"exact simulation is capped at {MAX_QUBITS} qubits, got {n_qubits}")
    return int(n_qubits)


def basis_signs(n_qubits):
    """(2^N, N) matrix of sigma_z eigenvalues, row i is basis state i."""
    idx = np.arange(2**n_qubits)[:, None]
    bits = (idx >> np.arange(n_qubits - 1, -1, -1)[None, :]) & 1
    return (1 - 2 * bits).astype(np.float64)


def magnetization(n_qubits):
    """J_z eigenvalue of every basis state."""
    return 0.5 * basis_signs(n_qubits).sum(axis=1)


@dataclass
class DensityMatrix:
    rho: np.ndarray = field(repr=False)
    n_qubits: int = 0

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=np.complex128)
        dim = self.rho.shape[0]
        if self.rho.shape != (dim, dim) or dim & (dim - 1):
            raise ValueError(f"density matrix must be 2^N square, got shape {self.rho.shape}")
        self.n_qubits = _check_n(int(round(math.log2(dim))))
        assert np.max(np.abs(self.rho - self.rho.conj().T)) <= HERMITIAN_TOL, "[!] rho is not Hermitian"
        assert abs(np.trace(self.rho) - 1.0) <= HERMITIAN_TOL, "[!] rho does not have unit trace"

    @property
    def dim(self):
        return self.rho.shape[0]

    @classmethod
    def from_pure(cls, psi):
        psi = np.asarray(psi, dtype=np.complex128)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    def is_positive(self, tol=1e-10):
        """Eigenvalue check, 2^N cubed cost."""
        return bool(np.linalg.eigvalsh(self.rho).min() >= -tol)

    def fill_fraction(self):
        return np.count_nonzero(self.rho) / self.rho.size


class CollectiveSpinOps:
    """Sparse collective spin operators J_u = sum_n sigma_n^u / 2 in the z basis."""

    NAMES = ("jx", "jy", "jz", "jx2", "jy2", "jz2")

    def __init__(self, n_qubits):
        self.n_qubits = _check_n(n_qubits)
        self.dim = 2**self.n_qubits
        paulis = {
            "jx": sparse.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)),
            "jy": sparse.csr_matrix(np.array([[0.0, -1j], [1j, 0.0]], dtype=np.complex128)),
            "jz": sparse.csr_matrix(np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)),
        }
        for name, pauli in paulis.items():
            setattr(self, name, 0.5 * self._collective(pauli))
        self.jx2 = (self.jx @ self.jx).tocsr()
        self.jy2 = (self.jy @ self.jy).tocsr()
        self.jz2 = (self.jz @ self.jz).tocsr()

        for name in self.NAMES:
            op = getattr(self, name)
            assert abs(op - op.conj().T).max() <= HERMITIAN_TOL, f"[!] {name} is not Hermitian"
        if self.n_qubits <= 6:
            comm = self.jx @ self.jy - self.jy @ self.jx - 1j * self.jz
            assert abs(comm).max() <= 1e-12, "[!] [Jx, Jy] != i Jz"

    def _collective(self, pauli):
        eye = sparse.identity(2, dtype=np.complex128, format="csr")
        total = sparse.csr_matrix((self.dim, self.dim), dtype=np.complex128)
        for n in range(self.n_qubits):
            term = sparse.identity(1, dtype=np.complex128, format="csr")
            for k in range(self.n_qubits):
                term = sparse.kron(term, pauli if k == n else eye, format="csr")
            total = total + term
        return total.tocsr()

    def get(self, name):
        if name not in self.NAMES:
            raise ValueError(f"unknown collective operator {name!r}, expected one of {self.NAMES}")
        return getattr(self, name)

    def moments(self, rho: DensityMatrix):
        return MomentSet(
            jx=expectation(rho, self.jx),
            jy=expectation(rho, self.jy),
            jx2=expectation(rho, self.jx2),
            jy2=expectation(rho, self.jy2),
        )


def state_vector(kind, n_qubits, theta=0.0, beta=0.0):
    """
    Pure input states.

    Args:
        kind (str): GHZ, GHZ_PRIME, CSS_X or OAT
        n_qubits (int): N <= MAX_QUBITS
        theta (float): twisting angle, OAT only
        beta (float): rotation angle about x, OAT only
    """
    n_qubits = _check_n(n_qubits)
    dim = 2**n_qubits
    if kind not in STATE_KINDS:
        raise ValueError(f"unknown state kind {kind!r}, expected one of {STATE_KINDS}")
    psi = np.zeros(dim, dtype=np.complex128)
    if kind == "GHZ":
        psi[0] = psi[-1] = 1.0 / math.sqrt(2.0)
        return psi
    if kind == "GHZ_PRIME":
        psi[0] = 1.0 / math.sqrt(2.0)
        psi[-1] = 1j / math.sqrt(2.0)
        return psi

    psi[:] = 1.0 / math.sqrt(dim)
    if kind == "CSS_X":
        return psi
    m = magnetization(n_qubits)
    psi = psi * np.exp(-0.5j * theta * m**2)
    rotation = np.array(
        [[math.cos(beta / 2), -1j * math.sin(beta / 2)], [-1j * math.sin(beta / 2), math.cos(beta / 2)]]
    )
    for k in range(n_qubits):
        psi = psi.reshape(2**k, 2, 2 ** (n_qubits - k - 1))
        psi = np.einsum("ab,ibj->iaj", rotation, psi)
    return psi.reshape(dim)


def build_state(kind, n_qubits, theta=0.0, beta=0.0):
    return DensityMatrix.from_pure(state_vector(kind, n_qubits, theta, beta))


@njit(parallel=True)
def _evolve_dense(rho, signs, a_kappa, q_kappa, q_xi, m, bt, weight):
    out = np.empty_like(rho)
    dim, n = signs.shape
    for i in prange(dim):
        for j in range(dim):
            if rho[i, j] == 0j:
                out[i, j] = 0j
                continue
            cross = 0.0
            for k in range(n):
                cross += a_kappa[i, k] * signs[j, k]
            decay = weight * (q_kappa[i] + q_kappa[j] - 2.0 * cross)
            phase = weight * (q_xi[j] - q_xi[i]) + bt * (m[j] - m[i])
            out[i, j] = rho[i, j] * cmath.exp(-decay + 1j * phase)
    return out


def _evolve_sparse(rho, signs, a_kappa, q_kappa, q_xi, m, bt, weight):
    rows, cols = np.nonzero(rho)
    cross = np.einsum("kn,kn->k", a_kappa[rows], signs[cols])
    decay = weight * (q_kappa[rows] + q_kappa[cols] - 2.0 * cross)
    phase = weight * (q_xi[cols] - q_xi[rows]) + bt * (m[cols] - m[rows])
    out = np.zeros_like(rho)
    out[rows, cols] = rho[rows, cols] * np.exp(-decay + 1j * phase)
    return out


def evolve(rho0: DensityMatrix, b, t, coeffs: DynamicCoefficients, weight=PAIR_WEIGHT):
    """
    <a|rho(t)|c> = exp(i b t (m_c - m_a)) exp(-gamma_pair(a, c) + i phi0_pair(a, c)) <a|rho0|c>.

    m is the J_z eigenvalue of a basis state, so the Zeeman factor is the
    conjugation by exp(-i b t J_z).
    """
    if coeffs.n_qubits != rho0.n_qubits:
        raise ValueError(
            f"coefficients are for {coeffs.n_qubits} qubits, state has {rho0.n_qubits}"
        )
    signs = basis_signs(rho0.n_qubits)
    a_kappa = signs @ coeffs.kappa
    q_kappa = np.einsum("kn,kn->k", a_kappa, signs)
    q_xi = np.einsum("kn,nm,km->k", signs, coeffs.xi, signs)
    m = 0.5 * signs.sum(axis=1)
    bt = float(b * t)

    fill = rho0.fill_fraction()
    if fill <= SPARSE_FILL:
        out = _evolve_sparse(rho0.rho, signs, a_kappa, q_kappa, q_xi, m, bt, weight)
    else:
        out = _evolve_dense(rho0.rho, signs, a_kappa, q_kappa, q_xi, m, bt, weight)
    logging.debug(f"evolve: N={rho0.n_qubits}, fill={fill:.3f}, bt={bt:.4g}")
    return DensityMatrix(out)


def expectation(rho: DensityMatrix, op, ops: CollectiveSpinOps | None = None):
    """
    Tr(rho O) for a collective operator (name or matrix) or the projector
    onto a pure state given as a state vector.
    """
    if isinstance(op, str):
        ops = ops if ops is not None else CollectiveSpinOps(rho.n_qubits)
        op = ops.get(op)
    if isinstance(op, np.ndarray) and op.ndim == 1:
        if op.shape[0] != rho.dim:
            raise ValueError(f"state has dimension {op.shape[0]}, rho has {rho.dim}")
        value = np.vdot(op, rho.rho @ op)
    else:
        if op.shape != rho.rho.shape:
            raise ValueError(f"operator has shape {op.shape}, rho has {rho.rho.shape}")
        if sparse.issparse(op):
            value = op.multiply(rho.rho.T).sum()
        else:
            value = np.sum(op * rho.rho.T)
    value = complex(value)
    assert abs(value.imag) <= 1e-10 * max(1.0, abs(value.real)), "[!] expectation is not real"
    return value.real


def survival_probability(rho: DensityMatrix, kind, theta=0.0, beta=0.0):
    return expectation(rho, state_vector(kind, rho.n_qubits, theta, beta))


def dump_moments_csv(rows, path):
    """rows: iterable of (tau, phi, MomentSet)."""
    records = [(tau, phi, m.jx, m.jy, m.jx2, m.jy2) for tau, phi, m in rows]
    write_csv(path, MOMENT_COLUMNS, records)
    logging.info(f"Wrote {len(records)} moment rows to {path}")
