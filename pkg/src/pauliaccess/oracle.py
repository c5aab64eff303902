"""Dense full-Hilbert-space ground truth for validating reduced models.

Evolution uses one eigendecomposition of the dense Hamiltonian, so the only
error source is double-precision linear algebra; the oracle must be strictly
more accurate than the reduced models it checks.  Widths are capped at
:data:`DENSE_CAP` qubits.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Sequence, Union

import numpy as np

from .hamiltonian import HamiltonianSpec
from .pauli import PauliString, WeightedPauliSum

__all__ = [
    "DenseOperator",
    "DENSE_CAP",
    "hamiltonian_matrix",
    "propagator",
    "evolve_expectation",
    "bch_partial_sum",
    "derivative_operators",
    "validate_density_matrix",
]

#: dense evolution cap (2^10 = 1024-dimensional matrices)
DENSE_CAP = 10


@dataclass(frozen=True)
class DenseOperator:
    """A dense operator with convenience structure checks."""

    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return bool(np.allclose(self.matrix, self.matrix.conj().T, atol=tol))

    def is_unitary(self, tol: float = 1e-10) -> bool:
        eye = np.eye(self.dim)
        return bool(
            np.max(np.abs(self.matrix.conj().T @ self.matrix - eye)) <= tol
        )


def _check_cap(n_qubits: int, cap: int) -> None:
    if n_qubits > cap:
        raise ValueError(f"dense oracle capped at {cap} qubits, got {n_qubits}")


def hamiltonian_matrix(spec: HamiltonianSpec, cap: int = DENSE_CAP) -> np.ndarray:
    _check_cap(spec.n_qubits, cap)
    return spec.terms.to_matrix()


def validate_density_matrix(rho: np.ndarray, n_qubits: int) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    dim = 1 << n_qubits
    if rho.shape != (dim, dim):
        raise ValueError(f"density matrix shape {rho.shape}, expected {(dim, dim)}")
    if not np.allclose(rho, rho.conj().T, atol=1e-10):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-10:
        raise ValueError("density matrix trace is not 1")
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise ValueError("density matrix is not positive semidefinite")
    return rho


def propagator(spec: HamiltonianSpec, t: float, cap: int = DENSE_CAP) -> DenseOperator:
    """U(t) = exp(-i H t) via eigendecomposition; checked unitary."""
    h = hamiltonian_matrix(spec, cap)
    w, v = np.linalg.eigh(h)
    u = (v * np.exp(-1j * w * t)) @ v.conj().T
    op = DenseOperator(u)
    if not op.is_unitary(1e-10):
        raise RuntimeError("propagator failed the unitarity check")
    return op


def evolve_expectation(
    spec: HamiltonianSpec,
    meas: Union[WeightedPauliSum, PauliString],
    rho0: np.ndarray,
    times: Sequence[float],
    cap: int = DENSE_CAP,
) -> np.ndarray:
    """Tr(M(t) rho0) = Tr(M U rho0 U^dag) on the full Hilbert space."""
    _check_cap(spec.n_qubits, cap)
    rho0 = validate_density_matrix(rho0, spec.n_qubits)
    m = meas.to_matrix()
    h = hamiltonian_matrix(spec, cap)
    w, v = np.linalg.eigh(h)
    rho_eig = v.conj().T @ rho0 @ v
    m_eig = v.conj().T @ m @ v
    out = np.empty(len(times))
    for i, t in enumerate(times):
        phase = np.exp(-1j * w * t)
        # Tr(M U rho U^dag) in the eigenbasis: U is diagonal there
        rho_t = (phase[:, None] * rho_eig) * phase.conj()[None, :]
        out[i] = np.trace(m_eig @ rho_t).real
    return out


def bch_partial_sum(
    spec: HamiltonianSpec,
    meas: PauliString,
    order: int,
    t: float,
    cap: int = DENSE_CAP,
) -> DenseOperator:
    """Truncated commutator series of M(t) = M + [H,M] it + [H,[H,M]] (it)^2/2! + ...

    Nested commutators are computed densely; ``order`` is the highest power
    of t retained (at most 20).
    """
    _check_cap(spec.n_qubits, cap)
    if not 0 <= order <= 20:
        raise ValueError(f"order must lie in 0..20, got {order}")
    h = hamiltonian_matrix(spec, cap)
    nested = meas.to_matrix().astype(complex)
    total = nested.copy()
    for k in range(1, order + 1):
        nested = h @ nested - nested @ h
        total += nested * (1j * t) ** k / factorial(k)
    return DenseOperator(total)


def derivative_operators(
    spec: HamiltonianSpec, meas: PauliString, count: int, cap: int = DENSE_CAP
) -> list[np.ndarray]:
    """Dense time derivatives of M(t) at t = 0 up to order ``count``.

    The k-th derivative is i^k [H, [H, ... [H, M]]] with k nested
    commutators, which is Hermitian and so admits a real basis expansion.
    """
    _check_cap(spec.n_qubits, cap)
    h = hamiltonian_matrix(spec, cap)
    out = []
    cur = meas.to_matrix().astype(complex)
    for k in range(1, count + 1):
        cur = h @ cur - cur @ h
        out.append((1j**k) * cur)
    return out
