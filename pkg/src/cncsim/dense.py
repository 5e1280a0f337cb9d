"""Dense-matrix ground truth for small n.

Qubit 0 is the leftmost tensor factor, matching the text form of Pauli
strings. Everything here is a test fixture: sizes are capped at n = 6.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .cnc_space import CncDescriptor, validate
from .symplectic import NotSymplecticError, PauliPoint, phi, symplectic_form

__all__ = [
    "MAX_QUBITS",
    "DenseOperator",
    "pauli_matrix",
    "cnc_dense",
    "projector",
    "stab_projector",
    "gate_unitary",
    "circuit_unitary",
    "t_state",
    "t_state_density",
    "UpdateReport",
    "verify_update",
    "max_abs",
]

MAX_QUBITS = 6
TOL = 1e-12

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_S = np.diag([1, 1j]).astype(complex)
_T = np.diag([1, np.exp(1j * np.pi / 4)]).astype(complex)


def _cap(n: int) -> None:
    if n > MAX_QUBITS:
        raise ValueError(f"dense oracle limited to n <= {MAX_QUBITS}, got {n}")


@dataclass(frozen=True)
class DenseOperator:
    n: int
    matrix: np.ndarray

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def is_hermitian(self, tol: float = TOL) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) < tol)


def max_abs(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def _kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, mats, np.eye(1, dtype=complex))


def pauli_matrix(a: PauliPoint) -> np.ndarray:
    """T_a = i^phi(a) X^{a_X} Z^{a_Z}."""
    _cap(a.n)
    factors = []
    for i in range(a.n):
        f = _I2
        if a.x >> i & 1:
            f = _X
        if a.z >> i & 1:
            f = f @ _Z
        factors.append(f)
    return (1j ** phi(a)) * _kron_all(factors)


def cnc_dense(desc: CncDescriptor, check: bool = True) -> np.ndarray:
    """A_Omega^gamma = 2^-n sum_{a in Omega} (-1)^gamma(a) T_a."""
    _cap(desc.n)
    if check:
        rep = validate(desc)
        if not rep:
            raise ValueError(f"invalid descriptor: {rep.problems[:3]}")
    dim = 1 << desc.n
    out = np.zeros((dim, dim), dtype=complex)
    for a, g in desc.omega_with_values():
        out += (-1) ** g * pauli_matrix(a)
    return out / dim


def projector(b: PauliPoint, r: int) -> np.ndarray:
    """Pi_b^r = (I + (-1)^r T_b) / 2."""
    _cap(b.n)
    return (np.eye(1 << b.n, dtype=complex) + (-1) ** (r & 1) * pauli_matrix(b)) / 2


def stab_projector(basis: Sequence[PauliPoint], s: Sequence[int], n: int | None = None) -> np.ndarray:
    """(1/|I|) sum_{a in I} (-1)^{s(a)} T_a with s extended multiplicatively."""
    basis = list(basis)
    if n is None:
        n = basis[0].n
    _cap(n)
    for i in range(len(basis)):
        for j in range(i + 1, len(basis)):
            if symplectic_form(basis[i], basis[j]):
                raise NotSymplecticError("basis is not isotropic")
    out = np.eye(1 << n, dtype=complex)
    for b, v in zip(basis, s):
        out = out @ projector(b, v)
    return out


def gate_unitary(name: str, qubits: Sequence[int], n: int) -> np.ndarray:
    """Full 2^n unitary of H, S, T, TDG or CX on 0-based qubits."""
    _cap(n)
    if name == "CX":
        c, t = qubits
        dim = 1 << n
        U = np.zeros((dim, dim), dtype=complex)
        for col in range(dim):
            bits = col
            # qubit i is bit (n - 1 - i) of the basis index
            if bits >> (n - 1 - c) & 1:
                bits ^= 1 << (n - 1 - t)
            U[bits, col] = 1
        return U
    single = {"H": _H, "S": _S, "T": _T, "TDG": _T.conj().T}[name]
    (q,) = qubits
    return _kron_all([single if i == q else _I2 for i in range(n)])


def circuit_unitary(gates: Sequence[tuple], n: int) -> np.ndarray:
    """Product of gates applied left to right; gates are (name, q...) with 0-based qubits."""
    _cap(n)
    U = np.eye(1 << n, dtype=complex)
    for g in gates:
        U = gate_unitary(g[0], g[1:], n) @ U
    return U


def t_state() -> np.ndarray:
    return np.array([1, np.exp(1j * np.pi / 4)], dtype=complex) / np.sqrt(2)


def t_state_density(k: int) -> np.ndarray:
    v = t_state()
    rho = np.outer(v, v.conj())
    return _kron_all([rho] * k)


# ---------------------------------------------------------------------------
# Measurement-update identity
# ---------------------------------------------------------------------------


@dataclass
class UpdateReport:
    case: str
    outcome: int
    max_error: float
    branches: int
    probability: float

    @property
    def ok(self) -> bool:
        return self.max_error < TOL


def verify_update(desc: CncDescriptor, b: PauliPoint, r: int) -> UpdateReport:
    """Compare Pi_b^r A Pi_b^r with the mixture assembled from tableau branches.

    The tableau engine is driven through every value of its random inputs
    (Case II flip, Case III s bits) with the outcome forced to r; each branch
    is decoded densely. The expected right-hand side is
    p(r) * average over branches, with p(r) in {0, 1/2, 1}.
    """
    from .tableau import CncTableau

    if desc.n > 4:
        raise ValueError("verify_update is limited to n <= 4")
    A = cnc_dense(desc)
    P = projector(b, r)
    lhs = P @ A @ P
    tab = CncTableau.from_descriptor(desc)
    case = tab.case_of(b)
    branches = tab.enumerate_branches(b, r)
    if not branches:
        rhs = np.zeros_like(lhs)
        prob = 0.0
    else:
        prob = branches[0][0]
        rhs = sum(cnc_dense(t.to_descriptor(), check=False) for _, t in branches) / len(branches) * prob
    return UpdateReport(case.tag, r, max_abs(lhs - rhs), len(branches), prob)
