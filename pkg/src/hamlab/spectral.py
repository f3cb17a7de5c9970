"""Null spaces, spectral gaps and subspace angles for the Kitaev operators,
plus the quantities used when bounding the acceptance of cheating witnesses.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .circuit import VerificationCircuit
from .kitaev import ClockEncoding, KitaevHamiltonian, compile_circuit

ZERO_TOL = 1e-8
SLACK = 1e-9


def _dense(a) -> np.ndarray:
    mat = a.toarray() if sp.issparse(a) else np.asarray(a, dtype=complex)
    return 0.5 * (mat + mat.conj().T)


@dataclass(frozen=True, eq=False)
class Subspace:
    basis: np.ndarray  # orthonormal columns
    ambient: int

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=complex).reshape(self.ambient, -1)
        if basis.shape[1] and np.max(np.abs(basis.conj().T @ basis - np.eye(basis.shape[1]))) > 1e-10:
            raise ValueError("subspace basis is not orthonormal")
        object.__setattr__(self, "basis", basis)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def contains(self, vec: np.ndarray, tol: float = 1e-9) -> bool:
        vec = np.asarray(vec)
        return np.linalg.norm(vec - self.basis @ (self.basis.conj().T @ vec)) <= tol * max(1.0, np.linalg.norm(vec))


def smallest_nonzero_eigenvalue(a, zero_tol: float = ZERO_TOL) -> float:
    """Delta(A): the smallest eigenvalue of a PSD operator above ``zero_tol``."""
    evals = np.linalg.eigvalsh(_dense(a))
    if evals[0] < -1e-10:
        raise ValueError(f"operator is not PSD (eigenvalue {evals[0]:.3g})")
    nonzero = evals[evals > zero_tol]
    if nonzero.size == 0:
        raise ValueError("operator has no nonzero eigenvalue")
    return float(nonzero[0])


def null_space(a, zero_tol: float = ZERO_TOL) -> Subspace:
    mat = _dense(a)
    evals, evecs = np.linalg.eigh(mat)
    return Subspace(evecs[:, evals <= zero_tol], mat.shape[0])


def intersection(l1: Subspace, l2: Subspace, zero_tol: float = ZERO_TOL) -> Subspace:
    """L1 cap L2 as the kernel of (I - P1) + (I - P2)."""
    eye = np.eye(l1.ambient)
    return null_space((eye - l1.projector()) + (eye - l2.projector()), zero_tol)


def orthogonal_part(l1: Subspace, l: Subspace, zero_tol: float = ZERO_TOL) -> Subspace:
    """L1 cap L^perp as the kernel of (I - P1) + P_L."""
    return null_space(np.eye(l1.ambient) - l1.projector() + l.projector(), zero_tol)


def principal_angle_cos(l1: Subspace, l2: Subspace) -> float:
    """cos(theta) = max |<psi1|psi2>| over unit vectors of the two subspaces."""
    if l1.ambient != l2.ambient:
        raise ValueError("subspaces live in different spaces")
    if l1.dim == 0 or l2.dim == 0:
        raise ValueError("angle with an empty subspace is undefined")
    s = np.linalg.svd(l1.basis.conj().T @ l2.basis, compute_uv=False)
    return float(min(1.0, s[0]))


def rotation_w(circuit: VerificationCircuit, clock: ClockEncoding | None = None) -> np.ndarray:
    """W = sum_t |t><t| x U_t ... U_1, identity on unused clock encodings."""
    clock = clock or ClockEncoding(circuit.T)
    d = circuit.dim
    w = np.zeros((clock.dim * d,) * 2, dtype=complex)
    block = np.eye(d, dtype=complex)
    for t in range(clock.dim):
        if 1 <= t <= circuit.T:
            block = circuit.gates[t - 1].sparse(circuit.num_qubits) @ block
        w[t * d:(t + 1) * d, t * d:(t + 1) * d] = block if t <= circuit.T else np.eye(d)
    return w


def kitaev_pair(ham: KitaevHamiltonian) -> tuple[np.ndarray, np.ndarray]:
    """A1 = W^dag H_in W and A2 = W^dag H_prop W."""
    w = rotation_w(ham.circuit, ham.clock)
    a1 = w.conj().T @ (ham.h_in @ w)
    a2 = w.conj().T @ (ham.h_prop @ w)
    return _dense(a1), _dense(a2)


@dataclass
class GeometricBoundReport:
    v: float
    cos_theta: float
    delta_sum: float
    holds: bool
    vacuous: bool

    @property
    def bound(self) -> float:
        return self.v * (1 - self.cos_theta)


def verify_geometric_bound(a1, a2, zero_tol: float = ZERO_TOL) -> GeometricBoundReport:
    """Check Delta(A1 + A2) >= v (1 - cos theta).

    v = min(Delta(A1), Delta(A2)); theta is the angle between L1 cap L^perp and
    L2 cap L^perp with L the intersection of the two kernels. When either
    restricted kernel is empty the angle is taken as pi/2 and the report is
    flagged vacuous.
    """
    a1, a2 = _dense(a1), _dense(a2)
    try:
        v = min(smallest_nonzero_eigenvalue(a1, zero_tol), smallest_nonzero_eigenvalue(a2, zero_tol))
        delta_sum = smallest_nonzero_eigenvalue(a1 + a2, zero_tol)
    except ValueError:
        return GeometricBoundReport(0.0, 0.0, 0.0, True, True)
    l1, l2 = null_space(a1, zero_tol), null_space(a2, zero_tol)
    common = intersection(l1, l2, zero_tol)
    m1, m2 = orthogonal_part(l1, common, zero_tol), orthogonal_part(l2, common, zero_tol)
    vacuous = m1.dim == 0 or m2.dim == 0
    cos_theta = 0.0 if vacuous else principal_angle_cos(m1, m2)
    holds = delta_sum >= v * (1 - cos_theta) - SLACK
    return GeometricBoundReport(v, cos_theta, delta_sum, bool(holds), vacuous)


@dataclass
class ClockAngleReport:
    T: int
    num_ancilla: int
    cos_sq_theta: float
    bound: float
    holds: bool
    vacuous: bool


def verify_clock_angle(circuit: VerificationCircuit, ham: KitaevHamiltonian | None = None) -> ClockAngleReport:
    """Angle between the rotated input and propagation kernels, against 1 - 1/(T+1).

    With no ancillas the propagation kernel has no part orthogonal to the
    common kernel on the valid clock range, so the report is vacuous.
    """
    ham = ham or compile_circuit(circuit)
    a1, a2 = kitaev_pair(ham)
    l1, l2 = null_space(a1), null_space(a2)
    common = intersection(l1, l2)
    m1, m2 = orthogonal_part(l1, common), orthogonal_part(l2, common)
    bound = 1 - 1 / (circuit.T + 1)
    if circuit.num_ancilla == 0 or m1.dim == 0 or m2.dim == 0:
        return ClockAngleReport(circuit.T, circuit.num_ancilla, 0.0, bound, True, True)
    cos_sq = principal_angle_cos(m1, m2) ** 2
    return ClockAngleReport(circuit.T, circuit.num_ancilla, cos_sq, bound, bool(cos_sq <= bound + SLACK), False)


def kernel_gap(ham: KitaevHamiltonian) -> float:
    """Delta(H_in + H_prop)."""
    return smallest_nonzero_eigenvalue(ham.h_in + ham.h_prop)


# ---------------------------------------------------------------------------
# soundness steps


def history_overlap(hist_basis: np.ndarray, omega: np.ndarray) -> float:
    """max over history states eta of |<omega|eta>|^2, i.e. |P_hist omega|^2."""
    coeffs = hist_basis.conj().T @ omega
    return float(np.vdot(coeffs, coeffs).real)


def extract_left_state(circuit: VerificationCircuit, psi1: np.ndarray) -> tuple[float, np.ndarray]:
    """Split a (C, A, P1) vector into its |0>_C |0^m>_A component.

    Returns (alpha, L): the squared weight of that component and the
    normalized P1 state ``L`` (arbitrary when alpha is zero).
    """
    d1 = 2 ** circuit.proof1
    head = np.asarray(psi1)[:d1]
    alpha = float(np.vdot(head, head).real)
    if alpha < 1e-300:
        left = np.zeros(d1, dtype=complex)
        left[0] = 1.0
        return 0.0, left
    return alpha, head / np.sqrt(alpha)


def rejection_operator(circuit: VerificationCircuit) -> np.ndarray:
    """Witness-space operator M with <psi|M|psi> = Pr(reject psi)."""
    u = circuit.unitary()
    d_wit = 2 ** (circuit.proof1 + circuit.proof2)
    cols = u[:, :d_wit]  # U (|0^m> x basis witness)
    reject = 1.0 - circuit.accept_projector_diag()
    return cols.conj().T @ (reject[:, None] * cols)


def projector_expectation_gap(projector: np.ndarray, v1: np.ndarray, v2: np.ndarray) -> float:
    """|q1 - q2| for q_i = <v_i|Pi|v_i>."""
    q1 = np.vdot(v1, projector @ v1).real
    q2 = np.vdot(v2, projector @ v2).real
    return float(abs(q1 - q2))
