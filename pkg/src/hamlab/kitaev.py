"""Circuit-to-Hamiltonian compilation with a binary clock.

The full register is ordered (C, A, P1, P2). Clock basis state ``|t>`` is the
binary encoding of ``t`` on the ``n_c`` clock qubits; encodings above ``T``
are invalid and penalized inside ``h_in``.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .circuit import Gate, VerificationCircuit, prefix_states
from .qstate import Bipartition, DensityMatrix, PureState, QubitLayout

DEFAULT_MAX_QUBITS = 12


class DimensionBudgetError(ValueError):
    pass


def max_qubits_budget() -> int:
    return int(os.environ.get("HAMLAB_MAX_QUBITS", DEFAULT_MAX_QUBITS))


@dataclass(frozen=True)
class ClockEncoding:
    T: int

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("clock needs T >= 1")

    @property
    def num_qubits(self) -> int:
        return max(1, math.ceil(math.log2(self.T + 1)))

    @property
    def dim(self) -> int:
        return 2 ** self.num_qubits

    def ket(self, t: int) -> np.ndarray:
        if not 0 <= t < self.dim:
            raise ValueError(f"clock value {t} not encodable on {self.num_qubits} qubits")
        out = np.zeros(self.dim, dtype=complex)
        out[t] = 1.0
        return out

    def outer(self, t: int, s: int) -> sp.csr_matrix:
        """|t><s| on the clock register."""
        return sp.csr_matrix(([1.0 + 0j], ([t], [s])), shape=(self.dim, self.dim))

    @property
    def invalid_values(self) -> range:
        return range(self.T + 1, self.dim)


def propagation_term(t: int, gate: Gate, clock: ClockEncoding, n_work: int) -> sp.csr_matrix:
    """H_t = 1/2 (|t><t| + |t-1><t-1|) x I - 1/2 |t><t-1| x U - 1/2 |t-1><t| x U^dag."""
    if t == 0:
        raise ValueError("there is no propagation term for t = 0 (U_0 = I)")
    if not 1 <= t <= clock.T:
        raise ValueError(f"step {t} outside 1..{clock.T}")
    u = gate.sparse(n_work)
    eye = sp.identity(2 ** n_work, dtype=complex, format="csr")
    term = 0.5 * (sp.kron(clock.outer(t, t), eye) + sp.kron(clock.outer(t - 1, t - 1), eye))
    term = term - 0.5 * sp.kron(clock.outer(t, t - 1), u) - 0.5 * sp.kron(clock.outer(t - 1, t), u.conj().T)
    term = term.tocsr()
    term.eliminate_zeros()
    return term


@dataclass(frozen=True, eq=False)
class KitaevHamiltonian:
    circuit: VerificationCircuit
    clock: ClockEncoding
    input_terms: tuple[sp.csr_matrix, ...]      # one projector per ancilla
    clock_penalty: sp.csr_matrix | None         # invalid clock encodings
    terms: tuple[sp.csr_matrix, ...]            # H_1 .. H_T
    h_out: sp.csr_matrix
    layout: QubitLayout = field(init=False)

    def __post_init__(self):
        c = self.circuit
        layout = QubitLayout((("C", self.clock.num_qubits), ("A", c.num_ancilla), ("P1", c.proof1), ("P2", c.proof2)))
        object.__setattr__(self, "layout", layout)

    @property
    def T(self) -> int:
        return self.clock.T

    @property
    def num_qubits(self) -> int:
        return self.layout.total_qubits

    @property
    def dim(self) -> int:
        return self.layout.dim

    @cached_property
    def h_in(self) -> sp.csr_matrix:
        out = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        for term in self.input_terms:
            out = out + term
        if self.clock_penalty is not None:
            out = out + self.clock_penalty
        return out.tocsr()

    @cached_property
    def h_prop(self) -> sp.csr_matrix:
        out = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        for term in self.terms:
            out = out + term
        return out.tocsr()

    @cached_property
    def total(self) -> sp.csr_matrix:
        return (self.h_in + self.h_prop + self.h_out).tocsr()

    def workspace_cut(self) -> Bipartition:
        """(C, A, P1) versus P2."""
        p2 = self.layout.qubits("P2")
        rest = [q for q in range(self.num_qubits) if q not in p2]
        return Bipartition(tuple(rest), tuple(p2))


def compile_circuit(circuit: VerificationCircuit, max_qubits: int | None = None) -> KitaevHamiltonian:
    """Kitaev Hamiltonian H_in + H_prop + H_out of a verification circuit."""
    clock = ClockEncoding(circuit.T)
    n_work = circuit.num_qubits
    budget = max_qubits_budget() if max_qubits is None else max_qubits
    if clock.num_qubits + n_work > budget:
        raise DimensionBudgetError(
            f"clock ({clock.num_qubits}) + workspace ({n_work}) qubits exceed the budget of {budget}")
    d_work = 2 ** n_work
    bits = np.arange(d_work)[:, None] >> (n_work - 1 - np.arange(n_work))[None, :] & 1
    eye = sp.identity(d_work, dtype=complex, format="csr")

    zero_clock = clock.outer(0, 0)
    input_terms = tuple(
        sp.kron(zero_clock, sp.diags(bits[:, j].astype(complex)), format="csr") for j in range(circuit.num_ancilla)
    )
    penalty = None
    if len(clock.invalid_values):
        diag = np.zeros(clock.dim, dtype=complex)
        diag[list(clock.invalid_values)] = 1.0
        penalty = sp.kron(sp.diags(diag), eye, format="csr")

    terms = tuple(propagation_term(t, g, clock, n_work) for t, g in enumerate(circuit.gates, start=1))
    reject = sp.diags(1.0 - circuit.accept_projector_diag().astype(complex))
    h_out = sp.kron(clock.outer(circuit.T, circuit.T), reject, format="csr")
    for op in input_terms + terms + (h_out,):
        op.eliminate_zeros()
    return KitaevHamiltonian(circuit, clock, input_terms, penalty, terms, h_out)


# `compile` shadows a builtin, keep the long name as primary
compile = compile_circuit


@dataclass(frozen=True, eq=False)
class HistoryState:
    state: PureState
    witness: PureState
    T: int


def history_vector(circuit: VerificationCircuit, witness) -> np.ndarray:
    clock = ClockEncoding(circuit.T)
    out = np.zeros(clock.dim * circuit.dim, dtype=complex)
    for t, vec in enumerate(prefix_states(circuit, witness)):
        out[t * circuit.dim:(t + 1) * circuit.dim] = vec
    return out / np.sqrt(circuit.T + 1)


def history_state(circuit: VerificationCircuit, witness: PureState | np.ndarray) -> HistoryState:
    """(1/sqrt(T+1)) sum_t |t> x U_t...U_0 (|0^m> x witness)."""
    if not isinstance(witness, PureState):
        witness = PureState.from_vector(witness, circuit.witness_layout, normalize=False)
    clock = ClockEncoding(circuit.T)
    layout = QubitLayout((("C", clock.num_qubits),) + circuit.layout.subsystems)
    vec = history_vector(circuit, witness)
    return HistoryState(PureState.from_vector(vec, layout, normalize=False), witness, circuit.T)


def history_isometry(circuit: VerificationCircuit) -> np.ndarray:
    """Matrix whose columns are history states of the computational-basis witnesses."""
    d_wit = 2 ** (circuit.proof1 + circuit.proof2)
    clock = ClockEncoding(circuit.T)
    block = np.zeros((circuit.dim, d_wit), dtype=complex)
    block[:d_wit, :] = np.eye(d_wit)  # ancillas |0^m> are the leading bits
    out = np.zeros((clock.dim * circuit.dim, d_wit), dtype=complex)
    out[:circuit.dim] = block
    for t, g in enumerate(circuit.gates, start=1):
        block = g.sparse(circuit.num_qubits) @ block
        out[t * circuit.dim:(t + 1) * circuit.dim] = block
    return out / np.sqrt(circuit.T + 1)


def energy(h, state) -> float:
    """<psi|H|psi> or tr(H rho) for dense or sparse H."""
    if isinstance(state, DensityMatrix):
        rho = state.matrix
        if rho.shape[0] != h.shape[0]:
            raise ValueError(f"dimension mismatch: H is {h.shape}, state is {rho.shape}")
        val = (h @ rho).trace() if not sp.issparse(h) else (h @ rho).diagonal().sum()
    else:
        vec = state.amplitudes if isinstance(state, PureState) else np.asarray(state, dtype=complex)
        if vec.size != h.shape[0]:
            raise ValueError(f"dimension mismatch: H is {h.shape}, state has {vec.size} amplitudes")
        val = np.vdot(vec, h @ vec)
    if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
        raise ValueError(f"energy has an imaginary part {val.imag!r}; is H Hermitian?")
    return float(val.real)
