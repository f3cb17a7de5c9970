"""Gate-model verification circuits and the two-proof product-test structure.

Workspace qubits are ordered (A, P1, P2): ``m`` ancillas, then the first proof,
then the second proof. Gates hold global workspace indices.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .qstate import PureState, QubitLayout, embed_operator

UNITARY_TOL = 1e-10

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


class CircuitError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Gate:
    """Either a general unitary on ``targets`` or a one-step controlled register swap."""

    kind: str
    targets: tuple[int, ...]
    matrix: np.ndarray | None = None
    control: int | None = None
    swap_pair: tuple[tuple[int, ...], tuple[int, ...]] | None = None

    def __post_init__(self):
        targets = tuple(int(q) for q in self.targets)
        if len(set(targets)) != len(targets):
            raise CircuitError(f"repeated target qubits {targets}")
        object.__setattr__(self, "targets", targets)
        if self.kind == "unitary":
            mat = np.asarray(self.matrix, dtype=complex)
            if mat.shape != (2 ** len(targets),) * 2:
                raise CircuitError(f"matrix shape {mat.shape} does not fit {len(targets)} targets")
            if np.max(np.abs(mat.conj().T @ mat - np.eye(mat.shape[0]))) > UNITARY_TOL:
                raise CircuitError("gate matrix is not unitary")
            mat = mat.copy()
            mat.setflags(write=False)
            object.__setattr__(self, "matrix", mat)
        elif self.kind == "cswap":
            r1, r2 = (tuple(int(q) for q in r) for r in self.swap_pair)
            if len(r1) != len(r2) or not r1:
                raise CircuitError("swap registers must be non-empty and equal-sized")
            if set(r1) & set(r2) or self.control in r1 + r2:
                raise CircuitError("overlapping registers in controlled swap")
            object.__setattr__(self, "swap_pair", (r1, r2))
            object.__setattr__(self, "control", int(self.control))
        else:
            raise CircuitError(f"unknown gate kind {self.kind!r}")

    @property
    def num_targets(self) -> int:
        return len(self.targets)

    def local_matrix(self) -> np.ndarray:
        """Dense matrix on ``targets`` (in that order)."""
        if self.kind == "unitary":
            return self.matrix
        k = len(self.targets)
        perm = self._permutation(k, relabel=True)
        out = np.zeros((2 ** k, 2 ** k), dtype=complex)
        out[perm, np.arange(2 ** k)] = 1.0
        return out

    def _permutation(self, n: int, relabel: bool = False) -> np.ndarray:
        """Image of every basis index under the swap (as a function of index)."""
        if relabel:
            pos = {q: i for i, q in enumerate(self.targets)}
            control = pos[self.control]
            r1 = [pos[q] for q in self.swap_pair[0]]
            r2 = [pos[q] for q in self.swap_pair[1]]
        else:
            control, (r1, r2) = self.control, self.swap_pair
        idx = np.arange(2 ** n)
        bits = (idx[:, None] >> (n - 1 - np.arange(n))) & 1
        on = bits[:, control] == 1
        swapped = bits.copy()
        swapped[np.ix_(on, r1)] = bits[np.ix_(on, r2)]
        swapped[np.ix_(on, r2)] = bits[np.ix_(on, r1)]
        return swapped @ (1 << (n - 1 - np.arange(n)))

    def sparse(self, n: int) -> sp.csr_matrix:
        """Full operator on n workspace qubits."""
        self._check_width(n)
        if self.kind == "unitary":
            return embed_operator(self.matrix, self.targets, n, sparse=True)
        image = self._permutation(n)
        return sp.csr_matrix((np.ones(2 ** n, dtype=complex), (image, np.arange(2 ** n))), shape=(2 ** n, 2 ** n))

    def dense(self, n: int) -> np.ndarray:
        return self.sparse(n).toarray()

    def apply(self, vec: np.ndarray, n: int) -> np.ndarray:
        self._check_width(n)
        vec = np.asarray(vec, dtype=complex)
        if self.kind == "cswap":
            out = np.empty_like(vec)
            out[self._permutation(n)] = vec
            return out
        k = len(self.targets)
        rest = [q for q in range(n) if q not in self.targets]
        order = list(self.targets) + rest
        t = vec.reshape((2,) * n).transpose(order).reshape(2 ** k, -1)
        t = (self.matrix @ t).reshape((2,) * n)
        return t.transpose(np.argsort(order)).reshape(-1)

    def _check_width(self, n: int):
        if max(self.targets) >= n:
            raise CircuitError(f"gate on {self.targets} does not fit {n} qubits")


def unitary_gate(targets: Sequence[int], matrix) -> Gate:
    return Gate("unitary", tuple(targets), matrix=np.asarray(matrix, dtype=complex))


def controlled_register_swap(control: int, r1: Sequence[int], r2: Sequence[int]) -> Gate:
    """Swap registers r1 and r2 when ``control`` is 1, in a single step."""
    r1, r2 = tuple(r1), tuple(r2)
    if len(r1) != len(r2):
        raise CircuitError("registers must have equal size")
    if set(r1) & set(r2) or control in r1 or control in r2:
        raise CircuitError("overlapping registers in controlled swap")
    return Gate("cswap", (control,) + r1 + r2, control=control, swap_pair=(r1, r2))


def multi_controlled_x(controls: Sequence[int], values: Sequence[int], target: int) -> Gate:
    """Flip ``target`` iff every control qubit equals its required value."""
    k = len(controls) + 1
    dim = 2 ** k
    match = int("".join(str(int(v)) for v in values), 2) if values else 0
    perm = np.arange(dim)
    for low in (0, 1):
        i = (match << 1) | low
        perm[i] = i ^ 1
    mat = np.zeros((dim, dim), dtype=complex)
    mat[perm, np.arange(dim)] = 1.0
    return unitary_gate(tuple(controls) + (target,), mat)


@dataclass(frozen=True, eq=False)
class VerificationCircuit:
    gates: tuple[Gate, ...]
    num_ancilla: int
    proof1: int
    proof2: int
    accept_qubit: int
    registers: tuple[int, ...] | None = None
    product_test_steps: int = 0

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if not self.gates:
            raise CircuitError("a verification circuit needs at least one gate (T >= 1)")
        n = self.num_qubits
        for g in self.gates:
            g._check_width(n)
        if not 0 <= self.accept_qubit < self.num_ancilla + self.proof1:
            raise CircuitError("accept qubit must lie in the ancilla or first-proof range")
        if self.registers is not None:
            regs = tuple(int(s) for s in self.registers)
            if any(s < 1 for s in regs) or sum(regs) != self.proof1 or sum(regs) != self.proof2:
                raise CircuitError("register sizes must sum to both proof sizes")
            object.__setattr__(self, "registers", regs)

    @property
    def T(self) -> int:
        return len(self.gates)

    @property
    def num_qubits(self) -> int:
        return self.num_ancilla + self.proof1 + self.proof2

    @property
    def dim(self) -> int:
        return 2 ** self.num_qubits

    @cached_property
    def layout(self) -> QubitLayout:
        return QubitLayout((("A", self.num_ancilla), ("P1", self.proof1), ("P2", self.proof2)))

    @property
    def witness_layout(self) -> QubitLayout:
        return QubitLayout((("P1", self.proof1), ("P2", self.proof2)))

    def ancilla_qubits(self) -> list[int]:
        return list(range(self.num_ancilla))

    def proof1_qubits(self) -> list[int]:
        return list(range(self.num_ancilla, self.num_ancilla + self.proof1))

    def proof2_qubits(self) -> list[int]:
        start = self.num_ancilla + self.proof1
        return list(range(start, start + self.proof2))

    def initial_vector(self, witness: PureState | np.ndarray) -> np.ndarray:
        """|0^m> tensor witness."""
        amps = witness.amplitudes if isinstance(witness, PureState) else np.asarray(witness, dtype=complex)
        if amps.size != 2 ** (self.proof1 + self.proof2):
            raise CircuitError(f"witness dimension {amps.size} does not match proofs ({self.proof1}+{self.proof2} qubits)")
        zero = np.zeros(2 ** self.num_ancilla, dtype=complex)
        zero[0] = 1.0
        return np.kron(zero, amps)

    def accept_projector_diag(self) -> np.ndarray:
        """Diagonal of the projector onto accept qubit = 1."""
        n = self.num_qubits
        return ((np.arange(self.dim) >> (n - 1 - self.accept_qubit)) & 1).astype(float)

    def unitary(self, t: int | None = None) -> np.ndarray:
        """Dense U_t ... U_1 (the whole circuit when t is None)."""
        t = self.T if t is None else t
        out = np.eye(self.dim, dtype=complex)
        for g in self.gates[:t]:
            out = g.sparse(self.num_qubits) @ out
        return out


def apply_prefix(circuit: VerificationCircuit, t: int, state: PureState | np.ndarray) -> PureState:
    """|psi_t> = U_t ... U_1 U_0 |state>, with U_0 = I."""
    if not 0 <= t <= circuit.T:
        raise CircuitError(f"step {t} outside 0..{circuit.T}")
    vec = state.amplitudes if isinstance(state, PureState) else np.asarray(state, dtype=complex)
    if vec.size != circuit.dim:
        raise CircuitError(f"state dimension {vec.size} does not match workspace {circuit.dim}")
    for g in circuit.gates[:t]:
        vec = g.apply(vec, circuit.num_qubits)
    return PureState.from_vector(vec, circuit.layout, normalize=False)


def prefix_states(circuit: VerificationCircuit, witness: PureState | np.ndarray) -> list[np.ndarray]:
    """All of |psi_0>, ..., |psi_T> for a witness on (P1, P2)."""
    vec = circuit.initial_vector(witness)
    out = [vec]
    for g in circuit.gates:
        vec = g.apply(vec, circuit.num_qubits)
        out.append(vec)
    return out


def acceptance_probability(circuit: VerificationCircuit, witness: PureState | np.ndarray) -> float:
    """Exact probability that the accept qubit reads 1 after the full circuit."""
    final = prefix_states(circuit, witness)[-1]
    p = float(np.dot(circuit.accept_projector_diag(), np.abs(final) ** 2))
    return min(1.0, max(0.0, p))


def build_product_test(registers: Sequence[int], layout: QubitLayout, controls: Sequence[int] | None = None) -> list[Gate]:
    """Swap tests between corresponding registers of P1 and P2.

    One block per register: Hadamard on the control, controlled register swap,
    Hadamard again. A block passes when its control reads 0.
    """
    registers = [int(s) for s in registers]
    p1, p2 = layout.qubits("P1"), layout.qubits("P2")
    if sum(registers) != len(p1) or len(p1) != len(p2):
        raise CircuitError(f"registers {registers} do not tile proofs of sizes {len(p1)} and {len(p2)}")
    if controls is None:
        controls = layout.qubits("A")[: len(registers)]
    if len(controls) != len(registers):
        raise CircuitError(f"need {len(registers)} ancilla controls, have {len(controls)}")
    gates = []
    offset = 0
    for control, size in zip(controls, registers):
        r1 = p1[offset: offset + size]
        r2 = p2[offset: offset + size]
        offset += size
        gates += [
            unitary_gate([control], HADAMARD),
            controlled_register_swap(control, r1, r2),
            unitary_gate([control], HADAMARD),
        ]
    return gates


def product_test_circuit(registers: Sequence[int]) -> VerificationCircuit:
    """Stand-alone product test: accept iff every swap test passes."""
    r, size = len(registers), sum(registers)
    layout = QubitLayout((("A", r + 1), ("P1", size), ("P2", size)))
    gates = build_product_test(registers, layout)
    gates.append(multi_controlled_x(list(range(r)), [0] * r, r))
    return VerificationCircuit(tuple(gates), r + 1, size, size, accept_qubit=r,
                               registers=tuple(registers), product_test_steps=3 * r)


def hm_wrap(inner: VerificationCircuit, registers: Sequence[int]) -> VerificationCircuit:
    """Prefix a first-proof verifier with the product test.

    The result has ancillas (swap controls, inner ancillas, final accept bit).
    The final gate writes AND(all swap tests pass, inner accepts) into the
    accept bit, so every gate after the product test leaves P2 alone.
    """
    registers = tuple(int(s) for s in registers)
    r, p = len(registers), sum(registers)
    if inner.proof1 != p:
        raise CircuitError(f"inner first proof has {inner.proof1} qubits, registers cover {p}")
    inner_p2 = set(inner.proof2_qubits())
    for g in inner.gates:
        if inner_p2 & set(g.targets):
            raise CircuitError("inner circuit acts on the second proof")
    m_in = inner.num_ancilla
    m = r + m_in + 1
    accept = r + m_in

    def remap(q: int) -> int:
        return r + q if q < m_in else m + (q - m_in)

    layout = QubitLayout((("A", m), ("P1", p), ("P2", p)))
    gates = build_product_test(registers, layout, controls=list(range(r)))
    for g in inner.gates:
        if g.kind == "unitary":
            gates.append(unitary_gate([remap(q) for q in g.targets], g.matrix))
        else:
            gates.append(controlled_register_swap(remap(g.control), [remap(q) for q in g.swap_pair[0]],
                                                  [remap(q) for q in g.swap_pair[1]]))
    gates.append(multi_controlled_x(list(range(r)) + [remap(inner.accept_qubit)], [0] * r + [1], accept))
    return VerificationCircuit(tuple(gates), m, p, p, accept_qubit=accept, registers=registers,
                               product_test_steps=3 * r)


def random_circuit(num_ancilla: int, proof1: int, proof2: int, T: int, seed=None,
                   accept_qubit: int = 0) -> VerificationCircuit:
    """T random two-qubit (or one-qubit, when the workspace is a single qubit) gates."""
    from .qstate import random_unitary

    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = num_ancilla + proof1 + proof2
    gates = []
    for _ in range(T):
        k = 2 if n >= 2 else 1
        targets = rng.choice(n, size=k, replace=False)
        gates.append(unitary_gate(targets, random_unitary(2 ** k, rng)))
    return VerificationCircuit(tuple(gates), num_ancilla, proof1, proof2, accept_qubit=accept_qubit)
