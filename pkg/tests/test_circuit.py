import numpy as np
import pytest
from hypothesis import given, strategies as st

from hamlab.circuit import (HADAMARD, PAULI_X, CircuitError, VerificationCircuit, acceptance_probability,
                            apply_prefix, controlled_register_swap, hm_wrap, prefix_states,
                            product_test_circuit, random_circuit, unitary_gate)
from hamlab.qstate import PureState, embed_operator, random_state, random_unitary

from conftest import random_vec

seeds = st.integers(0, 2 ** 32 - 1)


def dense_gate(mat, targets, n):
    """Gate as a full matrix by explicit index arithmetic."""
    k = len(targets)
    out = np.zeros((2 ** n, 2 ** n), dtype=complex)
    for col in range(2 ** n):
        bits = [(col >> (n - 1 - q)) & 1 for q in range(n)]
        local_in = int("".join(str(bits[q]) for q in targets), 2)
        for local_out in range(2 ** k):
            amp = mat[local_out, local_in]
            if amp == 0:
                continue
            new = list(bits)
            for pos, q in enumerate(targets):
                new[q] = (local_out >> (k - 1 - pos)) & 1
            out[int("".join(map(str, new)), 2), col] += amp
    return out


def swap_test_acceptance(a, b):
    """Pass probability of the swap test by enumerating (control, a, b) amplitudes."""
    h = dense_gate(HADAMARD, [0], 3)
    cswap = np.zeros((8, 8))
    for i in range(8):
        c, x, y = (i >> 2) & 1, (i >> 1) & 1, i & 1
        j = (c << 2) | ((y << 1) | x if c else (x << 1) | y)
        cswap[j, i] = 1
    final = h @ cswap @ h @ np.kron([1, 0], np.kron(a, b))
    return float(np.sum(np.abs(final[:4]) ** 2))


def test_prefix_zero_is_identity(rng):
    c = random_circuit(1, 1, 1, 3, seed=rng)
    psi = random_vec(8, rng)
    assert np.allclose(apply_prefix(c, 0, psi).amplitudes, psi)


def test_hadamard_on_zero():
    c = VerificationCircuit((unitary_gate([0], HADAMARD),), 0, 1, 0, accept_qubit=0)
    out = apply_prefix(c, 1, np.array([1, 0]))
    assert np.allclose(out.amplitudes, np.array([1, 1]) / np.sqrt(2), atol=1e-15)


def test_prefix_against_dense_product(rng):
    c = random_circuit(1, 1, 1, 3, seed=rng)
    psi = random_vec(8, rng)
    dense = np.eye(8, dtype=complex)
    for g in c.gates:
        dense = dense_gate(g.matrix, list(g.targets), 3) @ dense
    assert np.linalg.norm(apply_prefix(c, 3, psi).amplitudes - dense @ psi) <= 1e-10


def test_acceptance_unconditional_and_idle():
    flip = VerificationCircuit((unitary_gate([0], PAULI_X),), 1, 1, 0, accept_qubit=0)
    idle = VerificationCircuit((unitary_gate([0], np.eye(2)),), 1, 1, 0, accept_qubit=0)
    w = random_state(1, 0)
    assert acceptance_probability(flip, w) == pytest.approx(1.0)
    assert acceptance_probability(idle, w) == pytest.approx(0.0)


def test_swap_test_orthogonal_proofs():
    c = product_test_circuit([1])
    expected = swap_test_acceptance(np.array([1, 0]), np.array([0, 1]))
    assert expected == pytest.approx(0.5)
    assert acceptance_probability(c, np.kron([1, 0], [0, 1])) == pytest.approx(expected, abs=1e-12)


def test_swap_test_matches_enumeration(rng):
    c = product_test_circuit([1])
    a, b = random_vec(2, rng), random_vec(2, rng)
    assert acceptance_probability(c, np.kron(a, b)) == pytest.approx(swap_test_acceptance(a, b), abs=1e-12)


def test_cswap_control_off_is_identity(rng):
    g = controlled_register_swap(0, [1, 2], [3, 4])
    vec = np.kron([1, 0], random_vec(16, rng))
    assert np.allclose(g.apply(vec, 5), vec)


def test_cswap_fixes_plus_phi_phi(rng):
    g = controlled_register_swap(0, [1, 2], [3, 4])
    phi = random_vec(4, rng)
    vec = np.kron(np.array([1, 1]) / np.sqrt(2), np.kron(phi, phi))
    assert np.linalg.norm(g.apply(vec, 5) - vec) <= 1e-12


def test_cswap_one_nonzero_per_row():
    g = controlled_register_swap(0, [1, 2, 3], [4, 5, 6])
    counts = np.diff(g.sparse(7).tocsr().indptr)
    assert np.all(counts == 1)


def test_product_test_identical_product_witnesses(rng):
    c = product_test_circuit([1, 2])
    chi = np.kron(random_vec(2, rng), random_vec(4, rng))
    assert acceptance_probability(c, np.kron(chi, chi)) == pytest.approx(1.0, abs=1e-12)


def test_product_test_one_orthogonal_pair(rng):
    c = product_test_circuit([1, 1])
    a = random_vec(2, rng)
    w1 = np.kron(a, [1, 0])
    w2 = np.kron(a, [0, 1])
    expected = swap_test_acceptance(a, a) * swap_test_acceptance(np.array([1, 0]), np.array([0, 1]))
    assert acceptance_probability(c, np.kron(w1, w2)) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.5)


def _inner(p1, gates, accept_qubit=0, ancilla=1):
    return VerificationCircuit(tuple(gates), ancilla, p1, p1, accept_qubit=accept_qubit)


def test_hm_wrap_identity_inner_accepts_identical_products(rng):
    inner = _inner(1, [unitary_gate([0], PAULI_X)])
    c = hm_wrap(inner, [1])
    chi = random_vec(2, rng)
    assert acceptance_probability(c, np.kron(chi, chi)) == pytest.approx(1.0, abs=1e-12)


def test_hm_wrap_rejecting_inner(rng):
    inner = _inner(1, [unitary_gate([0], np.eye(2))])
    c = hm_wrap(inner, [1])
    for _ in range(5):
        assert acceptance_probability(c, random_vec(4, rng)) == pytest.approx(0.0, abs=1e-12)


def test_hm_wrap_matches_inner_on_first_proof(rng):
    u = random_unitary(8, rng)
    inner = _inner(2, [unitary_gate([0, 1, 2], u)])
    c = hm_wrap(inner, [1, 1])
    chi = np.kron(random_vec(2, rng), random_vec(2, rng))
    inner_alone = VerificationCircuit(inner.gates, 1, 2, 0, accept_qubit=0)
    expected = acceptance_probability(inner_alone, chi)
    assert acceptance_probability(c, np.kron(chi, chi)) == pytest.approx(expected, abs=1e-10)


def test_hm_wrap_rejects_inner_touching_second_proof():
    inner = _inner(1, [unitary_gate([2], PAULI_X)])
    with pytest.raises(CircuitError):
        hm_wrap(inner, [1])


@given(seeds, st.integers(1, 10))
def test_composition_stays_unitary(seed, T):
    c = random_circuit(1, 1, 1, T, seed=seed)
    u = c.unitary()
    assert np.linalg.norm(u.conj().T @ u - np.eye(c.dim), 2) <= 1e-9


@given(seeds)
def test_prefix_invariance_under_swap_tests(seed):
    rng = np.random.default_rng(seed)
    inner = _inner(2, [unitary_gate([0, 1], random_unitary(4, rng))])
    c = hm_wrap(inner, [1, 1])
    chi = np.kron(random_vec(2, rng), random_vec(2, rng))
    states = prefix_states(c, np.kron(chi, chi))
    for t in range(0, c.product_test_steps + 1, 3):  # end of each H, C-SWAP, H block
        assert np.linalg.norm(states[t] - states[0]) <= 1e-12


@given(seeds)
def test_post_test_gates_commute_with_second_proof_operators(seed):
    rng = np.random.default_rng(seed)
    inner = _inner(1, [unitary_gate([0, 1], random_unitary(4, rng))])
    c = hm_wrap(inner, [1])
    n = c.num_qubits
    op = embed_operator(random_unitary(2, rng), c.proof2_qubits(), n)
    for g in c.gates[c.product_test_steps:]:
        d = g.dense(n)
        assert np.max(np.abs(d @ op - op @ d)) <= 1e-12


def test_gate_validation():
    with pytest.raises(CircuitError):
        unitary_gate([0], np.array([[1, 1], [0, 1]]))
    with pytest.raises(CircuitError):
        controlled_register_swap(0, [1], [1])
    with pytest.raises(CircuitError):
        controlled_register_swap(0, [1, 2], [3])


def test_gate_apply_matches_dense(rng):
    g = unitary_gate([2, 0], random_unitary(4, rng))
    vec = random_vec(8, rng)
    assert np.allclose(g.apply(vec, 3), dense_gate(g.matrix, [2, 0], 3) @ vec, atol=1e-12)
