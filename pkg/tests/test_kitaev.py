import numpy as np
import pytest
from hypothesis import given, strategies as st

from hamlab.circuit import (PAULI_X, VerificationCircuit, acceptance_probability, controlled_register_swap, hm_wrap,
                            random_circuit, unitary_gate)
from hamlab.kitaev import (ClockEncoding, DimensionBudgetError, compile_circuit, energy, history_state,
                           history_vector, propagation_term)
from hamlab.optimize import local_term
from hamlab.qstate import (DensityMatrix, PureState, embed_operator, max_product_overlap, partial_trace_matrix,
                           random_density, random_hermitian, random_unitary, tensor)

from conftest import random_vec

seeds = st.integers(0, 2 ** 32 - 1)


def dense_propagation(t, u, clock_dim):
    """Propagation term assembled blockwise from its defining formula."""
    d = u.shape[0]
    out = np.zeros((clock_dim * d, clock_dim * d), dtype=complex)
    blk = lambda i, j: (slice(i * d, (i + 1) * d), slice(j * d, (j + 1) * d))
    out[blk(t, t)] += 0.5 * np.eye(d)
    out[blk(t - 1, t - 1)] += 0.5 * np.eye(d)
    out[blk(t, t - 1)] -= 0.5 * u
    out[blk(t - 1, t)] -= 0.5 * u.conj().T
    return out


def row_nnz(op):
    return np.diff(op.tocsr().indptr)


def test_identity_gate_term_spectrum():
    clock = ClockEncoding(1)
    term = propagation_term(1, unitary_gate([0], np.eye(2)), clock, 1).toarray()
    evals = np.linalg.eigvalsh(term)
    assert np.allclose(np.sort(evals), [0, 0, 1, 1], atol=1e-12)


def test_cswap_term_row_sparsity():
    clock = ClockEncoding(2)
    term = propagation_term(2, controlled_register_swap(0, [1, 2], [3, 4]), clock, 5)
    assert row_nnz(term).max() <= 2


def test_random_term_matches_dense_assembly(rng):
    clock = ClockEncoding(3)
    g = unitary_gate([0, 2], random_unitary(4, rng))
    for t in (1, 2, 3):
        built = propagation_term(t, g, clock, 3).toarray()
        expected = dense_propagation(t, g.dense(3), clock.dim)
        assert np.max(np.abs(built - expected)) <= 1e-12


def test_no_term_for_step_zero():
    with pytest.raises(ValueError):
        propagation_term(0, unitary_gate([0], np.eye(2)), ClockEncoding(1), 1)


@given(seeds, st.integers(1, 8))
def test_history_state_in_kernel(seed, T):
    rng = np.random.default_rng(seed)
    c = random_circuit(1, 1, 1, T, seed=rng)
    ham = compile_circuit(c)
    eta = history_vector(c, random_vec(4, rng))
    assert np.linalg.norm((ham.h_in + ham.h_prop) @ eta) <= 1e-9


def test_certain_acceptance_has_zero_energy():
    c = VerificationCircuit((unitary_gate([0], PAULI_X),), 1, 1, 0, accept_qubit=0)
    ham = compile_circuit(c)
    eta = history_vector(c, np.array([0.6, 0.8]))
    assert energy(ham.total, eta) == pytest.approx(0.0, abs=1e-10)


@given(seeds, st.integers(1, 6))
def test_energy_identity(seed, T):
    rng = np.random.default_rng(seed)
    c = random_circuit(2, 1, 1, T, seed=rng, accept_qubit=1)
    ham = compile_circuit(c)
    w = random_vec(4, rng)
    p = acceptance_probability(c, w)
    assert energy(ham.total, history_vector(c, w)) == pytest.approx((1 - p) / (T + 1), abs=1e-9)


def test_history_state_single_identity_step():
    c = VerificationCircuit((unitary_gate([0], np.eye(2)),), 0, 1, 0, accept_qubit=0)
    hist = history_state(c, np.array([1.0, 0.0]))
    expected = np.kron(np.array([1, 1]) / np.sqrt(2), [1, 0])
    assert np.allclose(hist.state.amplitudes, expected, atol=1e-15)
    assert hist.state.layout.labels == ("C", "A", "P1", "P2")


def test_hm_wrapped_history_is_product(rng):
    inner = VerificationCircuit((unitary_gate([0, 1], random_unitary(4, rng)),), 1, 1, 1, accept_qubit=0)
    c = hm_wrap(inner, [1])
    ham = compile_circuit(c)
    chi = random_vec(2, rng)
    hist = history_state(c, np.kron(chi, chi))
    s = np.linalg.svd(hist.state.amplitudes.reshape(-1, 2), compute_uv=False)
    assert s[1] <= 1e-9
    assert max_product_overlap(hist.state, ham.workspace_cut())[0] == pytest.approx(1.0, abs=1e-9)


def test_entangling_circuit_history_not_product(rng):
    cnot = np.eye(4)[[0, 1, 3, 2]]
    hadamard = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    c = VerificationCircuit((unitary_gate([0], hadamard), unitary_gate([0, 1], cnot)), 0, 1, 1, accept_qubit=0)
    ham = compile_circuit(c)
    hist = history_state(c, np.array([1, 0, 0, 0]))
    s = np.linalg.svd(hist.state.amplitudes.reshape(-1, 2), compute_uv=False)
    assert max_product_overlap(hist.state, ham.workspace_cut())[0] == pytest.approx(s[0] ** 2, abs=1e-12)
    assert s[0] ** 2 < 1 - 1e-3


def test_energy_special_states(rng):
    h = random_hermitian(8, rng)
    evals, evecs = np.linalg.eigh(h)
    assert energy(h, evecs[:, 0]) == pytest.approx(evals[0], abs=1e-12)
    assert energy(h, DensityMatrix.maximally_mixed(3)) == pytest.approx(np.trace(h).real / 8, abs=1e-12)


def test_energy_decomposes_over_local_terms(rng):
    terms = [local_term(random_hermitian(4, rng), s) for s in [(0, 1), (1, 3), (0, 2)]]
    h = sum(embed_operator(t.matrix, t.support, 4) for t in terms)
    state = tensor(random_density(2, rng), random_density(2, rng))
    local = sum(np.trace(t.matrix @ partial_trace_matrix(state.matrix, t.support, 4)).real for t in terms)
    assert energy(h, state) == pytest.approx(local, abs=1e-10)


def test_completeness_bound_with_simulated_acceptance(rng):
    inner = VerificationCircuit((unitary_gate([0, 1], random_unitary(4, rng)),), 1, 1, 1, accept_qubit=0)
    c = hm_wrap(inner, [1])
    ham = compile_circuit(c)
    chi = random_vec(2, rng)
    w = np.kron(chi, chi)
    p = acceptance_probability(c, w)
    assert energy(ham.total, history_vector(c, w)) <= (1 - p) / (c.T + 1) + 1e-12


@given(seeds)
def test_term_structure(seed):
    rng = np.random.default_rng(seed)
    c = random_circuit(2, 1, 1, 4, seed=rng)
    ham = compile_circuit(c)
    for term in ham.terms:
        evals = np.linalg.eigvalsh(term.toarray())
        assert evals.min() >= -1e-12 and evals.max() <= 1 + 1e-12
        assert row_nnz(term).max() <= 5
    for op in ham.input_terms + (ham.h_out,):
        d = op.toarray()
        assert np.allclose(d @ d, d, atol=1e-12)
    evals = np.linalg.eigvalsh(ham.total.toarray())
    assert evals.min() >= -1e-10
    assert evals.max() <= c.T + c.num_ancilla + 1 + 1e-10


def test_cswap_terms_of_wrapped_circuit_are_two_sparse():
    inner = VerificationCircuit((unitary_gate([0], np.eye(2)),), 1, 3, 3, accept_qubit=0)
    c = hm_wrap(inner, [3])
    ham = compile_circuit(c)
    for term, g in zip(ham.terms, c.gates):
        if g.kind == "cswap":
            assert row_nnz(term).max() <= 2


def test_binary_clock_width():
    assert [ClockEncoding(T).num_qubits for T in (1, 2, 3, 4, 7, 8)] == [1, 2, 2, 3, 3, 4]


def test_invalid_clock_values_are_penalized():
    c = random_circuit(0, 1, 1, 4, seed=0)
    ham = compile_circuit(c)
    d = c.dim
    diag = ham.h_in.diagonal().real
    assert np.all(diag[5 * d:] == 1) and np.all(diag[: 5 * d] == 0)


def test_dimension_budget(monkeypatch):
    c = random_circuit(1, 1, 1, 3, seed=0)
    monkeypatch.setenv("HAMLAB_MAX_QUBITS", "4")
    with pytest.raises(DimensionBudgetError):
        compile_circuit(c)
