import numpy as np
import pytest
from hypothesis import given, strategies as st

from hamlab.circuit import VerificationCircuit, random_circuit, unitary_gate
from hamlab.kitaev import compile_circuit, history_isometry, history_vector
from hamlab.qstate import random_unitary
from hamlab.spectral import (Subspace, extract_left_state, history_overlap, intersection, kernel_gap, kitaev_pair,
                             null_space, orthogonal_part, principal_angle_cos, projector_expectation_gap,
                             rejection_operator, rotation_w, smallest_nonzero_eigenvalue,
                             verify_clock_angle, verify_geometric_bound)

from conftest import random_vec

seeds = st.integers(0, 2 ** 32 - 1)


def _line(theta):
    return Subspace(np.array([[np.cos(theta)], [np.sin(theta)]], dtype=complex), 2)


def test_smallest_nonzero_simple():
    p = np.diag([1.0, 0.0, 1.0])
    assert smallest_nonzero_eigenvalue(p) == pytest.approx(1.0)
    assert smallest_nonzero_eigenvalue(np.diag([0.0, 0.3, 2.0])) == pytest.approx(0.3)


def test_smallest_nonzero_errors():
    with pytest.raises(ValueError):
        smallest_nonzero_eigenvalue(np.diag([-1.0, 1.0]))
    with pytest.raises(ValueError):
        smallest_nonzero_eigenvalue(np.zeros((2, 2)))


def test_kernel_gap_vs_full_diagonalization():
    c = random_circuit(1, 1, 1, 3, seed=11)
    ham = compile_circuit(c)
    evals = np.linalg.eigvalsh((ham.h_in + ham.h_prop).toarray())
    assert kernel_gap(ham) == pytest.approx(evals[evals > 1e-8][0], abs=1e-12)


def test_null_space_dimensions():
    assert null_space(np.eye(3)).dim == 0
    v = random_vec(4, np.random.default_rng(0))
    assert null_space(np.outer(v, v.conj())).dim == 3


@pytest.mark.parametrize("m,p1,p2,T", [(1, 1, 1, 3), (2, 1, 1, 4), (1, 2, 1, 2), (0, 1, 1, 3)])
def test_history_space_is_kernel(m, p1, p2, T):
    c = random_circuit(m, p1, p2, T, seed=3)
    ham = compile_circuit(c)
    kernel = null_space(ham.h_in + ham.h_prop)
    assert kernel.dim == 2 ** (p1 + p2)
    for col in history_isometry(c).T:
        assert kernel.contains(col * np.sqrt(c.T + 1))


def test_principal_angle_cases():
    assert principal_angle_cos(_line(0.3), _line(0.3)) == pytest.approx(1.0)
    assert principal_angle_cos(_line(0.0), _line(np.pi / 2)) == pytest.approx(0.0, abs=1e-15)
    assert principal_angle_cos(_line(0.2), _line(0.2 + 0.7)) == pytest.approx(np.cos(0.7), abs=1e-12)


def test_principal_angle_empty_subspace():
    with pytest.raises(ValueError):
        principal_angle_cos(Subspace(np.zeros((2, 0)), 2), _line(0.0))


def test_rotation_identity_circuit():
    c = VerificationCircuit((unitary_gate([0], np.eye(2)),) * 3, 0, 1, 0, accept_qubit=0)
    assert np.allclose(rotation_w(c), np.eye(8))


def test_rotation_first_block_identity():
    c = random_circuit(1, 1, 0, 2, seed=0)
    w = rotation_w(c)
    assert np.allclose(w[:c.dim, :c.dim], np.eye(c.dim))
    assert np.allclose(w[c.dim:2 * c.dim, c.dim:2 * c.dim], c.gates[0].dense(c.num_qubits))


@pytest.mark.parametrize("seed", range(3))
def test_rotated_pair_preserves_spectrum(seed):
    c = random_circuit(1, 1, 1, 3, seed=seed)
    ham = compile_circuit(c)
    a1, a2 = kitaev_pair(ham)
    expected = np.linalg.eigvalsh((ham.h_in + ham.h_prop).toarray())
    assert np.allclose(np.linalg.eigvalsh(a1 + a2), expected, atol=1e-9)


def test_geometric_bound_disjoint_kernels():
    a1, a2 = np.diag([0.0, 1.0, 1.0]), np.diag([1.0, 0.0, 1.0])
    rep = verify_geometric_bound(a1, a2)
    assert rep.cos_theta == pytest.approx(0.0) and rep.holds


@pytest.mark.parametrize("theta", [0.3, 0.8, 1.2])
def test_geometric_bound_two_lines(theta):
    # complements of two lines in the plane: kernels are the lines
    p1 = np.eye(2) - _line(0.0).projector()
    p2 = np.eye(2) - _line(theta).projector()
    rep = verify_geometric_bound(p1, p2)
    gap = np.linalg.eigvalsh(p1 + p2)[0]
    assert rep.cos_theta == pytest.approx(abs(np.cos(theta)), abs=1e-9)
    assert rep.delta_sum == pytest.approx(gap, abs=1e-9)
    assert rep.delta_sum == pytest.approx(rep.bound, abs=1e-9)


@pytest.mark.parametrize("T", [1, 2, 3, 4, 5])
def test_geometric_bound_on_kitaev_pairs(T):
    ham = compile_circuit(random_circuit(1, 1, 1, T, seed=T))
    assert verify_geometric_bound(*kitaev_pair(ham)).holds


def test_clock_angle_single_step():
    rep = verify_clock_angle(random_circuit(1, 1, 0, 1, seed=0))
    assert not rep.vacuous and rep.cos_sq_theta <= 0.5 + 1e-9


def test_clock_angle_random_three_step():
    assert verify_clock_angle(random_circuit(2, 1, 1, 3, seed=5)).holds


@pytest.mark.parametrize("m", [3, 4])
def test_clock_angle_tight(m):
    rep = verify_clock_angle(random_circuit(m, 1, 0, 2, seed=m))
    assert rep.cos_sq_theta == pytest.approx(1 - 1 / 3, abs=1e-6)


def test_clock_angle_without_ancilla_is_vacuous():
    assert verify_clock_angle(random_circuit(0, 1, 1, 2, seed=0)).vacuous


def test_scaled_gap_positive_across_lengths():
    inner = random_unitary(4, np.random.default_rng(9))
    scaled = []
    for T in range(2, 9):
        c = VerificationCircuit((unitary_gate([0, 1], inner),) * T, 1, 1, 0, accept_qubit=0)
        scaled.append(kernel_gap(compile_circuit(c)) * (T + 1) ** 3)
    assert min(scaled) > 0


@given(seeds)
def test_history_overlap_of_mixture(seed):
    rng = np.random.default_rng(seed)
    c = random_circuit(1, 1, 1, 3, seed=rng)
    iso = history_isometry(c)
    q, _ = np.linalg.qr(iso)
    eta = history_vector(c, random_vec(4, rng))
    perp = random_vec(iso.shape[0], rng)
    perp -= q @ (q.conj().T @ perp)
    perp /= np.linalg.norm(perp)
    p = rng.uniform(0, 1)
    omega = np.sqrt(1 - p) * eta + np.sqrt(p) * perp
    assert history_overlap(q, omega) == pytest.approx(1 - p, abs=1e-9)


def test_extract_left_state_on_initial_block(rng):
    c = random_circuit(1, 1, 1, 2, seed=rng)
    left = random_vec(2, rng)
    psi1 = np.kron([1, 0], left)  # |0>_A |L>_P1
    alpha, out = extract_left_state(c, psi1)
    assert alpha == pytest.approx(1.0)
    assert np.allclose(out, left)


def test_rejection_operator_matches_simulation(rng):
    from hamlab.circuit import acceptance_probability

    c = random_circuit(1, 1, 1, 3, seed=rng)
    m = rejection_operator(c)
    w = random_vec(4, rng)
    assert np.vdot(w, m @ w).real == pytest.approx(1 - acceptance_probability(c, w), abs=1e-12)


@given(seeds)
def test_projector_expectation_gap_bound(seed):
    rng = np.random.default_rng(seed)
    d = 4
    basis = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))[0][:, :2]
    proj = basis @ basis.conj().T
    v1 = random_vec(d, rng)
    v2 = v1 + rng.uniform(0, 0.5) * random_vec(d, rng)
    v2 /= np.linalg.norm(v2)
    delta = 1 - abs(np.vdot(v1, v2)) ** 2
    assert projector_expectation_gap(proj, v1, v2) <= np.sqrt(delta) + 1e-9


def test_subspace_helpers():
    l1 = Subspace(np.eye(3)[:, :2], 3)
    l2 = Subspace(np.eye(3)[:, 1:], 3)
    common = intersection(l1, l2)
    assert common.dim == 1 and common.contains(np.array([0, 1, 0]))
    assert orthogonal_part(l1, common).contains(np.array([1, 0, 0]))
    with pytest.raises(ValueError):
        Subspace(np.array([[1.0, 1.0], [0.0, 1.0]]), 2)
