import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hamlab.acceptance import no_instance, yes_instance
from hamlab.cldm import (CLDMInstance, SLHProof, consistency_decide, default_oracle, honest_prover,
                         overlap_conflict_bound, product_density, proof_energy, protocol_beta, reduce_all,
                         slh_verifier, soundness_floor, tensor_perturbation)
from hamlab.optimize import SLHInstance, Term
from hamlab.qstate import (Bipartition, DensityMatrix, PureState, QubitLayout, partial_trace_matrix, random_density,
                           random_effect, random_state, trace_norm)

seeds = st.integers(0, 2 ** 32 - 1)
BELL = PureState.from_vector([1, 0, 0, 1]).density()
ZERO = DensityMatrix.from_matrix(np.diag([1.0, 0.0]))


def sdp_min_violation(inst):
    """min over global states of the largest trace-norm marginal violation, by SDP."""
    cp = pytest.importorskip("cvxpy")
    d = 2 ** inst.n
    x = cp.Variable((d, d), hermitian=True)
    t = cp.Variable()
    cons = [x >> 0, cp.real(cp.trace(x)) == 1]
    for support, rho in inst.marginals:
        reduced = x
        dims = [2] * inst.n
        for q in reversed([q for q in range(inst.n) if q not in support]):
            reduced = cp.partial_trace(reduced, dims, q)
            dims.pop(q)
        cons.append(cp.normNuc(reduced - rho.matrix) <= t)
    prob = cp.Problem(cp.Minimize(t), cons)
    prob.solve(solver="CLARABEL")
    return float(prob.value)


def brute_marginal(rho, support, n):
    """Marginal by summing explicit index pairs."""
    keep = list(support)
    k = len(keep)
    out = np.zeros((2 ** k, 2 ** k), dtype=complex)
    for i in range(2 ** n):
        for j in range(2 ** n):
            bi = [(i >> (n - 1 - q)) & 1 for q in range(n)]
            bj = [(j >> (n - 1 - q)) & 1 for q in range(n)]
            if any(bi[q] != bj[q] for q in range(n) if q not in keep):
                continue
            a = sum(bi[q] << (k - 1 - p) for p, q in enumerate(keep))
            b = sum(bj[q] << (k - 1 - p) for p, q in enumerate(keep))
            out[a, b] += rho[i, j]
    return out


def test_reduce_all_vs_index_sum(rng):
    rho = random_density(4, rng)
    supports = [(0, 1), (1, 3), (2,), (0, 2, 3)]
    for s, marg in zip(supports, reduce_all(rho, supports)):
        assert np.max(np.abs(marg.matrix - brute_marginal(rho.matrix, s, 4))) <= 1e-12


def test_reduce_all_of_product_factors(rng):
    a, b = random_density(1, rng), random_density(1, rng)
    rho = DensityMatrix.from_matrix(np.kron(a.matrix, b.matrix))
    ra, rb = reduce_all(rho, [(0,), (1,)])
    assert np.allclose(ra.matrix, a.matrix) and np.allclose(rb.matrix, b.matrix)


def test_w_state_marginals_consistent():
    w = np.zeros(8)
    w[[1, 2, 4]] = 1 / np.sqrt(3)
    rho = PureState.from_vector(w).density()
    supports = [(0, 1), (1, 2), (0, 2)]
    inst = CLDMInstance(tuple(zip(supports, reduce_all(rho, supports))), 3, 0.1)
    assert overlap_conflict_bound(inst) <= 1e-12
    assert consistency_decide(inst, rng_seed=0).outcome == "consistent"


@pytest.mark.parametrize("seed", range(4))
def test_marginals_of_real_state_are_consistent(seed):
    rho = random_density(3, seed, rank=2)
    supports = [(0, 1), (1, 2), (0, 2)]
    inst = CLDMInstance(tuple(zip(supports, reduce_all(rho, supports))), 3, 0.1)
    verdict = consistency_decide(inst, rng_seed=seed)
    assert verdict.outcome == "consistent"
    assert np.max(inst.violations(verdict.witness.matrix)) <= 1e-8


def test_contradictory_single_qubit_marginals():
    rho = DensityMatrix.from_matrix(np.diag([1.0, 0.0]))
    sigma = DensityMatrix.from_matrix(np.diag([0.7, 0.3]))
    inst = CLDMInstance((((0,), rho), ((0,), sigma)), 1, 0.1)
    assert 0.5 * trace_norm(rho.matrix - sigma.matrix) == pytest.approx(0.3)
    verdict = consistency_decide(inst, rng_seed=0)
    assert verdict.outcome == "inconsistent"
    assert verdict.lower_bound == pytest.approx(0.3)


def test_bell_with_pure_single_qubits_inconsistent():
    # the Bell marginal forces the global two-qubit state, whose one-qubit marginals are maximally mixed
    inst = CLDMInstance((((0,), ZERO), ((1,), ZERO), ((0, 1), BELL)), 2, 0.1)
    forced = BELL.matrix
    assert trace_norm(partial_trace_matrix(forced, [0], 2) - ZERO.matrix) == pytest.approx(1.0)
    assert consistency_decide(inst, rng_seed=0).outcome == "inconsistent"
    assert sdp_min_violation(inst) >= 0.5 - 1e-6


@pytest.mark.slow
@settings(max_examples=6)
@given(seeds, st.sampled_from([0.0, 0.3, 0.6]))
def test_verdict_agrees_with_sdp(seed, mix):
    rng = np.random.default_rng(seed)
    rho = random_density(3, rng)
    supports = [(0, 1), (1, 2)]
    margs = reduce_all(rho, supports)
    other = random_density(2, rng)
    bent = DensityMatrix.from_matrix((1 - mix) * margs[1].matrix + mix * other.matrix)
    beta = 0.1
    inst = CLDMInstance(((supports[0], margs[0]), (supports[1], bent)), 3, beta)
    sdp = sdp_min_violation(inst)
    verdict = consistency_decide(inst, tol=beta / 2, rng_seed=rng)
    if verdict.outcome == "consistent":
        assert sdp <= beta / 2 + 1e-6
    elif verdict.outcome == "inconsistent":
        assert sdp >= beta / 2 - 1e-6
    if sdp <= 1e-6:
        assert verdict.outcome == "consistent"


def test_instance_validation():
    with pytest.raises(ValueError):
        CLDMInstance((((0, 0), BELL),), 2, 0.1)
    with pytest.raises(ValueError):
        CLDMInstance((((0, 2), BELL),), 2, 0.1)
    with pytest.raises(ValueError):
        CLDMInstance((((0, 1), BELL),), 2, 0.0)
    with pytest.raises(ValueError):
        CLDMInstance((((0, 1), BELL),), 2, 0.1, k=1)


def test_unsorted_supports_are_normalized(rng):
    rho = random_density(2, rng)
    swapped = rho.matrix.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)
    inst = CLDMInstance((((1, 0), DensityMatrix.from_matrix(swapped)),), 2, 0.1)
    assert inst.supports == [(0, 1)]
    assert np.allclose(inst.marginals[0][1].matrix, rho.matrix)


# ---------------------------------------------------------------------------
# protocol


def _ground_product():
    return PureState.basis(0, 4)


def test_honest_proof_on_yes_instance():
    inst = yes_instance()
    verdict = slh_verifier(inst, honest_prover(inst, _ground_product()), default_oracle(rng_seed=0))
    assert verdict.accept and verdict.energy <= inst.a


def test_honest_prover_maximally_mixed():
    inst = no_instance()
    proof = honest_prover(inst, DensityMatrix.maximally_mixed(4))
    for ra, rb in proof.parts:
        for mat in (ra, rb):
            assert np.allclose(mat, np.eye(mat.shape[0]) / mat.shape[0])


def test_proof_size_counts_entries():
    inst = yes_instance()
    proof = honest_prover(inst, _ground_product())
    sides = [(len([q for q in t.support if q in (0, 1)]), len([q for q in t.support if q in (2, 3)]))
             for t in inst.terms]
    assert proof.size() == sum(4 ** a + 4 ** b for a, b in sides)


def test_honest_prover_rejects_entangled_state():
    inst = no_instance()
    singlet = np.zeros(16)
    singlet[[0b0010, 0b1000]] = [1, -1]
    with pytest.raises(ValueError):
        honest_prover(inst, PureState.from_vector(singlet))


def test_inconsistent_side_is_rejected_regardless_of_energy():
    inst = yes_instance()
    proof = honest_prover(inst, _ground_product())
    parts = list(proof.parts)
    # term 3 now claims qubit 0 is |1> while term 0 still claims |0>
    parts[3] = (np.diag([0.0, 1.0]), parts[3][1])
    bad = SLHProof(tuple(parts))
    verdict = slh_verifier(inst, bad, default_oracle(rng_seed=0))
    assert not verdict.accept
    assert verdict.side_a.outcome == "inconsistent"


def test_no_instance_consistent_cheat_has_high_energy(rng):
    inst = no_instance()
    for _ in range(5):
        state = product_density(random_density(2, rng), random_density(2, rng), inst)
        verdict = slh_verifier(inst, honest_prover(inst, state), default_oracle(rng_seed=rng))
        assert verdict.energy >= (inst.a + inst.b) / 2
        assert not verdict.accept


def test_threshold_is_midpoint():
    inst = yes_instance()
    verdict = slh_verifier(inst, honest_prover(inst, _ground_product()), default_oracle(rng_seed=0))
    assert verdict.threshold == pytest.approx((inst.a + inst.b) / 2)
    assert protocol_beta(inst) == pytest.approx((inst.b - inst.a) / (8 * inst.m))


def test_soundness_floor_arithmetic():
    inst = no_instance()
    beta = protocol_beta(inst)
    # with every term off by at most beta/2 in trace norm, E stays above (a+b)/2
    floor = soundness_floor(inst, inst.b, 4 * beta)
    assert floor == pytest.approx((inst.a + inst.b) / 2)


@given(seeds)
def test_term_perturbation_bounded_by_trace_distance(seed):
    rng = np.random.default_rng(seed)
    h = random_effect(4, rng)
    rho, sigma = random_density(2, rng).matrix, random_density(2, rng).matrix
    diff = abs(np.trace(h @ (rho - sigma)).real)
    assert diff <= 0.5 * trace_norm(rho - sigma) + 1e-12


@given(seeds)
def test_tensor_perturbation_chain(seed):
    rng = np.random.default_rng(seed)
    ra, rb, sa, sb = (random_density(1, rng).matrix for _ in range(4))
    lhs, rhs = tensor_perturbation(ra, rb, sa, sb)
    assert lhs <= rhs + 1e-12


@given(seeds)
def test_energy_decomposition_over_terms(seed):
    rng = np.random.default_rng(seed)
    inst = no_instance()
    state = product_density(random_density(2, rng), random_density(2, rng), inst)
    proof = honest_prover(inst, state)
    direct = np.trace(inst.hamiltonian() @ state.matrix).real
    assert proof_energy(inst, proof) == pytest.approx(direct, abs=1e-10)


def test_proof_shape_mismatch():
    inst = yes_instance()
    with pytest.raises(ValueError):
        slh_verifier(inst, SLHProof(((np.eye(2) / 2, np.ones((1, 1))),)))
