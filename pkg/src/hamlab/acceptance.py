"""End-to-end acceptance criteria.

Each criterion is a function ``(rng) -> (passed, details)``; ``run`` wraps
them with timing and filtering. Trial counts are module constants so the
suite can be scaled down for quick checks without touching the logic.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .circuit import (acceptance_probability, controlled_register_swap, hm_wrap, product_test_circuit,
                      random_circuit)
from .cldm import (CLDMInstance, SLHProof, consistency_decide, honest_prover, product_density, reduce_all,
                   slh_verifier)
from .kitaev import ClockEncoding, compile_circuit, history_isometry, history_vector, propagation_term
from .optimize import (SLHInstance, Term, brute_force_product_min, ground_energy, min_product_energy)
from .qstate import (Bipartition, DensityMatrix, PureState, max_product_overlap, partial_trace,
                     partial_trace_matrix, permute_operator, random_density, random_effect, random_hermitian,
                     random_unitary)
from .sparse_sim import (PhaseEstimateConfig, QjVerifier, circular_distance, phase_estimate, phase_spectrum,
                         row_counts)
from .spectral import (projector_expectation_gap, extract_left_state, history_overlap, kernel_gap, kitaev_pair,
                       rejection_operator, verify_clock_angle, verify_geometric_bound)

SLACK = 1e-9
STEP_TRIALS = 10_000
SHOTS = 10_000


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    seconds: float
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        head = f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.name} ({self.seconds:.1f}s)"
        return " ".join([head] + [f"{k}={_short(v)}" for k, v in _flatten(self.details)])


def _flatten(details: dict, prefix: str = ""):
    for key, value in details.items():
        if isinstance(value, dict):
            yield from _flatten(value, f"{prefix}{key}.")
        else:
            yield prefix + key, value


def _short(value) -> str:
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.4g}"
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(_short(v) for v in value) + "]"
    return str(value)


def _witness_dim(c) -> int:
    return 2 ** (c.proof1 + c.proof2)


def _random_vec(dim: int, rng) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def _random_small_circuit(rng, max_work: int = 6, max_T: int = 8):
    while True:
        m = int(rng.integers(1, 3))
        p1 = int(rng.integers(1, 3))
        p2 = int(rng.integers(0, 3))
        if m + p1 + p2 <= max_work:
            break
    T = int(rng.integers(1, max_T + 1))
    return random_circuit(m, p1, p2, T, seed=rng, accept_qubit=int(rng.integers(0, m + p1)))


# ---------------------------------------------------------------------------
# 1-4: compilation


def history_kernel(rng):
    worst = 0.0
    for _ in range(50):
        c = _random_small_circuit(rng)
        ham = compile_circuit(c)
        eta = history_vector(c, _random_vec(_witness_dim(c), rng))
        worst = max(worst, float(np.linalg.norm((ham.h_in + ham.h_prop) @ eta)))
    return worst <= 1e-9, {"circuits": 50, "max_residual": worst}


def energy_identity(rng):
    worst = 0.0
    for _ in range(50):
        c = _random_small_circuit(rng)
        ham = compile_circuit(c)
        w = _random_vec(_witness_dim(c), rng)
        eta = history_vector(c, w)
        e = float(np.vdot(eta, ham.total @ eta).real)
        p = acceptance_probability(c, w)
        worst = max(worst, abs(e - (1 - p) / (c.T + 1)))
    return worst <= 1e-9, {"instances": 50, "max_deviation": worst}


def sparsity(rng):
    worst_prop, raw_counts = 0, set()
    for size in (1, 2, 3):
        gate = controlled_register_swap(0, list(range(1, 1 + size)), list(range(1 + size, 1 + 2 * size)))
        n = 1 + 2 * size
        raw_counts |= set(row_counts(gate.sparse(n)).tolist())
        circuit = product_test_circuit((size,))
        ham = compile_circuit(circuit)
        for t, g in enumerate(circuit.gates, start=1):
            if g.kind == "cswap":
                worst_prop = max(worst_prop, int(row_counts(ham.terms[t - 1]).max()))
        for T in (1, 2, 3):
            h_t = propagation_term(1, gate, ClockEncoding(T), n)
            worst_prop = max(worst_prop, int(row_counts(h_t).max()))
    ok = worst_prop <= 2 and raw_counts == {1}
    return ok, {"max_prop_row_nnz": worst_prop, "raw_cswap_row_nnz": sorted(raw_counts)}


def _hm_circuit(rng, registers=(1,)):
    p = sum(registers)
    inner = random_circuit(1, p, 0, 2, seed=rng, accept_qubit=0)
    return hm_wrap(inner, registers)


def _register_product(registers, rng) -> np.ndarray:
    out = np.ones(1, dtype=complex)
    for size in registers:
        out = np.kron(out, _random_vec(2 ** size, rng))
    return out


def separability(rng):
    worst_product, best_entangled = 1.0, 0.0
    for registers in ((1,), (2,), (1, 1)):
        for _ in range(4):
            c = _hm_circuit(rng, registers)
            ham = compile_circuit(c)
            cut = ham.workspace_cut()
            chi = _register_product(registers, rng)
            eta = PureState.from_vector(history_vector(c, np.kron(chi, chi)), normalize=False)
            worst_product = min(worst_product, max_product_overlap(eta, cut)[0])
            other = _random_vec(2 ** c.proof1, rng)
            eta2 = PureState.from_vector(history_vector(c, np.kron(chi, other)), normalize=False)
            best_entangled = max(best_entangled, max_product_overlap(eta2, cut)[0])
    ok = abs(worst_product - 1) <= 1e-9 and best_entangled < 1 - 1e-3
    return ok, {"min_overlap_identical": worst_product, "max_overlap_distinct": best_entangled}


# ---------------------------------------------------------------------------
# 5-7: spectral


def clock_angle(rng):
    rows = []
    ok = True
    for T in range(1, 7):
        for m in range(1, 4):
            rep = verify_clock_angle(random_circuit(m, 1, 1, T, seed=rng))
            ok = ok and rep.holds and not rep.vacuous and rep.cos_sq_theta <= rep.bound + SLACK
            rows.append([T, m, rep.cos_sq_theta, rep.bound])
    return ok, {"cases": len(rows), "max_excess": max(r[2] - r[3] for r in rows)}


def _psd_pair(rng):
    d = int(rng.integers(4, 11))
    shared = int(rng.integers(0, 3))
    q, _ = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    rest = q[:, shared:]
    out = []
    for _ in range(2):
        # range inside the complement of the shared kernel, leaving extra kernel
        rank = int(rng.integers(1, rest.shape[1]))
        u, _ = np.linalg.qr(rng.normal(size=(rest.shape[1], rank)) + 1j * rng.normal(size=(rest.shape[1], rank)))
        basis = rest @ u
        out.append((basis * rng.uniform(0.1, 2.0, size=rank)) @ basis.conj().T)
    return out


def gap_angle_bound(rng):
    worst = np.inf
    count = 0
    for _ in range(100):
        a1, a2 = _psd_pair(rng)
        rep = verify_geometric_bound(a1, a2)
        worst = min(worst, rep.delta_sum - rep.bound)
        count += 1
    for T in range(1, 6):
        for m in (1, 2):
            a1, a2 = kitaev_pair(compile_circuit(random_circuit(m, 1, 1, T, seed=rng)))
            rep = verify_geometric_bound(a1, a2)
            worst = min(worst, rep.delta_sum - rep.bound)
            count += 1
    return worst >= -SLACK, {"pairs": count, "min_margin": worst}


class _Pool:
    """A compiled circuit with the dense operators the step checks need."""

    def __init__(self, circuit):
        self.circuit = circuit
        ham = compile_circuit(circuit)
        self.iso = history_isometry(circuit)
        self.kernel_op = (ham.h_in + ham.h_prop).toarray()
        self.h = ham.total.toarray()
        self.gap = kernel_gap(ham)
        self.cut = ham.workspace_cut()
        self.T = circuit.T


def _step_pools(rng, count=6):
    pools = [_Pool(random_circuit(1, 1, 1, int(rng.integers(2, 5)), seed=rng)) for _ in range(count // 2)]
    pools += [_Pool(_hm_circuit(rng)) for _ in range(count - count // 2)]
    return pools


def check_history_overlap(rng, pools, trials):
    bad = 0
    worst = 0.0
    per = -(-trials // len(pools))
    for pool in pools:
        dim = pool.iso.shape[0]
        w = rng.normal(size=(pool.iso.shape[1], per)) + 1j * rng.normal(size=(pool.iso.shape[1], per))
        eta = pool.iso @ (w / np.linalg.norm(w, axis=0))
        g = rng.normal(size=(dim, per)) + 1j * rng.normal(size=(dim, per))
        g -= pool.iso @ (pool.iso.conj().T @ g)
        perp = g / np.linalg.norm(g, axis=0)
        p = rng.uniform(0, 1, size=per)
        omega = np.sqrt(1 - p) * eta + np.sqrt(p) * perp
        coeffs = pool.iso.conj().T @ omega
        overlap = np.sum(np.abs(coeffs) ** 2, axis=0)
        e_kernel = np.real(np.sum(omega.conj() * (pool.kernel_op @ omega), axis=0))
        e_full = np.real(np.sum(omega.conj() * (pool.h @ omega), axis=0))
        dev = np.abs(overlap - (1 - p))
        worst = max(worst, float(dev.max()))
        bad += int(np.sum((dev > SLACK) | (p * pool.gap > e_kernel + SLACK) | (p * pool.gap > e_full + SLACK)))
    return bad, worst


def check_left_state(rng, pools, trials):
    bad, worst = 0, np.inf
    per = -(-trials // len(pools))
    for pool in pools:
        c = pool.circuit
        d1, d2 = 2 ** c.proof1, 2 ** c.proof2
        for _ in range(per):
            chi = np.kron(_random_vec(d1, rng), _random_vec(d2, rng))
            psi = chi + rng.uniform(0, 0.3) * _random_vec(d1 * d2, rng)
            psi /= np.linalg.norm(psi)
            eta = pool.iso @ psi
            _, left, right = max_product_overlap(PureState.from_vector(eta), pool.cut)
            scale = rng.uniform(0, 0.2)
            psi1 = left.amplitudes + scale * _random_vec(left.dim, rng)
            psi2 = right.amplitudes + scale * _random_vec(right.dim, rng)
            psi1 /= np.linalg.norm(psi1)
            psi2 /= np.linalg.norm(psi2)
            eps = 1 - abs(np.vdot(eta, np.kron(psi1, psi2))) ** 2
            _, left_state = extract_left_state(c, psi1)
            value = abs(np.vdot(psi, np.kron(left_state, psi2))) ** 2
            margin = value - (1 - eps * (c.T + 1))
            worst = min(worst, margin)
            bad += int(margin < -SLACK)
    return bad, worst


def _max_product_acceptance(c, rng) -> tuple[float, np.ndarray, np.ndarray]:
    reject = rejection_operator(c)
    cut = Bipartition((0,), (1,), 2)
    res = min_product_energy(reject, cut, restarts=20, rng_seed=rng)
    grid = brute_force_product_min(reject, cut)
    return 1 - min(res.value, grid), res.left_state.amplitudes, res.right_state.amplitudes


def check_product_soundness(rng, pools, trials):
    bad, worst = 0, np.inf
    per = -(-trials // len(pools))
    for pool in pools:
        c = pool.circuit
        if c.proof1 != 1 or c.proof2 != 1:
            continue
        s, left, right = _max_product_acceptance(c, rng)
        base = np.kron(left, right)
        w = np.empty((4, per), dtype=complex)
        for k in range(per):
            anchor = base if k % 2 == 0 else np.kron(_random_vec(2, rng), _random_vec(2, rng))
            v = anchor + rng.uniform(0, 0.5) * _random_vec(4, rng)
            w[:, k] = v / np.linalg.norm(v)
        sv = np.linalg.svd(w.T.reshape(per, 2, 2), compute_uv=False)
        eps = 1 - sv[:, 0] ** 2
        hist = pool.iso @ w
        energies = np.real(np.sum(hist.conj() * (pool.h @ hist), axis=0))
        margin = energies - (1 - s - 2 * np.sqrt(np.maximum(eps, 0))) / (c.T + 1)
        worst = min(worst, float(margin.min()))
        bad += int(np.sum(margin < -SLACK))
    return bad, worst


def check_projector_pair(rng, trials):
    bad, worst = 0, np.inf
    for _ in range(trials):
        d = int(rng.integers(2, 9))
        rank = int(rng.integers(1, d + 1))
        u = random_unitary(d, rng)[:, :rank]
        proj = u @ u.conj().T
        v1 = _random_vec(d, rng)
        v2 = v1 + rng.uniform(0, 1) * _random_vec(d, rng)
        v2 /= np.linalg.norm(v2)
        delta = max(0.0, 1 - abs(np.vdot(v1, v2)) ** 2)
        margin = np.sqrt(delta) - projector_expectation_gap(proj, v1, v2)
        worst = min(worst, margin)
        bad += int(margin < -SLACK)
    return bad, worst


def soundness_steps(rng, trials: int | None = None):
    trials = STEP_TRIALS if trials is None else trials
    pools = _step_pools(rng)
    out = {}
    out["history_overlap"] = check_history_overlap(rng, pools, trials)
    out["left_state"] = check_left_state(rng, pools, trials)
    sound_pools = [p for p in pools if p.circuit.proof1 == 1 and p.circuit.proof2 == 1]
    out["product_soundness"] = check_product_soundness(rng, sound_pools, trials)
    out["projector_pair"] = check_projector_pair(rng, trials)
    ok = all(bad == 0 for bad, _ in out.values())
    return ok, {k: {"counterexamples": b, "worst": w} for k, (b, w) in out.items()} | {"trials_each": trials}


# ---------------------------------------------------------------------------
# 8-9: phase estimation


def phase_estimation(rng, shots: int | None = None):
    shots = SHOTS if shots is None else shots
    cfg = PhaseEstimateConfig(0.1, 0.1)
    worst = np.inf
    for _ in range(5):
        u = random_unitary(8, rng)
        state = _random_vec(8, rng)
        spectrum = phase_spectrum(u, state)
        samples = phase_estimate(u, state, cfg, rng, shots=shots)
        for phase, weight in zip(spectrum.phases, spectrum.weights):
            target = weight * (1 - cfg.epsilon)
            sigma = np.sqrt(target * (1 - target) / shots)
            hit = float(np.mean(circular_distance(samples, phase) <= cfg.delta))
            worst = min(worst, hit - (target - 3 * sigma))
    return worst >= 0, {"unitaries": 5, "shots": shots, "t": cfg.t, "min_margin": worst}


def qj_contract(rng, trials: int | None = None):
    trials = SHOTS if trials is None else trials
    worst = np.inf
    for gap in (0.3, 0.6):
        for _ in range(3):
            h = random_effect(8, rng)
            state = _random_vec(8, rng)
            q = QjVerifier(h, 0.2, 0.2 + gap)
            accepts = q.sample(state, rng, trials=trials)
            reject = 1 - float(np.mean(accepts))
            value = float(np.vdot(state, h @ state).real)
            sigma = np.sqrt(max(reject * (1 - reject), 1e-12) / trials)
            worst = min(worst, gap / 3 + 3 * sigma - abs(reject - value))
    return worst >= 0, {"trials": trials, "min_margin": worst}


# ---------------------------------------------------------------------------
# 10-12: optimization and protocol


SWAP = np.eye(4)[[0, 2, 1, 3]].astype(complex)


def product_optimization(rng):
    cut = Bipartition((0, 1), (2, 3), 4)
    worst = 0.0
    for _ in range(20):
        h = random_hermitian(16, rng)
        alt = min_product_energy(h, cut, restarts=50, rng_seed=rng).value
        grid = brute_force_product_min(h, cut)
        worst = max(worst, abs(alt - grid))
    pair = Bipartition((0,), (1,), 2)
    prod = min_product_energy(SWAP, pair, rng_seed=rng).value
    glob = ground_energy(SWAP)[0]
    ok = worst <= 1e-3 and abs(prod) <= 1e-9 and prod - glob >= 0.99
    return ok, {"max_gap_vs_grid": worst, "swap_product_min": prod, "swap_global_min": glob}


def _perturb_on_overlap(inst: CLDMInstance, rng):
    """Replace one marginal by a mixture that moves its overlap restriction by >= 0.1."""
    marg = list(inst.marginals)
    pairs = [(i, j) for i in range(len(marg)) for j in range(len(marg))
             if i != j and set(marg[i][0]) & set(marg[j][0])]
    i, j = pairs[int(rng.integers(len(pairs)))]
    support, rho = marg[i]
    q = sorted(set(support) & set(marg[j][0]))[0]
    pos = support.index(q)
    single = partial_trace_matrix(rho.matrix, [pos], len(support))
    _, evecs = np.linalg.eigh(single)
    v = evecs[:, 0]  # least likely direction on the shared qubit
    target = np.outer(v, v.conj())
    rest = np.eye(2 ** (len(support) - 1)) / 2 ** (len(support) - 1)
    order = [pos] + [k for k in range(len(support)) if k != pos]
    tau = permute_operator(np.kron(target, rest), list(np.argsort(order)))
    lam = 0.35
    new = (1 - lam) * rho.matrix + lam * tau
    marg[i] = (support, DensityMatrix.from_matrix(new))
    moved = 0.5 * np.abs(np.linalg.eigvalsh(partial_trace_matrix(new - rho.matrix, [pos], len(support)))).sum()
    return CLDMInstance(tuple(marg), inst.n, inst.beta, inst.k), moved


def cldm_oracle(rng):
    consistent_ok = inconsistent_ok = 0
    min_moved = np.inf
    for trial in range(20):
        n = int(rng.integers(2, 5))
        sigma = random_density(n, rng, rank=int(rng.integers(1, 2 ** n + 1)))
        pairs = [(i, (i + 1) % n) for i in range(n)] if n > 2 else [(0, 1)]
        supports = sorted({tuple(sorted(p)) for p in pairs}) + [(int(rng.integers(n)),)]
        inst = CLDMInstance(tuple(zip(supports, reduce_all(sigma, supports))), n, 0.1, k=2)
        consistent_ok += consistency_decide(inst, rng_seed=rng).outcome == "consistent"
        bad, moved = _perturb_on_overlap(inst, rng)
        min_moved = min(min_moved, moved)
        inconsistent_ok += consistency_decide(bad, rng_seed=rng).outcome == "inconsistent"
    ok = consistent_ok == 20 and inconsistent_ok == 20 and min_moved >= 0.1
    return ok, {"consistent_detected": consistent_ok, "inconsistent_detected": inconsistent_ok,
                "min_perturbation": min_moved}


PROJ_SYM = (np.eye(4) + SWAP) / 2
ONE = np.diag([0.0, 1.0]).astype(complex)
ZERO = np.diag([1.0, 0.0]).astype(complex)


def yes_instance() -> SLHInstance:
    cut = Bipartition((0, 1), (2, 3), 4)
    terms = (Term((0,), ONE), Term((2,), ONE), Term((1, 3), np.diag([0, 0, 0, 1.0])), Term((0, 3), np.diag([0, 1.0, 0, 0])))
    return SLHInstance(terms, 4, cut, 0.1, 0.9)


def no_instance() -> SLHInstance:
    """Symmetric projectors across the cut plus a split single-qubit identity.

    Product states pay at least 1/2 on each symmetric projector and exactly 1
    on the last two terms, so the product minimum is 2; entangled singlets
    bring the global minimum down to 1.
    """
    cut = Bipartition((0, 1), (2, 3), 4)
    terms = (Term((0, 2), PROJ_SYM), Term((1, 3), PROJ_SYM), Term((0,), ONE), Term((0,), ZERO))
    return SLHInstance(terms, 4, cut, 1.0, 1.9)


def cheating_proof(inst: SLHInstance, rng) -> SLHProof:
    kind = int(rng.integers(4))
    n = inst.n
    if kind == 0:  # honest reductions of a random product state
        ra = random_density(2, rng, rank=int(rng.integers(1, 5)))
        rb = random_density(2, rng, rank=int(rng.integers(1, 5)))
        return honest_prover(inst, product_density(ra, rb, inst))
    if kind == 1:  # products of marginals of an entangled low-energy state
        lam, psi = ground_energy(inst.hamiltonian() + 0.05 * random_hermitian(2 ** n, rng))
        rho = psi.density()
        state = product_density(partial_trace(rho, inst.bipartition.side_a),
                                partial_trace(rho, inst.bipartition.side_b), inst)
        return honest_prover(inst, state)
    parts = []
    a_side = set(inst.bipartition.side_a)
    for i, term in enumerate(inst.terms):
        sa = [q for q in term.support if q in a_side]
        sb = [q for q in term.support if q not in a_side]
        if kind == 2:  # independent random marginals per term
            ra = random_density(len(sa), rng).matrix if sa else np.ones((1, 1))
            rb = random_density(len(sb), rng).matrix if sb else np.ones((1, 1))
        else:  # per-term minimizers, conflicting on shared qubits
            evals, evecs = np.linalg.eigh(term.matrix)
            v = evecs[:, 0]
            local = np.outer(v, v.conj()) * (1 - 0.3 * rng.uniform()) + 0.3 * rng.uniform() * np.eye(v.size) / v.size
            local /= np.trace(local).real
            k = len(term.support)
            pos_a = [term.support.index(q) for q in sorted(sa)]
            pos_b = [term.support.index(q) for q in sorted(sb)]
            ra = partial_trace_matrix(local, pos_a, k) if sa else np.ones((1, 1))
            rb = partial_trace_matrix(local, pos_b, k) if sb else np.ones((1, 1))
        parts.append((ra, rb))
    return SLHProof(tuple(parts))


def slh_protocol(rng, proofs: int = 100):
    yes = yes_instance()
    ground = np.zeros(16)
    ground[0] = 1.0
    honest = honest_prover(yes, DensityMatrix.from_matrix(np.diag(ground)))
    yes_verdict = slh_verifier(yes, honest)

    no = no_instance()
    certified = brute_force_product_min(no.hamiltonian(), no.bipartition)
    accepted = 0
    consistent_floor = np.inf
    n_consistent = 0
    for _ in range(proofs):
        verdict = slh_verifier(no, cheating_proof(no, rng))
        accepted += verdict.accept
        sides = [v for v in (verdict.side_a, verdict.side_b) if v is not None]
        if all(v.outcome == "consistent" for v in sides):
            n_consistent += 1
            consistent_floor = min(consistent_floor, verdict.energy - verdict.threshold)
    ok = (yes_verdict.accept and yes_verdict.energy <= yes.a and certified >= no.b - SLACK
          and accepted == 0 and consistent_floor >= -1e-6)
    return ok, {"yes_accept": yes_verdict.accept, "yes_energy": yes_verdict.energy,
                "no_certified_product_min": certified, "no_accepted": accepted,
                "consistent_proofs": n_consistent, "min_consistent_margin": consistent_floor}


# ---------------------------------------------------------------------------


CRITERIA: list[tuple[int, str, tuple[str, ...], Callable]] = [
    (1, "history-kernel", ("kitaev",), history_kernel),
    (2, "energy-identity", ("kitaev",), energy_identity),
    (3, "sparsity", ("kitaev", "sparse"), sparsity),
    (4, "separability", ("kitaev",), separability),
    (5, "clock-angle", ("gap", "spectral"), clock_angle),
    (6, "gap-angle-bound", ("gap", "spectral"), gap_angle_bound),
    (7, "soundness-steps", ("spectral", "soundness"), soundness_steps),
    (8, "phase-estimation", ("sparse",), phase_estimation),
    (9, "qj-contract", ("sparse",), qj_contract),
    (10, "product-optimization", ("optimize",), product_optimization),
    (11, "cldm-oracle", ("cldm",), cldm_oracle),
    (12, "slh-protocol", ("cldm", "optimize"), slh_protocol),
]


def select(filter_name: str | None = None):
    if not filter_name:
        return list(CRITERIA)
    key = filter_name.lower()
    chosen = [c for c in CRITERIA if key == str(c[0]) or key in c[1] or key in c[2]]
    if not chosen:
        raise KeyError(f"no criterion matches {filter_name!r}")
    return chosen


def run(filter_name: str | None = None, seed: int = 0, on_result: Callable | None = None) -> list[CriterionResult]:
    results = []
    for number, name, _, fn in select(filter_name):
        rng = np.random.default_rng([seed, number])
        start = time.perf_counter()
        try:
            passed, details = fn(rng)
        except Exception as exc:  # a crash is a failed criterion, reported not raised
            passed, details = False, {"error": f"{type(exc).__name__}: {exc}"}
        res = CriterionResult(number, name, bool(passed), time.perf_counter() - start, details)
        results.append(res)
        if on_result:
            on_result(res)
    return results
