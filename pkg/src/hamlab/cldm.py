"""Consistency of local density matrices and the classical-proof verifier for
separable local Hamiltonians.

The consistency oracle works in two stages. A pairwise test compares
marginals on overlapping supports: for any global state, the overlap
restrictions of two prescribed marginals can differ by at most twice the
largest marginal violation, which gives a rigorous lower bound. Otherwise a
feasibility search runs alternating projections between unit-trace PSD
matrices and the affine set of matrices with the prescribed marginals,
restricted to the joint support that every consistent state must live in.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .optimize import SLHInstance
from .qstate import (DensityMatrix, PureState, QubitLayout, embed_operator, partial_trace_matrix, permute_operator,
                     trace_norm)

MAX_QUBITS = 6
RANK_TOL = 1e-9
PRODUCT_TOL = 1e-9


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _herm(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat + mat.conj().T)


@dataclass(frozen=True, eq=False)
class CLDMInstance:
    """Marginals ``(C_i, rho_i)`` on an n-qubit system; supports are sorted qubit tuples."""

    marginals: tuple[tuple[tuple[int, ...], DensityMatrix], ...]
    n: int
    beta: float
    k: int | None = None

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.n < 1:
            raise ValueError("need at least one qubit")
        clean = []
        for support, rho in self.marginals:
            support = tuple(int(q) for q in support)
            if not support or len(set(support)) != len(support):
                raise ValueError(f"support {support} must be a nonempty set of distinct qubits")
            if min(support) < 0 or max(support) >= self.n:
                raise ValueError(f"support {support} out of range for {self.n} qubits")
            if self.k is not None and len(support) > self.k:
                raise ValueError(f"support {support} larger than locality {self.k}")
            if not isinstance(rho, DensityMatrix):
                rho = DensityMatrix.from_matrix(rho)
            if rho.dim != 2 ** len(support):
                raise ValueError(f"marginal of dimension {rho.dim} does not fit support {support}")
            mat = permute_operator(rho.matrix, list(np.argsort(support)))
            clean.append((tuple(sorted(support)), DensityMatrix.from_matrix(mat, QubitLayout.flat(len(support)))))
        object.__setattr__(self, "marginals", tuple(clean))

    @property
    def supports(self) -> list[tuple[int, ...]]:
        return [s for s, _ in self.marginals]

    def violations(self, sigma: np.ndarray) -> np.ndarray:
        """||Tr_{rest} sigma - rho_i||_1 for every marginal."""
        return np.array([trace_norm(_herm(partial_trace_matrix(sigma, s, self.n) - rho.matrix))
                         for s, rho in self.marginals])


@dataclass
class Verdict:
    outcome: str  # consistent | inconsistent | indeterminate
    witness: DensityMatrix | None
    max_violation: float
    lower_bound: float = 0.0
    iterations: int = 0
    method: str = ""


def reduce_all(rho: DensityMatrix, supports: Sequence[Sequence[int]]) -> list[DensityMatrix]:
    n = rho.num_qubits
    out = []
    for s in supports:
        s = [int(q) for q in s]
        if not s or min(s) < 0 or max(s) >= n:
            raise ValueError(f"support {s} out of range for {n} qubits")
        mat = partial_trace_matrix(rho.matrix, s, n)
        out.append(DensityMatrix.from_matrix(mat, QubitLayout.flat(len(s))))
    return out


def overlap_conflict_bound(inst: CLDMInstance) -> float:
    """Lower bound on min_sigma max_i ||Tr sigma - rho_i||_1 from overlapping pairs.

    For supports C_i, C_j sharing qubits S, the triangle inequality and
    contractivity of the partial trace give
    ||rho_i|_S - rho_j|_S||_1 <= 2 max(violation_i, violation_j).
    """
    best = 0.0
    marg = inst.marginals
    for i in range(len(marg)):
        for j in range(i + 1, len(marg)):
            (si, ri), (sj, rj) = marg[i], marg[j]
            shared = sorted(set(si) & set(sj))
            if not shared:
                continue
            ki = [si.index(q) for q in shared]
            kj = [sj.index(q) for q in shared]
            a = partial_trace_matrix(ri.matrix, ki, len(si))
            b = partial_trace_matrix(rj.matrix, kj, len(sj))
            best = max(best, 0.5 * trace_norm(_herm(a - b)))
    return best


def _support_basis(inst: CLDMInstance) -> np.ndarray:
    """Isometry onto the intersection of the supports ran(rho_i) x (rest)."""
    d = 2 ** inst.n
    complement = np.zeros((d, d), dtype=complex)
    for s, rho in inst.marginals:
        evals, evecs = np.linalg.eigh(rho.matrix)
        keep = evecs[:, evals > RANK_TOL]
        proj = keep @ keep.conj().T
        complement += np.eye(d) - embed_operator(proj, s, inst.n)
    evals, evecs = np.linalg.eigh(_herm(complement))
    return evecs[:, evals <= 1e-8]


def _marginal_map(inst: CLDMInstance, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Matrix of S -> (Tr_rest V S V^dag)_i stacked, and the stacked targets."""
    n, r = inst.n, v.shape[1]
    rows, targets = [], []
    for s, rho in inst.marginals:
        rest = [q for q in range(n) if q not in s]
        order = list(s) + rest
        k = len(s)
        # qubits of each column reordered so the support comes first
        vt = v.reshape((2,) * n + (r,)).transpose(order + [n]).reshape(2 ** k, 2 ** (n - k), r)
        m = np.einsum("kxa,lxb->klab", vt, vt.conj())
        rows.append(m.reshape(4 ** k, r * r))
        targets.append(rho.matrix.reshape(-1))
    return np.vstack(rows), np.concatenate(targets)


def _psd_unit_trace(mat: np.ndarray) -> np.ndarray:
    """Frobenius projection onto {S >= 0, tr S = 1} (eigenvalues onto the simplex)."""
    evals, evecs = np.linalg.eigh(_herm(mat))
    mu = np.sort(evals)[::-1]
    cums = np.cumsum(mu) - 1.0
    idx = np.arange(1, mu.size + 1)
    rho = idx[mu - cums / idx > 0][-1]
    lam = np.maximum(evals - cums[rho - 1] / rho, 0.0)
    return (evecs * lam) @ evecs.conj().T


def _alternating_projection(inst: CLDMInstance, v: np.ndarray, amap: np.ndarray, pinv: np.ndarray,
                            target: np.ndarray, tol: float, max_iter: int, stall_window: int, rng):
    """One restart of the search for a state V S V^dag with every marginal violation <= tol.

    Returns (final S, its largest violation, iterations, stalled).
    """
    r = v.shape[1]
    g = rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r))
    s = _psd_unit_trace(g @ g.conj().T)
    # ||.||_1 <= sqrt(d) ||.||_F on each marginal, so a small Frobenius residual is worth checking
    scale = np.sqrt(max(rho.dim for _, rho in inst.marginals))
    history = []
    for it in range(1, max_iter + 1):
        flat = s.reshape(-1)
        flat = flat - pinv @ (amap @ flat - target)
        s = _psd_unit_trace(flat.reshape(r, r))
        frob = float(np.linalg.norm(amap @ s.reshape(-1) - target))
        history.append(frob)
        if scale * frob <= tol or it % stall_window == 0:
            res = float(inst.violations(v @ s @ v.conj().T).max())
            if res <= tol:
                return s, res, it, False
        if it > stall_window and history[-stall_window - 1] - frob < 1e-4 * frob:
            break
    res = float(inst.violations(v @ s @ v.conj().T).max())
    return s, res, it, it < max_iter


def _factored_polish(amap: np.ndarray, target: np.ndarray, s0: np.ndarray, max_iter: int,
                     rank: int | None = None) -> np.ndarray:
    """Least squares ||A(S) - b||^2 over S = X X^dag / tr(X X^dag), by L-BFGS from S0.

    X has ``rank`` columns (default: full), initialized from the leading
    eigenpairs of S0. Projection methods slow down badly when the feasible set
    has no interior (for instance a unique pure extension); the factored form
    does not.
    """
    r = s0.shape[0]
    k = r if rank is None else rank
    evals, evecs = np.linalg.eigh(_herm(s0))
    x0 = evecs[:, ::-1][:, :k] * np.sqrt(np.maximum(evals[::-1][:k], 1e-12))

    def unpack(z):
        return (z[: r * k] + 1j * z[r * k:]).reshape(r, k)

    def fun(z):
        x = unpack(z)
        c = np.vdot(x, x).real
        s = x @ x.conj().T / c
        res = amap @ s.reshape(-1) - target
        g = _herm((amap.conj().T @ res).reshape(r, r))
        gamma = np.trace(g @ s).real
        grad = (4.0 / c) * (g @ x - gamma * x)
        return float(np.vdot(res, res).real), np.concatenate([grad.real.ravel(), grad.imag.ravel()])

    z0 = np.concatenate([x0.real.ravel(), x0.imag.ravel()])
    out = minimize(fun, z0, jac=True, method="L-BFGS-B",
                   options={"maxiter": max_iter, "ftol": 1e-32, "gtol": 1e-16, "maxcor": 30})
    x = unpack(out.x)
    return x @ x.conj().T / np.vdot(x, x).real


def _polish(amap: np.ndarray, target: np.ndarray, s0: np.ndarray, max_iter: int) -> list[np.ndarray]:
    """Full-rank polish, then re-polish at the numerical rank it reveals."""
    s1 = _factored_polish(amap, target, s0, max_iter)
    evals = np.linalg.eigvalsh(s1)
    rank = max(1, int(np.sum(evals > 1e-6 * evals[-1])))
    out = [s1]
    if rank < s1.shape[0]:
        out.append(_factored_polish(amap, target, s1, max_iter, rank=rank))
    return out


def consistency_decide(inst: CLDMInstance, max_iter: int = 5000, tol: float = 1e-8, rng_seed=None,
                       restarts: int = 10, stall_window: int = 100) -> Verdict:
    """Decide whether the marginals extend to a global state.

    consistent: a witness with every violation <= tol was found.
    inconsistent: the overlap bound exceeds beta/2, or the search stalled
    above beta/2 on every restart (in both the reduced and the full space).
    indeterminate: anything else.
    """
    if inst.n > MAX_QUBITS:
        raise ValueError(f"{inst.n} qubits exceed the consistency oracle limit of {MAX_QUBITS}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    half = inst.beta / 2
    bound = overlap_conflict_bound(inst)
    if bound > half and bound > tol:
        return Verdict("inconsistent", None, bound, bound, 0, "overlap")
    rng = _rng(rng_seed)
    d = 2 ** inst.n
    best_sigma, best_res, iters, stalled = None, np.inf, 0, True
    for name, v in (("reduced", _support_basis(inst)), ("full", np.eye(d, dtype=complex))):
        if v.shape[1] == 0:
            continue
        amap, target = _marginal_map(inst, v)
        pinv = np.linalg.pinv(amap, rcond=1e-10)
        for _ in range(restarts):
            s, res, it, st = _alternating_projection(inst, v, amap, pinv, target, tol, max_iter, stall_window, rng)
            iters += it
            stalled = stalled and st
            candidates = [s] if res <= tol else [s] + _polish(amap, target, s, max_iter)
            for cand in candidates:
                sigma = v @ cand @ v.conj().T
                res = float(inst.violations(sigma).max())
                if res < best_res:
                    best_sigma, best_res = sigma, res
            if best_res <= tol:
                witness = DensityMatrix.from_matrix(best_sigma, QubitLayout.flat(inst.n))
                return Verdict("consistent", witness, best_res, bound, iters, name)
    witness = None if best_sigma is None else DensityMatrix.from_matrix(best_sigma, QubitLayout.flat(inst.n))
    if stalled and best_res > half:
        return Verdict("inconsistent", witness, best_res, bound, iters, "stall")
    return Verdict("indeterminate", witness, best_res, bound, iters, "search")


# ---------------------------------------------------------------------------
# verification protocol


def _sides(inst: SLHInstance) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    a = set(inst.bipartition.side_a)
    return [(tuple(sorted(q for q in t.support if q in a)), tuple(sorted(q for q in t.support if q not in a)))
            for t in inst.terms]


@dataclass(frozen=True, eq=False)
class SLHProof:
    """Per-term pairs (rho^{A_i}, rho^{B_i}); an empty side is the 1x1 matrix [[1]]."""

    parts: tuple[tuple[np.ndarray, np.ndarray], ...]

    def __post_init__(self):
        clean = []
        for i, (ra, rb) in enumerate(self.parts):
            pair = []
            for mat in (ra, rb):
                mat = np.atleast_2d(np.asarray(mat.matrix if isinstance(mat, DensityMatrix) else mat, dtype=complex))
                if mat.shape == (1, 1):
                    if abs(mat[0, 0] - 1) > 1e-10:
                        raise ValueError(f"term {i}: empty-side marginal must be [[1]]")
                else:
                    DensityMatrix.from_matrix(mat, symmetrize=False)  # validates
                pair.append(mat)
            clean.append(tuple(pair))
        object.__setattr__(self, "parts", tuple(clean))

    def size(self) -> int:
        """Number of complex entries."""
        return sum(ra.size + rb.size for ra, rb in self.parts)

    def check_shape(self, inst: SLHInstance):
        if len(self.parts) != inst.m:
            raise ValueError(f"proof has {len(self.parts)} parts for {inst.m} terms")
        for i, ((sa, sb), (ra, rb)) in enumerate(zip(_sides(inst), self.parts)):
            if ra.shape != (2 ** len(sa),) * 2 or rb.shape != (2 ** len(sb),) * 2:
                raise ValueError(f"term {i}: marginal shapes {ra.shape}, {rb.shape} do not fit {sa} | {sb}")


def product_density(rho_a: DensityMatrix, rho_b: DensityMatrix, inst: SLHInstance) -> DensityMatrix:
    """rho_A x rho_B placed in global qubit order."""
    cut = inst.bipartition
    order = list(cut.side_a) + list(cut.side_b)
    mat = permute_operator(np.kron(rho_a.matrix, rho_b.matrix), list(np.argsort(order)))
    return DensityMatrix.from_matrix(mat, QubitLayout.flat(inst.n))


def honest_prover(inst: SLHInstance, state: DensityMatrix | PureState) -> SLHProof:
    """Exact per-term reductions of a product state rho_A x rho_B."""
    n = inst.n
    if isinstance(state, PureState):
        state = state.density()
    if state.dim != 2 ** n:
        raise ValueError(f"state of dimension {state.dim} for a {n}-qubit instance")
    cut = inst.bipartition
    rho_a = partial_trace_matrix(state.matrix, cut.side_a, n)
    rho_b = partial_trace_matrix(state.matrix, cut.side_b, n)
    order = list(cut.side_a) + list(cut.side_b)
    prod = permute_operator(np.kron(rho_a, rho_b), list(np.argsort(order)))
    if np.max(np.abs(prod - state.matrix)) > PRODUCT_TOL:
        raise ValueError("state is not a product across the instance bipartition")
    parts = []
    for sa, sb in _sides(inst):
        ra = partial_trace_matrix(state.matrix, sa, n) if sa else np.ones((1, 1), dtype=complex)
        rb = partial_trace_matrix(state.matrix, sb, n) if sb else np.ones((1, 1), dtype=complex)
        parts.append((ra, rb))
    return SLHProof(tuple(parts))


def proof_energy(inst: SLHInstance, proof: SLHProof) -> float:
    """E = sum_i tr(H_i (rho^{A_i} x rho^{B_i}))."""
    total = 0.0
    for term, (sa, sb), (ra, rb) in zip(inst.terms, _sides(inst), proof.parts):
        joint = list(sa) + list(sb)
        local = np.kron(ra, rb)
        local = permute_operator(local, [joint.index(q) for q in term.support])
        total += float(np.trace(term.matrix @ local).real)
    return total


def side_instance(inst: SLHInstance, proof: SLHProof, side: str, beta: float) -> CLDMInstance | None:
    """Marginals claimed on one side, relabelled onto that side's qubits."""
    qubits = list(inst.bipartition.side_a if side == "A" else inst.bipartition.side_b)
    pick = 0 if side == "A" else 1
    marginals = []
    for sides, part in zip(_sides(inst), proof.parts):
        s = sides[pick]
        if s:
            marginals.append((tuple(qubits.index(q) for q in s), DensityMatrix.from_matrix(part[pick])))
    if not marginals:
        return None
    return CLDMInstance(tuple(marginals), len(qubits), beta)


def protocol_beta(inst: SLHInstance) -> float:
    """(b - a) / (8 m)."""
    return (inst.b - inst.a) / (8 * inst.m)


@dataclass
class SLHVerdict:
    accept: bool
    energy: float
    threshold: float
    beta: float
    side_a: Verdict | None
    side_b: Verdict | None
    notes: list[str] = field(default_factory=list)


Oracle = Callable[[CLDMInstance], Verdict]


def default_oracle(rng_seed=None, tol: float | None = None, **kwargs) -> Oracle:
    """consistency_decide with tol = beta/2 unless given."""
    def oracle(inst: CLDMInstance) -> Verdict:
        return consistency_decide(inst, tol=tol if tol is not None else inst.beta / 2, rng_seed=rng_seed, **kwargs)
    return oracle


def slh_verifier(inst: SLHInstance, proof: SLHProof, consistency: Oracle | None = None) -> SLHVerdict:
    """Accept iff both sides are consistent and E < (a + b)/2.

    A side without any marginal is trivially consistent. With m = 0 terms the
    energy is 0 and the test reduces to 0 < (a + b)/2.
    """
    proof.check_shape(inst)
    threshold = 0.5 * (inst.a + inst.b)
    energy_value = proof_energy(inst, proof)
    if inst.m == 0:
        return SLHVerdict(energy_value < threshold, energy_value, threshold, np.inf, None, None, ["no terms"])
    beta = protocol_beta(inst)
    consistency = consistency or default_oracle()
    verdicts = {}
    for side in ("A", "B"):
        cl = side_instance(inst, proof, side, beta)
        verdicts[side] = None if cl is None else consistency(cl)
    ok = all(v is None or v.outcome == "consistent" for v in verdicts.values())
    notes = [f"side {s}: {v.outcome}" for s, v in verdicts.items() if v is not None]
    return SLHVerdict(bool(ok and energy_value < threshold), energy_value, threshold, beta,
                      verdicts["A"], verdicts["B"], notes)


def soundness_floor(inst: SLHInstance, product_min: float, violation: float) -> float:
    """Lower bound on E for a proof whose sides lie within ``violation`` (trace norm)
    of genuine marginals: each term moves by at most ``violation``."""
    return product_min - inst.m * violation


def tensor_perturbation(rho_a, rho_b, sigma_a, sigma_b) -> tuple[float, float]:
    """(||rho_a x rho_b - sigma_a x sigma_b||_1, ||rho_a - sigma_a||_1 + ||rho_b - sigma_b||_1)."""
    lhs = trace_norm(_herm(np.kron(rho_a, rho_b) - np.kron(sigma_a, sigma_b)))
    return lhs, trace_norm(_herm(rho_a - sigma_a)) + trace_norm(_herm(rho_b - sigma_b))
